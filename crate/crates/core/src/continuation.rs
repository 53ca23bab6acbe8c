//! Bifurcation curves `(eps, beta)`: the explicit Heaviside branches, the
//! composite diagram built from them, and pseudo-arclength tracing over
//! shooting residuals for general continuous `f`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::heaviside::{
    annulus_profile, annulus_solve, annulus_solve_at_eta, annulus_validity, asymptotic_limits, ball_crossover_eps0, ball_eps_of_beta,
    ball_fold, ball_profile, ball_roots, ball_validity, beta_zero, check_theta, AnnulusBranchPoint, BallBranchPoint,
};
use crate::nonlinearity::{eps1_bound, IgnitionFunction};
use crate::numerics::newton::{self, fd_jacobian, Difference, NewtonOptions};
use crate::numerics::roots::{geomspace, golden_max, linspace};
use crate::profile::fmt17;
use crate::shooting::{
    full_profile, heaviside_seed, logistic_seed, shoot_to_one, solve_shooting, validity_checks, Branch, ShootingConfig, ShootingState,
};

/// Largest allowed `|Δ ln beta|` between consecutive curve points.
pub const MAX_LOG_BETA_STEP: f64 = 0.2;

/// Residual threshold for accepting a point onto a curve.
pub const POINT_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ball,
    Annulus,
    General,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ball => "ball",
            Mode::Annulus => "annulus",
            Mode::General => "general",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchPoint {
    pub mode: Mode,
    pub eps: f64,
    pub beta: f64,
    /// Inner radius of the reaction region; 0 when it is the whole ball.
    pub eta: f64,
    /// Passed the mode's shape check and the pointwise bounds.
    pub valid: bool,
    pub res_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fold {
    pub eps_star: f64,
    pub beta_star: f64,
    /// Curve index of the largest sampled `eps`.
    pub index: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BifurcationCurve {
    pub points: Vec<BranchPoint>,
    pub fold: Option<Fold>,
    /// Why tracing stopped early, if it did.
    pub stall: Option<String>,
}

pub const CURVE_CSV_HEADER: [&str; 7] = ["mode", "eps", "sqrt_eps", "beta", "eta", "valid", "res_norm"];

impl BifurcationCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `|Δ ln beta|` between neighbours.
    pub fn max_log_beta_step(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].beta.ln() - w[0].beta.ln()).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CURVE_CSV_HEADER).map_err(csv_err)?;
        for p in &self.points {
            out.write_record([
                p.mode.as_str().to_string(),
                fmt17(p.eps),
                fmt17(p.eps.sqrt()),
                fmt17(p.beta),
                fmt17(p.eta),
                p.valid.to_string(),
                fmt17(p.res_norm),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn beta_bound_ok(theta: f64, eps: f64, beta: f64) -> bool {
    beta * eps.sqrt() <= 1.0 / theta + 1e-12
}

/// Profile grid used to validate explicit branch points.
fn check_grid() -> Vec<f64> {
    let mut g = linspace(0.0, 1.0, 201);
    g.extend(linspace(1.0, 4.0, 61).into_iter().skip(1));
    g
}

fn ball_point(p: &BallBranchPoint) -> BranchPoint {
    let res_norm = p.residual().abs();
    let valid = ball_profile(p.eps, p.beta, p.theta, &check_grid())
        .map(|prof| ball_validity(&prof, p.theta).valid && validity_checks(&prof, p.theta, p.eps, p.beta).all_pass())
        .unwrap_or(false);
    BranchPoint {
        mode: Mode::Ball,
        eps: p.eps,
        beta: p.beta,
        eta: 0.0,
        valid: valid && res_norm < POINT_RESIDUAL_TOL && beta_bound_ok(p.theta, p.eps, p.beta),
        res_norm,
    }
}

fn annulus_point(p: &AnnulusBranchPoint) -> BranchPoint {
    let valid = p.admissible()
        && annulus_profile(p, &check_grid())
            .map(|prof| annulus_validity(&prof, p.theta, p.eta).valid && validity_checks(&prof, p.theta, p.eps, p.beta).all_pass())
            .unwrap_or(false);
    BranchPoint {
        mode: Mode::Annulus,
        eps: p.eps,
        beta: p.beta,
        eta: p.eta,
        valid: valid && p.res_norm < POINT_RESIDUAL_TOL,
        res_norm: p.res_norm,
    }
}

fn check_eps_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(domain("eps_grid", "values must lie in (0, 1)"));
    }
    if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("eps_grid", "must be strictly ascending"));
    }
    Ok(())
}

/// Both ball-mode roots at every grid value, ordered as one path: lower
/// branch with `eps` rising, then the upper branch with `eps` falling.
/// Gaps wider than [`MAX_LOG_BETA_STEP`] are filled through `eps(beta)`,
/// which also carries the path around the fold.
pub fn trace_ball(theta: f64, eps_grid: &[f64]) -> Result<BifurcationCurve> {
    check_theta(theta)?;
    check_eps_grid(eps_grid)?;
    let roots: Vec<Option<(BallBranchPoint, BallBranchPoint)>> =
        eps_grid.par_iter().map(|&e| ball_roots(e, theta).ok().flatten()).collect();
    let lower: Vec<BallBranchPoint> = roots.iter().flatten().map(|r| r.0).collect();
    let upper: Vec<BallBranchPoint> = roots.iter().flatten().rev().map(|r| r.1).collect();
    let path: Vec<BallBranchPoint> = lower.into_iter().chain(upper).collect();
    let filled = fill_ball_gaps(theta, &path)?;
    let points: Vec<BranchPoint> = filled.par_iter().map(ball_point).collect();
    Ok(BifurcationCurve {
        points,
        fold: None,
        stall: None,
    })
}

fn fill_ball_gaps(theta: f64, path: &[BallBranchPoint]) -> Result<Vec<BallBranchPoint>> {
    let mut out: Vec<BallBranchPoint> = Vec::with_capacity(path.len());
    for p in path {
        if let Some(prev) = out.last().copied() {
            let jump = (p.beta.ln() - prev.beta.ln()).abs();
            if jump > MAX_LOG_BETA_STEP {
                let k = (jump / (0.5 * MAX_LOG_BETA_STEP)).ceil() as usize;
                for b in geomspace(prev.beta, p.beta, k + 1).into_iter().skip(1).take(k - 1) {
                    if let Some(e) = ball_eps_of_beta(theta, b)? {
                        out.push(BallBranchPoint::new(e, b, theta));
                    }
                }
            }
        }
        out.push(*p);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct AnnulusTraceOptions {
    /// Initial step in `ln eps`.
    pub step: f64,
    pub max_step: f64,
    pub max_halvings: usize,
    /// Below this `eta` the march continues in `eta` instead of `eps`.
    pub eta_switch: f64,
    /// Smallest `eta` visited on the way to the ball crossover.
    pub eta_min: f64,
}

impl Default for AnnulusTraceOptions {
    fn default() -> Self {
        Self {
            step: 0.05,
            max_step: 0.3,
            max_halvings: 20,
            eta_switch: 0.1,
            eta_min: 0.01,
        }
    }
}

/// Natural continuation of the annulus branch upward from `eps_start`,
/// seeded by the large-`beta` limits. Near the crossover the reaction
/// annulus fills the ball, `eta ~ sqrt(eps0 - eps)`, and the march
/// continues in `eta`. A failed step ends the curve with a stall note.
pub fn trace_annulus(theta: f64, eps_start: f64, eps_end: f64, opts: &AnnulusTraceOptions) -> Result<BifurcationCurve> {
    check_theta(theta)?;
    let eps0 = ball_crossover_eps0(theta)?;
    if !(eps_start > 0.0 && eps_start < eps0) {
        return Err(domain(
            "eps_start",
            format!("{eps_start} is not in (0, {eps0}), the annulus regime"),
        ));
    }
    if !(eps_end > eps_start) {
        return Err(domain("eps_end", format!("{eps_end} must exceed eps_start")));
    }
    let limits = asymptotic_limits(theta)?;
    let mut curve = BifurcationCurve::default();
    let first = match annulus_solve(eps_start, theta, limits.annulus_seed(eps_start), None) {
        Ok(p) => p,
        Err(e) => {
            curve.stall = Some(format!("no annulus solution from the asymptotic seed at eps = {eps_start}: {e}"));
            return Ok(curve);
        }
    };
    let mut pts = vec![first];
    let target = eps_end.min(eps0).ln();
    let mut h = opts.step;

    // march in ln eps while the core is sizeable
    while pts.last().unwrap().eta >= opts.eta_switch {
        let last = *pts.last().unwrap();
        let x = last.eps.ln();
        if x >= target - 1e-14 {
            break;
        }
        let mut halvings = 0;
        let next = loop {
            let xn = (x + h).min(target);
            let guess = match pts.len() {
                1 => (last.beta, last.eta),
                n => {
                    let prev = pts[n - 2];
                    let s = (xn - x) / (x - prev.eps.ln());
                    (
                        (last.beta.ln() + s * (last.beta.ln() - prev.beta.ln())).exp(),
                        (last.eta + s * (last.eta - prev.eta)).clamp(1e-3, 1.0 - 1e-9),
                    )
                }
            };
            let attempt = annulus_solve(xn.exp(), theta, guess, None)
                .ok()
                .filter(|p| p.admissible() && (p.beta.ln() - last.beta.ln()).abs() <= MAX_LOG_BETA_STEP);
            match attempt {
                Some(p) => break Some(p),
                None if halvings < opts.max_halvings => {
                    halvings += 1;
                    h *= 0.5;
                }
                None => break None,
            }
        };
        match next {
            Some(p) => {
                pts.push(p);
                h = (h * 1.5).min(opts.max_step);
            }
            None => {
                curve.stall = Some(format!(
                    "annulus step from eps = {:e} failed after {} halvings",
                    last.eps, opts.max_halvings
                ));
                break;
            }
        }
    }

    // march in eta toward the crossover
    if curve.stall.is_none() && pts.last().unwrap().eps.ln() < target - 1e-14 {
        let mut d_eta = 0.1 * pts.last().unwrap().eta;
        loop {
            let last = *pts.last().unwrap();
            if last.eta <= opts.eta_min * (1.0 + 1e-12) {
                break;
            }
            let mut halvings = 0;
            let next = loop {
                let eta = (last.eta - d_eta).max(opts.eta_min);
                let attempt = annulus_solve_at_eta(eta, theta, (last.eps, last.beta), None)
                    .ok()
                    .filter(|p| p.admissible() && (p.beta.ln() - last.beta.ln()).abs() <= MAX_LOG_BETA_STEP);
                match attempt {
                    Some(p) => break Some(p),
                    None if halvings < opts.max_halvings => {
                        halvings += 1;
                        d_eta *= 0.5;
                    }
                    None => break None,
                }
            };
            match next {
                Some(p) if p.eps.ln() > target => {
                    // overshot eps_end: land on it exactly
                    let s = (target - last.eps.ln()) / (p.eps.ln() - last.eps.ln());
                    let guess = (last.beta + s * (p.beta - last.beta), last.eta + s * (p.eta - last.eta));
                    match annulus_solve(eps_end, theta, guess, None) {
                        Ok(q) => pts.push(q),
                        Err(e) => curve.stall = Some(format!("could not land on eps_end = {eps_end}: {e}")),
                    }
                    break;
                }
                Some(p) => {
                    pts.push(p);
                    d_eta = (d_eta * 1.5).min(0.5 * p.eta);
                }
                None => {
                    curve.stall = Some(format!(
                        "annulus step from eta = {:e} failed after {} halvings",
                        last.eta, opts.max_halvings
                    ));
                    break;
                }
            }
        }
    }
    curve.points = pts.par_iter().map(annulus_point).collect();
    Ok(curve)
}

/// The two sides of the ball/annulus junction at `eps0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossover {
    pub eps0: f64,
    /// Upper ball root at `eps0`, where `u(0) = theta`.
    pub beta_ball: f64,
    /// Annulus branch extrapolated to `eta = 0`.
    pub beta_annulus: f64,
    pub eps_annulus: f64,
    pub gap: f64,
    /// One-sided `d beta / d eps` on each side.
    pub tangent_ball: f64,
    pub tangent_annulus: f64,
}

/// Annulus etas used for the `eta -> 0` extrapolation.
pub const CROSSOVER_ETAS: [f64; 4] = [0.08, 0.04, 0.02, 0.01];

/// Matches the annulus branch to the ball branch at the crossover. The
/// annulus side is sampled at [`CROSSOVER_ETAS`] and fitted with
/// `c0 + c2 eta² + c3 eta³ + c4 eta⁴` (the branch is even in `eta` to
/// leading order).
pub fn crossover(theta: f64) -> Result<Crossover> {
    let eps0 = ball_crossover_eps0(theta)?;
    let (_, upper) = ball_roots(eps0, theta)?.ok_or_else(|| Error::NotFound(format!("no ball roots at eps0 = {eps0}")))?;
    let beta_ball = upper.beta;
    let h = 1e-5 * beta_ball;
    let de = |b: f64| -> Result<f64> { ball_eps_of_beta(theta, b)?.ok_or_else(|| Error::NotFound(format!("eps(beta) undefined at {b}"))) };
    let tangent_ball = 2.0 * h / (de(beta_ball + h)? - de(beta_ball - h)?);

    let mut guess = (eps0, beta_ball);
    let mut samples = Vec::new();
    for &eta in &CROSSOVER_ETAS {
        let p = annulus_solve_at_eta(eta, theta, guess, None)?;
        guess = (p.eps, p.beta);
        samples.push(p);
    }
    let powers = [0, 2, 3, 4];
    let m = DMatrix::from_fn(4, 4, |i, j| samples[i].eta.powi(powers[j]));
    let lu = m.lu();
    let fit = |ys: Vec<f64>| -> Result<DVector<f64>> {
        lu.solve(&DVector::from_vec(ys))
            .ok_or_else(|| Error::LinearSolve("crossover fit matrix is singular".into()))
    };
    let cb = fit(samples.iter().map(|p| p.beta).collect())?;
    let ce = fit(samples.iter().map(|p| p.eps).collect())?;
    Ok(Crossover {
        eps0,
        beta_ball,
        beta_annulus: cb[0],
        eps_annulus: ce[0],
        gap: (cb[0] - beta_ball).abs(),
        tangent_ball,
        tangent_annulus: cb[1] / ce[1],
    })
}

/// Locates the largest `eps` along a curve by a quadratic fit of `eps`
/// against `ln beta` over the five nearest points.
pub fn detect_fold(curve: &BifurcationCurve) -> Result<Fold> {
    let pts = &curve.points;
    let index = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.eps.total_cmp(&b.1.eps))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::NoFold("empty curve".into()))?;
    if index == 0 || index + 1 == pts.len() {
        return Err(Error::NoFold(format!("eps is largest at the curve end (index {index})")));
    }
    let lo = index.saturating_sub(2);
    let hi = (index + 2).min(pts.len() - 1);
    let xs: Vec<f64> = pts[lo..=hi].iter().map(|p| p.beta.ln()).collect();
    let ys: Vec<f64> = pts[lo..=hi].iter().map(|p| p.eps).collect();
    let x0 = pts[index].beta.ln();
    let a = DMatrix::from_fn(xs.len(), 3, |i, j| (xs[i] - x0).powi(j as i32));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&DVector::from_vec(ys), 1e-14)
        .map_err(|e| Error::LinearSolve(e.to_string()))?;
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x - x0), b.max(x - x0)));
    let peak = if c2 < 0.0 { -c1 / (2.0 * c2) } else { f64::NAN };
    let (eps_star, beta_star) = if peak >= xmin && peak <= xmax {
        (c0 + c1 * peak + c2 * peak * peak, (x0 + peak).exp())
    } else {
        (pts[index].eps, pts[index].beta)
    };
    Ok(Fold {
        eps_star,
        beta_star,
        index,
    })
}

/// Golden-section refinement of a located fold given `eps` as a function
/// of `ln beta`, searched between the neighbours of the fold index.
pub fn refine_fold<F>(curve: &BifurcationCurve, fold: Fold, mut eps_of_log_beta: F, tol: f64) -> Fold
where
    F: FnMut(f64) -> f64,
{
    let pts = &curve.points;
    let a = pts[fold.index.saturating_sub(1)].beta.ln();
    let b = pts[(fold.index + 1).min(pts.len() - 1)].beta.ln();
    let (x, e) = golden_max(&mut eps_of_log_beta, a.min(b), a.max(b), tol);
    Fold {
        eps_star: e,
        beta_star: x.exp(),
        index: fold.index,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositeSummary {
    pub theta: f64,
    pub eps_star: f64,
    pub beta_star: f64,
    pub eps0_crossover: f64,
    pub a0: f64,
    pub x0: f64,
    pub beta0: f64,
    pub crossover: Option<Crossover>,
    pub annulus_stall: Option<String>,
}

#[derive(Clone, Debug)]
pub struct HeavisideComposite {
    pub curve: BifurcationCurve,
    pub summary: CompositeSummary,
}

/// Default lower end of the `eps` range: `1e-4`, or far enough below the
/// fold when the fold itself is tiny.
pub fn default_eps_min(theta: f64) -> Result<f64> {
    let (eps_star, _) = ball_fold(theta)?;
    Ok(1e-4f64.min(1e-3 * eps_star))
}

/// Figure-style diagram for the Heaviside nonlinearity: annulus branch
/// from `eps_min` up to the crossover, then the valid ball branches
/// through the fold back down to `eps_min`.
pub fn heaviside_composite(theta: f64, eps_min: f64, samples: usize) -> Result<HeavisideComposite> {
    check_theta(theta)?;
    if samples < 5 {
        return Err(domain("samples", format!("{samples} is too few (need >= 5)")));
    }
    let (eps_star, _) = ball_fold(theta)?;
    if !(eps_min > 0.0 && eps_min < eps_star) {
        return Err(domain("eps_min", format!("{eps_min} is not in (0, eps* = {eps_star})")));
    }
    let limits = asymptotic_limits(theta)?;
    let eps0 = ball_crossover_eps0(theta)?;
    let grid = geomspace(eps_min, eps_star * (1.0 - 1e-9), samples);
    let ball = trace_ball(theta, &grid)?;

    let mut annulus_stall = None;
    let mut points = Vec::new();
    let mut cross = None;
    if eps_min < eps0 {
        let ann = trace_annulus(theta, eps_min, 1.0, &AnnulusTraceOptions::default())?;
        annulus_stall = ann.stall.clone();
        points.extend(ann.points);
        match crossover(theta) {
            Ok(c) => cross = Some(c),
            Err(e) => {
                annulus_stall.get_or_insert_with(|| format!("crossover extrapolation failed: {e}"));
            }
        }
    }
    // the junction itself: u(0) = theta exactly
    if let Some((_, up)) = ball_roots(eps0, theta)? {
        if eps0 >= eps_min {
            let mut p = ball_point(&up);
            p.valid = p.res_norm < POINT_RESIDUAL_TOL;
            points.push(p);
        }
    }
    // ball path reversed: upper branch with eps rising, fold, lower branch
    points.extend(ball.points.iter().rev().filter(|p| p.valid).copied());

    let mut curve = BifurcationCurve {
        points,
        fold: None,
        stall: annulus_stall.clone(),
    };
    let fold = detect_fold(&curve)?;
    let fold = refine_fold(
        &curve,
        fold,
        |x| ball_eps_of_beta(theta, x.exp()).ok().flatten().unwrap_or(f64::NEG_INFINITY),
        1e-8,
    );
    curve.fold = Some(fold);
    Ok(HeavisideComposite {
        summary: CompositeSummary {
            theta,
            eps_star: fold.eps_star,
            beta_star: fold.beta_star,
            eps0_crossover: eps0,
            a0: limits.a0,
            x0: limits.x0,
            beta0: beta_zero(theta)?,
            crossover: cross,
            annulus_stall,
        },
        curve,
    })
}

#[derive(Clone, Debug)]
pub struct ArclengthOptions {
    /// Initial, largest and smallest arclength steps.
    pub ds: f64,
    pub ds_max: f64,
    pub ds_min: f64,
    pub max_points: usize,
    pub shooting: ShootingConfig,
    pub corrector: NewtonOptions,
}

impl Default for ArclengthOptions {
    fn default() -> Self {
        Self {
            ds: 0.02,
            ds_max: 0.05,
            ds_min: 1e-6,
            max_points: 400,
            shooting: ShootingConfig::default(),
            corrector: NewtonOptions {
                tol: 1e-10,
                max_iter: 12,
                polish: 1,
                ..Default::default()
            },
        }
    }
}

/// Unknowns `(eps, u0, ln v0, ln beta)`.
fn state_of(x: &[f64], theta: f64) -> Result<ShootingState> {
    if !(x[0] >= 0.0 && (0.0..=1.0).contains(&x[1]) && x[2] <= 0.0 && x[3].is_finite()) {
        return Err(domain("state", "left the admissible region"));
    }
    Ok(ShootingState {
        u0: x[1],
        v0: x[2].exp(),
        beta: x[3].exp(),
        eps: x[0],
        theta,
    })
}

fn matching(f: &IgnitionFunction, x: &[f64], cfg: &ShootingConfig) -> Result<Vec<f64>> {
    let s = state_of(x, f.theta())?;
    let y = shoot_to_one(f, &s, cfg)?;
    Ok(vec![
        y[0] - s.theta,
        y[1] + s.theta * (1.0 + s.beta * s.eps.sqrt()),
        y[2] + y[3] - 1.0,
    ])
}

/// Tangent of the solution curve: null vector of the 3x4 Jacobian,
/// normalised in the weighted norm and oriented along `reference`.
fn tangent(jac: &DMatrix<f64>, reference: &[f64; 4], w: &[f64; 4]) -> Result<[f64; 4]> {
    let mut a = DMatrix::zeros(4, 4);
    a.view_mut((0, 0), (3, 4)).copy_from(&jac.rows(0, 3));
    for j in 0..4 {
        a[(3, j)] = w[j] * reference[j];
    }
    let mut rhs = DVector::zeros(4);
    rhs[3] = 1.0;
    let t = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::LinearSolve("singular tangent system".into()))?;
    let norm = (0..4).map(|j| w[j] * t[j] * t[j]).sum::<f64>().sqrt();
    Ok([t[0] / norm, t[1] / norm, t[2] / norm, t[3] / norm])
}

fn general_point(f: &IgnitionFunction, x: &[f64], res_norm: f64, cfg: &ShootingConfig) -> BranchPoint {
    let theta = f.theta();
    let (eps, beta) = (x[0], x[3].exp());
    let (valid, eta) = match state_of(x, theta).and_then(|s| full_profile(f, &s, cfg)) {
        Ok(p) => {
            let one = p.index_of_one().unwrap_or(p.len() - 1);
            let eta = p.r[..=one]
                .iter()
                .zip(&p.u)
                .find(|(_, &u)| u >= theta)
                .map(|(&r, _)| r)
                .unwrap_or(1.0);
            (validity_checks(&p, theta, eps, beta).all_pass(), eta)
        }
        Err(_) => (false, f64::NAN),
    };
    BranchPoint {
        mode: Mode::General,
        eps,
        beta,
        eta,
        valid: valid && res_norm < POINT_RESIDUAL_TOL && beta_bound_ok(theta, eps, beta),
        res_norm,
    }
}

/// Pseudo-arclength continuation over the shooting residuals in
/// `(eps, u0, ln v0, ln beta)` with weights `(Δeps/eps_scale)² + (Δ ln beta)²`,
/// `eps_scale` being the `eps1` bound of `f`. Starts on the lower branch
/// at `eps_range.0` (heaviside seed for smoothed Heaviside, logistic seed
/// otherwise), heads toward larger `eps`, passes the fold, and stops
/// when `eps` leaves the range.
pub fn trace_general(f: &IgnitionFunction, eps_range: (f64, f64), opts: &ArclengthOptions) -> Result<BifurcationCurve> {
    let theta = f.theta();
    if !f.is_continuous() {
        return Err(domain(
            "nonlinearity",
            "continuation needs a continuous f; wrap it as smoothed(f, n)",
        ));
    }
    let (eps_lo, eps_hi) = eps_range;
    if !(eps_lo >= 0.0 && eps_hi > eps_lo) {
        return Err(domain("eps_range", format!("({eps_lo}, {eps_hi}) is not an interval in [0, inf)")));
    }
    let eps_scale = eps1_bound(f).map(|b| b.eps1).unwrap_or(eps_hi);
    let w = [1.0 / (eps_scale * eps_scale), 0.0, 0.0, 1.0];
    let cfg = &opts.shooting;

    let mut seed = match f.smoothed_heaviside_n() {
        Some(_) => heaviside_seed(eps_lo.max(1e-12), theta, Branch::Lower)?
            .ok_or_else(|| Error::NotFound(format!("no heaviside seed at eps = {eps_lo}")))?,
        None => logistic_seed(theta)?,
    };
    seed.eps = eps_lo;
    let start = solve_shooting(f, eps_lo, theta, &seed, cfg)?;
    if !start.report.converged {
        return Err(Error::NoConvergence {
            iterations: start.report.iterations,
            residual: start.report.residual_norm,
            last_iterate: vec![start.state.u0, start.state.v0, start.state.beta],
            history: start.report.residual_history,
        });
    }
    let s0 = start.state;
    let mut x = [s0.eps, s0.u0, s0.v0.ln(), s0.beta.ln()];
    let mut res = |y: &[f64]| matching(f, y, cfg);
    let fx = res(&x)?;
    let jac = fd_jacobian(&mut res, &x, &fx, Difference::Forward, 1e-7)?;
    let mut t = tangent(&jac, &[1.0, 0.0, 0.0, 0.0], &w)?;
    let mut curve = BifurcationCurve::default();
    curve.points.push(general_point(f, &x, newton::max_norm(&fx), cfg));
    let mut ds = opts.ds;

    while curve.points.len() < opts.max_points {
        let pred: Vec<f64> = (0..4).map(|j| x[j] + ds * t[j]).collect();
        let t_now = t;
        let corrected = newton::solve(
            |y| {
                let mut r = matching(f, y, cfg)?;
                r.push((0..4).map(|j| w[j] * t_now[j] * (y[j] - pred[j])).sum());
                Ok(r)
            },
            &pred,
            &opts.corrector,
        );
        let accepted = match corrected {
            Ok(out) if out.converged && (out.x[3] - x[3]).abs() <= MAX_LOG_BETA_STEP => Some(out),
            _ => None,
        };
        let Some(out) = accepted else {
            ds *= 0.5;
            if ds < opts.ds_min {
                curve.stall = Some(format!("corrector failed near eps = {:e}, beta = {:e}", x[0], x[3].exp()));
                break;
            }
            continue;
        };
        let xn = [out.x[0], out.x[1], out.x[2], out.x[3]];
        let fxn = res(&xn)?;
        let jac = fd_jacobian(&mut res, &xn, &fxn, Difference::Forward, 1e-7)?;
        t = tangent(&jac, &t, &w)?;
        x = xn;
        let leaving = x[0] < eps_lo || x[0] > eps_hi;
        curve.points.push(general_point(f, &x, newton::max_norm(&fxn), cfg));
        if leaving {
            break;
        }
        ds = if out.iterations <= 4 { (ds * 1.5).min(opts.ds_max) } else { ds };
    }
    if curve.points.len() >= opts.max_points && curve.stall.is_none() {
        curve.stall = Some(format!("stopped at the {}-point limit", opts.max_points));
    }
    curve.fold = detect_fold(&curve).ok();
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> BifurcationCurve {
        BifurcationCurve {
            points: linspace(-1.0, 1.0, 21)
                .into_iter()
                .map(|s| BranchPoint {
                    mode: Mode::General,
                    eps: f(s),
                    beta: s.exp(),
                    eta: 0.0,
                    valid: true,
                    res_norm: 0.0,
                })
                .collect(),
            fold: None,
            stall: None,
        }
    }

    #[test]
    fn parabola_fold_is_exact() {
        let c = synthetic(|s| 1.0 - s * s);
        let fold = detect_fold(&c).unwrap();
        assert_eq!(fold.index, 10);
        assert!((fold.eps_star - 1.0).abs() < 1e-12);
        assert!((fold.beta_star - 1.0).abs() < 1e-12);
        // off-grid vertex
        let c = synthetic(|s| 2.0 - (s - 0.03) * (s - 0.03));
        let fold = detect_fold(&c).unwrap();
        assert!((fold.eps_star - 2.0).abs() < 1e-12);
        assert!((fold.beta_star.ln() - 0.03).abs() < 1e-10);
    }

    #[test]
    fn monotone_curve_has_no_fold() {
        assert!(matches!(detect_fold(&synthetic(|s| s + 2.0)), Err(Error::NoFold(_))));
        assert!(matches!(detect_fold(&BifurcationCurve::default()), Err(Error::NoFold(_))));
    }

    #[test]
    fn curve_csv_has_fixed_header() {
        let mut buf = Vec::new();
        synthetic(|s| 1.0 - s * s).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mode,eps,sqrt_eps,beta,eta,valid,res_norm\n"));
        assert_eq!(text.lines().count(), 22);
    }

    #[test]
    fn ball_trace_rejects_bad_grids() {
        assert!(trace_ball(0.5, &[0.01, 0.005]).is_err());
        assert!(trace_ball(0.5, &[0.0, 0.01]).is_err());
        assert!(trace_ball(1.5, &[0.01]).is_err());
        assert!(trace_ball(0.5, &[0.5, 0.9]).unwrap().is_empty());
    }
}
