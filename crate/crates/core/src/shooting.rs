//! Radial shooting for general continuous nonlinearities.
//!
//! The unknowns are the centre values `(u0, v0)` and the scale `beta`;
//! the ODE system is integrated from the origin to `r = 1`, where the
//! solution must match the explicit exterior solution.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::heaviside::{ball_roots, beta_zero, exterior_profile, BallBranchPoint};
use crate::nonlinearity::IgnitionFunction;
use crate::numerics::newton::{self, fd_jacobian, Difference, NewtonOptions};
use crate::numerics::ode::{integrate, integrate_with_crossings, Crossing, IntegratorConfig};
use crate::numerics::quad::gauss4;
use crate::numerics::roots::{bisect, linspace};
use crate::profile::{hermite, radial_grid, PieceTag, RadialProfile};
use crate::report::{CheckSet, SolveReport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingState {
    pub u0: f64,
    pub v0: f64,
    pub beta: f64,
    pub eps: f64,
    pub theta: f64,
}

impl ShootingState {
    /// `u0 in (theta, 1]` and `v0 in [0, 1]`.
    pub fn is_physical(&self) -> bool {
        self.u0 > self.theta && self.u0 <= 1.0 && (0.0..=1.0).contains(&self.v0)
    }
}

#[derive(Clone, Debug)]
pub struct ShootingConfig {
    pub integrator: IntegratorConfig,
    /// Radius where the series start hands over to the integrator.
    pub r_start: f64,
    pub newton: NewtonOptions,
    /// Output intervals on `[0, 1]`.
    pub inner_intervals: usize,
    /// Exterior extent of emitted profiles.
    pub r_max: f64,
    pub outer_intervals: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig {
                rtol: 1e-12,
                atol: 1e-14,
                ..Default::default()
            },
            r_start: 1e-6,
            newton: NewtonOptions {
                tol: 1e-11,
                max_iter: 60,
                polish: 2,
                ..Default::default()
            },
            // dense enough for the Hermite flux quadrature across sharp kinks
            inner_intervals: 20_000,
            r_max: 4.0,
            outer_intervals: 300,
        }
    }
}

/// Right-hand side for `y = (u, u', v, v')`.
fn radial_rhs<'a>(f: &'a IgnitionFunction, eps: f64, beta: f64) -> impl FnMut(f64, &[f64; 4]) -> [f64; 4] + 'a {
    let b2 = beta * beta;
    move |r, y| {
        let react = b2 * y[2] * f.value(y[0]);
        [y[1], eps * b2 * y[0] - react - 2.0 * y[1] / r, y[3], react - 2.0 * y[3] / r]
    }
}

/// Levels of `u` where the reaction term has a kink.
fn kink_crossings(f: &IgnitionFunction) -> Vec<Crossing> {
    f.kinks().into_iter().map(|level| Crossing { component: 0, level }).collect()
}

/// Two-term Taylor start at `r`: the 3-D radial Laplacian of `c r²` is `6c`.
fn series_start(f: &IgnitionFunction, s: &ShootingState, r: f64) -> [f64; 4] {
    let b2 = s.beta * s.beta;
    let fu = f.value(s.u0);
    let cu = (s.eps * b2 * s.u0 - b2 * s.v0 * fu) / 6.0;
    let cv = b2 * s.v0 * fu / 6.0;
    [s.u0 + cu * r * r, 2.0 * cu * r, s.v0 + cv * r * r, 2.0 * cv * r]
}

/// Integrates the radial system from the centre; output nodes are
/// uniform on `[0, 1]` (`cfg.inner_intervals`) and on `[1, r_end]`.
pub fn integrate_radial(f: &IgnitionFunction, state: &ShootingState, r_end: f64, cfg: &ShootingConfig) -> Result<RadialProfile> {
    if !(r_end >= 1.0) {
        return Err(domain("r_end", format!("{r_end} must be >= 1")));
    }
    let outer = if r_end > 1.0 { cfg.outer_intervals.max(1) } else { 0 };
    let grid = radial_grid(cfg.inner_intervals, r_end, outer);
    integrate_on(f, state, &grid, cfg)
}

fn integrate_on(f: &IgnitionFunction, state: &ShootingState, grid: &[f64], cfg: &ShootingConfig) -> Result<RadialProfile> {
    let y0 = series_start(f, state, cfg.r_start);
    let mut rhs = radial_rhs(f, state.eps, state.beta);
    let (head, tail): (Vec<f64>, Vec<f64>) = grid.iter().partition(|&&r| r <= cfg.r_start);
    let states = integrate_with_crossings(&mut rhs, cfg.r_start, y0, &tail, &kink_crossings(f), &cfg.integrator)?;
    let mut cols: [Vec<f64>; 4] = Default::default();
    for &r in &head {
        let y = series_start(f, state, r);
        for k in 0..4 {
            cols[k].push(y[k]);
        }
    }
    for y in &states {
        for k in 0..4 {
            cols[k].push(y[k]);
        }
    }
    let [u, du, v, dv] = cols;
    let n = grid.len();
    RadialProfile::new(grid.to_vec(), u, v, du, dv, vec![PieceTag::Integrated; n])
}

/// `(u, u', v, v')` at `r = 1`.
pub fn shoot_to_one(f: &IgnitionFunction, state: &ShootingState, cfg: &ShootingConfig) -> Result<[f64; 4]> {
    let y0 = series_start(f, state, cfg.r_start);
    let mut rhs = radial_rhs(f, state.eps, state.beta);
    Ok(integrate_with_crossings(&mut rhs, cfg.r_start, y0, &[1.0], &kink_crossings(f), &cfg.integrator)?[0])
}

fn residual_at_one(y: &[f64; 4], theta: f64, eps: f64, beta: f64) -> [f64; 3] {
    [y[0] - theta, y[1] + theta * (1.0 + beta * eps.sqrt()), y[3] - (1.0 - y[2])]
}

/// `[u(1) - theta, u'(1) + theta(1 + beta sqrt(eps)), v'(1) - (1 - v(1))]`.
pub fn boundary_residual(profile: &RadialProfile, theta: f64, eps: f64, beta: f64) -> Result<[f64; 3]> {
    let i = profile.index_of_one()?;
    let y = [profile.u[i], profile.du[i], profile.v[i], profile.dv[i]];
    Ok(residual_at_one(&y, theta, eps, beta))
}

// v0 decays like 1/cosh(beta) along the upper branch, hence its log
fn newton_unknowns(s: &ShootingState) -> [f64; 3] {
    [s.u0, s.v0.ln(), s.beta.ln()]
}

fn state_from(x: &[f64], eps: f64, theta: f64) -> ShootingState {
    ShootingState {
        u0: x[0],
        v0: x[1].exp(),
        beta: x[2].exp(),
        eps,
        theta,
    }
}

fn shooting_residual(f: &IgnitionFunction, s: &ShootingState, cfg: &ShootingConfig) -> Result<Vec<f64>> {
    let y = shoot_to_one(f, s, cfg)?;
    Ok(residual_at_one(&y, s.theta, s.eps, s.beta).to_vec())
}

/// Finite-difference Jacobian of the matching residual in `(u0, ln v0, ln beta)`.
pub fn shooting_jacobian(
    f: &IgnitionFunction,
    state: &ShootingState,
    cfg: &ShootingConfig,
    difference: Difference,
) -> Result<nalgebra::DMatrix<f64>> {
    let (eps, theta) = (state.eps, state.theta);
    let mut res = |x: &[f64]| shooting_residual(f, &state_from(x, eps, theta), cfg);
    let x = newton_unknowns(state);
    let fx = res(&x)?;
    let step = match difference {
        Difference::Forward => cfg.newton.fd_step,
        Difference::Central => 1e-5,
    };
    fd_jacobian(&mut res, &x, &fx, difference, step)
}

/// Converged (or last) state with its full profile and diagnostics.
#[derive(Clone, Debug)]
pub struct ShootingSolution {
    pub state: ShootingState,
    pub profile: RadialProfile,
    pub report: SolveReport,
}

/// Newton on the matching conditions. Non-convergence is reported through
/// `report.converged`, not as an error.
pub fn solve_shooting(f: &IgnitionFunction, eps: f64, theta: f64, guess: &ShootingState, cfg: &ShootingConfig) -> Result<ShootingSolution> {
    if !f.is_continuous() {
        return Err(domain(
            "nonlinearity",
            "discontinuous f cannot be integrated directly; wrap it as smoothed(f, n)",
        ));
    }
    f.ensure_total()?;
    if !(eps >= 0.0) {
        return Err(domain("eps", format!("{eps} must be >= 0")));
    }
    if (f.theta() - theta).abs() > 1e-15 {
        return Err(domain("theta", "does not match the nonlinearity threshold"));
    }
    let out = newton::solve(
        |x| shooting_residual(f, &state_from(x, eps, theta), cfg),
        &newton_unknowns(guess),
        &cfg.newton,
    )?;
    let state = state_from(&out.x, eps, theta);
    let profile = full_profile(f, &state, cfg)?;
    let mut checks = validity_checks(&profile, theta, eps, state.beta);
    let flux = flux_identity_check(&profile, f, state.beta)?;
    checks.record("flux_identity", flux.abs() < 1e-6);
    Ok(ShootingSolution {
        state,
        profile,
        report: SolveReport {
            converged: out.converged,
            iterations: out.iterations,
            residual_norm: out.norm,
            checks,
            residual_history: out.history,
        },
    })
}

/// Integrated profile on `[0, 1]` followed by the explicit exterior.
pub fn full_profile(f: &IgnitionFunction, state: &ShootingState, cfg: &ShootingConfig) -> Result<RadialProfile> {
    let mut p = integrate_radial(f, state, 1.0, cfg)?;
    let i = p.index_of_one()?;
    let gamma = p.v[i];
    for k in 1..=cfg.outer_intervals {
        let r = 1.0 + (cfg.r_max - 1.0) * k as f64 / cfg.outer_intervals as f64;
        if r <= 1.0 {
            continue;
        }
        let e = exterior_profile(state.theta, state.eps, state.beta, gamma, r)?;
        p.r.push(r);
        p.u.push(e.u);
        p.v.push(e.v);
        p.du.push(e.du);
        p.dv.push(e.dv);
        p.tags.push(PieceTag::Exterior);
    }
    p.validate()?;
    Ok(p)
}

/// `beta² ∫₀¹ s² v f(u) ds − v'(1)`, integrating a cubic Hermite
/// reconstruction with four Gauss points per interval.
pub fn flux_identity_check(profile: &RadialProfile, f: &IgnitionFunction, beta: f64) -> Result<f64> {
    let one = profile.index_of_one()?;
    let p = profile;
    let mut integral = 0.0;
    for i in 0..one {
        let (a, b) = (p.r[i], p.r[i + 1]);
        integral += gauss4(
            |s| {
                let u = hermite(a, b, p.u[i], p.u[i + 1], p.du[i], p.du[i + 1], s);
                let v = hermite(a, b, p.v[i], p.v[i + 1], p.dv[i], p.dv[i + 1], s);
                s * s * v * f.value(u)
            },
            a,
            b,
        );
    }
    Ok(beta * beta * integral - p.dv[one])
}

/// Tolerance on the slope bound for `z = u + v`.
pub const Z_SLOPE_TOL: f64 = 1e-6;

/// Pointwise bounds every solution satisfies:
///
/// * `bounds_u`, `bounds_v`: `0 <= u, v <= 1`
/// * `sum_bound`: `u + v <= 1 + 1e-12`
/// * `u_monotone_tail`: `u` nonincreasing past its last node with `u >= theta`
/// * `beta_sqrt_eps_bound`: `beta sqrt(eps) <= 1/theta`
/// * `z_slope`: `0 <= (u + v)' <= eps beta² r`
pub fn validity_checks(profile: &RadialProfile, theta: f64, eps: f64, beta: f64) -> CheckSet {
    validity_checks_with_tol(profile, theta, eps, beta, 1e-12)
}

/// [`validity_checks`] with slack `tol` on the pointwise bounds, for
/// profiles that carry an iteration error.
pub fn validity_checks_with_tol(profile: &RadialProfile, theta: f64, eps: f64, beta: f64, tol: f64) -> CheckSet {
    let p = profile;
    let mut checks = CheckSet::new();
    checks.record("bounds_u", p.u.iter().all(|&u| u >= -tol && u <= 1.0 + tol));
    checks.record("bounds_v", p.v.iter().all(|&v| v >= -tol && v <= 1.0 + tol));
    checks.record("sum_bound", p.u.iter().zip(&p.v).all(|(u, v)| u + v <= 1.0 + tol));
    let last = p.u.iter().rposition(|&u| u >= theta).unwrap_or(0);
    checks.record("u_monotone_tail", p.u[last..].windows(2).all(|w| w[1] <= w[0] + 1e-14));
    checks.record("beta_sqrt_eps_bound", beta * eps.sqrt() <= 1.0 / theta + tol);
    let cap = eps * beta * beta;
    checks.record(
        "z_slope",
        p.r.iter()
            .zip(p.du.iter().zip(&p.dv))
            .all(|(&r, (du, dv))| du + dv >= -Z_SLOPE_TOL && du + dv <= cap * r + Z_SLOPE_TOL),
    );
    checks
}

/// Which ball-mode root to seed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Lower,
    Upper,
}

/// Seed from the closed-form ball solution of the step function. At
/// `eps = 0` only the lower branch exists, ending at `beta0`.
pub fn heaviside_seed(eps: f64, theta: f64, branch: Branch) -> Result<Option<ShootingState>> {
    let state = |b: BallBranchPoint| ShootingState {
        u0: b.center_u(),
        v0: b.center_v(),
        beta: b.beta,
        eps,
        theta,
    };
    if eps == 0.0 {
        let b0 = BallBranchPoint::new(0.0, beta_zero(theta)?, theta);
        return Ok((branch == Branch::Lower).then(|| state(b0)));
    }
    Ok(ball_roots(eps, theta)?.map(|(m, p)| state(if branch == Branch::Lower { m } else { p })))
}

/// Zero crossing of `W` for `W'' + 2W'/ρ = -(1 - theta - W)W⁺`, `W(0) = w0`;
/// returns `(R, W'(R))` or `None` if `W` stays positive up to `rho_max`.
fn logistic_crossing(theta: f64, w0: f64, cfg: &IntegratorConfig) -> Result<Option<(f64, f64)>> {
    let k = 1.0 - theta;
    let mut rhs = |rho: f64, y: &[f64; 2]| [y[1], -(k - y[0]) * y[0].max(0.0) - 2.0 * y[1] / rho];
    let r0 = 1e-6;
    let c = -(k - w0) * w0 / 6.0;
    let mut y = [w0 + c * r0 * r0, 2.0 * c * r0];
    let mut rho = r0;
    let dr = 0.05;
    let rho_max = 400.0;
    while rho < rho_max {
        let next = rho + dr;
        let y1 = integrate(&mut rhs, rho, y, &[next], cfg)?[0];
        if y1[0] <= 0.0 {
            let (ys, rs) = (y, rho);
            let mut at = |x: f64| -> [f64; 2] {
                if x <= rs {
                    ys
                } else {
                    integrate(&mut rhs, rs, ys, &[x], cfg).map(|v| v[0]).unwrap_or([f64::NAN; 2])
                }
            };
            let root = bisect(|x| at(x)[0], rs, next, 1e-14)?;
            return Ok(Some((root, at(root)[1])));
        }
        rho = next;
        y = y1;
    }
    Ok(None)
}

/// Exact `eps = 0`, ramp solution in the scaled variable `rho = beta r`:
/// `u + v = 1` and `w = u - theta` solves a logistic equation with
/// `w(1) = 0`, `-w'(1) = theta`.
pub fn logistic_seed(theta: f64) -> Result<ShootingState> {
    crate::heaviside::beta_zero(theta)?;
    let cfg = IntegratorConfig {
        rtol: 1e-12,
        atol: 1e-14,
        h_max: 0.05,
        ..Default::default()
    };
    let k = 1.0 - theta;
    let mismatch = |w0: f64| -> Result<f64> {
        Ok(match logistic_crossing(theta, w0, &cfg)? {
            Some((r, dw)) => -r * dw - theta,
            None => f64::INFINITY,
        })
    };
    let grid = linspace(0.02 * k, 0.98 * k, 25);
    let mut prev: Option<(f64, f64)> = None;
    for &w in &grid {
        let m = mismatch(w)?;
        if let Some((pw, pm)) = prev {
            if pm < 0.0 && m >= 0.0 {
                let w0 = crate::numerics::roots::try_bisect(mismatch, pw, w, 1e-14)?;
                let (r, _) = logistic_crossing(theta, w0, &cfg)?.ok_or_else(|| crate::Error::NotFound("logistic crossing".into()))?;
                return Ok(ShootingState {
                    u0: theta + w0,
                    v0: 1.0 - theta - w0,
                    beta: r,
                    eps: 0.0,
                    theta,
                });
            }
        }
        prev = Some((w, m));
    }
    Err(crate::Error::NotFound(format!("no logistic solution found for theta = {theta}")))
}
