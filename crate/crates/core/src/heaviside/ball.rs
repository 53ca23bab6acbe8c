use serde::Serialize;

use super::{check_eps, check_theta};
use crate::error::{domain, Error, Result};
use crate::numerics::hyper::{tanhc, x_over_sinh, z_kernel, z_kernel_deriv};
use crate::numerics::roots::{bisect, geomspace, golden_min, try_bisect, try_golden_max};
use crate::profile::{with_breakpoints, PieceTag, RadialProfile};

/// Values of the explicit exterior solution at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExteriorValues {
    pub u: f64,
    pub v: f64,
    pub du: f64,
    pub dv: f64,
}

/// Exterior solution for `r >= 1`: `u = theta e^{-a(r-1)}/r`,
/// `v = 1 - (1-gamma)/r` with `a = beta sqrt(eps)`.
pub fn exterior_profile(theta: f64, eps: f64, beta: f64, gamma: f64, r: f64) -> Result<ExteriorValues> {
    if !(r >= 1.0) {
        return Err(domain("r", format!("{r} must be >= 1")));
    }
    if !(eps >= 0.0) {
        return Err(domain("eps", format!("{eps} must be >= 0")));
    }
    let a = beta * eps.sqrt();
    let e = (-a * (r - 1.0)).exp();
    Ok(ExteriorValues {
        u: theta * e / r,
        v: 1.0 - (1.0 - gamma) / r,
        du: -theta * e * (a * r + 1.0) / (r * r),
        dv: (1.0 - gamma) / (r * r),
    })
}

/// Ball-mode branch function
/// `g = theta(1-eps)(1+tanh a) + tanh(beta)/beta - tanh(a)/a`, `a = beta sqrt(eps)`.
pub fn ball_g(eps: f64, beta: f64, theta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(domain("beta", format!("{beta} must be > 0")));
    }
    if eps == 1.0 {
        return Err(Error::SingularParameter("eps = 1".into()));
    }
    if !(eps >= 0.0) {
        return Err(domain("eps", format!("{eps} must be >= 0")));
    }
    let a = beta * eps.sqrt();
    Ok(theta * (1.0 - eps) * (1.0 + a.tanh()) + tanhc(beta) - tanhc(a))
}

/// Largest eps admitting any solution for the step function:
/// `sup (1-s)/s` over `s > theta`.
pub fn heaviside_eps0(theta: f64) -> f64 {
    (1.0 - theta) / theta
}

/// Root of `g(0, ·)`, i.e. `tanh(beta)/beta = 1 - theta`.
pub fn beta_zero(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    bisect(|b| tanhc(b) - (1.0 - theta), 1e-8, 1.0 / (1.0 - theta), 1e-14)
}

/// Separator `tanh(beta)/beta = (1 - theta)/2` between the two ball roots.
pub fn beta_one(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    bisect(|b| tanhc(b) - 0.5 * (1.0 - theta), 1e-8, 2.0 / (1.0 - theta), 1e-14)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallBranchPoint {
    pub eps: f64,
    pub beta: f64,
    /// `v(1) = tanh(beta)/beta`.
    pub gamma: f64,
    pub theta: f64,
}

impl BallBranchPoint {
    pub fn new(eps: f64, beta: f64, theta: f64) -> Self {
        Self {
            eps,
            beta,
            gamma: tanhc(beta),
            theta,
        }
    }

    pub fn residual(&self) -> f64 {
        ball_g(self.eps, self.beta, self.theta).unwrap_or(f64::NAN)
    }

    /// `v(0) = 1/cosh(beta)`.
    pub fn center_v(&self) -> f64 {
        self.gamma * x_over_sinh(self.beta)
    }

    pub fn center_u(&self) -> f64 {
        ball_center_u(self.eps, self.beta, self.theta)
    }
}

/// `u(0)` of the ball-mode closed form.
pub fn ball_center_u(eps: f64, beta: f64, theta: f64) -> f64 {
    let gamma = tanhc(beta);
    let k = 1.0 / (1.0 - eps);
    let a = beta * eps.sqrt();
    let v0 = gamma * x_over_sinh(beta);
    -k * v0 + (theta + gamma * k) * x_over_sinh(a)
}

/// The two zeros `beta⁻ < beta⁺` of `g(eps, ·)`, or `None` when `eps` is
/// past the fold.
pub fn ball_roots(eps: f64, theta: f64) -> Result<Option<(BallBranchPoint, BallBranchPoint)>> {
    check_theta(theta)?;
    if !(eps > 0.0) {
        return Err(domain("eps", format!("{eps} must be > 0")));
    }
    if eps == 1.0 {
        return Err(Error::SingularParameter("eps = 1".into()));
    }
    if eps > heaviside_eps0(theta) {
        return Ok(None);
    }
    check_eps(eps)?;

    let g = |b: f64| ball_g(eps, b, theta).expect("validated parameters");
    let lo = 1e-3;
    let hi = 10.0 / (theta * eps.sqrt());
    let b1 = beta_one(theta)?;
    let split = if b1 < hi && g(b1) < 0.0 {
        b1
    } else {
        let grid = geomspace(lo, hi, 512);
        let (i, _) = grid
            .iter()
            .map(|&b| g(b))
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty grid");
        let l = grid[i.saturating_sub(1)].ln();
        let h = grid[(i + 1).min(grid.len() - 1)].ln();
        let (t, gmin) = golden_min(|t| g(t.exp()), l, h, 1e-12);
        if gmin >= 0.0 {
            return Ok(None);
        }
        t.exp()
    };
    if !(g(lo) > 0.0 && g(hi) > 0.0) {
        return Err(Error::NotFound(format!("ball roots at eps = {eps} are not bracketed")));
    }
    let minus = bisect(g, lo, split, 1e-12)?;
    let plus = bisect(g, split, hi, 1e-12)?;
    Ok(Some((
        BallBranchPoint::new(eps, minus, theta),
        BallBranchPoint::new(eps, plus, theta),
    )))
}

/// Smallest `eps` with `g(eps, beta) = 0` for a fixed `beta > beta_zero`.
pub fn ball_eps_of_beta(theta: f64, beta: f64) -> Result<Option<f64>> {
    check_theta(theta)?;
    let cap = heaviside_eps0(theta).min(0.999).min((1.0 / (theta * beta)).powi(2) * (1.0 + 1e-9));
    let g = |e: f64| ball_g(e, beta, theta).expect("validated parameters");
    if g(0.0) >= 0.0 {
        return Ok(None);
    }
    let grid = geomspace(1e-18, cap, 256);
    let Some(k) = grid.iter().position(|&e| g(e) > 0.0) else {
        return Ok(None);
    };
    let lo = if k == 0 { 1e-300 } else { grid[k - 1] };
    let t = try_bisect(|t| Ok(g(t.exp())), lo.ln(), grid[k].ln(), 1e-14)?;
    Ok(Some(t.exp()))
}

/// Fold of the ball branch: `(eps*, beta*)` maximizing `eps(beta)`.
pub fn ball_fold(theta: f64) -> Result<(f64, f64)> {
    let b0 = beta_zero(theta)?;
    let (t, e) = try_golden_max(
        |t| Ok(ball_eps_of_beta(theta, t.exp())?.unwrap_or(0.0)),
        b0.ln(),
        (b0 * 1e4).ln(),
        1e-10,
    )?;
    Ok((e, t.exp()))
}

/// Ball-mode profile on `grid` (with 1 inserted), exterior beyond `r = 1`.
pub fn ball_profile(eps: f64, beta: f64, theta: f64, grid: &[f64]) -> Result<RadialProfile> {
    check_eps(eps)?;
    if !(beta > 0.0) {
        return Err(domain("beta", format!("{beta} must be > 0")));
    }
    let grid = with_breakpoints(grid, &[1.0]);
    let gamma = tanhc(beta);
    let k = 1.0 / (1.0 - eps);
    let a = beta * eps.sqrt();
    let c = theta + gamma * k;
    let n = grid.len();
    let (mut u, mut v, mut du, mut dv, mut tags) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for &r in &grid {
        if r <= 1.0 {
            let vr = gamma * z_kernel(beta, r);
            let dvr = gamma * z_kernel_deriv(beta, r);
            v.push(vr);
            dv.push(dvr);
            u.push(-k * vr + c * z_kernel(a, r));
            du.push(-k * dvr + c * z_kernel_deriv(a, r));
            tags.push(PieceTag::Ball);
        } else {
            let ext = exterior_profile(theta, eps, beta, gamma, r)?;
            u.push(ext.u);
            v.push(ext.v);
            du.push(ext.du);
            dv.push(ext.dv);
            tags.push(PieceTag::Exterior);
        }
    }
    RadialProfile::new(grid, u, v, du, dv, tags)
}

/// Outcome of a reaction-region check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Validity {
    pub valid: bool,
    pub first_violation: Option<f64>,
}

/// True iff `u > theta` at every node in `[0, 1)`.
pub fn ball_validity(profile: &RadialProfile, theta: f64) -> Validity {
    let first_violation = profile
        .r
        .iter()
        .zip(&profile.u)
        .find(|(&r, &u)| r < 1.0 - 1e-14 && !(u > theta))
        .map(|(&r, _)| r);
    Validity {
        valid: first_violation.is_none(),
        first_violation,
    }
}

/// Crossover `eps0` on the upper ball branch where `u(0) = theta`.
pub fn ball_crossover_eps0(theta: f64) -> Result<f64> {
    let (eps_star, _) = ball_fold(theta)?;
    let h = |e: f64| -> Result<f64> {
        match ball_roots(e, theta)? {
            Some((_, plus)) => Ok(plus.center_u() - theta),
            None => Err(Error::NotFound(format!("no ball roots at eps = {e}"))),
        }
    };
    let hi = eps_star * (1.0 - 1e-7);
    if !(h(hi)? > 0.0) {
        return Err(Error::NotFound("upper ball branch is invalid next to the fold".into()));
    }
    let mut prev = hi;
    for _ in 0..80 {
        let lo = 0.5 * prev;
        if h(lo)? < 0.0 {
            return try_bisect(h, lo, prev, (1e-10 * hi).min(1e-12));
        }
        prev = lo;
    }
    Err(Error::NotFound("upper ball branch never reaches u(0) = theta".into()))
}
