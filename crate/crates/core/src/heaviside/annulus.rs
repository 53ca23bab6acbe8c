use serde::Serialize;

use super::ball::{exterior_profile, Validity};
use super::check_theta;
use crate::error::{domain, Error, Result};
use crate::numerics::hyper::{xcoth_m1, z_kernel, z_kernel_deriv};
use crate::numerics::newton::{self, NewtonOptions};
use crate::profile::{with_breakpoints, PieceTag, RadialProfile};

fn check_geometry(beta: f64, eta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(domain("beta", format!("{beta} must be > 0")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(domain("eta", format!("{eta} is not in (0, 1)")));
    }
    Ok(())
}

/// `v(1)` for the annulus `(eta, 1)`: the Robin data `v + v' = 1` at 1 and
/// `v'(eta) = 0`. With `s = beta(1-eta)` this is
/// `(eta beta + tanh s) / (beta (eta beta tanh s + 1))`.
pub fn annulus_gamma(beta: f64, eta: f64) -> Result<f64> {
    check_geometry(beta, eta)?;
    let t = (beta * (1.0 - eta)).tanh();
    let x = eta * beta;
    let den = beta * (x * t + 1.0);
    if !(den > f64::EPSILON) {
        return Err(Error::DegenerateGeometry(format!(
            "gamma denominator {den:e} at beta = {beta}, eta = {eta}"
        )));
    }
    Ok((x + t) / den)
}

/// `v(eta) = 1 / (cosh(s) (eta beta tanh s + 1))`, the constant core value.
pub fn annulus_delta(beta: f64, eta: f64) -> Result<f64> {
    check_geometry(beta, eta)?;
    let s = beta * (1.0 - eta);
    Ok(1.0 / (s.cosh() * (eta * beta * s.tanh() + 1.0)))
}

/// `v` and `v'` on the annulus. Substituting `gamma` into
/// `[sinh(beta(r-1))/beta + gamma cosh(beta(r-1))]/r` gives
/// `delta [sinh(beta(r-eta))/beta + eta cosh(beta(r-eta))]/r`, which avoids
/// cancelling two `cosh(beta(1-eta))`-sized terms.
fn v_shell(beta: f64, eta: f64, delta: f64, r: f64) -> Result<(f64, f64)> {
    let y = beta * (r - eta);
    if beta * (1.0 - eta) > 700.0 {
        return Err(Error::DegenerateGeometry(format!(
            "annulus width beta(1-eta) = {} overflows",
            beta * (1.0 - eta)
        )));
    }
    let (sh, ch) = (y.sinh(), y.cosh());
    let w = delta * (sh / beta + eta * ch);
    let dw = delta * (ch + eta * beta * sh);
    Ok((w / r, dw / r - w / (r * r)))
}

/// Annulus piece of `u` and its derivative. `p`, `q` multiply
/// `sinh(a(r-1))/r` and `cosh(a(r-1))/r`.
struct UShell {
    eps: f64,
    a: f64,
    p: f64,
    q: f64,
    beta: f64,
    eta: f64,
    gamma: f64,
    delta: f64,
}

impl UShell {
    fn new(eps: f64, beta: f64, eta: f64, theta: f64) -> Result<Self> {
        let gamma = annulus_gamma(beta, eta)?;
        let delta = annulus_delta(beta, eta)?;
        let a = beta * eps.sqrt();
        let k = 1.0 / (1.0 - eps);
        Ok(Self {
            eps,
            a,
            p: k / a - theta,
            q: theta + gamma * k,
            beta,
            eta,
            gamma,
            delta,
        })
    }

    fn v(&self, r: f64) -> Result<(f64, f64)> {
        v_shell(self.beta, self.eta, self.delta, r)
    }

    fn eval(&self, r: f64) -> Result<(f64, f64)> {
        let (v, dv) = self.v(r)?;
        let z = self.a * (r - 1.0);
        let (sh, ch) = (z.sinh(), z.cosh());
        let w = self.p * sh + self.q * ch;
        let dw = self.a * (self.p * ch + self.q * sh);
        let m = 1.0 / (self.eps - 1.0);
        Ok((m * v + w / r, m * dv + dw / r - w / (r * r)))
    }

    /// Coefficients of `sinh(a r)/r` and `cosh(a r)/r`.
    fn e_f(&self) -> (f64, f64) {
        let (sh, ch) = (self.a.sinh(), self.a.cosh());
        (self.p * ch - self.q * sh, self.q * ch - self.p * sh)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnulusResidual {
    /// `u_shell(eta) - theta`.
    pub res1: f64,
    /// `u_shell'(eta) - u_core'(eta)`.
    pub res2: f64,
    /// `|res1| / theta`.
    pub rel1: f64,
    /// `|res2| / (theta (1 + beta sqrt(eps)))`, relative to `|u'(1)|`.
    pub rel2: f64,
    pub gamma: f64,
    pub delta: f64,
    pub e: f64,
    pub f: f64,
}

/// Matching residuals at `eta` for the annulus ansatz.
pub fn annulus_residual(eps: f64, beta: f64, eta: f64, theta: f64) -> Result<AnnulusResidual> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::SingularParameter(format!("eps = {eps} is not in (0, 1)")));
    }
    check_theta(theta)?;
    let shell = UShell::new(eps, beta, eta, theta)?;
    let (gamma, delta) = (shell.gamma, shell.delta);
    let (u, du) = shell.eval(eta)?;
    let core_du = theta * xcoth_m1(shell.a * eta) / eta;
    let res1 = u - theta;
    let res2 = du - core_du;
    let (e, f) = shell.e_f();
    Ok(AnnulusResidual {
        res1,
        res2,
        rel1: res1.abs() / theta,
        rel2: res2.abs() / (theta * (1.0 + shell.a)),
        gamma,
        delta,
        e,
        f,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnulusBranchPoint {
    pub eps: f64,
    pub beta: f64,
    pub eta: f64,
    pub theta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub e: f64,
    pub f: f64,
    pub res1: f64,
    pub res2: f64,
    /// Max of the two relative residuals.
    pub res_norm: f64,
}

impl AnnulusBranchPoint {
    fn from_residual(eps: f64, beta: f64, eta: f64, theta: f64, r: &AnnulusResidual) -> Self {
        Self {
            eps,
            beta,
            eta,
            theta,
            gamma: r.gamma,
            delta: r.delta,
            e: r.e,
            f: r.f,
            res1: r.res1,
            res2: r.res2,
            res_norm: r.rel1.max(r.rel2),
        }
    }

    /// `0 < eta < 1`, `0 < delta < gamma < 1`, `beta sqrt(eps) <= 1/theta`.
    pub fn admissible(&self) -> bool {
        self.eta > 0.0
            && self.eta < 1.0
            && self.delta > 0.0
            && self.delta < self.gamma
            && self.gamma < 1.0
            && self.beta * self.eps.sqrt() <= 1.0 / self.theta + 1e-12
    }
}

fn scaled(r: &AnnulusResidual, theta: f64, a: f64) -> Vec<f64> {
    vec![r.res1 / theta, r.res2 / (theta * (1.0 + a))]
}

fn default_options(opts: Option<&NewtonOptions>) -> NewtonOptions {
    opts.cloned().unwrap_or(NewtonOptions {
        tol: 1e-11,
        max_iter: 80,
        polish: 3,
        ..Default::default()
    })
}

/// Damped Newton on the matching residuals over `(ln beta, eta)`.
pub fn annulus_solve(eps: f64, theta: f64, init: (f64, f64), opts: Option<&NewtonOptions>) -> Result<AnnulusBranchPoint> {
    let opts = default_options(opts);
    annulus_residual(eps, init.0, init.1, theta)?;
    let out = newton::solve(
        |x| {
            let beta = x[0].exp();
            let r = annulus_residual(eps, beta, x[1], theta)?;
            Ok(scaled(&r, theta, beta * eps.sqrt()))
        },
        &[init.0.ln(), init.1],
        &opts,
    )?;
    let (beta, eta) = (out.x[0].exp(), out.x[1]);
    let r = annulus_residual(eps, beta, eta, theta)?;
    let point = AnnulusBranchPoint::from_residual(eps, beta, eta, theta, &r);
    if point.res_norm < 1e-10 {
        Ok(point)
    } else {
        Err(Error::NoConvergence {
            iterations: out.iterations,
            residual: out.norm,
            last_iterate: vec![beta, eta],
            history: out.history,
        })
    }
}

/// Same system with `eta` held fixed and `(ln eps, ln beta)` unknown;
/// well conditioned as the annulus fills the ball.
pub fn annulus_solve_at_eta(eta: f64, theta: f64, init: (f64, f64), opts: Option<&NewtonOptions>) -> Result<AnnulusBranchPoint> {
    let opts = default_options(opts);
    let out = newton::solve(
        |x| {
            let (eps, beta) = (x[0].exp(), x[1].exp());
            let r = annulus_residual(eps, beta, eta, theta)?;
            Ok(scaled(&r, theta, beta * eps.sqrt()))
        },
        &[init.0.ln(), init.1.ln()],
        &opts,
    )?;
    let (eps, beta) = (out.x[0].exp(), out.x[1].exp());
    let r = annulus_residual(eps, beta, eta, theta)?;
    let point = AnnulusBranchPoint::from_residual(eps, beta, eta, theta, &r);
    if point.res_norm < 1e-10 {
        Ok(point)
    } else {
        Err(Error::NoConvergence {
            iterations: out.iterations,
            residual: out.norm,
            last_iterate: vec![eps, beta],
            history: out.history,
        })
    }
}

/// Three-piece profile: core `[0, eta]`, shell `(eta, 1]`, exterior.
pub fn annulus_profile(point: &AnnulusBranchPoint, grid: &[f64]) -> Result<RadialProfile> {
    let AnnulusBranchPoint {
        eps,
        beta,
        eta,
        theta,
        gamma,
        delta,
        ..
    } = *point;
    check_geometry(beta, eta)?;
    let grid = with_breakpoints(grid, &[eta, 1.0]);
    let shell = UShell::new(eps, beta, eta, theta)?;
    let ae = shell.a * eta;
    let n = grid.len();
    let mut cols: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut tags = Vec::with_capacity(n);
    for &r in &grid {
        let (u, v, du, dv, tag) = if r <= eta {
            let s = r / eta;
            (
                theta * z_kernel(ae, s),
                delta,
                theta * z_kernel_deriv(ae, s) / eta,
                0.0,
                PieceTag::Core,
            )
        } else if r <= 1.0 {
            let (u, du) = shell.eval(r)?;
            let (v, dv) = shell.v(r)?;
            (u, v, du, dv, PieceTag::Annulus)
        } else {
            let e = exterior_profile(theta, eps, beta, gamma, r)?;
            (e.u, e.v, e.du, e.dv, PieceTag::Exterior)
        };
        cols[0].push(u);
        cols[1].push(v);
        cols[2].push(du);
        cols[3].push(dv);
        tags.push(tag);
    }
    let [u, v, du, dv] = cols;
    RadialProfile::new(grid, u, v, du, dv, tags)
}

/// `u < theta` on `[0, eta)` and `u > theta` on `(eta, 1)`.
pub fn annulus_validity(profile: &RadialProfile, theta: f64, eta: f64) -> Validity {
    let tol = 1e-12;
    let first_violation = profile
        .r
        .iter()
        .zip(&profile.u)
        .find(|(&r, &u)| {
            if r < eta - tol {
                !(u < theta)
            } else if r > eta + tol && r < 1.0 - tol {
                !(u > theta)
            } else {
                false
            }
        })
        .map(|(&r, _)| r);
    Validity {
        valid: first_violation.is_none(),
        first_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Literal printed expression, fine for moderate arguments.
    fn gamma_printed(beta: f64, eta: f64) -> f64 {
        let x = eta * beta;
        let (tx, tb) = (x.tanh(), beta.tanh());
        (x - tx - tb * (x * tx - 1.0)) / (beta * ((x - tx) * tb + 1.0 - x * tx))
    }

    /// v = A sinh(beta r)/r + B cosh(beta r)/r with v'(eta) = 0 and
    /// v(1) + v'(1) = 1, solved by Cramer's rule.
    fn gamma_linear_oracle(beta: f64, eta: f64) -> (f64, f64) {
        let phi = |r: f64| [(beta * r).sinh() / r, (beta * r).cosh() / r];
        let dphi = |r: f64| {
            let (s, c) = ((beta * r).sinh(), (beta * r).cosh());
            [beta * c / r - s / (r * r), beta * s / r - c / (r * r)]
        };
        let (p1, d1, de) = (phi(1.0), dphi(1.0), dphi(eta));
        let m = [[de[0], de[1]], [p1[0] + d1[0], p1[1] + d1[1]]];
        let rhs = [0.0, 1.0];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let a = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
        let b = (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det;
        let pe = phi(eta);
        (a * p1[0] + b * p1[1], a * pe[0] + b * pe[1])
    }

    #[test]
    fn gamma_matches_linear_solve_and_printed_form() {
        for &(b, e) in &[(2.0, 0.5), (0.7, 0.1), (8.0, 0.9), (20.0, 0.3)] {
            let (g, d) = gamma_linear_oracle(b, e);
            // Cramer's rule on cosh(beta)-sized entries loses a few digits
            assert_relative_eq!(annulus_gamma(b, e).unwrap(), g, max_relative = 1e-9);
            assert_relative_eq!(annulus_gamma(b, e).unwrap(), gamma_printed(b, e), max_relative = 1e-9);
            assert_relative_eq!(annulus_delta(b, e).unwrap(), d, max_relative = 1e-10);
        }
        // 40-digit reference values
        assert_relative_eq!(annulus_gamma(8.0, 0.9).unwrap(), 0.170_038_676_175_663_24, max_relative = 1e-15);
        assert_relative_eq!(annulus_gamma(2.0, 0.5).unwrap(), 0.5, max_relative = 1e-15);
        // huge beta: no overflow
        let g = annulus_gamma(5000.0, 0.5).unwrap();
        assert!(g.is_finite() && g > 0.0 && g < 1.0);
        assert!(annulus_gamma(1.0, 1.0).is_err());
    }

    #[test]
    fn shell_v_is_flat_at_eta_and_robin_at_one() {
        let (beta, eta) = (3.0, 0.4);
        let g = annulus_gamma(beta, eta).unwrap();
        let d = annulus_delta(beta, eta).unwrap();
        let (v_eta, dv_eta) = v_shell(beta, eta, d, eta).unwrap();
        assert!(dv_eta.abs() < 1e-13);
        assert_relative_eq!(v_eta, d, max_relative = 1e-15);
        let (v1, dv1) = v_shell(beta, eta, d, 1.0).unwrap();
        assert_relative_eq!(v1, g, max_relative = 1e-14);
        assert_relative_eq!(v1 + dv1, 1.0, max_relative = 1e-14);
        // against the unsubstituted gamma form
        for &r in &[0.5, 0.7, 0.95] {
            let y = beta * (r - 1.0);
            let direct = ((y.sinh() / beta) + g * y.cosh()) / r;
            assert_relative_eq!(v_shell(beta, eta, d, r).unwrap().0, direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn e_f_form_agrees_with_shifted_form() {
        let (eps, beta, theta) = (0.003, 15.0, 0.5);
        let sh = UShell::new(eps, beta, 0.6, theta).unwrap();
        let (e, f) = sh.e_f();
        for &r in &[0.6, 0.8, 1.0] {
            let (v, _) = sh.v(r).unwrap();
            let direct = v / (eps - 1.0) + e * (sh.a * r).sinh() / r + f * (sh.a * r).cosh() / r;
            assert_relative_eq!(sh.eval(r).unwrap().0, direct, max_relative = 1e-12);
        }
        assert_relative_eq!(sh.eval(1.0).unwrap().0, theta, max_relative = 1e-14);
        assert_relative_eq!(sh.eval(1.0).unwrap().1, -theta * (1.0 + sh.a), max_relative = 1e-13);
    }

    #[test]
    fn residual_domain_errors() {
        assert!(matches!(annulus_residual(1.0, 2.0, 0.5, 0.5), Err(Error::SingularParameter(_))));
        assert!(matches!(annulus_residual(0.0, 2.0, 0.5, 0.5), Err(Error::SingularParameter(_))));
        assert!(annulus_residual(0.01, 2.0, 1.2, 0.5).is_err());
    }
}
