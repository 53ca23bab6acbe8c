//! Damped Newton iteration with finite-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Finite-difference scheme for Jacobian columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Difference {
    Forward,
    Central,
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    /// Convergence threshold on the max-norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings tried when the residual norm does not decrease.
    pub max_halvings: usize,
    /// Relative perturbation for the Jacobian columns.
    pub fd_step: f64,
    pub difference: Difference,
    /// Extra iterations after reaching `tol`, kept only while they help.
    pub polish: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            max_halvings: 30,
            fd_step: 1e-7,
            difference: Difference::Forward,
            polish: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub fx: Vec<f64>,
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

impl NewtonOutcome {
    /// Converts a non-converged outcome into [`Error::NoConvergence`].
    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence {
                iterations: self.iterations,
                residual: self.norm,
                last_iterate: self.x,
                history: self.history,
            })
        }
    }
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Jacobian of `f` at `x` by finite differences; `fx = f(x)` is reused
/// by the forward scheme.
pub fn fd_jacobian<F>(f: &mut F, x: &[f64], fx: &[f64], difference: Difference, rel_step: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let m = fx.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = rel_step * x[j].abs().max(1.0);
        match difference {
            Difference::Forward => {
                xp[j] = x[j] + h;
                let fp = f(&xp)?;
                for i in 0..m {
                    jac[(i, j)] = (fp[i] - fx[i]) / h;
                }
            }
            Difference::Central => {
                xp[j] = x[j] + h;
                let fp = f(&xp)?;
                xp[j] = x[j] - h;
                let fm = f(&xp)?;
                for i in 0..m {
                    jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
        }
        xp[j] = x[j];
    }
    Ok(jac)
}

/// Solves the square system `J dx = -r`.
pub fn newton_direction(jac: &DMatrix<f64>, r: &[f64]) -> Result<Vec<f64>> {
    let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
    let dx = jac
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::LinearSolve("singular Newton Jacobian".into()))?;
    if dx.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("non-finite Newton step".into()));
    }
    Ok(dx.iter().copied().collect())
}

/// Damped Newton on `f(x) = 0`. An `Err` from `f` at a trial point counts
/// as a rejected step. Returns an outcome with `converged = false` when
/// iterations or halvings run out.
pub fn solve<F>(mut f: F, x0: &[f64], opts: &NewtonOptions) -> Result<NewtonOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut norm = max_norm(&fx);
    let mut history = vec![norm];
    let mut iterations = 0;
    let mut polish_left = opts.polish;
    let mut converged = norm < opts.tol;

    while iterations < opts.max_iter {
        if converged {
            if polish_left == 0 {
                break;
            }
            polish_left -= 1;
        }
        let jac = fd_jacobian(&mut f, &x, &fx, opts.difference, opts.fd_step)?;
        let dx = match newton_direction(&jac, &fx) {
            Ok(dx) => dx,
            Err(_) if converged => break,
            Err(e) => return Err(e),
        };
        iterations += 1;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            if let Ok(ft) = f(&trial) {
                let nt = max_norm(&ft);
                if nt.is_finite() && nt < norm {
                    accepted = Some((trial, ft, nt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xt, ft, nt)) => {
                x = xt;
                fx = ft;
                norm = nt;
                history.push(norm);
                if norm < opts.tol {
                    converged = true;
                }
            }
            None => break,
        }
    }
    Ok(NewtonOutcome {
        x,
        fx,
        norm,
        iterations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_circle_line_intersection() {
        let f = |x: &[f64]| Ok(vec![x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]]);
        let out = solve(f, &[1.0, 0.5], &NewtonOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(out.history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn damping_rescues_arctan() {
        // plain Newton on atan diverges from x0 = 3
        let f = |x: &[f64]| Ok(vec![x[0].atan()]);
        let out = solve(f, &[3.0], &NewtonOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.x[0].abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence_with_history() {
        let f = |x: &[f64]| Ok(vec![x[0] * x[0] + 1.0]);
        let out = solve(f, &[0.5], &NewtonOptions::default()).unwrap();
        assert!(!out.converged);
        match out.into_result() {
            Err(Error::NoConvergence { history, .. }) => assert!(!history.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn forward_and_central_jacobians_agree() {
        let mut f = |x: &[f64]| Ok(vec![x[0].sin() * x[1], x[0].exp() + x[1].powi(3)]);
        let x = [0.4, 1.3];
        let fx = f(&x).unwrap();
        let a = fd_jacobian(&mut f, &x, &fx, Difference::Forward, 1e-7).unwrap();
        let b = fd_jacobian(&mut f, &x, &fx, Difference::Central, 1e-5).unwrap();
        for (p, q) in a.iter().zip(b.iter()) {
            assert!((p - q).abs() < 1e-6 * q.abs().max(1.0));
        }
    }
}
