use serde::Serialize;

use super::check_theta;
use crate::error::{Error, Result};
use crate::numerics::hyper::xcoth_m1;
use crate::numerics::roots::bisect;

/// Limits along the annulus branch as `beta -> inf`:
/// `a0 = lim beta sqrt(eps)` and `x0 = lim beta (1 - eta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticLimits {
    pub theta: f64,
    pub a0: f64,
    pub x0: f64,
    /// Bracket used for `a0`.
    pub a_bracket: (f64, f64),
    /// Bracket used for `x0` after geometric growth.
    pub x_bracket: (f64, f64),
}

/// `G2(0, a, ·) = 1 - theta(1 + a) - theta(a coth a - 1)`.
pub fn g2_residual(theta: f64, a: f64) -> f64 {
    1.0 - theta * (1.0 + a) - theta * xcoth_m1(a)
}

/// `G1(0, a, x) = -x + theta a x + coth x + theta x - 1/sinh x`.
pub fn g1_residual(theta: f64, a: f64, x: f64) -> f64 {
    x * (theta * (1.0 + a) - 1.0 + x_shape(x))
}

/// `1/(x tanh x) - 1/(x sinh x) = tanh(x/2)/x`, which decreases from 1/2 to 0.
fn x_shape(x: f64) -> f64 {
    if x < 1e-4 {
        0.5 - x * x / 24.0
    } else {
        (0.5 * x).tanh() / x
    }
}

pub fn asymptotic_limits(theta: f64) -> Result<AsymptoticLimits> {
    check_theta(theta)?;
    let a_bracket = (0.0, 1.0 / theta - 1.0);
    let a0 = bisect(|a| g2_residual(theta, a), a_bracket.0, a_bracket.1, 1e-15)?;
    let target = theta * (1.0 + a0);
    if !(target > 0.5 && target < 1.0) {
        return Err(Error::NotFound(format!("theta(1 + a0) = {target} is outside (1/2, 1)")));
    }
    let h = |x: f64| 1.0 - x_shape(x) - target;
    let mut hi = 1.0;
    while h(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NotFound("x equation has no root".into()));
        }
    }
    let lo = 1e-6;
    let x0 = bisect(h, lo, hi, 1e-14 * hi)?;
    Ok(AsymptoticLimits {
        theta,
        a0,
        x0,
        a_bracket,
        x_bracket: (lo, hi),
    })
}

impl AsymptoticLimits {
    /// Seed `(beta, eta) = (a0/sqrt(eps), 1 - x0 sqrt(eps)/a0)`.
    pub fn annulus_seed(&self, eps: f64) -> (f64, f64) {
        let s = eps.sqrt();
        (self.a0 / s, 1.0 - self.x0 * s / self.a0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_half_limits() {
        let l = asymptotic_limits(0.5).unwrap();
        // a/tanh(a) + a = 2 at theta = 1/2
        assert!((l.a0 / l.a0.tanh() + l.a0 - 2.0).abs() < 1e-13);
        assert!((l.a0 - 0.796_812_130_020_02).abs() < 1e-12);
        assert!((l.x0 - 9.842_060_655_253_1).abs() < 1e-9);
        assert!(g1_residual(0.5, l.a0, l.x0).abs() < 1e-10);
        assert!(g2_residual(0.5, l.a0).abs() < 1e-12);
    }

    #[test]
    fn bracket_and_solvability_bounds() {
        for i in 1..20 {
            let theta = i as f64 / 20.0;
            let l = asymptotic_limits(theta).unwrap();
            assert!(l.a0 >= (1.0 - theta) / (2.0 * theta) - 1e-14);
            assert!(l.a0 < 1.0 / theta - 1.0);
            assert!(theta * (1.0 + l.a0) > 0.5);
        }
    }

    #[test]
    fn g1_closed_form_agrees_with_printed_terms() {
        let (t, a, x) = (0.4, 0.9, 3.0f64);
        let printed = -x + t * a * x + 1.0 / x.tanh() + x * t - 1.0 / x.sinh();
        assert!((g1_residual(t, a, x) - printed).abs() < 1e-13);
    }
}
