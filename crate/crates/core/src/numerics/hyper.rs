//! Hyperbolic ratios evaluated without overflow or cancellation.

/// `tanh(x)/x`, with the limit 1 at `x = 0`.
pub fn tanhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0
    } else {
        x.tanh() / x
    }
}

/// `sinh(x)/x` for small to moderate `x` (five Taylor terms below 1e-3).
pub fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0 * (1.0 + x2 / 72.0)))
    } else {
        x.sinh() / x
    }
}

/// `x/sinh(x)`, finite for any `x >= 0` (underflows to 0 for huge `x`).
pub fn x_over_sinh(x: f64) -> f64 {
    let x = x.abs();
    if x < 1e-3 {
        1.0 / sinhc(x)
    } else {
        // 2x e^{-x} / (1 - e^{-2x})
        2.0 * x * (-x).exp() / -(-2.0 * x).exp_m1()
    }
}

/// `x coth(x) - 1`, nonnegative, with a series near 0.
pub fn xcoth_m1(x: f64) -> f64 {
    let x = x.abs();
    if x < 1e-2 {
        let x2 = x * x;
        x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2 * x2 * x2 / 945.0 - x2.powi(4) / 4725.0
    } else {
        x / x.tanh() - 1.0
    }
}

/// `sinh(a r)/sinh(a)` for `0 <= r`, `a > 0`, factored through exponentials.
pub fn sinh_ratio(a: f64, r: f64) -> f64 {
    if a == 0.0 {
        return r;
    }
    let num = -(-2.0 * a * r).exp_m1();
    let den = -(-2.0 * a).exp_m1();
    (a * (r - 1.0)).exp() * num / den
}

/// `cosh(a r)/sinh(a)` for `a > 0`, factored through exponentials.
pub fn cosh_sinh_ratio(a: f64, r: f64) -> f64 {
    let num = 1.0 + (-2.0 * a * r).exp();
    let den = -(-2.0 * a).exp_m1();
    (a * (r - 1.0)).exp() * num / den
}

/// The kernel `Z_a(r) = sinh(a r)/(r sinh a)`.
///
/// `Z_0 = 1`, `Z_a(1) = 1`, and `Z_a(0) = a/sinh(a)`; for every `r` in
/// `[0, 1]` it lies in `[a/sinh a, 1]`.
pub fn z_kernel(a: f64, r: f64) -> f64 {
    let a = a.abs();
    if a == 0.0 {
        return 1.0;
    }
    let x = a * r;
    if x < 1e-3 {
        x_over_sinh(a) * sinhc(x)
    } else {
        sinh_ratio(a, r) / r
    }
}

/// Radial derivative of [`z_kernel`].
pub fn z_kernel_deriv(a: f64, r: f64) -> f64 {
    let a = a.abs();
    if a == 0.0 {
        return 0.0;
    }
    let x = a * r;
    if x < 1e-2 {
        // (x cosh x - sinh x)/x^3 series
        let x2 = x * x;
        let s = 1.0 / 3.0 + x2 / 30.0 + x2 * x2 / 840.0 + x2 * x2 * x2 / 45360.0;
        x_over_sinh(a) * a * a * r * s
    } else {
        z_kernel(a, r) * (xcoth_m1(x) / r)
    }
}
