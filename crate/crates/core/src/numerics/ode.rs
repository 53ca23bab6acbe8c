//! Dormand–Prince 5(4) integrator with a PI step-size controller.

use crate::error::{Error, Result};

/// Step-control settings for [`integrate`].
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Take uniform steps of this size with no error control.
    pub fixed_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-4,
            h_min: 1e-14,
            h_max: 0.05,
            max_steps: 2_000_000,
            fixed_step: None,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

struct Step<const N: usize> {
    y: [f64; N],
    k7: [f64; N],
    err: f64,
}

fn dp_step<const N: usize, F>(rhs: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64, cfg: &IntegratorConfig) -> Step<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = rhs(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = rhs(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = rhs(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y5 = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = rhs(t + h, &y5);
    let mut acc = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = cfg.atol + cfg.rtol * y[i].abs().max(y5[i].abs());
        acc += (e / sc).powi(2);
    }
    Step {
        y: y5,
        k7,
        err: (acc / N as f64).sqrt(),
    }
}

/// A level `y[component] = level` that steps must not straddle, e.g. a
/// kink of the right-hand side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub component: usize,
    pub level: f64,
}

/// Integrates `y' = rhs(t, y)` from `(t0, y0)` and returns the state at
/// every entry of `t_out` (ascending, each `>= t0`). Steps land exactly
/// on the output times.
pub fn integrate<const N: usize, F>(rhs: &mut F, t0: f64, y0: [f64; N], t_out: &[f64], cfg: &IntegratorConfig) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    integrate_with_crossings(rhs, t0, y0, t_out, &[], cfg)
}

/// Length of the partial step from `(t, y)` that ends on the crossing,
/// given that the full step `h` straddles it (Illinois false position).
fn locate_crossing<const N: usize, F>(rhs: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64, c: Crossing, cfg: &IntegratorConfig) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut phi = |hh: f64| dp_step(rhs, t, y, k1, hh, cfg).y[c.component] - c.level;
    let (mut a, mut b) = (0.0, h);
    let (mut fa, mut fb) = (y[c.component] - c.level, phi(h));
    let mut side = 0;
    for _ in 0..60 {
        let m = (a * fb - b * fa) / (fb - fa);
        let fm = phi(m);
        if fm == 0.0 || (b - a) < 1e-15 * h {
            return m;
        }
        if fm.signum() == fb.signum() {
            b = m;
            fb = fm;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = m;
            fa = fm;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fm.abs() <= 1e-15 * c.level.abs().max(1.0) {
            return m;
        }
    }
    0.5 * (a + b)
}

/// [`integrate`] with steps cut so that each crossing level is landed on
/// rather than stepped over. This keeps the result a smooth function of
/// the initial data when `rhs` has kinks at those levels.
pub fn integrate_with_crossings<const N: usize, F>(
    rhs: &mut F,
    t0: f64,
    y0: [f64; N],
    t_out: &[f64],
    crossings: &[Crossing],
    cfg: &IntegratorConfig,
) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(t_out.len());
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = cfg.fixed_step.unwrap_or(cfg.h_init).min(cfg.h_max);
    let mut facold: f64 = 1e-4;
    let mut steps = 0usize;

    for &target in t_out {
        if target < t {
            return Err(Error::Domain {
                field: "t_out",
                reason: format!("output time {target} precedes {t}"),
            });
        }
        while t < target {
            steps += 1;
            if steps > cfg.max_steps {
                return Err(Error::Stiffness { radius: t });
            }
            let remaining = target - t;
            let clipped = h >= remaining;
            let h_try = if clipped { remaining } else { h };
            let step = dp_step(rhs, t, &y, &k1, h_try, cfg);

            if let Some(hf) = cfg.fixed_step {
                t = if clipped { target } else { t + h_try };
                y = step.y;
                k1 = step.k7;
                h = hf;
                continue;
            }

            if step.err <= 1.0 && step.y.iter().all(|v| v.is_finite()) {
                let cut = crossings
                    .iter()
                    .filter(|c| {
                        let s0 = y[c.component] - c.level;
                        let s1 = step.y[c.component] - c.level;
                        s0.abs() > 1e-14 * c.level.abs().max(1.0) && s0 * s1 < 0.0
                    })
                    .map(|&c| locate_crossing(rhs, t, &y, &k1, h_try, c, cfg))
                    .fold(f64::INFINITY, f64::min);
                if cut < h_try && cut > 0.0 {
                    let landed = dp_step(rhs, t, &y, &k1, cut, cfg);
                    t += cut;
                    y = landed.y;
                    k1 = landed.k7;
                    continue;
                }
                t = if clipped { target } else { t + h_try };
                y = step.y;
                k1 = step.k7;
                let fac11 = step.err.max(1e-16).powf(0.17);
                let fac = (fac11 / facold.powf(0.04) / 0.9).clamp(0.2, 10.0);
                let h_new = (h_try / fac).min(cfg.h_max);
                facold = step.err.max(1e-4);
                // do not let a short clipped step shrink the working size
                h = if clipped { h.max(h_new) } else { h_new };
            } else {
                let shrink = if step.err.is_finite() {
                    (0.9 * step.err.powf(-0.2)).clamp(0.1, 0.5)
                } else {
                    0.1
                };
                h = h_try * shrink;
                if h < cfg.h_min {
                    return Err(Error::Stiffness { radius: t });
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}
