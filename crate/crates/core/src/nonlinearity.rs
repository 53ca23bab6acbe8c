//! Ignition nonlinearities and the scalar nonexistence bounds ε⁰ and ε¹.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::quad::adaptive_simpson;
use crate::numerics::roots::{bisect, linspace};

/// Shape of an ignition function. Every kind vanishes for `u <= theta`.
#[derive(Clone, Debug, PartialEq)]
pub enum Kind {
    /// `1` above the threshold.
    Heaviside,
    /// `(u - theta)⁺`.
    Ramp,
    /// Piecewise-linear through strictly increasing `(u, f)` samples.
    Tabulated(Vec<(f64, f64)>),
    /// `t f_base + (1 - t)(u - theta)⁺`.
    Homotopy { base: Box<IgnitionFunction>, t: f64 },
    /// `min(f_base, n (u - theta)⁺)`.
    Smoothed { base: Box<IgnitionFunction>, n: f64 },
}

/// A nonlinearity `f` with threshold `theta` in (0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct IgnitionFunction {
    theta: f64,
    kind: Kind,
}

fn check_theta(theta: f64) -> Result<f64> {
    if theta.is_finite() && theta > 0.0 && theta < 1.0 {
        Ok(theta)
    } else {
        Err(domain("theta", format!("{theta} is not in (0, 1)")))
    }
}

impl IgnitionFunction {
    pub fn heaviside(theta: f64) -> Result<Self> {
        Ok(Self {
            theta: check_theta(theta)?,
            kind: Kind::Heaviside,
        })
    }

    pub fn ramp(theta: f64) -> Result<Self> {
        Ok(Self {
            theta: check_theta(theta)?,
            kind: Kind::Ramp,
        })
    }

    pub fn tabulated(theta: f64, table: Vec<(f64, f64)>) -> Result<Self> {
        check_theta(theta)?;
        if table.len() < 2 {
            return Err(domain("table", "needs at least two samples"));
        }
        for (i, &(u, f)) in table.iter().enumerate() {
            if !u.is_finite() || !f.is_finite() || f < 0.0 {
                return Err(domain("table", format!("entry {i} = ({u}, {f}) must be finite with f >= 0")));
            }
            if i > 0 && u <= table[i - 1].0 {
                return Err(domain("table", format!("u must be strictly increasing (entry {i})")));
            }
        }
        Ok(Self {
            theta,
            kind: Kind::Tabulated(table),
        })
    }

    /// The homotopy `t f + (1 - t)(u - theta)⁺` for `t` in [0, 1].
    pub fn homotopy(&self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(domain("t", format!("{t} is not in [0, 1]")));
        }
        Ok(Self {
            theta: self.theta,
            kind: Kind::Homotopy {
                base: Box::new(self.clone()),
                t,
            },
        })
    }

    /// The smoothing `min(f, n (u - theta)⁺)` for `n >= 1`.
    pub fn smoothed(&self, n: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 1.0) {
            return Err(domain("n", format!("{n} must be a finite number >= 1")));
        }
        Ok(Self {
            theta: self.theta,
            kind: Kind::Smoothed {
                base: Box::new(self.clone()),
                n,
            },
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Evaluates `f(u)` for `u >= 0`. Values above 1 are clamped to `f(1)`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(domain("u", format!("{u} must be >= 0")));
        }
        self.eval_checked(u)
    }

    fn eval_checked(&self, u: f64) -> Result<f64> {
        if u <= self.theta {
            return Ok(0.0);
        }
        let u = u.min(1.0);
        Ok(match &self.kind {
            Kind::Heaviside => 1.0,
            Kind::Ramp => u - self.theta,
            Kind::Tabulated(table) => {
                let (lo, hi) = (table[0].0, table[table.len() - 1].0);
                if u < lo || u > hi {
                    return Err(Error::Extrapolation { u, lo, hi });
                }
                interpolate(table, u)
            }
            Kind::Homotopy { base, t } => t * base.eval_checked(u)? + (1.0 - t) * (u - self.theta),
            Kind::Smoothed { base, n } => base.eval_checked(u)?.min(n * (u - self.theta)),
        })
    }

    /// Total evaluation for solver inner loops: any real `u`, with tables
    /// held constant beyond their end points.
    pub fn value(&self, u: f64) -> f64 {
        if !(u > self.theta) {
            return 0.0;
        }
        let u = u.min(1.0);
        match &self.kind {
            Kind::Heaviside => 1.0,
            Kind::Ramp => u - self.theta,
            Kind::Tabulated(table) => {
                let (lo, hi) = (table[0].0, table[table.len() - 1].0);
                interpolate(table, u.clamp(lo, hi))
            }
            Kind::Homotopy { base, t } => t * base.value(u) + (1.0 - t) * (u - self.theta),
            Kind::Smoothed { base, n } => base.value(u).min(n * (u - self.theta)),
        }
    }

    /// Whether `f` is continuous on [0, 1].
    pub fn is_continuous(&self) -> bool {
        match &self.kind {
            Kind::Heaviside => false,
            Kind::Ramp | Kind::Smoothed { .. } => true,
            Kind::Tabulated(_) => self.value(self.theta + 1e-13).abs() < 1e-9,
            Kind::Homotopy { base, t } => *t == 0.0 || base.is_continuous(),
        }
    }

    /// Fails when a tabulated component does not cover `[theta, 1]`.
    pub fn ensure_total(&self) -> Result<()> {
        match &self.kind {
            Kind::Tabulated(table) => {
                let (lo, hi) = (table[0].0, table[table.len() - 1].0);
                if lo > self.theta || hi < 1.0 {
                    let u = if lo > self.theta { self.theta } else { 1.0 };
                    return Err(Error::Extrapolation { u, lo, hi });
                }
                Ok(())
            }
            Kind::Homotopy { base, .. } | Kind::Smoothed { base, .. } => base.ensure_total(),
            _ => Ok(()),
        }
    }

    /// Points in `[theta, 1)` where `f` may fail to be smooth.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = vec![self.theta];
        match &self.kind {
            Kind::Tabulated(table) => k.extend(table.iter().map(|p| p.0)),
            Kind::Homotopy { base, .. } => k.extend(base.kinks()),
            Kind::Smoothed { base, n } => {
                k.extend(base.kinks());
                if matches!(base.kind, Kind::Heaviside) {
                    k.push(self.theta + 1.0 / n);
                }
            }
            _ => {}
        }
        k.retain(|&s| s >= self.theta && s < 1.0);
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// `Some(n)` for `smoothed(heaviside, n)`.
    pub fn smoothed_heaviside_n(&self) -> Option<f64> {
        match &self.kind {
            Kind::Smoothed { base, n } if matches!(base.kind, Kind::Heaviside) => Some(*n),
            _ => None,
        }
    }
}

fn interpolate(table: &[(f64, f64)], u: f64) -> f64 {
    let i = table.partition_point(|p| p.0 <= u);
    if i == 0 {
        return table[0].1;
    }
    if i >= table.len() {
        return table[table.len() - 1].1;
    }
    let (u0, f0) = table[i - 1];
    let (u1, f1) = table[i];
    f0 + (f1 - f0) * (u - u0) / (u1 - u0)
}

/// Nondecreasing minorant `h0 <= f` sampled on `grid` (which must span
/// [0, 1]), capped by the ramp so that `h0 = min(h, (u - theta)⁺)`.
///
/// On each node `h` is the smallest value of `f` at or beyond that node,
/// so plateau end points take the left-continuous value.
pub fn lower_envelope_h0(f: &IgnitionFunction, grid: &[f64]) -> Result<IgnitionFunction> {
    f.ensure_total()?;
    if grid.len() < 2 || grid[0] > 1e-12 || grid[grid.len() - 1] < 1.0 - 1e-12 {
        return Err(domain("grid", "must cover [0, 1]"));
    }
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(domain("grid", "must be sorted ascending"));
    }
    let theta = f.theta();
    let mut nodes: Vec<f64> = grid.to_vec();
    nodes.push(theta);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let mut h = vec![0.0; nodes.len()];
    let mut running = f64::INFINITY;
    for i in (0..nodes.len()).rev() {
        if nodes[i] <= theta {
            break;
        }
        running = running.min(f.value(nodes[i]));
        h[i] = running.min(nodes[i] - theta);
    }
    IgnitionFunction::tabulated(theta, nodes.into_iter().zip(h).collect())
}

/// Scalar estimates bounding the largest ε that admits a solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsilonBounds {
    pub eps0: f64,
    pub eps1: f64,
    /// Smallest zero of `g_ε` at the supremum.
    pub a_eps: f64,
    /// End of the positivity interval of `g_ε` starting at `a_eps`.
    pub b_eps: f64,
}

const SCAN: usize = 4096;

/// `ε⁰ = sup_{s in (0,1]} (1 - s) f(s) / s`, by a dense scan on `[theta, 1]`
/// with three rounds of ×16 local refinement and one-sided probes at kinks.
pub fn eps0_bound(f: &IgnitionFunction) -> f64 {
    let theta = f.theta();
    let phi = |s: f64| if s > 0.0 { (1.0 - s) * f.value(s) / s } else { 0.0 };
    let mut grid = linspace(theta, 1.0, SCAN);
    let mut best = (theta, 0.0);
    for _round in 0..4 {
        let h = grid[1] - grid[0];
        for &s in &grid {
            let v = phi(s);
            if v > best.1 {
                best = (s, v);
            }
        }
        let lo = (best.0 - h).max(theta);
        let hi = (best.0 + h).min(1.0);
        grid = linspace(lo, hi, 33);
    }
    for k in f.kinks() {
        for s in [k + 1e-13 * k.max(1.0), k - 1e-13 * k.max(1.0)] {
            if s > 0.0 && s <= 1.0 {
                best.1 = best.1.max(phi(s));
            }
        }
    }
    best.1
}

/// `a(ε)`, `b(ε)` and `G_ε(b(ε))` for a continuous `f`; `None` when
/// `g_ε <= 0` on the whole scan.
fn positivity(f: &IgnitionFunction, eps: f64) -> Option<(f64, f64, f64)> {
    let theta = f.theta();
    let g = |s: f64| (1.0 - s) * f.value(s) - eps * s;
    let mut grid = linspace(theta, 1.0, SCAN);
    grid.extend(f.kinks().iter().map(|k| k + 1e-13));
    grid.sort_by(f64::total_cmp);

    let first = grid.iter().position(|&s| g(s) > 0.0)?;
    let a = if first == 0 {
        grid[0]
    } else {
        bisect(g, grid[first - 1], grid[first], 1e-15).ok()?
    };
    let b = match grid[first..].iter().position(|&s| g(s) <= 0.0) {
        Some(k) => bisect(g, grid[first + k - 1], grid[first + k], 1e-15).ok()?,
        None => 1.0,
    };

    let mut cuts = vec![theta];
    cuts.extend(f.kinks().into_iter().filter(|&k| k > theta && k < b));
    cuts.push(b);
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        integral += adaptive_simpson(|s| (1.0 - s) * f.value(s), w[0], w[1], 1e-14);
    }
    Some((a, b, integral - 0.5 * eps * b * b))
}

fn eps1_continuous(f: &IgnitionFunction, eps0: f64, tol: f64) -> EpsilonBounds {
    let positive = |e: f64| positivity(f, e).is_some_and(|(_, _, big_g)| big_g > 0.0);
    let (mut lo, mut hi) = (0.0, eps0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if positive(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps1 = 0.5 * (lo + hi);
    let (a_eps, b_eps) = positivity(f, lo.max(1e-300)).map_or((f64::NAN, f64::NAN), |(a, b, _)| (a, b));
    EpsilonBounds { eps0, eps1, a_eps, b_eps }
}

/// Smoothing levels used to reach discontinuous nonlinearities.
pub const EPS1_SMOOTHING_LEVELS: [f64; 3] = [1e2, 1e3, 1e4];

/// ε⁰ together with `ε¹ = sup{ε : G_ε(b(ε)) > 0}`. Discontinuous `f` is
/// handled through `smoothed(f, n)` at [`EPS1_SMOOTHING_LEVELS`] and a
/// two-stage Richardson extrapolation in `1/n`.
pub fn eps1_bound(f: &IgnitionFunction) -> Result<EpsilonBounds> {
    f.ensure_total()?;
    let eps0 = eps0_bound(f);
    if !(eps0 > 0.0) {
        return Err(Error::UndefinedBound("f vanishes on [theta, 1]".into()));
    }
    const TOL: f64 = 1e-8;
    if f.is_continuous() {
        return Ok(eps1_continuous(f, eps0, TOL));
    }
    let levels = EPS1_SMOOTHING_LEVELS
        .iter()
        .map(|&n| {
            let fs = f.smoothed(n)?;
            Ok(eps1_continuous(&fs, eps0_bound(&fs), TOL))
        })
        .collect::<Result<Vec<_>>>()?;
    let e: Vec<f64> = levels.iter().map(|b| b.eps1).collect();
    let r1 = (10.0 * e[1] - e[0]) / 9.0;
    let r2 = (10.0 * e[2] - e[1]) / 9.0;
    let eps1 = (100.0 * r2 - r1) / 99.0;
    let finest = levels[2];
    Ok(EpsilonBounds {
        eps0,
        eps1,
        a_eps: finest.a_eps,
        b_eps: finest.b_eps,
    })
}

/// JSON form of a nonlinearity:
/// `{"kind": ..., "theta": ..., "n": ..., "table": [[u, f], ...], "base": {...}, "t": ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub kind: SpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<NonlinearitySpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Heaviside,
    Ramp,
    Tabulated,
    Smoothed,
    Homotopy,
}

impl NonlinearitySpec {
    pub fn simple(kind: SpecKind) -> Self {
        Self {
            kind,
            theta: None,
            n: None,
            table: None,
            base: None,
            t: None,
        }
    }

    /// Builds the function; `theta` here wins over `fallback_theta`.
    pub fn build(&self, fallback_theta: Option<f64>) -> Result<IgnitionFunction> {
        let theta = self
            .theta
            .or(fallback_theta)
            .ok_or_else(|| domain("nonlinearity.theta", "missing"))?;
        check_theta(theta).map_err(|_| domain("nonlinearity.theta", format!("{theta} is not in (0, 1)")))?;
        let base = |spec: &Self| -> Result<IgnitionFunction> {
            match &spec.base {
                Some(b) => b.build(Some(theta)),
                None => IgnitionFunction::heaviside(theta),
            }
        };
        match self.kind {
            SpecKind::Heaviside => IgnitionFunction::heaviside(theta),
            SpecKind::Ramp => IgnitionFunction::ramp(theta),
            SpecKind::Tabulated => {
                let table = self
                    .table
                    .as_ref()
                    .ok_or_else(|| domain("nonlinearity.table", "required for kind tabulated"))?;
                IgnitionFunction::tabulated(theta, table.iter().map(|p| (p[0], p[1])).collect())
                    .map_err(|e| domain("nonlinearity.table", e.to_string()))
            }
            SpecKind::Smoothed => {
                let n = self.n.ok_or_else(|| domain("nonlinearity.n", "required for kind smoothed"))?;
                base(self)?.smoothed(n as f64).map_err(|e| domain("nonlinearity.n", e.to_string()))
            }
            SpecKind::Homotopy => {
                let t = self.t.ok_or_else(|| domain("nonlinearity.t", "required for kind homotopy"))?;
                base(self)?.homotopy(t).map_err(|e| domain("nonlinearity.t", e.to_string()))
            }
        }
    }

    /// Serializable description of `f`.
    pub fn describe(f: &IgnitionFunction) -> Self {
        let mut spec = match f.kind() {
            Kind::Heaviside => Self::simple(SpecKind::Heaviside),
            Kind::Ramp => Self::simple(SpecKind::Ramp),
            Kind::Tabulated(t) => Self {
                table: Some(t.iter().map(|&(u, v)| [u, v]).collect()),
                ..Self::simple(SpecKind::Tabulated)
            },
            Kind::Smoothed { base, n } => Self {
                n: Some(*n as u64),
                base: Some(Box::new(Self::describe(base))),
                ..Self::simple(SpecKind::Smoothed)
            },
            Kind::Homotopy { base, t } => Self {
                t: Some(*t),
                base: Some(Box::new(Self::describe(base))),
                ..Self::simple(SpecKind::Homotopy)
            },
        };
        spec.theta = Some(f.theta());
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn evaluation_examples() {
        let h = IgnitionFunction::heaviside(0.5).unwrap();
        assert_eq!(h.eval(0.3).unwrap(), 0.0);
        assert_eq!(h.eval(0.5).unwrap(), 0.0);
        assert_eq!(h.eval(0.7).unwrap(), 1.0);
        assert_relative_eq!(h.smoothed(10.0).unwrap().eval(0.55).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(h.homotopy(0.5).unwrap().eval(0.7).unwrap(), 0.6, max_relative = 1e-12);
        let r = IgnitionFunction::ramp(0.5).unwrap();
        assert_eq!(r.eval(2.0).unwrap(), 0.5);
        assert!(h.eval(-0.1).is_err());
    }

    #[test]
    fn homotopy_endpoints() {
        let h = IgnitionFunction::heaviside(0.4).unwrap();
        let r = IgnitionFunction::ramp(0.4).unwrap();
        let h0 = h.homotopy(0.0).unwrap();
        let h1 = h.homotopy(1.0).unwrap();
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            assert_eq!(h0.value(u), r.value(u));
            assert_eq!(h1.value(u), h.value(u));
        }
        assert!(h.homotopy(1.5).is_err());
        assert!(h.homotopy(-0.1).is_err());
    }

    #[test]
    fn tabulated_extrapolation_is_an_error() {
        let f = IgnitionFunction::tabulated(0.5, vec![(0.5, 0.0), (0.8, 0.6)]).unwrap();
        assert_relative_eq!(f.eval(0.65).unwrap(), 0.3, max_relative = 1e-12);
        assert!(matches!(f.eval(0.9), Err(Error::Extrapolation { .. })));
        assert!(f.ensure_total().is_err());
        assert!(IgnitionFunction::tabulated(0.5, vec![(0.6, 0.0), (0.6, 1.0)]).is_err());
        assert!(IgnitionFunction::tabulated(0.5, vec![(0.6, -1.0), (0.7, 1.0)]).is_err());
    }

    /// Brute-force envelope: for every node, the infimum of f over all
    /// grid points at or beyond it, then capped by the ramp.
    fn envelope_oracle(f: &IgnitionFunction, grid: &[f64]) -> Vec<f64> {
        grid.iter()
            .map(|&u| {
                if u <= f.theta() {
                    return 0.0;
                }
                let inf = grid.iter().filter(|&&s| s >= u).map(|&s| f.value(s)).fold(f64::INFINITY, f64::min);
                inf.min(u - f.theta())
            })
            .collect()
    }

    #[test]
    fn envelope_of_heaviside_and_ramp() {
        let grid = linspace(0.0, 1.0, 201);
        let h = IgnitionFunction::heaviside(0.5).unwrap();
        let env = lower_envelope_h0(&h, &grid).unwrap();
        for (&u, want) in grid.iter().zip(envelope_oracle(&h, &grid)) {
            assert_relative_eq!(env.value(u), want, epsilon = 1e-15);
            assert_relative_eq!(env.value(u), (u - 0.5f64).clamp(0.0, 1.0), epsilon = 1e-15);
        }
        let r = IgnitionFunction::ramp(0.5).unwrap();
        let env = lower_envelope_h0(&r, &grid).unwrap();
        for &u in &grid {
            assert_relative_eq!(env.value(u), r.value(u), epsilon = 1e-15);
        }
        assert_eq!(env.value(0.5), 0.0);
    }

    #[test]
    fn envelope_of_non_monotone_table() {
        let f = IgnitionFunction::tabulated(0.3, vec![(0.0, 0.0), (0.3, 0.0), (0.5, 2.0), (0.7, 0.4), (1.0, 1.0)]).unwrap();
        let grid = linspace(0.0, 1.0, 101);
        let env = lower_envelope_h0(&f, &grid).unwrap();
        for (&u, want) in grid.iter().zip(envelope_oracle(&f, &grid)) {
            assert_relative_eq!(env.value(u), want, epsilon = 1e-12);
        }
        assert!(lower_envelope_h0(&f, &linspace(0.1, 1.0, 10)).is_err());
    }

    #[test]
    fn eps0_values() {
        for &theta in &[0.25, 0.5, 0.75] {
            let h = IgnitionFunction::heaviside(theta).unwrap();
            assert_relative_eq!(eps0_bound(&h), (1.0 - theta) / theta, max_relative = 1e-9);
        }
        // ramp: maximize (1-s)(s-theta)/s, stationary at s = sqrt(theta)
        let r = IgnitionFunction::ramp(0.5).unwrap();
        let brute = (1..1_000_000)
            .map(|i| {
                let s = i as f64 / 1e6;
                (1.0 - s) * (s - 0.5f64).max(0.0) / s
            })
            .fold(0.0, f64::max);
        let analytic = (1.0 - 0.5f64.sqrt()).powi(2);
        assert_relative_eq!(eps0_bound(&r), analytic, max_relative = 1e-10);
        assert_relative_eq!(brute, analytic, max_relative = 1e-9);
    }

    /// For the step function g_ε = 1 - s - ε s on (θ, 1), so b = 1/(1+ε)
    /// and G_ε(b) is explicit; bisect it directly.
    fn heaviside_eps1_oracle(theta: f64) -> f64 {
        let big_g = |e: f64| {
            let b = 1.0 / (1.0 + e);
            (b - theta) - 0.5 * (b * b - theta * theta) - 0.5 * e * b * b
        };
        bisect(big_g, 1e-9, (1.0 - theta) / theta - 1e-12, 1e-15).unwrap()
    }

    #[test]
    fn eps1_heaviside_matches_closed_form_limit() {
        for &theta in &[0.25, 0.5, 0.75] {
            let b = eps1_bound(&IgnitionFunction::heaviside(theta).unwrap()).unwrap();
            let oracle = heaviside_eps1_oracle(theta);
            assert_relative_eq!(oracle, (1.0 - theta).powi(2) / (theta * (2.0 - theta)), max_relative = 1e-9);
            assert!((b.eps1 - oracle).abs() < 1e-6, "theta {theta}: {} vs {}", b.eps1, oracle);
            assert!(b.eps1 <= b.eps0);
            assert!(b.a_eps > theta && b.a_eps < b.b_eps);
        }
    }

    #[test]
    fn eps1_ramp_below_eps0() {
        let b = eps1_bound(&IgnitionFunction::ramp(0.5).unwrap()).unwrap();
        assert!(b.eps1 > 0.0 && b.eps1 <= b.eps0);
        // G at the returned supremum is ~0 and positive just below it
        let (_, _, g_lo) = positivity(&IgnitionFunction::ramp(0.5).unwrap(), b.eps1 - 1e-6).unwrap();
        assert!(g_lo > 0.0);
    }

    #[test]
    fn eps1_undefined_for_vanishing_f() {
        let f = IgnitionFunction::tabulated(0.5, vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(eps1_bound(&f), Err(Error::UndefinedBound(_))));
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"smoothed","theta":0.5,"n":100}"#;
        let spec: NonlinearitySpec = serde_json::from_str(json).unwrap();
        let f = spec.build(None).unwrap();
        assert_eq!(f.smoothed_heaviside_n(), Some(100.0));
        assert_eq!(NonlinearitySpec::describe(&f).build(None).unwrap(), f);
        let bad: NonlinearitySpec = serde_json::from_str(r#"{"kind":"smoothed","theta":0.5}"#).unwrap();
        match bad.build(None) {
            Err(Error::Domain { field, .. }) => assert_eq!(field, "nonlinearity.n"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(serde_json::from_str::<NonlinearitySpec>(r#"{"kind":"cubic"}"#).is_err());
    }
}
