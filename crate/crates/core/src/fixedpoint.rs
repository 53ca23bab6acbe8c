//! The operator `T_{ε,t}(ũ, β̃) = (u, β)` on the unit ball and a relaxed
//! Picard iteration built on it.
//!
//! `ũ` stands for `u - theta` and vanishes at `r = 1`. One application
//! solves a linear Robin problem for `v`, updates `β` explicitly so that
//! `u'(1) = -theta(1 + sqrt(ε) β̃)` is compatible, and solves a linear
//! Dirichlet problem for the new `u`.
//!
//! The discretization is vertex-centred finite volumes on a uniform grid:
//! node `i` owns the shell between `r_{i-1/2}` and `r_{i+1/2}`, the last
//! node a half shell ending at `r = 1`. All ball integrals use the same
//! shell volumes, so the discrete flux balances hold exactly.

use crate::error::{domain, Result};
use crate::heaviside::exterior_profile;
use crate::nonlinearity::IgnitionFunction;
use crate::numerics::hyper;
use crate::numerics::tridiag::solve_tridiagonal;
use crate::profile::{PieceTag, RadialProfile};
use crate::report::{CheckSet, SolveReport};
use crate::shooting::{flux_identity_check, validity_checks_with_tol};

pub use crate::numerics::hyper::z_kernel;

/// Uniform radial grid on `[0, 1]` with shell volumes `∫ r² dr`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    volumes: Vec<f64>,
    /// `r²` at the face between node `i` and `i + 1`.
    faces: Vec<f64>,
}

impl RadialGrid {
    /// Grid with `n` intervals (`n + 1` nodes).
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(domain("grid", format!("{n} intervals is too coarse (need >= 4)")));
        }
        let h = 1.0 / n as f64;
        let nodes: Vec<f64> = (0..=n).map(|i| if i == n { 1.0 } else { i as f64 * h }).collect();
        let half = |i: usize| (i as f64 + 0.5) * h;
        let faces: Vec<f64> = (0..n).map(|i| half(i).powi(2)).collect();
        let volumes = (0..=n)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { half(i - 1) };
                let hi = if i == n { 1.0 } else { half(i) };
                (hi.powi(3) - lo.powi(3)) / 3.0
            })
            .collect();
        Ok(Self {
            n,
            h,
            nodes,
            volumes,
            faces,
        })
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Shell volumes; they sum to 1/3.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// `∫₀¹ r² g dr` with the shell volumes as weights.
    pub fn integrate(&self, g: impl Fn(usize) -> f64) -> f64 {
        self.volumes.iter().enumerate().map(|(i, w)| w * g(i)).sum()
    }

    /// Discrete Laplacian at interior nodes and the centre (`n` entries;
    /// the boundary node is left out).
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let out = self.faces[i] * (u[i + 1] - u[i]);
                let inn = if i == 0 { 0.0 } else { self.faces[i - 1] * (u[i] - u[i - 1]) };
                (out - inn) / (self.h * self.volumes[i])
            })
            .collect()
    }
}

/// Fixed-point iterate `(ũ, β̃)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorState {
    pub u_tilde: Vec<f64>,
    pub beta_tilde: f64,
}

impl OperatorState {
    pub fn new(u_tilde: Vec<f64>, beta_tilde: f64) -> Result<Self> {
        if u_tilde.last() != Some(&0.0) {
            return Err(domain("u_tilde", "must end with u_tilde(1) = 0"));
        }
        if !(beta_tilde >= 0.0 && beta_tilde.is_finite()) {
            return Err(domain("beta_tilde", format!("{beta_tilde} must be finite and >= 0")));
        }
        if u_tilde.iter().any(|x| !x.is_finite()) {
            return Err(domain("u_tilde", "non-finite sample"));
        }
        Ok(Self { u_tilde, beta_tilde })
    }

    /// Samples `g(r) - theta` on the grid, forcing the end value to 0.
    pub fn from_fn(grid: &RadialGrid, theta: f64, beta: f64, g: impl Fn(f64) -> f64) -> Result<Self> {
        let mut u: Vec<f64> = grid.nodes().iter().map(|&r| g(r) - theta).collect();
        *u.last_mut().expect("nonempty grid") = 0.0;
        Self::new(u, beta)
    }

    fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        if self.u_tilde.len() != grid.intervals() + 1 {
            return Err(domain(
                "u_tilde",
                format!("{} samples for a grid of {} nodes", self.u_tilde.len(), grid.intervals() + 1),
            ));
        }
        Ok(())
    }
}

fn reaction(f_t: &IgnitionFunction, u_tilde: &[f64]) -> Vec<f64> {
    let theta = f_t.theta();
    u_tilde.iter().map(|&w| f_t.value(w + theta)).collect()
}

/// `Δv = β̃² c v` on the ball, `v'(0) = 0`, `v(1) + v'(1) = 1`.
pub(crate) fn solve_v_coeff(beta_tilde: f64, c: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    let n = grid.n;
    let b2 = beta_tilde * beta_tilde;
    let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
    for i in 0..=n {
        let a_in = if i == 0 { 0.0 } else { grid.faces[i - 1] / grid.h };
        let a_out = if i == n { 0.0 } else { grid.faces[i] / grid.h };
        lo[i] = a_in;
        up[i] = a_out;
        di[i] = -(a_in + a_out) - b2 * c[i] * grid.volumes[i];
    }
    // Robin face at r = 1 carries flux 1 - v_n
    di[n] -= 1.0;
    rhs[n] = -1.0;
    solve_tridiagonal(&lo, &di, &up, &rhs)
}

/// Solves the `v` problem for the reaction `f_t(ũ + theta)`.
pub fn solve_v_robin(f_t: &IgnitionFunction, beta_tilde: f64, u_tilde: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    if u_tilde.len() != grid.n + 1 {
        return Err(domain("u_tilde", "length does not match grid"));
    }
    solve_v_coeff(beta_tilde, &reaction(f_t, u_tilde), grid)
}

/// Explicit update
/// `β² = [θ(1+k) + β̃² ∫ r²(εθ+1) Z_k] / ∫ r² (v f_t + 1) Z_k` with `k = sqrt(ε) β̃`.
pub fn beta_update(
    v: &[f64],
    f_t: &IgnitionFunction,
    u_tilde: &[f64],
    beta_tilde: f64,
    eps: f64,
    theta: f64,
    grid: &RadialGrid,
) -> Result<f64> {
    if v.len() != grid.n + 1 || u_tilde.len() != grid.n + 1 {
        return Err(domain("v", "length does not match grid"));
    }
    let k = eps.sqrt() * beta_tilde;
    let z: Vec<f64> = grid.nodes.iter().map(|&r| hyper::z_kernel(k, r)).collect();
    let c = reaction(f_t, u_tilde);
    let zint = grid.integrate(|i| z[i]);
    let num = theta * (1.0 + k) + beta_tilde * beta_tilde * (eps * theta + 1.0) * zint;
    let den = grid.integrate(|i| (v[i] * c[i] + 1.0) * z[i]);
    Ok(num / den)
}

/// New `u` with its achieved slope at `r = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ULinear {
    pub u: Vec<f64>,
    /// `u'(1)` from the discrete flux balance of the boundary half shell.
    pub boundary_slope: f64,
    /// `u'(1) + theta(1 + sqrt(ε) β̃)`.
    pub consistency: f64,
}

/// `-Δu + εβ̃² u = β² v f_t - εβ̃² θ + β² - β̃²` with `u(1) = 0`.
#[allow(clippy::too_many_arguments)]
pub fn solve_u_linear(
    v: &[f64],
    f_t: &IgnitionFunction,
    u_tilde: &[f64],
    beta_tilde: f64,
    beta_sq: f64,
    eps: f64,
    theta: f64,
    grid: &RadialGrid,
) -> Result<ULinear> {
    let n = grid.n;
    if v.len() != n + 1 || u_tilde.len() != n + 1 {
        return Err(domain("v", "length does not match grid"));
    }
    let bt2 = beta_tilde * beta_tilde;
    let c = reaction(f_t, u_tilde);
    let source: Vec<f64> = (0..=n).map(|i| beta_sq * v[i] * c[i] - eps * bt2 * theta + beta_sq - bt2).collect();
    let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
    for i in 0..n {
        let a_in = if i == 0 { 0.0 } else { grid.faces[i - 1] / grid.h };
        let a_out = grid.faces[i] / grid.h;
        lo[i] = -a_in;
        up[i] = -a_out;
        di[i] = a_in + a_out + eps * bt2 * grid.volumes[i];
        rhs[i] = source[i] * grid.volumes[i];
    }
    di[n] = 1.0;
    lo[n] = 0.0;
    rhs[n] = 0.0;
    let u = solve_tridiagonal(&lo, &di, &up, &rhs)?;
    // boundary half shell: r²u'(1) - face flux = V_n Δu_n, Δu_n = εβ̃²u_n - source_n
    let inner_flux = grid.faces[n - 1] * (u[n] - u[n - 1]) / grid.h;
    let boundary_slope = inner_flux + grid.volumes[n] * (eps * bt2 * u[n] - source[n]);
    let consistency = boundary_slope + theta * (1.0 + eps.sqrt() * beta_tilde);
    Ok(ULinear {
        u,
        boundary_slope,
        consistency,
    })
}

/// Everything produced by one application of `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TOutput {
    pub state: OperatorState,
    pub v: Vec<f64>,
    pub boundary_slope: f64,
    pub consistency: f64,
}

/// `T_{ε,t}` for `f_t = t f + (1 - t)(u - theta)⁺`.
pub fn apply_t(state: &OperatorState, eps: f64, t: f64, f: &IgnitionFunction, grid: &RadialGrid) -> Result<TOutput> {
    state.check_grid(grid)?;
    if !(eps >= 0.0) {
        return Err(domain("eps", format!("{eps} must be >= 0")));
    }
    let f_t = f.homotopy(t)?;
    let theta = f.theta();
    let bt = state.beta_tilde;
    let v = solve_v_robin(&f_t, bt, &state.u_tilde, grid)?;
    let beta_sq = beta_update(&v, &f_t, &state.u_tilde, bt, eps, theta, grid)?;
    let ul = solve_u_linear(&v, &f_t, &state.u_tilde, bt, beta_sq, eps, theta, grid)?;
    Ok(TOutput {
        state: OperatorState {
            u_tilde: ul.u,
            beta_tilde: beta_sq.sqrt(),
        },
        v,
        boundary_slope: ul.boundary_slope,
        consistency: ul.consistency,
    })
}

#[derive(Clone, Debug)]
pub struct PicardOptions {
    pub maxit: usize,
    /// Threshold on `max|Δũ| + |Δβ|` between successive iterates.
    pub tol: f64,
    /// Initial relaxation; halved when the increments blow up.
    pub omega: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            maxit: 20_000,
            tol: 1e-14,
            omega: 0.5,
        }
    }
}

/// Result of [`picard_solve`]: final iterate plus the last `T` output.
#[derive(Clone, Debug)]
pub struct PicardSolution {
    pub state: OperatorState,
    pub v: Vec<f64>,
    pub boundary_slope: f64,
    pub consistency: f64,
    pub omega: f64,
    pub report: SolveReport,
}

/// Relaxed iteration `x <- (1 - ω) x + ω T(x)`. Divergence is reported,
/// not raised.
pub fn picard_solve(
    eps: f64,
    t: f64,
    f: &IgnitionFunction,
    init: &OperatorState,
    grid: &RadialGrid,
    opts: &PicardOptions,
) -> Result<PicardSolution> {
    init.check_grid(grid)?;
    let mut state = init.clone();
    let mut omega = opts.omega;
    let mut best = (f64::INFINITY, state.clone());
    let mut history = Vec::new();
    let stride = (opts.maxit / 1000).max(1);
    let mut last = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut inc = f64::INFINITY;

    while iterations < opts.maxit {
        iterations += 1;
        let out = apply_t(&state, eps, t, f, grid)?;
        inc = out
            .state
            .u_tilde
            .iter()
            .zip(&state.u_tilde)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            + (out.state.beta_tilde - state.beta_tilde).abs();
        if iterations % stride == 0 || inc < opts.tol {
            history.push(inc);
        }
        if !inc.is_finite() || inc > 1e3 * best.0.max(opts.tol) {
            omega *= 0.5;
            if omega < 1e-4 || !best.0.is_finite() {
                last = Some(out);
                break;
            }
            state = best.1.clone();
            continue;
        }
        if inc < best.0 {
            best = (inc, state.clone());
        }
        if inc < opts.tol {
            state = out.state.clone();
            last = Some(out);
            converged = true;
            break;
        }
        for (s, o) in state.u_tilde.iter_mut().zip(&out.state.u_tilde) {
            *s = (1.0 - omega) * *s + omega * o;
        }
        state.beta_tilde = (1.0 - omega) * state.beta_tilde + omega * out.state.beta_tilde;
        last = Some(out);
    }

    let (v, boundary_slope, consistency) = match &last {
        Some(o) => (o.v.clone(), o.boundary_slope, o.consistency),
        None => (vec![], f64::NAN, f64::NAN),
    };
    let mut checks = CheckSet::new();
    if !v.is_empty() {
        let profile = fixed_point_profile(&state, &v, boundary_slope, eps, f.theta(), grid, 3.0, 200)?;
        // a slowly contracting iteration stops well short of the fixed point
        let slack = (1e3 * opts.tol).max(1e-12);
        checks = validity_checks_with_tol(&profile, f.theta(), eps, state.beta_tilde, slack);
        let f_t = f.homotopy(t)?;
        if f_t.is_continuous() {
            let flux = flux_identity_check(&profile, &f_t, state.beta_tilde)?;
            checks.record("flux_identity", flux.abs() < 1e-6);
        }
    }
    Ok(PicardSolution {
        report: SolveReport {
            converged,
            iterations: if opts.maxit == 0 { 0 } else { iterations },
            residual_norm: inc,
            checks,
            residual_history: history,
        },
        state,
        v,
        boundary_slope,
        consistency,
        omega,
    })
}

/// Full profile from a fixed point: `u = ũ + theta`, the solved `v`,
/// difference-quotient slopes, and the explicit exterior up to `r_max`.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_profile(
    state: &OperatorState,
    v: &[f64],
    boundary_slope: f64,
    eps: f64,
    theta: f64,
    grid: &RadialGrid,
    r_max: f64,
    outer_intervals: usize,
) -> Result<RadialProfile> {
    state.check_grid(grid)?;
    let n = grid.n;
    let h = grid.h;
    let u: Vec<f64> = state.u_tilde.iter().map(|w| w + theta).collect();
    let slope = |y: &[f64], i: usize| (y[i + 1] - y[i - 1]) / (2.0 * h);
    let mut du: Vec<f64> = (0..=n).map(|i| if i == 0 || i == n { 0.0 } else { slope(&u, i) }).collect();
    let mut dv: Vec<f64> = (0..=n).map(|i| if i == 0 || i == n { 0.0 } else { slope(v, i) }).collect();
    du[n] = boundary_slope;
    dv[n] = 1.0 - v[n];
    let mut r = grid.nodes.clone();
    let mut uu = u;
    let mut vv = v.to_vec();
    let mut tags = vec![PieceTag::Discrete; n + 1];
    let gamma = v[n];
    for k in 1..=outer_intervals {
        let x = 1.0 + (r_max - 1.0) * k as f64 / outer_intervals as f64;
        let e = exterior_profile(theta, eps, state.beta_tilde, gamma, x)?;
        r.push(x);
        uu.push(e.u);
        vv.push(e.v);
        du.push(e.du);
        dv.push(e.dv);
        tags.push(PieceTag::Exterior);
    }
    RadialProfile::new(r, uu, vv, du, dv, tags)
}
