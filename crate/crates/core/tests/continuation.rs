use flameball::continuation::*;
use flameball::heaviside::{annulus_solve, ball_roots};
use flameball::nonlinearity::eps1_bound;
use flameball::IgnitionFunction;

const THETA: f64 = 0.5;

/// Independent root of `tanh(b)/b = 1 - theta` by plain bisection.
fn beta0_oracle(theta: f64) -> f64 {
    let h = |b: f64| b.tanh() / b - (1.0 - theta);
    let (mut lo, mut hi) = (1e-3, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn geom(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn ball_trace_respects_beta_bound_and_anchors_at_beta0() {
    let c = trace_ball(THETA, &geom(1e-10, 0.0115, 120)).unwrap();
    assert!(!c.is_empty());
    for p in &c.points {
        assert!(p.beta * p.eps.sqrt() <= 1.0 / THETA + 1e-12, "{p:?}");
        assert!(p.res_norm < POINT_RESIDUAL_TOL);
    }
    assert!(c.max_log_beta_step() <= MAX_LOG_BETA_STEP);
    // lower branch starts at the smallest eps
    let first = c.points[0];
    assert!((first.beta - beta0_oracle(THETA)).abs() < 1e-3, "{}", first.beta);
}

#[test]
fn composite_has_fold_in_window_and_valid_points() {
    let comp = heaviside_composite(THETA, 1e-4, 200).unwrap();
    let c = &comp.curve;
    let fold = c.fold.unwrap();
    assert!(fold.eps_star > 0.0 && fold.eps_star <= 0.125);
    assert!((fold.eps_star - 0.011504634368626).abs() < 1e-9);
    assert!(c.points.iter().all(|p| p.valid));
    assert!(c.points.iter().all(|p| p.beta * p.eps.sqrt() <= 2.0 + 1e-12));
    assert!(c.max_log_beta_step() <= MAX_LOG_BETA_STEP);
    assert!(c.stall.is_none());
    assert!(c.points.iter().any(|p| p.mode == Mode::Annulus));
    assert!((comp.summary.beta0 - beta0_oracle(THETA)).abs() < 1e-10);
}

#[test]
fn crossover_is_continuous() {
    for theta in [0.25, 0.5, 0.75] {
        let x = crossover(theta).unwrap();
        assert!(x.gap < 1e-6, "theta {theta}: gap {}", x.gap);
        assert!((x.eps_annulus - x.eps0).abs() < 1e-6 * x.eps0);
        assert!(x.tangent_ball.is_finite() && x.tangent_annulus.is_finite());
    }
}

#[test]
fn annulus_tail_approaches_a0() {
    let c = trace_annulus(THETA, 1e-4, 1e-3, &AnnulusTraceOptions::default()).unwrap();
    assert!(c.stall.is_none());
    let a0 = 0.79681213;
    let first = c.points.first().unwrap();
    let last = c.points.last().unwrap();
    assert!((first.eps - 1e-4).abs() < 1e-16 && (last.eps - 1e-3).abs() < 1e-15);
    let gap = |p: &BranchPoint| (p.beta * p.eps.sqrt() - a0).abs();
    assert!(gap(first) < gap(last));
    assert!(gap(first) < 0.05);
    for p in &c.points {
        assert!(p.valid && p.eta > 0.0 && p.eta < 1.0);
    }
}

#[test]
fn annulus_trace_rejects_ball_regime() {
    assert!(trace_annulus(THETA, 0.005, 0.01, &AnnulusTraceOptions::default()).is_err());
    assert!(trace_annulus(THETA, 1e-3, 1e-4, &AnnulusTraceOptions::default()).is_err());
}

#[test]
fn near_one_theta_still_yields_a_curve() {
    let eps_min = default_eps_min(0.99).unwrap();
    let comp = heaviside_composite(0.99, eps_min, 200).unwrap();
    assert!(!comp.curve.is_empty());
    assert!(comp.summary.eps_star > 0.0);
}

#[test]
fn smoothed_heaviside_overlays_composite() {
    let f = IgnitionFunction::heaviside(THETA).unwrap().smoothed(1e4).unwrap();
    let c = trace_general(&f, (1e-4, 0.05), &ArclengthOptions::default()).unwrap();
    assert!(c.stall.is_none());
    assert!(c.points.iter().all(|p| p.valid));
    let fold = c.fold.unwrap();
    let exact_star = 0.011504634368626;
    assert!(fold.eps_star <= eps1_bound(&f).unwrap().eps1);
    assert!((fold.eps_star - exact_star).abs() < 1e-5);
    // beta at fixed eps is ill-conditioned next to the fold; compare away from it
    for p in c.points.iter().filter(|p| (exact_star - p.eps) / exact_star > 0.02) {
        let exact = if p.eta > 0.0 {
            annulus_solve(p.eps, THETA, (p.beta, p.eta), None).unwrap().beta
        } else {
            let (lo, hi) = ball_roots(p.eps, THETA).unwrap().unwrap();
            if (lo.beta - p.beta).abs() < (hi.beta - p.beta).abs() {
                lo.beta
            } else {
                hi.beta
            }
        };
        assert!((p.beta - exact).abs() < 1e-2, "eps {} beta {} vs {}", p.eps, p.beta, exact);
    }
}

#[test]
fn ramp_curve_starts_at_logistic_solution() {
    let f = IgnitionFunction::ramp(THETA).unwrap();
    let opts = ArclengthOptions {
        max_points: 40,
        ..Default::default()
    };
    let c = trace_general(&f, (0.0, 0.01), &opts).unwrap();
    // frozen from the RK4 logistic oracle in the fixed-point tests
    assert!((c.points[0].beta - 6.156988991015657).abs() < 1e-8);
    let fold = c.fold.unwrap();
    assert!(fold.eps_star > 0.0 && fold.eps_star <= eps1_bound(&f).unwrap().eps1);
    assert!(c.max_log_beta_step() <= MAX_LOG_BETA_STEP);
    assert!(c.points.iter().all(|p| p.valid));
}

#[test]
fn general_trace_refuses_discontinuous_f() {
    let f = IgnitionFunction::heaviside(THETA).unwrap();
    assert!(trace_general(&f, (1e-4, 0.05), &ArclengthOptions::default()).is_err());
}
