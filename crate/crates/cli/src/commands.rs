//! One function per subcommand. Each returns the JSON printed on stdout
//! and the exit status; files go to `out_dir`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use flameball::continuation::{default_eps_min, heaviside_composite, Mode};
use flameball::fixedpoint::{fixed_point_profile, picard_solve, OperatorState, PicardOptions, RadialGrid};
use flameball::heaviside::{
    annulus_profile, annulus_solve, asymptotic_limits, ball_crossover_eps0, ball_fold, ball_profile, ball_roots, g1_residual, g2_residual,
};
use flameball::nonlinearity::{eps0_bound, eps1_bound, SpecKind};
use flameball::profile::radial_grid;
use flameball::shooting::{
    flux_identity_check, heaviside_seed, logistic_seed, solve_shooting, validity_checks_with_tol, Branch, ShootingConfig, ShootingSolution,
    ShootingState,
};
use flameball::{CheckSet, IgnitionFunction, NonlinearitySpec, RadialProfile};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{smoothed_heaviside, BranchChoice, RunConfig};
use crate::error::{lift, CliError, Status};
use crate::output::{ensure_dir, read_meta, sidecar_path, write_json, write_profile, ProfileMeta};

/// Flux-identity tolerance used by `validate` unless `--tol` is given.
pub const FLUX_TOL: f64 = 1e-6;

/// Nodes on `[0, 1]` and on `(1, 4]` for closed-form profiles.
const PROFILE_INNER: usize = 2000;
const PROFILE_OUTER: usize = 300;
const PROFILE_R_MAX: f64 = 4.0;

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&dir)?;
    Ok(dir)
}

fn check_status(checks: &CheckSet) -> Status {
    if checks.all_pass() {
        Status::Success
    } else {
        Status::ValidationFailed
    }
}

fn heaviside_spec(theta: f64) -> NonlinearitySpec {
    NonlinearitySpec {
        theta: Some(theta),
        ..NonlinearitySpec::simple(SpecKind::Heaviside)
    }
}

fn spec_of(f: &IgnitionFunction) -> NonlinearitySpec {
    NonlinearitySpec {
        theta: Some(f.theta()),
        ..NonlinearitySpec::describe(f)
    }
}

/// Composite Heaviside diagram (annulus branch, crossover, ball branches)
/// as `heaviside_curve.csv` plus `heaviside_summary.json`. With `eps`,
/// also the lower and upper profiles at that `eps`.
pub fn heaviside_trace(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let theta = cfg.theta();
    let eps_min = match cfg.eps_min {
        Some(e) => e,
        None => default_eps_min(theta).map_err(lift)?,
    };
    let samples = cfg.samples.unwrap_or(200);
    let started = Instant::now();
    let comp = heaviside_composite(theta, eps_min, samples).map_err(lift)?;
    let elapsed = started.elapsed().as_secs_f64();

    let dir = out_dir(cfg)?;
    let curve_path = dir.join("heaviside_curve.csv");
    let summary_path = dir.join("heaviside_summary.json");
    let mut buf = Vec::new();
    comp.curve.write_csv(&mut buf)?;
    std::fs::write(&curve_path, buf).map_err(|source| CliError::Output {
        path: curve_path.display().to_string(),
        source,
    })?;
    write_json(&summary_path, &comp.summary)?;
    let meta = json!({
        "command": "heaviside-trace",
        "version": env!("CARGO_PKG_VERSION"),
        "theta": theta,
        "eps_min": eps_min,
        "samples": samples,
        "points": comp.curve.len(),
        "config": cfg,
        "elapsed_seconds": elapsed,
    });
    write_json(&sidecar_path(&curve_path), &meta)?;
    let mut files = vec![curve_path, summary_path];

    if let Some(eps) = cfg.eps {
        files.extend(heaviside_profiles(theta, eps, &comp.curve, &dir)?);
    }

    let mut status = Status::Success;
    if comp.curve.points.iter().any(|p| !p.valid) {
        status = Status::ValidationFailed;
    }
    if comp.curve.stall.is_some() {
        status = status.and(Status::NotConverged);
    }
    let annulus = comp.curve.points.iter().filter(|p| p.mode == Mode::Annulus).count();
    Ok(Outcome {
        status,
        summary: json!({
            "summary": comp.summary,
            "points": comp.curve.len(),
            "annulus_points": annulus,
            "max_log_beta_step": comp.curve.max_log_beta_step(),
            "files": files,
        }),
        files,
    })
}

/// Lower ball profile and upper (ball or annulus) profile at `eps`.
fn heaviside_profiles(
    theta: f64,
    eps: f64,
    curve: &flameball::continuation::BifurcationCurve,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let (eps_star, _) = ball_fold(theta).map_err(lift)?;
    if !(eps > 0.0 && eps < eps_star) {
        return Err(CliError::config(
            "eps",
            format!("{eps} is not in (0, eps* = {eps_star}); no profiles there"),
        ));
    }
    let (lower, upper) = ball_roots(eps, theta)
        .map_err(lift)?
        .ok_or_else(|| CliError::NotConverged(format!("no ball roots at eps = {eps}")))?;
    let grid = radial_grid(PROFILE_INNER, PROFILE_R_MAX, PROFILE_OUTER);
    let spec = heaviside_spec(theta);
    let mut files = Vec::new();

    let p = ball_profile(eps, lower.beta, theta, &grid)?;
    let path = dir.join("heaviside_profile_lower.csv");
    write_profile(
        &path,
        &p,
        &ProfileMeta::new("heaviside-trace", theta, eps, lower.beta, spec.clone()),
    )?;
    files.push(path);

    let eps0 = ball_crossover_eps0(theta).map_err(lift)?;
    let path = dir.join("heaviside_profile_upper.csv");
    if eps >= eps0 {
        let p = ball_profile(eps, upper.beta, theta, &grid)?;
        write_profile(&path, &p, &ProfileMeta::new("heaviside-trace", theta, eps, upper.beta, spec))?;
    } else {
        let near = curve
            .points
            .iter()
            .filter(|p| p.mode == Mode::Annulus)
            .min_by(|a, b| (a.eps.ln() - eps.ln()).abs().total_cmp(&(b.eps.ln() - eps.ln()).abs()))
            .ok_or_else(|| CliError::NotConverged("annulus branch is empty".into()))?;
        let pt = annulus_solve(eps, theta, (near.beta, near.eta), None)?;
        let p = annulus_profile(&pt, &grid)?;
        write_profile(&path, &p, &ProfileMeta::new("heaviside-trace", theta, eps, pt.beta, spec))?;
    }
    files.push(path);
    Ok(files)
}

#[derive(Serialize)]
struct ShootSummary<'a> {
    seed: &'a str,
    state: ShootingState,
    report: &'a flameball::SolveReport,
    files: &'a [PathBuf],
}

/// Shooting solve with an automatic seed: the closed-form ball root for a
/// smoothed Heaviside, the exact `eps = 0` ramp solution otherwise
/// (continued in `eps` when `eps > 0`).
pub fn shoot(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = cfg.nonlinearity_or(smoothed_heaviside(10_000))?;
    let theta = f.theta();
    if !f.is_continuous() {
        return Err(CliError::config(
            "nonlinearity.kind",
            "a discontinuous f cannot be integrated; use {\"kind\": \"smoothed\", \"n\": 10000} \
             (or `heaviside-trace` for the exact step-function solutions)",
        ));
    }
    let eps = cfg.eps.unwrap_or(0.0);
    let eps0 = eps0_bound(&f);
    if eps > eps0 {
        return Err(CliError::Nonexistence { eps, eps0 });
    }
    let mut scfg = ShootingConfig::default();
    if let Some(tol) = cfg.tol {
        scfg.newton.tol = tol;
    }

    let started = Instant::now();
    let (seed, sol) = match cfg.seed {
        Some(s) => {
            let guess = ShootingState {
                u0: s.u0,
                v0: s.v0,
                beta: s.beta,
                eps,
                theta,
            };
            ("config", solve_shooting(&f, eps, theta, &guess, &scfg).map_err(lift)?)
        }
        None if f.smoothed_heaviside_n().is_some() => {
            let branch = match cfg.branch.unwrap_or(BranchChoice::Lower) {
                BranchChoice::Lower => Branch::Lower,
                BranchChoice::Upper => Branch::Upper,
            };
            let guess = heaviside_seed(eps, theta, branch)
                .map_err(lift)?
                .ok_or_else(|| CliError::NotConverged(format!("no closed-form ball root to seed from at eps = {eps}")))?;
            ("heaviside", solve_shooting(&f, eps, theta, &guess, &scfg).map_err(lift)?)
        }
        None => ("logistic", shoot_from_logistic(&f, eps, &scfg)?),
    };
    let elapsed = started.elapsed().as_secs_f64();

    let dir = out_dir(cfg)?;
    let profile_path = dir.join("shoot_profile.csv");
    let report_path = dir.join("shoot_report.json");
    let mut meta = ProfileMeta::new("shoot", theta, eps, sol.state.beta, spec_of(&f));
    meta.config = Some(cfg.clone());
    meta.elapsed_seconds = Some(elapsed);
    write_profile(&profile_path, &sol.profile, &meta)?;
    write_json(&report_path, &sol.report)?;
    let files = vec![profile_path, report_path];

    let status = if sol.report.converged {
        check_status(&sol.report.checks)
    } else {
        Status::NotConverged
    };
    let summary = serde_json::to_value(ShootSummary {
        seed,
        state: sol.state,
        report: &sol.report,
        files: &files,
    })
    .map_err(flameball::Error::from)?;
    Ok(Outcome { status, summary, files })
}

/// Largest `eps` increment when continuing from the `eps = 0` solution.
const EPS_STEP: f64 = 1e-4;

fn shoot_from_logistic(f: &IgnitionFunction, eps: f64, cfg: &ShootingConfig) -> Result<ShootingSolution, CliError> {
    let mut guess = logistic_seed(f.theta()).map_err(lift)?;
    let steps = ((eps / EPS_STEP).ceil() as usize).max(1);
    let mut last = None;
    for k in 1..=steps {
        let e = eps * k as f64 / steps as f64;
        guess.eps = e;
        let sol = solve_shooting(f, e, f.theta(), &guess, cfg).map_err(lift)?;
        if !sol.report.converged && k < steps {
            return Err(CliError::NotConverged(format!(
                "continuation from the eps = 0 solution stalled at eps = {e}"
            )));
        }
        guess = sol.state;
        last = Some(sol);
    }
    Ok(last.expect("at least one step"))
}

/// `a0`, `x0` with their brackets, equation residuals and bound checks.
pub fn asymptotics(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let theta = cfg.theta();
    let lim = asymptotic_limits(theta).map_err(lift)?;
    let lower = (1.0 - theta) / (2.0 * theta);
    let upper = 1.0 / theta - 1.0;
    let target = theta * (1.0 + lim.a0);
    let r2 = g2_residual(theta, lim.a0);
    let r1 = g1_residual(theta, lim.a0, lim.x0);
    let mut checks = CheckSet::new();
    checks.record("a0_lower_bound", lim.a0 >= lower);
    checks.record("a0_in_bracket", lim.a0 > lower && lim.a0 < upper);
    checks.record("a_equation_zero", r2.abs() < 1e-10);
    checks.record("x_equation_zero", r1.abs() < 1e-10);
    checks.record("x_equation_solvable", target > 0.5 && target < 1.0);
    let summary = json!({
        "theta": theta,
        "a0": lim.a0,
        "x0": lim.x0,
        "a0_bracket": [lower, upper],
        "a_equation_residual": r2,
        "x_equation_residual": r1,
        "x_equation_rhs": target,
        "checks": checks,
    });
    let files = write_optional(cfg, "asymptotics.json", &summary)?;
    Ok(Outcome {
        status: check_status(&checks),
        summary,
        files,
    })
}

/// `eps0` and `eps1` for the configured nonlinearity (default Heaviside).
pub fn eps_bounds(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = cfg.nonlinearity_or(NonlinearitySpec::simple(SpecKind::Heaviside))?;
    let b = eps1_bound(&f).map_err(lift)?;
    let mut checks = CheckSet::new();
    checks.record("eps1_le_eps0", b.eps1 <= b.eps0);
    let summary = json!({
        "theta": f.theta(),
        "nonlinearity": spec_of(&f),
        "eps0": b.eps0,
        "eps1": b.eps1,
        "a_eps": b.a_eps,
        "b_eps": b.b_eps,
        "checks": checks,
    });
    let files = write_optional(cfg, "eps_bounds.json", &summary)?;
    Ok(Outcome {
        status: check_status(&checks),
        summary,
        files,
    })
}

/// JSON-only commands write a file only when `out_dir` is set.
fn write_optional(cfg: &RunConfig, name: &str, value: &Value) -> Result<Vec<PathBuf>, CliError> {
    if cfg.out_dir.is_none() {
        return Ok(Vec::new());
    }
    let path = out_dir(cfg)?.join(name);
    write_json(&path, value)?;
    Ok(vec![path])
}

/// Relaxed Picard iteration of the fixed-point operator at `(eps, t)`
/// (default ramp, `t = 1`, 2048 intervals; coarser grids miss the 1e-6
/// flux tolerance).
pub fn fixed_point(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = cfg.nonlinearity_or(NonlinearitySpec::simple(SpecKind::Ramp))?;
    let theta = f.theta();
    let eps = cfg.eps.unwrap_or(0.0);
    let t = cfg.t.unwrap_or(1.0);
    let grid = RadialGrid::new(cfg.grid.unwrap_or(2048)).map_err(lift)?;
    let defaults = PicardOptions::default();
    let opts = PicardOptions {
        maxit: cfg.maxit.unwrap_or(defaults.maxit),
        tol: cfg.tol.unwrap_or(defaults.tol),
        omega: cfg.omega.unwrap_or(defaults.omega),
    };
    // the eigenvalue bound pi / sqrt(1 - theta) is a safe starting scale
    let beta0 = cfg.beta.unwrap_or(PI / (1.0 - theta).sqrt());
    let init = OperatorState::from_fn(&grid, theta, beta0, |r| theta + 0.6 * (1.0 - theta) * (1.0 - r * r)).map_err(lift)?;

    let started = Instant::now();
    let sol = picard_solve(eps, t, &f, &init, &grid, &opts).map_err(lift)?;
    let elapsed = started.elapsed().as_secs_f64();
    let profile = fixed_point_profile(
        &sol.state,
        &sol.v,
        sol.boundary_slope,
        eps,
        theta,
        &grid,
        PROFILE_R_MAX,
        PROFILE_OUTER,
    )?;

    let dir = out_dir(cfg)?;
    let profile_path = dir.join("fixed_point_profile.csv");
    let report_path = dir.join("fixed_point_report.json");
    let f_t = f.homotopy(t).map_err(lift)?;
    let mut meta = ProfileMeta::new("fixed-point", theta, eps, sol.state.beta_tilde, spec_of(&f_t));
    meta.bounds_tol = (1e3 * opts.tol).max(1e-12);
    meta.config = Some(cfg.clone());
    meta.elapsed_seconds = Some(elapsed);
    write_profile(&profile_path, &profile, &meta)?;
    write_json(&report_path, &sol.report)?;
    let files = vec![profile_path, report_path];

    let status = if sol.report.converged {
        check_status(&sol.report.checks)
    } else {
        Status::NotConverged
    };
    Ok(Outcome {
        status,
        summary: json!({
            "beta": sol.state.beta_tilde,
            "u0": sol.state.u_tilde[0] + theta,
            "v0": sol.v[0],
            "omega": sol.omega,
            "consistency": sol.consistency,
            "report": sol.report,
            "files": files,
        }),
        files,
    })
}

/// Re-checks a profile CSV. Parameters come from flags/config, falling
/// back to the `.meta.json` sidecar written next to it.
pub fn validate(cfg: &RunConfig, profile_path: &Path) -> Result<Outcome, CliError> {
    let profile = RadialProfile::load(profile_path).map_err(|source| CliError::Input {
        path: profile_path.display().to_string(),
        source,
    })?;
    let meta_path = sidecar_path(profile_path);
    let meta = if meta_path.exists() { Some(read_meta(&meta_path)?) } else { None };
    let from_meta = meta.as_ref().map(|m| RunConfig {
        theta: Some(m.theta),
        eps: Some(m.eps),
        beta: Some(m.beta),
        nonlinearity: Some(m.nonlinearity.clone()),
        ..Default::default()
    });
    let eff = from_meta.unwrap_or_default().merged(cfg.clone());
    let missing = |field: &str| CliError::config(field, "required: pass it as a flag or keep the .meta.json sidecar");
    let beta = eff.beta.ok_or_else(|| missing("beta"))?;
    let eps = eff.eps.ok_or_else(|| missing("eps"))?;
    if eff.theta.is_none() && eff.nonlinearity.as_ref().and_then(|s| s.theta).is_none() {
        return Err(missing("theta"));
    }
    let spec = eff.nonlinearity.clone().ok_or_else(|| missing("nonlinearity"))?;
    let f = eff.nonlinearity_or(spec)?;
    let theta = f.theta();
    let bounds_tol = meta.as_ref().map_or(1e-12, |m| m.bounds_tol);
    let flux_tol = cfg.tol.unwrap_or(FLUX_TOL);

    let mut checks = validity_checks_with_tol(&profile, theta, eps, beta, bounds_tol);
    let flux = flux_identity_check(&profile, &f, beta)?;
    checks.record("flux_identity", flux.abs() < flux_tol);
    Ok(Outcome {
        status: check_status(&checks),
        summary: json!({
            "profile": profile_path,
            "nodes": profile.len(),
            "theta": theta,
            "eps": eps,
            "beta": beta,
            "flux_residual": flux,
            "flux_tol": flux_tol,
            "bounds_tol": bounds_tol,
            "passed": checks.all_pass(),
            "checks": checks,
        }),
        files: Vec::new(),
    })
}
