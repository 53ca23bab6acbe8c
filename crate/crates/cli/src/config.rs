//! Run configuration: one JSON file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use flameball::nonlinearity::SpecKind;
use flameball::{IgnitionFunction, NonlinearitySpec};
use serde::{Deserialize, Serialize};

use crate::error::{lift, CliError};

/// Which closed-form ball root seeds a smoothed-Heaviside shot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BranchChoice {
    Lower,
    Upper,
}

/// Explicit shooting start `(u0, v0, beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub u0: f64,
    pub v0: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_max: Option<f64>,
    /// Solver tolerance; for `validate`, the flux-identity tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Ball-branch samples for `heaviside-trace`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Grid intervals for `fixed-point`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Homotopy parameter for `fixed-point`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maxit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Initial `beta` for `fixed-point`; the profile's `beta` for `validate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedSpec>,
}

pub const DEFAULT_THETA: f64 = 0.5;

impl RunConfig {
    /// Reads a JSON config; errors name the offending field path.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "config".to_string() } else { path };
            CliError::config(field, e.into_inner().to_string())
        })
    }

    /// Fields set in `flags` replace those in `self`. A `theta` flag also
    /// replaces any `theta` written inside the nonlinearity.
    pub fn merged(self, flags: RunConfig) -> RunConfig {
        let mut nonlinearity = flags.nonlinearity.or(self.nonlinearity);
        if flags.theta.is_some() {
            if let Some(spec) = nonlinearity.as_mut() {
                clear_theta(spec);
            }
        }
        RunConfig {
            nonlinearity,
            theta: flags.theta.or(self.theta),
            eps: flags.eps.or(self.eps),
            eps_min: flags.eps_min.or(self.eps_min),
            eps_max: flags.eps_max.or(self.eps_max),
            tol: flags.tol.or(self.tol),
            out_dir: flags.out_dir.or(self.out_dir),
            samples: flags.samples.or(self.samples),
            grid: flags.grid.or(self.grid),
            t: flags.t.or(self.t),
            maxit: flags.maxit.or(self.maxit),
            omega: flags.omega.or(self.omega),
            beta: flags.beta.or(self.beta),
            branch: flags.branch.or(self.branch),
            seed: flags.seed.or(self.seed),
        }
    }

    /// Range and sign checks shared by all subcommands.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, v: f64, want: &str| Err(CliError::config(field, format!("{v} {want}")));
        if let Some(th) = self.theta {
            if !(th > 0.0 && th < 1.0) {
                return bad("theta", th, "is not in (0, 1)");
            }
        }
        if let Some(e) = self.eps {
            if !(e >= 0.0 && e.is_finite()) {
                return bad("eps", e, "must be finite and >= 0");
            }
        }
        if let Some(e) = self.eps_min {
            if !(e > 0.0 && e.is_finite()) {
                return bad("eps_min", e, "must be finite and > 0");
            }
        }
        if let Some(e) = self.eps_max {
            if !(e > 0.0 && e.is_finite()) {
                return bad("eps_max", e, "must be finite and > 0");
            }
            if let Some(lo) = self.eps_min {
                if e <= lo {
                    return bad("eps_max", e, &format!("must exceed eps_min = {lo}"));
                }
            }
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return bad("tol", tol, "must be finite and > 0");
            }
        }
        if let Some(s) = self.samples {
            if s < 5 {
                return bad("samples", s as f64, "is too few (need >= 5)");
            }
        }
        if let Some(n) = self.grid {
            if n < 4 {
                return bad("grid", n as f64, "is too coarse (need >= 4 intervals)");
            }
        }
        if let Some(t) = self.t {
            if !(0.0..=1.0).contains(&t) {
                return bad("t", t, "is not in [0, 1]");
            }
        }
        if let Some(w) = self.omega {
            if !(w > 0.0 && w <= 1.0) {
                return bad("omega", w, "is not in (0, 1]");
            }
        }
        if let Some(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return bad("beta", b, "must be finite and > 0");
            }
        }
        if let Some(s) = self.seed {
            if !(s.beta > 0.0 && (0.0..=1.0).contains(&s.u0) && (0.0..=1.0).contains(&s.v0)) {
                return Err(CliError::config("seed", "needs u0, v0 in [0, 1] and beta > 0"));
            }
        }
        Ok(())
    }

    /// `theta` flag or field, else the nonlinearity's own, else 0.5.
    pub fn theta(&self) -> f64 {
        self.theta
            .or_else(|| self.nonlinearity.as_ref().and_then(|s| s.theta))
            .unwrap_or(DEFAULT_THETA)
    }

    /// Builds the configured nonlinearity, or `default` when none is set.
    pub fn nonlinearity_or(&self, default: NonlinearitySpec) -> Result<IgnitionFunction, CliError> {
        let spec = self.nonlinearity.clone().unwrap_or(default);
        if let (Some(a), Some(b)) = (self.theta, spec.theta) {
            if a != b {
                return Err(CliError::config("nonlinearity.theta", format!("{b} disagrees with theta = {a}")));
            }
        }
        spec.build(Some(self.theta())).map_err(lift)
    }
}

fn clear_theta(spec: &mut NonlinearitySpec) {
    spec.theta = None;
    if let Some(b) = spec.base.as_mut() {
        clear_theta(b);
    }
}

/// `smoothed(heaviside, n)`.
pub fn smoothed_heaviside(n: u64) -> NonlinearitySpec {
    NonlinearitySpec {
        n: Some(n),
        base: Some(Box::new(NonlinearitySpec::simple(SpecKind::Heaviside))),
        ..NonlinearitySpec::simple(SpecKind::Smoothed)
    }
}

/// Parses a `--nonlinearity` value: a kind name (`heaviside`, `ramp`,
/// `smoothed`, the last with `n`) or an inline JSON object.
pub fn parse_nonlinearity(arg: &str, n: Option<u64>) -> Result<NonlinearitySpec, CliError> {
    let text = arg.trim();
    if text.starts_with('{') {
        let de = &mut serde_json::Deserializer::from_str(text);
        return serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." {
                "nonlinearity".to_string()
            } else {
                format!("nonlinearity.{path}")
            };
            CliError::config(field, e.into_inner().to_string())
        });
    }
    match text {
        "heaviside" => Ok(NonlinearitySpec::simple(SpecKind::Heaviside)),
        "ramp" => Ok(NonlinearitySpec::simple(SpecKind::Ramp)),
        "smoothed" => Ok(smoothed_heaviside(n.unwrap_or(10_000))),
        other => Err(CliError::config(
            "nonlinearity",
            format!("unknown kind {other:?} (heaviside, ramp, smoothed, or a JSON object)"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file = RunConfig::parse(r#"{"theta": 0.3, "eps": 0.01, "nonlinearity": {"kind": "ramp", "theta": 0.3}}"#).unwrap();
        let flags = RunConfig {
            theta: Some(0.5),
            ..Default::default()
        };
        let cfg = file.merged(flags);
        assert_eq!(cfg.theta, Some(0.5));
        assert_eq!(cfg.eps, Some(0.01));
        assert_eq!(cfg.nonlinearity.as_ref().unwrap().theta, None);
        assert_eq!(cfg.nonlinearity_or(smoothed_heaviside(10)).unwrap().theta(), 0.5);
    }

    #[test]
    fn errors_carry_field_paths() {
        let err = RunConfig::parse(r#"{"nonlinearity": {"kind": "cubic"}}"#).unwrap_err();
        assert!(
            matches!(&err, CliError::Config { field, .. } if field == "nonlinearity.kind"),
            "{err}"
        );
        let err = RunConfig::parse(r#"{"thetta": 0.5}"#).unwrap_err();
        assert!(err.to_string().contains("thetta"));
        let cfg = RunConfig {
            theta: Some(1.5),
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(CliError::Config { field, .. }) if field == "theta"));
        let cfg = RunConfig::parse(r#"{"nonlinearity": {"kind": "smoothed"}}"#).unwrap();
        let err = cfg.nonlinearity_or(smoothed_heaviside(10)).unwrap_err();
        assert!(matches!(err, CliError::Config { field, .. } if field == "nonlinearity.n"));
    }

    #[test]
    fn conflicting_thetas_are_rejected() {
        let cfg = RunConfig::parse(r#"{"theta": 0.4, "nonlinearity": {"kind": "ramp", "theta": 0.6}}"#).unwrap();
        let err = cfg.nonlinearity_or(smoothed_heaviside(10)).unwrap_err();
        assert!(matches!(err, CliError::Config { field, .. } if field == "nonlinearity.theta"));
    }

    #[test]
    fn nonlinearity_flag_forms() {
        assert_eq!(parse_nonlinearity("ramp", None).unwrap().kind, SpecKind::Ramp);
        assert_eq!(parse_nonlinearity("smoothed", Some(100)).unwrap().n, Some(100));
        let s = parse_nonlinearity(r#"{"kind": "heaviside", "theta": 0.25}"#, None).unwrap();
        assert_eq!(s.theta, Some(0.25));
        assert!(parse_nonlinearity("cubic", None).is_err());
    }
}
