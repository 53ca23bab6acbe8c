//! Closed-form solutions for the step nonlinearity `f = 1{u > theta}`.
//!
//! Two solution shapes exist. In *ball mode* the reaction region is the
//! whole unit ball; in *annulus mode* it is the shell `(eta, 1)` around a
//! core where `u < theta` and `v` is constant.

mod annulus;
mod asymptotics;
mod ball;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::fmt17;

pub use annulus::{
    annulus_delta, annulus_gamma, annulus_profile, annulus_residual, annulus_solve, annulus_solve_at_eta, annulus_validity,
    AnnulusBranchPoint, AnnulusResidual,
};
pub use asymptotics::{asymptotic_limits, g1_residual, g2_residual, AsymptoticLimits};
pub use ball::{
    ball_center_u, ball_crossover_eps0, ball_eps_of_beta, ball_fold, ball_g, ball_profile, ball_roots, ball_validity, beta_one, beta_zero,
    exterior_profile, heaviside_eps0, BallBranchPoint, ExteriorValues, Validity,
};

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(crate::error::domain("theta", format!("{theta} is not in (0, 1)")))
    }
}

/// Closed forms are written for `eps != 1`; `eps >= 1` is rejected.
pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0) {
        return Err(crate::error::domain("eps", format!("{eps} must be >= 0")));
    }
    if eps >= 1.0 {
        return Err(Error::SingularParameter(format!("eps = {eps}: closed forms require eps < 1")));
    }
    Ok(())
}

/// One CSV row describing a branch point of either mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchRow {
    pub mode: &'static str,
    pub theta: f64,
    pub eps: f64,
    pub beta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub res1: f64,
    pub res2: f64,
}

impl From<&BallBranchPoint> for BranchRow {
    fn from(p: &BallBranchPoint) -> Self {
        Self {
            mode: "ball",
            theta: p.theta,
            eps: p.eps,
            beta: p.beta,
            eta: 0.0,
            gamma: p.gamma,
            delta: p.center_v(),
            res1: p.residual(),
            res2: 0.0,
        }
    }
}

impl From<&AnnulusBranchPoint> for BranchRow {
    fn from(p: &AnnulusBranchPoint) -> Self {
        Self {
            mode: "annulus",
            theta: p.theta,
            eps: p.eps,
            beta: p.beta,
            eta: p.eta,
            gamma: p.gamma,
            delta: p.delta,
            res1: p.res1,
            res2: p.res2,
        }
    }
}

/// Writes `mode,theta,eps,beta,eta,gamma,delta,res1,res2` rows.
pub fn write_branch_csv<W: Write>(rows: &[BranchRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    wr.write_record(["mode", "theta", "eps", "beta", "eta", "gamma", "delta", "res1", "res2"])
        .map_err(io)?;
    for r in rows {
        let nums = [r.theta, r.eps, r.beta, r.eta, r.gamma, r.delta, r.res1, r.res2].map(fmt17);
        let mut rec = vec![r.mode.to_string()];
        rec.extend(nums);
        wr.write_record(&rec).map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}
