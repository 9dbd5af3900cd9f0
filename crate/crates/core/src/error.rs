use thiserror::Error;

use crate::factors::WeakTelemetry;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("enumeration budget exceeded while {what}: bound {bound}, visited {visited}, budget {budget}")]
    Budget {
        what: String,
        bound: String,
        visited: u64,
        budget: u64,
    },

    #[error("target L2 error {target} unreachable with available witnesses (best achieved {best})")]
    TargetUnreachable { target: f64, best: f64 },

    #[error("weak regularization used {steps} steps; residual U2 norm {residual} still above {delta}")]
    WeakRegularization {
        steps: usize,
        residual: f64,
        delta: f64,
        telemetry: Box<WeakTelemetry>,
    },

    #[error("outer regularization did not settle within {0} stages")]
    StageBudget(usize),

    #[error("growth chain audit failed: {0}")]
    GrowthAudit(String),

    #[error("growth function is not finite at M = {0}")]
    GrowthOverflow(f64),

    #[error("unknown {kind} '{name}' (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by a resource limit rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::Budget { .. } | Error::StageBudget(_) | Error::GrowthOverflow(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
