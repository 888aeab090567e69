//! Subcommand implementations and exit-status classification.

pub mod cluster;
pub mod diagnose;
pub mod fit;
pub mod simulate;

use uptake_core::cluster::ClusterError;
use uptake_core::hmc::HmcError;
use uptake_core::model::ModelError;

/// Failure classes mapped to exit codes: input/configuration problems exit
/// 2, numerical/model problems exit 1.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Numeric(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numeric(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Numeric(e) => e,
        }
    }
}

pub type CmdResult = Result<(), Failure>;

pub(crate) fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

pub(crate) fn numeric(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Numeric(e.into())
}

pub(crate) fn classify_cluster(e: ClusterError) -> Failure {
    match e {
        ClusterError::DegenerateFeatures | ClusterError::NonFiniteFeature => numeric(e),
        other => input(other),
    }
}

pub(crate) fn classify_hmc(e: HmcError) -> Failure {
    match e {
        HmcError::InvalidConfig(_) => input(e),
        other => numeric(other),
    }
}

pub(crate) fn classify_model(e: ModelError) -> Failure {
    match e {
        ModelError::NonFinite(_) => numeric(e),
        other => input(other),
    }
}

/// Errors if the path does not exist, naming it.
pub(crate) fn require_file(path: &std::path::Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(input(anyhow::anyhow!("{what} not found: {}", path.display())))
    }
}
