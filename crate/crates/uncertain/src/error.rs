use uncertain_core::circuits::LineageError;
use uncertain_core::instances::InstanceError;
use uncertain_core::porder::PorderError;
use uncertain_core::prob::{MessageError, ProbError};
use uncertain_core::prxml::PrxmlError;
use uncertain_core::query::AutomatonError;

/// Failures reported by the command-line tool.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or invalid input.
    #[error("{0}")]
    Input(String),
    /// A size guard tripped while running `stage`.
    #[error("{stage}: {msg}")]
    Limit { stage: &'static str, msg: String },
    /// The brute-force oracle disagrees with the pipeline.
    #[error("oracle disagreement: pipeline {pipeline}, oracle {oracle}")]
    Disagreement { pipeline: f64, oracle: f64 },
}

impl CliError {
    /// 2 for input errors, 1 for guards, limits and disagreements.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Limit { .. } | CliError::Disagreement { .. } => 1,
        }
    }

    pub fn limit(stage: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Limit {
            stage,
            msg: e.to_string(),
        }
    }
}

impl From<ProbError> for CliError {
    fn from(e: ProbError) -> Self {
        match e {
            ProbError::Query(q) => CliError::Input(q.to_string()),
            ProbError::Instance(InstanceError::TooManyEvents { .. }) => {
                CliError::limit("oracle", e)
            }
            ProbError::Instance(i) => CliError::Input(i.to_string()),
            ProbError::Lineage(LineageError::Automaton(
                a @ AutomatonError::StateExplosion { .. },
            ))
            | ProbError::Lineage(LineageError::Automaton(
                a @ AutomatonError::TooManyIntroduced(_),
            )) => CliError::limit("lineage", a),
            ProbError::Lineage(l) => CliError::Input(l.to_string()),
            ProbError::Message(m @ MessageError::BagTooLarge { .. }) => {
                CliError::limit("message passing", m)
            }
            ProbError::Message(m) => CliError::Input(m.to_string()),
        }
    }
}

impl From<PrxmlError> for CliError {
    fn from(e: PrxmlError) -> Self {
        match e {
            PrxmlError::TooManyChoices { .. } => CliError::limit("enumeration", e),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<PorderError> for CliError {
    fn from(e: PorderError) -> Self {
        match e {
            PorderError::TooLarge { .. } => CliError::limit("enumeration", e),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
