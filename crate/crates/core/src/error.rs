use std::fmt;

use thiserror::Error;

/// Pipeline stage a failure (or a timing) is attributed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ode,
    Wprop,
    Reconstruct,
    Reference,
    Stats,
    Classical,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ode => "ode",
            Stage::Wprop => "wprop",
            Stage::Reconstruct => "reconstruct",
            Stage::Reference => "reference",
            Stage::Stats => "stats",
            Stage::Classical => "classical",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("packet blow-up at node {node}, t = {time}: Im(alpha) = {im_alpha:e}")]
    BlowUp {
        node: usize,
        time: f64,
        im_alpha: f64,
    },

    #[error("w support escaped the eta box at t = {time} (edge/max ratio {ratio:.3e})")]
    SupportEscaped { time: f64, ratio: f64 },

    #[error("config field `{field}`: {msg}")]
    Config { field: &'static str, msg: String },

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(field: &'static str, msg: impl Into<String>) -> Self {
        Error::Config {
            field,
            msg: msg.into(),
        }
    }

    /// Stage tag of the outermost stage wrapper, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            Error::Config { .. } => Some(Stage::Config),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        })
    }
}
