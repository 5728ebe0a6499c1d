use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("events present but frame list is empty")]
    NoFrames,

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("feature width mismatch: model expects {expected} node features, input has {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} predictions vs {right} labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("both classes are required, only label {present} found")]
    SingleClass { present: u8 },

    #[error("unknown player `{0}`")]
    UnknownPlayer(String),

    #[error("player `{0}` listed more than once")]
    DuplicatePlayer(String),

    #[error("feature index {index} out of range (0..{limit})")]
    FeatureIndex { index: usize, limit: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
}
