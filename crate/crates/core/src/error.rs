use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid range: min {min}, max {max} (need 1 <= min <= max)")]
    InvalidRange { min: usize, max: usize },
    #[error("invalid length {0}: a sequence needs at least one panel")]
    InvalidLength(usize),
    #[error("invalid depth {0}: must be at least 1")]
    InvalidDepth(usize),
    #[error("invalid probability {name} = {value}")]
    InvalidProbability { name: String, value: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unknown layer `{0}`")]
    UnknownLayer(String),
    #[error("layer `{layer}` requires `{missing}` to run first")]
    Dependency { layer: String, missing: String },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown scene `{0}`")]
    UnknownScene(String),
    #[error("unknown composition `{0}`")]
    UnknownComposition(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("{kind} transition cannot be satisfied: {reason}")]
    Constraint { kind: String, reason: String },
    #[error("no scene is mapped to location `{0}`")]
    UnmappedLocation(String),
    #[error("assertion {index}: {reason}")]
    AssertionParse { index: usize, reason: String },
    #[error("content pack: {0}")]
    Pack(String),
    #[error("refusing enumeration: {0}")]
    Guardrail(String),
    #[error("arithmetic overflow computing {0}")]
    Overflow(String),
    #[error("malformed csv at line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
