use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed pattern: {0}")]
    Pattern(String),
    #[error("degenerate lattice: vectors {0:?} and {1:?} are parallel")]
    DegenerateLattice([f64; 2], [f64; 2]),
    #[error("unknown stitch id `{0}`")]
    UnknownStitch(String),
    #[error("finite pattern needs an explicit search window")]
    WindowRequired,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
