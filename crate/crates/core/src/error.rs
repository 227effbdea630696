use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("rejection sampler gave up after {attempts} attempts")]
    RetryExhausted { attempts: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid mobile: {0}")]
    InvalidMobile(String),

    #[error("invalid contour encoding: {0}")]
    InvalidEncoding(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("({0}, {1}) is not an edge of the map")]
    NotAnEdge(u32, u32),

    #[error("enumeration would produce about {estimate} objects (cap {cap})")]
    CapExceeded { estimate: u128, cap: u128 },

    #[error("empty path")]
    EmptyPath,

    #[error("argument {0} is not a grid point")]
    OffGrid(f64),

    #[error("not a correspondence: {0}")]
    NotCorrespondence(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("bad binary map data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
