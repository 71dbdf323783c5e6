use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A weight, bias or input has the wrong length for its position in the network.
    #[error("shape mismatch in {what}{}: expected {expected}, found {found}", locate(*.layer, *.unit))]
    Shape {
        what: &'static str,
        layer: Option<usize>,
        unit: Option<usize>,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("slice points are affinely dependent")]
    Collinear,
    #[error("row has dimension {found}, system has dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("system has {rows} rows, limit is {max}")]
    TooManyRows { rows: usize, max: usize },
    #[error("feasibility solver broke down on a {rows}-row system: {reason}")]
    Numerical { rows: usize, reason: &'static str },
    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridCap { points: f64, cap: usize },
    #[error("initialization {scheme} does not support rank {rank} ({detail})")]
    Unsupported {
        scheme: String,
        rank: usize,
        detail: &'static str,
    },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures of the numerical engine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. })
    }
}

fn locate(layer: Option<usize>, unit: Option<usize>) -> String {
    match (layer, unit) {
        (Some(l), Some(u)) => format!(" (layer {l}, unit {u})"),
        (Some(l), None) => format!(" (layer {l})"),
        _ => String::new(),
    }
}
