use thiserror::Error;

/// Errors produced by graph construction, the solvers and the scenario layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({0}, {1}) has nonpositive weight {2}")]
    NonPositiveWeight(String, String, f64),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(String, String),
    #[error("self-loop at vertex {0}")]
    SelfLoop(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("field has {found} values but the graph has {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("projection did not converge after {iterations} sweeps (last change {change:e})")]
    ProjectionNotConverged { iterations: usize, change: f64 },
    #[error("line search failed at Newton iteration {iteration} (gradient norm {grad_norm:e}, energy {energy:e})")]
    LineSearch {
        iteration: usize,
        grad_norm: f64,
        energy: f64,
    },
    #[error("Newton iteration did not converge after {iterations} steps (gradient norm {grad_norm:e})")]
    NewtonNotConverged { iterations: usize, grad_norm: f64 },
    #[error("initial datum not stable (max relative slope {0})")]
    UnstableInitialDatum(f64),
    #[error("truncation too small: vertex {vertex} in the guard band reached {value:e}")]
    TruncationTooSmall { vertex: String, value: f64 },
    #[error("masses differ: {0} vs {1}")]
    UnequalMass(f64, f64),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("negative density {value} at vertex {vertex}")]
    NegativeDensity { vertex: String, value: f64 },
    #[error("potential is not 1-Lipschitz for the chosen metric")]
    NotLipschitz,
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors raised while validating inputs, as opposed to
    /// failures inside a solver run.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonFinite(_)
                | Error::ProjectionNotConverged { .. }
                | Error::LineSearch { .. }
                | Error::NewtonNotConverged { .. }
                | Error::TruncationTooSmall { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// `fs::read_to_string` with the path in the error message.
pub(crate) fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
