use std::path::PathBuf;

/// Errors raised by the library. The CLI maps `Config` to exit code 2 and the
/// numerical variants to exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("point ({x}, {y}) lies outside the mesh")]
    Lookup { x: f64, y: f64 },

    #[error("material error: {0}")]
    Material(String),

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:.3e}): {reason}")]
    LinearSolver {
        reason: String,
        iterations: usize,
        residual: f64,
    },

    #[error("newton iteration did not converge in {} steps; residual history {history:?}", history.len().saturating_sub(1))]
    Newton { history: Vec<f64> },

    #[error("gradient patch at ({x}, {y}) has only {found} vertices, need at least 6")]
    Patch { x: f64, y: f64, found: usize },

    #[error("gradient patch at ({x}, {y}) with radius {radius} crosses a material interface")]
    Locality { x: f64, y: f64, radius: f64 },

    #[error("polarisation relation degenerates: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by the run configuration rather than by numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Argument(_) | Error::Material(_) | Error::Geometry(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
