//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, MuskatError>;

/// Failures reported by the library.
#[derive(Debug, Error)]
pub enum MuskatError {
    /// Invalid parameters or malformed configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The kernel denominator fell below the floor, so the contour (or its
    /// complexified slice) no longer satisfies the arc-chord condition.
    #[error("arc-chord violation between nodes alpha={alpha_index} and beta={beta_index}")]
    ArcChord {
        /// Grid index of the evaluation point.
        alpha_index: usize,
        /// Grid index of the integration point.
        beta_index: usize,
    },

    /// The tangent vector vanishes, so the diagonal limit of the kernel is undefined.
    #[error("degenerate parameterization: vanishing tangent at node {0}")]
    DegenerateParameterization(usize),

    /// The analyticity radius of an identically zero field is undefined.
    #[error("analyticity radius undefined for an all-zero field")]
    UndefinedRadius,

    /// A boundary gamma node was asked for a centered gamma derivative.
    #[error("gamma node {0} has no centered stencil and no evolved w slice")]
    UnsupportedNode(usize),

    /// A requested extension point lies outside the reachable strip.
    #[error("extension point y={y} lies outside the strip |y| <= {limit} at node {node}")]
    OutsideDomain {
        /// Grid node index.
        node: usize,
        /// Requested imaginary offset.
        y: f64,
        /// Largest admissible offset c(alpha)|t| at that node.
        limit: f64,
    },

    /// The second derivative of the first component vanishes at the turnover point.
    #[error("degenerate turnover at alpha={location}: second derivative {second_derivative}")]
    DegenerateTurnover {
        /// Location of the zero of the horizontal tangent.
        location: f64,
        /// Value of the second derivative there.
        second_derivative: f64,
    },

    /// The initial datum of the stationary continuation is not stationary.
    #[error("initial datum is not stationary: residual {residual} exceeds {tolerance}")]
    NotStationary {
        /// Measured stationarity residual.
        residual: f64,
        /// Gate used for the comparison.
        tolerance: f64,
    },

    /// NaN or infinite values appeared during a computation.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Filesystem failure while writing outputs.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON parse or serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
