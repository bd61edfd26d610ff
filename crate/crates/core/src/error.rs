//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the numerical pipeline.
///
/// Variants carry enough context (indices, radii, offending values) for a
/// caller to report the failure without re-running the computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The manifold dimension is below the supported range.
    #[error("dimension must be ≥ 4 (got n = {0})")]
    Dimension(i64),

    /// The U-curvature parameter α = −1 makes the linearized operator degenerate.
    #[error("alpha = -1 is degenerate: the equation reduces to second order")]
    DegenerateAlpha,

    /// A grid is too short for the stencil that was requested.
    #[error("grid with {points} points is too short for a stencil of width {width}")]
    StencilWidth { points: usize, width: usize },

    /// A grid is too coarse for operator assembly.
    #[error("grid with {points} points is too coarse (need at least {min})")]
    GridTooCoarse { points: usize, min: usize },

    /// Invalid grid parameters.
    #[error("invalid grid: {0}")]
    Grid(String),

    /// A sampled profile contains a NaN or infinite value.
    #[error("non-finite value {value} at grid index {index}")]
    NonFinite { index: usize, value: f64 },

    /// A profile does not have the same length as the grid it is used with.
    #[error("length mismatch: profile has {got} values, grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },

    /// Positivity of the conformal factor 1 + u is violated (power regime).
    #[error("conformal factor not positive: 1 + u = {value:e} at r = {r} (index {index})")]
    Domain { index: usize, r: f64, value: f64 },

    /// Banded elimination met an exactly zero pivot.
    #[error("singular matrix: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    /// A boundary fitting window is unusable.
    #[error("fitting window error: {0}")]
    Window(String),

    /// A least-squares design matrix is too poorly conditioned to trust.
    #[error("ill-conditioned fit (reciprocal condition estimate {rcond:e})")]
    IllConditionedFit { rcond: f64 },

    /// The requested operator family has no decaying radial kernel element
    /// that is regular at the centre of the ball.
    #[error("no regular decaying radial kernel element: {0}")]
    NoKernel(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A diagnostic ratio is dominated by noise.
    #[error("signal too small for a reliable estimate: {0}")]
    SignalToNoise(String),

    /// Companion-matrix roots disagree with the closed forms.
    #[error("closed-form roots disagree with the companion-matrix oracle by {0:e}")]
    RootMismatch(f64),

    /// Serialization or file-system failure, with path context.
    #[error("i/o error at {path}: {message}")]
    Io { path: String, message: String },
}
