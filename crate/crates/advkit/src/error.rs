//! Error type shared by the numeric, model, data, and attack layers.

use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the toolkit's fallible operations.
///
/// Variants are deliberately fine-grained so callers (and tests) can tell a
/// truncated file from a file whose declared shapes disagree with its
/// payload, or a bad IDX magic number from a count mismatch.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two tensor shapes are incompatible for the attempted operation.
    Dimension {
        context: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// A scalar argument or configuration value violates its contract.
    Argument(String),
    /// A file could not be opened or read.
    Io(String),
    /// A payload exists but cannot be decoded (truncated or corrupt).
    Malformed(String),
    /// A decoded payload's shapes disagree with its own declared layout.
    ShapeInconsistency(String),
    /// An IDX file's magic number differs from the format constant.
    IdxBadMagic { expected: u32, found: u32 },
    /// The IDX image and label files declare different item counts.
    IdxCountMismatch { images: usize, labels: usize },
    /// Every candidate gradient difference vanished; the linearized step
    /// is undefined.
    DegenerateGradient,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                context,
                left,
                right,
            } => write!(
                f,
                "dimension mismatch in {context}: {left:?} is incompatible with {right:?}"
            ),
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
            Error::Malformed(msg) => write!(f, "malformed payload: {msg}"),
            Error::ShapeInconsistency(msg) => write!(f, "shape inconsistency: {msg}"),
            Error::IdxBadMagic { expected, found } => write!(
                f,
                "bad IDX magic number: expected {expected:#010x}, found {found:#010x}"
            ),
            Error::IdxCountMismatch { images, labels } => write!(
                f,
                "IDX item count mismatch: {images} images vs {labels} labels"
            ),
            Error::DegenerateGradient => {
                write!(f, "degenerate gradient: all class-difference gradients are zero")
            }
        }
    }
}

impl std::error::Error for Error {}
