use alloc::string::String;
use core::fmt;

/// Error type shared by every module in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A point cloud violated its invariants (empty, or non-finite coordinates).
    InvalidCloud(String),
    /// A request parameter is out of range (sample count, k, class id, ...).
    InvalidRequest(String),
    /// A configuration value is invalid (non-positive radius, zero k_max, ...).
    InvalidConfig(String),
    /// Tensor shapes disagree.
    Shape(String),
    /// A dataset split violated its invariants.
    InvalidDataset(String),
    /// A synthetic dataset spec is invalid.
    InvalidSpec(String),
    /// A mesh cannot be sampled (no faces, zero total area).
    InvalidMesh(String),
    /// Training produced a non-finite loss at the given epoch.
    Diverged { epoch: usize },
    /// Checkpoints with different config fingerprints cannot be averaged.
    IncompatibleCheckpoints,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidCloud(m) => write!(f, "invalid point cloud: {m}"),
            Error::InvalidRequest(m) => write!(f, "invalid request: {m}"),
            Error::InvalidConfig(m) => write!(f, "invalid config: {m}"),
            Error::Shape(m) => write!(f, "shape mismatch: {m}"),
            Error::InvalidDataset(m) => write!(f, "invalid dataset: {m}"),
            Error::InvalidSpec(m) => write!(f, "invalid spec: {m}"),
            Error::InvalidMesh(m) => write!(f, "invalid mesh: {m}"),
            Error::Diverged { epoch } => write!(f, "training diverged at epoch {epoch}"),
            Error::IncompatibleCheckpoints => {
                write!(f, "checkpoints have mismatched config fingerprints")
            }
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
