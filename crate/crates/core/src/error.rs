use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate geometry: nearest-neighbour displacement has zero length")]
    DegenerateGeometry,

    #[error("orbital index {eta} out of range 1..={n_sites}")]
    OrbitalOutOfRange { eta: usize, n_sites: usize },

    #[error("malformed fermion configuration: {0}")]
    MalformedConfig(String),

    #[error("grid collision: |1 - exp(-i(K - K'))| = {magnitude:e} in h-function denominator")]
    GridCollision { magnitude: f64 },

    #[error("overflow guard tripped: intermediate magnitude {magnitude:e} in h-function")]
    Overflow { magnitude: f64 },

    #[error("non-vacuum ground state unsupported (A/omega = {interaction} <= -1)")]
    NonVacuumGroundState { interaction: f64 },

    #[error("initial state is not normalized (|norm - 1| = {deviation:e})")]
    NotNormalized { deviation: f64 },

    #[error("two-exciton module requires even N >= 4, got N = {0}")]
    OddChain(usize),

    #[error("perturbative resonance: denominator {denominator} = {value:e} vanishes")]
    PerturbativeResonance { denominator: &'static str, value: f64 },

    #[error(
        "stored-energy blow-up at omega*t = {time}: e_density = {e_density} exceeds bound {bound}"
    )]
    BlowUp { time: f64, e_density: f64, bound: f64 },

    #[error("dimension {dim} exceeds the limit {limit} for {context}")]
    TooLarge { dim: usize, limit: usize, context: &'static str },

    #[error("eigensolver failed to converge ({0})")]
    Eigensolver(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("power-law fit needs at least {needed} points with y > 0: {reason}")]
    Fit { needed: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("failed to read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures raised by a numerical guard (as opposed to bad
    /// input). The CLI maps these to exit code 2.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::GridCollision { .. }
                | Error::Overflow { .. }
                | Error::PerturbativeResonance { .. }
                | Error::BlowUp { .. }
                | Error::Eigensolver(_)
                | Error::NotNormalized { .. }
        )
    }
}
