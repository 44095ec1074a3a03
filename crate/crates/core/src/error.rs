use thiserror::Error;

/// Errors raised by the library. Each variant is tagged with the module that
/// produced it so diagnostics can be traced back through a pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chain: {0}")]
    Chain(String),

    #[error("rmt: {0}")]
    Rmt(String),

    #[error("spectral: {0}")]
    Spectral(String),

    #[error("spectral: spectrum of {len} levels is too short for alpha = {alpha}; largest admissible alpha is {max_alpha}")]
    SpectrumTooShort {
        len: usize,
        alpha: usize,
        max_alpha: usize,
    },

    #[error("qsum: C({n}, {q}) = {count} sums exceeds the cap of {cap}")]
    SizeCap {
        n: usize,
        q: usize,
        count: u128,
        cap: u128,
    },

    #[error("stats: {0}")]
    Stats(String),

    #[error("resonance: {0}")]
    Resonance(String),

    #[error("equilibration: {0}")]
    Equilibration(String),

    #[error("equilibration: quadrature step {step:e} does not resolve the largest gap; need step <= {required:e}")]
    UnderResolved { step: f64, required: f64 },

    #[error("formfactor: {0}")]
    FormFactor(String),

    #[error("linalg: eigensolver failed: {0}")]
    Eigensolver(String),
}

impl Error {
    /// Whether the error reflects rejected input rather than an internal failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Eigensolver(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
