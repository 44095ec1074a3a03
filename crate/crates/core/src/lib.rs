//! Spectral statistics of chaotic spin chains and Gaussian random matrices:
//! q-sum spectra, gap-ratio statistics, no-resonance violations,
//! equilibration bounds and the spectral form factor.

pub mod chain;
pub mod equilibration;
pub mod error;
pub mod formfactor;
pub mod pipeline;
pub mod qsum;
pub mod resonance;
pub mod rmt;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use chain::{ChainSpec, Couplings, Parity, Sector};
pub use error::{Error, Result};
pub use rmt::{EnsembleKind, EnsembleSpec};
pub use spectral::{Provenance, Spectrum, UnfoldedSpectrum, UnfoldingConfig};

pub use faer::Mat;
pub use num_complex::Complex64;
