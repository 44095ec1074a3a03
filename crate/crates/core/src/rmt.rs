//! Gaussian random-matrix ensembles.
//!
//! * GOE: `H = A + Aᵀ` with `A_ij ~ N(0, 1)` i.i.d.; off-diagonal variance 2,
//!   diagonal variance 4.
//! * GUE: `H = (B + B†)/√2` with `B_ij` standard complex normal
//!   (`E|B_ij|² = 1`); diagonal variance 1, off-diagonal `E|H_ij|² = 1`.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_rng, StreamRng};
use crate::spectral::{eigenvalues, Provenance, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Goe,
    Gue,
}

impl std::str::FromStr for EnsembleKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "goe" => Ok(EnsembleKind::Goe),
            "gue" => Ok(EnsembleKind::Gue),
            other => Err(format!("unknown ensemble '{other}', expected goe or gue")),
        }
    }
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnsembleKind::Goe => "goe",
            EnsembleKind::Gue => "gue",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub size: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, size: usize, seed: u64) -> Result<Self> {
        if size < 2 {
            return Err(Error::Rmt(format!("matrix side must be at least 2, got {size}")));
        }
        Ok(EnsembleSpec { kind, size, seed })
    }

    /// Generator for ensemble member `sample`.
    pub fn rng(&self, sample: u64) -> StreamRng {
        derive_rng(self.seed, &format!("rmt/{}", self.kind), sample)
    }
}

fn expect_kind(spec: &EnsembleSpec, kind: EnsembleKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::Rmt(format!("expected a {kind} spec, got {}", spec.kind)));
    }
    if spec.size < 2 {
        return Err(Error::Rmt(format!("matrix side must be at least 2, got {}", spec.size)));
    }
    Ok(())
}

/// GOE member `sample` of the stream defined by `spec.seed`.
pub fn sample_goe(spec: &EnsembleSpec, sample: u64) -> Result<Mat<f64>> {
    expect_kind(spec, EnsembleKind::Goe)?;
    let n = spec.size;
    let mut rng = spec.rng(sample);
    let mut a = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)]))
}

/// GUE member `sample` of the stream defined by `spec.seed`.
pub fn sample_gue(spec: &EnsembleSpec, sample: u64) -> Result<Mat<Complex64>> {
    expect_kind(spec, EnsembleKind::Gue)?;
    let n = spec.size;
    let mut rng = spec.rng(sample);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut b = Mat::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            b[(i, j)] = Complex64::new(re * half, im * half);
        }
    }
    let mut h = Mat::from_fn(n, n, |i, j| (b[(i, j)] + b[(j, i)].conj()) * half);
    for i in 0..n {
        h[(i, i)].im = 0.0;
    }
    Ok(h)
}

/// Samples member `sample` and returns its spectrum.
pub fn sample_spectrum(spec: &EnsembleSpec, sample: u64) -> Result<Spectrum> {
    let source = Provenance::Ensemble {
        spec: *spec,
        sample,
    };
    match spec.kind {
        EnsembleKind::Goe => eigenvalues(&sample_goe(spec, sample)?, source),
        EnsembleKind::Gue => eigenvalues(&sample_gue(spec, sample)?, source),
    }
}

/// Spectra of members `0..count`, computed in parallel, returned in order.
pub fn sample_spectra(spec: &EnsembleSpec, count: usize) -> Result<Vec<Spectrum>> {
    (0..count as u64)
        .into_par_iter()
        .map(|s| sample_spectrum(spec, s))
        .collect()
}
