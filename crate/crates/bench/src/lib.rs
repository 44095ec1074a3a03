//! Shared fixtures for the benchmarks.

use levelstat_core::rmt::{sample_goe, sample_spectrum};
use levelstat_core::{EnsembleKind, EnsembleSpec, Mat, Spectrum};

pub const SEED: u64 = 20_240_601;

pub fn goe_spec(n: usize) -> EnsembleSpec {
    EnsembleSpec::new(EnsembleKind::Goe, n, SEED).expect("valid ensemble")
}

pub fn goe_matrix(n: usize) -> Mat<f64> {
    sample_goe(&goe_spec(n), 0).expect("GOE sample")
}

pub fn goe_levels(n: usize) -> Spectrum {
    sample_spectrum(&goe_spec(n), 0).expect("GOE spectrum")
}
