//! Dense full-spectrum eigensolves and Gaussian-broadening unfolding.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::rmt::EnsembleSpec;

/// Fraction of levels discarded at each end for statistics marked "bulk".
pub const BULK_TRIM: f64 = 0.02;

/// Gaussian tails beyond this many widths are dropped when unfolding;
/// the neglected mass per kernel is below `1e-18`.
const KERNEL_CUTOFF: f64 = 9.0;

/// Where a spectrum came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Chain { spec: ChainSpec },
    Ensemble { spec: EnsembleSpec, sample: u64 },
    QSum { q: usize, parent: Box<Provenance> },
    External { label: String },
}

/// Sorted eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub source: Provenance,
}

impl Spectrum {
    /// Sorts `energies`; rejects non-finite entries.
    pub fn new(mut energies: Vec<f64>, source: Provenance) -> Result<Self> {
        if let Some(bad) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::Spectral(format!("non-finite level {bad}")));
        }
        energies.sort_by(f64::total_cmp);
        Ok(Spectrum { energies, source })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `E_max - E_min`, zero for fewer than two levels.
    pub fn width(&self) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// A dense real-symmetric or complex-Hermitian matrix.
#[derive(Debug, Clone)]
pub enum DenseHermitian {
    Real(Mat<f64>),
    Complex(Mat<Complex64>),
}

impl DenseHermitian {
    pub fn dimension(&self) -> usize {
        match self {
            DenseHermitian::Real(m) => m.nrows(),
            DenseHermitian::Complex(m) => m.nrows(),
        }
    }
}

/// Borrowed view of a Hermitian matrix.
#[derive(Debug, Clone, Copy)]
pub enum HermitianRef<'a> {
    Real(MatRef<'a, f64>),
    Complex(MatRef<'a, Complex64>),
}

pub trait AsHermitian {
    fn as_hermitian(&self) -> HermitianRef<'_>;
}

impl AsHermitian for Mat<f64> {
    fn as_hermitian(&self) -> HermitianRef<'_> {
        HermitianRef::Real(self.as_ref())
    }
}

impl AsHermitian for Mat<Complex64> {
    fn as_hermitian(&self) -> HermitianRef<'_> {
        HermitianRef::Complex(self.as_ref())
    }
}

impl AsHermitian for DenseHermitian {
    fn as_hermitian(&self) -> HermitianRef<'_> {
        match self {
            DenseHermitian::Real(m) => HermitianRef::Real(m.as_ref()),
            DenseHermitian::Complex(m) => HermitianRef::Complex(m.as_ref()),
        }
    }
}

fn check_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(Error::Spectral(format!("matrix is {rows}x{cols}, not square")));
    }
    if rows == 0 {
        return Err(Error::Spectral("empty matrix".into()));
    }
    Ok(())
}

/// All eigenvalues, ascending. Only the lower triangle is read.
pub fn eigenvalues<M: AsHermitian + ?Sized>(matrix: &M, source: Provenance) -> Result<Spectrum> {
    let values = match matrix.as_hermitian() {
        HermitianRef::Real(m) => {
            check_square(m.nrows(), m.ncols())?;
            if !m.is_all_finite() {
                return Err(Error::Spectral("matrix has non-finite entries".into()));
            }
            m.self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?
        }
        HermitianRef::Complex(m) => {
            check_square(m.nrows(), m.ncols())?;
            if !m.is_all_finite() {
                return Err(Error::Spectral("matrix has non-finite entries".into()));
            }
            m.self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?
        }
    };
    Spectrum::new(values, source)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors as columns.
pub fn eigenpairs(matrix: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    check_square(matrix.nrows(), matrix.ncols())?;
    if !matrix.is_all_finite() {
        return Err(Error::Spectral("matrix has non-finite entries".into()));
    }
    let evd = matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S();
    let values = (0..matrix.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

/// Parameters of the Gaussian-broadening unfolding.
///
/// Level `j` is smeared with width `σ_j = broadening_factor · α · Δ_j`, where
/// `Δ_j` is the mean spacing over the window `j-α ..= j+α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingConfig {
    pub alpha: usize,
    pub broadening_factor: f64,
}

impl Default for UnfoldingConfig {
    fn default() -> Self {
        UnfoldingConfig {
            alpha: 20,
            broadening_factor: 0.608,
        }
    }
}

impl UnfoldingConfig {
    pub fn with_alpha(alpha: usize) -> Self {
        UnfoldingConfig {
            alpha,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedSpectrum {
    pub epsilons: Vec<f64>,
    pub config: UnfoldingConfig,
    pub source: Provenance,
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Per-level broadening widths. Window indices are clamped to the spectrum
/// and `Δ_j` divides by the clamped index span.
pub fn broadening_widths(energies: &[f64], config: &UnfoldingConfig) -> Result<Vec<f64>> {
    let n = energies.len();
    let a = config.alpha;
    let mut sigma: Vec<f64> = (0..n)
        .map(|j| {
            let lo = j.saturating_sub(a);
            let hi = (j + a).min(n - 1);
            let delta = (energies[hi] - energies[lo]) / (hi - lo) as f64;
            config.broadening_factor * a as f64 * delta
        })
        .collect();
    let min_positive = sigma
        .iter()
        .copied()
        .filter(|s| *s > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min_positive.is_finite() {
        return Err(Error::Spectral(
            "every unfolding window is degenerate; spectrum has zero width".into(),
        ));
    }
    for s in sigma.iter_mut().filter(|s| **s <= 0.0) {
        *s = min_positive;
    }
    Ok(sigma)
}

/// Maps each level to the smoothed staircase `ε_k = Σ_j Φ((E_k - E_j)/σ_j)`.
pub fn unfold(spectrum: &Spectrum, config: UnfoldingConfig) -> Result<UnfoldedSpectrum> {
    let e = &spectrum.energies;
    let n = e.len();
    let max_alpha = n.saturating_sub(2) / 2;
    if config.alpha == 0 || n <= 2 * config.alpha + 1 {
        return Err(Error::SpectrumTooShort {
            len: n,
            alpha: config.alpha,
            max_alpha,
        });
    }
    if !(config.broadening_factor > 0.0) {
        return Err(Error::Spectral("broadening factor must be positive".into()));
    }
    let sigma = broadening_widths(e, &config)?;

    let tree = MaxTree::new(&sigma);
    let mut epsilons: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| tree.staircase(e, &sigma, e[k], 1, 0, n))
        .collect();

    // Summation order differs between k; keep exact ties monotone.
    for k in 1..n {
        if epsilons[k] < epsilons[k - 1] {
            epsilons[k] = epsilons[k - 1];
        }
    }

    Ok(UnfoldedSpectrum {
        epsilons,
        config,
        source: spectrum.source.clone(),
    })
}

/// Consecutive differences of a sorted sequence.
const TREE_LEAF: usize = 16;

/// Range maxima of the widths over a halving tree of index ranges, so whole
/// runs of levels beyond the kernel cutoff are counted without evaluating Φ.
struct MaxTree {
    max: Vec<f64>,
}

impl MaxTree {
    fn new(sigma: &[f64]) -> Self {
        let mut max = vec![0.0; 8 * sigma.len().div_ceil(TREE_LEAF) + 8];
        Self::build(&mut max, sigma, 1, 0, sigma.len());
        MaxTree { max }
    }

    fn build(max: &mut [f64], sigma: &[f64], node: usize, lo: usize, hi: usize) -> f64 {
        let m = if hi - lo <= TREE_LEAF {
            sigma[lo..hi].iter().copied().fold(0.0, f64::max)
        } else {
            let mid = (lo + hi) / 2;
            let a = Self::build(max, sigma, 2 * node, lo, mid);
            let b = Self::build(max, sigma, 2 * node + 1, mid, hi);
            a.max(b)
        };
        max[node] = m;
        m
    }

    fn staircase(&self, e: &[f64], sigma: &[f64], x: f64, node: usize, lo: usize, hi: usize) -> f64 {
        let reach = KERNEL_CUTOFF * self.max[node];
        if x - e[hi - 1] > reach {
            return (hi - lo) as f64;
        }
        if e[lo] - x > reach {
            return 0.0;
        }
        if hi - lo <= TREE_LEAF {
            return (lo..hi).map(|j| normal_cdf((x - e[j]) / sigma[j])).sum();
        }
        let mid = (lo + hi) / 2;
        self.staircase(e, sigma, x, 2 * node, lo, mid) + self.staircase(e, sigma, x, 2 * node + 1, mid, hi)
    }
}

pub fn spacings(levels: &[f64]) -> Vec<f64> {
    levels.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Drops `fraction` of the entries from each end.
pub fn bulk(values: &[f64], fraction: f64) -> &[f64] {
    let cut = (values.len() as f64 * fraction).floor() as usize;
    if 2 * cut >= values.len() {
        return &values[0..0];
    }
    &values[cut..values.len() - cut]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ext() -> Provenance {
        Provenance::External {
            label: "test".into(),
        }
    }

    #[test]
    fn identity_and_diagonal() {
        let id = Mat::<f64>::identity(5, 5);
        assert_eq!(eigenvalues(&id, ext()).unwrap().energies, vec![1.0; 5]);
        let d = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 });
        let s = eigenvalues(&d, ext()).unwrap();
        for (got, want) in s.energies.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut m = Mat::<f64>::identity(3, 3);
        m[(1, 0)] = f64::NAN;
        assert!(eigenvalues(&m, ext()).is_err());
        let rect = Mat::<f64>::zeros(2, 3);
        assert!(eigenvalues(&rect, ext()).is_err());
        assert!(Spectrum::new(vec![1.0, f64::INFINITY], ext()).is_err());
    }

    #[test]
    fn hermitian_complex_spectrum_is_real() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let m = Mat::<Complex64>::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => Complex64::new(0.0, 1.0),
            (1, 0) => Complex64::new(0.0, -1.0),
            _ => Complex64::new(1.0, 0.0),
        });
        let s = eigenvalues(&m, ext()).unwrap();
        assert!(s.energies[0].abs() < 1e-14 && (s.energies[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spacings_examples() {
        assert_eq!(spacings(&[1.0, 3.0, 4.0]), vec![2.0, 1.0]);
        assert_eq!(spacings(&[2.0; 4]), vec![0.0; 3]);
    }

    #[test]
    fn own_kernel_contributes_half() {
        assert_eq!(normal_cdf(0.0), 0.5);
        let s = Spectrum::new(vec![0.0, 1.0, 3.0, 3.5], ext()).unwrap();
        let config = UnfoldingConfig::with_alpha(1);
        let u = unfold(&s, config).unwrap();
        let sigma = broadening_widths(&s.energies, &config).unwrap();
        for k in 0..4 {
            let others: f64 = (0..4)
                .filter(|&j| j != k)
                .map(|j| normal_cdf((s.energies[k] - s.energies[j]) / sigma[j]))
                .sum();
            assert!((u.epsilons[k] - others - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_short_spectrum_with_admissible_alpha() {
        let s = Spectrum::new((0..30).map(f64::from).collect(), ext()).unwrap();
        match unfold(&s, UnfoldingConfig::with_alpha(20)) {
            Err(Error::SpectrumTooShort { max_alpha, .. }) => {
                assert_eq!(max_alpha, 14);
                assert!(unfold(&s, UnfoldingConfig::with_alpha(14)).is_ok());
                assert!(unfold(&s, UnfoldingConfig::with_alpha(15)).is_err());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_window_does_not_crash() {
        let mut e = vec![0.0; 10];
        e.extend((0..40).map(f64::from));
        let s = Spectrum::new(e, ext()).unwrap();
        let u = unfold(&s, UnfoldingConfig::with_alpha(3)).unwrap();
        assert!(u.epsilons.iter().all(|x| x.is_finite()));
        let flat = Spectrum::new(vec![1.0; 10], ext()).unwrap();
        assert!(unfold(&flat, UnfoldingConfig::with_alpha(2)).is_err());
    }

    #[test]
    fn truncated_sum_matches_full_sum() {
        // cubic spacing: wide kernels at both sparse edges reach into the bulk
        let e: Vec<f64> = (-600..600).map(|i| f64::from(i).powi(3) * 1e-6).collect();
        let s = Spectrum::new(e.clone(), ext()).unwrap();
        let config = UnfoldingConfig::with_alpha(5);
        let sigma = broadening_widths(&e, &config).unwrap();
        let u = unfold(&s, config).unwrap();
        let mut running: f64 = 0.0;
        for (k, got) in u.epsilons.iter().enumerate() {
            let full: f64 = e.iter().zip(&sigma).map(|(ej, sj)| normal_cdf((e[k] - ej) / sj)).sum();
            running = running.max(full);
            assert!((got - running).abs() < 1e-9, "k={k}: {got} vs {running}");
        }
    }

    #[test]
    fn bulk_trim() {
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        let b = bulk(&v, 0.02);
        assert_eq!(b.len(), 96);
        assert_eq!(b[0], 2.0);
        assert!(bulk(&v[..2], 0.5).is_empty());
        assert_eq!(bulk(&v[..1], 0.4).len(), 1);
    }
}
