//! Diagonal-ensemble quantities, equilibration moments `μ_q` and the bounds on
//! them.
//!
//! Everything is expressed in the energy eigenbasis: `energies[m]`, the
//! amplitudes `c[m] = ⟨E_m|ψ⟩` and the observable matrix `A_mn` share one
//! index order. With `z_mn = c̄_m c_n A_mn` and `ω_mn = E_m - E_n`,
//! `⟨A(t)⟩ = Σ_mn z_mn e^{iω_mn t}` and the fluctuation about
//! `Ā = Σ_m |c_m|² A_mm` is the off-diagonal part of that sum.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{eigenvalues, Provenance};

/// Normalization tolerance for state amplitudes.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Hermiticity tolerance, relative to the largest matrix entry.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Largest number of leading pair assignments `(d(d-1))^{q-1}` accepted by
/// [`mu_q_resonant_sum`].
pub const RESONANT_SUM_CAP: u128 = 50_000_000;

/// Largest quadrature grid accepted by [`mu_q_timeavg`].
pub const MAX_QUADRATURE_STEPS: usize = 200_000_000;

/// `ω = Σ |c_m|² |E_m⟩⟨E_m|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalEnsemble {
    pub populations: Vec<f64>,
    /// `tr ω² = Σ |c_m|⁴`
    pub purity: f64,
}

impl DiagonalEnsemble {
    pub fn from_amplitudes(c: &[Complex64]) -> Result<Self> {
        check_normalized(c)?;
        let populations: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
        let purity = populations.iter().map(|p| p * p).sum();
        Ok(DiagonalEnsemble {
            populations,
            purity,
        })
    }

    pub fn dimension(&self) -> usize {
        self.populations.len()
    }
}

fn check_normalized(c: &[Complex64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::Equilibration("state has no amplitudes".into()));
    }
    if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Equilibration("state has non-finite amplitudes".into()));
    }
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Equilibration(format!(
            "state is not normalized: sum |c|^2 = {norm}"
        )));
    }
    Ok(())
}

/// Normalizes `c` in place; fails on the zero vector.
pub fn normalize(c: &mut [Complex64]) -> Result<()> {
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Equilibration("cannot normalize a zero or non-finite state".into()));
    }
    for z in c.iter_mut() {
        *z /= norm;
    }
    Ok(())
}

/// Hermitian observable in the energy eigenbasis.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: Mat<Complex64>,
    norm: f64,
}

impl Observable {
    pub fn new(matrix: Mat<Complex64>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return Err(Error::Equilibration(format!(
                "observable must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut scale = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                let z = matrix[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::Equilibration("observable has non-finite entries".into()));
                }
                scale = scale.max(z.norm());
            }
        }
        for j in 0..d {
            for i in 0..=j {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > HERMITIAN_TOL * scale.max(1.0) {
                    return Err(Error::Equilibration(format!(
                        "observable is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        // Singular values of a Hermitian matrix are the moduli of its eigenvalues.
        let spectrum = eigenvalues(
            &matrix,
            Provenance::External {
                label: "observable".into(),
            },
        )?;
        let norm = spectrum
            .energies
            .iter()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()));
        Ok(Observable { matrix, norm })
    }

    pub fn from_real(matrix: &Mat<f64>) -> Result<Self> {
        Self::new(Mat::from_fn(matrix.nrows(), matrix.ncols(), |i, j| {
            Complex64::new(matrix[(i, j)], 0.0)
        }))
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    /// Operator norm `‖A‖`, the largest singular value.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_instance(energies: &[f64], c: &[Complex64], a: &Observable) -> Result<()> {
    check_normalized(c)?;
    if energies.len() != c.len() || a.dimension() != c.len() {
        return Err(Error::Equilibration(format!(
            "dimension mismatch: {} energies, {} amplitudes, observable of side {}",
            energies.len(),
            c.len(),
            a.dimension()
        )));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Equilibration("non-finite energy".into()));
    }
    Ok(())
}

/// `Ā = tr(ωA) = Σ_m |c_m|² A_mm`.
pub fn infinite_time_average(c: &[Complex64], a: &Observable) -> Result<f64> {
    check_normalized(c)?;
    if a.dimension() != c.len() {
        return Err(Error::Equilibration(format!(
            "{} amplitudes for an observable of side {}",
            c.len(),
            a.dimension()
        )));
    }
    Ok(c
        .iter()
        .enumerate()
        .map(|(m, z)| z.norm_sqr() * a.matrix[(m, m)].re)
        .sum())
}

/// Largest quadrature step that resolves every gap: `π / (4 max|E_i - E_j|)`.
pub fn required_step(energies: &[f64]) -> f64 {
    let (lo, hi) = energies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
    let spread = hi - lo;
    if spread > 0.0 {
        std::f64::consts::PI / (4.0 * spread)
    } else {
        f64::INFINITY
    }
}

/// Smallest even number of Simpson intervals on `[0, t_final]` that satisfies
/// [`required_step`].
pub fn required_steps(t_final: f64, energies: &[f64]) -> usize {
    let step = required_step(energies);
    if step.is_infinite() {
        return 2;
    }
    let n = (t_final / step).ceil() as usize;
    (n + n % 2).max(2)
}

/// Off-diagonal terms `(ω_mn, z_mn)` of the expectation value.
fn fluctuation_terms(energies: &[f64], c: &[Complex64], a: &Observable) -> Vec<(f64, Complex64)> {
    let d = c.len();
    let mut terms = Vec::with_capacity(d * d.saturating_sub(1));
    for m in 0..d {
        for n in 0..d {
            if m != n {
                let z = c[m].conj() * c[n] * a.matrix[(m, n)];
                terms.push((energies[m] - energies[n], z));
            }
        }
    }
    terms
}

/// `μ_q(T) = (1/T) ∫_0^T (⟨A(t)⟩ - Ā)^q dt` by composite Simpson quadrature
/// with `steps` intervals (rounded up to even).
pub fn mu_q_timeavg(
    t_final: f64,
    energies: &[f64],
    c: &[Complex64],
    a: &Observable,
    q: u32,
    steps: usize,
) -> Result<f64> {
    check_instance(energies, c, a)?;
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::Equilibration(format!("T must be positive, got {t_final}")));
    }
    if q == 0 {
        return Err(Error::Equilibration("q must be at least 1".into()));
    }
    let steps = (steps + steps % 2).max(2);
    if steps > MAX_QUADRATURE_STEPS {
        return Err(Error::Equilibration(format!(
            "{steps} quadrature steps exceeds the limit of {MAX_QUADRATURE_STEPS}"
        )));
    }
    let h = t_final / steps as f64;
    let required = required_step(energies);
    if h > required {
        return Err(Error::UnderResolved { step: h, required });
    }

    let terms = fluctuation_terms(energies, c, a);
    let rotation: Vec<Complex64> = terms.iter().map(|&(w, _)| Complex64::from_polar(1.0, w * h)).collect();
    let mut phase: Vec<Complex64> = terms.iter().map(|&(_, z)| z).collect();

    // Phases advance by repeated rotation and are re-seeded exactly every
    // RESEED steps to keep the accumulated rounding negligible.
    const RESEED: usize = 1024;
    let mut acc = 0.0;
    for k in 0..=steps {
        if k % RESEED == 0 && k > 0 {
            let t = k as f64 * h;
            for (p, &(w, z)) in phase.iter_mut().zip(&terms) {
                *p = z * Complex64::from_polar(1.0, w * t);
            }
        }
        let f: f64 = phase.iter().map(|p| p.re).sum();
        let weight = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += weight * f.powi(q as i32);
        for (p, r) in phase.iter_mut().zip(&rotation) {
            *p *= r;
        }
    }
    Ok(acc * h / 3.0 / t_final)
}

/// Exact infinite-time `μ_q`: the sum of `Π_k z_{m_k n_k}` over all ordered
/// assignments of `q` off-diagonal pairs whose gaps add up to zero within
/// `tol`.
pub fn mu_q_resonant_sum(energies: &[f64], c: &[Complex64], a: &Observable, q: u32, tol: f64) -> Result<f64> {
    check_instance(energies, c, a)?;
    if q == 0 {
        return Err(Error::Equilibration("q must be at least 1".into()));
    }
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::Equilibration(format!("tolerance must be finite and >= 0, got {tol}")));
    }
    let mut terms = fluctuation_terms(energies, c, a);
    if terms.is_empty() {
        return Ok(0.0);
    }
    let leading = (terms.len() as u128).saturating_pow(q - 1);
    if leading > RESONANT_SUM_CAP {
        return Err(Error::Equilibration(format!(
            "resonant sum needs {leading} leading assignments, limit is {RESONANT_SUM_CAP}"
        )));
    }
    terms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let gaps: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let total = resonant_dfs(&terms, &gaps, q as usize, 0.0, Complex64::new(1.0, 0.0), tol);
    Ok(total.re)
}

fn resonant_dfs(
    terms: &[(f64, Complex64)],
    gaps: &[f64],
    left: usize,
    partial: f64,
    product: Complex64,
    tol: f64,
) -> Complex64 {
    if left == 1 {
        // The last gap must cancel the running sum.
        let lo = gaps.partition_point(|&g| g < -partial - tol);
        let mut sum = Complex64::new(0.0, 0.0);
        for &(g, z) in &terms[lo..] {
            if (partial + g).abs() > tol {
                if g > -partial {
                    break;
                }
                continue;
            }
            sum += product * z;
        }
        return sum;
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for &(g, z) in terms {
        sum += resonant_dfs(terms, gaps, left - 1, partial + g, product * z, tol);
    }
    sum
}

/// Default resonant-sum tolerance, `1e-9` times the spectral spread.
pub fn default_resonance_tol(energies: &[f64]) -> f64 {
    let (lo, hi) = energies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
    1e-9 * (hi - lo).max(0.0)
}

/// `‖A‖² tr ω²`. Assumes no degenerate gaps.
pub fn bound_short(a: &Observable, omega: &DiagonalEnsemble) -> f64 {
    a.norm.powi(2) * omega.purity
}

/// `(q ‖A‖ √(tr ω²))^q`
pub fn bound_riddell(a: &Observable, omega: &DiagonalEnsemble, q: u32) -> f64 {
    (q as f64 * a.norm * omega.purity.sqrt()).powi(q as i32)
}

/// `‖A‖^q (q^q + 𝒩/(2q)) (tr ω²)^{q/2}`, with `𝒩` the largest violator
/// multiplicity of the q no-resonance condition.
pub fn bound_theorem1(a: &Observable, omega: &DiagonalEnsemble, q: u32, exceptional: usize) -> f64 {
    let qf = q as f64;
    a.norm.powi(q as i32) * (qf.powi(q as i32) + exceptional as f64 / (2.0 * qf)) * omega.purity.powf(qf / 2.0)
}

/// The q = 2 specialization as displayed alongside the general bound:
/// `‖A‖² (1 + 𝒩/4) tr ω²`. It is tighter than [`bound_theorem1`] at q = 2.
pub fn bound_theorem1_q2_corollary(a: &Observable, omega: &DiagonalEnsemble, exceptional: usize) -> f64 {
    a.norm.powi(2) * (1.0 + exceptional as f64 / 4.0) * omega.purity
}

/// `N(ε) ‖A‖² tr ω²`
pub fn bound_farrelly(a: &Observable, omega: &DiagonalEnsemble, n_eps: usize) -> f64 {
    n_eps as f64 * a.norm.powi(2) * omega.purity
}

/// Normalized state with i.i.d. complex Gaussian amplitudes.
pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<Complex64>> {
    let mut c: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    normalize(&mut c)?;
    Ok(c)
}

/// Hermitian observable `(B + B†)/2` with standard complex Gaussian `B`.
pub fn random_observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Observable> {
    let b = Mat::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mut h = Mat::from_fn(d, d, |i, j| (b[(i, j)] + b[(j, i)].conj()) * 0.5);
    for i in 0..d {
        h[(i, i)].im = 0.0;
    }
    Observable::new(h)
}
