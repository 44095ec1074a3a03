//! End-to-end compositions used by the command-line tool. Every number in a
//! summary comes from a call into the other modules.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{build_hamiltonian, enumerate_sector_basis, ChainSpec};
use crate::equilibration::{self as eq, DiagonalEnsemble, Observable};
use crate::error::{Error, Result};
use crate::formfactor::{self as ff, FormFactorCurve};
use crate::qsum::build_qsum;
use crate::resonance;
use crate::rmt::{sample_spectrum, EnsembleKind, EnsembleSpec};
use crate::rng::derive_rng;
use crate::spectral::{bulk, eigenvalues, spacings, unfold, Provenance, Spectrum, UnfoldingConfig, BULK_TRIM};
use crate::stats::{self, Histogram, MeanRatioReferences};

/// Diagonalizes the symmetry sector described by `spec`.
pub fn chain_spectrum(spec: &ChainSpec) -> Result<Spectrum> {
    let basis = enumerate_sector_basis(spec)?;
    if basis.dimension() == 0 {
        return Err(Error::Chain("sector is empty".into()));
    }
    let h = build_hamiltonian(&basis);
    eigenvalues(&h, Provenance::Chain { spec: *spec })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SpectrumSource {
    Chain { spec: ChainSpec },
    Ensemble { spec: EnsembleSpec, samples: usize },
}

impl SpectrumSource {
    pub fn spectra(&self) -> Result<Vec<Spectrum>> {
        match self {
            SpectrumSource::Chain { spec } => Ok(vec![chain_spectrum(spec)?]),
            SpectrumSource::Ensemble { spec, samples } => {
                if *samples == 0 {
                    return Err(Error::Rmt("at least one sample is required".into()));
                }
                (0..*samples as u64)
                    .into_par_iter()
                    .map(|s| sample_spectrum(spec, s))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QStatsParams {
    pub q: usize,
    /// Unfold each base spectrum before forming q-sums.
    pub unfold_input: bool,
    /// Unfolding window for the q-sum spacing distribution.
    pub alpha: usize,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for QStatsParams {
    fn default() -> Self {
        QStatsParams {
            q: 1,
            unfold_input: false,
            alpha: UnfoldingConfig::default().alpha,
            bootstrap_resamples: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QStatsSummary {
    pub q: usize,
    pub spectra: usize,
    pub levels_per_spectrum: Vec<usize>,
    pub sums_per_spectrum: Vec<usize>,
    pub ratio_count: usize,
    pub zero_pairs: usize,
    pub mean_ratio: f64,
    pub mean_ratio_stderr: f64,
    pub ks_goe_ratio: f64,
    pub ks_poisson_ratio: f64,
    pub spacing_count: usize,
    pub ks_wigner_spacing: f64,
    pub ks_poisson_spacing: f64,
    pub small_gap_fraction: f64,
    pub small_gap_epsilon: f64,
    pub references: MeanRatioReferences,
}

/// Pooled q-sum ratio and spacing statistics with their histograms.
#[derive(Debug, Clone)]
pub struct QStatsOutput {
    pub summary: QStatsSummary,
    pub ratios: Vec<f64>,
    pub spacings: Vec<f64>,
    pub ratio_histogram: Histogram,
    pub spacing_histogram: Histogram,
}

/// Gap below which a unit-mean spacing counts as small in summaries.
pub const SMALL_GAP_EPSILON: f64 = 0.1;

/// Spectrum → optional unfold → q-sums → bulk ratios and unfolded spacings,
/// pooled over all spectra.
pub fn qstats(spectra: &[Spectrum], params: &QStatsParams) -> Result<QStatsOutput> {
    if spectra.is_empty() {
        return Err(Error::Stats("no spectra to analyse".into()));
    }
    if params.q == 0 {
        return Err(Error::Stats("q must be at least 1".into()));
    }
    let mut levels = Vec::new();
    let mut sums = Vec::new();
    let mut all_ratios = Vec::new();
    let mut all_spacings = Vec::new();
    let mut zero_pairs = 0;
    for spectrum in spectra {
        if spectrum.is_empty() {
            return Err(Error::Stats("empty spectrum".into()));
        }
        levels.push(spectrum.len());
        let base = if params.unfold_input {
            let u = unfold(spectrum, UnfoldingConfig::with_alpha(params.alpha))?;
            Spectrum::new(u.epsilons, spectrum.source.clone())?
        } else {
            spectrum.clone()
        };
        let qs = build_qsum(&base, params.q)?.to_spectrum();
        sums.push(qs.len());

        let gaps = spacings(&qs.energies);
        let r = stats::ratios(bulk(&gaps, BULK_TRIM))?;
        zero_pairs += r.zero_pairs;
        all_ratios.extend(r.ratios);

        let unfolded = unfold(&qs, UnfoldingConfig::with_alpha(params.alpha))?;
        all_spacings.extend_from_slice(bulk(&spacings(&unfolded.epsilons), BULK_TRIM));
    }

    let mean_ratio = all_ratios.iter().sum::<f64>() / all_ratios.len() as f64;
    let boot = stats::bootstrap_mean(&all_ratios, params.bootstrap_resamples.max(2), params.seed)?;
    let small = all_spacings.iter().filter(|&&s| s < SMALL_GAP_EPSILON).count() as f64
        / all_spacings.len().max(1) as f64;
    let summary = QStatsSummary {
        q: params.q,
        spectra: spectra.len(),
        levels_per_spectrum: levels,
        sums_per_spectrum: sums,
        ratio_count: all_ratios.len(),
        zero_pairs,
        mean_ratio,
        mean_ratio_stderr: boot.stderr,
        ks_goe_ratio: stats::ks_distance(&all_ratios, stats::goe_ratio_cdf)?,
        ks_poisson_ratio: stats::ks_distance(&all_ratios, stats::poisson_ratio_cdf)?,
        spacing_count: all_spacings.len(),
        ks_wigner_spacing: stats::ks_distance(&all_spacings, stats::wigner_cdf)?,
        ks_poisson_spacing: stats::ks_distance(&all_spacings, stats::poisson_spacing_cdf)?,
        small_gap_fraction: small,
        small_gap_epsilon: SMALL_GAP_EPSILON,
        references: stats::mean_ratio_references(),
    };
    Ok(QStatsOutput {
        ratio_histogram: Histogram::ratios(&all_ratios)?,
        spacing_histogram: Histogram::spacings(&all_spacings)?,
        summary,
        ratios: all_ratios,
        spacings: all_spacings,
    })
}

/// Reference densities sampled on `points` abscissae: spacing laws on
/// `[0, 4]` and ratio laws on `[0, 1]`.
pub fn reference_curves(points: usize) -> Result<(String, String)> {
    if points < 2 {
        return Err(Error::Stats("need at least two reference points".into()));
    }
    let mut spacing = String::from("s,wigner,poisson_spacing\n");
    let mut ratio = String::from("r,goe_ratio,poisson_ratio\n");
    for i in 0..points {
        let u = i as f64 / (points - 1) as f64;
        let s = 4.0 * u;
        spacing.push_str(&format!(
            "{s:.17e},{:.17e},{:.17e}\n",
            stats::wigner_surmise(s),
            stats::poisson_spacing(s)
        ));
        ratio.push_str(&format!(
            "{u:.17e},{:.17e},{:.17e}\n",
            stats::goe_ratio_density(u),
            stats::poisson_ratio_density(u)
        ));
    }
    Ok((spacing, ratio))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub short: f64,
    pub riddell: f64,
    pub theorem1: f64,
    pub theorem1_q2_corollary: Option<f64>,
    pub farrelly: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationReport {
    pub dimension: usize,
    pub q: u32,
    pub t_final: f64,
    pub quadrature_steps: usize,
    pub infinite_time_average: f64,
    pub mu_q_timeavg: f64,
    /// Exact infinite-time value; absent when the enumeration is too large.
    pub mu_q_resonant: Option<f64>,
    pub resonance_tolerance: f64,
    pub purity: f64,
    pub observable_norm: f64,
    pub violations: usize,
    pub exceptional_all_slots: usize,
    pub exceptional_first_slot: usize,
    pub n_epsilon: Option<usize>,
    pub epsilon: f64,
    pub bounds: BoundSet,
}

/// Largest `pairs × quadrature points` product evaluated by [`equilibration`].
pub const EQUILIBRATION_WORK_CAP: f64 = 2e10;

/// Measures `μ_q` for a state and observable and evaluates every bound.
/// `state` and `observable` default to random draws from `seed`.
pub fn equilibration(
    energies: &[f64],
    state: Option<Vec<Complex64>>,
    observable: Option<Observable>,
    q: u32,
    t_final: f64,
    seed: u64,
) -> Result<EquilibrationReport> {
    let d = energies.len();
    if d == 0 {
        return Err(Error::Equilibration("empty spectrum".into()));
    }
    let c = match state {
        Some(c) => c,
        None => eq::random_state(d, &mut derive_rng(seed, "equilibration/state", 0))?,
    };
    let a = match observable {
        Some(a) => a,
        None => eq::random_observable(d, &mut derive_rng(seed, "equilibration/observable", 0))?,
    };
    let omega = DiagonalEnsemble::from_amplitudes(&c)?;
    let steps = eq::required_steps(t_final, energies);
    let work = (d * d) as f64 * steps as f64;
    if work > EQUILIBRATION_WORK_CAP {
        return Err(Error::Equilibration(format!(
            "time average needs {work:e} term evaluations, limit is {EQUILIBRATION_WORK_CAP:e}; lower T or d"
        )));
    }
    let mu = eq::mu_q_timeavg(t_final, energies, &c, &a, q, steps)?;
    let tol = eq::default_resonance_tol(energies);
    let exact = match eq::mu_q_resonant_sum(energies, &c, &a, q, tol) {
        Ok(v) => Some(v),
        Err(Error::Equilibration(_)) => None,
        Err(e) => return Err(e),
    };

    let spectrum = Spectrum::new(
        energies.to_vec(),
        Provenance::External {
            label: "equilibration".into(),
        },
    )?;
    let set = resonance::find_violations(&spectrum, q as usize, tol)?;
    let mult = resonance::exceptional_multiplicity(&set);
    let epsilon = tol.max(f64::MIN_POSITIVE);
    let n_eps = if d <= resonance::N_EPSILON_MAX_LEVELS {
        Some(resonance::n_epsilon(energies, epsilon)?)
    } else {
        None
    };

    let bounds = BoundSet {
        short: eq::bound_short(&a, &omega),
        riddell: eq::bound_riddell(&a, &omega, q),
        theorem1: eq::bound_theorem1(&a, &omega, q, mult.n_ql),
        theorem1_q2_corollary: (q == 2).then(|| eq::bound_theorem1_q2_corollary(&a, &omega, mult.n_ql)),
        farrelly: if q == 2 {
            n_eps.map(|n| eq::bound_farrelly(&a, &omega, n))
        } else {
            None
        },
    };
    Ok(EquilibrationReport {
        dimension: d,
        q,
        t_final,
        quadrature_steps: steps,
        infinite_time_average: eq::infinite_time_average(&c, &a)?,
        mu_q_timeavg: mu,
        mu_q_resonant: exact,
        resonance_tolerance: tol,
        purity: omega.purity,
        observable_norm: a.norm(),
        violations: set.cardinality(),
        exceptional_all_slots: mult.n_ql,
        exceptional_first_slot: mult.first_slot_max,
        n_epsilon: n_eps,
        epsilon,
        bounds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SffSummary {
    pub ensemble: EnsembleKind,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub crossover: f64,
    /// Per-sample average over grid points past twice the crossover.
    pub plateau_mean: Option<f64>,
    pub plateau_stderr: Option<f64>,
    pub plateau_expected: f64,
    pub time_average_at_n: f64,
}

pub fn sff(spec: &EnsembleSpec, times: &[f64], samples: usize) -> Result<(FormFactorCurve, SffSummary)> {
    let curve = ff::empirical_sff(spec, times, samples)?;
    let nf = spec.size as f64;
    let ts = ff::crossover(nf);
    let tmax = times.iter().copied().fold(0.0, f64::max);
    let plateau = if tmax >= 2.0 * ts {
        Some(curve.window_average(2.0 * ts, tmax)?)
    } else {
        None
    };
    let summary = SffSummary {
        ensemble: spec.kind,
        n: spec.size,
        samples,
        seed: spec.seed,
        crossover: ts,
        plateau_mean: plateau.map(|p| p.0),
        plateau_stderr: plateau.map(|p| p.1),
        plateau_expected: ff::k2_plateau(2.0 * ts, nf, spec.kind),
        time_average_at_n: ff::k2_time_average(nf, spec.size, spec.kind),
    };
    Ok((curve, summary))
}
