//! Violations of the q no-resonance condition: distinct q-element index sets
//! whose energy sums coincide.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsum::{binomial, DEFAULT_SUM_CAP};
use crate::rng::derive_rng;
use crate::spectral::Spectrum;

/// Largest spectrum accepted by [`n_epsilon`]; it sorts all `N(N-1)/2` gaps.
pub const N_EPSILON_MAX_LEVELS: usize = 3000;

/// Relative tolerance used by [`default_tolerance`].
pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Tolerance below which two sums count as equal: `1e-12 · (E_max - E_min)`.
pub fn default_tolerance(spectrum: &Spectrum) -> f64 {
    DEFAULT_RELATIVE_TOLERANCE * spectrum.width()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationPair {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    /// `|Σ first - Σ second|`
    pub gap: f64,
}

/// Unordered pairs of distinct index tuples with sums within `tolerance`.
/// A cluster of `m` mutually close sums contributes `C(m, 2)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationSet {
    pub q: usize,
    pub tolerance: f64,
    pub pairs: Vec<ViolationPair>,
}

impl ViolationSet {
    pub fn cardinality(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// All violations of the `q` no-resonance condition at tolerance `tol`
/// (`tol = 0` demands exact floating-point equality).
pub fn find_violations(spectrum: &Spectrum, q: usize, tol: f64) -> Result<ViolationSet> {
    find_violations_capped(spectrum, q, tol, DEFAULT_SUM_CAP)
}

pub fn find_violations_capped(spectrum: &Spectrum, q: usize, tol: f64, cap: u128) -> Result<ViolationSet> {
    if q == 0 {
        return Err(Error::Resonance("q must be at least 1".into()));
    }
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::Resonance(format!("tolerance must be finite and >= 0, got {tol}")));
    }
    let e = &spectrum.energies;
    let n = e.len();
    let count = binomial(n, q);
    if count > cap {
        return Err(Error::SizeCap { n, q, count, cap });
    }
    if n > u32::MAX as usize {
        return Err(Error::Resonance("too many levels".into()));
    }

    // Flat tuple store; tuple t occupies indices[t*q .. (t+1)*q].
    let mut indices: Vec<u32> = Vec::with_capacity(count as usize * q);
    let mut sums: Vec<f64> = Vec::with_capacity(count as usize);
    let mut current = Vec::with_capacity(q);
    enumerate_tuples(e, q, 0, 0.0, &mut current, &mut |t, s| {
        indices.extend(t.iter().map(|&i| i as u32));
        sums.push(s);
    });

    let mut order: Vec<u32> = (0..sums.len() as u32).collect();
    order.sort_by(|&a, &b| sums[a as usize].total_cmp(&sums[b as usize]).then(a.cmp(&b)));

    let tuple = |t: u32| -> Vec<usize> {
        let t = t as usize;
        indices[t * q..(t + 1) * q].iter().map(|&i| i as usize).collect()
    };

    let mut pairs = Vec::new();
    for i in 0..order.len() {
        let si = sums[order[i] as usize];
        for &other in &order[i + 1..] {
            let gap = sums[other as usize] - si;
            if gap > tol {
                break;
            }
            let (a, b) = if order[i] < other {
                (order[i], other)
            } else {
                (other, order[i])
            };
            pairs.push(ViolationPair {
                first: tuple(a),
                second: tuple(b),
                gap,
            });
        }
    }
    pairs.sort_by(|x, y| x.first.cmp(&y.first).then_with(|| x.second.cmp(&y.second)));

    Ok(ViolationSet {
        q,
        tolerance: tol,
        pairs,
    })
}

fn enumerate_tuples(
    e: &[f64],
    q: usize,
    start: usize,
    partial: f64,
    current: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize], f64),
) {
    let left = q - current.len();
    if left == 0 {
        emit(current, partial);
        return;
    }
    if e.len() < left {
        return;
    }
    for j in start..=e.len() - left {
        current.push(j);
        enumerate_tuples(e, q, j + 1, partial + e[j], current, emit);
        current.pop();
    }
}

/// How often individual levels take part in violations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolatorMultiplicity {
    /// Largest number of tuple slots, over all pairs, occupied by one level.
    pub n_ql: usize,
    /// Occurrences per level index, counting every slot of both tuples.
    pub counts: BTreeMap<usize, usize>,
    /// Largest count of one level in the first slot of the pairs only.
    pub first_slot_max: usize,
}

pub fn exceptional_multiplicity(set: &ViolationSet) -> ViolatorMultiplicity {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut first: HashMap<usize, usize> = HashMap::new();
    for pair in &set.pairs {
        for &i in pair.first.iter().chain(&pair.second) {
            *counts.entry(i).or_default() += 1;
        }
        if let Some(&m1) = pair.first.first() {
            *first.entry(m1).or_default() += 1;
        }
    }
    ViolatorMultiplicity {
        n_ql: counts.values().copied().max().unwrap_or(0),
        first_slot_max: first.values().copied().max().unwrap_or(0),
        counts,
    }
}

/// Number of consecutive gaps of a sorted sequence strictly below `eps`.
pub fn pseudo_violation_count(sorted: &[f64], eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Resonance(format!("epsilon must be positive, got {eps}")));
    }
    Ok(sorted.windows(2).filter(|w| w[1] - w[0] < eps).count())
}

/// `N(ε) = max_E |{(k, l) : k > l, E_k - E_l ∈ [E, E + ε)}|` over sorted levels.
pub fn n_epsilon(energies: &[f64], eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Resonance(format!("epsilon must be positive, got {eps}")));
    }
    let n = energies.len();
    if n > N_EPSILON_MAX_LEVELS {
        return Err(Error::Resonance(format!(
            "N(eps) sorts all gaps; {n} levels exceeds the limit of {N_EPSILON_MAX_LEVELS}"
        )));
    }
    let mut e = energies.to_vec();
    e.sort_by(f64::total_cmp);
    let mut gaps = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for k in 0..n {
        for l in 0..k {
            gaps.push(e[k] - e[l]);
        }
    }
    gaps.sort_by(f64::total_cmp);
    let mut best = 0;
    let mut end = 0;
    for start in 0..gaps.len() {
        end = end.max(start);
        while end < gaps.len() && gaps[end] < gaps[start] + eps {
            end += 1;
        }
        best = best.max(end - start);
    }
    Ok(best)
}

/// `⟨𝒩⟩ = |S| 2^{-L} (1 + 2^{-L})^{|S|-1}`, evaluated in log space.
pub fn expected_exceptional(violations: u64, sites: u32) -> f64 {
    if violations == 0 {
        return 0.0;
    }
    let p = (-(sites as f64) * std::f64::consts::LN_2).exp();
    let log = (violations as f64).ln() - sites as f64 * std::f64::consts::LN_2
        + (violations - 1) as f64 * p.ln_1p();
    log.exp()
}

/// Monte Carlo estimate of the expected-violator model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McExceptional {
    /// Mean of the model count `Σ_n n · #{n draws sharing an index}`.
    pub estimate: f64,
    pub stderr: f64,
    /// Mean of the largest multiplicity of any single index.
    pub mean_max_multiplicity: f64,
    pub max_multiplicity_stderr: f64,
    pub trials: usize,
}

/// Minimum trial count for [`monte_carlo_expected_exceptional`].
pub const MC_MIN_TRIALS: usize = 100;

/// Draws `violations` first indices uniformly from `2^sites` levels per trial.
///
/// For one designated level `v` hit `X_v` times, the count of index subsets
/// that all landed on `v`, weighted by their size, is `Σ_n n C(X_v, n) =
/// X_v 2^{X_v - 1}`; its mean is the closed form of [`expected_exceptional`].
/// Every level is an equally valid designated level, so each trial averages
/// the count over all `2^sites` of them.
pub fn monte_carlo_expected_exceptional(
    violations: u64,
    sites: u32,
    trials: usize,
    seed: u64,
) -> Result<McExceptional> {
    if trials < MC_MIN_TRIALS {
        return Err(Error::Resonance(format!(
            "need at least {MC_MIN_TRIALS} trials, got {trials}"
        )));
    }
    if sites == 0 || sites > 62 {
        return Err(Error::Resonance(format!("sites must be in 1..=62, got {sites}")));
    }
    let levels = 1u64 << sites;
    let mut model = Vec::with_capacity(trials);
    let mut maxima = Vec::with_capacity(trials);
    let mut counts: HashMap<u64, u32> = HashMap::new();
    for t in 0..trials {
        let mut rng = derive_rng(seed, "resonance/mc", t as u64);
        counts.clear();
        for _ in 0..violations {
            *counts.entry(rng.random_range(0..levels)).or_default() += 1;
        }
        let weighted: f64 = counts
            .values()
            .map(|&x| x as f64 * 2f64.powi(x as i32 - 1))
            .sum();
        model.push(weighted / levels as f64);
        maxima.push(counts.values().copied().max().unwrap_or(0) as f64);
    }
    let (estimate, stderr) = mean_stderr(&model);
    let (mean_max_multiplicity, max_multiplicity_stderr) = mean_stderr(&maxima);
    Ok(McExceptional {
        estimate,
        stderr,
        mean_max_multiplicity,
        max_multiplicity_stderr,
        trials,
    })
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Provenance;

    fn spec(e: &[f64]) -> Spectrum {
        Spectrum::new(
            e.to_vec(),
            Provenance::External {
                label: "test".into(),
            },
        )
        .unwrap()
    }

    #[test]
    fn four_level_ladder_has_one_violation() {
        let s = find_violations(&spec(&[0.0, 1.0, 2.0, 3.0]), 2, 0.0).unwrap();
        assert_eq!(s.cardinality(), 1);
        assert_eq!(s.pairs[0].first, vec![0, 3]);
        assert_eq!(s.pairs[0].second, vec![1, 2]);
        let m = exceptional_multiplicity(&s);
        assert_eq!(m.n_ql, 1);
        assert!(m.counts.values().all(|&c| c == 1));
    }

    #[test]
    fn empty_set_has_zero_multiplicity() {
        let s = find_violations(&spec(&[0.0, 1.0, 3.0, 7.0]), 2, 0.0).unwrap();
        assert!(s.is_empty());
        assert_eq!(exceptional_multiplicity(&s).n_ql, 0);
    }

    #[test]
    fn tolerance_and_argument_checks() {
        let s = spec(&[0.0, 1.0, 2.0, 3.0 + 1e-9]);
        assert!(find_violations(&s, 2, 0.0).unwrap().is_empty());
        assert_eq!(find_violations(&s, 2, 1e-8).unwrap().cardinality(), 1);
        assert!(find_violations(&s, 2, -1.0).is_err());
        assert!(find_violations(&s, 0, 0.0).is_err());
        assert!(matches!(
            find_violations_capped(&s, 2, 0.0, 3),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn pseudo_violations() {
        let x = [0.0, 0.5, 2.0, 2.1, 5.0];
        assert_eq!(pseudo_violation_count(&x, 0.01).unwrap(), 0);
        assert_eq!(pseudo_violation_count(&x, 0.2).unwrap(), 1);
        assert_eq!(pseudo_violation_count(&x, 10.0).unwrap(), 4);
        assert!(pseudo_violation_count(&x, 0.0).is_err());
    }

    #[test]
    fn n_epsilon_examples() {
        assert_eq!(n_epsilon(&[0.0, 1.0, 2.0], 1e-9).unwrap(), 2);
        assert_eq!(n_epsilon(&[0.0, 1.0, 2.0], 10.0).unwrap(), 3);
        let e = [0.0, 0.3, 1.7, 2.2, 5.0];
        assert_eq!(n_epsilon(&e, 100.0).unwrap(), 10);
        assert!(n_epsilon(&e, 0.0).is_err());
        assert!(n_epsilon(&vec![0.0; N_EPSILON_MAX_LEVELS + 1], 1.0).is_err());
    }

    #[test]
    fn expected_exceptional_limits() {
        assert_eq!(expected_exceptional(0, 10), 0.0);
        assert!((expected_exceptional(1 << 40, 40) - std::f64::consts::E).abs() < 1e-6);
        let direct = 30.0 / 2f64.powi(30) * (1.0 + 2f64.powi(-30)).powi(29);
        assert!((expected_exceptional(30, 30) - direct).abs() < 1e-15 * direct);
        assert!(expected_exceptional(40, 40) < expected_exceptional(30, 30));
    }

    #[test]
    fn single_violation_model_is_exact() {
        // One draw: the count is 1 exactly when the designated level is hit.
        let mc = monte_carlo_expected_exceptional(1, 6, 200, 3).unwrap();
        assert!((mc.estimate - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(mc.stderr, 0.0);
        assert_eq!(mc.mean_max_multiplicity, 1.0);
        let none = monte_carlo_expected_exceptional(0, 6, 200, 3).unwrap();
        assert_eq!(none.estimate, 0.0);
        assert!(monte_carlo_expected_exceptional(5, 6, 10, 3).is_err());
    }
}
