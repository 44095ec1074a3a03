//! Spacing and gap-ratio statistics and their reference distributions.
//!
//! Reference densities (all normalized on their support):
//!
//! | quantity | GOE | Poisson |
//! |---|---|---|
//! | spacing `p(s)` | `(πs/2) e^{-πs²/4}` | `e^{-s}` |
//! | ratio `p(r)`, `r ∈ [0,1]` | `(27/4)(r+r²)/(1+r+r²)^{5/2}` | `2/(1+r)²` |
//! | `⟨r⟩` | `4 - 2√3` | `2 ln 2 - 1` |

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_rng;

use std::f64::consts::PI;

/// Gap ratios `r_j = min(s_j, s_{j+1}) / max(s_j, s_{j+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStatistics {
    pub ratios: Vec<f64>,
    pub mean: f64,
    /// Consecutive gap pairs with both gaps zero; `0/0` is not assigned a ratio.
    pub zero_pairs: usize,
}

impl RatioStatistics {
    pub fn count(&self) -> usize {
        self.ratios.len()
    }
}

pub fn ratios(spacings: &[f64]) -> Result<RatioStatistics> {
    if spacings.len() < 2 {
        return Err(Error::Stats(format!(
            "need at least two spacings for a ratio, got {}",
            spacings.len()
        )));
    }
    if let Some(bad) = spacings.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::Stats(format!("spacings must be non-negative, got {bad}")));
    }
    let mut out = Vec::with_capacity(spacings.len() - 1);
    let mut zero_pairs = 0;
    for w in spacings.windows(2) {
        let (a, b) = (w[0], w[1]);
        let hi = a.max(b);
        if hi == 0.0 {
            zero_pairs += 1;
        } else {
            out.push(a.min(b) / hi);
        }
    }
    if out.is_empty() {
        return Err(Error::Stats(format!(
            "all {zero_pairs} consecutive gap pairs are zero; ratios undefined"
        )));
    }
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    Ok(RatioStatistics {
        ratios: out,
        mean,
        zero_pairs,
    })
}

/// Normalized unit-mean Wigner surmise `(πs/2) exp(-πs²/4)`.
pub fn wigner_surmise(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    0.5 * PI * s * (-0.25 * PI * s * s).exp()
}

pub fn wigner_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    -(-0.25 * PI * s * s).exp_m1()
}

pub fn poisson_spacing(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    (-s).exp()
}

pub fn poisson_spacing_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    -(-s).exp_m1()
}

/// Ratio density of 3×3 GOE matrices, folded onto `[0, 1]`.
pub fn goe_ratio_density(r: f64) -> f64 {
    if !(0.0..=1.0).contains(&r) {
        return 0.0;
    }
    let d = 1.0 + r + r * r;
    6.75 * (r + r * r) / (d * d * d.sqrt())
}

/// `∫₀^r` of [`goe_ratio_density`]: `1 + (2r+1)(r²+r-2) / (2(1+r+r²)^{3/2})`.
pub fn goe_ratio_cdf(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return 1.0;
    }
    let d = 1.0 + r + r * r;
    1.0 + (2.0 * r + 1.0) * (r * r + r - 2.0) / (2.0 * d * d.sqrt())
}

pub fn poisson_ratio_density(r: f64) -> f64 {
    if !(0.0..=1.0).contains(&r) {
        return 0.0;
    }
    2.0 / ((1.0 + r) * (1.0 + r))
}

pub fn poisson_ratio_cdf(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return 1.0;
    }
    2.0 * r / (1.0 + r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanRatioReferences {
    pub poisson: f64,
    pub goe: f64,
}

/// `⟨r⟩` for Poisson (`2 ln 2 - 1`) and GOE (`4 - 2√3`) level sequences.
pub fn mean_ratio_references() -> MeanRatioReferences {
    MeanRatioReferences {
        poisson: 2.0 * std::f64::consts::LN_2 - 1.0,
        goe: 4.0 - 2.0 * 3f64.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingLaw {
    Goe,
    Poisson,
}

/// Probability of a unit-mean spacing below `eps`.
pub fn small_gap_probability(eps: f64, law: SpacingLaw) -> f64 {
    match law {
        SpacingLaw::Goe => wigner_cdf(eps),
        SpacingLaw::Poisson => poisson_spacing_cdf(eps),
    }
}

/// Minimum sample size accepted by [`ks_distance`].
pub const KS_MIN_SAMPLES: usize = 100;

/// Kolmogorov–Smirnov statistic `sup_x |F_n(x) - F(x)|` against a
/// continuous reference CDF. Tied samples are handled as one jump.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::Stats(format!(
            "KS distance needs at least {KS_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Stats("NaN sample".into()));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < x.len() {
        let mut j = i;
        while j + 1 < x.len() && x[j + 1] == x[i] {
            j += 1;
        }
        let f = cdf(x[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    Ok(d)
}

/// Two-sample KS statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Stats("two-sample KS needs non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Density histogram on uniform bins. Samples outside `[lo, hi]` are counted
/// in `outside` and excluded from the normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub outside: u64,
}

impl Histogram {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::Stats(format!(
                "invalid histogram range [{lo}, {hi}] with {bins} bins"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        let mut outside = 0;
        for &x in samples {
            if !(x >= lo && x <= hi) {
                outside += 1;
                continue;
            }
            let b = (((x - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Stats("no samples fall inside the histogram range".into()));
        }
        let density = counts
            .iter()
            .map(|&c| c as f64 / (total as f64 * width))
            .collect();
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        Ok(Histogram {
            edges,
            density,
            counts,
            total,
            outside,
        })
    }

    /// 100 bins on `[0, 4]`.
    pub fn spacings(samples: &[f64]) -> Result<Self> {
        Self::new(samples, 0.0, 4.0, 100)
    }

    /// 100 bins on `[0, 1]`.
    pub fn ratios(samples: &[f64]) -> Result<Self> {
        Self::new(samples, 0.0, 1.0, 100)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// CSV with columns `bin_left,bin_right,density,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_left,bin_right,density,count\n");
        for i in 0..self.bins() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.edges[i],
                self.edges[i + 1],
                self.density[i],
                self.counts[i]
            ));
        }
        s
    }
}

/// Mean and bootstrap standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapMean {
    pub mean: f64,
    pub stderr: f64,
    pub resamples: usize,
}

pub fn bootstrap_mean(samples: &[f64], resamples: usize, seed: u64) -> Result<BootstrapMean> {
    if samples.len() < 2 || resamples < 2 {
        return Err(Error::Stats("bootstrap needs at least two samples and two resamples".into()));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut rng = derive_rng(seed, "stats/bootstrap", 0);
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let m = means.iter().sum::<f64>() / resamples as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(BootstrapMean {
        mean,
        stderr: var.sqrt(),
        resamples,
    })
}
