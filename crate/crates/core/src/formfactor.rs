//! Two-level spectral form factor: large-N closed forms for unfolded GOE and
//! GUE spectra, their exact time averages, and a Monte Carlo estimator.
//!
//! The closed forms cross over from a ramp to a plateau at `t* = πN/2`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::{sample_spectrum, EnsembleKind, EnsembleSpec};
use crate::spectral::{unfold, UnfoldingConfig};

/// Unfolding window used by [`empirical_sff`].
pub const SFF_UNFOLDING_ALPHA: usize = 20;

/// Minimum sample count for [`empirical_sff`].
pub const SFF_MIN_SAMPLES: usize = 10;

/// Ramp-to-plateau crossover `πN/2`.
pub fn crossover(n: f64) -> f64 {
    PI * n / 2.0
}

/// Ramp branch, valid for `t ≤ πN/2`.
pub fn k2_ramp(t: f64, n: f64, kind: EnsembleKind) -> f64 {
    let c = 2.0 / (PI * n * n);
    match kind {
        EnsembleKind::Gue => c * t,
        EnsembleKind::Goe => 2.0 * c * t + c * t * (4.0 * t / (PI * n)).ln_1p(),
    }
}

/// Plateau branch, valid for `t ≥ πN/2`.
pub fn k2_plateau(t: f64, n: f64, kind: EnsembleKind) -> f64 {
    match kind {
        EnsembleKind::Gue => 1.0 / n,
        EnsembleKind::Goe => {
            let x = 4.0 * t / (PI * n);
            2.0 / n + 2.0 * t / (PI * n * n) * ((x + 1.0) / (x - 1.0)).ln()
        }
    }
}

/// `K₂(t)` for an unfolded ensemble of side `n`. Requires `t ≥ 0`, `n ≥ 2`.
pub fn k2_analytic(t: f64, n: usize, kind: EnsembleKind) -> f64 {
    let n = n as f64;
    if t <= crossover(n) {
        k2_ramp(t, n, kind)
    } else {
        k2_plateau(t, n, kind)
    }
}

/// `∫ t ln(1 + bt) dt`, vanishing at 0.
fn ramp_log_integral(t: f64, b: f64) -> f64 {
    (t * t / 2.0 - 1.0 / (2.0 * b * b)) * (b * t).ln_1p() - t * t / 4.0 + t / (2.0 * b)
}

/// `∫ t ln((bt + 1)/(bt - 1)) dt` for `bt > 1`.
fn plateau_log_integral(t: f64, b: f64) -> f64 {
    let x = b * t;
    (t * t / 2.0 - 1.0 / (2.0 * b * b)) * ((x + 1.0) / (x - 1.0)).ln() + t / b
}

/// `(1/T) ∫_0^T K₂(t) dt`, integrated exactly branch by branch.
pub fn k2_time_average(t_final: f64, n: usize, kind: EnsembleKind) -> f64 {
    let nf = n as f64;
    let ts = crossover(nf);
    let c = 2.0 / (PI * nf * nf);
    let b = 4.0 / (PI * nf);
    let ramp_end = t_final.min(ts);
    let ramp = match kind {
        EnsembleKind::Gue => c * ramp_end * ramp_end / 2.0,
        EnsembleKind::Goe => c * ramp_end * ramp_end + c * ramp_log_integral(ramp_end, b),
    };
    let plateau = if t_final > ts {
        match kind {
            EnsembleKind::Gue => (t_final - ts) / nf,
            EnsembleKind::Goe => {
                2.0 * (t_final - ts) / nf + c * (plateau_log_integral(t_final, b) - plateau_log_integral(ts, b))
            }
        }
    } else {
        0.0
    };
    (ramp + plateau) / t_final
}

/// The GOE time average at `T = N` written as `constant / T`, with the
/// constant as printed in the literature:
/// `3/(2π) - (π/16) ln(1 + 4/π) + (1/π) ln(1 + 4/π) + 3π/32 + 1/4`.
pub fn goe_printed_bracket() -> f64 {
    let l = (4.0 / PI).ln_1p();
    3.0 / (2.0 * PI) - PI / 16.0 * l + l / PI + 3.0 * PI / 32.0 + 0.25
}

/// The same constant from the exact ramp integral:
/// `3/(2π) + (1/π - π/16) ln(1 + 4/π) + 1/4`.
pub fn goe_bracket_exact() -> f64 {
    let l = (4.0 / PI).ln_1p();
    3.0 / (2.0 * PI) + (1.0 / PI - PI / 16.0) * l + 0.25
}

/// `⟨μ_2(T)⟩ = K̄₂(T) · (tr(Aρ - ω))²`; only `q = 2` has a closed form.
pub fn mu2_expectation_rmt(t_final: f64, n: usize, kind: EnsembleKind, q: u32, tr_term: f64) -> Result<f64> {
    if q != 2 {
        return Err(Error::FormFactor(format!(
            "only q = 2 is available in closed form, got q = {q}"
        )));
    }
    if !(t_final > 0.0) {
        return Err(Error::FormFactor(format!("T must be positive, got {t_final}")));
    }
    Ok(k2_time_average(t_final, n, kind) * tr_term * tr_term)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFactorCurve {
    pub ensemble: EnsembleKind,
    pub n: usize,
    pub kind: CurveKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard error of each value (empirical curves).
    pub stderr: Option<Vec<f64>>,
    /// `|⟨Σ_k e^{itε_k}⟩|² / N²`, the disconnected part (empirical curves).
    pub disconnected: Option<Vec<f64>>,
    pub samples: usize,
    /// Per-sample values, `samples × times`, kept for windowed averages.
    #[serde(skip)]
    pub per_sample: Vec<Vec<f64>>,
}

impl FormFactorCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,k,stderr,disconnected,analytic\n");
        for (i, (&t, &k)) in self.times.iter().zip(&self.values).enumerate() {
            let se = self.stderr.as_ref().map_or(String::new(), |s| format!("{:e}", s[i]));
            let dc = self
                .disconnected
                .as_ref()
                .map_or(String::new(), |s| format!("{:e}", s[i]));
            let an = k2_analytic(t, self.n, self.ensemble);
            out.push_str(&format!("{t:e},{k:e},{se},{dc},{an:e}\n"));
        }
        out
    }

    /// Mean and standard error over samples of each sample's average over
    /// the grid points in `[lo, hi]`.
    pub fn window_average(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let idx: Vec<usize> = (0..self.times.len())
            .filter(|&i| self.times[i] >= lo && self.times[i] <= hi)
            .collect();
        if idx.is_empty() || self.per_sample.len() < 2 {
            return Err(Error::FormFactor(format!(
                "window [{lo}, {hi}] holds {} grid points over {} samples",
                idx.len(),
                self.per_sample.len()
            )));
        }
        let means: Vec<f64> = self
            .per_sample
            .iter()
            .map(|row| idx.iter().map(|&i| row[i]).sum::<f64>() / idx.len() as f64)
            .collect();
        let m = means.len() as f64;
        let mean = means.iter().sum::<f64>() / m;
        let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Ok((mean, (var / m).sqrt()))
    }
}

pub fn analytic_curve(times: &[f64], n: usize, kind: EnsembleKind) -> FormFactorCurve {
    FormFactorCurve {
        ensemble: kind,
        n,
        kind: CurveKind::Analytic,
        times: times.to_vec(),
        values: times.iter().map(|&t| k2_analytic(t, n, kind)).collect(),
        stderr: None,
        disconnected: None,
        samples: 0,
        per_sample: Vec::new(),
    }
}

/// Evenly spaced grid of `points` times on `[tmin, tmax]`.
pub fn linear_grid(tmin: f64, tmax: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(tmin >= 0.0) || !(tmax > tmin) || !tmax.is_finite() {
        return Err(Error::FormFactor(format!(
            "need 0 <= tmin < tmax and at least 2 points, got [{tmin}, {tmax}] x {points}"
        )));
    }
    let h = (tmax - tmin) / (points - 1) as f64;
    Ok((0..points).map(|i| tmin + i as f64 * h).collect())
}

/// Monte Carlo `K(t) = ⟨|Σ_k e^{itε_k}|²⟩ / N²` over `samples` ensemble members.
///
/// Each spectrum is unfolded to unit mean spacing and then rescaled by `4/N`,
/// which puts its Heisenberg time at the analytic crossover `πN/2`.
pub fn empirical_sff(spec: &EnsembleSpec, times: &[f64], samples: usize) -> Result<FormFactorCurve> {
    if samples < SFF_MIN_SAMPLES {
        return Err(Error::FormFactor(format!(
            "need at least {SFF_MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::FormFactor("times must be finite and non-negative".into()));
    }
    let n = spec.size;
    let scale = 4.0 / n as f64;
    let sums: Vec<Vec<(f64, f64)>> = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<Vec<(f64, f64)>> {
            let spectrum = sample_spectrum(spec, s)?;
            let unfolded = unfold(&spectrum, UnfoldingConfig::with_alpha(SFF_UNFOLDING_ALPHA))?;
            let eps: Vec<f64> = unfolded.epsilons.iter().map(|e| e * scale).collect();
            Ok(times
                .iter()
                .map(|&t| {
                    eps.iter().fold((0.0, 0.0), |(c, s), &e| {
                        let (sin, cos) = (t * e).sin_cos();
                        (c + cos, s + sin)
                    })
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let n2 = (n * n) as f64;
    let m = samples as f64;
    let per_sample: Vec<Vec<f64>> = sums
        .iter()
        .map(|row| row.iter().map(|&(c, s)| (c * c + s * s) / n2).collect())
        .collect();
    let mut values = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    let mut disconnected = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let mean = per_sample.iter().map(|r| r[i]).sum::<f64>() / m;
        let var = per_sample.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let (c, s) = sums
            .iter()
            .fold((0.0, 0.0), |(c, s), row| (c + row[i].0 / m, s + row[i].1 / m));
        values.push(mean);
        stderr.push((var / m).sqrt());
        disconnected.push((c * c + s * s) / n2);
    }
    Ok(FormFactorCurve {
        ensemble: spec.kind,
        n,
        kind: CurveKind::Empirical,
        times: times.to_vec(),
        values,
        stderr: Some(stderr),
        disconnected: Some(disconnected),
        samples,
        per_sample,
    })
}
