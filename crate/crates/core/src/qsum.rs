//! Spectra of q-fold energy sums `Λ = E_{i1} + … + E_{iq}` over strictly
//! increasing index tuples `i1 < i2 < … < iq`.
//!
//! This is the spectrum of `Σ_k 1 ⊗ … ⊗ H ⊗ … ⊗ 1` with the permutation
//! symmetry of the tensor factors resolved and repeated indices dropped, so
//! exactly `C(N, q)` values are produced.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Provenance, Spectrum};

/// Default upper bound on the number of materialized sums (1.6 GB of `f64`).
pub const DEFAULT_SUM_CAP: u128 = 200_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Generate every sum, then sort.
    #[default]
    Materialize,
    /// k-way merge of the `C(N, q-1)` ascending runs sharing a prefix; peak
    /// working memory is the heap rather than the full unsorted array.
    HeapMerge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSumOptions {
    pub cap: u128,
    pub strategy: Strategy,
    /// Neumaier-compensated accumulation instead of plain left-to-right sums.
    pub compensated: bool,
}

impl Default for QSumOptions {
    fn default() -> Self {
        QSumOptions {
            cap: DEFAULT_SUM_CAP,
            strategy: Strategy::Materialize,
            compensated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSumSpectrum {
    pub q: usize,
    pub base: Provenance,
    pub sums: Vec<f64>,
}

impl QSumSpectrum {
    pub fn count(&self) -> usize {
        self.sums.len()
    }

    /// View as a [`Spectrum`] for the spectral and statistics routines.
    pub fn to_spectrum(&self) -> Spectrum {
        Spectrum {
            energies: self.sums.clone(),
            source: Provenance::QSum {
                q: self.q,
                parent: Box::new(self.base.clone()),
            },
        }
    }
}

/// Running sum, optionally with a Neumaier correction term.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    comp: f64,
}

impl Acc {
    #[inline]
    fn add(self, x: f64, compensated: bool) -> Acc {
        if !compensated {
            return Acc {
                sum: self.sum + x,
                comp: 0.0,
            };
        }
        let t = self.sum + x;
        let comp = if self.sum.abs() >= x.abs() {
            self.comp + ((self.sum - t) + x)
        } else {
            self.comp + ((x - t) + self.sum)
        };
        Acc { sum: t, comp }
    }

    #[inline]
    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

fn check_size(n: usize, q: usize, cap: u128) -> Result<()> {
    if q == 0 {
        return Err(Error::Spectral("q must be at least 1".into()));
    }
    let count = binomial(n, q);
    if count > cap {
        return Err(Error::SizeCap { n, q, count, cap });
    }
    Ok(())
}

/// Sorted q-sum spectrum with default options.
pub fn build_qsum(spectrum: &Spectrum, q: usize) -> Result<QSumSpectrum> {
    build_qsum_with(spectrum, q, &QSumOptions::default())
}

pub fn build_qsum_with(spectrum: &Spectrum, q: usize, options: &QSumOptions) -> Result<QSumSpectrum> {
    let e = &spectrum.energies;
    check_size(e.len(), q, options.cap)?;
    let sums = if q == 1 {
        e.clone()
    } else {
        match options.strategy {
            Strategy::Materialize => materialize(e, q, options.compensated),
            Strategy::HeapMerge => QSumStream::new(e, q, options.compensated).collect(),
        }
    };
    Ok(QSumSpectrum {
        q,
        base: spectrum.source.clone(),
        sums,
    })
}

fn extend_sums(e: &[f64], start: usize, left: usize, acc: Acc, compensated: bool, out: &mut Vec<f64>) {
    if left == 1 {
        out.extend(e[start..].iter().map(|&x| acc.add(x, compensated).value()));
        return;
    }
    for j in start..=e.len() - left {
        extend_sums(e, j + 1, left - 1, acc.add(e[j], compensated), compensated, out);
    }
}

fn materialize(e: &[f64], q: usize, compensated: bool) -> Vec<f64> {
    let n = e.len();
    if q > n {
        return Vec::new();
    }
    let blocks: Vec<Vec<f64>> = (0..=n - q)
        .into_par_iter()
        .map(|lead| {
            let mut out = Vec::with_capacity(binomial(n - lead - 1, q - 1) as usize);
            extend_sums(e, lead + 1, q - 1, Acc::default().add(e[lead], compensated), compensated, &mut out);
            out
        })
        .collect();
    let mut sums = Vec::with_capacity(binomial(n, q) as usize);
    for block in blocks {
        sums.extend(block);
    }
    sums.par_sort_unstable_by(f64::total_cmp);
    sums
}

#[derive(Debug, Clone, Copy)]
struct Run {
    value: f64,
    prefix: Acc,
    next: usize,
}

impl PartialEq for Run {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Run {}
impl PartialOrd for Run {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Run {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.next.cmp(&other.next))
    }
}

/// Ascending stream of q-sums (`q ≥ 2`), merged from the runs that share
/// their first `q-1` indices.
pub struct QSumStream<'a> {
    energies: &'a [f64],
    compensated: bool,
    heap: BinaryHeap<Reverse<Run>>,
}

impl<'a> QSumStream<'a> {
    pub fn new(energies: &'a [f64], q: usize, compensated: bool) -> Self {
        assert!(q >= 2, "streams start at q = 2");
        let mut heap = BinaryHeap::new();
        let n = energies.len();
        if q <= n {
            let mut prefixes = Vec::new();
            collect_prefixes(energies, 0, q - 1, Acc::default(), compensated, n, &mut prefixes);
            for (prefix, last) in prefixes {
                if last + 1 < n {
                    heap.push(Reverse(Run {
                        value: prefix.add(energies[last + 1], compensated).value(),
                        prefix,
                        next: last + 1,
                    }));
                }
            }
        }
        QSumStream {
            energies,
            compensated,
            heap,
        }
    }
}

fn collect_prefixes(
    e: &[f64],
    start: usize,
    left: usize,
    acc: Acc,
    compensated: bool,
    n: usize,
    out: &mut Vec<(Acc, usize)>,
) {
    // leave room for the final index after the prefix
    for j in start..n.saturating_sub(left) {
        let a = acc.add(e[j], compensated);
        if left == 1 {
            out.push((a, j));
        } else {
            collect_prefixes(e, j + 1, left - 1, a, compensated, n, out);
        }
    }
}

impl Iterator for QSumStream<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let Reverse(run) = self.heap.pop()?;
        let following = run.next + 1;
        if following < self.energies.len() {
            self.heap.push(Reverse(Run {
                value: run.prefix.add(self.energies[following], self.compensated).value(),
                prefix: run.prefix,
                next: following,
            }));
        }
        Some(run.value)
    }
}

/// Every strictly increasing `q`-tuple whose sum lies in `[lo, hi]`, in
/// lexicographic order, with its sum.
///
/// Depth-first with pruning on the sorted levels: the smallest completion of
/// a prefix is its next consecutive indices and the largest is the top ones.
pub fn qsum_index_tuples(energies: &[f64], q: usize, lo: f64, hi: f64) -> Result<Vec<(Vec<usize>, f64)>> {
    if q == 0 {
        return Err(Error::Spectral("q must be at least 1".into()));
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Spectral("window bounds must be finite".into()));
    }
    if energies.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Spectral("levels must be sorted ascending".into()));
    }
    let mut out = Vec::new();
    if lo > hi || q > energies.len() {
        return Ok(out);
    }
    let mut prefix = Vec::with_capacity(q);
    window_dfs(energies, q, lo, hi, 0, 0.0, &mut prefix, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn window_dfs(
    e: &[f64],
    q: usize,
    lo: f64,
    hi: f64,
    start: usize,
    partial: f64,
    prefix: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, f64)>,
) {
    let n = e.len();
    let left = q - prefix.len();
    for j in start..=n - left {
        // smallest completion: j, j+1, …, j+left-1
        let smallest = e[j..j + left].iter().fold(partial, |s, &x| s + x);
        if smallest > hi {
            break;
        }
        // largest completion: j followed by the top left-1 levels
        let largest = e[n - (left - 1)..].iter().fold(partial + e[j], |s, &x| s + x);
        if largest < lo {
            continue;
        }
        let s = partial + e[j];
        prefix.push(j);
        if left == 1 {
            if s >= lo && s <= hi {
                out.push((prefix.clone(), s));
            }
        } else {
            window_dfs(e, q, lo, hi, j + 1, s, prefix, out);
        }
        prefix.pop();
    }
}
