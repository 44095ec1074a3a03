//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use levelstat_core::chain::{ChainSpec, Couplings, Parity, Sector};
use levelstat_core::Mat;

/// Adaptive Simpson quadrature on `[a, b]`, started from 64 equal panels so
/// that narrow features are not missed by the first coarse estimate.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| integrate_panel(f, a + i as f64 * h, a + (i + 1) as f64 * h, tol / PANELS as f64))
        .sum()
}

fn integrate_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

type Op = [[f64; 2]; 2];

// Single-site operators in the basis (down, up); bit set = up.
const ID: Op = [[1.0, 0.0], [0.0, 1.0]];
const SP: Op = [[0.0, 0.0], [1.0, 0.0]];
const SM: Op = [[0.0, 1.0], [0.0, 0.0]];
const SZ: Op = [[-0.5, 0.0], [0.0, 0.5]];

/// `op_{L-1} ⊗ ... ⊗ op_0`, so that site `j` is bit `j` of the row index.
fn kron_sites(ops: &[Op]) -> Mat<f64> {
    let mut m = Mat::<f64>::from_fn(1, 1, |_, _| 1.0);
    for op in ops.iter().rev() {
        let n = m.nrows();
        m = Mat::from_fn(2 * n, 2 * n, |r, c| op[r / n][c / n] * m[(r % n, c % n)]);
    }
    m
}

fn two_site(sites: usize, i: usize, a: Op, j: usize, b: Op) -> Mat<f64> {
    let ops: Vec<Op> = (0..sites)
        .map(|s| if s == i { a } else if s == j { b } else { ID })
        .collect();
    kron_sites(&ops)
}

/// Full `2^L` Hamiltonian assembled from Kronecker products of spin operators.
pub fn kron_hamiltonian(sites: usize, c: &Couplings) -> Mat<f64> {
    let dim = 1usize << sites;
    let mut h = Mat::<f64>::zeros(dim, dim);
    for (range, j, g) in [(1, c.j1, c.g1), (2, c.j2, c.g2)] {
        for i in 0..sites {
            let k = (i + range) % sites;
            let up = two_site(sites, i, SP, k, SM);
            let down = two_site(sites, i, SM, k, SP);
            let ising = two_site(sites, i, SZ, k, SZ);
            for col in 0..dim {
                for row in 0..dim {
                    h[(row, col)] += j * (up[(row, col)] + down[(row, col)]) + g * ising[(row, col)];
                }
            }
        }
    }
    h
}

/// Every symmetry block of the chain, with each symmetry resolved wherever
/// it is compatible with the others.
pub fn all_sectors(sites: usize, couplings: Couplings) -> Vec<ChainSpec> {
    let half = sites as i32 / 2;
    let parities = [Parity::Even, Parity::Odd];
    let mut out = Vec::new();
    for mz in -half..=half {
        for k in 0..sites {
            let refl: Vec<Option<Parity>> = if k == 0 || k == sites / 2 {
                parities.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            let flip: Vec<Option<Parity>> = if mz == 0 {
                parities.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for &reflection in &refl {
                for &spin_flip in &flip {
                    let sector = Sector {
                        mz,
                        momentum: Some(k),
                        reflection,
                        spin_flip,
                    };
                    out.push(ChainSpec::new(sites, couplings, sector).unwrap());
                }
            }
        }
    }
    out
}

/// Unordered pairs of distinct q-subsets with equal sums, by brute force over
/// subset bitmasks.
pub fn brute_force_violations(levels: &[i64], q: usize) -> usize {
    let n = levels.len();
    let subsets: Vec<i64> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == q)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).map(|i| levels[i]).sum())
        .collect();
    let mut count = 0;
    for a in 0..subsets.len() {
        for b in a + 1..subsets.len() {
            if subsets[a] == subsets[b] {
                count += 1;
            }
        }
    }
    count
}

/// Sorted copy, compared elementwise.
pub fn max_multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets differ in size");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
