use faer::Mat;
use num_complex::Complex64;

use super::basis::{fixed_weight_states, SectorBasis};
use super::{ChainSpec, Couplings};
use crate::spectral::DenseHermitian;

/// Sector Hamiltonian; real whenever the sector character is real.
pub type SectorHamiltonian = DenseHermitian;

/// Applies `H` to the basis state `state`, reporting each `(target, amplitude)`.
/// Off-diagonal hops come first; the diagonal term is reported last, once.
pub fn apply_hamiltonian(
    sites: usize,
    couplings: &Couplings,
    state: u64,
    mut emit: impl FnMut(u64, f64),
) {
    let mut diagonal = 0.0;
    for (range, hop, ising) in [(1, couplings.j1, couplings.g1), (2, couplings.j2, couplings.g2)] {
        if hop == 0.0 && ising == 0.0 {
            continue;
        }
        for j in 0..sites {
            let i = (j + range) % sites;
            let bj = (state >> j) & 1;
            let bi = (state >> i) & 1;
            if bj == bi {
                diagonal += 0.25 * ising;
            } else {
                diagonal -= 0.25 * ising;
                if hop != 0.0 {
                    emit(state ^ ((1 << j) | (1 << i)), hop);
                }
            }
        }
    }
    emit(state, diagonal);
}

/// Dense matrix of `H` restricted to the sector spanned by `basis`.
pub fn build_hamiltonian(basis: &SectorBasis) -> SectorHamiltonian {
    let spec: &ChainSpec = basis.spec();
    let group = basis.group();
    let dim = basis.dimension();
    let norms = basis.norms();

    let mut m = Mat::<Complex64>::zeros(dim, dim);
    for (a, &rep) in basis.representatives().iter().enumerate() {
        apply_hamiltonian(spec.sites, &spec.couplings, rep, |target, amp| {
            let (target_rep, g) = group.representative(target);
            if let Some(b) = basis.index_of(target_rep) {
                let factor = (norms[b] / norms[a]).sqrt();
                m[(b, a)] += group.character(g).conj() * (amp * factor);
            }
        });
    }

    // Round-off can break Hermiticity in the last bit; average it back.
    for i in 0..dim {
        m[(i, i)].im = 0.0;
        for j in 0..i {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }

    if group.is_real() {
        DenseHermitian::Real(Mat::from_fn(dim, dim, |i, j| m[(i, j)].re))
    } else {
        DenseHermitian::Complex(m)
    }
}

/// Unprojected Hamiltonian on all `2^L` states (`mz = None`) or on the states
/// of one magnetization, returned together with the bit strings labelling
/// rows and columns.
pub fn full_hamiltonian(
    sites: usize,
    couplings: &Couplings,
    mz: Option<i32>,
) -> (Vec<u64>, Mat<f64>) {
    let states: Vec<u64> = match mz {
        Some(mz) => fixed_weight_states(sites, (mz + sites as i32 / 2) as usize).collect(),
        None => (0..1u64 << sites).collect(),
    };
    let index: std::collections::HashMap<u64, usize> =
        states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = states.len();
    let mut m = Mat::<f64>::zeros(n, n);
    for (a, &s) in states.iter().enumerate() {
        apply_hamiltonian(sites, couplings, s, |t, amp| {
            m[(index[&t], a)] += amp;
        });
    }
    (states, m)
}
