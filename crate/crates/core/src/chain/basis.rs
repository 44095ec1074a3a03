use std::collections::HashMap;

use num_complex::Complex64;

use super::ChainSpec;
use crate::error::Result;

/// Projected norms below this are treated as zero.
const NORM_TOL: f64 = 1e-8;

/// The map `s ↦ T^shift P^reflect Z^flip s` on bit strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupElement {
    pub shift: usize,
    pub reflect: bool,
    pub flip: bool,
}

impl GroupElement {
    #[inline]
    pub fn apply(&self, state: u64, sites: usize) -> u64 {
        let mask = low_mask(sites);
        let mut s = state;
        if self.flip {
            s ^= mask;
        }
        if self.reflect {
            s = s.reverse_bits() >> (64 - sites);
        }
        if self.shift != 0 {
            s = ((s << self.shift) | (s >> (sites - self.shift))) & mask;
        }
        s
    }
}

#[inline]
pub(crate) fn low_mask(sites: usize) -> u64 {
    if sites == 64 {
        u64::MAX
    } else {
        (1u64 << sites) - 1
    }
}

/// The symmetry group of a sector together with the one-dimensional
/// character selecting the sector: `χ(T^j P^a Z^b) = e^{2πikj/L} p^a z^b`.
#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    sites: usize,
    elements: Vec<GroupElement>,
    characters: Vec<Complex64>,
}

impl SymmetryGroup {
    pub fn for_spec(spec: &ChainSpec) -> Self {
        let l = spec.sites;
        let sector = &spec.sector;
        let shifts = if sector.momentum.is_some() { l } else { 1 };
        let reflects: &[bool] = if sector.reflection.is_some() {
            &[false, true]
        } else {
            &[false]
        };
        let flips: &[bool] = if sector.spin_flip.is_some() {
            &[false, true]
        } else {
            &[false]
        };
        let k = sector.momentum.unwrap_or(0) as f64;
        let p = sector.reflection.map_or(1.0, |p| p.sign());
        let z = sector.spin_flip.map_or(1.0, |z| z.sign());

        let mut elements = Vec::new();
        let mut characters = Vec::new();
        for shift in 0..shifts {
            let phase = Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * k * shift as f64 / l as f64,
            );
            for &reflect in reflects {
                for &flip in flips {
                    let mut chi = phase;
                    if reflect {
                        chi *= p;
                    }
                    if flip {
                        chi *= z;
                    }
                    elements.push(GroupElement {
                        shift,
                        reflect,
                        flip,
                    });
                    characters.push(snap(chi));
                }
            }
        }
        SymmetryGroup {
            sites: l,
            elements,
            characters,
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn character(&self, element: usize) -> Complex64 {
        self.characters[element]
    }

    /// Whether every character value is real, so the sector Hamiltonian is real.
    pub fn is_real(&self) -> bool {
        self.characters.iter().all(|c| c.im == 0.0)
    }

    /// Smallest image of `state` under the group, and the index of the
    /// first element attaining it.
    pub fn representative(&self, state: u64) -> (u64, usize) {
        let mut best = state;
        let mut best_g = 0;
        for (i, g) in self.elements.iter().enumerate().skip(1) {
            let image = g.apply(state, self.sites);
            if image < best {
                best = image;
                best_g = i;
            }
        }
        (best, best_g)
    }

    /// Squared norm of `Σ_g χ(g)* g|r⟩`.
    fn projected_norm(&self, rep: u64) -> f64 {
        let mut stabilizer_sum = Complex64::new(0.0, 0.0);
        let mut stabilizer_size = 0usize;
        for (g, chi) in self.elements.iter().zip(&self.characters) {
            if g.apply(rep, self.sites) == rep {
                stabilizer_sum += chi.conj();
                stabilizer_size += 1;
            }
        }
        let orbit = self.order() / stabilizer_size;
        orbit as f64 * stabilizer_sum.norm_sqr()
    }
}

/// Rounds roots of unity that should be exactly `±1` or `±i`.
fn snap(c: Complex64) -> Complex64 {
    let r = |x: f64| {
        if x.abs() < 1e-14 {
            0.0
        } else if (x.abs() - 1.0).abs() < 1e-14 {
            x.signum()
        } else {
            x
        }
    };
    Complex64::new(r(c.re), r(c.im))
}

/// Orbit representatives of a symmetry sector.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    spec: ChainSpec,
    group: SymmetryGroup,
    representatives: Vec<u64>,
    norms: Vec<f64>,
    lookup: HashMap<u64, usize>,
}

impl SectorBasis {
    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }

    pub fn dimension(&self) -> usize {
        self.representatives.len()
    }

    /// Representatives in increasing integer order.
    pub fn representatives(&self) -> &[u64] {
        &self.representatives
    }

    /// Squared projected norms `N_r`, aligned with [`Self::representatives`].
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn index_of(&self, rep: u64) -> Option<usize> {
        self.lookup.get(&rep).copied()
    }
}

/// All bit strings of `sites` bits with `ones` bits set, in increasing order.
pub(crate) fn fixed_weight_states(sites: usize, ones: usize) -> impl Iterator<Item = u64> {
    let limit = 1u64 << sites;
    let first = if ones == 0 { 0 } else { low_mask(ones) };
    let mut next = Some(first);
    std::iter::from_fn(move || {
        let cur = next?;
        if cur >= limit {
            return None;
        }
        // Gosper's hack
        next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            if n >= limit || n <= cur {
                None
            } else {
                Some(n)
            }
        };
        Some(cur)
    })
}

/// Enumerates the orbit representatives with non-vanishing projection.
pub fn enumerate_sector_basis(spec: &ChainSpec) -> Result<SectorBasis> {
    spec.validate()?;
    let group = SymmetryGroup::for_spec(spec);
    let mut representatives = Vec::new();
    let mut norms = Vec::new();
    for state in fixed_weight_states(spec.sites, spec.up_spins()) {
        let (rep, _) = group.representative(state);
        if rep != state {
            continue;
        }
        let norm = group.projected_norm(state);
        if norm > NORM_TOL {
            representatives.push(state);
            norms.push(norm);
        }
    }
    let lookup = representatives
        .iter()
        .enumerate()
        .map(|(i, &r)| (r, i))
        .collect();
    Ok(SectorBasis {
        spec: *spec,
        group,
        representatives,
        norms,
        lookup,
    })
}
