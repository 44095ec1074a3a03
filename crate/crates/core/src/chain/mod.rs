//! Spin-1/2 chain with nearest and next-nearest neighbour XXZ couplings on a
//! periodic ring, block-diagonalized by its symmetries.
//!
//! ```text
//! H = Σ_j  J1 (S⁺_j S⁻_{j+1} + h.c.) + γ1 Sᶻ_j Sᶻ_{j+1}
//!        + J2 (S⁺_j S⁻_{j+2} + h.c.) + γ2 Sᶻ_j Sᶻ_{j+2}
//! ```
//!
//! Conventions: bit `j` of a basis state set means site `j` is up, `Sᶻ = ±1/2`,
//! and `S⁺|↓⟩ = |↑⟩` with unit matrix element. Boundaries are periodic.
//!
//! The conserved quantities used for block diagonalization are the total
//! magnetization `m_z`, the lattice momentum `k` (translation `T`), the
//! reflection parity `P` (site `j ↦ L-1-j`) and the spin-inversion parity `Z`.

mod basis;
mod hamiltonian;

pub use basis::{enumerate_sector_basis, GroupElement, SectorBasis, SymmetryGroup};
pub use hamiltonian::{apply_hamiltonian, build_hamiltonian, full_hamiltonian, SectorHamiltonian};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported chain. Basis states are stored as `u64` bit strings and
/// the sector enumeration walks every state of fixed magnetization.
pub const MAX_SITES: usize = 30;

/// Coupling constants `(J1, γ1, J2, γ2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub j1: f64,
    pub g1: f64,
    pub j2: f64,
    pub g2: f64,
}

impl Default for Couplings {
    /// The non-integrable point `(−1, 1, −0.2, 0.5)`.
    fn default() -> Self {
        Couplings {
            j1: -1.0,
            g1: 1.0,
            j2: -0.2,
            g2: 0.5,
        }
    }
}

impl Couplings {
    fn has_next_nearest(&self) -> bool {
        self.j2 != 0.0 || self.g2 != 0.0
    }
}

/// Eigenvalue `±1` of an involutive symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl TryFrom<i8> for Parity {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            other => Err(format!("parity must be +1 or -1, got {other}")),
        }
    }
}

impl From<Parity> for i8 {
    fn from(p: Parity) -> i8 {
        match p {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }
}

/// Symmetry sector. `None` leaves the corresponding symmetry unresolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    /// Total magnetization `Σ Sᶻ_j`; the number of up spins is `mz + L/2`.
    pub mz: i32,
    /// Quasi-momentum index `k`, momentum `2πk/L`.
    pub momentum: Option<usize>,
    pub reflection: Option<Parity>,
    pub spin_flip: Option<Parity>,
}

impl Sector {
    /// Fixed magnetization only.
    pub fn magnetization(mz: i32) -> Self {
        Sector {
            mz,
            momentum: None,
            reflection: None,
            spin_flip: None,
        }
    }

    /// `m_z = 0, k = 0, P = +1, Z = +1`.
    pub fn maximally_resolved() -> Self {
        Sector {
            mz: 0,
            momentum: Some(0),
            reflection: Some(Parity::Even),
            spin_flip: Some(Parity::Even),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub sites: usize,
    pub couplings: Couplings,
    pub sector: Sector,
}

impl ChainSpec {
    /// Validated constructor.
    pub fn new(sites: usize, couplings: Couplings, sector: Sector) -> Result<Self> {
        let spec = ChainSpec {
            sites,
            couplings,
            sector,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Default couplings in the `m_z = 0, k = 0, P = Z = +1` block.
    pub fn maximally_resolved(sites: usize) -> Result<Self> {
        Self::new(sites, Couplings::default(), Sector::maximally_resolved())
    }

    pub fn up_spins(&self) -> usize {
        (self.sector.mz + self.sites as i32 / 2) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.sites;
        if l < 4 || !l.is_multiple_of(2) {
            return Err(Error::Chain(format!(
                "site count must be even and at least 4, got {l}"
            )));
        }
        if l > MAX_SITES {
            return Err(Error::Chain(format!(
                "site count {l} exceeds the supported maximum {MAX_SITES}"
            )));
        }
        if l < 6 && self.couplings.has_next_nearest() {
            return Err(Error::Chain(format!(
                "next-nearest bonds wrap onto themselves on a ring of {l} sites; \
                 use L >= 6 or set J2 = g2 = 0"
            )));
        }
        let c = &self.couplings;
        if ![c.j1, c.g1, c.j2, c.g2].iter().all(|x| x.is_finite()) {
            return Err(Error::Chain("couplings must be finite".into()));
        }
        let half = (l / 2) as i32;
        if self.sector.mz.abs() > half {
            return Err(Error::Chain(format!(
                "m_z = {} is outside [-{half}, {half}]",
                self.sector.mz
            )));
        }
        if let Some(k) = self.sector.momentum {
            if k >= l {
                return Err(Error::Chain(format!("momentum index {k} not in [0, {l})")));
            }
        }
        if self.sector.reflection.is_some() {
            if let Some(k) = self.sector.momentum {
                if k != 0 && k != l / 2 {
                    return Err(Error::Chain(format!(
                        "reflection parity requires k = 0 or k = L/2 = {}, got k = {k}",
                        l / 2
                    )));
                }
            }
        }
        if self.sector.spin_flip.is_some() && self.sector.mz != 0 {
            return Err(Error::Chain(format!(
                "spin-inversion parity requires m_z = 0, got m_z = {}",
                self.sector.mz
            )));
        }
        Ok(())
    }
}
