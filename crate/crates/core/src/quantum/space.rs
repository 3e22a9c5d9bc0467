use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Composite Hilbert space: a Fock ladder truncated at `fock_cutoff`
/// tensored with a spin factor of dimension `spin_dim`.
///
/// Basis ordering is field-major: `|n, s>` sits at index `n * spin_dim + s`.
/// Spin index 0 is the lowest `J_z` eigenstate (the ground state `|g>` for a
/// single two-level system).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    fock_cutoff: usize,
    spin_dim: usize,
}

/// One tensor factor of a [`HilbertSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Field,
    Spin,
}

impl HilbertSpace {
    pub fn new(fock_cutoff: usize, spin_dim: usize) -> Result<Self> {
        if fock_cutoff < 2 {
            return Err(Error::param(
                "fock_cutoff",
                format!("must be at least 2, got {fock_cutoff}"),
            ));
        }
        if spin_dim < 1 {
            return Err(Error::param("spin_dim", "must be at least 1"));
        }
        Ok(Self {
            fock_cutoff,
            spin_dim,
        })
    }

    /// Oscillator-only space.
    pub fn oscillator(fock_cutoff: usize) -> Result<Self> {
        Self::new(fock_cutoff, 1)
    }

    /// Oscillator coupled to one spin-1/2.
    pub fn rabi(fock_cutoff: usize) -> Result<Self> {
        Self::new(fock_cutoff, 2)
    }

    /// Oscillator coupled to the symmetric subspace of `n_spins` spins
    /// (collective spin `j = n_spins / 2`).
    pub fn dicke(fock_cutoff: usize, n_spins: usize) -> Result<Self> {
        if n_spins < 1 {
            return Err(Error::param("n_spins", "must be at least 1"));
        }
        Self::new(fock_cutoff, n_spins + 1)
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    /// Number of Fock levels, `fock_cutoff + 1`.
    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn dim(&self) -> usize {
        self.fock_dim() * self.spin_dim
    }

    pub fn has_spin(&self) -> bool {
        self.spin_dim > 1
    }

    pub fn index(&self, n: usize, s: usize) -> usize {
        debug_assert!(n <= self.fock_cutoff && s < self.spin_dim);
        n * self.spin_dim + s
    }

    /// The oscillator factor alone.
    pub fn field_space(&self) -> HilbertSpace {
        HilbertSpace {
            fock_cutoff: self.fock_cutoff,
            spin_dim: 1,
        }
    }

    pub fn factor_dim(&self, factor: Factor) -> usize {
        match factor {
            Factor::Field => self.fock_dim(),
            Factor::Spin => self.spin_dim,
        }
    }

    pub(crate) fn ensure_same(&self, other: &HilbertSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                left: *self,
                right: *other,
            })
        }
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Fock[0..={}] x spin[{}]",
            self.fock_cutoff, self.spin_dim
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        let s = HilbertSpace::new(10, 3).unwrap();
        assert_eq!(s.fock_dim(), 11);
        assert_eq!(s.dim(), 33);
        assert_eq!(s.index(2, 1), 7);
        assert_eq!(s.field_space().dim(), 11);
        assert_eq!(HilbertSpace::dicke(5, 4).unwrap().spin_dim(), 5);
    }

    #[test]
    fn rejects_small_cutoff() {
        assert!(HilbertSpace::new(1, 2).is_err());
        assert!(HilbertSpace::new(2, 0).is_err());
        assert!(HilbertSpace::dicke(4, 0).is_err());
    }
}
