use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::HilbertSpace;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Hermiticity tolerance for operators that are Hermitian by construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unitarity tolerance for matrix exponentials of anti-Hermitian generators.
pub const UNITARY_TOL: f64 = 1e-10;

/// Dense operator tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidState(format!(
                "operator matrix is {}x{}, space {} needs {d}x{d}",
                matrix.nrows(),
                matrix.ncols(),
                space
            )));
        }
        Ok(Self { space, matrix })
    }

    /// Construct and check Hermiticity within [`HERMITIAN_TOL`].
    pub fn hermitian(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let op = Self::new(space, matrix)?;
        op.ensure_hermitian()?;
        Ok(op)
    }

    pub fn zero(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn plus(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn minus(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn scale(&self, c: impl Into<C64>) -> Operator {
        Self {
            space: self.space,
            matrix: &self.matrix * c.into(),
        }
    }

    pub fn dagger(&self) -> Operator {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `max |M - M^dagger|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    /// `max |M^dagger M - 1|` over all entries.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        max_abs_diff(&(self.matrix.adjoint() * &self.matrix), &CMatrix::identity(d, d))
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < HERMITIAN_TOL
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() < UNITARY_TOL
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let err = self.hermiticity_error();
        if err < HERMITIAN_TOL {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "operator is not Hermitian (max deviation {err:.3e})"
            )))
        }
    }

    /// Matrix exponential (scaling and squaring with Pade approximants).
    pub fn exp(&self) -> Operator {
        Self {
            space: self.space,
            matrix: self.matrix.exp(),
        }
    }

    /// Ascending eigenvalues of a Hermitian operator.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.ensure_hermitian()?;
        Ok(hermitian_eigenvalues(&self.matrix))
    }

    /// Ascending eigenpairs of a Hermitian operator; column `k` of the
    /// returned matrix is the eigenvector for eigenvalue `k`.
    pub fn eigh(&self) -> Result<(Vec<f64>, CMatrix)> {
        self.ensure_hermitian()?;
        Ok(hermitian_eigh(&self.matrix))
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(max_abs_diff(&self.matrix, &other.matrix))
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = symmetrized(m);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub(crate) fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = symmetrized(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

fn symmetrized(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_mismatch_rejected() {
        let a = Operator::identity(HilbertSpace::new(3, 2).unwrap());
        let b = Operator::identity(HilbertSpace::new(3, 1).unwrap());
        assert!(matches!(a.plus(&b), Err(Error::SpaceMismatch { .. })));
        assert!(a.compose(&b).is_err());
        assert!(a.commutator(&b).is_err());
    }

    #[test]
    fn wrong_shape_rejected() {
        let s = HilbertSpace::new(3, 2).unwrap();
        assert!(Operator::new(s, CMatrix::zeros(4, 4)).is_err());
    }

    #[test]
    fn eigh_sorted() {
        let s = HilbertSpace::new(2, 1).unwrap();
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let op = Operator::hermitian(s, m).unwrap();
        assert_eq!(op.eigenvalues().unwrap(), vec![-1.0, 2.0, 3.0]);
    }
}
