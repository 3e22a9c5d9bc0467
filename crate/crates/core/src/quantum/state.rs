use num_complex::Complex64 as C64;

use super::operator::{hermitian_eigenvalues, max_abs_diff};
use super::{CMatrix, CVector, Factor, HilbertSpace, Operator};
use crate::error::{Error, Result};

pub const KET_NORM_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const DM_HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Population in the top 10% of Fock levels above which a warning is logged.
pub const TRUNCATION_WARN: f64 = 1e-6;
/// Population in the top 10% of Fock levels above which states are rejected.
pub const TRUNCATION_ERROR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    space: HilbertSpace,
    data: CVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    data: CMatrix,
}

/// Expectation values `<psi|O|psi>` or `tr(rho O)`.
pub trait Expectation {
    fn space(&self) -> HilbertSpace;
    fn expect(&self, op: &Operator) -> Result<C64>;
}

impl Ket {
    /// Wrap a vector without normalizing it.
    pub fn from_vector(space: HilbertSpace, data: CVector) -> Result<Self> {
        if data.len() != space.dim() {
            return Err(Error::InvalidState(format!(
                "ket has length {}, space {} has dimension {}",
                data.len(),
                space,
                space.dim()
            )));
        }
        Ok(Self { space, data })
    }

    /// Wrap and normalize.
    pub fn new(space: HilbertSpace, data: CVector) -> Result<Self> {
        Self::from_vector(space, data)?.normalized()
    }

    pub fn basis(space: HilbertSpace, n: usize, s: usize) -> Result<Self> {
        if n > space.fock_cutoff() || s >= space.spin_dim() {
            return Err(Error::param("basis", format!("|{n},{s}> outside {space}")));
        }
        let mut data = CVector::zeros(space.dim());
        data[space.index(n, s)] = C64::new(1.0, 0.0);
        Ok(Self { space, data })
    }

    /// Fock state `|n>` with the spin (if any) in its lowest level.
    pub fn fock(space: HilbertSpace, n: usize) -> Result<Self> {
        Self::basis(space, n, 0)
    }

    pub fn vacuum(space: HilbertSpace) -> Self {
        Self::basis(space, 0, 0).expect("vacuum always exists")
    }

    /// Coherent state built from the truncated series
    /// `e^{-|alpha|^2/2} sum alpha^n / sqrt(n!) |n>`, tensored with the spin
    /// ground state and renormalized.
    pub fn coherent(space: HilbertSpace, alpha: C64) -> Result<Self> {
        let amps = coherent_amplitudes(space.fock_dim(), alpha);
        let ket = Self::product(space, &amps, 0)?;
        ket.check_truncation()?;
        ket.normalized()
    }

    /// Product of field amplitudes with spin basis state `s`.
    pub fn product(space: HilbertSpace, field: &[C64], s: usize) -> Result<Self> {
        if field.len() != space.fock_dim() || s >= space.spin_dim() {
            return Err(Error::InvalidState("field amplitudes do not fit the space".into()));
        }
        let mut data = CVector::zeros(space.dim());
        for (n, amp) in field.iter().enumerate() {
            data[space.index(n, s)] = *amp;
        }
        Ok(Self { space, data })
    }

    /// Tensor product of a field ket (oscillator-only space) and a spin vector.
    pub fn tensor(field: &Ket, spin: &CVector) -> Result<Self> {
        if field.space.has_spin() {
            return Err(Error::InvalidState("field ket must live in an oscillator-only space".into()));
        }
        let space = HilbertSpace::new(field.space.fock_cutoff(), spin.len())?;
        Ok(Self {
            space,
            data: field.data.kronecker(spin),
        })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn data(&self) -> &CVector {
        &self.data
    }

    pub fn into_data(self) -> CVector {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite ket".into()));
        }
        self.data.unscale_mut(n);
        Ok(self)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < KET_NORM_TOL
    }

    pub fn inner(&self, other: &Ket) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        Ok(self.data.dotc(&other.data))
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Ket) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn apply(&self, op: &Operator) -> Result<Ket> {
        self.space.ensure_same(&op.space())?;
        Ok(Self {
            space: self.space,
            data: op.apply(&self.data),
        })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space,
            data: &self.data * self.data.adjoint(),
        }
    }

    /// Population of each Fock level (spin summed).
    pub fn fock_populations(&self) -> Vec<f64> {
        let sd = self.space.spin_dim();
        (0..self.space.fock_dim())
            .map(|n| (0..sd).map(|s| self.data[n * sd + s].norm_sqr()).sum())
            .collect()
    }

    pub fn truncation_weight(&self) -> f64 {
        top_weight(&self.fock_populations(), self.norm().powi(2))
    }

    pub fn check_truncation(&self) -> Result<()> {
        check_truncation_weight(self.truncation_weight())
    }
}

impl Expectation for Ket {
    fn space(&self) -> HilbertSpace {
        self.space
    }

    fn expect(&self, op: &Operator) -> Result<C64> {
        self.space.ensure_same(&op.space())?;
        Ok(self.data.dotc(&op.apply(&self.data)))
    }
}

impl DensityMatrix {
    /// Validated construction: trace 1, Hermitian, positive semidefinite.
    pub fn new(space: HilbertSpace, data: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(space, data)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape check only. Used by integrators, which monitor validity
    /// separately.
    pub fn from_matrix_unchecked(space: HilbertSpace, data: CMatrix) -> Result<Self> {
        let d = space.dim();
        if data.nrows() != d || data.ncols() != d {
            return Err(Error::InvalidState(format!(
                "density matrix is {}x{}, space {} needs {d}x{d}",
                data.nrows(),
                data.ncols(),
                space
            )));
        }
        Ok(Self { space, data })
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.data.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herm = max_abs_diff(&self.data, &self.data.adjoint());
        if herm > DM_HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Replace `rho` by `(rho + rho^dagger)/2`.
    pub fn symmetrize(&mut self) {
        let adj = self.data.adjoint();
        self.data += adj;
        self.data *= C64::new(0.5, 0.0);
    }

    pub fn fock_populations(&self) -> Vec<f64> {
        let sd = self.space.spin_dim();
        (0..self.space.fock_dim())
            .map(|n| (0..sd).map(|s| self.data[(n * sd + s, n * sd + s)].re).sum())
            .collect()
    }

    pub fn truncation_weight(&self) -> f64 {
        top_weight(&self.fock_populations(), self.trace().re)
    }

    pub fn check_truncation(&self) -> Result<()> {
        check_truncation_weight(self.truncation_weight())
    }
}

impl Expectation for DensityMatrix {
    fn space(&self) -> HilbertSpace {
        self.space
    }

    fn expect(&self, op: &Operator) -> Result<C64> {
        self.space.ensure_same(&op.space())?;
        // tr(rho O) = sum_ij rho_ij O_ji
        let m = op.matrix();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..self.data.ncols() {
            for i in 0..self.data.nrows() {
                acc += self.data[(i, j)] * m[(j, i)];
            }
        }
        Ok(acc)
    }
}

/// Trace out one factor, returning the reduced matrix on the other factor.
pub fn partial_trace(rho: &DensityMatrix, traced: Factor) -> CMatrix {
    let fd = rho.space.fock_dim();
    let sd = rho.space.spin_dim();
    let m = &rho.data;
    match traced {
        Factor::Spin => CMatrix::from_fn(fd, fd, |n, k| {
            (0..sd).map(|s| m[(n * sd + s, k * sd + s)]).sum()
        }),
        Factor::Field => CMatrix::from_fn(sd, sd, |s, t| {
            (0..fd).map(|n| m[(n * sd + s, n * sd + t)]).sum()
        }),
    }
}

/// Reduced oscillator state (spin traced out).
pub fn field_state(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix {
        space: rho.space.field_space(),
        data: partial_trace(rho, Factor::Spin),
    }
}

/// Truncated coherent amplitudes `e^{-|alpha|^2/2} alpha^n / sqrt(n!)`.
pub fn coherent_amplitudes(fock_dim: usize, alpha: C64) -> Vec<C64> {
    let mut out = Vec::with_capacity(fock_dim);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..fock_dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

fn top_weight(populations: &[f64], total: f64) -> f64 {
    let levels = populations.len();
    let top = ((levels as f64) * 0.1).ceil().max(1.0) as usize;
    let w: f64 = populations[levels - top..].iter().sum();
    if total > 0.0 {
        w / total
    } else {
        w
    }
}

pub(crate) fn check_truncation_weight(weight: f64) -> Result<()> {
    if weight > TRUNCATION_ERROR {
        Err(Error::TruncationUnsafe { weight })
    } else {
        if weight > TRUNCATION_WARN {
            log::warn!("Fock truncation: {weight:.3e} of the norm in the top 10% of levels");
        }
        Ok(())
    }
}
