//! Hilbert-space primitives: composite Fock x spin spaces, dense operators,
//! kets and density matrices.

mod operator;
pub mod ops;
pub mod sparse;
mod space;
mod state;

pub use operator::{CMatrix, CVector, Operator, HERMITIAN_TOL, UNITARY_TOL};
pub use ops::{
    annihilation, collective_spin, creation, displacement, embed, number, pauli, quadratures,
    sigma, squeeze, tensor_embed, CollectiveSpin, PauliSet,
};
pub use space::{Factor, HilbertSpace};
pub use state::{
    coherent_amplitudes, field_state, partial_trace, DensityMatrix, Expectation, Ket,
    POSITIVITY_TOL, TRUNCATION_ERROR, TRUNCATION_WARN,
};
