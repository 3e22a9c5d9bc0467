//! Standard quantum-optics operators on a [`HilbertSpace`].
//!
//! Every builder returns an operator on the full composite space; local
//! factors are embedded with the identity on the other factor.

use num_complex::Complex64 as C64;

use super::{CMatrix, Factor, HilbertSpace, Operator};
use crate::error::{Error, Result};

/// Kronecker embedding of a local matrix acting on one factor.
pub fn embed(space: HilbertSpace, which: Factor, local: &CMatrix) -> Result<Operator> {
    let d = space.factor_dim(which);
    if local.nrows() != d || local.ncols() != d {
        return Err(Error::InvalidState(format!(
            "local {which:?} operator is {}x{}, factor dimension is {d}",
            local.nrows(),
            local.ncols()
        )));
    }
    let fd = space.fock_dim();
    let sd = space.spin_dim();
    let matrix = match which {
        Factor::Field => local.kronecker(&CMatrix::identity(sd, sd)),
        Factor::Spin => CMatrix::identity(fd, fd).kronecker(local),
    };
    Operator::new(space, matrix)
}

/// Alias of [`embed`] under its conventional name.
pub fn tensor_embed(space: HilbertSpace, which: Factor, local: &CMatrix) -> Result<Operator> {
    embed(space, which, local)
}

/// Truncated annihilation operator on the Fock factor alone.
pub fn field_annihilation(fock_dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(fock_dim, fock_dim);
    for n in 1..fock_dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// `a` with `<n-1|a|n> = sqrt(n)`, identity on the spin factor.
pub fn annihilation(space: HilbertSpace) -> Result<Operator> {
    embed(space, Factor::Field, &field_annihilation(space.fock_dim()))
}

pub fn creation(space: HilbertSpace) -> Result<Operator> {
    Ok(annihilation(space)?.dagger())
}

pub fn number(space: HilbertSpace) -> Result<Operator> {
    let fd = space.fock_dim();
    let n = CMatrix::from_fn(fd, fd, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    embed(space, Factor::Field, &n)
}

/// Quadratures `X = (a + a^dagger)/2` and `P = (a - a^dagger)/2i`.
pub fn quadratures(space: HilbertSpace) -> Result<(Operator, Operator)> {
    let a = annihilation(space)?;
    let ad = a.dagger();
    let x = a.plus(&ad)?.scale(0.5);
    let p = a.minus(&ad)?.scale(C64::new(0.0, -0.5));
    Ok((x, p))
}

/// Single spin-1/2 operators. Index 0 is `|g>` (sigma_z = -1), index 1 is
/// `|e>`; `sigma^{ij} = |i><j|` with 1 = g, 2 = e.
#[derive(Clone, Debug)]
pub struct PauliSet {
    pub sz: Operator,
    pub sx: Operator,
    /// `sigma_+ = sigma^{21} = |e><g|`
    pub sp: Operator,
    /// `sigma_- = sigma^{12} = |g><e|`
    pub sm: Operator,
    /// `sigma^{22} = |e><e|`
    pub see: Operator,
}

pub fn pauli(space: HilbertSpace) -> Result<PauliSet> {
    if space.spin_dim() != 2 {
        return Err(Error::param(
            "spin_dim",
            format!("Pauli operators need spin_dim 2, got {}", space.spin_dim()),
        ));
    }
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let local = |m: [[C64; 2]; 2]| CMatrix::from_fn(2, 2, |i, j| m[i][j]);
    let sz = local([[-one, zero], [zero, one]]);
    let sp = local([[zero, zero], [one, zero]]);
    let sm = local([[zero, one], [zero, zero]]);
    let see = local([[zero, zero], [zero, one]]);
    let sx = &sp + &sm;
    Ok(PauliSet {
        sz: embed(space, Factor::Spin, &sz)?,
        sx: embed(space, Factor::Spin, &sx)?,
        sp: embed(space, Factor::Spin, &sp)?,
        sm: embed(space, Factor::Spin, &sm)?,
        see: embed(space, Factor::Spin, &see)?,
    })
}

/// `sigma^{ij} = |i><j|` for a single spin-1/2, `i, j` in `{1, 2}`.
pub fn sigma(space: HilbertSpace, i: usize, j: usize) -> Result<Operator> {
    if space.spin_dim() != 2 {
        return Err(Error::param("spin_dim", "sigma^{ij} needs spin_dim 2"));
    }
    if !(1..=2).contains(&i) || !(1..=2).contains(&j) {
        return Err(Error::param("sigma", format!("indices must be 1 or 2, got {i}{j}")));
    }
    let mut m = CMatrix::zeros(2, 2);
    m[(i - 1, j - 1)] = C64::new(1.0, 0.0);
    embed(space, Factor::Spin, &m)
}

/// Collective angular momentum for spin `j = (spin_dim - 1)/2`, basis
/// ordered by ascending `m`.
#[derive(Clone, Debug)]
pub struct CollectiveSpin {
    pub j: f64,
    pub jz: Operator,
    pub jx: Operator,
    pub jp: Operator,
    pub jm: Operator,
}

pub fn local_collective(spin_dim: usize) -> (CMatrix, CMatrix, CMatrix) {
    let j = (spin_dim as f64 - 1.0) / 2.0;
    let mut jz = CMatrix::zeros(spin_dim, spin_dim);
    let mut jp = CMatrix::zeros(spin_dim, spin_dim);
    for k in 0..spin_dim {
        let m = -j + k as f64;
        jz[(k, k)] = C64::new(m, 0.0);
        if k + 1 < spin_dim {
            jp[(k + 1, k)] = C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let jm = jp.adjoint();
    (jz, jp, jm)
}

pub fn collective_spin(space: HilbertSpace) -> Result<CollectiveSpin> {
    let sd = space.spin_dim();
    if sd < 2 {
        return Err(Error::param("spin_dim", "collective spin needs spin_dim >= 2"));
    }
    let (jz, jp, jm) = local_collective(sd);
    let jx = (&jp + &jm) * C64::new(0.5, 0.0);
    Ok(CollectiveSpin {
        j: (sd as f64 - 1.0) / 2.0,
        jz: embed(space, Factor::Spin, &jz)?,
        jx: embed(space, Factor::Spin, &jx)?,
        jp: embed(space, Factor::Spin, &jp)?,
        jm: embed(space, Factor::Spin, &jm)?,
    })
}

/// Largest `|alpha|^2` accepted for a displacement at the given cutoff.
pub fn max_displacement_sq(fock_cutoff: usize) -> f64 {
    fock_cutoff as f64 / 4.0
}

/// Largest `|xi|` accepted for a squeeze at the given cutoff.
pub fn max_squeeze(fock_cutoff: usize) -> f64 {
    (fock_cutoff as f64).ln() / 4.0
}

/// `D(alpha) = exp(alpha a^dagger - alpha^* a)`.
pub fn displacement(space: HilbertSpace, alpha: C64) -> Result<Operator> {
    let limit = max_displacement_sq(space.fock_cutoff());
    if alpha.norm_sqr() >= limit {
        return Err(Error::param(
            "alpha",
            format!(
                "|alpha|^2 = {} too large for cutoff {} (limit {limit})",
                alpha.norm_sqr(),
                space.fock_cutoff()
            ),
        ));
    }
    let a = field_annihilation(space.fock_dim());
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    embed(space, Factor::Field, &gen.exp())
}

/// `S(xi) = exp((xi/2)(a^2 - a^dagger^2))` for real `xi`; `S(r)|0>` with
/// `r > 0` has `Var X = e^{-2r}/4`.
pub fn squeeze(space: HilbertSpace, xi: f64) -> Result<Operator> {
    let limit = max_squeeze(space.fock_cutoff());
    if !xi.is_finite() || xi.abs() >= limit {
        return Err(Error::param(
            "xi",
            format!(
                "|xi| = {} too large for cutoff {} (limit {limit:.4})",
                xi.abs(),
                space.fock_cutoff()
            ),
        ));
    }
    let a = field_annihilation(space.fock_dim());
    let a2 = &a * &a;
    let gen = (&a2 - a2.adjoint()) * C64::new(xi / 2.0, 0.0);
    embed(space, Factor::Field, &gen.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{Ket, Expectation};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn annihilation_matrix_elements() {
        let s = HilbertSpace::oscillator(2).unwrap();
        let a = annihilation(s).unwrap();
        let one = Ket::fock(s, 1).unwrap();
        let zero = Ket::fock(s, 0).unwrap();
        let out = a.apply(one.data());
        assert!((out[0] - c(1.0)).norm() < 1e-15 && out[1].norm() < 1e-15);
        assert!(a.apply(zero.data()).norm() < 1e-15);
    }

    #[test]
    fn canonical_commutator_except_top_level() {
        let s = HilbertSpace::oscillator(6).unwrap();
        let a = annihilation(s).unwrap();
        let comm = a.commutator(&a.dagger()).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j && i < 6 { 1.0 } else if i == j { -6.0 } else { 0.0 };
                assert!((comm.matrix()[(i, j)] - c(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn annihilation_on_coherent_state() {
        let s = HilbertSpace::oscillator(40).unwrap();
        let alpha = c(1.0);
        let psi = Ket::coherent(s, alpha).unwrap();
        let a = annihilation(s).unwrap();
        assert!((psi.expect(&a).unwrap() - alpha).norm() < 1e-8);
    }

    #[test]
    fn cutoff_two_required() {
        assert!(HilbertSpace::oscillator(1).is_err());
    }

    #[test]
    fn pauli_algebra() {
        let s = HilbertSpace::rabi(3).unwrap();
        let p = pauli(s).unwrap();
        let g = Ket::basis(s, 0, 0).unwrap();
        let e = Ket::basis(s, 0, 1).unwrap();
        assert!((p.sz.apply(g.data()) + g.data()).norm() < 1e-15);
        assert!((p.sz.apply(e.data()) - e.data()).norm() < 1e-15);
        let anti = p.sp.compose(&p.sm).unwrap().plus(&p.sm.compose(&p.sp).unwrap()).unwrap();
        assert!(anti.max_abs_diff(&Operator::identity(s)).unwrap() < 1e-15);
        assert!(sigma(s, 1, 2).unwrap().max_abs_diff(&p.sm).unwrap() == 0.0);
        assert!(sigma(s, 2, 1).unwrap().max_abs_diff(&p.sp).unwrap() == 0.0);
        assert!(sigma(s, 2, 2).unwrap().max_abs_diff(&p.see).unwrap() == 0.0);
        assert!(pauli(HilbertSpace::oscillator(3).unwrap()).is_err());
    }

    #[test]
    fn spin_one_jz_spectrum() {
        let s = HilbertSpace::new(2, 3).unwrap();
        let js = collective_spin(s).unwrap();
        let mut ev = js.jz.eigenvalues().unwrap();
        ev.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(ev, vec![-1.0, 0.0, 1.0]);
        // [J+, J-] = 2 J_z
        let comm = js.jp.commutator(&js.jm).unwrap();
        assert!(comm.max_abs_diff(&js.jz.scale(2.0)).unwrap() < 1e-12);
    }

    #[test]
    fn displacement_properties() {
        let s = HilbertSpace::oscillator(60).unwrap();
        let id = displacement(s, c(0.0)).unwrap();
        assert!(id.max_abs_diff(&Operator::identity(s)).unwrap() < 1e-14);

        let d = displacement(s, c(3.0)).unwrap();
        let dm = displacement(s, c(-3.0)).unwrap();
        assert!(d.compose(&dm).unwrap().max_abs_diff(&Operator::identity(s)).unwrap() < 1e-9);
        assert!(d.is_unitary());

        let psi = Ket::from_vector(s, d.apply(Ket::vacuum(s).data())).unwrap();
        let n = psi.expect(&number(s).unwrap()).unwrap().re;
        assert!((n - 9.0).abs() < 1e-6, "n = {n}");

        assert!(displacement(s, c(4.0)).is_err());
    }

    #[test]
    fn squeeze_variance_and_photons() {
        let s = HilbertSpace::oscillator(120).unwrap();
        let r = 0.415183;
        let sq = squeeze(s, r).unwrap();
        let psi = Ket::from_vector(s, sq.apply(Ket::vacuum(s).data())).unwrap();
        let (x, _) = quadratures(s).unwrap();
        let mx = psi.expect(&x).unwrap().re;
        let x2 = psi.expect(&x.compose(&x).unwrap()).unwrap().re;
        let var = x2 - mx * mx;
        assert!((var - (-2.0 * r).exp() / 4.0).abs() < 1e-6);
        assert!((var - 0.108972).abs() < 1e-6);
        let n = psi.expect(&number(s).unwrap()).unwrap().re;
        assert!((n - r.sinh().powi(2)).abs() < 1e-9);
        assert!((n - 0.18252).abs() < 1e-5);

        let id = squeeze(s, 0.0).unwrap();
        assert!(id.max_abs_diff(&Operator::identity(s)).unwrap() < 1e-14);
        let inv = squeeze(s, -r).unwrap();
        assert!(sq.compose(&inv).unwrap().max_abs_diff(&Operator::identity(s)).unwrap() < 1e-9);
        assert!(squeeze(HilbertSpace::oscillator(10).unwrap(), 0.7).is_err());
    }

    #[test]
    fn embed_rejects_wrong_size() {
        let s = HilbertSpace::rabi(3).unwrap();
        assert!(embed(s, Factor::Spin, &CMatrix::identity(3, 3)).is_err());
        assert!(embed(s, Factor::Field, &CMatrix::identity(4, 4)).is_ok());
    }
}
