//! Closed-form results for the effective squeezed oscillator: squeezing
//! parameters, squeezed Fock and coherent states, kicked orbits and
//! variances, the driven-damped steady orbit and its tilt, and the
//! Bogoliubov diagonalization.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::RabiSystem;
use crate::quantum::{self, coherent_amplitudes, CVector, HilbertSpace, Ket};

/// Squeezing quantities for `0 <= g < g_c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    /// `xi = ln(1 - g^2/g_c^2) / 4 <= 0`.
    pub xi: f64,
    /// `r = |xi|`.
    pub r: f64,
    /// `epsilon = 1 - g^2/g_c^2`.
    pub epsilon: f64,
    /// `omega sqrt(epsilon)`.
    pub omega_eff: f64,
}

fn normal_phase(sys: &RabiSystem) -> Result<f64> {
    let g_c = sys.critical_coupling()?;
    if !(sys.g >= 0.0 && sys.g < g_c) {
        return Err(Error::Superradiant { g: sys.g, g_c });
    }
    Ok(sys.epsilon())
}

pub fn squeeze_params(sys: &RabiSystem) -> Result<SqueezeParams> {
    let epsilon = normal_phase(sys)?;
    let xi = 0.25 * epsilon.ln();
    Ok(SqueezeParams {
        xi,
        r: -xi,
        epsilon,
        omega_eff: sys.omega * epsilon.sqrt(),
    })
}

fn spin_ground(space: HilbertSpace) -> CVector {
    let mut v = CVector::zeros(space.spin_dim());
    v[0] = C64::new(1.0, 0.0);
    v
}

fn squeezed_field(space: HilbertSpace, field: CVector, xi: f64) -> Result<Ket> {
    let osc = space.field_space();
    let s = quantum::squeeze(osc, xi)?;
    let ket = Ket::new(osc, s.apply(&field))?;
    ket.check_truncation()?;
    if space.has_spin() {
        Ket::tensor(&ket, &spin_ground(space))
    } else {
        Ok(ket)
    }
}

/// `S(xi)|n>` with `S(xi) = exp((xi/2)(a^2 - a^dagger^2))`, spin (if any)
/// in its ground state.
pub fn squeezed_fock_state(space: HilbertSpace, n: usize, xi: f64) -> Result<Ket> {
    if n > space.fock_cutoff() {
        return Err(Error::param("n", format!("{n} exceeds cutoff {}", space.fock_cutoff())));
    }
    let mut v = CVector::zeros(space.fock_dim());
    v[n] = C64::new(1.0, 0.0);
    squeezed_field(space, v, xi)
}

/// `N sum_n e^{-i n omega_eff t} alpha^n / sqrt(n!) S(xi)|n>`, i.e. a
/// coherent state `|alpha e^{-i omega_eff t}>` of the squeezed mode.
pub fn squeezed_coherent_state(space: HilbertSpace, alpha: C64, params: &SqueezeParams, t: f64) -> Result<Ket> {
    let beta = alpha * C64::from_polar(1.0, -params.omega_eff * t);
    let amps = CVector::from_vec(coherent_amplitudes(space.fock_dim(), beta));
    squeezed_field(space, amps, params.xi)
}

/// Sign convention for the kicked-orbit formulas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `r = |xi|`: X anti-squeezed, matching the exact ground state.
    #[default]
    Physical,
    /// Exponents `e^{xi}` with `xi < 0` taken literally (X squeezed).
    AsPrinted,
}

impl Convention {
    pub fn marker(self) -> &'static str {
        match self {
            Convention::Physical => "r = |xi|, X anti-squeezed",
            Convention::AsPrinted => "xi < 0 in the exponent, X squeezed",
        }
    }

    fn exponent(self, p: &SqueezeParams) -> f64 {
        match self {
            Convention::Physical => p.r,
            Convention::AsPrinted => p.xi,
        }
    }
}

/// `(<X>, <P>)` of the squeezed coherent state with real amplitude `alpha`.
pub fn kicked_orbit(sys: &RabiSystem, alpha: f64, t: f64, convention: Convention) -> Result<(f64, f64)> {
    let p = squeeze_params(sys)?;
    let e = convention.exponent(&p);
    let ph = p.omega_eff * t;
    Ok((alpha * ph.cos() * e.exp(), -alpha * ph.sin() * (-e).exp()))
}

/// `(Var X, Var P)` of any squeezed coherent state of the effective model.
pub fn kicked_variances(sys: &RabiSystem, convention: Convention) -> Result<(f64, f64)> {
    let p = squeeze_params(sys)?;
    let e = convention.exponent(&p);
    Ok(((2.0 * e).exp() / 4.0, (-2.0 * e).exp() / 4.0))
}

/// Adiabatically eliminated spin coherence
/// `<sigma^12> ~ -(g/2)(<a> e^{i theta} + <a>^* e^{-i theta}) / Omega`.
pub fn adiabatic_sigma12(sys: &RabiSystem, a: C64) -> C64 {
    if sys.spin_omega < 10.0 * sys.omega_d.max(sys.gamma) {
        log::warn!(
            "adiabatic elimination assumes Omega >> omega_d, gamma (Omega = {}, omega_d = {}, gamma = {})",
            sys.spin_omega,
            sys.omega_d,
            sys.gamma
        );
    }
    let e = C64::from_polar(1.0, sys.theta);
    -(sys.g / 2.0) * (e * a + e.conj() * a.conj()) / sys.spin_omega
}

/// Steady-state orbit of the driven, damped quadrature equations:
/// `X(t) = xc cos(omega_d t) + xs sin(omega_d t)`, likewise for `P`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyOrbit {
    pub xc: f64,
    pub xs: f64,
    pub pc: f64,
    pub ps: f64,
    /// Tilt from the closed-form `tan(2 phi)` expression.
    pub tilt: f64,
    /// Major-axis tilt of the orbit ellipse computed from the coefficients.
    pub orbit_tilt: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
}

impl SteadyOrbit {
    pub fn at(&self, omega_d: f64, t: f64) -> (f64, f64) {
        let (c, s) = ((omega_d * t).cos(), (omega_d * t).sin());
        (self.xc * c + self.xs * s, self.pc * c + self.ps * s)
    }
}

fn steady_denominator(sys: &RabiSystem, eps: f64) -> Result<f64> {
    let (w, wd, k) = (sys.omega, sys.omega_d, sys.kappa);
    if k < 0.0 {
        return Err(Error::param("kappa", "must be >= 0"));
    }
    let den = k.powi(4) + 8.0 * k * k * (eps * w * w + wd * wd) + 16.0 * (wd * wd - eps * w * w).powi(2);
    if den <= 1e-300 || !den.is_finite() {
        return Err(Error::param(
            "omega_d",
            "steady state undefined: undamped drive on resonance with the effective oscillator",
        ));
    }
    Ok(den)
}

/// Closed-form steady state `(<X>, <P>)` at time `t`.
pub fn steady_state_means(sys: &RabiSystem, t: f64) -> Result<(f64, f64)> {
    let eps = sys.epsilon();
    let den = steady_denominator(sys, eps)?;
    let (w, wd, k, eta) = (sys.omega, sys.omega_d, sys.kappa, sys.eta);
    let (c, s) = ((wd * t).cos(), (wd * t).sin());
    let x = -2.0
        * eta
        * (2.0 * c * (k * k * (w - wd) + 4.0 * (w + wd) * (eps * w * w - wd * wd))
            + k * s * (k * k + 4.0 * eps * w * w + 4.0 * wd * (2.0 * w + wd)))
        / den;
    let p = (4.0 * eta * s * (k * k * (eps * w - wd) + 4.0 * (eps * w + wd) * (eps * w * w - wd * wd))
        - 2.0 * eta * k * c * (k * k + 4.0 * (eps * w * (w + 2.0 * wd) + wd * wd)))
        / den;
    Ok((x, p))
}

/// Halve an angle from `atan2` and fold it into `(-pi/4, pi/4]`.
fn fold_quarter(two_phi: f64) -> f64 {
    let mut phi = 0.5 * two_phi;
    if phi > FRAC_PI_4 {
        phi -= 2.0 * FRAC_PI_4;
    } else if phi <= -FRAC_PI_4 {
        phi += 2.0 * FRAC_PI_4;
    }
    phi
}

/// `phi` from the closed-form `tan(2 phi)` expression, in `(-pi/4, pi/4]`.
pub fn tilt_angle(sys: &RabiSystem) -> Result<f64> {
    let eps = sys.epsilon();
    steady_denominator(sys, eps)?;
    let (w, wd, k) = (sys.omega, sys.omega_d, sys.kappa);
    let num = k
        * (k.powi(4)
            + 8.0 * k * k * (eps * w * (w + wd) + wd * (w - wd))
            + 16.0 * (eps * w * w - wd * wd) * (eps * w * (w + 2.0 * wd) + wd * (2.0 * w + 3.0 * wd)));
    let den = k.powi(4) * (eps * w + w - 6.0 * wd)
        + 8.0 * k * k * (eps * (eps + 1.0) * w.powi(3) - 2.0 * eps * w * w * wd - 3.0 * (eps + 1.0) * w * wd * wd - 2.0 * wd.powi(3))
        + 16.0 * (eps * w + w + 2.0 * wd) * (wd * wd - eps * w * w).powi(2);
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok(fold_quarter(num.atan2(den)))
}

/// Major-axis tilt of the steady orbit, `tan(2 phi) = kappa / (omega (1 + epsilon) + 2 omega_d)`.
pub fn orbit_tilt(sys: &RabiSystem) -> Result<f64> {
    let eps = sys.epsilon();
    steady_denominator(sys, eps)?;
    Ok(fold_quarter(sys.kappa.atan2(sys.omega * (1.0 + eps) + 2.0 * sys.omega_d)))
}

/// Axes and orientation of the ellipse traced by
/// `(xc cos + xs sin, pc cos + ps sin)`.
pub(crate) fn parametric_ellipse(xc: f64, xs: f64, pc: f64, ps: f64) -> (f64, f64, f64) {
    // Shape matrix M M^T with M = [[xc, xs], [pc, ps]].
    let sxx = xc * xc + xs * xs;
    let spp = pc * pc + ps * ps;
    let sxp = xc * pc + xs * ps;
    let mean = 0.5 * (sxx + spp);
    let diff = (0.25 * (sxx - spp).powi(2) + sxp * sxp).sqrt();
    let major = (mean + diff).max(0.0).sqrt();
    let minor = (mean - diff).max(0.0).sqrt();
    let angle = if diff == 0.0 { 0.0 } else { 0.5 * (2.0 * sxp).atan2(sxx - spp) };
    (major, minor, angle)
}

pub fn steady_orbit(sys: &RabiSystem) -> Result<SteadyOrbit> {
    let wd = sys.omega_d;
    let (xc, pc) = steady_state_means(sys, 0.0)?;
    let (xs, ps) = if wd == 0.0 {
        (0.0, 0.0)
    } else {
        let quarter = std::f64::consts::FRAC_PI_2 / wd;
        steady_state_means(sys, quarter)?
    };
    let (semi_major, semi_minor, _) = parametric_ellipse(xc, xs, pc, ps);
    Ok(SteadyOrbit {
        xc,
        xs,
        pc,
        ps,
        tilt: tilt_angle(sys)?,
        orbit_tilt: orbit_tilt(sys)?,
        semi_major,
        semi_minor,
    })
}

/// Bogoliubov diagonalization `b = a cosh(xi) - a^dagger sinh(xi)` of the
/// undriven effective Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bogoliubov {
    pub omega_diag: f64,
    pub cosh_xi: f64,
    pub sinh_xi: f64,
}

pub fn bogoliubov(sys: &RabiSystem) -> Result<Bogoliubov> {
    let p = squeeze_params(sys)?;
    Ok(Bogoliubov {
        omega_diag: p.omega_eff,
        cosh_xi: p.xi.cosh(),
        sinh_xi: p.xi.sinh(),
    })
}

/// `<a^dagger a>` of the effective ground state, `sinh^2(xi)`.
pub fn naive_photon_number(sys: &RabiSystem) -> Result<f64> {
    Ok(squeeze_params(sys)?.xi.sinh().powi(2))
}

/// Jaynes-Cummings cavity frequency `omega - g^2 / (2 Omega)`.
pub fn dispersive_shift(sys: &RabiSystem) -> f64 {
    sys.omega - sys.g * sys.g / (2.0 * sys.spin_omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_effective;
    use crate::quantum::Expectation;

    fn sys(ratio: f64) -> RabiSystem {
        RabiSystem::new(1.0, 50.0).with_coupling_ratio(ratio)
    }

    fn fig2() -> RabiSystem {
        RabiSystem::new(1.0, 2000.0)
            .with_coupling_ratio(0.8)
            .with_resonant_drive(1.0)
            .with_dissipation(1.0, 1.0)
    }

    #[test]
    fn squeeze_params_values() {
        let p = squeeze_params(&sys(0.0)).unwrap();
        assert_eq!((p.xi, p.r, p.epsilon, p.omega_eff), (0.0, 0.0, 1.0, 1.0));
        let p = squeeze_params(&sys(0.9)).unwrap();
        assert!((p.xi + 0.415183).abs() < 1e-6);
        assert!((p.epsilon - 0.19).abs() < 1e-12);
        assert!((p.omega_eff - 0.435890).abs() < 1e-6);
        assert!((p.omega_eff - (-2.0 * p.r).exp()).abs() < 1e-12);
        assert!((p.epsilon - (-4.0 * p.r).exp()).abs() < 1e-12);
        let p = squeeze_params(&sys(0.8)).unwrap();
        assert!((p.epsilon - 0.36).abs() < 1e-12 && (p.omega_eff - 0.6).abs() < 1e-12);
        assert!(squeeze_params(&sys(1.0)).is_err());
    }

    #[test]
    fn squeezed_fock_states_are_eigenstates() {
        let s = HilbertSpace::oscillator(150).unwrap();
        let sy = sys(0.9);
        let p = squeeze_params(&sy).unwrap();
        let h = build_effective(&sy, s, false).unwrap().at(0.0);
        for n in 0..=3 {
            let k = squeezed_fock_state(s, n, p.xi).unwrap();
            let hk = k.apply(&h).unwrap();
            let e = k.inner(&hk).unwrap().re;
            let want = (n as f64 + 0.5) * p.omega_eff - 0.5;
            assert!((e - want).abs() < 1e-6, "n={n}: {e} vs {want}");
            let resid = (hk.data() - k.data() * C64::new(e, 0.0)).norm();
            assert!(resid < 1e-6, "n={n}: residual {resid}");
        }
        let v = squeezed_fock_state(s, 0, 0.0).unwrap();
        assert!((v.fidelity(&Ket::vacuum(s)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn squeezed_coherent_matches_displaced_squeezed_vacuum() {
        let s = HilbertSpace::oscillator(80).unwrap();
        let p = squeeze_params(&sys(0.9)).unwrap();
        let alpha = C64::new(3.0, 0.0);
        let series = squeezed_coherent_state(s, alpha, &p, 0.0).unwrap();
        // D'(alpha) = S D(alpha) S^dagger applied to S|0>
        let sq = quantum::squeeze(s, p.xi).unwrap();
        let d = quantum::displacement(s, alpha).unwrap();
        let d_prime = sq.compose(&d).unwrap().compose(&sq.dagger()).unwrap();
        let built = Ket::new(s, d_prime.apply(&sq.apply(Ket::vacuum(s).data()))).unwrap();
        assert!(series.fidelity(&built).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn kicked_variances_match_ground_state() {
        let s = HilbertSpace::oscillator(200).unwrap();
        for ratio in [0.1, 0.3, 0.5, 0.7, 0.9, 0.95] {
            let sy = sys(ratio);
            let (_, vecs) = build_effective(&sy, s, false).unwrap().at(0.0).eigh().unwrap();
            let gs = Ket::from_vector(s, vecs.column(0).into_owned()).unwrap();
            let (x, p) = quantum::quadratures(s).unwrap();
            let vx = gs.expect(&x.compose(&x).unwrap()).unwrap().re - gs.expect(&x).unwrap().re.powi(2);
            let vp = gs.expect(&p.compose(&p).unwrap()).unwrap().re - gs.expect(&p).unwrap().re.powi(2);
            let (kx, kp) = kicked_variances(&sy, Convention::Physical).unwrap();
            assert!((vx - kx).abs() < 1e-5 && (vp - kp).abs() < 1e-5, "ratio {ratio}");
            assert!((kx * kp - 1.0 / 16.0).abs() < 1e-15);
        }
        let (kx, kp) = kicked_variances(&sys(0.9), Convention::Physical).unwrap();
        assert!((kx - 0.25 / 0.19f64.sqrt()).abs() < 1e-12 && (kp - 0.25 * 0.19f64.sqrt()).abs() < 1e-12);
        assert!((kx - 0.573537).abs() < 1e-5 && (kp - 0.108972).abs() < 1e-6);
        let (px, pp) = kicked_variances(&sys(0.9), Convention::AsPrinted).unwrap();
        assert!((px - kp).abs() < 1e-15 && (pp - kx).abs() < 1e-15);
        assert_eq!(kicked_variances(&sys(0.0), Convention::Physical).unwrap(), (0.25, 0.25));
    }

    #[test]
    fn kicked_orbit_geometry() {
        let sy = sys(0.9);
        let p = squeeze_params(&sy).unwrap();
        let alpha = 3.0;
        let mut max_x: f64 = 0.0;
        let mut max_p: f64 = 0.0;
        for k in 0..400 {
            let t = k as f64 * 0.05;
            let (x, pp) = kicked_orbit(&sy, alpha, t, Convention::Physical).unwrap();
            let lhs = (x / (alpha * p.r.exp())).powi(2) + (pp / (alpha * (-p.r).exp())).powi(2);
            assert!((lhs - 1.0).abs() < 1e-12);
            max_x = max_x.max(x.abs());
            max_p = max_p.max(pp.abs());
        }
        assert!((alpha * (-p.r).exp() / (alpha * p.r.exp()) - p.omega_eff).abs() < 1e-12);
        assert!(max_p < max_x);
        let (x, pp) = kicked_orbit(&sys(0.0), 2.0, 0.3, Convention::Physical).unwrap();
        assert!((x * x + pp * pp - 4.0).abs() < 1e-12);
    }

    #[test]
    fn kicked_orbit_matches_state_means() {
        let s = HilbertSpace::oscillator(90).unwrap();
        let sy = sys(0.9);
        let p = squeeze_params(&sy).unwrap();
        let (x, pq) = quantum::quadratures(s).unwrap();
        for t in [0.0, 1.3, 4.4, 11.0] {
            let k = squeezed_coherent_state(s, C64::new(3.0, 0.0), &p, t).unwrap();
            let (ox, op) = kicked_orbit(&sy, 3.0, t, Convention::Physical).unwrap();
            assert!((k.expect(&x).unwrap().re - ox).abs() < 1e-6);
            assert!((k.expect(&pq).unwrap().re - op).abs() < 1e-6);
        }
    }

    #[test]
    fn adiabatic_spin_coherence() {
        let f = fig2();
        assert_eq!(adiabatic_sigma12(&f, C64::new(0.0, 0.0)), C64::new(0.0, 0.0));
        let v = adiabatic_sigma12(&f, C64::new(1.0, 0.0));
        assert!((v.re + 0.8 * 2000f64.sqrt() / 2000.0).abs() < 1e-12);
        assert!((v.re + 0.01789).abs() < 1e-5);
    }

    #[test]
    fn adiabatic_elimination_reproduces_effective_drift() {
        // First-order field equation with the eliminated coherence versus
        // the Heisenberg drift of the effective Hamiltonian.
        let f = fig2();
        let lambda = f.g / 2.0;
        let i = C64::new(0.0, 1.0);
        for a in [C64::new(1.0, 0.5), C64::new(-2.0, 0.3), C64::new(0.2, -1.1)] {
            let s12 = adiabatic_sigma12(&f, a);
            let from_meanfield = -i * f.omega * a - i * lambda * (s12 + s12.conj());
            let from_effective = -i * f.omega * a + i * f.g * f.g / (2.0 * f.spin_omega) * (a + a.conj());
            assert!((from_meanfield - from_effective).norm() < 1e-12 * a.norm().max(1.0) + f.omega / f.spin_omega * 1e-6);
        }
    }

    #[test]
    fn steady_state_satisfies_quadrature_equations() {
        let f = fig2();
        let (w, wd, k, eta, eps) = (f.omega, f.omega_d, f.kappa, f.eta, f.epsilon());
        let h = 1e-5;
        let mut seed: u64 = 17;
        for _ in 0..100 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let t = (seed >> 11) as f64 / (1u64 << 53) as f64 * 100.0;
            let (x, p) = steady_state_means(&f, t).unwrap();
            let (x1, p1) = steady_state_means(&f, t + h).unwrap();
            let (x0, p0) = steady_state_means(&f, t - h).unwrap();
            let dx = (x1 - x0) / (2.0 * h);
            let dp = (p1 - p0) / (2.0 * h);
            let rx = dx - (w * p - 0.5 * k * x - eta * (wd * t).sin());
            let rp = dp - (-w * eps * x - 0.5 * k * p - eta * (wd * t).cos());
            assert!(rx.abs() < 1e-9 && rp.abs() < 1e-9, "{rx} {rp}");
        }
    }

    #[test]
    fn steady_state_trivial_cases() {
        let undriven = RabiSystem { eta: 0.0, ..fig2() };
        for t in [0.0, 1.0, 5.5] {
            assert_eq!(steady_state_means(&undriven, t).unwrap(), (0.0, 0.0));
        }
        let resonant = RabiSystem::new(1.0, 100.0).with_coupling_ratio(0.8).with_resonant_drive(1.0);
        assert!(steady_state_means(&resonant, 0.0).is_err());
        let closed = RabiSystem::new(1.0, 100.0).with_coupling_ratio(0.8).with_drive(1.0, 0.3);
        assert_eq!(tilt_angle(&closed).unwrap(), 0.0);
    }

    #[test]
    fn tilt_vanishes_continuously_without_damping() {
        let base = RabiSystem::new(1.0, 100.0).with_coupling_ratio(0.8).with_drive(1.0, 0.3);
        let mut prev = f64::INFINITY;
        for k in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
            let phi = tilt_angle(&RabiSystem { kappa: k, ..base.clone() }).unwrap().abs();
            assert!(phi < prev);
            prev = phi;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn fig2_tilt_values() {
        let f = fig2();
        let printed = tilt_angle(&f).unwrap();
        assert!((printed + 0.2086).abs() < 1e-3, "{printed}");
        let exact = orbit_tilt(&f).unwrap();
        assert!((exact - 0.18620).abs() < 1e-4, "{exact}");
        let orbit = steady_orbit(&f).unwrap();
        let (_, _, angle) = parametric_ellipse(orbit.xc, orbit.xs, orbit.pc, orbit.ps);
        assert!((angle - exact).abs() < 1e-12);
        let (x, p) = orbit.at(f.omega_d, 2.7);
        let (x2, p2) = steady_state_means(&f, 2.7).unwrap();
        assert!((x - x2).abs() < 1e-12 && (p - p2).abs() < 1e-12);
    }

    #[test]
    fn orbit_tilt_formula_across_parameters() {
        for (ratio, wd, k) in [(0.5, 0.3, 0.4), (0.9, 1.2, 2.0), (0.3, 0.05, 0.1), (0.8, 0.6, 1.0)] {
            let s = RabiSystem::new(1.0, 100.0).with_coupling_ratio(ratio).with_drive(0.7, wd).with_dissipation(k, 0.0);
            let o = steady_orbit(&s).unwrap();
            let (_, _, angle) = parametric_ellipse(o.xc, o.xs, o.pc, o.ps);
            assert!((angle - o.orbit_tilt).abs() < 1e-10, "{ratio} {wd} {k}: {angle} vs {}", o.orbit_tilt);
        }
    }

    #[test]
    fn bogoliubov_and_photon_number() {
        let b = bogoliubov(&sys(0.0)).unwrap();
        assert_eq!((b.omega_diag, b.cosh_xi, b.sinh_xi), (1.0, 1.0, 0.0));
        assert_eq!(naive_photon_number(&sys(0.0)).unwrap(), 0.0);
        let b = bogoliubov(&sys(0.9)).unwrap();
        assert!((b.omega_diag - 0.435890).abs() < 1e-6);
        assert!((b.cosh_xi.powi(2) - b.sinh_xi.powi(2) - 1.0).abs() < 1e-12);
        let n = naive_photon_number(&sys(0.9)).unwrap();
        assert!((n - 0.18252).abs() < 1e-5);
        let s = HilbertSpace::oscillator(120).unwrap();
        let k = squeezed_fock_state(s, 0, squeeze_params(&sys(0.9)).unwrap().xi).unwrap();
        let num = k.expect(&quantum::number(s).unwrap()).unwrap().re;
        assert!((num - n).abs() < 1e-8);
        assert_eq!(dispersive_shift(&RabiSystem::new(1.0, 5.0)), 1.0);
    }

    #[test]
    fn dispersive_shift_is_small_coupling_limit() {
        for k in 1..=10 {
            let ratio = 0.01 * k as f64;
            let s = RabiSystem::new(1.0, 1000.0).with_coupling_ratio(ratio);
            let exact = bogoliubov(&s).unwrap().omega_diag;
            let bound = 2.0 * s.g.powi(4) / (s.omega * s.spin_omega * s.spin_omega);
            assert!((exact - dispersive_shift(&s)).abs() <= bound, "ratio {ratio}");
        }
    }
}
