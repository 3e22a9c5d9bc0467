//! Master equation in a frame displaced along the mean-field orbit of the
//! effective oscillator. With `a = a' + alpha(t)` the field left in the
//! frame stays close to the vacuum, so a small Fock cutoff suffices even
//! for strongly driven runs. The transformation is exact for any smooth
//! `alpha(t)`; the orbit only decides how much is left for `a'`.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::integrator::integrate;
use super::{sample_grid, IntegratorConfig};
use crate::error::{Error, Result};
use crate::models::{build_lindblad, Coefficient, Liouvillian, ModelKind, RabiSystem};
use crate::quantum::{self, HilbertSpace};

const I: C64 = C64::new(0.0, 1.0);

/// `d alpha/dt` of the driven, damped effective oscillator.
fn orbit_rhs(sys: &RabiSystem, t: f64, alpha: C64) -> C64 {
    let e = C64::from_polar(1.0, sys.theta);
    let f = 2.0 * (alpha * e).re;
    let pull = sys.g * sys.g / (2.0 * sys.spin_omega);
    -I * sys.omega * alpha - I * sys.eta * C64::from_polar(1.0, -sys.omega_d * t) - 0.5 * sys.kappa * alpha
        + I * pull * f * e.conj()
}

/// Frame amplitude `alpha(t)`, tabulated with its derivative and
/// interpolated by cubic Hermite polynomials.
#[derive(Clone, Debug)]
pub struct FrameOrbit {
    t0: f64,
    dt: f64,
    values: Vec<C64>,
    slopes: Vec<C64>,
}

impl FrameOrbit {
    /// Mean-field orbit of the effective oscillator from `alpha0` at
    /// `t_span.0`, tabulated every `dt`.
    pub fn effective(sys: &RabiSystem, alpha0: C64, t_span: (f64, f64), dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::param("dt", "must be > 0"));
        }
        sys.critical_coupling()?;
        let n = ((t_span.1 - t_span.0) / dt).ceil().max(1.0) as usize;
        let grid = sample_grid(t_span.0, t_span.0 + n as f64 * dt, dt)?;
        let ctl = IntegratorConfig::default()
            .with_tolerances(1e-12, 1e-14)
            .with_max_step_scale(0.1, sys.omega.max(sys.omega_d))
            .step_control()?;
        let mut values = Vec::with_capacity(grid.len());
        integrate(
            |t, y: &[f64], dy: &mut [f64]| {
                let d = orbit_rhs(sys, t, C64::new(y[0], y[1]));
                dy[0] = d.re;
                dy[1] = d.im;
            },
            t_span.0,
            &[alpha0.re, alpha0.im],
            &grid,
            &ctl,
            |_, y| {
                values.push(C64::new(y[0], y[1]));
                Ok(())
            },
        )?;
        let slopes = grid.iter().zip(&values).map(|(&t, &a)| orbit_rhs(sys, t, a)).collect();
        Ok(Self {
            t0: t_span.0,
            dt,
            values,
            slopes,
        })
    }

    /// `(alpha(t), d alpha/dt)` of the interpolant.
    pub fn at(&self, t: f64) -> (C64, C64) {
        let last = self.values.len() - 1;
        let u = (t - self.t0) / self.dt;
        let k = (u.floor().max(0.0) as usize).min(last.saturating_sub(1));
        if last == 0 {
            return (self.values[0], self.slopes[0]);
        }
        let s = u - k as f64;
        let h = self.dt;
        let (y0, y1, m0, m1) = (self.values[k], self.values[k + 1], self.slopes[k], self.slopes[k + 1]);
        let (s2, s3) = (s * s, s * s * s);
        let val = y0 * (2.0 * s3 - 3.0 * s2 + 1.0) + m0 * (h * (s3 - 2.0 * s2 + s)) + y1 * (3.0 * s2 - 2.0 * s3)
            + m1 * (h * (s3 - s2));
        let der = (y1 - y0) * ((6.0 * s - 6.0 * s2) / h) + m0 * (3.0 * s2 - 4.0 * s + 1.0) + m1 * (3.0 * s2 - 2.0 * s);
        (val, der)
    }
}

/// Lindblad generator for `rho' = D(alpha)^dagger rho D(alpha)`:
///
/// `H' = H(a' + alpha) - i (alpha' a'^dagger - alpha'^* a') + (i kappa / 2)(alpha^* a' - alpha a'^dagger)`
///
/// up to c-numbers, with the drive absorbed into the linear terms. Jump
/// operators are unchanged.
pub fn displaced_lindblad(sys: &RabiSystem, space: HilbertSpace, model: ModelKind, orbit: Arc<FrameOrbit>) -> Result<Liouvillian> {
    let undriven = RabiSystem { eta: 0.0, ..sys.clone() };
    let base = match model {
        ModelKind::Rabi | ModelKind::Dicke | ModelKind::Effective => build_lindblad(&undriven, space, model)?,
        ModelKind::JaynesCummings => {
            return Err(Error::param("model", "displaced frame is not available for the jaynes-cummings model"));
        }
    };
    let a = quantum::annihilation(space)?;
    let (w, eta, wd, kappa) = (sys.omega, sys.eta, sys.omega_d, sys.kappa);
    let linear = {
        let orbit = orbit.clone();
        move |t: f64| -> C64 {
            let (al, dal) = orbit.at(t);
            w * al + eta * C64::from_polar(1.0, -wd * t) - I * dal - I * 0.5 * kappa * al
        }
    };
    let lin = Arc::new(linear);
    let lin2 = lin.clone();
    let c_up: Coefficient = Arc::new(move |t| lin(t));
    let c_down: Coefficient = Arc::new(move |t| lin2(t).conj());
    let e = C64::from_polar(1.0, sys.theta);
    let shift = move |t: f64| 2.0 * (orbit.at(t).0 * e).re;

    let (coupling, scale) = match model {
        ModelKind::Effective => {
            let f = a.scale(e).plus(&a.dagger().scale(e.conj()))?;
            (f, -sys.g * sys.g / (2.0 * sys.spin_omega))
        }
        _ => (quantum::collective_spin(space)?.jx, sys.g / (sys.n_spins as f64).sqrt()),
    };
    let c_shift: Coefficient = Arc::new(move |t| C64::new(scale * shift(t), 0.0));
    let h = base
        .hamiltonian
        .with_term(c_up, a.dagger())?
        .with_term(c_down, a)?
        .with_term(c_shift, coupling)?;
    Liouvillian::new(h, base.jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve_master;
    use crate::observables::{sample, sample_displaced};
    use crate::quantum::{CVector, DensityMatrix, Ket};

    fn driven() -> RabiSystem {
        RabiSystem::new(1.0, 30.0)
            .with_coupling_ratio(0.7)
            .with_resonant_drive(0.8)
            .with_dissipation(0.5, 0.5)
    }

    #[test]
    fn interpolant_is_smooth_and_consistent() {
        let sys = driven();
        let o = FrameOrbit::effective(&sys, C64::new(0.5, 0.0), (0.0, 10.0), 0.02).unwrap();
        assert_eq!(o.at(0.0).0, C64::new(0.5, 0.0));
        for t in [0.013, 3.3, 7.77, 9.99] {
            let (al, dal) = o.at(t);
            assert!((dal - orbit_rhs(&sys, t, al)).norm() < 1e-5, "t = {t}");
            let h = 1e-6;
            let fd = (o.at(t + h).0 - o.at(t - h).0) / (2.0 * h);
            assert!((fd - dal).norm() < 1e-6);
        }
    }

    #[test]
    fn frame_matches_lab_master_equation() {
        let sys = driven();
        let cfg = IntegratorConfig::for_system(&sys).with_tolerances(1e-9, 1e-11).with_sample_dt(0.5);
        let ground = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);

        let lab_space = HilbertSpace::rabi(40).unwrap();
        let psi = Ket::tensor(&Ket::vacuum(lab_space.field_space()), &ground).unwrap();
        let l = build_lindblad(&sys, lab_space, ModelKind::Rabi).unwrap();
        let lab = evolve_master(&l, &psi.to_density(), (0.0, 6.0), &cfg).unwrap();

        let space = HilbertSpace::rabi(20).unwrap();
        let orbit = Arc::new(FrameOrbit::effective(&sys, C64::new(0.0, 0.0), (0.0, 6.0), 0.01).unwrap());
        let lf = displaced_lindblad(&sys, space, ModelKind::Rabi, orbit.clone()).unwrap();
        let rho0: DensityMatrix = Ket::tensor(&Ket::vacuum(space.field_space()), &ground).unwrap().to_density();
        let frame = evolve_master(&lf, &rho0, (0.0, 6.0), &cfg).unwrap();

        let mut peak: f64 = 0.0;
        for ((t, r_lab), (_, r_frame)) in lab.iter().zip(frame.iter()) {
            let a = sample(r_lab, t).unwrap();
            let b = sample_displaced(r_frame, t, orbit.at(t).0).unwrap();
            peak = peak.max(a.stats.mean_x.abs());
            for (u, v) in [
                (a.stats.mean_x, b.stats.mean_x),
                (a.stats.mean_p, b.stats.mean_p),
                (a.stats.var_x, b.stats.var_x),
                (a.stats.var_p, b.stats.var_p),
                (a.sigma22, b.sigma22),
            ] {
                assert!((u - v).abs() < 1e-5, "t = {t}: {u} vs {v}");
            }
        }
        assert!(peak > 1.0);
    }

    #[test]
    fn effective_frame_is_static_for_mean_field_orbit() {
        let sys = driven();
        let space = HilbertSpace::oscillator(10).unwrap();
        let orbit = Arc::new(FrameOrbit::effective(&sys, C64::new(0.0, 0.0), (0.0, 4.0), 0.01).unwrap());
        let l = displaced_lindblad(&sys, space, ModelKind::Effective, orbit.clone()).unwrap();
        let cfg = IntegratorConfig::default().with_sample_dt(0.5);
        let tr = evolve_master(&l, &Ket::vacuum(space).to_density(), (0.0, 4.0), &cfg).unwrap();
        for (t, r) in tr.iter() {
            let s = sample(r, t).unwrap();
            assert!(s.stats.mean_x.abs() < 1e-8 && s.stats.mean_p.abs() < 1e-8, "t = {t}");
        }
    }
}
