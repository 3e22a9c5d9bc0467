//! Time-dependent coupling ramps `g(t)` and the adiabaticity diagnostic.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{evolve_schrodinger, IntegratorConfig, Trajectory};
use crate::analytics::{squeeze_params, squeezed_coherent_state};
use crate::error::{Error, Result};
use crate::models::{coupling_split, CouplingPower, Hamiltonian, ModelKind, RabiSystem};
use crate::quantum::{self, Expectation, Ket};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    Linear,
    #[default]
    Cosine,
}

/// Coupling goes from `g_start` to `g_end` over `[0, duration]` and is then
/// held at `g_end` for `hold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSchedule {
    #[serde(default)]
    pub shape: RampShape,
    #[serde(default)]
    pub g_start: f64,
    pub g_end: f64,
    pub duration: f64,
    #[serde(default)]
    pub hold: f64,
}

impl RampSchedule {
    /// `g(t) = g_end (1 - cos(pi t / T)) / 2`.
    pub fn cosine(g_end: f64, duration: f64) -> Self {
        Self {
            shape: RampShape::Cosine,
            g_start: 0.0,
            g_end,
            duration,
            hold: 0.0,
        }
    }

    pub fn linear(g_end: f64, duration: f64) -> Self {
        Self {
            shape: RampShape::Linear,
            ..Self::cosine(g_end, duration)
        }
    }

    pub fn with_hold(mut self, hold: f64) -> Self {
        self.hold = hold;
        self
    }

    pub fn total_time(&self) -> f64 {
        self.duration + self.hold
    }

    pub fn coupling(&self, t: f64) -> f64 {
        let u = (t / self.duration).clamp(0.0, 1.0);
        let f = match self.shape {
            RampShape::Linear => u,
            RampShape::Cosine => 0.5 * (1.0 - (PI * u).cos()),
        };
        self.g_start + (self.g_end - self.g_start) * f
    }

    pub fn validate(&self, sys: &RabiSystem) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::param("duration", format!("ramp duration must be > 0, got {}", self.duration)));
        }
        if !(self.hold >= 0.0 && self.hold.is_finite()) {
            return Err(Error::param("hold", format!("must be >= 0, got {}", self.hold)));
        }
        if !(self.g_start >= 0.0 && self.g_end >= 0.0) {
            return Err(Error::param("g_end", "couplings must be >= 0"));
        }
        let g_c = sys.critical_coupling()?;
        let top = self.g_start.max(self.g_end);
        if top >= g_c && !sys.allow_superradiant {
            return Err(Error::Superradiant { g: top, g_c });
        }
        Ok(())
    }

    /// `integral_0^t omega_eff(g(s)) ds` (composite Simpson over the ramp).
    pub fn effective_phase(&self, sys: &RabiSystem, t: f64) -> Result<f64> {
        let w = |g: f64| -> Result<f64> {
            Ok(squeeze_params(&RabiSystem { g, ..sys.clone() })?.omega_eff)
        };
        let ramp_end = t.min(self.duration);
        let n = 4000;
        let h = ramp_end / n as f64;
        let mut sum = w(self.coupling(0.0))? + w(self.coupling(ramp_end))?;
        for k in 1..n {
            let c = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += c * w(self.coupling(k as f64 * h))?;
        }
        let held = (t - self.duration).max(0.0) * w(self.g_end)?;
        Ok(sum * h / 3.0 + held)
    }
}

/// `H(t) = H_0 + s(g(t)) V` with `s(g) = g` for spin models and `g^2` for
/// the effective oscillator.
pub fn ramp_hamiltonian(sys: &RabiSystem, space: quantum::HilbertSpace, model: ModelKind, schedule: &RampSchedule) -> Result<Hamiltonian> {
    schedule.validate(sys)?;
    let (h0, v, power) = coupling_split(sys, space, model)?;
    let sched = schedule.clone();
    let coef: Arc<dyn Fn(f64) -> C64 + Send + Sync> = match power {
        CouplingPower::Linear => Arc::new(move |t| C64::new(sched.coupling(t), 0.0)),
        CouplingPower::Quadratic => Arc::new(move |t| C64::new(sched.coupling(t).powi(2), 0.0)),
    };
    h0.with_term(coef, v)
}

#[derive(Clone, Debug)]
pub struct RampResult {
    pub trajectory: Trajectory<Ket>,
    /// Squeezed coherent state expected after a perfectly adiabatic ramp.
    pub target: Ket,
    /// `|<target|psi(T + hold)>|^2`.
    pub fidelity: f64,
}

/// Evolve `psi0` under the ramped coupling over `[0, T + hold]` and compare
/// the final state with the adiabatic prediction `S(xi_end)|beta e^{-i Phi}>`,
/// where `beta` is the amplitude of `psi0` in the squeezed mode at `g_start`
/// and `Phi` the accumulated effective phase.
pub fn ramp_evolution(
    sys: &RabiSystem,
    model: ModelKind,
    schedule: &RampSchedule,
    psi0: &Ket,
    config: &IntegratorConfig,
) -> Result<RampResult> {
    let space = psi0.space();
    let h = ramp_hamiltonian(sys, space, model, schedule)?;
    let t_end = schedule.total_time();
    let trajectory = evolve_schrodinger(&h, psi0, (0.0, t_end), config)?;

    let start = squeeze_params(&RabiSystem { g: schedule.g_start, ..sys.clone() })?;
    let end = squeeze_params(&RabiSystem { g: schedule.g_end, ..sys.clone() })?;
    let a = psi0.expect(&quantum::annihilation(space)?)?;
    let beta = a * start.xi.cosh() + a.conj() * start.xi.sinh();
    let phase = schedule.effective_phase(sys, t_end)?;
    let target = squeezed_coherent_state(space, beta, &end, phase / end.omega_eff)?;
    let (_, last) = trajectory.last().ok_or_else(|| Error::param("t_span", "empty trajectory"))?;
    let fidelity = target.fidelity(last)?;
    Ok(RampResult {
        trajectory,
        target,
        fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::HilbertSpace;

    fn effective(ratio_end: f64) -> (RabiSystem, f64) {
        let sys = RabiSystem::new(1.0, 100.0);
        let g_end = ratio_end * sys.critical_coupling().unwrap();
        (sys, g_end)
    }

    #[test]
    fn profiles() {
        let c = RampSchedule::cosine(2.0, 10.0);
        assert_eq!(c.coupling(0.0), 0.0);
        assert!((c.coupling(5.0) - 1.0).abs() < 1e-15);
        assert_eq!(c.coupling(10.0), 2.0);
        assert_eq!(c.coupling(50.0), 2.0);
        let l = RampSchedule::linear(2.0, 10.0);
        assert!((l.coupling(2.5) - 0.5).abs() < 1e-15);
        let (sys, g) = effective(0.5);
        assert!(RampSchedule::cosine(g, 0.0).validate(&sys).is_err());
        assert!(RampSchedule::cosine(10.0 * g, 1.0).validate(&sys).is_err());
    }

    #[test]
    fn phase_of_constant_coupling() {
        let (sys, _) = effective(0.0);
        let s = RampSchedule::cosine(0.0, 3.0).with_hold(2.0);
        assert!((s.effective_phase(&sys, 5.0).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn slow_ramp_is_adiabatic() {
        let (sys, g_end) = effective(0.5);
        let space = HilbertSpace::oscillator(60).unwrap();
        let psi0 = Ket::coherent(space, C64::new(2.0, 0.0)).unwrap();
        let cfg = IntegratorConfig::default().with_sample_dt(1.0);
        let slow = ramp_evolution(&sys, ModelKind::Effective, &RampSchedule::cosine(g_end, 200.0), &psi0, &cfg).unwrap();
        assert!(slow.fidelity > 0.99, "{}", slow.fidelity);

        let sudden = ramp_evolution(&sys, ModelKind::Effective, &RampSchedule::cosine(g_end, 1e-6), &psi0, &cfg).unwrap();
        let p = squeeze_params(&RabiSystem { g: g_end, ..sys.clone() }).unwrap();
        let overlap = squeezed_coherent_state(space, C64::new(2.0, 0.0), &p, 0.0).unwrap().fidelity(&psi0).unwrap();
        assert!((sudden.fidelity - overlap).abs() < 1e-6);
        assert!(sudden.fidelity < slow.fidelity);
    }

    #[test]
    fn zero_ramp_is_identity_protocol() {
        let (sys, _) = effective(0.0);
        let space = HilbertSpace::oscillator(40).unwrap();
        let psi0 = Ket::coherent(space, C64::new(1.5, 0.5)).unwrap();
        let r = ramp_evolution(&sys, ModelKind::Effective, &RampSchedule::cosine(0.0, 7.0), &psi0, &IntegratorConfig::default()).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ramped_rabi_model_matches_effective_prediction() {
        let sys = RabiSystem::new(1.0, 100.0);
        let g_end = 0.6 * sys.critical_coupling().unwrap();
        let space = HilbertSpace::rabi(40).unwrap();
        let field = Ket::coherent(space.field_space(), C64::new(1.0, 0.0)).unwrap();
        let psi0 = Ket::tensor(&field, &quantum::CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])).unwrap();
        let cfg = IntegratorConfig::for_system(&sys).with_max_step_scale(0.3, sys.spin_omega).with_sample_dt(1.0);
        let r = ramp_evolution(&sys, ModelKind::Rabi, &RampSchedule::cosine(g_end, 60.0), &psi0, &cfg).unwrap();
        assert!(r.fidelity > 0.95, "{}", r.fidelity);
    }
}
