//! Time evolution: Schrodinger and Lindblad propagation of states, first-
//! and second-order moment equations, quadrature mean-field equations and
//! coupling ramps, all driven by one adaptive integrator.

pub mod cumulant;
mod displaced;
pub mod integrator;
mod meanfield;
mod propagate;
mod ramp;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::RabiSystem;

pub use cumulant::{evolve_cumulant_second, MomentState};
pub use displaced::{displaced_lindblad, FrameOrbit};
pub use integrator::{IntegrationStats, StepControl};
pub use meanfield::{evolve_meanfield_first, evolve_quadrature_meanfield, MeanFieldState, QuadraturePoint};
pub use propagate::{evolve_master, evolve_master_with, evolve_schrodinger, evolve_schrodinger_with};
pub use ramp::{ramp_evolution, ramp_hamiltonian, RampResult, RampSchedule, RampShape};

/// Integrator settings shared by every engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed step, absolute time.
    pub max_step: f64,
    /// Interval of the uniform sample grid.
    pub sample_dt: f64,
    pub max_steps: u64,
    /// Check density-matrix positivity every this many samples (0 = never).
    pub positivity_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: 0.1,
            sample_dt: 0.05,
            max_steps: 50_000_000,
            positivity_every: 1,
        }
    }
}

impl IntegratorConfig {
    /// Defaults with `max_step = 0.1 / Omega`.
    pub fn for_system(sys: &RabiSystem) -> Self {
        Self::default().with_max_step_scale(0.1, fastest_frequency(sys))
    }

    /// `max_step = factor / frequency`.
    pub fn with_max_step_scale(mut self, factor: f64, frequency: f64) -> Self {
        self.max_step = factor / frequency;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(Error::param("rtol", format!("must be > 0, got {}", self.rtol)));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::param("atol", format!("must be > 0, got {}", self.atol)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::param("max_step", format!("must be > 0, got {}", self.max_step)));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return Err(Error::param("sample_dt", format!("must be > 0, got {}", self.sample_dt)));
        }
        Ok(())
    }

    pub(crate) fn step_control(&self) -> Result<StepControl> {
        self.validate()?;
        Ok(StepControl {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            max_steps: self.max_steps,
        })
    }
}

/// Largest frequency of a spin-boson model.
pub fn fastest_frequency(sys: &RabiSystem) -> f64 {
    sys.spin_omega.max(sys.omega).max(sys.omega_d)
}

/// Which set of equations produced a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Schrodinger,
    Master,
    Meanfield1,
    Cumulant2,
    Quadrature,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Engine::Schrodinger => "schrodinger",
            Engine::Master => "master",
            Engine::Meanfield1 => "meanfield1",
            Engine::Cumulant2 => "cumulant2",
            Engine::Quadrature => "quadrature",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "schrodinger" => Ok(Engine::Schrodinger),
            "master" => Ok(Engine::Master),
            "meanfield1" => Ok(Engine::Meanfield1),
            "cumulant2" => Ok(Engine::Cumulant2),
            "quadrature" => Ok(Engine::Quadrature),
            other => Err(Error::param("engine", format!("unknown engine '{other}'"))),
        }
    }
}

/// Run information carried alongside the samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub engine: Engine,
    pub system: Option<RabiSystem>,
    pub config: IntegratorConfig,
    pub stats: IntegrationStats,
    pub warnings: Vec<String>,
}

impl TrajectoryMeta {
    pub(crate) fn new(engine: Engine, system: Option<RabiSystem>, config: &IntegratorConfig) -> Self {
        Self {
            engine,
            system,
            config: config.clone(),
            stats: IntegrationStats::default(),
            warnings: Vec::new(),
        }
    }

    pub(crate) fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

/// Samples of a state on a strictly increasing time grid.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub snapshots: Vec<S>,
    pub meta: TrajectoryMeta,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &S)> {
        Some((*self.times.last()?, self.snapshots.last()?))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &S)> {
        self.times.iter().copied().zip(self.snapshots.iter())
    }

    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> Trajectory<T> {
        Trajectory {
            times: self.times.clone(),
            snapshots: self.snapshots.iter().map(f).collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn try_map<T>(&self, f: impl FnMut(&S) -> Result<T>) -> Result<Trajectory<T>> {
        Ok(Trajectory {
            times: self.times.clone(),
            snapshots: self.snapshots.iter().map(f).collect::<Result<_>>()?,
            meta: self.meta.clone(),
        })
    }
}

/// Uniform grid `t0, t0 + dt, ...` ending exactly at `t1`.
pub fn sample_grid(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::param("t_span", format!("need finite t0 <= t1, got ({t0}, {t1})")));
    }
    if !(dt > 0.0) {
        return Err(Error::param("sample_dt", "must be > 0"));
    }
    let steps = (t1 - t0) / dt;
    let n = (steps - 1e-9).ceil().max(0.0) as usize;
    let mut out: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
    if out.last().is_none_or(|&l| l < t1) {
        out.push(t1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = sample_grid(0.0, 1.0, 0.25).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = sample_grid(0.0, 1.0, 0.3).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(sample_grid(2.0, 2.0, 0.1).unwrap(), vec![2.0]);
        assert!(sample_grid(1.0, 0.0, 0.1).is_err());
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        let bad = IntegratorConfig {
            rtol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let sys = RabiSystem::new(1.0, 2000.0);
        assert!((IntegratorConfig::for_system(&sys).max_step - 5e-5).abs() < 1e-18);
    }

    #[test]
    fn engine_names_round_trip() {
        for e in [Engine::Schrodinger, Engine::Master, Engine::Meanfield1, Engine::Cumulant2, Engine::Quadrature] {
            assert_eq!(e.to_string().parse::<Engine>().unwrap(), e);
        }
    }
}
