//! Executes one scenario: builds the initial state, runs the chosen engine
//! and reduces every sample to quadrature statistics on the fly.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::report::{self, CompareReport, KickReport, SteadyStateReport};
use super::scenario::{Frame, ProtocolKind, ProtocolSpec, Scenario};
use super::CliError;
use crate::analytics::{self, Convention, SqueezeParams};
use crate::dynamics::{
    displaced_lindblad, evolve_cumulant_second, evolve_master_with, evolve_meanfield_first, evolve_quadrature_meanfield,
    evolve_schrodinger_with, ramp_evolution, sample_grid, Engine, IntegratorConfig, MeanFieldState, MomentState,
    FrameOrbit, RampSchedule, TrajectoryMeta,
};
use crate::error::Result;
use crate::models::{build_hamiltonian, build_lindblad, sw_validity_margin, ModelKind, RabiSystem, Validity};
use crate::observables::{self, husimi_gaussian, husimi_q, husimi_q_displaced, GridSpec, HusimiGrid, Observable, Sample};
use crate::quantum::{CVector, HilbertSpace, Ket};

/// What to simulate, fully resolved.
#[derive(Clone, Debug)]
pub struct RunPlan {
    pub system: RabiSystem,
    pub model: ModelKind,
    pub engine: Engine,
    pub cutoff: usize,
    pub frame: Frame,
    pub protocol: ProtocolSpec,
    pub config: IntegratorConfig,
    pub husimi_times: Vec<f64>,
    pub husimi_resolution: usize,
    pub husimi_half_width: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HusimiSnapshot {
    pub t: f64,
    #[serde(flatten)]
    pub grid: HusimiGrid,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub samples: Vec<Sample>,
    pub husimi: Vec<HusimiSnapshot>,
    pub meta: TrajectoryMeta,
    pub ramp_fidelity: Option<f64>,
    pub seconds: f64,
}

impl RunPlan {
    pub fn from_scenario(sc: &Scenario) -> std::result::Result<Self, CliError> {
        let system = sc.system.resolve()?;
        let config = sc.integrator.resolve(&system, sc.model)?;
        Ok(Self {
            system,
            model: sc.model,
            engine: sc.engine,
            cutoff: sc.cutoff,
            frame: sc.frame,
            protocol: sc.protocol.clone(),
            config,
            husimi_times: sc.outputs.husimi.clone(),
            husimi_resolution: sc.outputs.husimi_resolution,
            husimi_half_width: sc.outputs.husimi_half_width,
        })
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        self.model.space(self.cutoff, self.system.n_spins)
    }

    fn alpha(&self) -> C64 {
        C64::new(self.protocol.alpha, self.protocol.alpha_im)
    }

    /// Initial field state on the oscillator alone.
    fn initial_field(&self) -> Result<Ket> {
        let osc = HilbertSpace::oscillator(self.cutoff)?;
        match self.protocol.kind {
            ProtocolKind::Kick => {
                let p = analytics::squeeze_params(&self.system)?;
                analytics::squeezed_coherent_state(osc, self.alpha(), &p, 0.0)
            }
            _ => Ket::coherent(osc, self.alpha()),
        }
    }

    fn initial_ket(&self) -> Result<Ket> {
        self.with_spin_ground(self.initial_field()?)
    }

    /// Frame amplitude at `t = 0` and the initial state seen from the
    /// displaced frame (the initial field with its mean removed).
    fn frame_start(&self) -> Result<(C64, Ket)> {
        let big = (4.0 * self.alpha().norm_sqr()).ceil() as usize + 60;
        let osc = HilbertSpace::oscillator(self.cutoff.max(big))?;
        let small = HilbertSpace::oscillator(self.cutoff)?;
        let (alpha0, field) = match self.protocol.kind {
            ProtocolKind::Kick => {
                let p = analytics::squeeze_params(&self.system)?;
                let full = analytics::squeezed_coherent_state(osc, self.alpha(), &p, 0.0)?;
                let centred = analytics::squeezed_coherent_state(small, C64::new(0.0, 0.0), &p, 0.0)?;
                (full.field_moments()?.a, centred)
            }
            _ => (self.alpha(), Ket::vacuum(small)),
        };
        Ok((alpha0, self.with_spin_ground(field)?))
    }

    fn with_spin_ground(&self, field: Ket) -> Result<Ket> {
        let space = self.space()?;
        if space.has_spin() {
            let mut spin = CVector::zeros(space.spin_dim());
            spin[0] = C64::new(1.0, 0.0);
            Ket::tensor(&field, &spin)
        } else {
            Ok(field)
        }
    }

    fn ramp(&self) -> Option<RampSchedule> {
        let r = self.protocol.ramp.as_ref()?;
        Some(RampSchedule {
            shape: r.shape,
            g_start: 0.0,
            g_end: self.system.g,
            duration: r.duration,
            hold: self.protocol.t_end - r.duration,
        })
    }

    fn grid_for(&self, stats: &observables::QuadratureStats) -> GridSpec {
        match self.husimi_half_width {
            Some(h) => GridSpec::square((0.0, 0.0), h, self.husimi_resolution),
            None => GridSpec {
                resolution: (self.husimi_resolution, self.husimi_resolution),
                ..GridSpec::auto(stats)
            },
        }
    }

    /// Sample indices nearest to the requested Husimi times.
    fn husimi_indices(&self) -> Result<Vec<(usize, f64)>> {
        let grid = sample_grid(0.0, self.protocol.t_end, self.config.sample_dt)?;
        let mut out: Vec<(usize, f64)> = self
            .husimi_times
            .iter()
            .map(|&t| {
                let k = grid
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
                    .map(|(k, _)| k)
                    .unwrap_or(0);
                (k, grid[k])
            })
            .collect();
        out.sort_by_key(|x| x.0);
        out.dedup_by_key(|x| x.0);
        Ok(out)
    }

    pub fn execute(&self) -> Result<RunOutput> {
        let start = Instant::now();
        let wanted = self.husimi_indices()?;
        let mut samples = Vec::new();
        let mut husimi = Vec::new();
        let mut k = 0usize;
        let t_span = (0.0, self.protocol.t_end);
        let mut ramp_fidelity = None;

        let mut record = |t: f64, state: &dyn Fn() -> Result<Sample>, grid: &dyn Fn(&Sample) -> Result<Option<HusimiGrid>>| -> Result<()> {
            let s = state()?;
            if wanted.iter().any(|w| w.0 == k) {
                if let Some(g) = grid(&s)? {
                    husimi.push(HusimiSnapshot { t, grid: g });
                }
            }
            samples.push(s);
            k += 1;
            Ok(())
        };

        let meta = match self.engine {
            Engine::Schrodinger => {
                let psi0 = self.initial_ket()?;
                if let Some(schedule) = self.ramp() {
                    let r = ramp_evolution(&self.system, self.model, &schedule, &psi0, &self.config)?;
                    ramp_fidelity = Some(r.fidelity);
                    for (t, psi) in r.trajectory.iter() {
                        record(t, &|| observables::sample(psi, t), &|s| husimi_q(psi, &self.grid_for(&s.stats)).map(Some))?;
                    }
                    r.trajectory.meta
                } else {
                    let h = build_hamiltonian(&self.system, psi0.space(), self.model)?;
                    evolve_schrodinger_with(&h, &psi0, t_span, &self.config, |t, psi| {
                        record(t, &|| observables::sample(psi, t), &|s| husimi_q(psi, &self.grid_for(&s.stats)).map(Some))
                    })?
                }
            }
            Engine::Master if self.frame == Frame::Displaced => {
                let (alpha0, psi0) = self.frame_start()?;
                let dt = 0.01 / self.system.omega.max(self.system.omega_d);
                let orbit = Arc::new(FrameOrbit::effective(&self.system, alpha0, t_span, dt)?);
                let l = displaced_lindblad(&self.system, psi0.space(), self.model, orbit.clone())?;
                evolve_master_with(&l, &psi0.to_density(), t_span, &self.config, |t, rho| {
                    let d = orbit.at(t).0;
                    record(t, &|| observables::sample_displaced(rho, t, d), &|s| {
                        husimi_q_displaced(rho, &self.grid_for(&s.stats), d).map(Some)
                    })
                })?
            }
            Engine::Master => {
                let psi0 = self.initial_ket()?;
                let l = build_lindblad(&self.system, psi0.space(), self.model)?;
                evolve_master_with(&l, &psi0.to_density(), t_span, &self.config, |t, rho| {
                    record(t, &|| observables::sample(rho, t), &|s| husimi_q(rho, &self.grid_for(&s.stats)).map(Some))
                })?
            }
            Engine::Cumulant2 => {
                let m = self.initial_field()?.field_moments()?;
                let mut init = MomentState::coherent_ground(m.a, self.system.n_spins);
                init.aa = m.aa;
                init.ada = C64::new(m.ada, 0.0);
                let tr = evolve_cumulant_second(&self.system, init, t_span, &self.config)?;
                for (t, ms) in tr.iter() {
                    record(t, &|| observables::sample(ms, t), &|s| husimi_gaussian(&s.stats, &self.grid_for(&s.stats)).map(Some))?;
                }
                tr.meta
            }
            Engine::Meanfield1 => {
                let a = self.initial_field()?.field_moments()?.a;
                let init = MeanFieldState { a, s12: C64::new(0.0, 0.0), s22: 0.0 };
                let tr = evolve_meanfield_first(&self.system, init, t_span, &self.config)?;
                for (t, ms) in tr.iter() {
                    record(t, &|| observables::sample(ms, t), &|_| Ok(None))?;
                }
                tr.meta
            }
            Engine::Quadrature => {
                let a = self.initial_field()?.field_moments()?.a;
                let tr = evolve_quadrature_meanfield(&self.system, a.re, a.im, t_span, &self.config)?;
                for (t, q) in tr.iter() {
                    record(t, &|| observables::sample(q, t), &|_| Ok(None))?;
                }
                tr.meta
            }
        };
        Ok(RunOutput {
            samples,
            husimi,
            meta,
            ramp_fidelity,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// Squeezed-mode amplitude `beta(t)` of an adiabatically evolving kicked
    /// state.
    fn beta_at(&self, t: f64) -> Result<C64> {
        let alpha = self.alpha();
        match self.ramp() {
            Some(schedule) => {
                let phase = schedule.effective_phase(&self.system, t)?;
                Ok(alpha * C64::from_polar(1.0, -phase))
            }
            None => {
                let p = analytics::squeeze_params(&self.system)?;
                Ok(alpha * C64::from_polar(1.0, -p.omega_eff * t))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Derived {
    pub g_c: f64,
    pub coupling_ratio: f64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squeeze: Option<SqueezeParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_var_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_var_p: Option<f64>,
    /// `e^{4r}`: ratio of the kicked variances and squared orbit semi-axes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidityReport {
    pub margin: Option<f64>,
    pub class: Option<Validity>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HusimiEntry {
    pub t: f64,
    pub file: String,
    pub mass: f64,
    pub tilt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub name: String,
    pub model: ModelKind,
    pub engine: Engine,
    pub cutoff: usize,
    pub frame: Frame,
    pub convention: &'static str,
    pub system: RabiSystem,
    pub protocol: ProtocolSpec,
    pub integrator: IntegratorConfig,
    pub derived: Derived,
    pub validity: ValidityReport,
    pub stats: crate::dynamics::IntegrationStats,
    pub warnings: Vec<String>,
    pub samples: usize,
    #[serde(rename = "final")]
    pub final_sample: Option<Sample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kicked: Option<KickReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_state: Option<SteadyStateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonSummary>,
    pub husimi: Vec<HusimiEntry>,
    pub runtime_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonSummary {
    pub model: ModelKind,
    pub engine: Engine,
    pub cutoff: usize,
    pub report: CompareReport,
    pub runtime_seconds: f64,
}

pub fn derived(sys: &RabiSystem) -> Derived {
    let squeeze = analytics::squeeze_params(sys).ok();
    let vars = analytics::kicked_variances(sys, Convention::Physical).ok();
    Derived {
        g_c: (sys.omega * sys.spin_omega).sqrt(),
        coupling_ratio: sys.coupling_ratio(),
        epsilon: sys.epsilon(),
        squeeze,
        expected_var_x: vars.map(|v| v.0),
        expected_var_p: vars.map(|v| v.1),
        variance_ratio: squeeze.map(|p| (4.0 * p.r).exp()),
    }
}

pub fn validity(sys: &RabiSystem) -> ValidityReport {
    let margin = sw_validity_margin(sys).ok();
    ValidityReport {
        margin,
        class: margin.map(Validity::classify),
    }
}

/// Reports that depend on the protocol.
pub fn protocol_reports(
    plan: &RunPlan,
    out: &RunOutput,
    steady_requested: bool,
) -> Result<(Option<KickReport>, Option<SteadyStateReport>)> {
    let kicked = match plan.protocol.kind {
        ProtocolKind::Kick | ProtocolKind::KickRamp => {
            let start = plan.protocol.ramp.as_ref().map_or(0.0, |r| r.duration).max(plan.protocol.transient);
            Some(report::kick_report(&plan.system, &out.samples, start, |t| plan.beta_at(t), out.ramp_fidelity)?)
        }
        _ => None,
    };
    let steady = if steady_requested || plan.protocol.kind == ProtocolKind::DrivenDissipative {
        Some(report::steady_state_report(&plan.system, &out.samples, plan.protocol.transient)?)
    } else {
        None
    };
    Ok((kicked, steady))
}
