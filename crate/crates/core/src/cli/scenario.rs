//! Scenario files: TOML with `[system]`, `[protocol]`, `[integrator]` and
//! `[outputs]` sections. Frequencies are in units of the oscillator
//! frequency and times in units of its inverse.

use serde::{Deserialize, Serialize};

use crate::dynamics::{fastest_frequency, Engine, IntegratorConfig, RampShape};
use crate::models::{ModelKind, RabiSystem};

use super::CliError;

fn one() -> f64 {
    1.0
}

fn one_spin() -> usize {
    1
}

fn default_cutoff() -> usize {
    40
}

/// Drive frequency: a number, or `"resonant"` for `omega sqrt(epsilon)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DriveFrequency {
    Value(f64),
    Named(String),
}

impl Default for DriveFrequency {
    fn default() -> Self {
        DriveFrequency::Value(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(rename = "Omega")]
    pub spin_omega: f64,
    /// Absolute coupling; give either this or `g_ratio`.
    pub g: Option<f64>,
    /// `g / g_c`.
    pub g_ratio: Option<f64>,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "one_spin")]
    pub n_spins: usize,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub omega_d: DriveFrequency,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub allow_superradiant: bool,
}

impl SystemSpec {
    pub fn resolve(&self) -> Result<RabiSystem, CliError> {
        let mut sys = RabiSystem::new(self.omega, self.spin_omega)
            .with_theta(self.theta)
            .with_spins(self.n_spins)
            .with_dissipation(self.kappa, self.gamma)
            .superradiant_override(self.allow_superradiant);
        sys = match (self.g, self.g_ratio) {
            (Some(g), None) => sys.with_coupling(g),
            (None, Some(r)) => sys.with_coupling_ratio(r),
            (None, None) => sys,
            (Some(_), Some(_)) => return Err(CliError::config("system: give either `g` or `g_ratio`, not both")),
        };
        sys = match &self.omega_d {
            DriveFrequency::Value(w) => sys.with_drive(self.eta, *w),
            DriveFrequency::Named(s) if s == "resonant" => sys.with_resonant_drive(self.eta),
            DriveFrequency::Named(s) => {
                return Err(CliError::config(format!(
                    "system.omega_d: expected a number or \"resonant\", got \"{s}\""
                )))
            }
        };
        sys.validate().map_err(|e| CliError::config(format!("system: {e}")))?;
        Ok(sys)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolKind {
    /// Start in the squeezed coherent state of the effective oscillator.
    #[serde(rename = "kick")]
    Kick,
    /// Start in `|alpha> (x) |g>` at zero coupling and ramp the coupling up.
    #[serde(rename = "kick+ramp")]
    KickRamp,
    /// Start in `|alpha> (x) |g>` with the drive and dissipation switched on.
    #[serde(rename = "driven-dissipative")]
    DrivenDissipative,
    #[serde(rename = "custom")]
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSpec {
    #[serde(default)]
    pub shape: RampShape,
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub t_end: f64,
    /// Initial coherent amplitude (real part).
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub alpha_im: f64,
    pub ramp: Option<RampSpec>,
    /// Start of the analysis window for reports and comparisons.
    #[serde(default)]
    pub transient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSpec {
    pub rtol: f64,
    pub atol: f64,
    /// In units of the inverse fastest frequency of the model.
    pub max_step: f64,
    pub sample_dt: f64,
    pub max_steps: u64,
    pub positivity_every: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            rtol: d.rtol,
            atol: d.atol,
            max_step: 0.1,
            sample_dt: d.sample_dt,
            max_steps: d.max_steps,
            positivity_every: d.positivity_every,
        }
    }
}

impl IntegratorSpec {
    pub fn resolve(&self, sys: &RabiSystem, model: ModelKind) -> Result<IntegratorConfig, CliError> {
        let fastest = if model.has_spin() {
            fastest_frequency(sys)
        } else {
            sys.omega.max(sys.omega_d)
        };
        let cfg = IntegratorConfig {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step / fastest,
            sample_dt: self.sample_dt,
            max_steps: self.max_steps,
            positivity_every: self.positivity_every,
        };
        cfg.validate().map_err(|e| CliError::config(format!("integrator: {e}")))?;
        Ok(cfg)
    }
}

/// Frame of the master-equation state: the lab frame, or one displaced
/// along the mean-field orbit of the effective oscillator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Lab,
    Displaced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSpec {
    pub model: ModelKind,
    pub engine: Engine,
    pub cutoff: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub timeseries: bool,
    /// Times at which Husimi grids are written (nearest sample is used).
    pub husimi: Vec<f64>,
    pub husimi_resolution: usize,
    /// Fixed square grid centred on the origin; auto-sized when absent.
    pub husimi_half_width: Option<f64>,
    pub steady_state_report: bool,
    pub comparison: Option<ComparisonSpec>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            timeseries: true,
            husimi: Vec::new(),
            husimi_resolution: crate::observables::GridSpec::DEFAULT_RESOLUTION,
            husimi_half_width: None,
            steady_state_report: false,
            comparison: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ModelKind,
    pub engine: Engine,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default)]
    pub frame: Frame,
    pub system: SystemSpec,
    pub protocol: ProtocolSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

/// Engines that can run a model.
pub fn engine_supports(engine: Engine, model: ModelKind) -> bool {
    match engine {
        Engine::Schrodinger | Engine::Master => true,
        Engine::Meanfield1 | Engine::Cumulant2 => matches!(model, ModelKind::Rabi | ModelKind::Dicke),
        Engine::Quadrature => model == ModelKind::Effective,
    }
}

impl Scenario {
    pub fn from_table(table: toml::Table) -> Result<Self, CliError> {
        let sc: Scenario = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        sc.check()?;
        Ok(sc)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let sc: Scenario = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        sc.check()?;
        Ok(sc)
    }

    fn check(&self) -> Result<(), CliError> {
        if !engine_supports(self.engine, self.model) {
            return Err(CliError::config(format!(
                "engine `{}` cannot run the `{}` model",
                self.engine, self.model
            )));
        }
        if let Some(c) = &self.outputs.comparison {
            if !engine_supports(c.engine, c.model) {
                return Err(CliError::config(format!(
                    "outputs.comparison: engine `{}` cannot run the `{}` model",
                    c.engine, c.model
                )));
            }
        }
        if self.frame == Frame::Displaced
            && (self.engine != Engine::Master || self.model == ModelKind::JaynesCummings)
        {
            return Err(CliError::config(
                "frame: the displaced frame needs the master engine and the rabi, dicke or effective model",
            ));
        }
        if self.model == ModelKind::Rabi && self.system.n_spins != 1 {
            return Err(CliError::config("system.n_spins: the rabi model has exactly one spin"));
        }
        let p = &self.protocol;
        if !(p.t_end > 0.0 && p.t_end.is_finite()) {
            return Err(CliError::config("protocol.t_end: must be > 0"));
        }
        if !(p.transient >= 0.0 && p.transient < p.t_end) {
            return Err(CliError::config("protocol.transient: must lie in [0, t_end)"));
        }
        match (p.kind, &p.ramp) {
            (ProtocolKind::KickRamp, None) => {
                return Err(CliError::config("protocol.ramp: required for kind = \"kick+ramp\""));
            }
            (ProtocolKind::KickRamp, Some(r)) => {
                if !(r.duration > 0.0 && r.duration <= p.t_end) {
                    return Err(CliError::config("protocol.ramp.duration: must lie in (0, t_end]"));
                }
                if self.engine != Engine::Schrodinger {
                    return Err(CliError::config("protocol.ramp: coupling ramps run with the schrodinger engine"));
                }
                if let Some(c) = &self.outputs.comparison {
                    if c.engine != Engine::Schrodinger {
                        return Err(CliError::config(
                            "outputs.comparison: coupling ramps run with the schrodinger engine",
                        ));
                    }
                }
            }
            (_, Some(_)) => {
                return Err(CliError::config("protocol.ramp: only valid for kind = \"kick+ramp\""));
            }
            _ => {}
        }
        if self.outputs.husimi_resolution < 2 {
            return Err(CliError::config("outputs.husimi_resolution: must be >= 2"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
model = "rabi"
engine = "master"
[system]
Omega = 100.0
g_ratio = 0.8
omega_d = "resonant"
eta = 1.0
[protocol]
kind = "driven-dissipative"
t_end = 5.0
"#;

    #[test]
    fn parses_minimal_file() {
        let sc = Scenario::parse(MINIMAL).unwrap();
        let sys = sc.system.resolve().unwrap();
        assert!((sys.coupling_ratio() - 0.8).abs() < 1e-12);
        assert!((sys.omega_d - 0.6).abs() < 1e-12);
        assert_eq!(sc.cutoff, 40);
        let cfg = sc.integrator.resolve(&sys, sc.model).unwrap();
        assert!((cfg.max_step - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_fields_with_location() {
        let bad = MINIMAL.replace("eta = 1.0", "etta = 1.0");
        let e = Scenario::parse(&bad).unwrap_err().to_string();
        assert!(e.contains("etta") && e.contains("line"), "{e}");
    }

    #[test]
    fn rejects_engine_model_mismatch() {
        let bad = MINIMAL.replace("engine = \"master\"", "engine = \"quadrature\"");
        assert!(Scenario::parse(&bad).is_err());
    }

    #[test]
    fn ramp_needs_schrodinger() {
        let bad = MINIMAL.replace("driven-dissipative", "kick+ramp") + "[protocol.ramp]\nduration = 2.0\n";
        assert!(Scenario::parse(&bad).is_err());
        let ok = bad.replace("engine = \"master\"", "engine = \"schrodinger\"");
        assert!(Scenario::parse(&ok).is_ok());
    }

    #[test]
    fn displaced_frame_needs_master_engine() {
        let sc = Scenario::parse(&format!("frame = \"displaced\"\n{MINIMAL}")).unwrap();
        assert_eq!(sc.frame, Frame::Displaced);
        let bad = format!("frame = \"displaced\"\n{MINIMAL}").replace("\"master\"", "\"cumulant2\"");
        assert!(Scenario::parse(&bad).is_err());
    }

    #[test]
    fn superradiant_coupling_is_a_config_error() {
        let bad = MINIMAL.replace("g_ratio = 0.8", "g_ratio = 1.2");
        let sc = Scenario::parse(&bad).unwrap();
        assert!(sc.system.resolve().is_err());
    }
}
