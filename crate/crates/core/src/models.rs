//! Model parameters, Hamiltonians and Lindblad generators for the Rabi,
//! Dicke, Jaynes-Cummings and effective squeezed-oscillator models.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::sparse::SparseSum;
use crate::quantum::{self, HilbertSpace, Operator};

/// Parameter bundle for one model instance. All frequencies are in units
/// of the oscillator frequency when driven from scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiSystem {
    /// Oscillator frequency.
    pub omega: f64,
    /// Spin transition frequency.
    #[serde(rename = "Omega")]
    pub spin_omega: f64,
    /// Coupling strength (`g/2 (a + a^dagger) sigma_x` normalization).
    pub g: f64,
    /// Coupling phase: `a e^{i theta} + a^dagger e^{-i theta}`.
    pub theta: f64,
    pub n_spins: usize,
    /// Drive strength.
    pub eta: f64,
    /// Drive frequency.
    pub omega_d: f64,
    /// Oscillator decay rate.
    pub kappa: f64,
    /// Spin decay rate.
    pub gamma: f64,
    /// Permit `g >= g_c` (raw master-equation runs only).
    #[serde(default)]
    pub allow_superradiant: bool,
}

impl RabiSystem {
    pub fn new(omega: f64, spin_omega: f64) -> Self {
        Self {
            omega,
            spin_omega,
            g: 0.0,
            theta: 0.0,
            n_spins: 1,
            eta: 0.0,
            omega_d: 0.0,
            kappa: 0.0,
            gamma: 0.0,
            allow_superradiant: false,
        }
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    /// Set `g = ratio * g_c`.
    pub fn with_coupling_ratio(mut self, ratio: f64) -> Self {
        self.g = ratio * (self.omega * self.spin_omega).sqrt();
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_spins(mut self, n: usize) -> Self {
        self.n_spins = n;
        self
    }

    pub fn with_drive(mut self, eta: f64, omega_d: f64) -> Self {
        self.eta = eta;
        self.omega_d = omega_d;
        self
    }

    /// Drive at the effective oscillator frequency `omega sqrt(1 - g^2/g_c^2)`.
    pub fn with_resonant_drive(mut self, eta: f64) -> Self {
        self.eta = eta;
        self.omega_d = self.omega * self.epsilon().max(0.0).sqrt();
        self
    }

    pub fn with_dissipation(mut self, kappa: f64, gamma: f64) -> Self {
        self.kappa = kappa;
        self.gamma = gamma;
        self
    }

    pub fn superradiant_override(mut self, allow: bool) -> Self {
        self.allow_superradiant = allow;
        self
    }

    /// `g_c = sqrt(omega Omega)`.
    pub fn critical_coupling(&self) -> Result<f64> {
        critical_coupling(self)
    }

    /// `g / g_c`.
    pub fn coupling_ratio(&self) -> f64 {
        self.g / (self.omega * self.spin_omega).sqrt()
    }

    /// `epsilon = 1 - g^2/g_c^2`.
    pub fn epsilon(&self) -> f64 {
        1.0 - self.g * self.g / (self.omega * self.spin_omega)
    }

    pub fn validate(&self) -> Result<()> {
        let g_c = critical_coupling(self)?;
        let nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        nonneg("g", self.g)?;
        nonneg("eta", self.eta)?;
        nonneg("omega_d", self.omega_d)?;
        nonneg("kappa", self.kappa)?;
        nonneg("gamma", self.gamma)?;
        if !self.theta.is_finite() {
            return Err(Error::param("theta", "must be finite"));
        }
        if !(0.0..2.0 * PI).contains(&self.theta) {
            return Err(Error::param("theta", format!("must lie in [0, 2 pi), got {}", self.theta)));
        }
        if self.n_spins < 1 {
            return Err(Error::param("n_spins", "must be at least 1"));
        }
        if self.g >= g_c && !self.allow_superradiant {
            return Err(Error::Superradiant { g: self.g, g_c });
        }
        Ok(())
    }

    fn require_normal_phase(&self) -> Result<f64> {
        let g_c = critical_coupling(self)?;
        if self.g >= g_c {
            return Err(Error::Superradiant { g: self.g, g_c });
        }
        Ok(g_c)
    }

    fn phase(&self) -> C64 {
        C64::from_polar(1.0, self.theta)
    }
}

/// `g_c = sqrt(omega Omega)`.
pub fn critical_coupling(sys: &RabiSystem) -> Result<f64> {
    if !(sys.omega.is_finite() && sys.omega > 0.0) {
        return Err(Error::param("omega", format!("must be > 0, got {}", sys.omega)));
    }
    if !(sys.spin_omega.is_finite() && sys.spin_omega > 0.0) {
        return Err(Error::param("Omega", format!("must be > 0, got {}", sys.spin_omega)));
    }
    Ok((sys.omega * sys.spin_omega).sqrt())
}

/// Which Hamiltonian a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rabi,
    Dicke,
    Effective,
    #[serde(rename = "jc")]
    JaynesCummings,
}

impl ModelKind {
    pub fn has_spin(self) -> bool {
        !matches!(self, ModelKind::Effective)
    }

    /// Space of the right shape for this model.
    pub fn space(self, fock_cutoff: usize, n_spins: usize) -> Result<HilbertSpace> {
        match self {
            ModelKind::Rabi | ModelKind::JaynesCummings => HilbertSpace::rabi(fock_cutoff),
            ModelKind::Dicke => HilbertSpace::dicke(fock_cutoff, n_spins),
            ModelKind::Effective => HilbertSpace::oscillator(fock_cutoff),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Rabi => "rabi",
            ModelKind::Dicke => "dicke",
            ModelKind::Effective => "effective",
            ModelKind::JaynesCummings => "jc",
        };
        f.write_str(s)
    }
}

/// Scalar time dependence of one Hamiltonian term.
pub type Coefficient = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// `H(t) = H_0 + sum_k c_k(t) O_k`. Integrators sample the coefficients
/// at each stage time; nothing is tabulated in advance.
#[derive(Clone)]
pub struct Hamiltonian {
    constant: Operator,
    terms: Vec<(Coefficient, Operator)>,
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("space", &self.constant.space())
            .field("time_dependent_terms", &self.terms.len())
            .finish()
    }
}

impl Hamiltonian {
    pub fn constant(op: Operator) -> Self {
        Self {
            constant: op,
            terms: Vec::new(),
        }
    }

    pub fn with_term(mut self, coef: Coefficient, op: Operator) -> Result<Self> {
        self.constant.space().ensure_same(&op.space())?;
        self.terms.push((coef, op));
        Ok(self)
    }

    /// Sum of two Hamiltonians on the same space.
    pub fn plus(mut self, other: Hamiltonian) -> Result<Self> {
        self.constant = self.constant.plus(&other.constant)?;
        self.terms.extend(other.terms);
        Ok(self)
    }

    pub fn space(&self) -> HilbertSpace {
        self.constant.space()
    }

    pub fn static_part(&self) -> &Operator {
        &self.constant
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.terms.is_empty()
    }

    pub fn at(&self, t: f64) -> Operator {
        let mut m = self.constant.matrix().clone();
        for (c, op) in &self.terms {
            m += op.matrix() * c(t);
        }
        Operator::new(self.space(), m).expect("same space by construction")
    }

    /// `scale * H(t)` in row-compressed form for the integrators.
    pub(crate) fn to_sparse(&self, scale: C64) -> SparseSum {
        let base = self.constant.matrix() * scale;
        let terms = self
            .terms
            .iter()
            .map(|(c, op)| {
                let c = c.clone();
                let f: Box<dyn Fn(f64) -> C64 + Send + Sync> = Box::new(move |t| c(t));
                (f, op.matrix() * scale)
            })
            .collect();
        SparseSum::new(&base, terms)
    }

    /// `scale * H(t) + extra` in row-compressed form.
    pub(crate) fn to_sparse_with(&self, scale: C64, extra: &Operator) -> SparseSum {
        let base = self.constant.matrix() * scale + extra.matrix();
        let terms = self
            .terms
            .iter()
            .map(|(c, op)| {
                let c = c.clone();
                let f: Box<dyn Fn(f64) -> C64 + Send + Sync> = Box::new(move |t| c(t));
                (f, op.matrix() * scale)
            })
            .collect();
        SparseSum::new(&base, terms)
    }
}

/// One dissipation channel `rate * D[op]`.
#[derive(Clone, Debug)]
pub struct Jump {
    pub rate: f64,
    pub op: Operator,
}

#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub hamiltonian: Hamiltonian,
    pub jumps: Vec<Jump>,
}

impl Liouvillian {
    pub fn new(hamiltonian: Hamiltonian, jumps: Vec<Jump>) -> Result<Self> {
        for j in &jumps {
            if !(j.rate.is_finite() && j.rate >= 0.0) {
                return Err(Error::param("rate", format!("jump rates must be >= 0, got {}", j.rate)));
            }
            hamiltonian.space().ensure_same(&j.op.space())?;
        }
        Ok(Self { hamiltonian, jumps })
    }

    pub fn space(&self) -> HilbertSpace {
        self.hamiltonian.space()
    }

    pub fn is_unitary(&self) -> bool {
        self.jumps.is_empty()
    }
}

fn field_coupling(sys: &RabiSystem, space: HilbertSpace) -> Result<Operator> {
    let a = quantum::annihilation(space)?;
    let e = sys.phase();
    a.scale(e).plus(&a.dagger().scale(e.conj()))
}

fn oscillator_energy(sys: &RabiSystem, space: HilbertSpace) -> Result<Operator> {
    Ok(quantum::number(space)?.scale(sys.omega))
}

/// Coupling-free part and unit-coupling operator for the collective model:
/// `H = H_0 + g V` with `V = F J_x / sqrt(N)`.
fn collective_parts(sys: &RabiSystem, space: HilbertSpace) -> Result<(Operator, Operator)> {
    let js = quantum::collective_spin(space)?;
    let h0 = oscillator_energy(sys, space)?.plus(&js.jz.scale(sys.spin_omega))?;
    let v = field_coupling(sys, space)?
        .compose(&js.jx)?
        .scale(1.0 / (sys.n_spins as f64).sqrt());
    Ok((h0, v))
}

/// `H = omega a^dagger a + (Omega/2) sigma_z + (g/2)(a e^{i theta} + a^dagger e^{-i theta}) sigma_x`.
pub fn build_rabi(sys: &RabiSystem, space: HilbertSpace) -> Result<Operator> {
    critical_coupling(sys)?;
    if space.spin_dim() != 2 || sys.n_spins != 1 {
        return Err(Error::param(
            "space",
            format!("Rabi model needs one spin and spin_dim 2, got N = {} and {space}", sys.n_spins),
        ));
    }
    let (h0, v) = collective_parts(sys, space)?;
    h0.plus(&v.scale(sys.g))
}

/// `H = omega a^dagger a + Omega J_z + (g/sqrt N)(a e^{i theta} + a^dagger e^{-i theta}) J_x`
/// on the symmetric subspace `j = N/2`.
pub fn build_dicke(sys: &RabiSystem, space: HilbertSpace) -> Result<Operator> {
    critical_coupling(sys)?;
    if space.spin_dim() != sys.n_spins + 1 {
        return Err(Error::param(
            "space",
            format!("Dicke model with N = {} needs spin_dim {}, got {space}", sys.n_spins, sys.n_spins + 1),
        ));
    }
    let (h0, v) = collective_parts(sys, space)?;
    h0.plus(&v.scale(sys.g))
}

/// Rotating-wave (Jaynes-Cummings) version of the Rabi Hamiltonian,
/// `(g/2)(a e^{i theta} sigma_+ + a^dagger e^{-i theta} sigma_-)`.
pub fn build_jc(sys: &RabiSystem, space: HilbertSpace) -> Result<Operator> {
    critical_coupling(sys)?;
    if space.spin_dim() != 2 || sys.n_spins != 1 {
        return Err(Error::param("space", "Jaynes-Cummings model needs one spin and spin_dim 2"));
    }
    let p = quantum::pauli(space)?;
    let a = quantum::annihilation(space)?;
    let e = sys.phase();
    let rot = a
        .scale(e)
        .compose(&p.sp)?
        .plus(&a.dagger().scale(e.conj()).compose(&p.sm)?)?;
    oscillator_energy(sys, space)?
        .plus(&p.sz.scale(sys.spin_omega / 2.0))?
        .plus(&rot.scale(sys.g / 2.0))
}

/// `H_d(t) = eta (a e^{i omega_d t} + a^dagger e^{-i omega_d t})`.
pub fn build_drive(sys: &RabiSystem, space: HilbertSpace) -> Result<Hamiltonian> {
    if !(sys.eta.is_finite() && sys.eta >= 0.0) {
        return Err(Error::param("eta", "must be >= 0"));
    }
    let zero = Hamiltonian::constant(Operator::zero(space));
    if sys.eta == 0.0 {
        return Ok(zero);
    }
    let a = quantum::annihilation(space)?;
    let wd = sys.omega_d;
    let eta = sys.eta;
    zero.with_term(Arc::new(move |t| C64::from_polar(eta, wd * t)), a.clone())?
        .with_term(Arc::new(move |t| C64::from_polar(eta, -wd * t)), a.dagger())
}

/// `-(1/4 Omega) F^2` with `F = a e^{i theta} + a^dagger e^{-i theta}`; the
/// effective Hamiltonian is `omega a^dagger a + g^2 * this`.
fn effective_unit_squeeze(sys: &RabiSystem, space: HilbertSpace) -> Result<Operator> {
    let f = field_coupling(sys, space)?;
    Ok(f.compose(&f)?.scale(-1.0 / (4.0 * sys.spin_omega)))
}

/// `H_a = omega a^dagger a - (g^2 / 4 Omega)(a e^{i theta} + a^dagger e^{-i theta})^2`,
/// plus the drive when `driven`.
pub fn build_effective(sys: &RabiSystem, space: HilbertSpace, driven: bool) -> Result<Hamiltonian> {
    critical_coupling(sys)?;
    if space.has_spin() {
        return Err(Error::param("space", "effective model lives on the oscillator alone"));
    }
    let h = oscillator_energy(sys, space)?.plus(&effective_unit_squeeze(sys, space)?.scale(sys.g * sys.g))?;
    let h = Hamiltonian::constant(h);
    if driven {
        h.plus(build_drive(sys, space)?)
    } else {
        Ok(h)
    }
}

/// Full Hamiltonian (including the drive) for a model.
pub fn build_hamiltonian(sys: &RabiSystem, space: HilbertSpace, model: ModelKind) -> Result<Hamiltonian> {
    match model {
        ModelKind::Effective => build_effective(sys, space, true),
        _ => {
            let h = match model {
                ModelKind::Rabi => build_rabi(sys, space)?,
                ModelKind::Dicke => build_dicke(sys, space)?,
                ModelKind::JaynesCummings => build_jc(sys, space)?,
                ModelKind::Effective => unreachable!(),
            };
            Hamiltonian::constant(h).plus(build_drive(sys, space)?)
        }
    }
}

/// How the scheduled coupling enters a Hamiltonian split `H_0 + s(g) V`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingPower {
    /// `s(g) = g` (spin models).
    Linear,
    /// `s(g) = g^2` (effective oscillator).
    Quadratic,
}

/// Split a model Hamiltonian into its coupling-free part (drive included)
/// and the operator multiplying the coupling, for coupling ramps.
pub fn coupling_split(
    sys: &RabiSystem,
    space: HilbertSpace,
    model: ModelKind,
) -> Result<(Hamiltonian, Operator, CouplingPower)> {
    critical_coupling(sys)?;
    let drive = build_drive(sys, space)?;
    match model {
        ModelKind::Rabi | ModelKind::Dicke => {
            if model == ModelKind::Rabi {
                build_rabi(sys, space)?;
            } else {
                build_dicke(sys, space)?;
            }
            let (h0, v) = collective_parts(sys, space)?;
            Ok((Hamiltonian::constant(h0).plus(drive)?, v, CouplingPower::Linear))
        }
        ModelKind::JaynesCummings => {
            let bare = RabiSystem { g: 0.0, ..sys.clone() };
            let h0 = build_jc(&bare, space)?;
            let unit = RabiSystem { g: 1.0, ..sys.clone() };
            let v = build_jc(&unit, space)?.minus(&h0)?;
            Ok((Hamiltonian::constant(h0).plus(drive)?, v, CouplingPower::Linear))
        }
        ModelKind::Effective => {
            if space.has_spin() {
                return Err(Error::param("space", "effective model lives on the oscillator alone"));
            }
            let h0 = oscillator_energy(sys, space)?;
            let v = effective_unit_squeeze(sys, space)?;
            Ok((Hamiltonian::constant(h0).plus(drive)?, v, CouplingPower::Quadratic))
        }
    }
}

/// Master-equation generator: Hamiltonian of `model` plus `kappa D[a]` and
/// spin decay (`gamma D[sigma_-]` for one spin, collective `gamma D[J_-]`
/// for the Dicke model).
pub fn build_lindblad(sys: &RabiSystem, space: HilbertSpace, model: ModelKind) -> Result<Liouvillian> {
    if !(sys.kappa.is_finite() && sys.kappa >= 0.0) {
        return Err(Error::param("kappa", "must be >= 0"));
    }
    if !(sys.gamma.is_finite() && sys.gamma >= 0.0) {
        return Err(Error::param("gamma", "must be >= 0"));
    }
    let h = build_hamiltonian(sys, space, model)?;
    let mut jumps = Vec::new();
    if sys.kappa > 0.0 {
        jumps.push(Jump {
            rate: sys.kappa,
            op: quantum::annihilation(space)?,
        });
    }
    if sys.gamma > 0.0 && model.has_spin() {
        let lower = if model == ModelKind::Dicke {
            quantum::collective_spin(space)?.jm
        } else {
            quantum::pauli(space)?.sm
        };
        jumps.push(Jump {
            rate: sys.gamma,
            op: lower,
        });
    }
    Liouvillian::new(h, jumps)
}

/// Classification of the Schrieffer-Wolff validity margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validity {
    Valid,
    Marginal,
    Invalid,
}

impl Validity {
    pub fn classify(margin: f64) -> Self {
        if margin >= 10.0 {
            Validity::Valid
        } else if margin > 1.0 {
            Validity::Marginal
        } else {
            Validity::Invalid
        }
    }
}

/// `(1 - g^2/g_c^2) / (omega/Omega)^{2/3}`.
pub fn sw_validity_margin(sys: &RabiSystem) -> Result<f64> {
    sys.require_normal_phase()?;
    Ok(sys.epsilon() / (sys.omega / sys.spin_omega).powf(2.0 / 3.0))
}
