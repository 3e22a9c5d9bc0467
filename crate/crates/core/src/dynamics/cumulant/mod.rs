//! Second-order cumulant (Gaussian closure) equations for one bosonic mode
//! coupled to `N` identical two-level systems with independent spin decay.
//!
//! The moment equations are generated at start-up from the Heisenberg
//! adjoint equation `d<O>/dt = <i[H, O] + sum_k D^dagger_k[O]>` by a small
//! operator-algebra routine. Permutation symmetry reduces every sum over
//! spins to the sites carried by `O` plus one representative of the rest,
//! weighted by the number of such spins, so the cost does not grow with `N`.

mod algebra;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use self::algebra::{adjoint_dissipator, commutator, simplify, Expr, SiteOp, Term};
use super::integrator::integrate;
use super::{sample_grid, Engine, IntegratorConfig, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::models::RabiSystem;
use crate::quantum::{self, CMatrix, DensityMatrix, HilbertSpace, Operator};

/// Largest `<a^dagger a>` or `|<a a>|` accepted before the closure is
/// declared to have blown up.
pub const MOMENT_BOUND: f64 = 1e6;

const SLOTS: usize = 12;

/// First and second moments of the field and of the (identical) spins.
/// Spin quantities are per spin; pair correlators refer to two distinct
/// spins and are unused for `N = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    pub n_spins: usize,
    pub a: C64,
    pub s12: C64,
    pub s22: C64,
    pub aa: C64,
    pub ada: C64,
    pub a_s12: C64,
    pub a_s21: C64,
    pub a_s22: C64,
    pub s21s12: C64,
    pub s12s12: C64,
    pub s12s22: C64,
    pub s22s22: C64,
}

impl MomentState {
    /// Coherent field `alpha` and every spin in its ground state.
    pub fn coherent_ground(alpha: C64, n_spins: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        Self {
            n_spins,
            a: alpha,
            s12: z,
            s22: z,
            aa: alpha * alpha,
            ada: C64::new(alpha.norm_sqr(), 0.0),
            a_s12: z,
            a_s21: z,
            a_s22: z,
            s21s12: z,
            s12s12: z,
            s12s22: z,
            s22s22: z,
        }
    }

    pub fn vacuum_ground(n_spins: usize) -> Self {
        Self::coherent_ground(C64::new(0.0, 0.0), n_spins)
    }

    /// Coherent field `alpha` and every spin in the pure state
    /// `c_g |g> + c_e |e>` (normalized internally).
    pub fn coherent_product(alpha: C64, c_g: C64, c_e: C64, n_spins: usize) -> Self {
        let norm = (c_g.norm_sqr() + c_e.norm_sqr()).sqrt();
        let (cg, ce) = (c_g / norm, c_e / norm);
        let s12 = cg.conj() * ce;
        let s22 = C64::new(ce.norm_sqr(), 0.0);
        let pair = n_spins > 1;
        let p = |v: C64| if pair { v } else { C64::new(0.0, 0.0) };
        Self {
            n_spins,
            a: alpha,
            s12,
            s22,
            aa: alpha * alpha,
            ada: C64::new(alpha.norm_sqr(), 0.0),
            a_s12: alpha * s12,
            a_s21: alpha * s12.conj(),
            a_s22: alpha * s22,
            s21s12: p(s12.conj() * s12),
            s12s12: p(s12 * s12),
            s12s22: p(s12 * s22),
            s22s22: p(s22 * s22),
        }
    }

    /// Moments of a density matrix on a Rabi (`spin_dim = 2`) or symmetric
    /// Dicke (`spin_dim = N + 1`) space.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        let space = rho.space();
        if !space.has_spin() {
            return Err(Error::InvalidState("moment state needs a spin factor".into()));
        }
        moments_of_matrix(space, rho.matrix())
    }

    pub(crate) fn to_slots(self) -> [C64; SLOTS] {
        [
            self.a, self.s12, self.s22, self.aa, self.ada, self.a_s12, self.a_s21, self.a_s22, self.s21s12,
            self.s12s12, self.s12s22, self.s22s22,
        ]
    }

    pub(crate) fn from_slots(n_spins: usize, y: &[C64]) -> Self {
        Self {
            n_spins,
            a: y[0],
            s12: y[1],
            s22: y[2],
            aa: y[3],
            ada: y[4],
            a_s12: y[5],
            a_s21: y[6],
            a_s22: y[7],
            s21s12: y[8],
            s12s12: y[9],
            s12s22: y[10],
            s22s22: y[11],
        }
    }

    /// Per-spin excited-state population.
    pub fn excitation(&self) -> f64 {
        self.s22.re
    }

    pub fn photon_number(&self) -> f64 {
        self.ada.re
    }

    /// Bounds that any physical state satisfies.
    pub fn validate(&self) -> Result<()> {
        let s22 = self.s22.re;
        if !(-1e-8..=1.0 + 1e-8).contains(&s22) {
            return Err(Error::InvalidState(format!("<sigma22> = {s22} outside [0, 1]")));
        }
        if self.ada.re < self.a.norm_sqr() - 1e-8 {
            return Err(Error::InvalidState(format!(
                "<a+a> = {} below |<a>|^2 = {}",
                self.ada.re,
                self.a.norm_sqr()
            )));
        }
        if self.to_slots().iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidState("non-finite moment".into()));
        }
        Ok(())
    }
}

fn trace_with(rho: &CMatrix, op: &Operator) -> C64 {
    let m = op.matrix();
    let n = rho.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += rho[(i, j)] * m[(j, i)];
        }
    }
    acc
}

/// Linear moment map; also applied to `d rho / dt` in tests.
pub(crate) fn moments_of_matrix(space: HilbertSpace, rho: &CMatrix) -> Result<MomentState> {
    let n_spins = space.spin_dim() - 1;
    let nf = n_spins as f64;
    let a = quantum::annihilation(space)?;
    let js = quantum::collective_spin(space)?;
    let id = Operator::identity(space);
    let jm = js.jm.clone();
    let jp = js.jp.clone();
    // number of excited spins, J_z + N/2
    let ne = js.jz.plus(&id.scale(nf / 2.0))?;
    let e = |op: &Operator| trace_with(rho, op);
    let s22 = e(&ne) / nf;
    let s12 = e(&jm) / nf;
    let mut m = MomentState {
        n_spins,
        a: e(&a),
        s12,
        s22,
        aa: e(&a.compose(&a)?),
        ada: e(&a.dagger().compose(&a)?),
        a_s12: e(&a.compose(&jm)?) / nf,
        a_s21: e(&a.compose(&jp)?) / nf,
        a_s22: e(&a.compose(&ne)?) / nf,
        s21s12: C64::new(0.0, 0.0),
        s12s12: C64::new(0.0, 0.0),
        s12s22: C64::new(0.0, 0.0),
        s22s22: C64::new(0.0, 0.0),
    };
    if n_spins > 1 {
        let pairs = nf * (nf - 1.0);
        m.s21s12 = (e(&jp.compose(&jm)?) - nf * s22) / pairs;
        m.s12s12 = e(&jm.compose(&jm)?) / pairs;
        m.s12s22 = (e(&jm.compose(&ne)?) - nf * s12) / pairs;
        m.s22s22 = (e(&ne.compose(&ne)?) - nf * s22) / pairs;
    }
    Ok(m)
}

/// Reference to a stored moment, possibly conjugated.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Ref {
    One,
    Slot(usize, bool),
}

impl Ref {
    #[inline]
    fn get(self, y: &[C64]) -> C64 {
        match self {
            Ref::One => C64::new(1.0, 0.0),
            Ref::Slot(i, false) => y[i],
            Ref::Slot(i, true) => y[i].conj(),
        }
    }
}

/// How a monomial's expectation value is obtained from the stored moments.
#[derive(Clone, Debug, PartialEq)]
enum Eval {
    Direct(Ref),
    /// `<ABC> = <AB><C> + <AC><B> + <BC><A> - 2<A><B><C>`.
    Gauss { single: [Ref; 3], pair: [Ref; 3] },
}

impl Eval {
    #[inline]
    fn get(&self, y: &[C64]) -> C64 {
        match self {
            Eval::Direct(r) => r.get(y),
            Eval::Gauss { single, pair } => {
                let (a, b, c) = (single[0].get(y), single[1].get(y), single[2].get(y));
                pair[0].get(y) * c + pair[1].get(y) * b + pair[2].get(y) * a - 2.0 * a * b * c
            }
        }
    }
}

fn slot_monomial(slot: usize) -> Term {
    use SiteOp::*;
    let t = |cr, an, sites: Vec<(u8, SiteOp)>| Term::new(C64::new(1.0, 0.0), 0, cr, an, sites);
    match slot {
        0 => t(0, 1, vec![]),
        1 => t(0, 0, vec![(0, Lower)]),
        2 => t(0, 0, vec![(0, Excited)]),
        3 => t(0, 2, vec![]),
        4 => t(1, 1, vec![]),
        5 => t(0, 1, vec![(0, Lower)]),
        6 => t(0, 1, vec![(0, Raise)]),
        7 => t(0, 1, vec![(0, Excited)]),
        8 => t(0, 0, vec![(0, Raise), (1, Lower)]),
        9 => t(0, 0, vec![(0, Lower), (1, Lower)]),
        10 => t(0, 0, vec![(0, Lower), (1, Excited)]),
        11 => t(0, 0, vec![(0, Excited), (1, Excited)]),
        _ => unreachable!(),
    }
}

fn key(cr: u32, an: u32, ops: &[SiteOp]) -> (u32, u32, Vec<SiteOp>) {
    let mut ops = ops.to_vec();
    ops.sort();
    (cr, an, ops)
}

/// Stored moment for a monomial of degree <= 2 (labels ignored).
fn lookup(cr: u32, an: u32, ops: &[SiteOp]) -> Option<Ref> {
    if cr == 0 && an == 0 && ops.is_empty() {
        return Some(Ref::One);
    }
    let find = |k: &(u32, u32, Vec<SiteOp>)| {
        (0..SLOTS).find(|&s| {
            let m = slot_monomial(s);
            let ops: Vec<SiteOp> = m.sites.iter().map(|x| x.1).collect();
            &key(m.cr, m.an, &ops) == k
        })
    };
    let direct = key(cr, an, ops);
    if let Some(s) = find(&direct) {
        return Some(Ref::Slot(s, false));
    }
    let dag: Vec<SiteOp> = ops.iter().map(|o| o.dagger()).collect();
    find(&key(an, cr, &dag)).map(|s| Ref::Slot(s, true))
}

/// Single-letter factors of a normal-ordered monomial, in order.
#[derive(Clone, Copy)]
enum Letter {
    Create,
    Annihilate,
    Site(SiteOp),
}

fn letters_ref(ls: &[Letter]) -> Option<Ref> {
    let cr = ls.iter().filter(|l| matches!(l, Letter::Create)).count() as u32;
    let an = ls.iter().filter(|l| matches!(l, Letter::Annihilate)).count() as u32;
    let ops: Vec<SiteOp> = ls
        .iter()
        .filter_map(|l| match l {
            Letter::Site(o) => Some(*o),
            _ => None,
        })
        .collect();
    lookup(cr, an, &ops)
}

fn compile(term: &Term) -> Result<Eval> {
    let ops: Vec<SiteOp> = term.sites.iter().map(|x| x.1).collect();
    match term.degree() {
        0..=2 => lookup(term.cr, term.an, &ops)
            .map(Eval::Direct)
            .ok_or_else(|| Error::InvalidState(format!("no stored moment for {term:?}"))),
        3 => {
            let mut ls = Vec::new();
            ls.extend((0..term.cr).map(|_| Letter::Create));
            ls.extend((0..term.an).map(|_| Letter::Annihilate));
            ls.extend(ops.iter().map(|&o| Letter::Site(o)));
            let r = |x: &[Letter]| letters_ref(x).ok_or_else(|| Error::InvalidState("closure lookup failed".into()));
            Ok(Eval::Gauss {
                single: [r(&ls[0..1])?, r(&ls[1..2])?, r(&ls[2..3])?],
                pair: [r(&[ls[0], ls[1]])?, r(&[ls[0], ls[2]])?, r(&[ls[1], ls[2]])?],
            })
        }
        d => Err(Error::InvalidState(format!("moment equation produced a degree-{d} term"))),
    }
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    coef: C64,
    phase: i32,
    eval: Eval,
}

/// Right-hand sides of the moment equations for one parameter set.
#[derive(Clone, Debug)]
pub(crate) struct MomentEquations {
    rows: Vec<Vec<CompiledTerm>>,
    omega_d: f64,
}

const OTHER: u8 = 2;

impl MomentEquations {
    pub(crate) fn new(sys: &RabiSystem) -> Result<Self> {
        let n = sys.n_spins;
        let c = sys.g / (2.0 * (n as f64).sqrt());
        let eth = C64::from_polar(1.0, sys.theta);
        let i = C64::new(0.0, 1.0);
        let cplx = |x: f64| C64::new(x, 0.0);

        let mut h_field: Expr = vec![Term::boson(sys.omega, 1, 1)];
        if sys.eta != 0.0 {
            h_field.push(Term::new(cplx(sys.eta), 1, 0, 1, vec![]));
            h_field.push(Term::new(cplx(sys.eta), -1, 1, 0, vec![]));
        }
        let h_site = |l: u8| -> Expr {
            let mut h = vec![Term::new(cplx(sys.spin_omega), 0, 0, 0, vec![(l, SiteOp::Excited)])];
            for op in [SiteOp::Lower, SiteOp::Raise] {
                h.push(Term::new(c * eth, 0, 0, 1, vec![(l, op)]));
                h.push(Term::new(c * eth.conj(), 0, 1, 0, vec![(l, op)]));
            }
            h
        };
        let field_jump: Expr = vec![Term::boson(1.0, 0, 1)];

        let mut rows = Vec::with_capacity(SLOTS);
        for slot in 0..SLOTS {
            let o = vec![slot_monomial(slot)];
            let own: Vec<u8> = o[0].sites.iter().map(|s| s.0).collect();
            if own.len() > n {
                rows.push(Vec::new());
                continue;
            }
            let mut rhs: Expr = commutator(&h_field, &o).iter().map(|t| t.scaled(i)).collect();
            if sys.kappa > 0.0 {
                rhs.extend(adjoint_dissipator(&field_jump, &o).iter().map(|t| t.scaled(cplx(sys.kappa))));
            }
            let mut labels: Vec<(u8, f64)> = own.iter().map(|&l| (l, 1.0)).collect();
            let others = (n - own.len()) as f64;
            if others > 0.0 {
                labels.push((OTHER, others));
            }
            for (l, w) in labels {
                rhs.extend(commutator(&h_site(l), &o).iter().map(|t| t.scaled(i * w)));
                if sys.gamma > 0.0 {
                    let jump = vec![Term::site(l, SiteOp::Lower)];
                    rhs.extend(adjoint_dissipator(&jump, &o).iter().map(|t| t.scaled(cplx(sys.gamma * w))));
                }
            }
            let row = simplify(rhs)
                .iter()
                .map(|t| {
                    Ok(CompiledTerm {
                        coef: t.coef,
                        phase: t.phase,
                        eval: compile(t)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self {
            rows,
            omega_d: sys.omega_d,
        })
    }

    pub(crate) fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let ph = C64::from_polar(1.0, self.omega_d * t);
        let phases = [ph.conj(), C64::new(1.0, 0.0), ph];
        for (row, d) in self.rows.iter().zip(dy.iter_mut()) {
            let mut acc = C64::new(0.0, 0.0);
            for term in row {
                acc += term.coef * phases[(term.phase + 1) as usize] * term.eval.get(y);
            }
            *d = acc;
        }
    }
}

/// Integrate the second-order moment equations.
pub fn evolve_cumulant_second(
    sys: &RabiSystem,
    init: MomentState,
    t_span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Trajectory<MomentState>> {
    sys.validate()?;
    if init.n_spins != sys.n_spins {
        return Err(Error::param(
            "init",
            format!("moment state is for N = {}, system has N = {}", init.n_spins, sys.n_spins),
        ));
    }
    init.validate()?;
    let eqs = MomentEquations::new(sys)?;
    let ctl = config.step_control()?;
    let samples = sample_grid(t_span.0, t_span.1, config.sample_dt)?;
    let n = sys.n_spins;
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let stats = integrate(
        |t, y: &[C64], dy: &mut [C64]| eqs.rhs(t, y, dy),
        t_span.0,
        &init.to_slots(),
        &samples,
        &ctl,
        |t, y| {
            let m = MomentState::from_slots(n, y);
            let size = m.ada.norm().max(m.aa.norm());
            if !(size <= MOMENT_BOUND) {
                return Err(Error::ClosureBlowUp { t, value: size });
            }
            times.push(t);
            snapshots.push(m);
            Ok(())
        },
    )
    .map_err(|e| match e {
        Error::NonFinite { t } => Error::ClosureBlowUp { t, value: f64::INFINITY },
        other => other,
    })?;
    let mut meta = TrajectoryMeta::new(Engine::Cumulant2, Some(sys.clone()), config);
    meta.stats = stats;
    Ok(Trajectory { times, snapshots, meta })
}
