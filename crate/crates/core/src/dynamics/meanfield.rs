use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::integrator::integrate;
use super::{sample_grid, Engine, IntegratorConfig, Trajectory, TrajectoryMeta};
use crate::error::Result;
use crate::models::RabiSystem;

/// Factorized first moments `<a>`, `<sigma^12>`, `<sigma^22>` (per spin).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub a: C64,
    pub s12: C64,
    pub s22: f64,
}

impl MeanFieldState {
    /// Coherent field `alpha`, every spin in its ground state.
    pub fn coherent_ground(alpha: C64) -> Self {
        Self {
            a: alpha,
            s12: C64::new(0.0, 0.0),
            s22: 0.0,
        }
    }

    pub fn mean_x(&self) -> f64 {
        self.a.re
    }

    pub fn mean_p(&self) -> f64 {
        self.a.im
    }
}

/// First-order (factorized) equations for `<a>`, `<sigma^12>`, `<sigma^22>`.
/// The per-spin coupling is `g / (2 sqrt N)`; for one spin this is the
/// `g/2` of the Rabi Hamiltonian.
pub fn evolve_meanfield_first(
    sys: &RabiSystem,
    init: MeanFieldState,
    t_span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Trajectory<MeanFieldState>> {
    sys.validate()?;
    let ctl = config.step_control()?;
    let samples = sample_grid(t_span.0, t_span.1, config.sample_dt)?;
    let n = sys.n_spins as f64;
    let c = sys.g / (2.0 * n.sqrt());
    let e = C64::from_polar(1.0, sys.theta);
    let i = C64::new(0.0, 1.0);
    let (w, big, wd, eta, kappa, gamma) = (sys.omega, sys.spin_omega, sys.omega_d, sys.eta, sys.kappa, sys.gamma);

    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let y0 = [init.a, init.s12, C64::new(init.s22, 0.0)];
    let stats = integrate(
        |t, y: &[C64], dy: &mut [C64]| {
            let (a, s12, s22) = (y[0], y[1], y[2].re);
            let f = e * a + e.conj() * a.conj();
            let sx = s12 + s12.conj();
            dy[0] = -i * w * a - 0.5 * kappa * a - i * n * c * e.conj() * sx - i * eta * C64::from_polar(1.0, -wd * t);
            dy[1] = c * (-i * f + 2.0 * i * f * s22) - i * big * s12 - 0.5 * gamma * s12;
            dy[2] = C64::new((i * c * f * (s12 - s12.conj())).re - gamma * s22, 0.0);
        },
        t_span.0,
        &y0,
        &samples,
        &ctl,
        |t, y| {
            times.push(t);
            snapshots.push(MeanFieldState {
                a: y[0],
                s12: y[1],
                s22: y[2].re,
            });
            Ok(())
        },
    )?;
    let mut meta = TrajectoryMeta::new(Engine::Meanfield1, Some(sys.clone()), config);
    meta.stats = stats;
    Ok(Trajectory { times, snapshots, meta })
}

/// A point `(<X>, <P>)` of the quadrature mean-field equations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePoint {
    pub x: f64,
    pub p: f64,
}

/// `dX/dt = omega P - kappa X / 2 - eta sin(omega_d t)`,
/// `dP/dt = -omega epsilon X - kappa P / 2 - eta cos(omega_d t)`.
pub fn evolve_quadrature_meanfield(
    sys: &RabiSystem,
    x0: f64,
    p0: f64,
    t_span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Trajectory<QuadraturePoint>> {
    let ctl = config.step_control()?;
    let samples = sample_grid(t_span.0, t_span.1, config.sample_dt)?;
    let eps = sys.epsilon();
    let (w, wd, eta, kappa) = (sys.omega, sys.omega_d, sys.eta, sys.kappa);
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let stats = integrate(
        |t, y: &[f64], dy: &mut [f64]| {
            dy[0] = w * y[1] - 0.5 * kappa * y[0] - eta * (wd * t).sin();
            dy[1] = -w * eps * y[0] - 0.5 * kappa * y[1] - eta * (wd * t).cos();
        },
        t_span.0,
        &[x0, p0],
        &samples,
        &ctl,
        |t, y| {
            times.push(t);
            snapshots.push(QuadraturePoint { x: y[0], p: y[1] });
            Ok(())
        },
    )?;
    let mut meta = TrajectoryMeta::new(Engine::Quadrature, Some(sys.clone()), config);
    meta.stats = stats;
    Ok(Trajectory { times, snapshots, meta })
}
