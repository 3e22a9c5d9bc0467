use num_complex::Complex64 as C64;

use super::integrator::integrate;
use super::{sample_grid, Engine, IntegratorConfig, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::models::{Hamiltonian, Liouvillian};
use crate::quantum::sparse::Csr;
use crate::quantum::{CMatrix, CVector, DensityMatrix, Ket, Operator};

/// Smallest eigenvalue below which a master-equation run aborts.
pub const POSITIVITY_ABORT: f64 = -1e-4;
/// Smallest eigenvalue below which a warning is recorded.
pub const POSITIVITY_WARN: f64 = -1e-6;

const MINUS_I: C64 = C64::new(0.0, -1.0);

/// Unitary evolution under `H(t)`, handing each sample to `observe`.
pub fn evolve_schrodinger_with<O>(
    h: &Hamiltonian,
    psi0: &Ket,
    t_span: (f64, f64),
    config: &IntegratorConfig,
    mut observe: O,
) -> Result<TrajectoryMeta>
where
    O: FnMut(f64, &Ket) -> Result<()>,
{
    h.space().ensure_same(&psi0.space())?;
    if (psi0.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!("initial ket has norm {}", psi0.norm())));
    }
    let ctl = config.step_control()?;
    let samples = sample_grid(t_span.0, t_span.1, config.sample_dt)?;
    let space = psi0.space();
    let mut gen = h.to_sparse(MINUS_I);
    let mut meta = TrajectoryMeta::new(Engine::Schrodinger, None, config);
    let mut worst_norm: f64 = 0.0;
    let y0: Vec<C64> = psi0.data().iter().copied().collect();
    let stats = integrate(
        |t, y: &[C64], dy: &mut [C64]| {
            gen.set_time(t);
            gen.matvec(y, dy);
        },
        t_span.0,
        &y0,
        &samples,
        &ctl,
        |t, y| {
            let ket = Ket::from_vector(space, CVector::from_column_slice(y))?;
            worst_norm = worst_norm.max((ket.norm() - 1.0).abs());
            observe(t, &ket)
        },
    )?;
    meta.stats = stats;
    if worst_norm > 10.0 * config.rtol {
        meta.warn(format!("norm drifted by {worst_norm:.3e} (> 10 rtol)"));
    }
    Ok(meta)
}

/// Unitary evolution under `H(t)`, keeping every sampled ket.
pub fn evolve_schrodinger(
    h: &Hamiltonian,
    psi0: &Ket,
    t_span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Trajectory<Ket>> {
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let meta = evolve_schrodinger_with(h, psi0, t_span, config, |t, k| {
        times.push(t);
        snapshots.push(k.clone());
        Ok(())
    })?;
    Ok(Trajectory { times, snapshots, meta })
}

fn row_major(m: &CMatrix) -> Vec<C64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Lindblad evolution, handing each (Hermitian-symmetrized) sample to
/// `observe`. Positivity is checked every `config.positivity_every`
/// samples.
pub fn evolve_master_with<O>(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    config: &IntegratorConfig,
    mut observe: O,
) -> Result<TrajectoryMeta>
where
    O: FnMut(f64, &DensityMatrix) -> Result<()>,
{
    let space = l.space();
    space.ensure_same(&rho0.space())?;
    rho0.validate()?;
    let ctl = config.step_control()?;
    let samples = sample_grid(t_span.0, t_span.1, config.sample_dt)?;
    let n = space.dim();

    let mut decay = Operator::zero(space);
    let mut jumps = Vec::new();
    for j in &l.jumps {
        if j.rate == 0.0 {
            continue;
        }
        let ldl = j.op.dagger().compose(&j.op)?;
        decay = decay.plus(&ldl.scale(-0.5 * j.rate))?;
        jumps.push(Csr::from_dense(&(j.op.matrix() * C64::new(j.rate.sqrt(), 0.0))));
    }
    let mut gen = l.hamiltonian.to_sparse_with(MINUS_I, &decay);
    let mut c = vec![C64::default(); n * n];
    let mut ct = vec![C64::default(); n * n];
    let mut tmp = vec![C64::default(); n * n];

    let mut meta = TrajectoryMeta::new(Engine::Master, None, config);
    let mut worst_trace: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    let mut sample_index = 0usize;
    let y0 = row_major(rho0.matrix());

    let stats = integrate(
        |t, y: &[C64], dy: &mut [C64]| {
            gen.set_time(t);
            gen.mul_dense(y, n, dy);
            for lj in &jumps {
                lj.mul_dense(y, n, &mut c);
                for i in 0..n {
                    for k in 0..n {
                        ct[i * n + k] = c[k * n + i].conj();
                    }
                }
                lj.mul_dense(&ct, n, &mut tmp);
                for (d, v) in dy.iter_mut().zip(&tmp) {
                    *d += v * 0.5;
                }
            }
            for i in 0..n {
                let d = dy[i * n + i];
                dy[i * n + i] = C64::new(2.0 * d.re, 0.0);
                for k in (i + 1)..n {
                    let a = dy[i * n + k];
                    let b = dy[k * n + i];
                    dy[i * n + k] = a + b.conj();
                    dy[k * n + i] = b + a.conj();
                }
            }
        },
        t_span.0,
        &y0,
        &samples,
        &ctl,
        |t, y| {
            let mut rho = DensityMatrix::from_matrix_unchecked(space, CMatrix::from_row_slice(n, n, y))?;
            rho.symmetrize();
            worst_trace = worst_trace.max((rho.trace().re - 1.0).abs());
            if config.positivity_every > 0 && sample_index % config.positivity_every == 0 {
                let min = rho.min_eigenvalue();
                if min < POSITIVITY_ABORT {
                    return Err(Error::PositivityViolation { t, min_eigenvalue: min });
                }
                worst_eig = worst_eig.min(min);
            }
            sample_index += 1;
            observe(t, &rho)
        },
    )?;
    meta.stats = stats;
    if worst_trace > 10.0 * config.rtol {
        meta.warn(format!("trace drifted by {worst_trace:.3e} (> 10 rtol)"));
    }
    if worst_eig < POSITIVITY_WARN {
        meta.warn(format!("density matrix eigenvalue reached {worst_eig:.3e}"));
    }
    Ok(meta)
}

/// Lindblad evolution keeping every sampled density matrix.
pub fn evolve_master(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Trajectory<DensityMatrix>> {
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let meta = evolve_master_with(l, rho0, t_span, config, |t, r| {
        times.push(t);
        snapshots.push(r.clone());
        Ok(())
    })?;
    Ok(Trajectory { times, snapshots, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_lindblad, Hamiltonian, Jump, ModelKind, RabiSystem};
    use crate::quantum::{self, Expectation, HilbertSpace};

    fn cfg(dt: f64) -> IntegratorConfig {
        IntegratorConfig::default().with_sample_dt(dt)
    }

    #[test]
    fn rotating_coherent_state() {
        let s = HilbertSpace::oscillator(30).unwrap();
        let h = Hamiltonian::constant(quantum::number(s).unwrap());
        let psi = Ket::coherent(s, C64::new(1.0, 0.0)).unwrap();
        let a = quantum::annihilation(s).unwrap();
        let traj = evolve_schrodinger(&h, &psi, (0.0, 6.0), &cfg(0.1)).unwrap();
        assert_eq!(traj.len(), 61);
        for (t, k) in traj.iter() {
            let want = C64::from_polar(1.0, -t);
            assert!((k.expect(&a).unwrap() - want).norm() < 1e-7, "t={t}");
            assert!((k.norm() - 1.0).abs() < 10.0 * 1e-8);
        }
        assert!(traj.meta.warnings.is_empty());
    }

    #[test]
    fn von_neumann_matches_schrodinger() {
        let sys = RabiSystem::new(1.0, 3.0).with_coupling(0.8).with_drive(0.3, 0.9);
        let s = HilbertSpace::rabi(14).unwrap();
        let l = build_lindblad(&sys, s, ModelKind::Rabi).unwrap();
        assert!(l.is_unitary());
        let psi = Ket::coherent(s, C64::new(0.7, 0.2)).unwrap();
        let c = cfg(0.5).with_tolerances(1e-10, 1e-12);
        let kets = evolve_schrodinger(&l.hamiltonian, &psi, (0.0, 5.0), &c).unwrap();
        let rhos = evolve_master(&l, &psi.to_density(), (0.0, 5.0), &c).unwrap();
        for ((_, k), (_, r)) in kets.iter().zip(rhos.iter()) {
            let d = (k.to_density().matrix() - r.matrix()).map(|z| z.norm()).max();
            assert!(d < 1e-7, "{d}");
        }
    }

    #[test]
    fn damped_cavity_photon_number() {
        let kappa = 0.7;
        let sys = RabiSystem::new(1.0, 1.0).with_dissipation(kappa, 0.0);
        let s = HilbertSpace::oscillator(30).unwrap();
        let l = build_lindblad(&sys, s, ModelKind::Effective).unwrap();
        let rho = Ket::coherent(s, C64::new(2.0, 0.0)).unwrap().to_density();
        let n = quantum::number(s).unwrap();
        let traj = evolve_master(&l, &rho, (0.0, 4.0), &cfg(0.25)).unwrap();
        for (t, r) in traj.iter() {
            let got = r.expect(&n).unwrap().re;
            assert!((got - 4.0 * (-kappa * t).exp()).abs() < 1e-6, "t={t}");
            assert!((r.trace().re - 1.0).abs() < 1e-7);
        }
        assert!(traj.meta.warnings.is_empty(), "{:?}", traj.meta.warnings);
    }

    #[test]
    fn spin_decay() {
        let s = HilbertSpace::rabi(2).unwrap();
        let sys = RabiSystem::new(1.0, 5.0).with_dissipation(0.0, 0.4);
        let l = build_lindblad(&sys, s, ModelKind::Rabi).unwrap();
        let rho = Ket::basis(s, 0, 1).unwrap().to_density();
        let see = quantum::pauli(s).unwrap().see;
        let traj = evolve_master(&l, &rho, (0.0, 3.0), &cfg(0.5)).unwrap();
        for (t, r) in traj.iter() {
            assert!((r.expect(&see).unwrap().re - (-0.4 * t).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn rejects_foreign_state() {
        let s = HilbertSpace::oscillator(5).unwrap();
        let h = Hamiltonian::constant(quantum::number(s).unwrap());
        let other = Ket::vacuum(HilbertSpace::rabi(5).unwrap());
        assert!(evolve_schrodinger(&h, &other, (0.0, 1.0), &cfg(0.1)).is_err());
        let l = Liouvillian::new(
            h,
            vec![Jump {
                rate: 1.0,
                op: quantum::annihilation(s).unwrap(),
            }],
        )
        .unwrap();
        assert!(evolve_master(&l, &other.to_density(), (0.0, 1.0), &cfg(0.1)).is_err());
    }

    #[test]
    fn driven_steady_state_forgets_initial_state() {
        let sys = RabiSystem::new(1.0, 20.0)
            .with_coupling_ratio(0.6)
            .with_resonant_drive(0.5)
            .with_dissipation(1.0, 1.0);
        let s = HilbertSpace::rabi(20).unwrap();
        let l = build_lindblad(&sys, s, ModelKind::Rabi).unwrap();
        let down = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let up = CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let field = s.field_space();
        let a0 = Ket::tensor(&Ket::vacuum(field), &down).unwrap();
        let b0 = Ket::tensor(&Ket::coherent(field, C64::new(1.0, -1.0)).unwrap(), &up).unwrap();
        let c = IntegratorConfig::for_system(&sys).with_tolerances(1e-9, 1e-11).with_sample_dt(0.5);
        let ta = evolve_master(&l, &a0.to_density(), (0.0, 30.0), &c).unwrap();
        let tb = evolve_master(&l, &b0.to_density(), (0.0, 30.0), &c).unwrap();
        let a = quantum::annihilation(s).unwrap();
        let n = quantum::number(s).unwrap();
        for ((t, ra), (_, rb)) in ta.iter().zip(tb.iter()).filter(|((t, _), _)| *t >= 25.0) {
            assert!((ra.expect(&a).unwrap() - rb.expect(&a).unwrap()).norm() < 1e-4, "t = {t}");
            assert!((ra.expect(&n).unwrap() - rb.expect(&n).unwrap()).norm() < 1e-4, "t = {t}");
        }
    }
}
