//! Dormand-Prince 5(4) with PI step-size control and fourth-order dense
//! output. Samples are produced on a caller-supplied grid by interpolation,
//! so the recorded times never depend on the adaptive step sequence.

use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element type of an ODE state vector.
pub trait Elem: Copy + Send + Sync + Default + Add<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;
    fn finite(self) -> bool;
}

impl Elem for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Elem for C64 {
    fn magnitude(self) -> f64 {
        self.norm_sqr().sqrt()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Step-size control parameters, all in absolute time units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

/// `out = y + h * sum_k c_k k_k`.
fn combine<E: Elem>(out: &mut [E], y: &[E], h: f64, parts: &[(f64, &[E])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = E::default();
        for (c, k) in parts {
            acc = acc + k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

fn rms_norm<E: Elem>(v: &[E], y: &[E], ctl: &StepControl) -> f64 {
    let n = v.len().max(1) as f64;
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(vi, yi)| {
            let sc = ctl.atol + ctl.rtol * yi.magnitude();
            (vi.magnitude() / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<E: Elem, F>(rhs: &mut F, t0: f64, y0: &[E], f0: &[E], ctl: &StepControl, dir_span: f64) -> f64
where
    F: FnMut(f64, &[E], &mut [E]),
{
    let d0 = rms_norm(y0, y0, ctl);
    let d1 = rms_norm(f0, y0, ctl);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(ctl.max_step).min(dir_span);
    let mut y1 = vec![E::default(); y0.len()];
    combine(&mut y1, y0, h0, &[(1.0, f0)]);
    let mut f1 = vec![E::default(); y0.len()];
    rhs(t0 + h0, &y1, &mut f1);
    let diff: Vec<E> = f1.iter().zip(f0).map(|(a, b)| *a + *b * -1.0).collect();
    let d2 = rms_norm(&diff, y0, ctl) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(ctl.max_step).min(dir_span)
}

/// Integrate `dy/dt = rhs(t, y)` from `t0` through every time in `samples`
/// (sorted, all `>= t0`), calling `observe` at each one.
pub fn integrate<E, F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[E],
    samples: &[f64],
    ctl: &StepControl,
    mut observe: O,
) -> Result<IntegrationStats>
where
    E: Elem,
    F: FnMut(f64, &[E], &mut [E]),
    O: FnMut(f64, &[E]) -> Result<()>,
{
    if !(ctl.rtol > 0.0 && ctl.atol > 0.0) {
        return Err(Error::param("rtol/atol", "tolerances must be positive"));
    }
    if !(ctl.max_step > 0.0) {
        return Err(Error::param("max_step", "must be positive"));
    }
    if samples.windows(2).any(|w| w[1] <= w[0]) || samples.first().is_some_and(|&s| s < t0) {
        return Err(Error::param("samples", "sample times must be strictly increasing and start at or after t0"));
    }
    let n = y0.len();
    let mut stats = IntegrationStats::default();
    let mut next = 0usize;
    while next < samples.len() && samples[next] <= t0 {
        observe(samples[next], y0)?;
        next += 1;
    }
    let Some(&t_end) = samples.last() else {
        return Ok(stats);
    };
    if next == samples.len() {
        return Ok(stats);
    }

    let z = || vec![E::default(); n];
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (z(), z(), z(), z(), z(), z(), z());
    let (mut ytmp, mut ynew, mut err) = (z(), z(), z());
    let mut y = y0.to_vec();
    let mut t = t0;

    rhs(t, &y, &mut k1);
    stats.rhs_evals += 1;
    let mut h = initial_step(&mut rhs, t0, &y, &k1, ctl, t_end - t0);
    stats.rhs_evals += 1;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut nonfinite_streak = 0u32;
    let mut dense = vec![[E::default(); 5]; n];

    while next < samples.len() {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Err(Error::MaxStepsExceeded {
                t,
                steps: stats.accepted + stats.rejected,
            });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let remaining = t_end - t;
        let hits_end = h >= remaining;
        if hits_end {
            h = remaining;
        }

        combine(&mut ytmp, &y, h, &[(A21, &k1)]);
        rhs(t + C2 * h, &ytmp, &mut k2);
        combine(&mut ytmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        rhs(t + C3 * h, &ytmp, &mut k3);
        combine(&mut ytmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        rhs(t + C4 * h, &ytmp, &mut k4);
        combine(&mut ytmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        rhs(t + C5 * h, &ytmp, &mut k5);
        combine(&mut ytmp, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        rhs(t + h, &ytmp, &mut k6);
        combine(&mut ynew, &y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        rhs(t + h, &ynew, &mut k7);
        stats.rhs_evals += 6;

        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let n_err = {
            let nn = n.max(1) as f64;
            let s: f64 = (0..n)
                .map(|i| {
                    let sc = ctl.atol + ctl.rtol * y[i].magnitude().max(ynew[i].magnitude());
                    (err[i].magnitude() / sc).powi(2)
                })
                .sum();
            (s / nn).sqrt()
        };

        if !n_err.is_finite() || ynew.iter().any(|v| !v.finite()) {
            nonfinite_streak += 1;
            if nonfinite_streak > 60 {
                return Err(Error::NonFinite { t });
            }
            stats.rejected += 1;
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        nonfinite_streak = 0;

        let fac11 = n_err.powf(EXPO);
        if n_err <= 1.0 {
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            facold = n_err.max(1e-4);
            let mut hnew = (h / fac).min(ctl.max_step);
            if last_rejected {
                hnew = hnew.min(h);
            }
            stats.accepted += 1;

            let t_new = if hits_end { t_end } else { t + h };
            if next < samples.len() && samples[next] <= t_new {
                for i in 0..n {
                    let ydiff = ynew[i] + y[i] * -1.0;
                    let bspl = k1[i] * h + ydiff * -1.0;
                    dense[i] = [
                        y[i],
                        ydiff,
                        bspl,
                        ydiff + k7[i] * -h + bspl * -1.0,
                        (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h,
                    ];
                }
                while next < samples.len() && samples[next] <= t_new {
                    let ts = samples[next];
                    if (ts - t_new).abs() <= 1e-12 * t_new.abs().max(1.0) {
                        observe(ts, &ynew)?;
                    } else {
                        let th = (ts - t) / h;
                        let th1 = 1.0 - th;
                        for i in 0..n {
                            let r = &dense[i];
                            ytmp[i] = r[0] + (r[1] + (r[2] + (r[3] + r[4] * th1) * th) * th1) * th;
                        }
                        observe(ts, &ytmp)?;
                    }
                    next += 1;
                }
            }

            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            h = hnew;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl(rtol: f64) -> StepControl {
        StepControl {
            rtol,
            atol: rtol * 1e-2,
            max_step: 1.0,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn exponential_decay() {
        let samples: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1).collect();
        let mut out = Vec::new();
        integrate(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            0.0,
            &[1.0],
            &samples,
            &ctl(1e-10),
            |t, y| {
                out.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(out.len(), 51);
        for (t, y) in out {
            assert!((y - (-t).exp()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn complex_rotation_dense_output() {
        let samples: Vec<f64> = (0..=137).map(|k| k as f64 * 0.073).collect();
        let mut worst: f64 = 0.0;
        let stats = integrate(
            |_, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, -3.0) * y[0],
            0.0,
            &[C64::new(1.0, 0.0)],
            &samples,
            &ctl(1e-9),
            |t, y| {
                worst = worst.max((y[0] - C64::from_polar(1.0, -3.0 * t)).norm());
                Ok(())
            },
        )
        .unwrap();
        assert!(worst < 1e-7, "{worst}");
        assert!(stats.accepted > 0);
    }

    #[test]
    fn time_dependent_forcing() {
        // y' = cos t, y(0) = 0
        let samples = [0.5, 1.0, 7.25];
        let mut got = Vec::new();
        integrate(
            |t, _y: &[f64], dy: &mut [f64]| dy[0] = t.cos(),
            0.0,
            &[0.0],
            &samples,
            &ctl(1e-10),
            |t, y| {
                got.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        for (t, y) in got {
            assert!((y - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn max_step_is_respected() {
        let mut c = ctl(1e-6);
        c.max_step = 0.01;
        let stats = integrate(|_, _y: &[f64], dy: &mut [f64]| dy[0] = 0.0, 0.0, &[1.0], &[1.0], &c, |_, _| Ok(())).unwrap();
        assert!(stats.accepted >= 100);
    }

    #[test]
    fn blow_up_is_reported() {
        let r = integrate(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            &[2.0],
            &ctl(1e-8),
            |_, _| Ok(()),
        );
        assert!(r.unwrap_err().is_integration_failure());
    }

    #[test]
    fn step_budget() {
        let mut c = ctl(1e-8);
        c.max_steps = 5;
        let r = integrate(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            0.0,
            &[1.0],
            &[100.0],
            &c,
            |_, _| Ok(()),
        );
        assert!(matches!(r, Err(Error::MaxStepsExceeded { .. })));
    }

    #[test]
    fn rejects_unsorted_samples() {
        let r = integrate(|_, _y: &[f64], dy: &mut [f64]| dy[0] = 0.0, 0.0, &[0.0], &[1.0, 0.5], &ctl(1e-6), |_, _| Ok(()));
        assert!(r.is_err());
    }

    #[test]
    fn fifth_order_convergence() {
        // Error should fall by roughly 2^5 per halving of a fixed step.
        let run = |h: f64| {
            let c = StepControl {
                rtol: 1.0,
                atol: 1.0,
                max_step: h,
                max_steps: 1_000_000,
            };
            let mut y_end = 0.0;
            integrate(
                |t, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * t.cos(),
                0.0,
                &[1.0],
                &[4.0],
                &c,
                |_, y| {
                    y_end = y[0];
                    Ok(())
                },
            )
            .unwrap();
            (y_end - 4f64.sin().exp()).abs()
        };
        let e1 = run(0.2);
        let e2 = run(0.1);
        let order = (e1 / e2).log2();
        assert!(order > 4.0, "observed order {order}");
    }
}
