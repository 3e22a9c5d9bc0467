//! Post-run analysis: kicked-orbit checks, steady-state reports and
//! trajectory comparisons.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, Convention, SqueezeParams};
use crate::error::{Error, Result};
use crate::models::RabiSystem;
use crate::observables::{fit_ellipse, Sample, HEISENBERG_BOUND};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Range {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut n = 0usize;
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for v in values {
            n += 1;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        (n > 0).then(|| Range {
            min,
            max,
            mean: sum / n as f64,
        })
    }

    pub fn spread(&self) -> f64 {
        self.max - self.min
    }
}

fn window(samples: &[Sample], t_start: f64) -> Vec<&Sample> {
    samples.iter().filter(|s| s.stats.t >= t_start - 1e-12).collect()
}

fn empty_window(t_start: f64) -> Error {
    Error::param("transient", format!("no samples after t = {t_start}"))
}

/// Largest `(max - min) / mean` of `f` over complete periods after `t_start`.
pub fn period_variation(samples: &[Sample], t_start: f64, period: f64, f: impl Fn(&Sample) -> f64) -> Option<f64> {
    let t_last = samples.last()?.stats.t;
    let mut worst: Option<f64> = None;
    let mut k = 0;
    loop {
        let a = t_start + k as f64 * period;
        let b = a + period;
        if b > t_last + 1e-9 {
            break;
        }
        let r = Range::of(samples.iter().filter(|s| s.stats.t >= a - 1e-12 && s.stats.t <= b + 1e-12).map(&f))?;
        let v = r.spread() / r.mean.abs();
        worst = Some(worst.map_or(v, |w: f64| w.max(v)));
        k += 1;
    }
    worst
}

/// Checks of a closed (kicked) run against the squeezed-coherent closed forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KickReport {
    pub window_start: f64,
    pub expected_var_x: f64,
    pub expected_var_p: f64,
    pub var_x: Range,
    pub var_p: Range,
    /// Largest `|var - expected|` over the window, either quadrature.
    pub max_variance_deviation: f64,
    /// `e^{4r}` and the measured mean `varX / varP`.
    pub expected_variance_ratio: f64,
    pub variance_ratio: f64,
    /// RMS distance of `(<X>, <P>)` from the closed-form orbit.
    pub orbit_rms: f64,
    /// `orbit_rms` divided by the closed-form X amplitude.
    pub orbit_rms_relative: f64,
    /// Largest `|varX varP - covXP^2 - 1/16|`.
    pub max_saturation_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp_fidelity: Option<f64>,
}

/// Closed-form orbit of a squeezed coherent state whose squeezed-mode
/// amplitude is `beta(t)`.
pub fn squeezed_orbit(p: &SqueezeParams, beta: C64) -> (f64, f64) {
    let a = beta * p.xi.cosh() - beta.conj() * p.xi.sinh();
    (a.re, a.im)
}

pub fn kick_report(
    sys: &RabiSystem,
    samples: &[Sample],
    window_start: f64,
    beta_at: impl Fn(f64) -> Result<C64>,
    ramp_fidelity: Option<f64>,
) -> Result<KickReport> {
    let p = analytics::squeeze_params(sys)?;
    let (ex, ep) = analytics::kicked_variances(sys, Convention::Physical)?;
    let w = window(samples, window_start);
    if w.is_empty() {
        return Err(empty_window(window_start));
    }
    let var_x = Range::of(w.iter().map(|s| s.stats.var_x)).unwrap();
    let var_p = Range::of(w.iter().map(|s| s.stats.var_p)).unwrap();
    let max_dev = w
        .iter()
        .map(|s| (s.stats.var_x - ex).abs().max((s.stats.var_p - ep).abs()))
        .fold(0.0, f64::max);
    let mut sq = 0.0;
    let mut amp: f64 = 0.0;
    for s in &w {
        let beta = beta_at(s.stats.t)?;
        let (x, pp) = squeezed_orbit(&p, beta);
        amp = amp.max(beta.norm() * p.r.exp());
        sq += (s.stats.mean_x - x).powi(2) + (s.stats.mean_p - pp).powi(2);
    }
    let orbit_rms = (sq / w.len() as f64).sqrt();
    let gap = w
        .iter()
        .map(|s| (s.stats.uncertainty_product - HEISENBERG_BOUND).abs())
        .fold(0.0, f64::max);
    Ok(KickReport {
        window_start,
        expected_var_x: ex,
        expected_var_p: ep,
        var_x,
        var_p,
        max_variance_deviation: max_dev,
        expected_variance_ratio: (4.0 * p.r).exp(),
        variance_ratio: var_x.mean / var_p.mean,
        orbit_rms,
        orbit_rms_relative: if amp > 0.0 { orbit_rms / amp } else { orbit_rms },
        max_saturation_gap: gap,
        ramp_fidelity,
    })
}

/// Driven-dissipative steady state versus the closed-form orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateReport {
    pub window_start: f64,
    pub period: f64,
    pub var_x: Range,
    pub var_p: Range,
    /// Largest `(max - min) / mean` of the variance over one drive period.
    pub var_x_period_variation: Option<f64>,
    pub var_p_period_variation: Option<f64>,
    pub uncertainty_product: Range,
    /// `min(uncertainty_product) > 1/16 + 1e-4`.
    pub unsaturated: bool,
    pub sigma22: Option<Range>,
    /// `tan(2 phi)` closed form, radians.
    pub tilt_analytic: f64,
    /// Major-axis tilt of the closed-form steady orbit, radians.
    pub tilt_orbit_exact: f64,
    /// Least-squares ellipse fit of the simulated `(<X>, <P>)` orbit, radians.
    pub tilt_fit: Option<f64>,
    /// Mean covariance-ellipse tilt of the state, radians.
    pub tilt_state: f64,
    pub tilt_fit_minus_analytic_deg: Option<f64>,
    /// RMS distance of the simulated means from the closed-form steady
    /// state, relative to the closed-form orbit's semi-major axis.
    pub means_rms_relative: f64,
}

pub fn steady_state_report(sys: &RabiSystem, samples: &[Sample], window_start: f64) -> Result<SteadyStateReport> {
    let w = window(samples, window_start);
    if w.len() < 2 {
        return Err(empty_window(window_start));
    }
    let period = if sys.omega_d > 0.0 {
        2.0 * PI / sys.omega_d
    } else {
        2.0 * PI / analytics::squeeze_params(sys)?.omega_eff
    };
    let var_x = Range::of(w.iter().map(|s| s.stats.var_x)).unwrap();
    let var_p = Range::of(w.iter().map(|s| s.stats.var_p)).unwrap();
    let product = Range::of(w.iter().map(|s| s.stats.uncertainty_product)).unwrap();
    let sigma22 = Range::of(w.iter().map(|s| s.sigma22).filter(|v| v.is_finite()));
    let orbit = analytics::steady_orbit(sys)?;
    let tilt_analytic = orbit.tilt;
    let points: Vec<(f64, f64)> = w.iter().map(|s| (s.stats.mean_x, s.stats.mean_p)).collect();
    let tilt_fit = fit_ellipse(&points).ok().map(|f| f.tilt);
    let mut sq = 0.0;
    for s in &w {
        let (x, p) = orbit.at(sys.omega_d, s.stats.t);
        sq += (s.stats.mean_x - x).powi(2) + (s.stats.mean_p - p).powi(2);
    }
    let rms = (sq / w.len() as f64).sqrt();
    let tail: Vec<Sample> = w.iter().map(|s| **s).collect();
    Ok(SteadyStateReport {
        window_start,
        period,
        var_x,
        var_p,
        var_x_period_variation: period_variation(&tail, window_start, period, |s| s.stats.var_x),
        var_p_period_variation: period_variation(&tail, window_start, period, |s| s.stats.var_p),
        uncertainty_product: product,
        unsaturated: product.min > HEISENBERG_BOUND + 1e-4,
        sigma22,
        tilt_analytic,
        tilt_orbit_exact: orbit.orbit_tilt,
        tilt_fit,
        tilt_state: w.iter().map(|s| s.stats.tilt_fit).sum::<f64>() / w.len() as f64,
        tilt_fit_minus_analytic_deg: tilt_fit.map(|f| (f - tilt_analytic).to_degrees()),
        means_rms_relative: if orbit.semi_major > 0.0 { rms / orbit.semi_major } else { rms },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub rms: f64,
    pub max: f64,
    /// Normalization used for the relative figures.
    pub scale: f64,
    pub rms_relative: f64,
    pub max_relative: f64,
}

impl Deviation {
    fn of(diffs: &[f64], scale: f64) -> Self {
        let rms = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
        let max = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let s = if scale > 0.0 { scale } else { 1.0 };
        Self {
            rms,
            max,
            scale,
            rms_relative: rms / s,
            max_relative: max / s,
        }
    }
}

/// Deviations of trajectory `a` from reference `b`. Means are normalized by
/// the X amplitude of `b` (half its peak-to-peak), variances by their mean
/// in `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub t_start: f64,
    pub points: usize,
    pub orbit_amplitude: f64,
    #[serde(rename = "meanX")]
    pub mean_x: Deviation,
    #[serde(rename = "meanP")]
    pub mean_p: Deviation,
    #[serde(rename = "varX")]
    pub var_x: Deviation,
    #[serde(rename = "varP")]
    pub var_p: Deviation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma22: Option<Deviation>,
}

fn interpolate(b: &[Sample], t: f64, f: impl Fn(&Sample) -> f64) -> f64 {
    let k = b.partition_point(|s| s.stats.t < t);
    if k == 0 {
        return f(&b[0]);
    }
    if k >= b.len() {
        return f(&b[b.len() - 1]);
    }
    let (s0, s1) = (&b[k - 1], &b[k]);
    let u = (t - s0.stats.t) / (s1.stats.t - s0.stats.t);
    f(s0) * (1.0 - u) + f(s1) * u
}

pub fn compare(a: &[Sample], b: &[Sample], t_start: f64) -> Result<CompareReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::DisjointGrids);
    }
    let lo = t_start.max(b[0].stats.t);
    let hi = b[b.len() - 1].stats.t;
    let pts: Vec<&Sample> = a.iter().filter(|s| s.stats.t >= lo - 1e-12 && s.stats.t <= hi + 1e-12).collect();
    if pts.is_empty() {
        return Err(Error::DisjointGrids);
    }
    let bw = window(b, lo);
    let xr = Range::of(bw.iter().map(|s| s.stats.mean_x)).unwrap();
    let amplitude = 0.5 * xr.spread();
    let diffs = |f: &dyn Fn(&Sample) -> f64| -> Vec<f64> { pts.iter().map(|s| f(s) - interpolate(b, s.stats.t, f)).collect() };
    let mean_of = |f: &dyn Fn(&Sample) -> f64| Range::of(bw.iter().map(|s| f(s))).unwrap().mean.abs();
    let vx = |s: &Sample| s.stats.var_x;
    let vp = |s: &Sample| s.stats.var_p;
    let sz = |s: &Sample| s.sigma22;
    let sigma22 = (pts.iter().all(|s| s.sigma22.is_finite()) && bw.iter().all(|s| s.sigma22.is_finite()))
        .then(|| Deviation::of(&diffs(&sz), mean_of(&sz)));
    Ok(CompareReport {
        t_start: lo,
        points: pts.len(),
        orbit_amplitude: amplitude,
        mean_x: Deviation::of(&diffs(&|s| s.stats.mean_x), amplitude),
        mean_p: Deviation::of(&diffs(&|s| s.stats.mean_p), amplitude),
        var_x: Deviation::of(&diffs(&vx), mean_of(&vx)),
        var_p: Deviation::of(&diffs(&vp), mean_of(&vp)),
        sigma22,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{FieldMoments, QuadratureStats};

    fn series(f: impl Fn(f64) -> (f64, f64)) -> Vec<Sample> {
        (0..200)
            .map(|k| {
                let t = k as f64 * 0.1;
                let (x, p) = f(t);
                let m = FieldMoments::factorized(C64::new(x, p));
                Sample {
                    stats: QuadratureStats::from_moments(t, &m),
                    sigma22: 0.1,
                    photon_number: m.ada,
                }
            })
            .collect()
    }

    #[test]
    fn identical_trajectories_have_zero_deviation() {
        let a = series(|t| (t.cos(), -t.sin()));
        let r = compare(&a, &a, 2.0).unwrap();
        assert_eq!(r.mean_x.max, 0.0);
        assert_eq!(r.var_p.rms, 0.0);
        assert!((r.orbit_amplitude - 1.0).abs() < 1e-2);
    }

    #[test]
    fn offset_shows_up_relative_to_amplitude() {
        let a = series(|t| (2.0 * t.cos() + 0.1, 0.0));
        let b = series(|t| (2.0 * t.cos(), 0.0));
        let r = compare(&a, &b, 0.0).unwrap();
        assert!((r.mean_x.rms - 0.1).abs() < 1e-12);
        assert!((r.mean_x.rms_relative - 0.05).abs() < 1e-3);
    }

    #[test]
    fn disjoint_grids_are_rejected() {
        let a = series(|t| (t, 0.0));
        let mut b = a.clone();
        for s in &mut b {
            s.stats.t += 100.0;
        }
        assert!(matches!(compare(&a, &b, 0.0), Err(Error::DisjointGrids)));
    }

    #[test]
    fn period_variation_of_constant_is_zero() {
        let a = series(|_| (1.0, 0.0));
        assert_eq!(period_variation(&a, 0.0, 2.0, |s| s.stats.var_x), Some(0.0));
        assert_eq!(period_variation(&a, 0.0, 100.0, |s| s.stats.var_x), None);
    }
}
