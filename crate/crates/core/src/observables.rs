//! Quadrature statistics, squeezing in dB, spin excitation, Husimi Q grids
//! and ellipse fits.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{MeanFieldState, MomentState, QuadraturePoint};
use crate::error::{Error, Result};
use crate::quantum::{coherent_amplitudes, CMatrix, DensityMatrix, HilbertSpace, Ket};

/// Lowest moments of the field: `<a>`, `<a^2>`, `<a^dagger a>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldMoments {
    pub a: C64,
    pub aa: C64,
    pub ada: f64,
}

impl FieldMoments {
    /// Moments of a coherent state with amplitude `a`.
    pub fn factorized(a: C64) -> Self {
        Self {
            a,
            aa: a * a,
            ada: a.norm_sqr(),
        }
    }

    /// Moments after `a -> a + d`.
    pub fn shifted(&self, d: C64) -> Self {
        Self {
            a: self.a + d,
            aa: self.aa + 2.0 * d * self.a + d * d,
            ada: self.ada + 2.0 * (d.conj() * self.a).re + d.norm_sqr(),
        }
    }
}

/// Anything from which field moments and a spin excitation can be read.
pub trait Observable {
    fn field_moments(&self) -> Result<FieldMoments>;

    /// `<sigma^22>` per spin.
    fn spin_excitation(&self) -> Result<f64>;
}

fn no_spin() -> Error {
    Error::param("state", "no spin factor present")
}

/// `(sum_s c_s z(n, s), ...)` over field-major amplitudes `z(n, s)` where
/// the callback sees the flat index pairs for `a`, `a^2` and `n`.
fn moments_from(space: HilbertSpace, mut pair: impl FnMut(usize, usize) -> C64) -> FieldMoments {
    let sd = space.spin_dim();
    let mut a = C64::new(0.0, 0.0);
    let mut aa = C64::new(0.0, 0.0);
    let mut ada = 0.0;
    for n in 0..space.fock_dim() {
        let nf = n as f64;
        for s in 0..sd {
            let i = n * sd + s;
            ada += nf * pair(i, i).re;
            if n >= 1 {
                a += nf.sqrt() * pair(i - sd, i);
            }
            if n >= 2 {
                aa += (nf * (nf - 1.0)).sqrt() * pair(i - 2 * sd, i);
            }
        }
    }
    FieldMoments { a, aa, ada }
}

fn excitation_from(space: HilbertSpace, population: impl Fn(usize) -> f64) -> Result<f64> {
    if !space.has_spin() {
        return Err(no_spin());
    }
    let sd = space.spin_dim();
    let n_spins = (sd - 1) as f64;
    let mut acc = 0.0;
    for i in 0..space.dim() {
        acc += (i % sd) as f64 * population(i);
    }
    Ok(acc / n_spins)
}

impl Observable for Ket {
    fn field_moments(&self) -> Result<FieldMoments> {
        let psi = self.data();
        let norm = psi.norm_squared();
        let m = moments_from(self.space(), |i, j| psi[i].conj() * psi[j]);
        Ok(FieldMoments {
            a: m.a / norm,
            aa: m.aa / norm,
            ada: m.ada / norm,
        })
    }

    fn spin_excitation(&self) -> Result<f64> {
        let psi = self.data();
        let norm = psi.norm_squared();
        excitation_from(self.space(), |i| psi[i].norm_sqr() / norm)
    }
}

impl Observable for DensityMatrix {
    fn field_moments(&self) -> Result<FieldMoments> {
        let rho = self.matrix();
        let tr = self.trace().re;
        // tr(rho O) with O_{ij} nonzero only at (i, j): rho_{ji}
        let m = moments_from(self.space(), |i, j| rho[(j, i)]);
        Ok(FieldMoments {
            a: m.a / tr,
            aa: m.aa / tr,
            ada: m.ada / tr,
        })
    }

    fn spin_excitation(&self) -> Result<f64> {
        let rho = self.matrix();
        let tr = self.trace().re;
        excitation_from(self.space(), |i| rho[(i, i)].re / tr)
    }
}

impl Observable for MomentState {
    fn field_moments(&self) -> Result<FieldMoments> {
        Ok(FieldMoments {
            a: self.a,
            aa: self.aa,
            ada: self.ada.re,
        })
    }

    fn spin_excitation(&self) -> Result<f64> {
        Ok(self.excitation())
    }
}

/// First-order states carry no fluctuations; variances come out as those of
/// a coherent state.
impl Observable for MeanFieldState {
    fn field_moments(&self) -> Result<FieldMoments> {
        Ok(FieldMoments::factorized(self.a))
    }

    fn spin_excitation(&self) -> Result<f64> {
        Ok(self.s22)
    }
}

impl Observable for QuadraturePoint {
    fn field_moments(&self) -> Result<FieldMoments> {
        Ok(FieldMoments::factorized(C64::new(self.x, self.p)))
    }

    fn spin_excitation(&self) -> Result<f64> {
        Err(no_spin())
    }
}

/// Statistics of `X = (a + a^dagger)/2`, `P = (a - a^dagger)/2i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStats {
    pub t: f64,
    #[serde(rename = "meanX")]
    pub mean_x: f64,
    #[serde(rename = "meanP")]
    pub mean_p: f64,
    #[serde(rename = "varX")]
    pub var_x: f64,
    #[serde(rename = "varP")]
    pub var_p: f64,
    #[serde(rename = "covXP")]
    pub cov_xp: f64,
    /// `varX varP - covXP^2`.
    pub uncertainty_product: f64,
    /// Major-axis angle of the covariance ellipse, `atan2(2 cov, varX - varP) / 2`.
    pub tilt_fit: f64,
}

/// Robertson-Schrodinger lower bound on `uncertainty_product`.
pub const HEISENBERG_BOUND: f64 = 1.0 / 16.0;

impl QuadratureStats {
    pub fn from_moments(t: f64, m: &FieldMoments) -> Self {
        let mean_x = m.a.re;
        let mean_p = m.a.im;
        let var_x = (2.0 * m.aa.re + 2.0 * m.ada + 1.0) / 4.0 - mean_x * mean_x;
        let var_p = (-2.0 * m.aa.re + 2.0 * m.ada + 1.0) / 4.0 - mean_p * mean_p;
        let cov_xp = 0.5 * m.aa.im - mean_x * mean_p;
        Self {
            t,
            mean_x,
            mean_p,
            var_x,
            var_p,
            cov_xp,
            uncertainty_product: var_x * var_p - cov_xp * cov_xp,
            tilt_fit: 0.5 * (2.0 * cov_xp).atan2(var_x - var_p),
        }
    }

    /// Principal variances `(largest, smallest)` of the covariance matrix.
    pub fn principal_variances(&self) -> (f64, f64) {
        let mean = 0.5 * (self.var_x + self.var_p);
        let d = (0.25 * (self.var_x - self.var_p).powi(2) + self.cov_xp * self.cov_xp).sqrt();
        (mean + d, mean - d)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.var_x > 0.0 && self.var_p > 0.0) {
            return Err(Error::param(
                "state",
                format!("non-positive quadrature variance ({}, {})", self.var_x, self.var_p),
            ));
        }
        Ok(())
    }
}

pub fn quadrature_stats<S: Observable + ?Sized>(state: &S, t: f64) -> Result<QuadratureStats> {
    let stats = QuadratureStats::from_moments(t, &state.field_moments()?);
    stats.check()?;
    Ok(stats)
}

pub fn spin_excitation<S: Observable + ?Sized>(state: &S) -> Result<f64> {
    state.spin_excitation()
}

/// `10 log10(4 var)`: squeezing relative to the vacuum variance 1/4.
pub fn squeezing_db(var: f64) -> f64 {
    10.0 * (4.0 * var).log10()
}

/// One row of a time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(flatten)]
    pub stats: QuadratureStats,
    /// NaN when the state has no spin.
    pub sigma22: f64,
    pub photon_number: f64,
}

pub fn sample<S: Observable + ?Sized>(state: &S, t: f64) -> Result<Sample> {
    sample_displaced(state, t, C64::new(0.0, 0.0))
}

/// Sample of a state held in a frame displaced by `d` (`a = a' + d`).
pub fn sample_displaced<S: Observable + ?Sized>(state: &S, t: f64, d: C64) -> Result<Sample> {
    let m = state.field_moments()?.shifted(d);
    let stats = QuadratureStats::from_moments(t, &m);
    stats.check()?;
    Ok(Sample {
        stats,
        sigma22: state.spin_excitation().unwrap_or(f64::NAN),
        photon_number: m.ada,
    })
}

/// Rectangle and resolution in the `beta = X + iP` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub resolution: (usize, usize),
}

impl GridSpec {
    pub const DEFAULT_RESOLUTION: usize = 201;

    /// Centred on the means with half-width `4 max(dX, dP)`.
    pub fn auto(stats: &QuadratureStats) -> Self {
        let (major, _) = stats.principal_variances();
        let half = 4.0 * major.max(0.0).sqrt().max(0.5);
        Self {
            re_range: (stats.mean_x - half, stats.mean_x + half),
            im_range: (stats.mean_p - half, stats.mean_p + half),
            resolution: (Self::DEFAULT_RESOLUTION, Self::DEFAULT_RESOLUTION),
        }
    }

    pub fn square(center: (f64, f64), half_width: f64, n: usize) -> Self {
        Self {
            re_range: (center.0 - half_width, center.0 + half_width),
            im_range: (center.1 - half_width, center.1 + half_width),
            resolution: (n, n),
        }
    }

    fn validate(&self) -> Result<()> {
        let (nx, ny) = self.resolution;
        if nx < 2 || ny < 2 {
            return Err(Error::param("resolution", "need at least 2 points per axis"));
        }
        if !(self.re_range.1 > self.re_range.0 && self.im_range.1 > self.im_range.0) {
            return Err(Error::param("grid", "ranges must be increasing"));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        let step = (range.1 - range.0) / (n - 1) as f64;
        (0..n).map(|k| range.0 + k as f64 * step).collect()
    }
}

/// `Q(beta) = <beta|rho_field|beta> / pi` on a grid; `values[j][i]` sits at
/// `(re[i], im[j])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HusimiGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Riemann sum of `Q` times the cell area.
    pub mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub const HUSIMI_MIN_MASS: f64 = 0.95;

/// Reduced field density matrix of a ket or density matrix.
pub trait FieldDensity {
    fn field_density(&self) -> CMatrix;
}

impl FieldDensity for Ket {
    fn field_density(&self) -> CMatrix {
        let sp = self.space();
        let sd = sp.spin_dim();
        let psi = self.data();
        let norm = psi.norm_squared();
        CMatrix::from_fn(sp.fock_dim(), sp.fock_dim(), |n, m| {
            (0..sd).map(|s| psi[n * sd + s] * psi[m * sd + s].conj()).sum::<C64>() / norm
        })
    }
}

impl FieldDensity for DensityMatrix {
    fn field_density(&self) -> CMatrix {
        crate::quantum::field_state(self).into_matrix() / self.trace()
    }
}

pub fn husimi_q<S: FieldDensity + ?Sized>(state: &S, grid: &GridSpec) -> Result<HusimiGrid> {
    husimi_q_displaced(state, grid, C64::new(0.0, 0.0))
}

/// Husimi function on `grid` of a state held in a frame displaced by `d`:
/// `Q(beta) = Q'(beta - d)`.
pub fn husimi_q_displaced<S: FieldDensity + ?Sized>(state: &S, grid: &GridSpec, d: C64) -> Result<HusimiGrid> {
    grid.validate()?;
    let rho = state.field_density();
    let dim = rho.nrows();
    let re = GridSpec::axis(grid.re_range, grid.resolution.0);
    let im = GridSpec::axis(grid.im_range, grid.resolution.1);
    let values: Vec<Vec<f64>> = im
        .par_iter()
        .map(|&y| {
            re.iter()
                .map(|&x| {
                    let c = coherent_amplitudes(dim, C64::new(x, y) - d);
                    let mut acc = C64::new(0.0, 0.0);
                    for n in 0..dim {
                        let mut row = C64::new(0.0, 0.0);
                        for m in 0..dim {
                            row += rho[(n, m)] * c[m];
                        }
                        acc += c[n].conj() * row;
                    }
                    acc.re / PI
                })
                .collect()
        })
        .collect();
    let cell = (re[1] - re[0]) * (im[1] - im[0]);
    let mass = values.iter().flatten().sum::<f64>() * cell;
    let mut out = HusimiGrid {
        re,
        im,
        values,
        mass,
        warning: None,
    };
    if mass < HUSIMI_MIN_MASS {
        let (cx, cy, _, _, _) = out.moments();
        let half = 0.5 * (grid.re_range.1 - grid.re_range.0).max(grid.im_range.1 - grid.im_range.0);
        let msg = format!(
            "Husimi grid holds only {mass:.4} of the distribution; try re in [{:.3}, {:.3}], im in [{:.3}, {:.3}]",
            cx - 2.0 * half,
            cx + 2.0 * half,
            cy - 2.0 * half,
            cy + 2.0 * half
        );
        log::warn!("{msg}");
        out.warning = Some(msg);
    }
    Ok(out)
}

/// Husimi function of a Gaussian state with the given first and second
/// moments: a Gaussian with covariance `Sigma + I/4`.
pub fn husimi_gaussian(stats: &QuadratureStats, grid: &GridSpec) -> Result<HusimiGrid> {
    grid.validate()?;
    let (vx, vp, c) = (stats.var_x + 0.25, stats.var_p + 0.25, stats.cov_xp);
    let det = vx * vp - c * c;
    if !(det > 0.0) {
        return Err(Error::param("stats", "covariance is not positive definite"));
    }
    let re = GridSpec::axis(grid.re_range, grid.resolution.0);
    let im = GridSpec::axis(grid.im_range, grid.resolution.1);
    let norm = 1.0 / (2.0 * PI * det.sqrt());
    let values: Vec<Vec<f64>> = im
        .iter()
        .map(|&y| {
            re.iter()
                .map(|&x| {
                    let (dx, dy) = (x - stats.mean_x, y - stats.mean_p);
                    let q = (vp * dx * dx - 2.0 * c * dx * dy + vx * dy * dy) / det;
                    norm * (-0.5 * q).exp()
                })
                .collect()
        })
        .collect();
    let cell = (re[1] - re[0]) * (im[1] - im[0]);
    let mass = values.iter().flatten().sum::<f64>() * cell;
    let warning = (mass < HUSIMI_MIN_MASS).then(|| format!("Husimi grid holds only {mass:.4} of the distribution"));
    Ok(HusimiGrid {
        re,
        im,
        values,
        mass,
        warning,
    })
}

impl HusimiGrid {
    /// Mean and covariance `(mx, my, vxx, vyy, vxy)` of `Q` on the grid.
    pub fn moments(&self) -> (f64, f64, f64, f64, f64) {
        let mut w = 0.0;
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (j, row) in self.values.iter().enumerate() {
            let y = self.im[j];
            for (i, &q) in row.iter().enumerate() {
                let x = self.re[i];
                w += q;
                sx += q * x;
                sy += q * y;
                sxx += q * x * x;
                syy += q * y * y;
                sxy += q * x * y;
            }
        }
        let (mx, my) = (sx / w, sy / w);
        (mx, my, sxx / w - mx * mx, syy / w - my * my, sxy / w - mx * my)
    }

    /// Major-axis angle of the distribution.
    pub fn tilt(&self) -> f64 {
        let (_, _, vxx, vyy, vxy) = self.moments();
        0.5 * (2.0 * vxy).atan2(vxx - vyy)
    }

    /// `(re, im)` of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (j, row) in self.values.iter().enumerate() {
            for (i, &q) in row.iter().enumerate() {
                if q > best.0 {
                    best = (q, i, j);
                }
            }
        }
        (self.re[best.1], self.im[best.2])
    }
}

/// Least-squares ellipse through a point cloud.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseFit {
    pub center: (f64, f64),
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Angle of the major axis from the X axis, in `(-pi/2, pi/2]`.
    pub tilt: f64,
    /// RMS algebraic residual of the normalized conic.
    pub residual: f64,
}

/// Fits `A x^2 + B xy + C y^2 + D x + E y + F = 0` by the smallest singular
/// vector of the design matrix on centred, rescaled points.
pub fn fit_ellipse(points: &[(f64, f64)]) -> Result<EllipseFit> {
    if points.len() < 6 {
        return Err(Error::param("points", format!("need at least 6 points, got {}", points.len())));
    }
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / n, acc.1 + p.1 / n));
    let scale = (points.iter().map(|p| (p.0 - mx).powi(2) + (p.1 - my).powi(2)).sum::<f64>() / n).sqrt();
    if !(scale > 0.0) {
        return Err(Error::param("points", "degenerate point cloud"));
    }
    let design = DMatrix::from_fn(points.len(), 6, |r, c| {
        let x = (points[r].0 - mx) / scale;
        let y = (points[r].1 - my) / scale;
        [x * x, x * y, y * y, x, y, 1.0][c]
    });
    // smallest eigenvector of D^T D (6 x 6), cheaper than a thin SVD of D
    let scatter = design.transpose() * &design;
    let eig = scatter.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(k);
    let residual = (eig.eigenvalues[k].max(0.0) / n).sqrt();
    let (a, b, c, d, e, f) = (v[0], v[1], v[2], v[3], v[4], v[5]);
    if b * b - 4.0 * a * c >= 0.0 {
        return Err(Error::param("points", "best-fit conic is not an ellipse"));
    }
    let q = Matrix2::new(2.0 * a, b, b, 2.0 * c);
    let centre = q
        .try_inverse()
        .ok_or_else(|| Error::param("points", "singular conic"))?
        * nalgebra::Vector2::new(-d, -e);
    let f0 = f + 0.5 * (d * centre[0] + e * centre[1]);
    let shape = Matrix2::new(a, 0.5 * b, 0.5 * b, c).symmetric_eigen();
    let axes: Vec<f64> = shape.eigenvalues.iter().map(|&l| (-f0 / l).sqrt()).collect();
    if axes.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("points", "best-fit conic is imaginary"));
    }
    let (major, minor) = if axes[0] >= axes[1] { (axes[0], axes[1]) } else { (axes[1], axes[0]) };
    let mut tilt = 0.5 * (-b).atan2(c - a);
    if tilt <= -FRAC_PI_2 {
        tilt += PI;
    } else if tilt > FRAC_PI_2 {
        tilt -= PI;
    }
    Ok(EllipseFit {
        center: (mx + scale * centre[0], my + scale * centre[1]),
        semi_major: scale * major,
        semi_minor: scale * minor,
        tilt,
        residual,
    })
}

/// Fold an axis angle into `(-pi/4, pi/4]` (axes are defined modulo `pi/2`
/// when major and minor are not distinguished).
pub fn fold_axis_angle(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(FRAC_PI_2);
    if p > FRAC_PI_2 / 2.0 {
        p -= FRAC_PI_2;
    }
    p
}
