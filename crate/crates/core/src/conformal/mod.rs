//! Conformal factors on funnel charts: curvature, relative heat invariants,
//! the Polyakov integral, a Jensen-type bound and Hadamard finite parts.
//!
//! A chart covers `(t, theta) in [t_min, t_max] x [0, 2 pi)` with metric
//! `dt^2 + L(t)^2 dtheta^2`, `L(t) = (l / 2pi) cosh t`, so the circle at
//! height `t` has length `l cosh t`. Integrals use the trapezoid rule in both
//! directions (spectrally accurate for smooth, compactly supported
//! integrands) and the Laplacian is in conservative form, so that its
//! integral telescopes to zero.

mod finite_part;

pub use finite_part::*;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelChart {
    pub length: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub n_theta: usize,
}

impl FunnelChart {
    pub const MIN_NODES: usize = 16;

    pub fn new(length: f64, t_min: f64, t_max: f64, n_t: usize, n_theta: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(ZsError::InvalidLength(length));
        }
        if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
            return Err(ZsError::InvalidInput(format!("chart range [{t_min}, {t_max}]")));
        }
        if n_t < Self::MIN_NODES || n_theta < Self::MIN_NODES {
            return Err(ZsError::InvalidInput(format!(
                "grid {n_t} x {n_theta} is below {0} x {0}",
                Self::MIN_NODES
            )));
        }
        Ok(FunnelChart { length, t_min, t_max, n_t, n_theta })
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_t - 1) as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.dt()
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    /// `L(t) = (l / 2pi) cosh t`.
    pub fn scale(&self, t: f64) -> f64 {
        self.length * t.cosh() / (2.0 * PI)
    }

    /// Area weight of every node in row `i`.
    pub fn cell_weight(&self, i: usize) -> f64 {
        let end = if i == 0 || i + 1 == self.n_t { 0.5 } else { 1.0 };
        end * self.scale(self.t(i)) * self.dt() * self.dtheta()
    }

    /// `l (sinh t1 - sinh t0)`.
    pub fn band_area(&self, t0: f64, t1: f64) -> f64 {
        self.length * (t1.sinh() - t0.sinh())
    }

    pub fn area(&self) -> f64 {
        self.band_area(self.t_min, self.t_max)
    }

    /// Every second node in both directions.
    fn coarsened(&self) -> Option<FunnelChart> {
        ((self.n_t - 1) % 2 == 0 && self.n_theta % 2 == 0).then(|| FunnelChart {
            n_t: (self.n_t - 1) / 2 + 1,
            n_theta: self.n_theta / 2,
            ..self.clone()
        })
    }

    /// Trapezoid integral of row-major grid values; rows are summed in
    /// parallel and combined in index order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let rows: Vec<f64> = values
            .par_chunks(self.n_theta)
            .enumerate()
            .map(|(i, row)| self.cell_weight(i) * row.iter().sum::<f64>())
            .collect();
        rows.iter().sum()
    }

    fn integrate_abs(&self, values: &[f64]) -> f64 {
        let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        self.integrate(&abs)
    }
}

/// `A g(t) chi(t) (1 + beta cos(m theta + theta0))` with `g` a Gaussian of
/// width `width` and `chi(t) = exp(1 - 1/(1 - x^2))`, `x = (t - center)/radius`,
/// a smooth cutoff supported in `|x| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub radius: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub mode: u32,
    #[serde(default)]
    pub phase: f64,
}

impl Bump {
    pub fn radial(amplitude: f64, center: f64, width: f64, radius: f64) -> Self {
        Bump { amplitude, center, width, radius, beta: 0.0, mode: 0, phase: 0.0 }
    }

    pub fn eval(&self, t: f64, theta: f64) -> f64 {
        let x = (t - self.center) / self.radius;
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let d = t - self.center;
        let cutoff = (1.0 - 1.0 / (1.0 - x * x)).exp();
        let gauss = (-d * d / (2.0 * self.width * self.width)).exp();
        let angular = 1.0 + self.beta * (self.mode as f64 * theta + self.phase).cos();
        self.amplitude * gauss * cutoff * angular
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Samples of a compactly supported `phi` on a chart, row-major (`t` rows,
/// `theta` columns).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalFactor {
    chart: FunnelChart,
    values: Vec<f64>,
    support: (f64, f64),
}

impl ConformalFactor {
    /// Validates the samples. With `support = Some((a, b))` every sample
    /// outside `[a, b]` must be exactly zero; otherwise the support is the
    /// band of nonzero rows. `phi` must vanish within two rows of either edge.
    pub fn from_values(chart: FunnelChart, values: Vec<f64>, support: Option<(f64, f64)>) -> Result<Self> {
        if values.len() != chart.n_t * chart.n_theta {
            return Err(ZsError::InvalidInput(format!(
                "{} samples for a {} x {} grid",
                values.len(),
                chart.n_t,
                chart.n_theta
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ZsError::InvalidInput(format!("non-finite sample {v}")));
        }
        let nonzero_rows: Vec<usize> = (0..chart.n_t)
            .filter(|&i| values[i * chart.n_theta..(i + 1) * chart.n_theta].iter().any(|&v| v != 0.0))
            .collect();
        if let Some(&i) = nonzero_rows.iter().find(|&&i| i < 2 || i + 2 >= chart.n_t) {
            return Err(ZsError::SupportTouchesBoundary(chart.t(i)));
        }
        let band = match (nonzero_rows.first(), nonzero_rows.last()) {
            (Some(&a), Some(&b)) => (chart.t(a), chart.t(b)),
            _ => (chart.t_min, chart.t_min),
        };
        let support = match support {
            None => band,
            Some((a, b)) => {
                if !(a <= b) {
                    return Err(ZsError::InvalidInput(format!("support [{a}, {b}]")));
                }
                if let Some(&i) = nonzero_rows.iter().find(|&&i| chart.t(i) < a || chart.t(i) > b) {
                    return Err(ZsError::InvalidInput(format!(
                        "phi is nonzero at t = {} outside the declared support [{a}, {b}]",
                        chart.t(i)
                    )));
                }
                (a, b)
            }
        };
        Ok(ConformalFactor { chart, values, support })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64 + Sync>(chart: FunnelChart, f: F) -> Result<Self> {
        let values: Vec<f64> = (0..chart.n_t * chart.n_theta)
            .into_par_iter()
            .map(|k| f(chart.t(k / chart.n_theta), chart.theta(k % chart.n_theta)))
            .collect();
        Self::from_values(chart, values, None)
    }

    pub fn from_bump(chart: FunnelChart, bump: &Bump) -> Result<Self> {
        let values: Vec<f64> = (0..chart.n_t * chart.n_theta)
            .map(|k| bump.eval(chart.t(k / chart.n_theta), chart.theta(k % chart.n_theta)))
            .collect();
        Self::from_values(chart, values, Some(bump.support()))
    }

    pub fn zero(chart: FunnelChart) -> Self {
        let n = chart.n_t * chart.n_theta;
        ConformalFactor { support: (chart.t_min, chart.t_min), chart, values: vec![0.0; n] }
    }

    pub fn chart(&self) -> &FunnelChart {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.chart.n_theta + j]
    }

    pub fn scaled(&self, eps: f64) -> Self {
        ConformalFactor { values: self.values.iter().map(|v| eps * v).collect(), ..self.clone() }
    }

    /// Rotation `theta -> theta + shift * dtheta`, an isometry of the chart.
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.chart.n_theta;
        let mut values = vec![0.0; self.values.len()];
        for i in 0..self.chart.n_t {
            for j in 0..n {
                values[i * n + (j + shift) % n] = self.values[i * n + j];
            }
        }
        ConformalFactor { values, ..self.clone() }
    }

    /// Largest second difference in `t` or `theta`, scaled by the squared
    /// step: a discrete `C^2` seminorm.
    pub fn max_second_difference(&self) -> f64 {
        let (nt, nth) = (self.chart.n_t, self.chart.n_theta);
        let (h, k) = (self.chart.dt(), self.chart.dtheta());
        let mut worst = 0.0f64;
        for i in 1..nt - 1 {
            for j in 0..nth {
                let c = self.at(i, j);
                let dtt = (self.at(i + 1, j) - 2.0 * c + self.at(i - 1, j)) / (h * h);
                let dqq = (self.at(i, (j + 1) % nth) - 2.0 * c + self.at(i, (j + nth - 1) % nth)) / (k * k);
                worst = worst.max(dtt.abs()).max(dqq.abs());
            }
        }
        worst
    }

    pub fn check_smoothness(&self, bound: f64) -> Result<()> {
        let d = self.max_second_difference();
        if d > bound {
            return Err(ZsError::InvalidInput(format!("second differences reach {d} > {bound}")));
        }
        Ok(())
    }

    fn coarsened(&self) -> Option<ConformalFactor> {
        let chart = self.chart.coarsened()?;
        let values = (0..chart.n_t)
            .flat_map(|i| (0..chart.n_theta).map(move |j| (2 * i, 2 * j)))
            .map(|(i, j)| self.at(i, j))
            .collect();
        Some(ConformalFactor { chart, values, support: self.support })
    }
}

/// Positive Laplacian of row-major grid values on `chart`:
/// `-(1/L) d_t(L d_t u) - u_thetatheta / L^2`, conservative second-order
/// differences, zero on the first and last rows.
fn laplacian_grid(chart: &FunnelChart, u: &[f64]) -> Vec<f64> {
    let (nt, nth) = (chart.n_t, chart.n_theta);
    let (h, k) = (chart.dt(), chart.dtheta());
    let mut out = vec![0.0; u.len()];
    out.par_chunks_mut(nth).enumerate().for_each(|(i, row)| {
        if i == 0 || i + 1 == nt {
            return;
        }
        let t = chart.t(i);
        let l = chart.scale(t);
        let up = chart.scale(t + 0.5 * h);
        let down = chart.scale(t - 0.5 * h);
        for (j, out) in row.iter_mut().enumerate() {
            let c = u[i * nth + j];
            let radial = (up * (u[(i + 1) * nth + j] - c) - down * (c - u[(i - 1) * nth + j])) / (l * h * h);
            let angular =
                (u[i * nth + (j + 1) % nth] - 2.0 * c + u[i * nth + (j + nth - 1) % nth]) / (l * l * k * k);
            *out = -radial - angular;
        }
    });
    out
}

/// `Delta_tau phi` on the grid.
pub fn laplacian_tau(cf: &ConformalFactor) -> Vec<f64> {
    laplacian_grid(&cf.chart, &cf.values)
}

/// `K_g = e^{-2 phi} (Delta_tau phi - 1)`.
pub fn curvature_g(cf: &ConformalFactor) -> Vec<f64> {
    laplacian_tau(cf)
        .iter()
        .zip(&cf.values)
        .map(|(lap, phi)| (-2.0 * phi).exp() * (lap - 1.0))
        .collect()
}

/// Central-difference `(d_t phi, d_theta phi)`; zero on the first and last rows.
pub fn gradient_tau(cf: &ConformalFactor) -> (Vec<f64>, Vec<f64>) {
    let (nt, nth) = (cf.chart.n_t, cf.chart.n_theta);
    let (h, k) = (cf.chart.dt(), cf.chart.dtheta());
    let mut dt = vec![0.0; cf.values.len()];
    let mut dq = vec![0.0; cf.values.len()];
    for i in 0..nt {
        for j in 0..nth {
            if i > 0 && i + 1 < nt {
                dt[i * nth + j] = (cf.at(i + 1, j) - cf.at(i - 1, j)) / (2.0 * h);
            }
            dq[i * nth + j] = (cf.at(i, (j + 1) % nth) - cf.at(i, (j + nth - 1) % nth)) / (2.0 * k);
        }
    }
    (dt, dq)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatInvariants {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    /// Per-invariant estimates: grid-halving difference plus a rounding floor.
    pub errors: [f64; 3],
    pub quadrature_error_estimate: f64,
}

/// Integrands of `a0, a1, a2` (without the `1/(4 pi)`, ... prefactors).
fn heat_integrands(cf: &ConformalFactor) -> [Vec<f64>; 3] {
    let k = curvature_g(cf);
    let mut i0 = Vec::with_capacity(k.len());
    let mut i1 = Vec::with_capacity(k.len());
    let mut i2 = Vec::with_capacity(k.len());
    for (phi, kg) in cf.values.iter().zip(&k) {
        let e2 = (2.0 * phi).exp();
        i0.push((2.0 * phi).exp_m1());
        i1.push(e2 * kg + 1.0);
        i2.push(e2 * kg * kg - 1.0);
    }
    [i0, i1, i2]
}

const HEAT_PREFACTORS: [f64; 3] = [1.0 / (4.0 * PI), 1.0 / (12.0 * PI), 1.0 / (60.0 * PI)];

fn rounding_floor(chart: &FunnelChart, integrand: &[f64]) -> f64 {
    let n = (chart.n_t * chart.n_theta) as f64;
    8.0 * n.sqrt() * f64::EPSILON * chart.integrate_abs(integrand)
}

/// `a0 = (1/4pi) int (e^{2phi} - 1)`, `a1 = (1/12pi) int (e^{2phi} K_g + 1)`,
/// `a2 = (1/60pi) int (e^{2phi} K_g^2 - 1)`.
pub fn heat_invariants(cf: &ConformalFactor) -> Result<HeatInvariants> {
    let coarse = cf
        .coarsened()
        .ok_or_else(|| ZsError::QuadratureFailure("grid cannot be halved (need n_t odd, n_theta even)".into()))?;
    let fine = heat_integrands(cf);
    let rough = heat_integrands(&coarse);
    let mut vals = [0.0; 3];
    let mut errors = [0.0; 3];
    for j in 0..3 {
        if fine[j].iter().any(|v| !v.is_finite()) {
            return Err(ZsError::QuadratureFailure(format!("non-finite integrand for a{j}")));
        }
        let a = cf.chart.integrate(&fine[j]);
        let b = coarse.chart.integrate(&rough[j]);
        vals[j] = HEAT_PREFACTORS[j] * a;
        errors[j] = HEAT_PREFACTORS[j] * ((a - b).abs() + rounding_floor(&cf.chart, &fine[j]));
    }
    Ok(HeatInvariants {
        a0: vals[0],
        a1: vals[1],
        a2: vals[2],
        errors,
        quadrature_error_estimate: errors.iter().cloned().fold(0.0, f64::max),
    })
}

/// Leading term `c_j int e^{2phi} K_g Delta_g^{j-2} K_g` of `a_j`, `j >= 3`,
/// with `Delta_g = e^{-2phi} Delta_tau`; `c_j` is supplied by the caller.
pub fn heat_invariant_leading_term(cf: &ConformalFactor, j: u32, c_j: f64) -> Result<f64> {
    if j < 3 {
        return Err(ZsError::InvalidInput(format!("leading-term form needs j >= 3, got {j}")));
    }
    let k = curvature_g(cf);
    let mut u = k.clone();
    for _ in 0..j - 2 {
        u = laplacian_grid(&cf.chart, &u)
            .iter()
            .zip(&cf.values)
            .map(|(l, phi)| (-2.0 * phi).exp() * l)
            .collect();
    }
    let integrand: Vec<f64> = cf
        .values
        .iter()
        .zip(k.iter().zip(&u))
        .map(|(phi, (kg, du))| (2.0 * phi).exp() * kg * du)
        .collect();
    Ok(c_j * cf.chart.integrate(&integrand))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolyakovValue {
    /// `log D(1)` relative to the hyperbolic metric.
    pub value: f64,
    /// `int |grad phi|^2`.
    pub dirichlet: f64,
    /// `int phi`.
    pub mean: f64,
    pub error_estimate: f64,
}

fn polyakov_parts(cf: &ConformalFactor) -> (f64, f64) {
    let (dt, dq) = gradient_tau(cf);
    let nth = cf.chart.n_theta;
    let grad2: Vec<f64> = (0..dt.len())
        .map(|k| {
            let l = cf.chart.scale(cf.chart.t(k / nth));
            dt[k] * dt[k] + dq[k] * dq[k] / (l * l)
        })
        .collect();
    (cf.chart.integrate(&grad2), cf.chart.integrate(&cf.values))
}

/// `log D(1) = -(1/6pi) [ (1/2) int |grad phi|^2 - int phi ]`.
#[allow(non_snake_case)]
pub fn polyakov_logD1(cf: &ConformalFactor) -> Result<PolyakovValue> {
    let (dirichlet, mean) = polyakov_parts(cf);
    if !(dirichlet.is_finite() && mean.is_finite()) {
        return Err(ZsError::QuadratureFailure("non-finite Polyakov integrand".into()));
    }
    let value = (mean - 0.5 * dirichlet) / (6.0 * PI);
    let error_estimate = match cf.coarsened() {
        Some(c) => {
            let (d2, m2) = polyakov_parts(&c);
            ((0.5 * d2 - m2) / (6.0 * PI) + value).abs()
        }
        None => f64::NAN,
    };
    Ok(PolyakovValue { value, dirichlet, mean, error_estimate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenReport {
    /// `(1/A) int phi`.
    pub lhs: f64,
    /// `(1/2) log(1 + 4 pi a0 / A)`.
    pub rhs: f64,
    pub holds: bool,
    /// The normalizing area `A`.
    pub area: f64,
}

/// Jensen's inequality for the probability measure `dtau / A` on a region of
/// area `A >= area(supp phi)` containing the support:
/// `(1/A) int phi <= (1/2) log(1 + 4 pi a0 / A)`.
/// `A = max(2 pi |chi|, area of the support band)`.
pub fn jensen_bound_check(cf: &ConformalFactor, chi: i64) -> Result<JensenReport> {
    let (a, b) = cf.support;
    let area = (2.0 * PI * chi.unsigned_abs() as f64).max(cf.chart.band_area(a, b));
    if !(area > 0.0) {
        return Ok(JensenReport { lhs: 0.0, rhs: 0.0, holds: true, area: 0.0 });
    }
    let a0 = heat_invariants(cf)?.a0;
    let lhs = cf.chart.integrate(&cf.values) / area;
    let rhs = 0.5 * (4.0 * PI * a0 / area).ln_1p();
    let slack = 1e-12 * (lhs.abs() + rhs.abs());
    Ok(JensenReport { lhs, rhs, holds: lhs <= rhs + slack, area })
}
