//! Hadamard finite parts of funnel integrals in the defining function
//! `rho = e^{-t}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Result, ZsError};
use crate::surface::SurfaceModel;

#[derive(Debug, Clone, Copy)]
pub struct FinitePartOptions {
    /// Ladder `eps_i = 2^{-i}` for `i` in this inclusive range.
    pub ladder: (u32, u32),
    /// Trapezoid nodes in `theta`.
    pub n_theta: usize,
    /// Largest fit residual, relative to the largest truncated integral.
    pub tolerance: f64,
}

impl Default for FinitePartOptions {
    fn default() -> Self {
        FinitePartOptions { ladder: (10, 26), n_theta: 64, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinitePart {
    /// The constant term `c_0`.
    pub value: f64,
    /// `[c_{-1}, c_log, c_0, c_1, c_2]` of
    /// `c_{-1}/eps + c_log log eps + c_0 + c_1 eps + c_2 eps^2`.
    pub coefficients: [f64; 5],
    /// Largest fit residual relative to the largest truncated integral.
    pub residual: f64,
}

/// Finite part of `int_{rho >= eps} f dtau` over the funnel `t >= 0` of
/// boundary length `length`, `dtau = (l/2pi) cosh t dt dtheta`.
///
/// The truncated integrals are computed at each rung of the ladder (double
/// exponential quadrature in `t`, trapezoid in `theta`) and fitted by least
/// squares to `c_{-1}/eps + c_log log eps + c_0 + c_1 eps + c_2 eps^2`.
pub fn finite_part_integral<F>(f: F, length: f64, opts: &FinitePartOptions) -> Result<FinitePart>
where
    F: Fn(f64, f64) -> f64,
{
    if !(length > 0.0 && length.is_finite()) {
        return Err(ZsError::InvalidLength(length));
    }
    let (lo, hi) = opts.ladder;
    if hi < lo + 4 || opts.n_theta == 0 {
        return Err(ZsError::InvalidInput(format!("ladder {lo}..={hi} needs at least five rungs")));
    }
    let n_theta = opts.n_theta;
    let radial = |t: f64| {
        let mean = (0..n_theta).map(|j| f(t, 2.0 * PI * j as f64 / n_theta as f64)).sum::<f64>() / n_theta as f64;
        length * t.cosh() * mean
    };

    let mut eps = Vec::new();
    let mut integrals = Vec::new();
    let mut acc = 0.0;
    let mut t_prev = 0.0;
    for i in lo..=hi {
        let t = i as f64 * std::f64::consts::LN_2;
        // unit-length pieces keep the double exponential rule well resolved
        let pieces = (t - t_prev).ceil().max(1.0) as usize;
        let h = (t - t_prev) / pieces as f64;
        for p in 0..pieces {
            let (a, b) = (t_prev + p as f64 * h, t_prev + (p + 1) as f64 * h);
            let target = 1e-15 * length * b.cosh();
            let out = quadrature::double_exponential::integrate(radial, a, b, target);
            if !out.integral.is_finite() {
                return Err(ZsError::QuadratureFailure(format!("non-finite integral on [{a}, {b}]")));
            }
            acc += out.integral;
        }
        t_prev = t;
        eps.push((-t).exp());
        integrals.push(acc);
    }

    let rows = eps.len();
    // Columns scaled by their largest entry for conditioning.
    let basis = |e: f64| [1.0 / e, e.ln(), 1.0, e, e * e];
    let scale: Vec<f64> = (0..5)
        .map(|k| eps.iter().map(|&e| basis(e)[k].abs()).fold(0.0, f64::max))
        .collect();
    let a = DMatrix::from_fn(rows, 5, |r, k| basis(eps[r])[k] / scale[k]);
    let b = DVector::from_column_slice(&integrals);
    let x = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-15)
        .map_err(|e| ZsError::QuadratureFailure(format!("finite-part fit: {e}")))?;
    let fitted = &a * &x;
    let size = integrals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let residual = (fitted - &b).amax() / size;
    if !(residual <= opts.tolerance) {
        return Err(ZsError::ExpansionMismatch { residual, tolerance: opts.tolerance });
    }
    let c: Vec<f64> = x.iter().zip(&scale).map(|(v, s)| v / s).collect();
    Ok(FinitePart { value: c[2], coefficients: [c[0], c[1], c[2], c[3], c[4]], residual })
}

/// 0-volume of a funnel of boundary length `length` (zero in this convention).
pub fn funnel_zero_volume(length: f64, opts: &FinitePartOptions) -> Result<FinitePart> {
    finite_part_integral(|_, _| 1.0, length, opts)
}

/// 0-volume of a surface: core area `-2 pi chi` plus the finite parts of
/// its funnels.
pub fn zero_volume(surface: &SurfaceModel, opts: &FinitePartOptions) -> Result<f64> {
    let mut total = surface.core_area();
    for &l in surface.boundary_lengths() {
        total += funnel_zero_volume(l, opts)?.value;
    }
    Ok(total)
}
