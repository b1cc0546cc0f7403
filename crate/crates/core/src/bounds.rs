//! The systole bound `eps_R`, the collar inequality for pants and sweeps of
//! `-log Z(1)` along the family of equilateral pants.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ZsError};
use crate::spectrum::{enumerate, systole};
use crate::surface::{build_pants, PantsSpec, SurfaceKind, SurfaceModel};
use crate::zeta::{log_zeta, log_zeta_cylinder, ZetaOptions};

/// Relative slack in `holds`.
pub const BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub quantity: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Set when an input came from a heuristic evaluation.
    pub heuristic: bool,
    pub context: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(quantity: &str, lhs: f64, rhs: f64, context: BTreeMap<String, f64>) -> Self {
        let holds = lhs <= rhs + BOUND_TOLERANCE * rhs.abs().max(lhs.abs());
        BoundReport { quantity: quantity.into(), lhs, rhs, holds, heuristic: false, context }
    }
}

/// `eps_R = -(1/2) log(1 - e^{-R})`.
pub fn epsilon_r(r: f64) -> Result<f64> {
    if !(r > 0.0) || r.is_nan() {
        return Err(ZsError::InvalidR(r));
    }
    Ok(-0.5 * (-(-r).exp_m1()).ln())
}

/// `-log Z(1)` for a surface, with the cylinder in closed form and other
/// surfaces through their spectrum up to `l_max`. Returns the value, its
/// truncation bound, whether it is heuristic, and the systole.
pub fn neg_log_z1(surface: &SurfaceModel, l_max: f64) -> Result<(f64, f64, bool, f64)> {
    let one = Complex64::new(1.0, 0.0);
    if let SurfaceKind::Cylinder { length } = *surface.kind() {
        let z = log_zeta_cylinder(length, one, None)?;
        return Ok((-z.value.re, z.truncation_error_bound, z.heuristic, length));
    }
    let ls = enumerate(surface, l_max)?;
    let opts = ZetaOptions { extended: true, ..Default::default() };
    let z = log_zeta(&ls, one, &opts)?;
    Ok((-z.value.re, z.truncation_error_bound, z.heuristic, systole(&ls)?))
}

/// `eps_R <= systole` with `R = -log Z(1)`.
pub fn systole_bound_check(surface: &SurfaceModel, l_max: f64) -> Result<BoundReport> {
    let (r, err, heuristic, sys) = neg_log_z1(surface, l_max)?;
    let eps = epsilon_r(r)?;
    let mut context = BTreeMap::new();
    context.insert("R".into(), r);
    context.insert("R_truncation_bound".into(), err);
    context.insert("chi".into(), surface.chi() as f64);
    for (i, l) in surface.boundary_lengths().iter().enumerate() {
        context.insert(format!("boundary_{}", i + 1), *l);
    }
    Ok(BoundReport { heuristic, ..BoundReport::new("systole", eps, sys, context) })
}

/// `cosh^2(t) l^2 <= l^2 + Area^2`, `l = l(dS)`, `Area = 2 pi`, valid while
/// the collar of width `t` has area `sinh(t) l <= Area`.
pub fn bers_curve_bound_check(pants: PantsSpec, t: f64) -> Result<BoundReport> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ZsError::InvalidInput(format!("collar width t = {t}")));
    }
    let l = pants.total_boundary();
    let area = 2.0 * PI;
    let collar_area = t.sinh() * l;
    if collar_area > area {
        return Err(ZsError::RangeExceeded { t, collar_area, area });
    }
    let mut context = BTreeMap::new();
    context.insert("t".into(), t);
    context.insert("boundary_length".into(), l);
    context.insert("area".into(), area);
    context.insert("margin".into(), area * area - collar_area * collar_area);
    let c = t.cosh();
    Ok(BoundReport::new("bers_curve", c * c * l * l, l * l + area * area, context))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub length: f64,
    pub systole: f64,
    pub neg_log_z1: f64,
    pub truncation_error_bound: f64,
    pub heuristic: bool,
}

/// `-log Z(1)` and the systole of the pants `(l, l, l)` for each `l` in
/// `grid`, with spectra enumerated up to `cutoff_factor * l`.
pub fn properness_sweep(grid: &[f64], cutoff_factor: f64) -> Result<Vec<SweepRow>> {
    grid.par_iter()
        .map(|&l| {
            let surface = build_pants(PantsSpec::uniform(l)?)?;
            let (r, err, heuristic, sys) = neg_log_z1(&surface, cutoff_factor * l)?;
            Ok(SweepRow { length: l, systole: sys, neg_log_z1: r, truncation_error_bound: err, heuristic })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_r_values() {
        assert!((epsilon_r(2f64.ln()).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        let expect = -0.5 * (1.0 - (-1f64).exp()).ln();
        assert!((epsilon_r(1.0).unwrap() - expect).abs() < 1e-15);
        assert!((epsilon_r(1.0).unwrap() - 0.229_337_572_693_541).abs() < 1e-14);
        assert!(epsilon_r(1e-300).unwrap() > 300.0);
        assert!(matches!(epsilon_r(0.0), Err(ZsError::InvalidR(_))));
        assert!(matches!(epsilon_r(-1.0), Err(ZsError::InvalidR(_))));
    }

    #[test]
    fn bers_at_zero_width() {
        let p = PantsSpec::uniform(1.0).unwrap();
        let r = bers_curve_bound_check(p, 0.0).unwrap();
        assert_eq!(r.lhs, 9.0);
        assert_eq!(r.rhs, 9.0 + 4.0 * PI * PI);
        assert!(r.holds);
    }

    #[test]
    fn bers_range() {
        let p = PantsSpec::uniform(4.0).unwrap();
        let edge = (2.0 * PI / 12.0).asinh();
        assert!(bers_curve_bound_check(p, edge * 0.999).unwrap().holds);
        assert!(matches!(bers_curve_bound_check(p, edge * 1.001), Err(ZsError::RangeExceeded { .. })));
    }
}
