//! Resonance sets and genus-two Hadamard products over them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, ZsError};
use crate::zeta::Analytic;

/// Points closer than this are the same point.
pub const MERGE_TOLERANCE: f64 = 1e-10;

/// A multiset of complex points kept sorted by (Re, Im).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResonanceSet {
    points: Vec<(Complex64, u32)>,
    /// Radius beyond which the set was not computed, if truncated.
    truncation_radius: Option<f64>,
}

impl ResonanceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_truncation_radius(mut self, r: f64) -> Self {
        self.truncation_radius = Some(r);
        self
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    /// Adds `m` to the multiplicity of `z`, merging with an existing point
    /// within [`MERGE_TOLERANCE`].
    pub fn insert(&mut self, z: Complex64, m: u32) -> Result<()> {
        if m == 0 || !z.re.is_finite() || !z.im.is_finite() {
            return Err(ZsError::InvalidInput(format!("resonance {z} with multiplicity {m}")));
        }
        let lo = self.points.partition_point(|p| p.0.re < z.re - MERGE_TOLERANCE);
        let hi = self.points.partition_point(|p| p.0.re <= z.re + MERGE_TOLERANCE);
        if let Some(p) = self.points[lo..hi].iter_mut().find(|p| (p.0 - z).norm() <= MERGE_TOLERANCE) {
            p.1 += m;
            return Ok(());
        }
        let at = self.points.partition_point(|p| {
            p.0.re < z.re || (p.0.re == z.re && p.0.im < z.im)
        });
        self.points.insert(at, (z, m));
        Ok(())
    }

    pub fn points(&self) -> &[(Complex64, u32)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.points.iter().map(|p| p.1 as u64).sum()
    }

    /// `N(r)`: points with `|z| <= r`, with multiplicity.
    pub fn counting(&self, r: f64) -> u64 {
        self.points.iter().filter(|p| p.0.norm() <= r).map(|p| p.1 as u64).sum()
    }

    /// Drops a point at the origin, returning its multiplicity (0 if absent).
    pub fn remove_origin(&mut self) -> u32 {
        match self.points.iter().position(|p| p.0.norm() <= MERGE_TOLERANCE) {
            Some(i) => self.points.remove(i).1,
            None => 0,
        }
    }
}

/// `{-k + 2 pi i n / l : 0 <= k <= k_max, |n| <= n_max}`, each point with
/// multiplicity `multiplicity`.
pub fn cylinder_resonances_with(length: f64, k_max: u32, n_max: u32, multiplicity: u32) -> Result<ResonanceSet> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(ZsError::InvalidLength(length));
    }
    let mut rs = ResonanceSet::new();
    for k in 0..=k_max {
        for n in -(n_max as i64)..=n_max as i64 {
            rs.insert(Complex64::new(-(k as f64), 2.0 * PI * n as f64 / length), multiplicity)?;
        }
    }
    Ok(rs)
}

/// The cylinder set with the multiplicity of the zeros of its zeta function (2).
pub fn cylinder_resonances(length: f64, k_max: u32, n_max: u32) -> Result<ResonanceSet> {
    cylinder_resonances_with(length, k_max, n_max, 2)
}

/// Least-squares slope of `log N(r)` against `log r` over `radii`.
pub fn counting_exponent(rs: &ResonanceSet, radii: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .filter_map(|&r| {
            let n = rs.counting(r);
            (n > 0 && r > 0.0).then(|| (r.ln(), (n as f64).ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HadamardValue {
    /// `log P(s)`, a sum of principal logarithms of the factors.
    pub value: Complex64,
    /// Bound on the factors beyond the truncation radius.
    pub tail_bound: f64,
}

/// `log E_2(x) = log(1 - x) + x + x^2/2`.
fn log_e2(x: Complex64) -> Complex64 {
    if x.norm() < 0.1 {
        // -sum_{j >= 3} x^j / j
        let mut term = x * x * x;
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 3..40 {
            sum -= term / j as f64;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
            term *= x;
        }
        sum
    } else {
        (1.0 - x).ln() + x + 0.5 * x * x
    }
}

/// `log P(s) = sum m [log(1 - s/z) + s/z + s^2/(2 z^2)]`.
///
/// With a truncation radius `R` the omitted factors are bounded through
/// `N(r) <= A r^2`, `A = max N(r)/r^2` over the set:
/// `A |s|^3 / (R (1 - |s|/R))`.
#[allow(non_snake_case)]
pub fn hadamard_P(rs: &ResonanceSet, s: Complex64) -> Result<HadamardValue> {
    let mut value = Complex64::new(0.0, 0.0);
    for &(z, m) in &rs.points {
        if z.norm() == 0.0 {
            return Err(ZsError::ZeroDivision);
        }
        value += m as f64 * log_e2(s / z);
    }
    let tail_bound = match rs.truncation_radius {
        None => 0.0,
        Some(r) => {
            let mut radii: Vec<(f64, u32)> = rs.points.iter().map(|p| (p.0.norm(), p.1)).collect();
            radii.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut n = 0u64;
            let mut a = 0.0f64;
            for (i, &(rad, m)) in radii.iter().enumerate() {
                n += m as u64;
                let last_at_radius = radii.get(i + 1).map_or(true, |next| next.0 > rad);
                if last_at_radius {
                    a = a.max(n as f64 / (rad * rad));
                }
            }
            let q = s.norm() / r;
            if q < 1.0 {
                a * s.norm().powi(3) / (r * (1.0 - q))
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(HadamardValue { value, tail_bound })
}

/// The product as an analytic function of `s`; the set must not contain 0.
impl Analytic for ResonanceSet {
    fn log_value(&self, s: Complex64) -> Complex64 {
        self.points.iter().map(|&(z, m)| m as f64 * log_e2(s / z)).sum()
    }

    /// `sum m (1/z) (-x^2 / (1 - x))`, `x = s/z`.
    fn log_derivative(&self, s: Complex64) -> Complex64 {
        self.points
            .iter()
            .map(|&(z, m)| {
                let x = s / z;
                m as f64 * (-x * x / (1.0 - x)) / z
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_gives_zero() {
        let rs = cylinder_resonances(1.0, 3, 3).unwrap();
        let mut rs = rs;
        assert_eq!(rs.remove_origin(), 2);
        assert_eq!(hadamard_P(&rs, Complex64::new(0.0, 0.0)).unwrap().value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_factor() {
        let mut rs = ResonanceSet::new();
        rs.insert(Complex64::new(-1.0, 0.0), 1).unwrap();
        let v = hadamard_P(&rs, Complex64::new(1.0, 0.0)).unwrap().value;
        // log(1 + 1) - 1 + 1/2
        assert!((v.re - (2f64.ln() - 0.5)).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn origin_is_rejected() {
        let rs = cylinder_resonances(1.0, 1, 1).unwrap();
        assert!(matches!(hadamard_P(&rs, Complex64::new(0.5, 0.0)), Err(ZsError::ZeroDivision)));
    }

    #[test]
    fn small_cylinder_set() {
        let rs = cylinder_resonances_with(2.0 * PI, 1, 1, 1).unwrap();
        let expected = [(-1.0, -1.0), (-1.0, 0.0), (-1.0, 1.0), (0.0, -1.0), (0.0, 0.0), (0.0, 1.0)];
        assert_eq!(rs.len(), 6);
        for ((z, m), (re, im)) in rs.points().iter().zip(expected) {
            assert!((z - Complex64::new(re, im)).norm() < 1e-15);
            assert_eq!(*m, 1);
        }
    }

    #[test]
    fn insert_merges_close_points() {
        let mut rs = ResonanceSet::new();
        rs.insert(Complex64::new(1.0, 1.0), 1).unwrap();
        rs.insert(Complex64::new(1.0 + 1e-12, 1.0), 2).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs.points()[0].1, 3);
        assert!(rs.insert(Complex64::new(0.0, 0.0), 0).is_err());
    }
}
