//! Selberg zeta function from a length spectrum, the determinant
//! `D(s) = e^{F s(s-1) + G} Z(s) Z_inf(s)`, Hadamard products over resonance
//! sets, zero finding, and recovery of lengths from zeta samples.

mod hadamard;
mod huber;
mod zeros;

pub use hadamard::*;
pub use huber::*;
pub use zeros::*;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZsError};
use crate::precision::{reduce_c, Precision};
use crate::special::{expm1_c, log_one_minus_exp_neg, log_z_infinity, sarnak_constant_e};
use crate::spectrum::{growth_constant, GeodesicClass, LengthSpectrum};

/// How each unoriented class is weighted in the Euler product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Each class counts with its oriented multiplicity (2 for a geodesic
    /// not freely homotopic to its inverse).
    #[default]
    Oriented,
    Unoriented,
}

impl Convention {
    fn weight(self, c: &GeodesicClass) -> f64 {
        match self {
            Convention::Oriented => c.oriented_multiplicity as f64,
            Convention::Unoriented => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZetaOptions {
    /// Number of `k` factors beyond `k = 0`; chosen from the precision when `None`.
    pub k_max: Option<u32>,
    pub convention: Convention,
    /// Allow `Re s <= 1` when the empirical counting exponent is below `Re s`.
    pub extended: bool,
    pub precision: Precision,
}

impl Default for ZetaOptions {
    fn default() -> Self {
        ZetaOptions {
            k_max: None,
            convention: Convention::Oriented,
            extended: false,
            precision: Precision::DOUBLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaEvaluation {
    /// `log Z(s)`, a sum of principal logarithms of the factors.
    pub value: Complex64,
    pub truncation_error_bound: f64,
    pub length_cutoff: f64,
    pub k_max: u32,
    pub convention: Convention,
    /// Abscissa the evaluation was checked against.
    pub abscissa: f64,
    /// Set when `Re s <= 1` was accepted on the empirical exponent alone.
    pub heuristic: bool,
}

/// Smallest `k` with `e^{-(sigma + k) l0} n / (1 - e^{-l0}) < target * min(1, e^{-sigma l0})`.
///
/// The right side is relative to the leading factor so that large-`s`
/// samples keep full relative accuracy.
fn default_k_max(sigma: f64, l0: f64, n: f64, target: f64) -> u32 {
    if n == 0.0 {
        return 0;
    }
    let rhs = target * (-sigma * l0).exp().min(1.0);
    let lead = n / (1.0 - (-l0).exp());
    let mut k = 0u32;
    while (-(sigma + k as f64) * l0).exp() * lead >= rhs && k < 1_000_000 {
        k += 1;
    }
    k
}

/// `sum_{k=0}^{k_max} log(1 - e^{-(s+k) l})`, stopping once the factors are exactly 1.
fn class_factor_sum(s: Complex64, length: f64, k_max: u32) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=k_max {
        let w = (s + k as f64) * length;
        if w.re > 745.0 {
            break;
        }
        acc += log_one_minus_exp_neg(w);
    }
    acc
}

/// `log Z(s)` from the Euler product over the enumerated classes.
pub fn log_zeta(ls: &LengthSpectrum, s: Complex64, opts: &ZetaOptions) -> Result<ZetaEvaluation> {
    if !ls.complete {
        return Err(ZsError::IncompleteSpectrum);
    }
    let sigma = s.re;
    if !(sigma > 0.0) || !s.im.is_finite() {
        return Err(ZsError::ConvergenceRegionError { re: sigma, abscissa: 0.0 });
    }
    let (abscissa, heuristic) = if sigma > 1.0 {
        (1.0, false)
    } else if opts.extended {
        match ls.empirical_exponent() {
            Some(d) if d < sigma => (d, true),
            Some(d) => return Err(ZsError::ConvergenceRegionError { re: sigma, abscissa: d }),
            None => return Err(ZsError::ConvergenceRegionError { re: sigma, abscissa: 1.0 }),
        }
    } else {
        return Err(ZsError::ConvergenceRegionError { re: sigma, abscissa: 1.0 });
    };

    let conv = opts.convention;
    let l0 = ls.shortest().unwrap_or(ls.cutoff);
    let total: f64 = ls.classes.iter().map(|c| conv.weight(c)).sum();
    let k_max = opts
        .k_max
        .unwrap_or_else(|| default_k_max(sigma, l0, total, opts.precision.target()));

    let terms: Vec<Complex64> = ls
        .classes
        .par_iter()
        .map(|c| conv.weight(c) * class_factor_sum(s, c.length, k_max))
        .collect();
    let value = reduce_c(&terms, opts.precision);

    // k-tail: |log(1 - y)| <= |y| / (1 - |y|), geometric in k.
    let k_tail: f64 = ls
        .classes
        .iter()
        .map(|c| {
            let x = (-(sigma + k_max as f64 + 1.0) * c.length).exp();
            conv.weight(c) * x / (1.0 - x) / (1.0 - (-c.length).exp())
        })
        .sum();

    // Length tail from N(t) <= C e^{delta t}: sum_{l > L} e^{-sigma l} <= sigma C e^{(delta - sigma) L} / (sigma - delta).
    let big_l = ls.cutoff;
    let delta = if heuristic { abscissa } else { 1.0 };
    let c_growth = growth_constant(ls, delta, big_l).max(2.0 * (-delta * big_l).exp());
    let x_l = (-sigma * big_l).exp();
    let length_tail = sigma * c_growth * ((delta - sigma) * big_l).exp() / (sigma - delta)
        / ((1.0 - x_l) * (1.0 - (-big_l).exp()));

    let rounding = 4.0 * f64::EPSILON * terms.iter().map(|t| t.norm()).sum::<f64>();

    Ok(ZetaEvaluation {
        value,
        truncation_error_bound: k_tail + length_tail + rounding,
        length_cutoff: big_l,
        k_max,
        convention: conv,
        abscissa,
        heuristic,
    })
}

/// Detects `(s + k) l = 2 pi i n` for some `0 <= k <= k_max`.
fn cylinder_zero(length: f64, s: Complex64, k_max: u32) -> Option<(u32, i64)> {
    (0..=k_max).find_map(|k| {
        let w = (s + k as f64) * length;
        let n = (w.im / (2.0 * PI)).round();
        let gap = (w - Complex64::new(0.0, 2.0 * PI * n)).norm();
        (gap <= 4.0 * f64::EPSILON * (1.0 + w.norm())).then_some((k, n as i64))
    })
}

/// `log Z(s)` for the hyperbolic cylinder of core length `length`:
/// `2 sum_k log(1 - e^{-(s+k) l})`, valid for every complex `s`.
pub fn log_zeta_cylinder(length: f64, s: Complex64, k_max: Option<u32>) -> Result<ZetaEvaluation> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(ZsError::InvalidLength(length));
    }
    let sigma = s.re;
    let k_first = if sigma >= 0.0 { 0 } else { (-sigma).ceil() as u32 + 1 };
    let k_max = k_max.unwrap_or_else(|| {
        k_first + default_k_max(sigma.max(0.0), length, 2.0, Precision::DOUBLE.target())
    });
    if let Some((k, n)) = cylinder_zero(length, s, k_max) {
        return Err(ZsError::ZeroOfZeta { s, k, n });
    }
    let terms: Vec<Complex64> = (0..=k_max)
        .map(|k| 2.0 * log_one_minus_exp_neg((s + k as f64) * length))
        .collect();
    let value = terms.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    let x = (-(sigma + k_max as f64 + 1.0) * length).exp();
    let k_tail = if x < 1.0 {
        2.0 * x / (1.0 - x) / (1.0 - (-length).exp())
    } else {
        f64::INFINITY
    };
    let rounding = 4.0 * f64::EPSILON * terms.iter().map(|t| t.norm()).sum::<f64>();
    Ok(ZetaEvaluation {
        value,
        truncation_error_bound: k_tail + rounding,
        length_cutoff: length,
        k_max,
        convention: Convention::Oriented,
        abscissa: f64::NEG_INFINITY,
        heuristic: false,
    })
}

/// The cylinder zeta function as an analytic function for zero finding.
#[derive(Debug, Clone, Copy)]
pub struct CylinderZeta {
    pub length: f64,
    pub k_max: u32,
}

impl CylinderZeta {
    /// Enough factors for `Re s >= re_min` to keep the omitted ones below 1e-17.
    pub fn new(length: f64, re_min: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(ZsError::InvalidLength(length));
        }
        let k_max = (-re_min).max(0.0).ceil() as u32 + (40.0 / length).ceil() as u32;
        Ok(CylinderZeta { length, k_max })
    }
}

impl Analytic for CylinderZeta {
    fn log_value(&self, z: Complex64) -> Complex64 {
        (0..=self.k_max)
            .map(|k| 2.0 * log_one_minus_exp_neg((z + k as f64) * self.length))
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }

    /// `2 l sum_k 1 / (e^{(z+k) l} - 1)`.
    fn log_derivative(&self, z: Complex64) -> Complex64 {
        (0..=self.k_max)
            .map(|k| 2.0 * self.length / expm1_c((z + k as f64) * self.length))
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }
}

/// The free constants `F`, `G` of the determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterminantParams {
    pub f: f64,
    pub g: f64,
}

impl DeterminantParams {
    pub fn new(f: f64, g: f64) -> Result<Self> {
        if !(f.is_finite() && g.is_finite()) {
            return Err(ZsError::InvalidInput(format!("F = {f}, G = {g} must be finite")));
        }
        Ok(DeterminantParams { f, g })
    }

    /// `F = chi`, `G = -chi E`.
    pub fn sarnak(chi: i64) -> Self {
        let chi = chi as f64;
        DeterminantParams {
            f: chi,
            g: -chi * sarnak_constant_e(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminantValue {
    /// `log D(s)`.
    pub value: Complex64,
    pub zeta: ZetaEvaluation,
}

/// `log D(s) = F s(s-1) + G + log Z(s) + log Z_inf(s)`.
pub fn log_det_d(
    ls: &LengthSpectrum,
    s: Complex64,
    params: DeterminantParams,
    chi: i64,
    opts: &ZetaOptions,
) -> Result<DeterminantValue> {
    let zeta = log_zeta(ls, s, opts)?;
    let z_inf = if chi == 0 {
        Complex64::new(0.0, 0.0)
    } else {
        log_z_infinity(s, chi)?
    };
    Ok(DeterminantValue {
        value: params.f * s * (s - 1.0) + params.g + zeta.value + z_inf,
        zeta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_2pi;
    use crate::spectrum::enumerate;
    use crate::surface::{build_cylinder, build_pants, PantsSpec};

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cylinder_zero_at_origin_and_lattice() {
        assert!(matches!(
            log_zeta_cylinder(1.0, cx(0.0, 0.0), None),
            Err(ZsError::ZeroOfZeta { k: 0, n: 0, .. })
        ));
        assert!(matches!(
            log_zeta_cylinder(2.0, cx(-1.0, PI), None),
            Err(ZsError::ZeroOfZeta { k: 1, n: 1, .. })
        ));
    }

    #[test]
    fn cylinder_at_one() {
        let direct: f64 = (1..=60).map(|k| (1.0 - (-(k as f64)).exp()).ln()).sum::<f64>() * 2.0;
        let v = log_zeta_cylinder(1.0, cx(1.0, 0.0), None).unwrap();
        assert!((v.value.re - direct).abs() < 1e-14);
        assert!(v.value.im.abs() < 1e-15);
        assert!((v.value.re + 1.368_657_733_953_77).abs() < 1e-12);
    }

    #[test]
    fn enumerated_cylinder_matches_closed_form() {
        let ls = enumerate(&build_cylinder(1.0).unwrap(), 4.0).unwrap();
        for s in [cx(2.0, 0.0), cx(1.5, 3.0), cx(3.0, -7.0)] {
            let a = log_zeta(&ls, s, &ZetaOptions::default()).unwrap();
            let b = log_zeta_cylinder(1.0, s, None).unwrap();
            assert!((a.value - b.value).norm() < 1e-12, "{s}");
        }
    }

    #[test]
    fn region_and_completeness_errors() {
        let ls = enumerate(&build_cylinder(1.0).unwrap(), 4.0).unwrap();
        assert!(matches!(
            log_zeta(&ls, cx(0.5, 0.0), &ZetaOptions::default()),
            Err(ZsError::ConvergenceRegionError { .. })
        ));
        let mut partial = ls.clone();
        partial.complete = false;
        assert!(matches!(
            log_zeta(&partial, cx(2.0, 0.0), &ZetaOptions::default()),
            Err(ZsError::IncompleteSpectrum)
        ));
    }

    #[test]
    fn doubling_k_max_stays_within_bound() {
        let ls = enumerate(&build_pants(PantsSpec::uniform(1.0).unwrap()).unwrap(), 6.0).unwrap();
        let s = cx(1.5, 2.0);
        let a = log_zeta(&ls, s, &ZetaOptions { k_max: Some(3), ..Default::default() }).unwrap();
        let b = log_zeta(&ls, s, &ZetaOptions { k_max: Some(6), ..Default::default() }).unwrap();
        assert!((a.value - b.value).norm() <= a.truncation_error_bound);
    }

    #[test]
    fn determinant_at_one_uses_special_values() {
        let ls = enumerate(&build_pants(PantsSpec::uniform(3.0).unwrap()).unwrap(), 14.0).unwrap();
        let p = DeterminantParams::sarnak(-1);
        let opts = ZetaOptions { extended: true, ..Default::default() };
        let d = log_det_d(&ls, cx(1.0, 0.0), p, -1, &opts).unwrap();
        let expected = p.g + ln_2pi() + d.zeta.value;
        assert!((d.value - expected).norm() < 1e-12, "{} vs {}", d.value, expected);
    }

    #[test]
    fn determinant_reduces_to_zeta_without_topology() {
        let ls = enumerate(&build_cylinder(2.0).unwrap(), 6.0).unwrap();
        let s = cx(2.5, 1.0);
        let d = log_det_d(&ls, s, DeterminantParams::new(0.0, 0.0).unwrap(), 0, &ZetaOptions::default())
            .unwrap();
        assert_eq!(d.value, d.zeta.value);
    }
}
