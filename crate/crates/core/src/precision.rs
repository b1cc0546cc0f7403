//! Precision targets and compensated summation.
//!
//! All kernels compute in `f64`. The precision setting controls truncation
//! targets (how many Euler-product factors, how deep tails are summed) and,
//! above double precision, switches reductions to Neumaier summation.

use num_complex::Complex64;

/// Decimal digits requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision {
    digits: u32,
}

impl Precision {
    pub const DOUBLE: Precision = Precision { digits: 16 };

    pub fn new(digits: u32) -> Self {
        Precision { digits }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Absolute/relative truncation target, floored at double-precision epsilon.
    pub fn target(&self) -> f64 {
        10f64.powi(-(self.digits.min(300) as i32)).max(f64::EPSILON / 4.0)
    }

    /// True when the caller asked for more digits than a double carries.
    pub fn exceeds_double(&self) -> bool {
        self.digits > 16
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DOUBLE
    }
}

/// Neumaier-compensated sum, in index order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Complex Neumaier sum (componentwise), in index order.
pub fn compensated_sum_c<I: IntoIterator<Item = Complex64>>(values: I) -> Complex64 {
    let mut re = Vec::new();
    let mut im = Vec::new();
    for v in values {
        re.push(v.re);
        im.push(v.im);
    }
    Complex64::new(compensated_sum(re), compensated_sum(im))
}

/// Sequential sum, compensated when the precision asks for it.
pub fn reduce_c(values: &[Complex64], precision: Precision) -> Complex64 {
    if precision.exceeds_double() {
        compensated_sum_c(values.iter().copied())
    } else {
        values.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }
}
