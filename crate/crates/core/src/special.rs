//! log Gamma, digamma, the Barnes double gamma function and the topological
//! factor `Z_inf(s) = [(2 pi)^s Gamma_2(s)^2 / Gamma(s)]^{-chi}`.
//!
//! `Gamma_2` is normalized by the product
//!
//! ```text
//! 1/Gamma_2(z + 1) = (2 pi)^{z/2} e^{-z/2 - (1 + gamma) z^2 / 2} prod_k (1 + z/k)^k e^{-z + z^2/(2k)}
//! ```
//!
//! i.e. `Gamma_2 = 1/G` with `G` the Barnes G-function. Logarithms are
//! accumulated factor by factor, so every `log` below is a sum of principal
//! logarithms rather than the principal logarithm of a product.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, ZsError};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// `zeta'(-1) = 1/12 - log A` (A the Glaisher-Kinkelin constant).
/// -0.165421143700450929213919660242780642764 to 39 digits; confirmed by the
/// Euler-Maclaurin hyperfactorial oracle in the tests.
pub const ZETA_PRIME_MINUS_ONE: f64 = -0.165_421_143_700_450_929_213_919_660_242_78;

const LN_2PI: f64 = 1.837_877_066_409_345_483_560_659_472_811_235_3;

/// B_2, B_4, ..., B_30.
const BERNOULLI_EVEN: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn nonpositive_integer(z: Complex64) -> Option<i64> {
    (z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0).then_some(z.re as i64)
}

/// Shift count bringing `Re(z) + n` to at least `target`.
fn shift_to(z: Complex64, target: f64) -> usize {
    if z.re >= target {
        0
    } else {
        (target - z.re).ceil() as usize
    }
}

/// `log Gamma(z)`, continuous off the poles: Stirling series at large
/// argument, shifted down by summing `log(z + j)` term by term.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if let Some(n) = nonpositive_integer(z) {
        return Err(ZsError::PoleAtNonpositiveInteger(n));
    }
    let n = shift_to(z, 16.0);
    let mut shift = c(0.0);
    for j in 0..n {
        shift += (z + j as f64).ln();
    }
    let w = z + n as f64;
    let mut series = (w - 0.5) * w.ln() - w + 0.5 * LN_2PI;
    let w2inv = (w * w).inv();
    let mut wpow = w.inv();
    for (k, b) in BERNOULLI_EVEN.iter().take(10).enumerate() {
        let k = (k + 1) as f64;
        series += wpow * (b / (2.0 * k * (2.0 * k - 1.0)));
        wpow *= w2inv;
    }
    Ok(series - shift)
}

/// Digamma `psi(z)` via the recurrence `psi(z+1) = psi(z) + 1/z` and the
/// asymptotic series.
pub fn digamma(z: Complex64) -> Result<Complex64> {
    if let Some(n) = nonpositive_integer(z) {
        return Err(ZsError::PoleAtNonpositiveInteger(n));
    }
    let n = shift_to(z, 20.0);
    let mut shift = c(0.0);
    for j in 0..n {
        shift += (z + j as f64).inv();
    }
    let w = z + n as f64;
    let mut series = w.ln() - 0.5 * w.inv();
    let w2inv = (w * w).inv();
    let mut wpow = w2inv;
    for (k, b) in BERNOULLI_EVEN.iter().take(10).enumerate() {
        let k = (k + 1) as f64;
        series -= wpow * (b / (2.0 * k));
        wpow *= w2inv;
    }
    Ok(series - shift)
}

/// Hurwitz zeta `sum_{n >= 0} (a + n)^{-m}` for integer `m >= 2`, `a >= 32`,
/// by Euler-Maclaurin at the first term.
fn hurwitz_zeta(m: u32, a: f64) -> f64 {
    let mf = m as f64;
    let mut sum = a.powf(1.0 - mf) / (mf - 1.0) + 0.5 * a.powf(-mf);
    // B_{2i}/(2i)! * m (m+1) ... (m+2i-2) * a^{-m-2i+1}
    let mut rising = mf; // m (m+1) ... (m+2i-2), starting at i = 1
    let mut fact = 2.0; // (2i)!
    let mut apow = a.powf(-mf - 1.0);
    for (i, b) in BERNOULLI_EVEN.iter().take(8).enumerate() {
        let i = i + 1;
        let term = b / fact * rising * apow;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        let two_i = 2.0 * i as f64;
        rising *= (mf + two_i - 1.0) * (mf + two_i);
        fact *= (two_i + 1.0) * (two_i + 2.0);
        apow /= a * a;
    }
    sum
}

/// `log G(z + 1) = -log Gamma_2(z + 1)` from the Weierstrass product, with the
/// terms `k > K` summed through Hurwitz zeta values.
fn log_barnes_g_shifted(z: Complex64) -> Complex64 {
    let big_k = (4.0 * z.norm()).ceil().max(64.0) as usize;
    let mut head = c(0.0);
    for k in 1..=big_k {
        let kf = k as f64;
        head += kf * (z / kf).ln_1p_c() - z + z * z / (2.0 * kf);
    }
    // k log(1 + z/k) - z + z^2/(2k) = sum_{j >= 3} (-1)^{j+1} z^j / (j k^{j-1})
    let a = (big_k + 1) as f64;
    let mut tail = c(0.0);
    let mut zpow = z * z * z;
    for j in 3..64u32 {
        let term = zpow * (hurwitz_zeta(j - 1, a) / j as f64);
        if j % 2 == 1 {
            tail += term;
        } else {
            tail -= term;
        }
        if term.norm() < 1e-18 * (head.norm() + 1.0) {
            break;
        }
        zpow *= z;
    }
    0.5 * z * LN_2PI - 0.5 * z - 0.5 * (1.0 + EULER_GAMMA) * z * z + head + tail
}

trait Ln1p {
    fn ln_1p_c(self) -> Complex64;
}

impl Ln1p for Complex64 {
    /// `log(1 + w)` keeping relative accuracy for small `|w|`.
    fn ln_1p_c(self) -> Complex64 {
        if self.norm() < 0.5 {
            let re = 0.5 * (self.re * (2.0 + self.re) + self.im * self.im).ln_1p();
            let im = self.im.atan2(1.0 + self.re);
            Complex64::new(re, im)
        } else {
            (1.0 + self).ln()
        }
    }
}

/// `e^z - 1` with relative accuracy near the zeros `z = 2 pi i n`.
pub fn expm1_c(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * z.im.cos() - 2.0 * half * half;
    Complex64::new(re, z.re.exp() * z.im.sin())
}

/// `log(1 - e^{-w})`, principal branch, accurate both for large `Re w` and
/// close to the zeros `w = 2 pi i n`.
pub fn log_one_minus_exp_neg(w: Complex64) -> Complex64 {
    if w.re > 0.7 {
        (-(-w).exp()).ln_1p_c()
    } else {
        (-expm1_c(-w)).ln()
    }
}

/// `log Gamma_2(s)`.
pub fn log_barnes_gamma2(s: Complex64) -> Result<Complex64> {
    if let Some(n) = nonpositive_integer(s) {
        return Err(ZsError::DomainError(format!(
            "Gamma_2 has a pole at s = {n} (zero of the product)"
        )));
    }
    Ok(-log_barnes_g_shifted(s - 1.0))
}

/// `d/ds log Gamma_2(s) = -[log(2pi)/2 - 1/2 - (1 + gamma) z + sum_k z^2/(k(k + z))]`, `z = s - 1`.
pub fn log_barnes_gamma2_derivative(s: Complex64) -> Result<Complex64> {
    if let Some(n) = nonpositive_integer(s) {
        return Err(ZsError::DomainError(format!("Gamma_2 has a pole at s = {n}")));
    }
    let z = s - 1.0;
    let big_k = (4.0 * z.norm()).ceil().max(64.0) as usize;
    let mut head = c(0.0);
    for k in 1..=big_k {
        let kf = k as f64;
        head += z * z / (kf * (kf + z));
    }
    // z^2/(k(k+z)) = sum_{j >= 2} (-1)^j z^j / k^j
    let a = (big_k + 1) as f64;
    let mut tail = c(0.0);
    let mut zpow = z * z;
    for j in 2..64u32 {
        let term = zpow * hurwitz_zeta(j, a);
        if j % 2 == 0 {
            tail += term;
        } else {
            tail -= term;
        }
        if term.norm() < 1e-18 * (head.norm() + 1.0) {
            break;
        }
        zpow *= z;
    }
    Ok(-(0.5 * LN_2PI - 0.5 - (1.0 + EULER_GAMMA) * z + head + tail))
}

fn check_topological_domain(s: Complex64) -> Result<()> {
    if let Some(n) = nonpositive_integer(s) {
        return Err(ZsError::DomainError(format!(
            "Z_inf has a topological zero/pole at s = {n}"
        )));
    }
    Ok(())
}

/// `log Z_inf(s) = -chi (s log 2pi + 2 log Gamma_2(s) - log Gamma(s))`.
pub fn log_z_infinity(s: Complex64, chi: i64) -> Result<Complex64> {
    check_topological_domain(s)?;
    if chi == 0 {
        return Ok(c(0.0));
    }
    let inner = s * LN_2PI + 2.0 * log_barnes_gamma2(s)? - ln_gamma(s)?;
    Ok(-(chi as f64) * inner)
}

/// Analytic `d/ds log Z_inf(s)`.
pub fn log_z_infinity_derivative(s: Complex64, chi: i64) -> Result<Complex64> {
    check_topological_domain(s)?;
    if chi == 0 {
        return Ok(c(0.0));
    }
    let inner = c(LN_2PI) + 2.0 * log_barnes_gamma2_derivative(s)? - digamma(s)?;
    Ok(-(chi as f64) * inner)
}

/// Coefficients of the large-`s` expansion, with `u = s(s - 1)`:
///
/// ```text
/// log Z_inf(s) ~ constant + u_log_u * u log u + log_u * log u + linear_u * u + sum_l tail[l-1] u^{-l}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionCoefficients {
    pub chi: i64,
    /// `-chi (log(2pi)/2 + 1/4 - 2 zeta'(-1))`
    pub constant: f64,
    /// `chi / 2`
    pub u_log_u: f64,
    /// `chi / 6`
    pub log_u: f64,
    /// `-3 chi / 2`
    pub linear_u: f64,
    pub tail: Vec<f64>,
}

/// Tail coefficients for `chi = 1`; they scale linearly in `chi`.
///
/// From `d/du log Z_inf = chi (psi(s) - 1)` and
/// `psi(w + 1/2) ~ log w - sum_k (2^{1-2k} - 1) B_2k / (2k w^2k)` with
/// `w^2 = u + 1/4`, re-expanded in `1/u` and integrated termwise.
fn unit_tail_coefficients() -> &'static [f64] {
    static TAIL: OnceLock<Vec<f64>> = OnceLock::new();
    TAIL.get_or_init(|| {
        const N: usize = 14;
        // psi(s) ~ log(u)/2 + sum_{n >= 1} d[n] u^{-n}
        let mut d = [0.0f64; N + 2];
        for (n, dn) in d.iter_mut().enumerate().skip(1) {
            // log(1 + 1/(4u)) / 2
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            *dn += 0.5 * sign * 0.25f64.powi(n as i32) / n as f64;
        }
        for (k0, b) in BERNOULLI_EVEN.iter().enumerate() {
            let k = k0 + 1;
            if k > N + 1 {
                break;
            }
            let coeff = -(2f64.powi(1 - 2 * k as i32) - 1.0) * b / (2.0 * k as f64);
            // (u + 1/4)^{-k} = sum_i (-1)^i C(k+i-1, i) 4^{-i} u^{-k-i}
            let mut binom = 1.0;
            for i in 0..=(N + 1 - k) {
                if i > 0 {
                    binom *= (k + i - 1) as f64 / i as f64;
                }
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                d[k + i] += coeff * sign * binom * 0.25f64.powi(i as i32);
            }
        }
        (1..=N).map(|l| -d[l + 1] / l as f64).collect()
    })
}

pub fn expansion_coefficients(chi: i64, tail_terms: usize) -> ExpansionCoefficients {
    let x = chi as f64;
    let unit = unit_tail_coefficients();
    ExpansionCoefficients {
        chi,
        constant: -x * (0.5 * LN_2PI + 0.25 - 2.0 * ZETA_PRIME_MINUS_ONE),
        u_log_u: 0.5 * x,
        log_u: x / 6.0,
        linear_u: -1.5 * x,
        tail: unit.iter().take(tail_terms).map(|t| t * x).collect(),
    }
}

/// Maximum number of tail coefficients available.
pub fn max_tail_terms() -> usize {
    unit_tail_coefficients().len() - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticValue {
    pub value: Complex64,
    /// Magnitude of the first omitted term.
    pub residual_bound: f64,
}

/// Large-`Re(s)` expansion of `log Z_inf`, truncated after `tail_terms`
/// inverse powers of `s(s - 1)`.
pub fn z_infinity_asymptotics(s: Complex64, chi: i64, tail_terms: usize) -> Result<AsymptoticValue> {
    if s.re < 5.0 {
        return Err(ZsError::DomainError(format!(
            "asymptotic expansion requires Re(s) >= 5, got {}",
            s.re
        )));
    }
    if tail_terms > max_tail_terms() {
        return Err(ZsError::InvalidInput(format!(
            "at most {} tail terms are available",
            max_tail_terms()
        )));
    }
    if chi == 0 {
        return Ok(AsymptoticValue {
            value: c(0.0),
            residual_bound: 0.0,
        });
    }
    let coeffs = expansion_coefficients(chi, tail_terms + 1);
    let u = s * (s - 1.0);
    let log_u = u.ln();
    let mut value = c(coeffs.constant)
        + coeffs.u_log_u * u * log_u
        + coeffs.log_u * log_u
        + coeffs.linear_u * u;
    let uinv = u.inv();
    let mut upow = uinv;
    for cl in coeffs.tail.iter().take(tail_terms) {
        value += cl * upow;
        upow *= uinv;
    }
    let residual_bound = coeffs.tail[tail_terms].abs() * upow.norm();
    Ok(AsymptoticValue {
        value,
        residual_bound,
    })
}

/// `E = -1/4 - log(2pi)/2 + 2 zeta'(-1)`.
pub fn sarnak_constant_e() -> f64 {
    -0.25 - 0.5 * LN_2PI + 2.0 * ZETA_PRIME_MINUS_ONE
}

pub fn ln_2pi() -> f64 {
    LN_2PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn digamma_special_values() {
        assert!((digamma(cx(1.0, 0.0)).unwrap().re + EULER_GAMMA).abs() < 1e-13);
        assert!((digamma(cx(2.0, 0.0)).unwrap().re - (1.0 - EULER_GAMMA)).abs() < 1e-13);
        assert!(matches!(
            digamma(cx(0.0, 0.0)),
            Err(ZsError::PoleAtNonpositiveInteger(0))
        ));
        assert!(matches!(
            digamma(cx(-3.0, 0.0)),
            Err(ZsError::PoleAtNonpositiveInteger(-3))
        ));
    }

    #[test]
    fn ln_gamma_values() {
        assert!(ln_gamma(cx(1.0, 0.0)).unwrap().norm() < 1e-14);
        assert!((ln_gamma(cx(5.0, 0.0)).unwrap().re - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(cx(0.5, 0.0)).unwrap().re - 0.5 * PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn gamma2_at_one_and_two() {
        assert!(log_barnes_gamma2(cx(1.0, 0.0)).unwrap().norm() < 1e-13);
        // G(2) = 1
        assert!(log_barnes_gamma2(cx(2.0, 0.0)).unwrap().norm() < 1e-13);
        assert!(log_barnes_gamma2(cx(0.0, 0.0)).is_err());
        assert!(log_barnes_gamma2(cx(-2.0, 0.0)).is_err());
    }

    #[test]
    fn z_infinity_special_values() {
        assert_eq!(log_z_infinity(cx(3.3, 1.0), 0).unwrap(), cx(0.0, 0.0));
        let v = log_z_infinity(cx(1.0, 0.0), -1).unwrap();
        assert!((v.re - LN_2PI).abs() < 1e-13 && v.im.abs() < 1e-13);
    }

    #[test]
    fn sarnak_constant() {
        let e = sarnak_constant_e();
        assert!((e - (-1.499780820605574600)).abs() < 1e-14);
        assert!((e + 0.25 + 0.5 * LN_2PI - 2.0 * ZETA_PRIME_MINUS_ONE).abs() < 1e-15);
    }

    #[test]
    fn tail_coefficient_leading_value() {
        // c_1 = chi / 30
        let c = expansion_coefficients(-1, 2);
        assert!((c.tail[0] + 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn asymptotics_domain() {
        assert!(z_infinity_asymptotics(cx(4.0, 0.0), -1, 0).is_err());
        assert_eq!(z_infinity_asymptotics(cx(9.0, 2.0), 0, 3).unwrap().value, cx(0.0, 0.0));
    }
}
