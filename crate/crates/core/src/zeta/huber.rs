//! Recovery of the length spectrum from samples of `log Z` on a real ray.
//!
//! Each length shows up in the residual as `m L(s; l)`, with
//! `L(s; l) = sum_k log(1 - e^{-(s+k) l})`. The next length is read off at
//! the largest `s` where the residual still stands clear of the sampler's
//! noise, then all lengths found so far are refitted jointly on the samples
//! where the undiscovered ones are negligible.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Result, ZsError};

#[derive(Debug, Clone, Copy)]
pub struct HuberOptions {
    pub s_min: f64,
    pub s_max: f64,
    pub step: f64,
    /// Relative accuracy of the sampler.
    pub relative_precision: f64,
    /// Absolute accuracy floor of the sampler.
    pub absolute_floor: f64,
    /// Work on third differences in `s` (spacing 1), which remove a
    /// polynomial prefactor of degree <= 2 in the exponent.
    pub annihilate_polynomial: bool,
    /// Residual-to-noise ratio needed to accept a new length.
    pub discovery_snr: f64,
}

impl Default for HuberOptions {
    fn default() -> Self {
        HuberOptions {
            s_min: 2.0,
            s_max: 60.0,
            step: 0.25,
            relative_precision: 1e-15,
            absolute_floor: 1e-300,
            annihilate_polynomial: false,
            discovery_snr: 1e4,
        }
    }
}

/// `L(s; l)` and `dL/dl`.
fn peel_term(s: f64, l: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for k in 0.. {
        let w = (s + k as f64) * l;
        if w > 745.0 {
            break;
        }
        let x = (-w).exp();
        v += (-x).ln_1p();
        d += (s + k as f64) * x / (1.0 - x);
        if x < 1e-18 * v.abs() {
            break;
        }
    }
    (v, d)
}

struct Sample {
    /// Sample points entering the (possibly differenced) value, with weights.
    stencil: Vec<(f64, f64)>,
    data: f64,
    sigma: f64,
}

impl Sample {
    fn s(&self) -> f64 {
        self.stencil[0].0
    }

    fn model(&self, l: f64) -> (f64, f64) {
        self.stencil.iter().fold((0.0, 0.0), |acc, &(s, c)| {
            let (v, d) = peel_term(s, l);
            (acc.0 + c * v, acc.1 + c * d)
        })
    }

    fn residual(&self, found: &[(f64, f64)]) -> f64 {
        self.data - found.iter().map(|&(l, m)| m * self.model(l).0).sum::<f64>()
    }
}

/// Least squares `min |A x - b|` through an SVD of the column-scaled matrix.
pub(crate) fn least_squares(a: &[Vec<f64>], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let rows = a.len();
    let scale: Vec<f64> = (0..n).map(|j| a.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt()).collect();
    if rows < n || scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return None;
    }
    let m = DMatrix::from_fn(rows, n, |i, j| a[i][j] / scale[j]);
    let x = m.svd(true, true).solve(&DVector::from_column_slice(b), 1e-14).ok()?;
    Some(x.iter().zip(&scale).map(|(v, s)| v / s).collect())
}

/// Gauss-Newton on the lengths, and on the multiplicities flagged in
/// `free`, over `window`.
fn polish(found: &mut [(f64, f64)], free: &[bool], window: &[Sample]) {
    let n = found.len() + free.iter().filter(|&&f| f).count();
    for _ in 0..40 {
        let mut a = Vec::with_capacity(window.len());
        let mut b = Vec::with_capacity(window.len());
        for p in window {
            b.push(p.residual(found) / p.sigma);
            let mut row = Vec::with_capacity(n);
            for (&(l, m), &f) in found.iter().zip(free) {
                let (v, d) = p.model(l);
                row.push(m * d / p.sigma);
                if f {
                    row.push(v / p.sigma);
                }
            }
            a.push(row);
        }
        let Some(step) = least_squares(&a, &b, n) else { return };
        let mut next = found.to_vec();
        let mut biggest = 0.0f64;
        let mut it = step.iter();
        for ((l, m), &f) in next.iter_mut().zip(free) {
            let dl = it.next().copied().unwrap_or(0.0);
            biggest = biggest.max((dl / *l).abs());
            *l += dl;
            if f {
                let dm = it.next().copied().unwrap_or(0.0);
                biggest = biggest.max((dm / *m).abs());
                *m += dm;
            }
        }
        if next.iter().any(|&(l, m)| !(l > 0.0 && l.is_finite() && m.is_finite())) {
            return;
        }
        found.copy_from_slice(&next);
        if biggest < 1e-15 {
            return;
        }
    }
}

/// Grows the fit window towards small `s` until the undiscovered lengths
/// show up above the noise; returns the new first index.
fn widen_window(found: &mut Vec<(f64, f64)>, free: &[bool], samples: &[Sample], mut start: usize) -> usize {
    while start > 0 {
        let mut trial = found.clone();
        polish(&mut trial, free, &samples[start - 1..]);
        if worst_normalized(&trial, &samples[start - 1..]) > REFIT_LIMIT {
            break;
        }
        *found = trial;
        start -= 1;
    }
    start
}

fn round_multiplicity(m: f64) -> Option<f64> {
    let r = m.round();
    ((m - r).abs() <= 0.1 && r >= 1.0).then_some(r)
}

/// Largest normalized residual the joint refit tolerates.
const REFIT_LIMIT: f64 = 4.0;

fn worst_normalized(found: &[(f64, f64)], window: &[Sample]) -> f64 {
    window.iter().map(|p| (p.residual(found) / p.sigma).abs()).fold(0.0, f64::max)
}

/// Solves `L(s_a; l) / L(s_b; l) = ratio` for `l` by bisection.
fn ratio_length(sa: &Sample, sb: &Sample, ratio: f64, guess: f64) -> f64 {
    let g = |l: f64| sa.model(l).0 / sb.model(l).0 - ratio;
    let (mut lo, mut hi) = (0.25 * guess, 4.0 * guess);
    if !(g(lo) < 0.0 && g(hi) > 0.0) {
        return guess;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The smallest `count` distinct lengths with their multiplicities, from
/// `sampler(s) = log Z(s)` on `[s_min, s_max]`. Multiplicities within 0.1 of
/// an integer are rounded; others are returned as fitted.
///
/// Stops with `PrecisionExhausted` (carrying what was found) once the
/// residual is indistinguishable from sampler noise.
pub fn huber_extract_lengths<F>(sampler: F, count: usize, opts: &HuberOptions) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(opts.s_min > 0.0 && opts.s_max > opts.s_min && opts.step > 0.0) {
        return Err(ZsError::InvalidInput("bad sampling ray".into()));
    }
    let n = ((opts.s_max - opts.s_min) / opts.step).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| opts.s_min + i as f64 * opts.step).collect();
    let values: Vec<f64> = grid.par_iter().map(|&s| sampler(s)).collect::<Result<_>>()?;

    let unit = (1.0 / opts.step).round().max(1.0) as usize;
    let weights: &[f64] = if opts.annihilate_polynomial { &[1.0, -3.0, 3.0, -1.0] } else { &[1.0] };
    let span = (weights.len() - 1) * unit;
    let samples: Vec<Sample> = (0..n.saturating_sub(span))
        .map(|i| {
            let stencil: Vec<(f64, f64)> = weights.iter().enumerate().map(|(j, &c)| (grid[i + j * unit], c)).collect();
            let data = weights.iter().enumerate().map(|(j, &c)| c * values[i + j * unit]).sum();
            let sigma = weights
                .iter()
                .enumerate()
                .map(|(j, &c)| c.abs() * (opts.relative_precision * values[i + j * unit].abs() + opts.absolute_floor))
                .sum();
            Sample { stencil, data, sigma }
        })
        .collect();

    let mut found: Vec<(f64, f64)> = Vec::new();
    let mut free: Vec<bool> = Vec::new();
    while found.len() < count {
        let exhausted = |found: &Vec<(f64, f64)>| ZsError::PrecisionExhausted { partial: found.clone() };
        let resid: Vec<f64> = samples.iter().map(|p| p.residual(&found)).collect();
        let Some(b) = (0..samples.len()).rev().find(|&i| resid[i].abs() >= opts.discovery_snr * samples[i].sigma)
        else {
            return Err(exhausted(&found));
        };
        if b < unit {
            return Err(exhausted(&found));
        }
        let a = b - unit;
        let ratio = resid[a] / resid[b];
        if !(ratio > 1.0) {
            return Err(exhausted(&found));
        }
        let guess = ratio.ln() / (samples[b].s() - samples[a].s());
        let l = ratio_length(&samples[a], &samples[b], ratio, guess);
        if found.last().is_some_and(|&(prev, _)| l <= prev * (1.0 + 1e-9)) {
            return Err(exhausted(&found));
        }
        let m = resid[b] / samples[b].model(l).0;
        found.push((l, m));
        free.push(true);
        polish(&mut found, &free, &samples[a..]);
        let start = widen_window(&mut found, &free, &samples, a);
        let last = found.len() - 1;
        if let Some(r) = round_multiplicity(found[last].1) {
            found[last].1 = r;
            free[last] = false;
            polish(&mut found, &free, &samples[start..]);
            widen_window(&mut found, &free, &samples, start);
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(lengths: &'static [(f64, f64)]) -> impl Fn(f64) -> Result<f64> + Sync {
        move |s| Ok(lengths.iter().map(|&(l, m)| m * peel_term(s, l).0).sum())
    }

    #[test]
    fn single_length() {
        let got = huber_extract_lengths(synthetic(&[(2.0, 2.0)]), 1, &HuberOptions::default()).unwrap();
        assert_eq!(got.len(), 1, "{got:?}");
        assert!((got[0].0 - 2.0).abs() < 1e-12, "{got:?}");
        assert_eq!(got[0].1, 2.0);
    }

    #[test]
    fn exhausts_after_last_length() {
        let err = huber_extract_lengths(synthetic(&[(1.5, 2.0)]), 2, &HuberOptions::default()).unwrap_err();
        match err {
            ZsError::PrecisionExhausted { partial } => {
                assert_eq!(partial.len(), 1);
                assert!((partial[0].0 - 1.5).abs() < 1e-12);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn least_squares_solves_square_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = least_squares(&a, &[3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }
}
