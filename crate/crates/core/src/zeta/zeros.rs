//! Zeros of analytic functions in rectangles: winding numbers by phase
//! tracking, bisection to isolation, Newton refinement with multiplicity.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, ZsError};

/// An analytic function given through its logarithm, so that values far
/// outside the floating range are still usable.
pub trait Analytic: Sync {
    /// Any branch of `log f(z)`; real part `-inf` at a zero.
    fn log_value(&self, z: Complex64) -> Complex64;
    /// `f'(z) / f(z)`.
    fn log_derivative(&self, z: Complex64) -> Complex64;
}

/// Wraps a plain closure `z -> f(z)`. The logarithmic derivative comes from
/// a central difference of values, which stays usable next to a zero.
pub struct FnAnalytic<F> {
    pub f: F,
    pub step: f64,
}

impl<F: Fn(Complex64) -> Complex64 + Sync> FnAnalytic<F> {
    pub fn new(f: F) -> Self {
        FnAnalytic { f, step: 1e-6 }
    }
}

impl<F: Fn(Complex64) -> Complex64 + Sync> Analytic for FnAnalytic<F> {
    fn log_value(&self, z: Complex64) -> Complex64 {
        (self.f)(z).ln()
    }

    fn log_derivative(&self, z: Complex64) -> Complex64 {
        let h = self.step * z.norm().max(1.0);
        let d = ((self.f)(z + h) - (self.f)(z - h)) / (2.0 * h);
        d / (self.f)(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite())
            && re_min < re_max
            && im_min < im_max;
        if !ok {
            return Err(ZsError::InvalidInput(format!(
                "bad rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Rect { re_min, re_max, im_min, im_max })
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn intersect(&self, o: &Rect) -> Option<Rect> {
        Rect::new(
            self.re_min.max(o.re_min),
            self.re_max.min(o.re_max),
            self.im_min.max(o.im_min),
            self.im_max.min(o.im_max),
        )
        .ok()
    }

    /// Split the longer side at fraction `t`.
    fn split(&self, t: f64) -> (Rect, Rect) {
        if self.re_max - self.re_min >= self.im_max - self.im_min {
            let x = self.re_min + t * (self.re_max - self.re_min);
            (Rect { re_max: x, ..*self }, Rect { re_min: x, ..*self })
        } else {
            let y = self.im_min + t * (self.im_max - self.im_min);
            (Rect { im_max: y, ..*self }, Rect { im_min: y, ..*self })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zero {
    pub location: Complex64,
    pub multiplicity: u32,
}

fn wrap_phase(d: f64) -> f64 {
    d - 2.0 * PI * (d / (2.0 * PI)).round()
}

/// Change of `arg f` along the segment `a -> b`. A piece is accepted when
/// it and both of its halves turn by less than `pi/4`, both as sampled and as
/// predicted by `f'/f` at the ends, so that a full turn cannot hide between
/// two samples.
fn segment_phase(f: &dyn Analytic, a: Complex64, b: Complex64, max_step: f64, tol: f64) -> Result<f64> {
    let dz = b - a;
    let point = |t: f64| a + dz * t;
    let eval = |t: f64| -> Result<(f64, Complex64, Complex64)> {
        let z = point(t);
        let v = f.log_value(z);
        let d = f.log_derivative(z);
        if v.re.is_finite() && v.im.is_finite() {
            Ok((t, v, d))
        } else {
            Err(ZsError::BoundaryZero(z))
        }
    };
    let small = |p0: &(f64, Complex64, Complex64), p1: &(f64, Complex64, Complex64)| {
        let step = dz * (p1.0 - p0.0);
        let turn0 = (p0.2 * step).im;
        let turn1 = (p1.2 * step).im;
        wrap_phase(p1.1.im - p0.1.im).abs() <= PI / 4.0
            && (p1.1.re - p0.1.re).abs() <= 2.0
            && turn0.abs() <= PI / 4.0
            && turn1.abs() <= PI / 4.0
    };
    let len = dz.norm();
    let pieces = ((len / max_step).ceil() as usize).max(4);
    let mut total = 0.0;
    let mut stack = Vec::new();
    let mut prev = eval(0.0)?;
    for i in 1..=pieces {
        let cur = eval(i as f64 / pieces as f64)?;
        stack.push((prev, cur));
        prev = cur;
    }
    stack.reverse();
    while let Some((p0, p1)) = stack.pop() {
        let pm = eval(0.5 * (p0.0 + p1.0))?;
        if small(&p0, &p1) && small(&p0, &pm) && small(&pm, &p1) {
            total += wrap_phase(pm.1.im - p0.1.im) + wrap_phase(p1.1.im - pm.1.im);
            continue;
        }
        if (p1.0 - p0.0) * len < tol {
            return Err(ZsError::BoundaryZero(point(pm.0)));
        }
        stack.push((pm, p1));
        stack.push((p0, pm));
    }
    Ok(total)
}

/// Number of zeros inside `rect`, counted with multiplicity.
pub fn winding_number(f: &dyn Analytic, rect: &Rect, tol: f64) -> Result<i64> {
    let c = rect.corners();
    let max_step = rect.diameter() / 32.0;
    let mut total = 0.0;
    for i in 0..4 {
        total += segment_phase(f, c[i], c[(i + 1) % 4], max_step, tol)?;
    }
    let w = total / (2.0 * PI);
    let n = w.round();
    if (w - n).abs() > 0.05 {
        return Err(ZsError::NonConvergence(rect.center()));
    }
    Ok(n as i64)
}

/// Modified Newton for a zero of multiplicity `m`, started at `z`.
fn newton(f: &dyn Analytic, mut z: Complex64, m: f64, rect: &Rect, tol: f64) -> Option<Complex64> {
    let pad = 0.25 * rect.diameter();
    let bounds = Rect {
        re_min: rect.re_min - pad,
        re_max: rect.re_max + pad,
        im_min: rect.im_min - pad,
        im_max: rect.im_max + pad,
    };
    for _ in 0..80 {
        let ld = f.log_derivative(z);
        if !(ld.re.is_finite() && ld.im.is_finite()) {
            return Some(z);
        }
        let step = m / ld;
        z -= step;
        if !bounds.contains(z) {
            return None;
        }
        if step.norm() < 1e-3 * tol {
            return Some(z);
        }
    }
    None
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroFinderOptions {
    /// Location accuracy and the closest a zero may sit to the boundary.
    pub tol: f64,
    /// Clusters up to this multiplicity are handed to Newton directly.
    pub newton_cluster: i64,
    pub max_depth: usize,
}

impl Default for ZeroFinderOptions {
    fn default() -> Self {
        ZeroFinderOptions {
            tol: 1e-10,
            newton_cluster: 8,
            max_depth: 80,
        }
    }
}

const SPLITS: [f64; 4] = [0.5137, 0.4787, 0.5371, 0.4481];

fn solve(
    f: &dyn Analytic,
    rect: Rect,
    w: i64,
    opts: &ZeroFinderOptions,
    depth: usize,
    out: &mut Vec<Zero>,
) -> Result<()> {
    if w == 0 {
        return Ok(());
    }
    if w < 0 {
        return Err(ZsError::NonConvergence(rect.center()));
    }
    if w <= opts.newton_cluster {
        if let Some(z) = newton(f, rect.center(), w as f64, &rect, opts.tol) {
            if rect.contains(z) {
                let h = 100.0 * opts.tol;
                let small = Rect { re_min: z.re - h, re_max: z.re + h, im_min: z.im - h, im_max: z.im + h };
                if let Some(bx) = small.intersect(&rect) {
                    if winding_number(f, &bx, opts.tol).ok() == Some(w) {
                        out.push(Zero { location: z, multiplicity: w as u32 });
                        return Ok(());
                    }
                }
            }
        }
    }
    if depth >= opts.max_depth || rect.diameter() < opts.tol {
        out.push(Zero { location: rect.center(), multiplicity: w as u32 });
        return Ok(());
    }
    let mut last_err = None;
    for t in SPLITS {
        let (r1, r2) = rect.split(t);
        let pair = winding_number(f, &r1, opts.tol).and_then(|w1| Ok((w1, winding_number(f, &r2, opts.tol)?)));
        match pair {
            Ok((w1, w2)) if w1 + w2 == w => {
                solve(f, r1, w1, opts, depth + 1, out)?;
                solve(f, r2, w2, opts, depth + 1, out)?;
                return Ok(());
            }
            Ok(_) => last_err = Some(ZsError::NonConvergence(rect.center())),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(ZsError::NonConvergence(rect.center())))
}

/// All zeros in `rect` with multiplicities, sorted by real then imaginary part.
pub fn find_zeros(f: &dyn Analytic, rect: &Rect, opts: &ZeroFinderOptions) -> Result<Vec<Zero>> {
    let w = winding_number(f, rect, opts.tol)?;
    let mut out = Vec::new();
    solve(f, *rect, w, opts, 0, &mut out)?;
    out.sort_by(|a, b| {
        a.location
            .re
            .total_cmp(&b.location.re)
            .then(a.location.im.total_cmp(&b.location.im))
    });
    Ok(out)
}
