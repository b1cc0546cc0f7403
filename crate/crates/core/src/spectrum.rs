//! Primitive length spectrum enumeration.
//!
//! Conjugacy classes of a free group are enumerated as cyclically reduced
//! words in canonical form (minimal rotation, merged with the inverse class).
//! Word length is bounded through a per-letter translation rate measured on
//! short words; the bound is exact for the cylinder and checked against brute
//! force for pants.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ZsError};
use crate::surface::{translation_length, validate_presentation, MoebiusMap, SurfaceKind, SurfaceModel};
use crate::words::{Letter, Word};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicClass {
    #[serde(serialize_with = "serialize_word")]
    pub word: Word,
    pub length: f64,
    pub primitive: bool,
    pub oriented_multiplicity: u32,
}

fn serialize_word<S: serde::Serializer>(w: &Word, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

/// How completeness was established.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// Lower bound on translation length per letter used for pruning.
    pub rate: f64,
    /// Word length that was exhausted.
    pub depth: usize,
    /// False only where the rate bound is exact (cylinder).
    pub heuristic: bool,
    pub words_visited: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthSpectrum {
    pub classes: Vec<GeodesicClass>,
    pub cutoff: f64,
    pub complete: bool,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    /// Maximum number of cyclically reduced words visited.
    pub word_budget: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            word_budget: 50_000_000,
        }
    }
}

impl LengthSpectrum {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    /// Shortest length, if any.
    pub fn shortest(&self) -> Option<f64> {
        self.classes.first().map(|c| c.length)
    }

    /// Oriented class count `N(t)`.
    pub fn oriented_count(&self, t: f64) -> u64 {
        self.classes
            .iter()
            .take_while(|c| c.length <= t)
            .map(|c| c.oriented_multiplicity as u64)
            .sum()
    }

    /// Restriction to lengths `<= cutoff` (a prefix).
    pub fn truncated(&self, cutoff: f64) -> LengthSpectrum {
        let cutoff = cutoff.min(self.cutoff);
        LengthSpectrum {
            classes: self
                .classes
                .iter()
                .take_while(|c| c.length <= cutoff)
                .cloned()
                .collect(),
            cutoff,
            complete: self.complete,
            certificate: self.certificate.clone(),
        }
    }

    /// Least-squares slope of `log N(t)` over the upper half of the cutoff
    /// range: an empirical exponent of convergence. `None` when there are too
    /// few classes to say anything.
    pub fn empirical_exponent(&self) -> Option<f64> {
        if self.classes.len() == 1 {
            return Some(0.0);
        }
        let half = self.cutoff / 2.0;
        let mut pts = Vec::new();
        let mut n = 0u64;
        for (i, c) in self.classes.iter().enumerate() {
            n += c.oriented_multiplicity as u64;
            let last_at_length = self
                .classes
                .get(i + 1)
                .map_or(true, |next| next.length > c.length);
            if c.length >= half && last_at_length {
                pts.push((c.length, (n as f64).ln()));
            }
        }
        if pts.len() < 8 {
            return None;
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        Some((sxy / sxx).max(0.0))
    }
}

struct Search<'a> {
    surface: &'a SurfaceModel,
    letters: Vec<Letter>,
    cutoff: f64,
    depth: usize,
}

#[derive(Default)]
struct Found {
    classes: Vec<GeodesicClass>,
    visited: usize,
    min_rate: f64,
    budget_hit: bool,
}

impl Search<'_> {
    fn run(&self, first: Letter, budget: usize) -> Found {
        let mut found = Found {
            min_rate: f64::INFINITY,
            ..Found::default()
        };
        let mut word = vec![first];
        let m = self.surface.letter_matrix(first);
        self.descend(&mut word, m, budget, &mut found);
        found
    }

    fn descend(&self, word: &mut Vec<Letter>, m: MoebiusMap, budget: usize, out: &mut Found) {
        if out.budget_hit {
            return;
        }
        let n = word.len();
        let cyclic = n == 1 || word[0] != word[n - 1].inverse();
        if cyclic {
            out.visited += 1;
            if out.visited > budget {
                out.budget_hit = true;
                return;
            }
            if let Ok(len) = translation_length(&m) {
                out.min_rate = out.min_rate.min(len / n as f64);
                if len <= self.cutoff {
                    self.record(word, len, out);
                }
            }
        }
        if n == self.depth {
            return;
        }
        for &l in &self.letters {
            if l == word[n - 1].inverse() {
                continue;
            }
            word.push(l);
            let next = m.compose(&self.surface.letter_matrix(l));
            self.descend(word, next, budget, out);
            word.pop();
        }
    }

    fn record(&self, word: &[Letter], len: f64, out: &mut Found) {
        let w = Word::new(word.to_vec());
        if !w.is_primitive() {
            return;
        }
        let (canonical, self_inverse) = w.unoriented_canonical();
        if canonical != w {
            return;
        }
        out.classes.push(GeodesicClass {
            word: w,
            length: len,
            primitive: true,
            oriented_multiplicity: if self_inverse { 1 } else { 2 },
        });
    }
}

/// All primitive unoriented geodesic classes of length `<= cutoff`.
pub fn enumerate(s: &SurfaceModel, cutoff: f64) -> Result<LengthSpectrum> {
    enumerate_with(s, cutoff, EnumerationOptions::default())
}

pub fn enumerate_with(
    s: &SurfaceModel,
    cutoff: f64,
    options: EnumerationOptions,
) -> Result<LengthSpectrum> {
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(ZsError::InvalidLength(cutoff));
    }
    let report = validate_presentation(s, 2)?;
    let mut rate = report.min_length_per_letter;
    let letters: Vec<Letter> = (0..s.rank())
        .flat_map(|i| [Letter::generator(i), Letter::inverse_of(i)])
        .collect();
    let heuristic = !matches!(s.kind(), SurfaceKind::Cylinder { .. });

    loop {
        let depth = ((cutoff / rate).floor() as usize).max(1);
        let search = Search {
            surface: s,
            letters: letters.clone(),
            cutoff,
            depth,
        };
        let per_branch = options.word_budget.div_ceil(letters.len());
        let found: Vec<Found> = letters
            .par_iter()
            .map(|&first| search.run(first, per_branch))
            .collect();

        let visited: usize = found.iter().map(|f| f.visited).sum();
        let budget_hit = found.iter().any(|f| f.budget_hit);
        let observed = found.iter().map(|f| f.min_rate).fold(f64::INFINITY, f64::min);
        let mut classes: Vec<GeodesicClass> = found.into_iter().flat_map(|f| f.classes).collect();
        sort_classes(&mut classes);

        let certificate = Certificate {
            rate,
            depth,
            heuristic,
            words_visited: visited,
        };
        let spectrum = LengthSpectrum {
            classes,
            cutoff,
            complete: !budget_hit,
            certificate,
        };
        if budget_hit {
            return Err(ZsError::EnumerationBudgetExceeded {
                budget: options.word_budget,
                partial: Box::new(spectrum),
            });
        }
        // Longer words that beat the short-word rate invalidate the depth bound.
        let refined_depth = ((cutoff / observed).floor() as usize).max(1);
        if observed < rate * (1.0 - 1e-12) && refined_depth > depth {
            rate = observed;
            continue;
        }
        return Ok(spectrum);
    }
}

fn sort_classes(classes: &mut [GeodesicClass]) {
    classes.sort_by(|x, y| x.length.total_cmp(&y.length).then_with(|| x.word.cmp(&y.word)));
}

/// Naive oracle: every reduced word of length `<= depth`, cyclically
/// reduced, measured from scratch and canonicalized. Exponential in `depth`;
/// intended for checking [`enumerate`] on small cases.
pub fn brute_force_spectrum(s: &SurfaceModel, cutoff: f64, depth: usize) -> Result<Vec<GeodesicClass>> {
    use std::collections::BTreeMap;

    let letters: Vec<Letter> = (0..s.rank())
        .flat_map(|i| [Letter::generator(i), Letter::inverse_of(i)])
        .collect();
    let mut classes: BTreeMap<Word, GeodesicClass> = BTreeMap::new();
    let mut layer: Vec<Vec<Letter>> = letters.iter().map(|&l| vec![l]).collect();
    for d in 1..=depth {
        for w in &layer {
            let reduced = Word::new(w.clone()).cyclic_reduction();
            if reduced.is_empty() || !reduced.is_primitive() {
                continue;
            }
            let len = s.word_length(&reduced)?;
            if len > cutoff {
                continue;
            }
            let (canonical, self_inverse) = reduced.unoriented_canonical();
            classes.entry(canonical.clone()).or_insert(GeodesicClass {
                word: canonical,
                length: len,
                primitive: true,
                oriented_multiplicity: if self_inverse { 1 } else { 2 },
            });
        }
        if d == depth {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|w| {
                let last = *w.last().unwrap();
                letters.iter().filter(move |&&l| l != last.inverse()).map(move |&l| {
                    let mut next = w.clone();
                    next.push(l);
                    next
                })
            })
            .collect();
    }
    let mut out: Vec<GeodesicClass> = classes.into_values().collect();
    sort_classes(&mut out);
    Ok(out)
}

/// Shortest primitive length.
pub fn systole(ls: &LengthSpectrum) -> Result<f64> {
    ls.shortest().ok_or(ZsError::EmptySpectrum)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingResult {
    pub t: f64,
    /// Oriented count of classes with length `<= t`.
    pub count: u64,
    /// Smallest `C` with `N(t_i) <= C e^{t_i}` over the jump points `t_i <= t`.
    pub exponential_constant: f64,
}

pub fn counting_function(ls: &LengthSpectrum, t: f64) -> Result<CountingResult> {
    if t > ls.cutoff {
        return Err(ZsError::CutoffExceeded { t, cutoff: ls.cutoff });
    }
    Ok(CountingResult {
        t,
        count: ls.oriented_count(t),
        exponential_constant: growth_constant(ls, 1.0, t),
    })
}

/// `max_i N(t_i) e^{-exponent t_i}` over jump points `t_i <= t`.
pub fn growth_constant(ls: &LengthSpectrum, exponent: f64, t: f64) -> f64 {
    let mut n = 0u64;
    let mut c = 0.0f64;
    for cls in ls.classes.iter().take_while(|c| c.length <= t) {
        n += cls.oriented_multiplicity as u64;
        c = c.max(n as f64 * (-exponent * cls.length).exp());
    }
    c
}
