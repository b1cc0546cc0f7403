//! Convex co-compact hyperbolic surfaces presented by free Schottky groups.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZsError};
use crate::words::{Letter, Word};

const DET_TOLERANCE: f64 = 1e-12;

/// An element of PSL(2, R) stored as a unit-determinant real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MoebiusMap {
    pub const IDENTITY: MoebiusMap = MoebiusMap {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds a map from matrix entries, rescaling so that the determinant is 1.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.is_finite() && det > 0.0) {
            return Err(ZsError::InvalidInput(format!(
                "matrix [[{a}, {b}], [{c}, {d}]] has nonpositive determinant {det}"
            )));
        }
        let k = det.sqrt().recip();
        let m = MoebiusMap {
            a: a * k,
            b: b * k,
            c: c * k,
            d: d * k,
        };
        debug_assert!((m.det() - 1.0).abs() <= DET_TOLERANCE * (1.0 + m.norm_sq()));
        Ok(m)
    }

    pub fn diagonal(lambda: f64) -> Self {
        MoebiusMap {
            a: lambda,
            b: 0.0,
            c: 0.0,
            d: lambda.recip(),
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    fn norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn inverse(&self) -> Self {
        MoebiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn compose(&self, o: &MoebiusMap) -> Self {
        MoebiusMap {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2.0
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

/// Translation length `2 arccosh(|tr| / 2)` of a hyperbolic element.
pub fn translation_length(m: &MoebiusMap) -> Result<f64> {
    let t = m.trace().abs();
    if !(t > 2.0) || !t.is_finite() {
        return Err(ZsError::NonHyperbolicElement {
            trace: m.trace(),
            word: None,
        });
    }
    Ok(2.0 * (t / 2.0).acosh())
}

/// Boundary lengths of a hyperbolic pair of pants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PantsSpec {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl PantsSpec {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        for l in [l1, l2, l3] {
            check_length(l)?;
        }
        Ok(PantsSpec { l1, l2, l3 })
    }

    pub fn uniform(l: f64) -> Result<Self> {
        Self::new(l, l, l)
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn total_boundary(&self) -> f64 {
        self.l1 + self.l2 + self.l3
    }
}

fn check_length(l: f64) -> Result<()> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(ZsError::InvalidLength(l))
    }
}

/// How a surface was constructed; kept so that exact closed forms can be used
/// downstream where they exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SurfaceKind {
    Cylinder { length: f64 },
    Pants { spec: PantsSpec },
    Generators,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceModel {
    generators: Vec<MoebiusMap>,
    genus: u32,
    funnels: u32,
    boundary_lengths: Vec<f64>,
    boundary_words: Vec<Word>,
    chi: i64,
    kind: SurfaceKind,
}

impl SurfaceModel {
    /// A user-supplied Schottky presentation. The Euler characteristic of the
    /// signature must agree with the rank of the free group (`chi = 1 - rank`).
    pub fn from_generators(
        generators: Vec<MoebiusMap>,
        genus: u32,
        funnels: u32,
        boundary_lengths: Vec<f64>,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(ZsError::InvalidInput("at least one generator is required".into()));
        }
        if funnels == 0 {
            return Err(ZsError::InvalidInput("funnel count must be positive".into()));
        }
        if boundary_lengths.len() != funnels as usize {
            return Err(ZsError::InvalidInput(format!(
                "expected {} boundary lengths, got {}",
                funnels,
                boundary_lengths.len()
            )));
        }
        for &l in &boundary_lengths {
            check_length(l)?;
        }
        let chi = 2 - 2 * genus as i64 - funnels as i64;
        let rank = generators.len() as i64;
        if chi != 1 - rank {
            return Err(ZsError::InvalidInput(format!(
                "signature (h = {genus}, M = {funnels}) gives chi = {chi}, but a free group of rank {rank} has chi = {}",
                1 - rank
            )));
        }
        for (i, g) in generators.iter().enumerate() {
            if !g.is_hyperbolic() {
                return Err(ZsError::NonHyperbolicElement {
                    trace: g.trace(),
                    word: Some(Word::new(vec![Letter::generator(i)]).to_string()),
                });
            }
        }
        Ok(SurfaceModel {
            generators,
            genus,
            funnels,
            boundary_lengths,
            boundary_words: Vec::new(),
            chi,
            kind: SurfaceKind::Generators,
        })
    }

    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn funnels(&self) -> u32 {
        self.funnels
    }

    pub fn boundary_lengths(&self) -> &[f64] {
        &self.boundary_lengths
    }

    /// Words representing the boundary geodesics (empty for user presentations).
    pub fn boundary_words(&self) -> &[Word] {
        &self.boundary_words
    }

    pub fn chi(&self) -> i64 {
        self.chi
    }

    pub fn kind(&self) -> &SurfaceKind {
        &self.kind
    }

    /// Matrix of a word; letters index `generators`.
    pub fn word_matrix(&self, word: &Word) -> MoebiusMap {
        word.letters()
            .iter()
            .fold(MoebiusMap::IDENTITY, |acc, l| acc.compose(&self.letter_matrix(*l)))
    }

    pub fn letter_matrix(&self, l: Letter) -> MoebiusMap {
        let g = self.generators[l.index()];
        if l.is_inverse() {
            g.inverse()
        } else {
            g
        }
    }

    pub fn word_length(&self, word: &Word) -> Result<f64> {
        translation_length(&self.word_matrix(word)).map_err(|e| match e {
            ZsError::NonHyperbolicElement { trace, .. } => ZsError::NonHyperbolicElement {
                trace,
                word: Some(word.to_string()),
            },
            other => other,
        })
    }

    /// Hyperbolic area of the convex core, `-2 pi chi` by Gauss-Bonnet.
    pub fn core_area(&self) -> f64 {
        -2.0 * std::f64::consts::PI * self.chi as f64
    }
}

/// The hyperbolic cylinder `<diag(e^{l/2}, e^{-l/2})>`. Recorded with
/// `chi = 0` and two funnels of length `l`.
pub fn build_cylinder(length: f64) -> Result<SurfaceModel> {
    check_length(length)?;
    let generator = MoebiusMap::diagonal((length / 2.0).exp());
    Ok(SurfaceModel {
        generators: vec![generator],
        genus: 0,
        funnels: 2,
        boundary_lengths: vec![length, length],
        boundary_words: vec![Word::new(vec![Letter::generator(0)])],
        chi: 0,
        kind: SurfaceKind::Cylinder { length },
    })
}

/// Schottky generators of the pair of pants with the given boundary lengths,
/// fixed by the traces `tr a = 2cosh(l1/2)`, `tr b = 2cosh(l2/2)` and
/// `tr ab = -2cosh(l3/2)`. Boundary classes are `a`, `b` and `(ab)^-1`.
pub fn build_pants(p: PantsSpec) -> Result<SurfaceModel> {
    let p = PantsSpec::new(p.l1, p.l2, p.l3)?;
    let lambda = (p.l1 / 2.0).exp();
    let tr_b = 2.0 * (p.l2 / 2.0).cosh();
    let tr_ab = -2.0 * (p.l3 / 2.0).cosh();
    // a = diag(lambda, 1/lambda), b = [[x, y], [z, w]]:
    //   x + w = tr_b,  lambda x + w / lambda = tr_ab.
    let x = (tr_ab - tr_b / lambda) / (lambda - lambda.recip());
    let w = tr_b - x;
    let yz = x * w - 1.0;
    let (y, z) = if yz >= 0.0 {
        (yz.sqrt(), yz.sqrt())
    } else {
        ((-yz).sqrt(), -(-yz).sqrt())
    };
    let a = MoebiusMap::diagonal(lambda);
    let b = MoebiusMap::new(x, y, z, w)?;
    let ga = Letter::generator(0);
    let gb = Letter::generator(1);
    Ok(SurfaceModel {
        generators: vec![a, b],
        genus: 0,
        funnels: 3,
        boundary_lengths: p.lengths().to_vec(),
        boundary_words: vec![
            Word::new(vec![ga]),
            Word::new(vec![gb]),
            Word::new(vec![ga, gb]).inverse(),
        ],
        chi: -1,
        kind: SurfaceKind::Pants { spec: p },
    })
}

/// Outcome of a depth-bounded hyperbolicity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub depth: usize,
    pub words_checked: usize,
    /// Minimal translation length over all checked words.
    pub min_length: f64,
    pub min_word: String,
    /// Minimal translation length per letter over checked words of length <= 2;
    /// used as the enumeration pruning rate.
    pub min_length_per_letter: f64,
}

/// Checks that every cyclically reduced word of length `<= depth` is hyperbolic.
pub fn validate_presentation(s: &SurfaceModel, depth: usize) -> Result<ValidationReport> {
    if depth == 0 {
        return Err(ZsError::InvalidInput("validation depth must be >= 1".into()));
    }
    let mut report = ValidationReport {
        depth,
        words_checked: 0,
        min_length: f64::INFINITY,
        min_word: String::new(),
        min_length_per_letter: f64::INFINITY,
    };
    let letters: Vec<Letter> = (0..s.rank())
        .flat_map(|i| [Letter::generator(i), Letter::inverse_of(i)])
        .collect();
    let mut stack: Vec<(Vec<Letter>, MoebiusMap)> = vec![(Vec::new(), MoebiusMap::IDENTITY)];
    while let Some((prefix, m)) = stack.pop() {
        if !prefix.is_empty() {
            let word = Word::new(prefix.clone());
            if word.is_cyclically_reduced() {
                let len = translation_length(&m).map_err(|_| ZsError::NonHyperbolicElement {
                    trace: m.trace(),
                    word: Some(word.to_string()),
                })?;
                report.words_checked += 1;
                if len < report.min_length {
                    report.min_length = len;
                    report.min_word = word.to_string();
                }
                if prefix.len() <= 2 {
                    report.min_length_per_letter =
                        report.min_length_per_letter.min(len / prefix.len() as f64);
                }
            }
        }
        if prefix.len() == depth {
            continue;
        }
        for &l in letters.iter().rev() {
            if prefix.last() == Some(&l.inverse()) {
                continue;
            }
            let mut next = prefix.clone();
            next.push(l);
            stack.push((next, m.compose(&s.letter_matrix(l))));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_length() {
        let m = MoebiusMap::diagonal(0.5f64.exp());
        assert!((translation_length(&m).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parabolic_is_rejected() {
        let m = MoebiusMap::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            translation_length(&m),
            Err(ZsError::NonHyperbolicElement { .. })
        ));
    }

    #[test]
    fn determinant_is_normalized() {
        let m = MoebiusMap::new(2.0, 1.0, 3.0, 4.0).unwrap();
        assert!((m.det() - 1.0).abs() < 1e-12);
        assert!(MoebiusMap::new(1.0, 2.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn cylinder_model() {
        let c = build_cylinder(1.0).unwrap();
        assert_eq!(c.chi(), 0);
        assert_eq!(c.funnels(), 2);
        let g = c.generators()[0];
        assert!((g.a - 0.5f64.exp()).abs() < 1e-15);
        assert!((g.d - (-0.5f64).exp()).abs() < 1e-15);
        let c2 = build_cylinder(2.0).unwrap();
        assert!((translation_length(&c2.generators()[0]).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(build_cylinder(0.0), Err(ZsError::InvalidLength(_))));
    }

    #[test]
    fn pants_traces() {
        let p = build_pants(PantsSpec::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        let expected = 2.0 * 0.5f64.cosh();
        assert!((expected - 2.255252).abs() < 1e-6);
        for w in p.boundary_words() {
            let tr = p.word_matrix(w).trace().abs();
            assert!((tr - expected).abs() < 1e-12, "{w}: {tr}");
        }
        assert_eq!(p.chi(), -1);
        assert!(PantsSpec::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn pants_boundary_round_trip() {
        let p = build_pants(PantsSpec::new(1.0, 2.0, 3.0).unwrap()).unwrap();
        let got: Vec<f64> = p
            .boundary_words()
            .iter()
            .map(|w| p.word_length(w).unwrap())
            .collect();
        for (g, e) in got.iter().zip([1.0, 2.0, 3.0]) {
            assert!((g - e).abs() < 1e-10);
        }
    }

    #[test]
    fn validation_reports_minimum() {
        let c = build_cylinder(1.5).unwrap();
        let r = validate_presentation(&c, 5).unwrap();
        assert!((r.min_length - 1.5).abs() < 1e-14);
        assert_eq!(r.words_checked, 10);

        let p = build_pants(PantsSpec::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        let r = validate_presentation(&p, 4).unwrap();
        assert!((r.min_length - 1.0).abs() < 1e-12);
        assert!((r.min_length_per_letter - 0.5).abs() < 1e-12);
    }

    #[test]
    fn validation_names_parabolic_word() {
        let a = MoebiusMap::diagonal(2.0);
        let parabolic = MoebiusMap::new(1.0, 1.0, 0.0, 1.0).unwrap();
        // Bypass the constructor's generator check to reach the word scan.
        let s = SurfaceModel {
            generators: vec![a, parabolic],
            genus: 0,
            funnels: 3,
            boundary_lengths: vec![1.0; 3],
            boundary_words: vec![],
            chi: -1,
            kind: SurfaceKind::Generators,
        };
        match validate_presentation(&s, 2) {
            Err(ZsError::NonHyperbolicElement { word: Some(w), .. }) => {
                assert!(w.contains('b') || w.contains('B'))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generator_signature_must_match_rank() {
        let a = MoebiusMap::diagonal(2.0);
        assert!(SurfaceModel::from_generators(vec![a], 0, 3, vec![1.0; 3]).is_err());
        assert!(SurfaceModel::from_generators(vec![a], 0, 2, vec![1.0; 2]).is_ok());
    }
}
