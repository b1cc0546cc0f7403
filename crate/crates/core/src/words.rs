//! Reduced words in a free group and their conjugacy-class canonical forms.

use std::fmt;

/// Generator `i` is encoded as `2i`, its inverse as `2i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u8);

impl Letter {
    pub fn generator(index: usize) -> Self {
        Letter((2 * index) as u8)
    }

    pub fn inverse_of(index: usize) -> Self {
        Letter((2 * index + 1) as u8)
    }

    pub fn index(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn inverse(self) -> Self {
        Letter(self.0 ^ 1)
    }

    fn symbol(self) -> char {
        let base = if self.is_inverse() { b'A' } else { b'a' };
        (base + self.index() as u8) as char
    }
}

/// A word over the generators. Not necessarily reduced.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && match (self.0.first(), self.0.last()) {
                (Some(f), Some(l)) => self.0.len() == 1 || *f != l.inverse(),
                _ => true,
            }
    }

    /// Free reduction followed by cyclic reduction.
    pub fn cyclic_reduction(&self) -> Word {
        let mut stack: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if stack.last() == Some(&l.inverse()) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        let (mut lo, mut hi) = (0, stack.len());
        while hi - lo >= 2 && stack[lo] == stack[hi - 1].inverse() {
            lo += 1;
            hi -= 1;
        }
        Word(stack[lo..hi].to_vec())
    }

    /// Lexicographically minimal cyclic rotation.
    pub fn min_rotation(&self) -> Word {
        let n = self.0.len();
        if n == 0 {
            return self.clone();
        }
        let mut best = 0;
        for start in 1..n {
            let ahead = (0..n)
                .map(|i| self.0[(start + i) % n].cmp(&self.0[(best + i) % n]))
                .find(|o| o.is_ne());
            if ahead == Some(std::cmp::Ordering::Less) {
                best = start;
            }
        }
        Word((0..n).map(|i| self.0[(best + i) % n]).collect())
    }

    /// Canonical representative of the unoriented conjugacy class: the smaller
    /// of the minimal rotations of the word and of its inverse. The flag is
    /// true when the class coincides with its inverse class.
    pub fn unoriented_canonical(&self) -> (Word, bool) {
        let reduced = self.cyclic_reduction();
        let fwd = reduced.min_rotation();
        let bwd = reduced.inverse().min_rotation();
        let self_inverse = fwd == bwd;
        (fwd.min(bwd), self_inverse)
    }

    /// Smallest `d` dividing the length such that the word is a power of its
    /// first `d` letters.
    pub fn root_length(&self) -> usize {
        let n = self.0.len();
        (1..=n)
            .filter(|d| n % d == 0)
            .find(|&d| (d..n).all(|i| self.0[i] == self.0[i - d]))
            .unwrap_or(n)
    }

    /// A cyclically reduced word is primitive iff it is not a proper power.
    pub fn is_primitive(&self) -> bool {
        !self.0.is_empty() && self.root_length() == self.0.len()
    }

    pub fn parse(s: &str) -> Option<Word> {
        s.chars()
            .map(|c| {
                if c.is_ascii_lowercase() {
                    Some(Letter::generator((c as u8 - b'a') as usize))
                } else if c.is_ascii_uppercase() {
                    Some(Letter::inverse_of((c as u8 - b'A') as usize))
                } else {
                    None
                }
            })
            .collect::<Option<Vec<_>>>()
            .map(Word)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}
