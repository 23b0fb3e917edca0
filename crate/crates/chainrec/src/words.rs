//! Semigroup elements as words over a finite generator list.
//!
//! A word `[i1, i2, ..., in]` denotes the composition `g_i1 ∘ g_i2 ∘ ... ∘ g_in`,
//! applied rightmost index first; the empty word is the identity. Words carry
//! per-generator occurrence counts, which drive the designated-generator
//! bookkeeping of the attractor machinery.

use crate::expr::{eval_box, eval_point, MapExpr};
use crate::interval::IntervalBox2;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use thiserror::Error;

pub const MAX_WORD_LEN: usize = 10;
pub const MAX_ENUMERATION: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum WordsError {
    #[error("generator list must be nonempty")]
    NoGenerators,
    #[error("generator index {0} out of range for {1} generators")]
    BadIndex(usize, usize),
    #[error("word enumeration budget exceeded: max_len {max_len} over {gens} generators")]
    BudgetExceeded { max_len: usize, gens: usize },
    #[error("abelian claim failed: generators {0} and {1} do not commute at sampled points")]
    AbelianClaimFailed(usize, usize),
}

/// A finitely generated system of maps on the plane.
#[derive(Clone, Debug)]
pub struct GeneratorSystem {
    generators: Vec<MapExpr>,
    abelian_claimed: bool,
}

impl GeneratorSystem {
    pub fn new(generators: Vec<MapExpr>) -> Result<GeneratorSystem, WordsError> {
        if generators.is_empty() {
            return Err(WordsError::NoGenerators);
        }
        Ok(GeneratorSystem {
            generators,
            abelian_claimed: false,
        })
    }

    /// Mark the system abelian; validated against the sampled commutation
    /// check over the given region.
    pub fn claim_abelian(
        mut self,
        bounds: &IntervalBox2,
        n_samples: usize,
    ) -> Result<GeneratorSystem, WordsError> {
        if let Some((i, j)) = first_noncommuting_pair(&self, bounds, n_samples) {
            return Err(WordsError::AbelianClaimFailed(i, j));
        }
        self.abelian_claimed = true;
        Ok(self)
    }

    pub fn abelian_claimed(&self) -> bool {
        self.abelian_claimed
    }

    pub fn generators(&self) -> &[MapExpr] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor rejects empty generator lists
    }
}

/// A finite composition of generators; the empty word is the identity
/// element adjoined to the semigroup.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    indices: Vec<usize>,
    counts: Vec<usize>,
}

impl Word {
    pub fn identity(gen_count: usize) -> Word {
        Word {
            indices: Vec::new(),
            counts: vec![0; gen_count],
        }
    }

    pub fn new(indices: Vec<usize>, gen_count: usize) -> Result<Word, WordsError> {
        let mut counts = vec![0; gen_count];
        for &i in &indices {
            if i >= gen_count {
                return Err(WordsError::BadIndex(i, gen_count));
            }
            counts[i] += 1;
        }
        Ok(Word { indices, counts })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn count_of(&self, generator: usize) -> usize {
        self.counts.get(generator).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_identity(&self) -> bool {
        self.indices.is_empty()
    }

    /// Concatenation `self · other`: as a map, `other` acts first.
    pub fn concat(&self, other: &Word) -> Word {
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        Word { indices, counts }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

/// All words of length `0..=max_len` in length-then-lexicographic order; the
/// first entry is the identity.
pub fn enumerate_words(sys: &GeneratorSystem, max_len: usize) -> Result<Vec<Word>, WordsError> {
    let gens = sys.len();
    if max_len > MAX_WORD_LEN
        || (gens as u128)
            .checked_pow(max_len as u32)
            .is_none_or(|n| n > MAX_ENUMERATION)
    {
        return Err(WordsError::BudgetExceeded { max_len, gens });
    }
    let mut words = vec![Word::identity(gens)];
    let mut prev_level: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 1..=max_len {
        let mut level = Vec::with_capacity(prev_level.len() * gens);
        for w in &prev_level {
            for g in 0..gens {
                let mut next = w.clone();
                next.push(g);
                level.push(next);
            }
        }
        for w in &level {
            words.push(Word::new(w.clone(), gens)?);
        }
        prev_level = level;
    }
    Ok(words)
}

/// Apply a word to a point: identity returns the point, otherwise nested
/// evaluation with the rightmost index first.
pub fn apply_word(sys: &GeneratorSystem, w: &Word, p: Complex64) -> Complex64 {
    let mut cur = p;
    for &i in w.indices.iter().rev() {
        cur = eval_point(&sys.generators[i], cur);
    }
    cur
}

/// Sound enclosure of the image of a box under the composed map.
pub fn word_box_image(sys: &GeneratorSystem, w: &Word, b: &IntervalBox2) -> IntervalBox2 {
    let mut cur = *b;
    for &i in w.indices.iter().rev() {
        cur = eval_box(&sys.generators[i], &cur);
    }
    cur
}

fn first_noncommuting_pair(
    sys: &GeneratorSystem,
    bounds: &IntervalBox2,
    n_samples: usize,
) -> Option<(usize, usize)> {
    let samples = sample_points(bounds, n_samples);
    for i in 0..sys.len() {
        for j in (i + 1)..sys.len() {
            let gi = &sys.generators[i];
            let gj = &sys.generators[j];
            for &p in &samples {
                let a = eval_point(gi, eval_point(gj, p));
                let b = eval_point(gj, eval_point(gi, p));
                if (a - b).norm() > 1e-9 {
                    return Some((i, j));
                }
            }
        }
    }
    None
}

/// Sampled commutation check: true iff all generator pairs commute to within
/// 1e-9 at every sampled point of the region. Evidence, not proof.
pub fn check_abelian_sampled(
    sys: &GeneratorSystem,
    bounds: &IntervalBox2,
    n_samples: usize,
) -> bool {
    assert!(n_samples >= 1, "need at least one sample");
    first_noncommuting_pair(sys, bounds, n_samples).is_none()
}

fn sample_points(bounds: &IntervalBox2, n: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ab1e);
    (0..n)
        .map(|_| {
            Complex64::new(
                rng.random_range(bounds.re_lo..=bounds.re_hi),
                rng.random_range(bounds.im_lo..=bounds.im_hi),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map_expr;

    fn sys(exprs: &[&str]) -> GeneratorSystem {
        GeneratorSystem::new(exprs.iter().map(|s| parse_map_expr(s).unwrap()).collect()).unwrap()
    }

    fn unit_bounds() -> IntervalBox2 {
        IntervalBox2::new(-1.0, 1.0, -1.0, 1.0).unwrap()
    }

    #[test]
    fn enumeration_counts_and_order() {
        let s2 = sys(&["z^2", "z^3"]);
        let w1 = enumerate_words(&s2, 1).unwrap();
        assert_eq!(w1.len(), 3);
        assert!(w1[0].is_identity());
        assert_eq!(w1[1].indices(), &[0]);
        assert_eq!(w1[2].indices(), &[1]);

        let w3 = enumerate_words(&s2, 3).unwrap();
        assert_eq!(w3.len(), 15);
        // length-then-lex
        for pair in w3.windows(2) {
            let key = |w: &Word| (w.len(), w.indices().to_vec());
            assert!(key(&pair[0]) < key(&pair[1]));
        }

        let s3 = sys(&["z^2", "z^3", "z"]);
        assert_eq!(enumerate_words(&s3, 2).unwrap().len(), 13);
    }

    #[test]
    fn enumeration_budget() {
        let s = sys(&["z^2", "z^3"]);
        assert!(matches!(
            enumerate_words(&s, 11),
            Err(WordsError::BudgetExceeded { .. })
        ));
        let many = sys(&["z", "z", "z", "z", "z", "z", "z", "z", "z", "z", "z"]);
        assert!(enumerate_words(&many, 6).is_err()); // 11^6 > 10^6
    }

    #[test]
    fn apply_word_examples() {
        let s = sys(&["z^2", "z^3"]);
        let p = Complex64::new(0.9, 0.0);
        let id = Word::identity(2);
        assert_eq!(apply_word(&s, &id, p), p);

        // (0,1) means g0 ∘ g1: cube first, then square = z^6.
        let w = Word::new(vec![0, 1], 2).unwrap();
        let got = apply_word(&s, &w, p);
        assert!((got.re - 0.9f64.powi(6)).abs() < 1e-12);
        assert!(got.im.abs() < 1e-12);

        // power maps commute
        let w2 = Word::new(vec![1, 0], 2).unwrap();
        let a = apply_word(&s, &w, Complex64::new(0.3, 0.4));
        let b = apply_word(&s, &w2, Complex64::new(0.3, 0.4));
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn concat_is_composition_and_counts_add() {
        let s = sys(&["z^2", "z + 0.1"]);
        let w1 = Word::new(vec![0, 1], 2).unwrap();
        let w2 = Word::new(vec![1, 1, 0], 2).unwrap();
        let w = w1.concat(&w2);
        assert_eq!(w.indices(), &[0, 1, 1, 1, 0]);
        assert_eq!(w.counts(), &[2, 3]);
        let p = Complex64::new(0.2, -0.1);
        let composed = apply_word(&s, &w, p);
        let nested = apply_word(&s, &w1, apply_word(&s, &w2, p));
        assert!((composed - nested).norm() < 1e-12);
    }

    #[test]
    fn word_box_image_identity_and_samples() {
        let s = sys(&["z^2"]);
        let b = IntervalBox2::new(0.5, 0.6, 0.0, 0.0).unwrap();
        let id = Word::identity(1);
        assert_eq!(word_box_image(&s, &id, &b), b);

        // (0,0) = z^4 on [0.5,0.6]: image must cover [0.0625, 0.1296]
        let w = Word::new(vec![0, 0], 1).unwrap();
        let img = word_box_image(&s, &w, &b);
        assert!(img.re_lo <= 0.0625 && img.re_hi >= 0.1296);

        for k in 0..1000 {
            let t = k as f64 / 999.0;
            let p = Complex64::new(0.5 + 0.1 * t, 0.0);
            assert!(img.contains(apply_word(&s, &w, p)));
        }
    }

    #[test]
    fn abelian_check_examples() {
        let b = unit_bounds();
        assert!(check_abelian_sampled(&sys(&["z^2", "z^3"]), &b, 1000));
        assert!(!check_abelian_sampled(&sys(&["z^2", "z + 0.1"]), &b, 1000));
        assert!(check_abelian_sampled(&sys(&["z^2"]), &b, 10));
    }

    #[test]
    fn abelian_claim_validates() {
        let b = unit_bounds();
        assert!(sys(&["z^2", "z^3"]).claim_abelian(&b, 500).is_ok());
        assert_eq!(
            sys(&["z^2", "z + 0.1"]).claim_abelian(&b, 500).unwrap_err(),
            WordsError::AbelianClaimFailed(0, 1)
        );
    }

    #[test]
    fn bad_word_index_rejected() {
        assert!(matches!(
            Word::new(vec![0, 2], 2),
            Err(WordsError::BadIndex(2, 2))
        ));
    }
}
