//! Type-level embedding spaces: a vocabulary plus one `f32` row per word.
//!
//! Storage is 32-bit; every reduction (norms, dot products) accumulates in
//! `f64`. Spaces are immutable once built, so they can be shared across
//! rayon workers without synchronisation.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Maximum deviation of a row norm from 1.0 for a space to count as normalized.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-4;

/// Ordered list of unique words. Ids are dense, 0-based, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary from words that must all be distinct.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::new();
        for word in words {
            let word = word.into();
            if !vocab.insert(word.clone()) {
                return Err(Error::Invalid(format!("duplicate word {word:?}")));
            }
        }
        Ok(vocab)
    }

    /// Appends `word`; returns false (and changes nothing) if it is already present.
    pub fn insert(&mut self, word: String) -> bool {
        if self.index.contains_key(&word) {
            return false;
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        true
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A vocabulary and a `|V| x dim` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    vocab: Vocabulary,
    data: Vec<f32>,
    dim: usize,
    norms: Vec<f64>,
    normalized: bool,
}

impl EmbeddingSpace {
    /// Wraps a row-major matrix. The normalized flag starts out false.
    pub fn new(vocab: Vocabulary, data: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("embedding dimension must be positive".into()));
        }
        if data.len() != vocab.len() * dim {
            return Err(Error::Invalid(format!(
                "matrix holds {} values, expected {} rows x {dim}",
                data.len(),
                vocab.len()
            )));
        }
        let norms = data.chunks_exact(dim).map(norm_f32).collect();
        Ok(EmbeddingSpace {
            vocab,
            data,
            dim,
            norms,
            normalized: false,
        })
    }

    /// Convenience constructor from `(word, row)` pairs.
    pub fn from_rows<S: Into<String>>(rows: Vec<(S, Vec<f32>)>) -> Result<Self> {
        let dim = rows.first().map(|(_, r)| r.len()).unwrap_or(0);
        let mut vocab = Vocabulary::new();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (word, row) in rows {
            let word = word.into();
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: row.len(),
                });
            }
            if !vocab.insert(word.clone()) {
                return Err(Error::Invalid(format!("duplicate word {word:?}")));
            }
            data.extend_from_slice(&row);
        }
        EmbeddingSpace::new(vocab, data, dim)
    }

    /// Like [`EmbeddingSpace::new`], but marks the space normalized when
    /// every row already has unit norm.
    pub fn with_detected_normalization(vocab: Vocabulary, data: Vec<f32>, dim: usize) -> Result<Self> {
        let mut space = EmbeddingSpace::new(vocab, data, dim)?;
        space.normalized = !space.is_empty()
            && space
                .norms
                .iter()
                .all(|n| (n - 1.0).abs() <= UNIT_NORM_TOLERANCE);
        Ok(space)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, id: usize) -> &[f32] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    /// L2 norm of row `id`, computed in `f64` at construction.
    pub fn norm(&self, id: usize) -> f64 {
        self.norms[id]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.vocab.id(word)
    }

    /// Row of `word`, or `None` when the word is out of vocabulary.
    pub fn lookup(&self, word: &str) -> Option<&[f32]> {
        self.vocab.id(word).map(|id| self.row(id))
    }

    /// Divides every row by its L2 norm. Fails on the first all-zero row.
    pub fn l2_normalize(self) -> Result<Self> {
        if let Some(id) = self.norms.iter().position(|&n| n == 0.0) {
            return Err(Error::ZeroVector(self.vocab.word(id).to_string()));
        }
        let dim = self.dim;
        let mut data = self.data;
        data.par_chunks_mut(dim).for_each(|row| {
            let n = norm_f32(row);
            for x in row.iter_mut() {
                *x = (*x as f64 / n) as f32;
            }
        });
        let mut space = EmbeddingSpace::new(self.vocab, data, dim)?;
        space.normalized = true;
        Ok(space)
    }

    /// Builds a new space over the same vocabulary by transforming each row.
    /// `f` must return rows of length `out_dim`. Rows are processed in
    /// parallel; each row's output depends only on that row.
    pub fn map_rows<F>(&self, out_dim: usize, f: F) -> Result<EmbeddingSpace>
    where
        F: Fn(usize, &[f32]) -> Result<Vec<f64>> + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..self.len())
            .into_par_iter()
            .map(|id| f(id, self.row(id)))
            .collect::<Result<_>>()?;
        let mut data = Vec::with_capacity(self.len() * out_dim);
        for row in rows {
            if row.len() != out_dim {
                return Err(Error::Dimension {
                    expected: out_dim,
                    got: row.len(),
                });
            }
            data.extend(row.into_iter().map(|x| x as f32));
        }
        EmbeddingSpace::new(self.vocab.clone(), data, out_dim)
    }
}

pub(crate) fn norm_f32(row: &[f32]) -> f64 {
    row.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

pub(crate) fn dot_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// `v / ||v||` in `f64`; `None` for the zero vector.
pub fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> EmbeddingSpace {
        EmbeddingSpace::from_rows(vec![
            ("a", vec![1.0, 0.0, 0.0]),
            ("b", vec![0.0, 1.0, 0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn lookup_present_and_absent() {
        let s = toy();
        assert_eq!(s.lookup("a"), Some(&[1.0f32, 0.0, 0.0][..]));
        assert_eq!(s.lookup("zzz"), None);
    }

    #[test]
    fn normalize_three_four_five() {
        let s = EmbeddingSpace::from_rows(vec![("w", vec![3.0, 4.0])])
            .unwrap()
            .l2_normalize()
            .unwrap();
        assert!(s.is_normalized());
        assert_eq!(s.lookup("w").unwrap(), &[0.6, 0.8]);
    }

    #[test]
    fn normalize_keeps_unit_rows() {
        let s = toy().l2_normalize().unwrap();
        assert_eq!(s.row(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_zero_row() {
        let s = EmbeddingSpace::from_rows(vec![("x", vec![1.0, 1.0]), ("w", vec![0.0, 0.0])]).unwrap();
        let err = s.l2_normalize().unwrap_err();
        assert_eq!(err.to_string(), "zero vector for word w");
    }

    #[test]
    fn vocabulary_rejects_duplicates() {
        assert!(Vocabulary::from_words(["a", "b", "a"]).is_err());
        let v = Vocabulary::from_words(["a", "b"]).unwrap();
        assert_eq!(v.id("b"), Some(1));
        assert_eq!(v.word(0), "a");
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let vocab = Vocabulary::from_words(["a"]).unwrap();
        assert!(EmbeddingSpace::new(vocab.clone(), vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(EmbeddingSpace::new(vocab, vec![], 0).is_err());
    }

    #[test]
    fn detects_normalization() {
        let t = toy();
        let again = EmbeddingSpace::with_detected_normalization(t.vocab().clone(), t.data().to_vec(), t.dim()).unwrap();
        assert!(again.is_normalized());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalize_is_idempotent(rows in proptest::collection::vec(
                proptest::collection::vec(0.1f32..10.0, 4), 1..20)) {
                let named: Vec<_> = rows.into_iter().enumerate().map(|(i, r)| (format!("w{i}"), r)).collect();
                let once = EmbeddingSpace::from_rows(named).unwrap().l2_normalize().unwrap();
                let twice = once.clone().l2_normalize().unwrap();
                for (a, b) in once.data().iter().zip(twice.data()) {
                    prop_assert!((a - b).abs() <= 1e-6);
                }
                for id in 0..once.len() {
                    prop_assert!((once.norm(id) - 1.0).abs() <= UNIT_NORM_TOLERANCE);
                }
            }
        }
    }
}
