//! Exact scaled-cosine retrieval and hard-negative mining.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lexicon::TranslationLexicon;
use crate::space::{dot_f32, norm_f32, EmbeddingSpace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityConfig {
    scale: f64,
}

impl SimilarityConfig {
    pub const DEFAULT_SCALE: f64 = 20.0;

    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Invalid(format!("similarity scale must be positive, got {scale}")));
        }
        Ok(SimilarityConfig { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            scale: Self::DEFAULT_SCALE,
        }
    }
}

/// `C * cos(u, v)`.
pub fn scaled_cosine(u: &[f64], v: &[f64], cfg: SimilarityConfig) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            got: v.len(),
        });
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroInput);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(cfg.scale * dot / (nu * nv))
}

/// A retrieved target word and its scaled-cosine score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub id: usize,
    pub score: f64,
}

// Ordered so that the heap's maximum is the worst kept candidate:
// lower score is worse, and on equal scores the higher id is worse.
#[derive(PartialEq)]
struct Worst(Hit);

impl Eq for Worst {}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .score
            .total_cmp(&self.0.score)
            .then(self.0.id.cmp(&other.0.id))
    }
}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `k` highest-scoring rows of `space` not in `exclude`, best first.
/// Equal scores go to the lower id. Zero rows in `space` are never returned.
pub fn topk(
    query: &[f32],
    space: &EmbeddingSpace,
    k: usize,
    exclude: &HashSet<usize>,
    cfg: SimilarityConfig,
) -> Result<Vec<Hit>> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if query.len() != space.dim() {
        return Err(Error::Dimension {
            expected: space.dim(),
            got: query.len(),
        });
    }
    let qn = norm_f32(query);
    if qn == 0.0 {
        return Err(Error::ZeroInput);
    }
    let mut heap: BinaryHeap<Worst> = BinaryHeap::with_capacity(k + 1);
    for (id, row) in space.rows().enumerate() {
        let tn = space.norm(id);
        if tn == 0.0 || exclude.contains(&id) {
            continue;
        }
        let score = cfg.scale * dot_f32(query, row) / (qn * tn);
        let cand = Worst(Hit { id, score });
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().expect("heap is full") {
            heap.pop();
            heap.push(cand);
        }
    }
    Ok(heap.into_sorted_vec().into_iter().map(|w| w.0).collect())
}

/// Runs [`topk`] for many queries in parallel; output order follows `queries`.
pub fn topk_many(
    queries: &[&[f32]],
    space: &EmbeddingSpace,
    k: usize,
    cfg: SimilarityConfig,
) -> Result<Vec<Vec<Hit>>> {
    let none = HashSet::new();
    queries
        .par_iter()
        .map(|q| topk(q, space, k, &none, cfg))
        .collect()
}

/// Hard negatives for one dictionary pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeEntry {
    pub src: usize,
    pub gold: usize,
    pub negatives: Vec<usize>,
}

/// One entry per dictionary pair, in lexicon order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeTable {
    entries: Vec<NegativeEntry>,
    n_negatives: usize,
}

impl NegativeTable {
    pub fn new(entries: Vec<NegativeEntry>, n_negatives: usize) -> Self {
        NegativeTable { entries, n_negatives }
    }

    /// A table with no negatives for each pair of `lex`.
    pub fn empty_for(lex: &TranslationLexicon, src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> Result<Self> {
        let entries = lookup_pairs(lex, src, tgt)?
            .into_iter()
            .map(|(src, gold)| NegativeEntry {
                src,
                gold,
                negatives: Vec::new(),
            })
            .collect();
        Ok(NegativeTable::new(entries, 0))
    }

    pub fn entries(&self) -> &[NegativeEntry] {
        &self.entries
    }

    pub fn n_negatives(&self) -> usize {
        self.n_negatives
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks the table invariants against a target vocabulary of `target_len` words:
    /// gold-free, duplicate-free, and `min(N_n, |V_t| - 1)` negatives per entry.
    pub fn validate(&self, target_len: usize) -> Result<()> {
        let expected = self.n_negatives.min(target_len.saturating_sub(1));
        for (i, e) in self.entries.iter().enumerate() {
            let distinct: HashSet<_> = e.negatives.iter().collect();
            if distinct.len() != e.negatives.len() {
                return Err(Error::Invalid(format!("entry {i}: duplicate negatives")));
            }
            if distinct.contains(&e.gold) {
                return Err(Error::Invalid(format!("entry {i}: gold among negatives")));
            }
            if e.negatives.len() != expected {
                return Err(Error::Invalid(format!(
                    "entry {i}: {} negatives, expected {expected}",
                    e.negatives.len()
                )));
            }
        }
        Ok(())
    }

    /// `src_word \t gold_word \t neg1,neg2,...`
    pub fn write_tsv(&self, src: &EmbeddingSpace, tgt: &EmbeddingSpace, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for e in &self.entries {
            let negs: Vec<&str> = e.negatives.iter().map(|&n| tgt.vocab().word(n)).collect();
            writeln!(
                w,
                "{}\t{}\t{}",
                src.vocab().word(e.src),
                tgt.vocab().word(e.gold),
                negs.join(",")
            )
            .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: impl AsRef<Path>, src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        let mut n_negatives = 0;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [s, g, negs] = cols.as_slice() else {
                return Err(bad(format!("{} columns, expected 3", cols.len())));
            };
            let id_of = |space: &EmbeddingSpace, w: &str| space.id(w).ok_or_else(|| bad(format!("unknown word {w:?}")));
            let negatives = negs
                .split(',')
                .filter(|w| !w.is_empty())
                .map(|w| id_of(tgt, w))
                .collect::<Result<Vec<_>>>()?;
            n_negatives = n_negatives.max(negatives.len());
            entries.push(NegativeEntry {
                src: id_of(src, s)?,
                gold: id_of(tgt, g)?,
                negatives,
            });
        }
        Ok(NegativeTable::new(entries, n_negatives))
    }
}

pub(crate) fn lookup_pairs(
    lex: &TranslationLexicon,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
) -> Result<Vec<(usize, usize)>> {
    lex.iter()
        .map(|(s, t)| match (src.id(s), tgt.id(t)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Invalid(format!(
                "pair ({s}, {t}) is out of vocabulary; filter the lexicon first"
            ))),
        })
        .collect()
}

/// For every dictionary pair, the `n_negatives` target words closest to the
/// source word, excluding that pair's own gold translation. The spaces must
/// be the ones from before any fine-tuning.
pub fn mine_hard_negatives(
    lex: &TranslationLexicon,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    n_negatives: usize,
    cfg: SimilarityConfig,
) -> Result<NegativeTable> {
    let pairs = lookup_pairs(lex, src, tgt)?;
    let entries = pairs
        .par_iter()
        .map(|&(s, gold)| {
            let negatives = if n_negatives == 0 {
                Vec::new()
            } else {
                let exclude = HashSet::from([gold]);
                topk(src.row(s), tgt, n_negatives, &exclude, cfg)?
                    .into_iter()
                    .map(|h| h.id)
                    .collect()
            };
            Ok(NegativeEntry { src: s, gold, negatives })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NegativeTable::new(entries, n_negatives))
}
