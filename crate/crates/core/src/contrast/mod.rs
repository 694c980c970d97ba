//! Contrastive fine-tuning of a shared linear adapter over frozen
//! type-level embeddings.
//!
//! The adapted vector of a word with base vector `x` is `unit(A x)`, where
//! `A` is one square matrix shared by both languages and initialised to the
//! identity. Training minimises the multiple-negatives ranking loss with
//! in-batch and precomputed hard negatives.

mod adamw;
mod loss;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use adamw::AdamW;
pub use loss::mneg_loss;

use crate::align::LinearMap;
use crate::error::{Error, Result};
use crate::lexicon::TranslationLexicon;
use crate::retrieve::{lookup_pairs, NegativeEntry, NegativeTable, SimilarityConfig};
use crate::space::EmbeddingSpace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub n_negatives: usize,
    pub scale: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            n_negatives: 10,
            scale: SimilarityConfig::DEFAULT_SCALE,
            epochs: 5,
            learning_rate: 2e-5,
            weight_decay: 0.01,
            seed: 0,
        }
    }
}

impl TrainConfig {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Invalid("learning rate must be positive and weight decay non-negative".into()));
        }
        SimilarityConfig::new(self.scale)?;
        Ok(())
    }

    pub fn similarity(&self) -> SimilarityConfig {
        SimilarityConfig::new(self.scale).expect("validated scale")
    }
}

/// The trainable adapter and its optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterState {
    matrix: DMatrix<f64>,
    first_moment: DMatrix<f64>,
    second_moment: DMatrix<f64>,
    steps: u64,
}

impl AdapterState {
    pub fn identity(dim: usize) -> Self {
        AdapterState {
            matrix: DMatrix::identity(dim, dim),
            first_moment: DMatrix::zeros(dim, dim),
            second_moment: DMatrix::zeros(dim, dim),
            steps: 0,
        }
    }

    /// Restores an adapter from a checkpointed map (optimizer moments reset).
    pub fn from_map(map: &LinearMap) -> Result<Self> {
        if map.src_dim() != map.dst_dim() {
            return Err(Error::Invalid("adapter must be square".into()));
        }
        let mut state = AdapterState::identity(map.src_dim());
        state.matrix = map.matrix().transpose();
        Ok(state)
    }

    /// The adapter as a row-vector map: `x -> x A^T = (A x)^T`.
    pub fn to_map(&self) -> LinearMap {
        LinearMap::general(self.matrix.transpose())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == DMatrix::identity(self.dim(), self.dim())
    }

    /// `unit(A x)`, or `None` when `A x` vanishes.
    pub fn adapt(&self, x: &[f32]) -> Option<Vec<f64>> {
        let x = DVector::from_iterator(x.len(), x.iter().map(|&v| v as f64));
        let z = &self.matrix * x;
        crate::space::unit(z.as_slice())
    }

    /// Adapted copy of a whole space (normalized).
    pub fn apply_to_space(&self, space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
        if space.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: space.dim(),
            });
        }
        if self.is_identity() && space.is_normalized() {
            return Ok(space.clone());
        }
        space
            .map_rows(self.dim(), |id, row| {
                self.adapt(row)
                    .ok_or_else(|| Error::ZeroVector(space.vocab().word(id).to_string()))
            })?
            .l2_normalize()
    }

    fn apply_gradient(&mut self, grad: &DMatrix<f64>, opt: &AdamW) {
        self.steps += 1;
        opt.step(
            self.matrix.as_mut_slice(),
            grad.as_slice(),
            self.first_moment.as_mut_slice(),
            self.second_moment.as_mut_slice(),
            self.steps,
        );
    }
}

/// Loss of one batch and its gradient with respect to the adapter matrix.
///
/// Every base vector (sources, gold targets, hard negatives) goes through
/// `z = A x`, `u = z / |z|`; the loss gradient `g` with respect to `u`
/// becomes `(g - (u.g) u) / |z|` with respect to `z`, and `dA` is the sum
/// of `dz x^T` over all vectors.
pub fn mneg_gradient(
    batch: &[NegativeEntry],
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    adapter: &AdapterState,
    cfg: SimilarityConfig,
) -> Result<(f64, DMatrix<f64>)> {
    let dim = adapter.dim();
    if src.dim() != dim || tgt.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: if src.dim() != dim { src.dim() } else { tgt.dim() },
        });
    }

    // Column layout: sources, then gold targets, then negatives pair by pair.
    let b = batch.len();
    let mut rows: Vec<&[f32]> = Vec::new();
    rows.extend(batch.iter().map(|e| src.row(e.src)));
    rows.extend(batch.iter().map(|e| tgt.row(e.gold)));
    for e in batch {
        rows.extend(e.negatives.iter().map(|&n| tgt.row(n)));
    }
    let base = DMatrix::from_fn(dim, rows.len(), |r, c| rows[c][r] as f64);
    let z = &adapter.matrix * &base;
    let norms: Vec<f64> = z.column_iter().map(|c| c.norm()).collect();
    if norms.contains(&0.0) {
        return Err(Error::ZeroInput);
    }
    let units: Vec<Vec<f64>> = z
        .column_iter()
        .zip(&norms)
        .map(|(c, n)| c.iter().map(|v| v / n).collect())
        .collect();

    let sources = &units[..b];
    let targets = &units[b..2 * b];
    let mut negatives = Vec::with_capacity(b);
    let mut offset = 2 * b;
    for e in batch {
        negatives.push(units[offset..offset + e.negatives.len()].to_vec());
        offset += e.negatives.len();
    }

    let (loss, grads) = loss::mneg_on_units(sources, targets, &negatives, cfg.scale(), true);
    let grads = grads.expect("gradient requested");
    let unit_grads: Vec<&Vec<f64>> = grads
        .sources
        .iter()
        .chain(&grads.targets)
        .chain(grads.negatives.iter().flatten())
        .collect();

    let mut dz = DMatrix::zeros(dim, units.len());
    dz.column_iter_mut().enumerate().for_each(|(c, mut col)| {
        let (u, g) = (&units[c], unit_grads[c]);
        let radial: f64 = u.iter().zip(g).map(|(a, b)| a * b).sum();
        for r in 0..dim {
            col[r] = (g[r] - radial * u[r]) / norms[c];
        }
    });
    Ok((loss, dz * base.transpose()))
}

/// Result of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub adapter: AdapterState,
    /// Mean per-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainOutcome {
    /// `epoch,mean_loss` CSV.
    pub fn loss_log_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss\n");
        for (i, l) in self.epoch_losses.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, l));
        }
        out
    }
}

/// Fine-tunes an identity-initialised adapter on the dictionary pairs.
///
/// `negatives` must have been mined for exactly this lexicon on the spaces
/// before any training. Pairs are reshuffled every epoch from `cfg.seed`;
/// the last short batch of an epoch is kept.
pub fn train(
    lex: &TranslationLexicon,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    negatives: &NegativeTable,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if lex.is_empty() {
        return Err(Error::Empty("training lexicon"));
    }
    if src.dim() != tgt.dim() {
        return Err(Error::Dimension {
            expected: src.dim(),
            got: tgt.dim(),
        });
    }
    let pairs = lookup_pairs(lex, src, tgt)?;
    if pairs.len() != negatives.len()
        || pairs
            .iter()
            .zip(negatives.entries())
            .any(|(&(s, g), e)| s != e.src || g != e.gold)
    {
        return Err(Error::Invalid("negative table does not match the lexicon".into()));
    }

    let sim = cfg.similarity();
    let opt = AdamW::new(cfg.learning_rate, cfg.weight_decay);
    let mut adapter = AdapterState::identity(src.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<NegativeEntry> = chunk.iter().map(|&i| negatives.entries()[i].clone()).collect();
            let (loss, grad) = mneg_gradient(&batch, src, tgt, &adapter, sim)?;
            adapter.apply_gradient(&grad, &opt);
            total += loss;
            batches += 1;
        }
        let mean = total / batches as f64;
        log::debug!("epoch {}: mean batch loss {mean}", epoch + 1);
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome { adapter, epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::LexiconRole;

    fn space(rows: &[(&str, [f32; 2])]) -> EmbeddingSpace {
        EmbeddingSpace::from_rows(rows.iter().map(|(w, r)| (*w, r.to_vec())).collect()).unwrap()
    }

    #[test]
    fn positive_term_is_stationary_at_identity() {
        let src = space(&[("a", [1.0, 0.0])]);
        let tgt = space(&[("x", [1.0, 0.0]), ("n", [0.0, 1.0])]);
        let batch = [NegativeEntry {
            src: 0,
            gold: 0,
            negatives: vec![],
        }];
        let (loss, g) =
            mneg_gradient(&batch, &src, &tgt, &AdapterState::identity(2), SimilarityConfig::default()).unwrap();
        assert_eq!(loss, -20.0);
        assert!(g.amax() < 1e-12);
    }

    #[test]
    fn positive_gradient_is_linear_in_scale() {
        let src = space(&[("a", [0.8, 0.3])]);
        let tgt = space(&[("x", [0.1, 0.9])]);
        let batch = [NegativeEntry {
            src: 0,
            gold: 0,
            negatives: vec![],
        }];
        let a = AdapterState::identity(2);
        let (_, g1) = mneg_gradient(&batch, &src, &tgt, &a, SimilarityConfig::new(20.0).unwrap()).unwrap();
        let (_, g2) = mneg_gradient(&batch, &src, &tgt, &a, SimilarityConfig::new(40.0).unwrap()).unwrap();
        assert!((g2 - g1 * 2.0).amax() < 1e-12);
    }

    #[test]
    fn zero_epochs_keep_identity() {
        let src = space(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let lex = TranslationLexicon::new([("a", "a"), ("b", "b")], LexiconRole::Train);
        let negs = NegativeTable::empty_for(&lex, &src, &src).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = train(&lex, &src, &src, &negs, &cfg).unwrap();
        assert!(out.adapter.is_identity());
        assert!(out.epoch_losses.is_empty());
    }

    #[test]
    fn rejects_empty_lexicon_and_mismatched_table() {
        let src = space(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let empty = TranslationLexicon::new(Vec::<(String, String)>::new(), LexiconRole::Train);
        let negs = NegativeTable::new(vec![], 0);
        assert!(matches!(
            train(&empty, &src, &src, &negs, &TrainConfig::default()),
            Err(Error::Empty(_))
        ));
        let lex = TranslationLexicon::new([("a", "b")], LexiconRole::Train);
        assert!(train(&lex, &src, &src, &negs, &TrainConfig::default()).is_err());
    }

    #[test]
    fn adapter_map_round_trip() {
        let mut a = AdapterState::identity(2);
        a.matrix[(0, 1)] = 0.5;
        let back = AdapterState::from_map(&a.to_map()).unwrap();
        assert_eq!(back.matrix(), a.matrix());
        let x = [1.0f32, 2.0];
        let via_map = crate::space::unit(&a.to_map().apply(&x)).unwrap();
        let direct = a.adapt(&x).unwrap();
        for (p, q) in via_map.iter().zip(&direct) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_log_format() {
        let out = TrainOutcome {
            adapter: AdapterState::identity(1),
            epoch_losses: vec![-1.5, -2.0],
        };
        assert_eq!(out.loss_log_csv(), "epoch,mean_loss\n1,-1.5\n2,-2\n");
    }
}
