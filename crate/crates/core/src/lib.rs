//! Cross-lingual lexical alignment toolkit.
//!
//! Static word embeddings are aligned across two languages with an
//! orthogonal Procrustes map, multilingual encoder word vectors are
//! fine-tuned with a contrastive adapter, and the two are blended by
//! linear interpolation. Results are measured with bilingual lexicon
//! induction (precision@k, MRR) and cross-lingual word similarity
//! (Spearman correlation).

pub mod align;
pub mod contrast;
pub mod error;
pub mod eval;
pub mod io;
pub mod lexicon;
pub mod retrieve;
pub mod pipeline;
pub mod space;
pub mod synth;

pub use align::{induce_clwe, interpolate_space, solve_procrustes, InterpolationConfig, LinearMap};
pub use contrast::{train, AdapterState, TrainConfig};
pub use error::{Error, Result};
pub use eval::{bli_evaluate, spearman, xlsim_evaluate, EvalReport};
pub use lexicon::{LexiconRole, ScoredWordPairs, TranslationLexicon};
pub use retrieve::{mine_hard_negatives, topk, NegativeTable, SimilarityConfig};
pub use space::{EmbeddingSpace, Vocabulary};
