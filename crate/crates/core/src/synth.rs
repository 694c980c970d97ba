//! Seeded synthetic bilingual data with a known ground truth.
//!
//! Every word `i` has a latent unit vector `z_i`. The static views are
//! `z_i + noise` for the source language and `(z_i + noise) R` for the
//! target, with `R` a random orthogonal matrix. The encoder views embed
//! `z_i` through a random row-orthonormal map into a wider space, add
//! isotropic noise, and add a shared nuisance direction whose strength
//! jitters per word and per view. Word `s{i}` translates to `t{i}`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lexicon::{LexiconRole, TranslationLexicon};
use crate::space::EmbeddingSpace;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_words: usize,
    pub static_dim: usize,
    pub encoder_dim: usize,
    /// Per-coordinate Gaussian noise on each static view.
    pub static_noise: f64,
    /// Per-coordinate Gaussian noise on each encoder view.
    pub encoder_noise: f64,
    /// Weight of the nuisance direction in the encoder views.
    pub nuisance_scale: f64,
    /// Mean nuisance strength shared by all words.
    pub nuisance_offset: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_words: 2000,
            static_dim: 8,
            encoder_dim: 128,
            static_noise: 0.15,
            encoder_noise: 0.05,
            nuisance_scale: 0.5,
            nuisance_offset: 3.0,
            n_train: 500,
            n_test: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticBilingual {
    pub static_src: EmbeddingSpace,
    pub static_tgt: EmbeddingSpace,
    pub encoder_src: EmbeddingSpace,
    pub encoder_tgt: EmbeddingSpace,
    pub train: TranslationLexicon,
    pub test: TranslationLexicon,
    /// The orthogonal matrix relating the two static views.
    pub rotation: DMatrix<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// A random `n x n` orthogonal matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    gaussian(rng, n, n).qr().q()
}

fn to_space(prefix: char, m: &DMatrix<f64>) -> Result<EmbeddingSpace> {
    let rows = (0..m.nrows())
        .map(|i| {
            let row: Vec<f32> = m.row(i).iter().map(|&v| v as f32).collect();
            (format!("{prefix}{i}"), row)
        })
        .collect();
    EmbeddingSpace::from_rows(rows)
}

fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticBilingual> {
    let (n, d1, d2) = (cfg.n_words, cfg.static_dim, cfg.encoder_dim);
    if d1 == 0 || d2 <= d1 {
        return Err(Error::Invalid(format!("need 0 < static_dim < encoder_dim, got {d1} and {d2}")));
    }
    if cfg.n_train + cfg.n_test > n {
        return Err(Error::Invalid(format!(
            "{} train + {} test pairs exceed {n} words",
            cfg.n_train, cfg.n_test
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut z = gaussian(&mut rng, n, d1);
    normalize_rows(&mut z);

    let rotation = random_orthogonal(&mut rng, d1);
    let static_src = &z + gaussian(&mut rng, n, d1) * cfg.static_noise;
    let static_tgt = (&z + gaussian(&mut rng, n, d1) * cfg.static_noise) * &rotation;

    let basis = random_orthogonal(&mut rng, d2);
    let embed = basis.rows(0, d1).into_owned();
    let nuisance = basis.row(d1).into_owned();
    let signal = &z * &embed;
    let mut encoder_view = || {
        let strength = gaussian(&mut rng, n, 1).add_scalar(cfg.nuisance_offset) * cfg.nuisance_scale;
        &signal + gaussian(&mut rng, n, d2) * cfg.encoder_noise + strength * &nuisance
    };
    let encoder_src = encoder_view();
    let encoder_tgt = encoder_view();

    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let pairs = |range: &[usize]| range.iter().map(|i| (format!("s{i}"), format!("t{i}"))).collect::<Vec<_>>();
    let train = TranslationLexicon::new(pairs(&ids[..cfg.n_train]), LexiconRole::Train);
    let test = TranslationLexicon::new(pairs(&ids[cfg.n_train..cfg.n_train + cfg.n_test]), LexiconRole::Test);

    Ok(SyntheticBilingual {
        static_src: to_space('s', &static_src)?,
        static_tgt: to_space('t', &static_tgt)?,
        encoder_src: to_space('s', &encoder_src)?.l2_normalize()?,
        encoder_tgt: to_space('t', &encoder_tgt)?.l2_normalize()?,
        train,
        test,
        rotation,
    })
}
