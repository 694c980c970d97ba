//! Multiple-negatives ranking loss over scaled cosine similarities.
//!
//! For a batch of `B` pairs `(w_i, v_i)` with hard negatives `n_ik`:
//!
//! ```text
//! L = - sum_i S(w_i, v_i)
//!     + sum_i log sum_{j != i} exp S(w_i, v_j)
//!     + sum_i log sum_k exp S(w_i, n_ik)
//! ```
//!
//! with `S(a, b) = C cos(a, b)`. An empty inner sum contributes nothing.

use crate::error::{Error, Result};
use crate::retrieve::SimilarityConfig;
use crate::space::unit;

/// Gradients of the loss with respect to the unit vectors it was given.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct UnitGradients {
    pub sources: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub negatives: Vec<Vec<Vec<f64>>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(out: &mut [f64], alpha: f64, x: &[f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += alpha * v;
    }
}

/// Stable `log sum exp(scores)` and the matching softmax weights.
fn log_sum_exp(scores: &[f64]) -> (f64, Vec<f64>) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    (max + total.ln(), exps.into_iter().map(|e| e / total).collect())
}

/// Loss (and optionally its gradient) for unit-norm inputs.
pub(crate) fn mneg_on_units(
    sources: &[Vec<f64>],
    targets: &[Vec<f64>],
    negatives: &[Vec<Vec<f64>>],
    scale: f64,
    with_grad: bool,
) -> (f64, Option<UnitGradients>) {
    let b = sources.len();
    let mut loss = 0.0;
    let mut grads = with_grad.then(|| UnitGradients {
        sources: sources.iter().map(|s| vec![0.0; s.len()]).collect(),
        targets: targets.iter().map(|t| vec![0.0; t.len()]).collect(),
        negatives: negatives
            .iter()
            .map(|ns| ns.iter().map(|n| vec![0.0; n.len()]).collect())
            .collect(),
    });

    for i in 0..b {
        let w = &sources[i];
        loss -= scale * dot(w, &targets[i]);
        if let Some(g) = grads.as_mut() {
            axpy(&mut g.sources[i], -scale, &targets[i]);
            axpy(&mut g.targets[i], -scale, w);
        }

        if b > 1 {
            let others: Vec<usize> = (0..b).filter(|&j| j != i).collect();
            let scores: Vec<f64> = others.iter().map(|&j| scale * dot(w, &targets[j])).collect();
            let (lse, probs) = log_sum_exp(&scores);
            loss += lse;
            if let Some(g) = grads.as_mut() {
                for (&j, p) in others.iter().zip(&probs) {
                    axpy(&mut g.sources[i], scale * p, &targets[j]);
                    axpy(&mut g.targets[j], scale * p, w);
                }
            }
        }

        let negs = &negatives[i];
        if !negs.is_empty() {
            let scores: Vec<f64> = negs.iter().map(|n| scale * dot(w, n)).collect();
            let (lse, probs) = log_sum_exp(&scores);
            loss += lse;
            if let Some(g) = grads.as_mut() {
                for (k, p) in probs.iter().enumerate() {
                    axpy(&mut g.sources[i], scale * p, &negs[k]);
                    axpy(&mut g.negatives[i][k], scale * p, w);
                }
            }
        }
    }
    (loss, grads)
}

/// The loss for already-adapted vectors. `hard_negatives[i]` lists the
/// negatives of pair `i` and may be empty.
pub fn mneg_loss(
    pairs: &[(Vec<f64>, Vec<f64>)],
    hard_negatives: &[Vec<Vec<f64>>],
    cfg: SimilarityConfig,
) -> Result<f64> {
    if pairs.len() != hard_negatives.len() {
        return Err(Error::Invalid(format!(
            "{} pairs but {} negative lists",
            pairs.len(),
            hard_negatives.len()
        )));
    }
    let norm = |v: &Vec<f64>| unit(v).ok_or(Error::ZeroInput);
    let sources = pairs.iter().map(|(w, _)| norm(w)).collect::<Result<Vec<_>>>()?;
    let targets = pairs.iter().map(|(_, v)| norm(v)).collect::<Result<Vec<_>>>()?;
    let negatives = hard_negatives
        .iter()
        .map(|ns| ns.iter().map(norm).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let dim = sources.first().map_or(0, Vec::len);
    let all_same = targets
        .iter()
        .chain(&sources)
        .chain(negatives.iter().flatten())
        .all(|v| v.len() == dim);
    if !all_same {
        return Err(Error::Invalid("vectors of different dimensions in one batch".into()));
    }
    Ok(mneg_on_units(&sources, &targets, &negatives, cfg.scale(), false).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SimilarityConfig {
        SimilarityConfig::default()
    }

    #[test]
    fn single_pair_with_orthogonal_negative() {
        let l = mneg_loss(&[(vec![1.0, 0.0], vec![1.0, 0.0])], &[vec![vec![0.0, 1.0]]], cfg()).unwrap();
        assert_eq!(l, -20.0);
    }

    #[test]
    fn orthogonal_batch_without_negatives() {
        let pairs = [(vec![1.0, 0.0], vec![1.0, 0.0]), (vec![0.0, 1.0], vec![0.0, 1.0])];
        let l = mneg_loss(&pairs, &[vec![], vec![]], cfg()).unwrap();
        assert_eq!(l, -40.0);
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert!(mneg_loss(&[(vec![0.0, 0.0], vec![1.0, 0.0])], &[vec![]], cfg()).is_err());
        assert!(mneg_loss(&[(vec![1.0, 0.0], vec![1.0, 0.0])], &[vec![vec![0.0, 0.0]]], cfg()).is_err());
        assert!(mneg_loss(&[(vec![1.0, 0.0], vec![1.0, 0.0])], &[], cfg()).is_err());
    }

    #[test]
    fn lse_is_stable_for_large_scores() {
        let (v, p) = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-9);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn unit_gradient_matches_finite_differences() {
        // Gradient with respect to the (unconstrained) input coordinates.
        let s = vec![vec![0.3, -0.2, 0.9], vec![0.5, 0.5, -0.1]];
        let t = vec![vec![0.1, 0.7, 0.2], vec![-0.4, 0.3, 0.6]];
        let n = vec![vec![vec![0.2, 0.2, 0.2]], vec![vec![-0.3, 0.1, 0.0], vec![0.9, -0.5, 0.1]]];
        let (_, g) = mneg_on_units(&s, &t, &n, 20.0, true);
        let g = g.unwrap();
        let h = 1e-6;
        for i in 0..2 {
            for d in 0..3 {
                let mut sp = s.clone();
                sp[i][d] += h;
                let mut sm = s.clone();
                sm[i][d] -= h;
                let fd = (mneg_on_units(&sp, &t, &n, 20.0, false).0 - mneg_on_units(&sm, &t, &n, 20.0, false).0) / (2.0 * h);
                assert!((fd - g.sources[i][d]).abs() < 1e-5, "{fd} vs {}", g.sources[i][d]);
            }
        }
    }
}
