//! Bilingual lexicon induction and cross-lingual similarity evaluation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lexicon::{ScoredWordPairs, TranslationLexicon};
use crate::retrieve::{topk_many, SimilarityConfig};
use crate::space::{dot_f32, EmbeddingSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Bli,
    Xlsim,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemRecord {
    Bli {
        source: String,
        golds: Vec<String>,
        /// Top-ranked target, when the source word was retrievable.
        prediction: Option<String>,
        /// 1-based rank of the best gold within the retrieved list.
        best_rank: Option<usize>,
    },
    Xlsim {
        source: String,
        target: String,
        gold: f64,
        cosine: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    /// Metric name and value, in a fixed order.
    pub metrics: Vec<(String, f64)>,
    pub items: Vec<ItemRecord>,
    pub skipped_oov: usize,
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// `metric \t value` lines.
    pub fn metrics_tsv(&self) -> String {
        let mut out = String::new();
        for (name, value) in &self.metrics {
            writeln!(out, "{name}\t{value}").unwrap();
        }
        out
    }

    /// One line per evaluated item.
    pub fn items_tsv(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            match item {
                ItemRecord::Bli {
                    source,
                    golds,
                    prediction,
                    best_rank,
                } => {
                    let rank = best_rank.map_or("-".to_string(), |r| r.to_string());
                    writeln!(
                        out,
                        "{source}\t{}\t{}\t{rank}",
                        golds.join(","),
                        prediction.as_deref().unwrap_or("-")
                    )
                    .unwrap();
                }
                ItemRecord::Xlsim {
                    source,
                    target,
                    gold,
                    cosine,
                } => writeln!(out, "{source}\t{target}\t{gold}\t{cosine}").unwrap(),
            }
        }
        out
    }

    pub fn write(&self, metrics_path: impl AsRef<Path>, items_path: Option<&Path>) -> Result<()> {
        let p = metrics_path.as_ref();
        std::fs::write(p, self.metrics_tsv()).map_err(|e| Error::io(p, e))?;
        if let Some(p) = items_path {
            std::fs::write(p, self.items_tsv()).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }
}

/// Precision@k for each `k` in `ks` and MRR, crediting a source word when
/// any of its gold targets is retrieved. Retrieval runs over the full target
/// vocabulary. Out-of-vocabulary source words count as misses; `P@k` is over
/// all source words, `P@k_invocab` only over the scorable ones.
pub fn bli_evaluate(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    test: &TranslationLexicon,
    ks: &[usize],
    cfg: SimilarityConfig,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Empty("test lexicon"));
    }
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let max_k = match ks.last() {
        Some(&k) if ks[0] > 0 => k,
        _ => return Err(Error::Invalid("ks must be non-empty and positive".into())),
    };

    struct Query<'a> {
        source: &'a str,
        golds: Vec<&'a str>,
        row: Option<&'a [f32]>,
        gold_ids: Vec<usize>,
    }
    let queries: Vec<Query> = test
        .grouped()
        .into_iter()
        .map(|(source, golds)| {
            let gold_ids = golds.iter().filter_map(|g| tgt.id(g)).collect();
            Query {
                source,
                golds,
                row: src.lookup(source),
                gold_ids,
            }
        })
        .collect();

    let scorable: Vec<&[f32]> = queries
        .iter()
        .filter(|q| !q.gold_ids.is_empty())
        .filter_map(|q| q.row)
        .collect();
    let mut results = topk_many(&scorable, tgt, max_k, cfg)?.into_iter();

    let mut hits_at = vec![0usize; ks.len()];
    let mut reciprocal = 0.0;
    let mut skipped_oov = 0;
    let mut gold_oov = 0;
    let mut scored = 0;
    let mut items = Vec::with_capacity(queries.len());
    for q in &queries {
        let mut prediction = None;
        let mut best_rank = None;
        if q.row.is_none() {
            skipped_oov += 1;
        } else if q.gold_ids.is_empty() {
            gold_oov += 1;
        } else {
            scored += 1;
            let hits = results.next().expect("one result per scorable query");
            prediction = hits.first().map(|h| tgt.vocab().word(h.id).to_string());
            best_rank = hits.iter().position(|h| q.gold_ids.contains(&h.id)).map(|p| p + 1);
            if let Some(rank) = best_rank {
                reciprocal += 1.0 / rank as f64;
                for (count, &k) in hits_at.iter_mut().zip(&ks) {
                    if rank <= k {
                        *count += 1;
                    }
                }
            }
        }
        items.push(ItemRecord::Bli {
            source: q.source.to_string(),
            golds: q.golds.iter().map(|g| g.to_string()).collect(),
            prediction,
            best_rank,
        });
    }

    let n = queries.len() as f64;
    let mut metrics = Vec::new();
    for (count, k) in hits_at.iter().zip(&ks) {
        metrics.push((format!("P@{k}"), *count as f64 / n));
    }
    metrics.push(("MRR".to_string(), reciprocal / n));
    if scored > 0 {
        for (count, k) in hits_at.iter().zip(&ks) {
            metrics.push((format!("P@{k}_invocab"), *count as f64 / scored as f64));
        }
    }
    metrics.push(("n_sources".to_string(), n));
    metrics.push(("n_scored".to_string(), scored as f64));
    metrics.push(("skipped_oov".to_string(), skipped_oov as f64));
    metrics.push(("gold_oov".to_string(), gold_oov as f64));
    Ok(EvalReport {
        task: Task::Bli,
        metrics,
        items,
        skipped_oov,
    })
}

/// 1-based ranks with ties sharing the average of their positions.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Invalid(format!("{} vs {} values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Invalid("correlation needs at least two values".into()));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::Invalid("NaN in correlation input".into()));
    }
    pearson(&fractional_ranks(xs), &fractional_ranks(ys)).ok_or(Error::UndefinedCorrelation)
}

/// Spearman correlation between gold scores and plain cosine similarities.
/// Pairs with an out-of-vocabulary word are dropped and counted.
pub fn xlsim_evaluate(src: &EmbeddingSpace, tgt: &EmbeddingSpace, gold: &ScoredWordPairs) -> Result<EvalReport> {
    let mut items = Vec::new();
    let mut skipped_oov = 0;
    for (s, t, g) in gold.triples() {
        let (Some(a), Some(b)) = (src.id(s), tgt.id(t)) else {
            skipped_oov += 1;
            continue;
        };
        let denom = src.norm(a) * tgt.norm(b);
        if denom == 0.0 {
            return Err(Error::ZeroVector(if src.norm(a) == 0.0 { s.clone() } else { t.clone() }));
        }
        items.push(ItemRecord::Xlsim {
            source: s.clone(),
            target: t.clone(),
            gold: *g,
            cosine: dot_f32(src.row(a), tgt.row(b)) / denom,
        });
    }
    if items.len() < 2 {
        return Err(Error::Invalid(format!("only {} scorable XLSIM pairs", items.len())));
    }
    let (golds, model): (Vec<f64>, Vec<f64>) = items
        .iter()
        .map(|i| match i {
            ItemRecord::Xlsim { gold, cosine, .. } => (*gold, *cosine),
            ItemRecord::Bli { .. } => unreachable!(),
        })
        .unzip();
    let rho = spearman(&model, &golds)?;
    let metrics = vec![
        ("spearman".to_string(), rho),
        ("n_pairs".to_string(), items.len() as f64),
        ("skipped_oov".to_string(), skipped_oov as f64),
    ];
    Ok(EvalReport {
        task: Task::Xlsim,
        metrics,
        items,
        skipped_oov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::LexiconRole;

    fn lex(pairs: &[(&str, &str)]) -> TranslationLexicon {
        TranslationLexicon::new(pairs.iter().copied(), LexiconRole::Test)
    }

    fn space(rows: &[(&str, [f32; 2])]) -> EmbeddingSpace {
        EmbeddingSpace::from_rows(rows.iter().map(|(w, r)| (*w, r.to_vec())).collect()).unwrap()
    }

    #[test]
    fn self_retrieval_is_perfect() {
        let s = space(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0]), ("c", [-1.0, -1.0])]);
        let r = bli_evaluate(&s, &s, &lex(&[("a", "a"), ("b", "b"), ("c", "c")]), &[1, 5], SimilarityConfig::default())
            .unwrap();
        assert_eq!(r.metric("P@1"), Some(1.0));
        assert_eq!(r.metric("P@5"), Some(1.0));
        assert_eq!(r.metric("MRR"), Some(1.0));
    }

    #[test]
    fn closer_distractor_fails_at_one_but_credits_at_five() {
        let src = space(&[("q", [1.0, 0.0])]);
        let tgt = space(&[
            ("gold", [0.8, 0.6]),
            ("decoy", [0.9, 0.1]),
            ("far1", [0.0, 1.0]),
            ("far2", [-1.0, 0.0]),
            ("far3", [0.0, -1.0]),
        ]);
        let r = bli_evaluate(&src, &tgt, &lex(&[("q", "gold")]), &[1, 5], SimilarityConfig::default()).unwrap();
        assert_eq!(r.metric("P@1"), Some(0.0));
        assert_eq!(r.metric("P@5"), Some(1.0));
        assert_eq!(r.metric("MRR"), Some(0.5));
    }

    #[test]
    fn oov_handling() {
        let s = space(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        // "zz" missing on the source side; "b"'s only gold missing on the target side.
        let r = bli_evaluate(
            &s,
            &s,
            &lex(&[("a", "a"), ("zz", "a"), ("b", "nope")]),
            &[1],
            SimilarityConfig::default(),
        )
        .unwrap();
        assert_eq!(r.skipped_oov, 1);
        assert_eq!(r.metric("gold_oov"), Some(1.0));
        assert_eq!(r.metric("P@1"), Some(1.0 / 3.0));
        assert_eq!(r.metric("P@1_invocab"), Some(1.0));
    }

    #[test]
    fn any_gold_credits_once() {
        let s = space(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let r = bli_evaluate(&s, &s, &lex(&[("a", "b"), ("a", "a")]), &[1], SimilarityConfig::default()).unwrap();
        assert_eq!(r.metric("n_sources"), Some(1.0));
        assert_eq!(r.metric("P@1"), Some(1.0));
    }

    #[test]
    fn bli_rejects_empty_test() {
        let s = space(&[("a", [1.0, 0.0])]);
        assert!(bli_evaluate(&s, &s, &lex(&[]), &[1], SimilarityConfig::default()).is_err());
        assert!(bli_evaluate(&s, &s, &lex(&[("a", "a")]), &[], SimilarityConfig::default()).is_err());
    }

    #[test]
    fn spearman_basic_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(), -1.0);
        assert!(matches!(spearman(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::UndefinedCorrelation)));
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_with_ties() {
        // ranks x: 1, 2.5, 2.5, 4 ; ranks y: 1, 3, 2, 4
        // deviations x: -1.5, 0, 0, 1.5 ; y: -1.5, 0.5, -0.5, 1.5
        // cov = 4.5, var x = 4.5, var y = 5  =>  rho = 4.5 / sqrt(22.5)
        let rho = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 4.5 / 22.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(fractional_ranks(&[5.0, 1.0, 5.0, 5.0]), vec![3.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn xlsim_identity_and_reverse() {
        let src = space(&[("a", [1.0, 0.0]), ("b", [1.0, 1.0]), ("c", [0.0, 1.0])]);
        let tgt = space(&[("x", [1.0, 0.0])]);
        let gold = ScoredWordPairs::new(vec![("a", "x", 3.0), ("b", "x", 2.0), ("c", "x", 1.0), ("zz", "x", 0.0)]).unwrap();
        let r = xlsim_evaluate(&src, &tgt, &gold).unwrap();
        assert_eq!(r.metric("spearman"), Some(1.0));
        assert_eq!(r.skipped_oov, 1);
        let rev = ScoredWordPairs::new(vec![("a", "x", 1.0), ("b", "x", 2.0), ("c", "x", 3.0)]).unwrap();
        assert_eq!(xlsim_evaluate(&src, &tgt, &rev).unwrap().metric("spearman"), Some(-1.0));
        let tiny = ScoredWordPairs::new(vec![("a", "x", 1.0)]).unwrap();
        assert!(xlsim_evaluate(&src, &tgt, &tiny).is_err());
    }

    #[test]
    fn report_tsv() {
        let s = space(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let r = bli_evaluate(&s, &s, &lex(&[("a", "a"), ("b", "a")]), &[1], SimilarityConfig::default()).unwrap();
        assert!(r.metrics_tsv().starts_with("P@1\t0.5\nMRR\t0.5\n"));
        assert_eq!(r.items_tsv(), "a\ta\ta\t1\nb\ta\tb\t-\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn spearman_symmetric_and_monotone_invariant(
                pairs in proptest::collection::vec((0i32..6, -50.0f64..50.0), 3..30)
            ) {
                let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
                let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                if let Ok(r) = spearman(&xs, &ys) {
                    prop_assert!((-1.0..=1.0).contains(&r));
                    prop_assert!((spearman(&ys, &xs).unwrap() - r).abs() <= 1e-12);
                    let tx: Vec<f64> = xs.iter().map(|x| x.exp() + 3.0 * x).collect();
                    prop_assert!((spearman(&tx, &ys).unwrap() - r).abs() <= 1e-12);
                }
            }
        }
    }
}
