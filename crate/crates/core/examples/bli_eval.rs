//! Bilingual lexicon induction on a hand-made pair of spaces: precision@k,
//! MRR, and how out-of-vocabulary words are counted.
//!
//! cargo run --example bli_eval

use lexalign::eval::bli_evaluate;
use lexalign::{EmbeddingSpace, LexiconRole, SimilarityConfig, TranslationLexicon};

fn main() -> lexalign::Result<()> {
    let en = EmbeddingSpace::from_rows(vec![
        ("dog", vec![1.0, 0.1, 0.0]),
        ("cat", vec![0.9, 0.4, 0.0]),
        ("house", vec![0.0, 0.2, 1.0]),
    ])?;
    let de = EmbeddingSpace::from_rows(vec![
        ("hund", vec![1.0, 0.0, 0.1]),
        ("katze", vec![0.8, 0.5, 0.0]),
        ("haus", vec![0.1, 0.1, 1.0]),
        ("gebaeude", vec![0.0, 0.3, 0.9]),
    ])?;
    let test = TranslationLexicon::new(
        [("dog", "hund"), ("cat", "katze"), ("house", "haus"), ("house", "gebaeude"), ("tree", "baum")],
        LexiconRole::Test,
    );

    let report = bli_evaluate(&en, &de, &test, &[1, 2], SimilarityConfig::default())?;
    print!("{}", report.metrics_tsv());
    println!("--");
    print!("{}", report.items_tsv());
    Ok(())
}
