//! Cross-lingual word similarity: Spearman correlation between human-style
//! scores and cosine similarity across two spaces.
//!
//! cargo run --release --example xlsim

use lexalign::synth::{generate, SyntheticConfig};
use lexalign::{induce_clwe, spearman, xlsim_evaluate, ScoredWordPairs};

fn main() -> lexalign::Result<()> {
    let data = generate(&SyntheticConfig::default())?;
    let (src, tgt, _) = induce_clwe(&data.static_src, &data.static_tgt, &data.train)?;

    // Gold scores: the true similarity of the underlying concepts, rounded
    // to a 0-6 scale the way annotators would.
    let mut triples = Vec::new();
    for i in 0..300 {
        let (a, b) = (i, (i * 7 + 3) % 2000);
        let sa = data.static_src.row(a);
        let sb = data.static_src.row(b);
        let cos: f64 = sa.iter().zip(sb).map(|(x, y)| (x * y) as f64).sum::<f64>()
            / (data.static_src.norm(a) * data.static_src.norm(b));
        triples.push((format!("s{a}"), format!("t{b}"), (3.0 * (cos + 1.0)).round()));
    }
    let gold = ScoredWordPairs::new(triples)?;
    let report = xlsim_evaluate(&src, &tgt, &gold)?;
    print!("{}", report.metrics_tsv());

    println!("ties share ranks: rho = {}", spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0])?);
    Ok(())
}
