//! Mine, for every dictionary pair, the target words closest to the source
//! word other than its translation.
//!
//! cargo run --release --example hard_negatives

use lexalign::synth::{generate, SyntheticConfig};
use lexalign::{mine_hard_negatives, SimilarityConfig};

fn main() -> lexalign::Result<()> {
    let data = generate(&SyntheticConfig::default())?;
    let (src, tgt) = (&data.encoder_src, &data.encoder_tgt);
    let table = mine_hard_negatives(&data.train, src, tgt, 5, SimilarityConfig::default())?;
    table.validate(tgt.len())?;

    for entry in table.entries().iter().take(5) {
        let negs: Vec<&str> = entry.negatives.iter().map(|&n| tgt.vocab().word(n)).collect();
        println!(
            "{} -> {}  negatives: {}",
            src.vocab().word(entry.src),
            tgt.vocab().word(entry.gold),
            negs.join(" ")
        );
    }
    println!("{} pairs, {} negatives each", table.len(), table.n_negatives());
    Ok(())
}
