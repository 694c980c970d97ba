//! Fine-tune a linear adapter on top of fixed encoder word vectors with the
//! multiple-negatives ranking loss and compare retrieval before and after.
//!
//! cargo run --release --example contrastive_training

use lexalign::synth::{generate, SyntheticConfig};
use lexalign::{bli_evaluate, mine_hard_negatives, train, SimilarityConfig, TrainConfig};

fn main() -> lexalign::Result<()> {
    let data = generate(&SyntheticConfig::default())?;
    let (src, tgt) = (&data.encoder_src, &data.encoder_tgt);
    let cfg = TrainConfig::default();

    let negatives = mine_hard_negatives(&data.train, src, tgt, cfg.n_negatives, cfg.similarity())?;
    let outcome = train(&data.train, src, tgt, &negatives, &cfg)?;
    print!("{}", outcome.loss_log_csv());

    let sim = SimilarityConfig::default();
    let before = bli_evaluate(src, tgt, &data.test, &[1], sim)?;
    let adapted_src = outcome.adapter.apply_to_space(src)?;
    let adapted_tgt = outcome.adapter.apply_to_space(tgt)?;
    let after = bli_evaluate(&adapted_src, &adapted_tgt, &data.test, &[1], sim)?;
    println!(
        "held-out P@1: {:.3} -> {:.3} after {} steps",
        before.metric("P@1").unwrap(),
        after.metric("P@1").unwrap(),
        outcome.adapter.steps()
    );
    Ok(())
}
