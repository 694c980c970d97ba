//! Align two static embedding spaces with an orthogonal map learned from a
//! seed dictionary, then check how well held-out translations are retrieved.
//!
//! cargo run --release --example procrustes_alignment

use lexalign::synth::{generate, SyntheticConfig};
use lexalign::{bli_evaluate, induce_clwe, SimilarityConfig};

fn main() -> lexalign::Result<()> {
    for noise in [0.0, 0.05, 0.15] {
        let data = generate(&SyntheticConfig {
            static_noise: noise,
            ..SyntheticConfig::default()
        })?;
        let (mapped_src, tgt, map) = induce_clwe(&data.static_src, &data.static_tgt, &data.train)?;
        let report = bli_evaluate(&mapped_src, &tgt, &data.test, &[1, 5], SimilarityConfig::default())?;

        let recovery = (map.matrix() - &data.rotation).abs().max();
        println!(
            "noise {noise:<4}  |W W^T - I| = {:.1e}  |W - R| = {recovery:.3}  P@1 = {:.3}  P@5 = {:.3}",
            map.orthonormality_error(),
            report.metric("P@1").unwrap(),
            report.metric("P@5").unwrap(),
        );
    }
    Ok(())
}
