//! Blend mapped static vectors with encoder vectors and sweep the mixing
//! weight: 0 is purely static, 1 purely encoder.
//!
//! cargo run --release --example lambda_sweep

use lexalign::align::fit_static_to_encoder;
use lexalign::pipeline::{sweep_csv, sweep_lambda, SweepTask, Views};
use lexalign::synth::{generate, SyntheticConfig};
use lexalign::{induce_clwe, SimilarityConfig};

fn main() -> lexalign::Result<()> {
    let data = generate(&SyntheticConfig::default())?;
    let (static_src, static_tgt, _) = induce_clwe(&data.static_src, &data.static_tgt, &data.train)?;
    let map = fit_static_to_encoder(&static_src, &static_tgt, &data.encoder_src, &data.encoder_tgt, &data.train)?;

    let views = Views {
        static_src: &static_src,
        static_tgt: &static_tgt,
        encoder_src: &data.encoder_src,
        encoder_tgt: &data.encoder_tgt,
        map: &map,
    };
    let lambdas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let task = SweepTask::Bli { test: &data.test, ks: &[1] };
    let rows = sweep_lambda(views, &lambdas, &task, SimilarityConfig::default())?;
    print!("{}", sweep_csv(task.metric_name(), &rows));
    Ok(())
}
