//! Write a synthetic language pair to disk, describe a run in TOML and
//! execute every stage: alignment, mining, adapter training, the
//! static-to-encoder map, interpolation and evaluation.
//!
//! cargo run --release --example full_pipeline [out_dir]

use std::fs;
use std::path::PathBuf;

use lexalign::io::{write_space_binary, write_text_embeddings};
use lexalign::pipeline::{run, RunConfig};
use lexalign::synth::{generate, SyntheticConfig};

fn main() -> lexalign::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("lexalign-demo"));
    fs::create_dir_all(&dir).expect("create output directory");

    let data = generate(&SyntheticConfig::default())?;
    write_text_embeddings(&data.static_src, dir.join("src.static.vec"))?;
    write_text_embeddings(&data.static_tgt, dir.join("tgt.static.vec"))?;
    write_space_binary(&data.encoder_src, dir.join("src.enc.lxrw"))?;
    write_space_binary(&data.encoder_tgt, dir.join("tgt.enc.lxrw"))?;
    let lexicon = |lex: &lexalign::TranslationLexicon| lex.iter().map(|(s, t)| format!("{s}\t{t}\n")).collect::<String>();
    fs::write(dir.join("train.tsv"), lexicon(&data.train)).expect("write lexicon");
    fs::write(dir.join("test.tsv"), lexicon(&data.test)).expect("write lexicon");

    let config = r#"
seed = 0

[paths]
static_src = "src.static.vec"
static_tgt = "tgt.static.vec"
encoder_src = "src.enc.lxrw"
encoder_tgt = "tgt.enc.lxrw"
train_lexicon = "train.tsv"
test_lexicon = "test.tsv"
out_dir = "run"

[stages]
induce = true
mine = true
train = true
interpolate = true
eval = ["bli"]

[interpolation]
lambdas = [0.0, 0.3, 0.5, 1.0]
"#;
    let config_path = dir.join("run.toml");
    fs::write(&config_path, config).expect("write config");

    let summary = run(&RunConfig::load(&config_path)?)?;
    for (name, report) in &summary.reports {
        println!("{name:<20} P@1 = {:.3}", report.metric("P@1").unwrap());
    }
    println!("artifacts in {}", summary.out_dir.display());
    Ok(())
}
