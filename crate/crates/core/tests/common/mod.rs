#![allow(dead_code)]

use std::fs;
use std::path::Path;

use lexalign::io::write_space_binary;
use lexalign::pipeline::config::EvalTask;
use lexalign::pipeline::RunConfig;
use lexalign::synth::{generate, SyntheticBilingual, SyntheticConfig};
use lexalign::TranslationLexicon;

pub fn write_lexicon(lex: &TranslationLexicon, path: &Path) {
    let text: String = lex.iter().map(|(s, t)| format!("{s}\t{t}\n")).collect();
    fs::write(path, text).unwrap();
}

/// Writes the synthetic pair into `dir` and returns a config running every
/// stage on it.
pub fn synthetic_run(dir: &Path, cfg: &SyntheticConfig, lambdas: &[f64]) -> (SyntheticBilingual, RunConfig) {
    let data = generate(cfg).unwrap();
    write_space_binary(&data.static_src, dir.join("src.static.lxrw")).unwrap();
    write_space_binary(&data.static_tgt, dir.join("tgt.static.lxrw")).unwrap();
    write_space_binary(&data.encoder_src, dir.join("src.enc.lxrw")).unwrap();
    write_space_binary(&data.encoder_tgt, dir.join("tgt.enc.lxrw")).unwrap();
    write_lexicon(&data.train, &dir.join("train.tsv"));
    write_lexicon(&data.test, &dir.join("test.tsv"));

    let mut run = RunConfig {
        seed: cfg.seed,
        ..RunConfig::default()
    };
    run.paths.static_src = Some(dir.join("src.static.lxrw"));
    run.paths.static_tgt = Some(dir.join("tgt.static.lxrw"));
    run.paths.encoder_src = Some(dir.join("src.enc.lxrw"));
    run.paths.encoder_tgt = Some(dir.join("tgt.enc.lxrw"));
    run.paths.train_lexicon = Some(dir.join("train.tsv"));
    run.paths.test_lexicon = Some(dir.join("test.tsv"));
    run.paths.out_dir = dir.join("out");
    run.stages.induce = true;
    run.stages.mine = true;
    run.stages.train = true;
    run.stages.interpolate = true;
    run.stages.eval = vec![EvalTask::Bli];
    run.interpolation.lambdas = lambdas.to_vec();
    run.eval.per_item = true;
    (data, run)
}

/// A smaller pair for tests that run the pipeline many times.
pub fn small_config(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        n_words: 600,
        encoder_dim: 32,
        n_train: 300,
        n_test: 100,
        seed,
        ..SyntheticConfig::default()
    }
}

/// Every regular file in `dir`, sorted by name, with its bytes.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}
