//! File-to-file versions of the individual stages, one per CLI subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use crate::align::{fit_static_to_encoder, induce_clwe, InterpolationConfig, LinearMap};
use crate::contrast::{train, AdapterState, TrainConfig, TrainOutcome};
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::io::{load_space, load_text_embeddings, read_map, write_map, write_space_binary, LoadStats};
use crate::lexicon::{filter_to_vocab, load_lexicon, load_scored_pairs, LexiconRole};
use crate::retrieve::{mine_hard_negatives, NegativeTable, SimilarityConfig};
use crate::space::EmbeddingSpace;

use super::{load_normalized, sweep_csv, sweep_lambda, SweepTask, Views};

fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn adapted(path: &Path, adapter: Option<&Path>) -> Result<EmbeddingSpace> {
    let space = load_normalized(path)?;
    match adapter {
        Some(a) => AdapterState::from_map(&read_map(a)?)?.apply_to_space(&space),
        None => Ok(space),
    }
}

/// Text vectors to a normalized binary cache.
pub fn ingest(vec: &Path, max_words: Option<usize>, out: &Path) -> Result<(EmbeddingSpace, LoadStats)> {
    let (space, stats) = load_text_embeddings(vec, max_words)?;
    let space = space.l2_normalize()?;
    write_space_binary(&space, out)?;
    Ok((space, stats))
}

/// Procrustes alignment of two static spaces. Writes `clwe_map.lxrw`,
/// `static_src.mapped.lxrw` and `static_tgt.lxrw` into `out_dir`.
pub fn induce(src: &Path, tgt: &Path, lexicon: &Path, out_dir: &Path) -> Result<LinearMap> {
    let (lex, _) = load_lexicon(lexicon, LexiconRole::Train)?;
    let (mapped, tgt_space, map) = induce_clwe(&load_space(src)?, &load_space(tgt)?, &lex)?;
    create_dir(out_dir)?;
    write_map(&map, out_dir.join("clwe_map.lxrw"))?;
    write_space_binary(&mapped, out_dir.join("static_src.mapped.lxrw"))?;
    write_space_binary(&tgt_space, out_dir.join("static_tgt.lxrw"))?;
    Ok(map)
}

/// Hard negatives for every in-vocabulary dictionary pair.
pub fn mine(src: &Path, tgt: &Path, lexicon: &Path, n_negatives: usize, sim: SimilarityConfig, out: &Path) -> Result<NegativeTable> {
    let (src, tgt) = (load_normalized(src)?, load_normalized(tgt)?);
    let (lex, _) = load_lexicon(lexicon, LexiconRole::Train)?;
    let (lex, dropped) = filter_to_vocab(&lex, &src, &tgt);
    if dropped > 0 {
        log::warn!("{dropped} dictionary pairs are out of vocabulary");
    }
    let table = mine_hard_negatives(&lex, &src, &tgt, n_negatives, sim)?;
    table.write_tsv(&src, &tgt, out)?;
    Ok(table)
}

/// Adapter fine-tuning. Writes `adapter.lxrw` and `train_loss.csv`.
pub fn train_adapter(
    src: &Path,
    tgt: &Path,
    lexicon: &Path,
    negatives: &Path,
    cfg: &TrainConfig,
    out_dir: &Path,
) -> Result<TrainOutcome> {
    let (src, tgt) = (load_normalized(src)?, load_normalized(tgt)?);
    let (lex, _) = load_lexicon(lexicon, LexiconRole::Train)?;
    let (lex, _) = filter_to_vocab(&lex, &src, &tgt);
    let table = NegativeTable::read_tsv(negatives, &src, &tgt)?;
    let outcome = train(&lex, &src, &tgt, &table, cfg)?;
    create_dir(out_dir)?;
    write_map(&outcome.adapter.to_map(), out_dir.join("adapter.lxrw"))?;
    write_text(&out_dir.join("train_loss.csv"), &outcome.loss_log_csv())?;
    Ok(outcome)
}

/// Input files for commands that combine the static and encoder views.
#[derive(Debug, Clone)]
pub struct ViewPaths {
    pub static_src: PathBuf,
    pub static_tgt: PathBuf,
    pub encoder_src: PathBuf,
    pub encoder_tgt: PathBuf,
    /// Adapter checkpoint applied to both encoder spaces.
    pub adapter: Option<PathBuf>,
}

struct LoadedViews {
    static_src: EmbeddingSpace,
    static_tgt: EmbeddingSpace,
    encoder_src: EmbeddingSpace,
    encoder_tgt: EmbeddingSpace,
}

impl ViewPaths {
    fn load(&self) -> Result<LoadedViews> {
        let adapter = self.adapter.as_deref();
        Ok(LoadedViews {
            static_src: load_normalized(&self.static_src)?,
            static_tgt: load_normalized(&self.static_tgt)?,
            encoder_src: adapted(&self.encoder_src, adapter)?,
            encoder_tgt: adapted(&self.encoder_tgt, adapter)?,
        })
    }
}

impl LoadedViews {
    fn with_map<'a>(&'a self, map: &'a LinearMap) -> Views<'a> {
        Views {
            static_src: &self.static_src,
            static_tgt: &self.static_tgt,
            encoder_src: &self.encoder_src,
            encoder_tgt: &self.encoder_tgt,
            map,
        }
    }
}

/// The shared static-to-encoder map, fitted on every dictionary word.
pub fn fit_map(views: &ViewPaths, lexicon: &Path, out: &Path) -> Result<LinearMap> {
    let v = views.load()?;
    let (lex, _) = load_lexicon(lexicon, LexiconRole::Train)?;
    let map = fit_static_to_encoder(&v.static_src, &v.static_tgt, &v.encoder_src, &v.encoder_tgt, &lex)?;
    write_map(&map, out)?;
    Ok(map)
}

/// Blends one language's static and encoder spaces into a binary space.
pub fn interpolate(
    static_space: &Path,
    encoder_space: &Path,
    map: &Path,
    adapter: Option<&Path>,
    lambda: f64,
    out: &Path,
) -> Result<EmbeddingSpace> {
    let cfg = InterpolationConfig::new(lambda)?;
    let space = crate::align::interpolate_space(
        &load_normalized(static_space)?,
        &adapted(encoder_space, adapter)?,
        &read_map(map)?,
        cfg,
    )?;
    write_space_binary(&space, out)?;
    Ok(space)
}

fn write_report(report: &EvalReport, out: &Path, items: Option<&Path>) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    report.write(out, items)
}

pub fn eval_bli(
    src: &Path,
    tgt: &Path,
    test: &Path,
    ks: &[usize],
    sim: SimilarityConfig,
    out: &Path,
    items: Option<&Path>,
) -> Result<EvalReport> {
    let (lex, _) = load_lexicon(test, LexiconRole::Test)?;
    let report = crate::eval::bli_evaluate(&load_space(src)?, &load_space(tgt)?, &lex, ks, sim)?;
    write_report(&report, out, items)?;
    Ok(report)
}

pub fn eval_xlsim(src: &Path, tgt: &Path, gold: &Path, out: &Path, items: Option<&Path>) -> Result<EvalReport> {
    let gold = load_scored_pairs(gold)?;
    let report = crate::eval::xlsim_evaluate(&load_space(src)?, &load_space(tgt)?, &gold)?;
    write_report(&report, out, items)?;
    Ok(report)
}

/// Which gold data a sweep scores against.
#[derive(Debug, Clone)]
pub enum SweepGold {
    Bli(PathBuf),
    Xlsim(PathBuf),
}

/// Evaluates a list of interpolation weights and writes `lambda,metric` CSV.
pub fn sweep(
    views: &ViewPaths,
    map: &Path,
    gold: &SweepGold,
    lambdas: &[f64],
    sim: SimilarityConfig,
    out: &Path,
) -> Result<Vec<(f64, f64)>> {
    if lambdas.is_empty() {
        return Err(Error::Invalid("empty lambda list".into()));
    }
    let v = views.load()?;
    let map = read_map(map)?;
    let views = v.with_map(&map);
    let rows = match gold {
        SweepGold::Bli(path) => {
            let (lex, _) = load_lexicon(path, LexiconRole::Test)?;
            let task = SweepTask::Bli { test: &lex, ks: &[1] };
            let rows = sweep_lambda(views, lambdas, &task, sim)?;
            write_text(out, &sweep_csv(task.metric_name(), &rows))?;
            rows
        }
        SweepGold::Xlsim(path) => {
            let pairs = load_scored_pairs(path)?;
            let task = SweepTask::Xlsim { gold: &pairs };
            let rows = sweep_lambda(views, lambdas, &task, sim)?;
            write_text(out, &sweep_csv(task.metric_name(), &rows))?;
            rows
        }
    };
    Ok(rows)
}
