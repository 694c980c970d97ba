//! End-to-end orchestration: alignment, mining, adapter training, the
//! static-to-encoder map, interpolation and evaluation.

pub mod commands;
pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::align::{fit_static_to_encoder, induce_clwe, interpolate_space, InterpolationConfig, LinearMap};
use crate::contrast::{train, AdapterState};
use crate::error::{Error, Result};
use crate::eval::{bli_evaluate, xlsim_evaluate, EvalReport};
use crate::io::{load_space, write_map};
use crate::lexicon::{filter_to_vocab, load_lexicon, load_scored_pairs, remove_test_leakage, LexiconRole, ScoredWordPairs, TranslationLexicon};
use crate::retrieve::{mine_hard_negatives, SimilarityConfig};
use crate::space::EmbeddingSpace;

pub use config::{EvalTask, RunConfig};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Loads a space in either format and scales every row to unit length.
pub fn load_normalized(path: impl AsRef<Path>) -> Result<EmbeddingSpace> {
    let space = load_space(path)?;
    if space.is_normalized() {
        Ok(space)
    } else {
        space.l2_normalize()
    }
}

/// File-name friendly rendering of an interpolation weight.
pub fn lambda_label(lambda: f64) -> String {
    format!("lambda{lambda}")
}

#[derive(Debug, Clone)]
pub enum SweepTask<'a> {
    Bli { test: &'a TranslationLexicon, ks: &'a [usize] },
    Xlsim { gold: &'a ScoredWordPairs },
}

impl SweepTask<'_> {
    pub fn metric_name(&self) -> &'static str {
        match self {
            SweepTask::Bli { .. } => "P@1",
            SweepTask::Xlsim { .. } => "spearman",
        }
    }

    pub fn evaluate(&self, src: &EmbeddingSpace, tgt: &EmbeddingSpace, sim: SimilarityConfig) -> Result<EvalReport> {
        match self {
            SweepTask::Bli { test, ks } => {
                let mut ks = ks.to_vec();
                if !ks.contains(&1) {
                    ks.push(1);
                }
                bli_evaluate(src, tgt, test, &ks, sim)
            }
            SweepTask::Xlsim { gold } => xlsim_evaluate(src, tgt, gold),
        }
    }
}

/// Static and encoder views of both languages plus the map between them.
#[derive(Debug, Clone, Copy)]
pub struct Views<'a> {
    pub static_src: &'a EmbeddingSpace,
    pub static_tgt: &'a EmbeddingSpace,
    pub encoder_src: &'a EmbeddingSpace,
    pub encoder_tgt: &'a EmbeddingSpace,
    pub map: &'a LinearMap,
}

impl Views<'_> {
    pub fn interpolate(&self, lambda: f64) -> Result<(EmbeddingSpace, EmbeddingSpace)> {
        let cfg = InterpolationConfig::new(lambda)?;
        Ok((
            interpolate_space(self.static_src, self.encoder_src, self.map, cfg)?,
            interpolate_space(self.static_tgt, self.encoder_tgt, self.map, cfg)?,
        ))
    }
}

/// Evaluates every weight in `lambdas`, returning `(lambda, metric)` rows
/// sorted by lambda.
pub fn sweep_lambda(views: Views, lambdas: &[f64], task: &SweepTask, sim: SimilarityConfig) -> Result<Vec<(f64, f64)>> {
    if lambdas.is_empty() {
        return Err(Error::Empty("lambda list"));
    }
    let mut sorted = lambdas.to_vec();
    for &l in &sorted {
        InterpolationConfig::new(l)?;
    }
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted
        .into_iter()
        .map(|l| {
            let (src, tgt) = views.interpolate(l)?;
            let report = task.evaluate(&src, &tgt, sim)?;
            Ok((l, report.metric(task.metric_name()).expect("metric present")))
        })
        .collect()
}

pub fn sweep_csv(metric: &str, rows: &[(f64, f64)]) -> String {
    let mut out = format!("lambda,{metric}\n");
    for (l, v) in rows {
        out.push_str(&format!("{l},{v}\n"));
    }
    out
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'static str,
    seed: u64,
    config: &'a RunConfig,
    counts: &'a BTreeMap<String, u64>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Report label (`bli_lambda0.3`, `xlsim_encoder`, ...) and report.
    pub reports: Vec<(String, EvalReport)>,
    pub counts: BTreeMap<String, u64>,
    pub out_dir: PathBuf,
}

impl RunSummary {
    pub fn report(&self, label: &str) -> Option<&EvalReport> {
        self.reports.iter().find(|(l, _)| l == label).map(|(_, r)| r)
    }
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| Error::io(&p, e))
    }
}

/// Runs every enabled stage in dependency order and writes the artifacts,
/// reports and a manifest into `paths.out_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let p = &cfg.paths;
    let sim = cfg.similarity_config()?;
    fs::create_dir_all(&p.out_dir).map_err(|e| Error::io(&p.out_dir, e))?;
    let mut out = Outputs {
        dir: p.out_dir.clone(),
        written: Vec::new(),
    };
    let mut counts = BTreeMap::new();

    let test = p
        .test_lexicon
        .as_ref()
        .map(|path| load_lexicon(path, LexiconRole::Test))
        .transpose()?
        .map(|(lex, skipped)| {
            counts.insert("test_lines_skipped".to_string(), skipped as u64);
            lex
        });
    let gold = p.xlsim_gold.as_ref().map(load_scored_pairs).transpose()?;
    let mut train_lex = match &p.train_lexicon {
        Some(path) => {
            let (lex, skipped) = load_lexicon(path, LexiconRole::Train)?;
            counts.insert("train_lines_skipped".to_string(), skipped as u64);
            Some(lex)
        }
        None => None,
    };
    if let (Some(tr), Some(te)) = (&train_lex, &test) {
        let (clean, removed) = remove_test_leakage(tr, te.iter());
        counts.insert("train_pairs_overlapping_test".to_string(), removed as u64);
        train_lex = Some(clean);
    }

    // static views, aligned cross-lingually
    let statics = match (&p.static_src, &p.static_tgt) {
        (Some(s), Some(t)) if cfg.stages.induce => {
            let lex = train_lex.as_ref().expect("validated");
            let (mapped, tgt, map) = induce_clwe(&load_space(s)?, &load_space(t)?, lex)?;
            write_map(&map, out.path("clwe_map.lxrw"))?;
            Some((mapped, tgt))
        }
        (Some(s), Some(t)) => Some((load_normalized(s)?, load_normalized(t)?)),
        _ => None,
    };

    // encoder views, optionally fine-tuned
    let encoders = match (&p.encoder_src, &p.encoder_tgt) {
        (Some(s), Some(t)) => {
            let (es, et) = (load_normalized(s)?, load_normalized(t)?);
            let mut adapter = AdapterState::identity(es.dim());
            if cfg.stages.mine {
                let (lex, dropped) = filter_to_vocab(train_lex.as_ref().expect("validated"), &es, &et);
                counts.insert("train_pairs_oov_encoder".to_string(), dropped as u64);
                let negatives = mine_hard_negatives(&lex, &es, &et, cfg.train.n_negatives, sim)?;
                negatives.write_tsv(&es, &et, out.path("negatives.tsv"))?;
                if cfg.stages.train {
                    let outcome = train(&lex, &es, &et, &negatives, &cfg.train_config())?;
                    write_map(&outcome.adapter.to_map(), out.path("adapter.lxrw"))?;
                    out.write("train_loss.csv", &outcome.loss_log_csv())?;
                    adapter = outcome.adapter;
                }
            }
            Some((adapter.apply_to_space(&es)?, adapter.apply_to_space(&et)?))
        }
        _ => None,
    };

    let mut targets: Vec<(String, EmbeddingSpace, EmbeddingSpace)> = Vec::new();
    match (&statics, &encoders) {
        (Some((ss, st)), Some((es, et))) if cfg.stages.interpolate => {
            let lex = train_lex.as_ref().expect("validated");
            let map = fit_static_to_encoder(ss, st, es, et, lex)?;
            write_map(&map, out.path("static_to_encoder.lxrw"))?;
            let views = Views {
                static_src: ss,
                static_tgt: st,
                encoder_src: es,
                encoder_tgt: et,
                map: &map,
            };
            for &l in &cfg.interpolation.lambdas {
                let (a, b) = views.interpolate(l)?;
                targets.push((lambda_label(l), a, b));
            }
        }
        (_, Some((es, et))) => targets.push(("encoder".to_string(), es.clone(), et.clone())),
        (Some((ss, st)), None) => targets.push(("static".to_string(), ss.clone(), st.clone())),
        (None, None) => unreachable!("validated"),
    }

    let mut reports = Vec::new();
    for (label, src, tgt) in &targets {
        for task in &cfg.stages.eval {
            let (name, report) = match task {
                EvalTask::Bli => (
                    format!("bli_{label}"),
                    bli_evaluate(src, tgt, test.as_ref().expect("validated"), &cfg.eval.ks, sim)?,
                ),
                EvalTask::Xlsim => (format!("xlsim_{label}"), xlsim_evaluate(src, tgt, gold.as_ref().expect("validated"))?),
            };
            out.write(&format!("{name}.tsv"), &report.metrics_tsv())?;
            if cfg.eval.per_item {
                out.write(&format!("{name}.items.tsv"), &report.items_tsv())?;
            }
            log::info!("{name}: {}", report.metrics.first().map_or(String::new(), |(m, v)| format!("{m} = {v}")));
            reports.push((name, report));
        }
    }

    let mut inputs = BTreeMap::new();
    for path in [
        &p.static_src,
        &p.static_tgt,
        &p.encoder_src,
        &p.encoder_tgt,
        &p.train_lexicon,
        &p.test_lexicon,
        &p.xlsim_gold,
    ]
    .into_iter()
    .flatten()
    {
        inputs.insert(path.display().to_string(), sha256_file(path)?);
    }
    let mut outputs = BTreeMap::new();
    for name in &out.written {
        outputs.insert(name.clone(), sha256_file(out.dir.join(name))?);
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
        counts: &counts,
        inputs,
        outputs,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Invalid(e.to_string()))?;
    let mp = out.dir.join(MANIFEST_FILE);
    fs::write(&mp, text).map_err(|e| Error::io(&mp, e))?;

    Ok(RunSummary {
        reports,
        counts,
        out_dir: out.dir,
    })
}
