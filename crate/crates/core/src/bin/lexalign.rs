use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lexalign::align::InterpolationConfig;
use lexalign::contrast::TrainConfig;
use lexalign::pipeline::commands::{self, SweepGold, ViewPaths};
use lexalign::pipeline::{self, RunConfig};
use lexalign::retrieve::SimilarityConfig;
use lexalign::Error;

#[derive(Parser)]
#[command(name = "lexalign", version, about = "Cross-lingual lexical alignment and evaluation")]
struct Cli {
    /// Seed for every random choice (training batch order).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for command outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Scale {
    /// Similarity scale C.
    #[arg(long, default_value_t = SimilarityConfig::DEFAULT_SCALE)]
    scale: f64,
}

#[derive(Args)]
struct Views {
    #[arg(long)]
    static_src: PathBuf,
    #[arg(long)]
    static_tgt: PathBuf,
    #[arg(long)]
    encoder_src: PathBuf,
    #[arg(long)]
    encoder_tgt: PathBuf,
    /// Adapter checkpoint applied to both encoder spaces.
    #[arg(long)]
    adapter: Option<PathBuf>,
}

impl From<Views> for ViewPaths {
    fn from(v: Views) -> Self {
        ViewPaths {
            static_src: v.static_src,
            static_tgt: v.static_tgt,
            encoder_src: v.encoder_src,
            encoder_tgt: v.encoder_tgt,
            adapter: v.adapter,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert a text .vec file into a normalized binary cache.
    Ingest {
        #[arg(long)]
        vec: PathBuf,
        /// Keep only the first N words.
        #[arg(long)]
        max: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Align two static spaces with an orthogonal map.
    Induce {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
    },
    /// Mine hard negatives for each dictionary pair.
    Mine {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, default_value_t = 10)]
        negatives: usize,
        #[command(flatten)]
        scale: Scale,
    },
    /// Fine-tune the contrastive adapter.
    Train {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        /// Table written by `mine`.
        #[arg(long)]
        negatives: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 128)]
        batch_size: usize,
        #[arg(long, default_value_t = 2e-5)]
        lr: f64,
        #[arg(long, default_value_t = 0.01)]
        weight_decay: f64,
        #[command(flatten)]
        scale: Scale,
    },
    /// Fit the map from the static space into the encoder space.
    Map {
        #[command(flatten)]
        views: Views,
        #[arg(long)]
        lexicon: PathBuf,
    },
    /// Blend static and encoder vectors of one language.
    Interpolate {
        #[arg(long = "static")]
        static_space: PathBuf,
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        adapter: Option<PathBuf>,
        #[arg(long, default_value_t = InterpolationConfig::BLI_DEFAULT)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bilingual lexicon induction: P@k and MRR.
    EvalBli {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 5, 10])]
        k: Vec<usize>,
        /// Also write per-word results.
        #[arg(long)]
        items: bool,
        #[command(flatten)]
        scale: Scale,
    },
    /// Cross-lingual word similarity: Spearman correlation.
    EvalXlsim {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        items: bool,
    },
    /// Score a list of interpolation weights.
    Sweep {
        #[command(flatten)]
        views: Views,
        #[arg(long)]
        map: PathBuf,
        #[arg(long, conflicts_with = "xlsim_gold", required_unless_present = "xlsim_gold")]
        bli_test: Option<PathBuf>,
        #[arg(long)]
        xlsim_gold: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[command(flatten)]
        scale: Scale,
    },
    /// Run the configured pipeline end to end.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn sim(scale: &Scale) -> lexalign::Result<SimilarityConfig> {
    SimilarityConfig::new(scale.scale).map_err(|e| Error::Config(e.to_string()))
}

fn execute(cli: Cli) -> lexalign::Result<()> {
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let out = |name: &str| out_dir.join(name);
    let ensure_dir = |dir: &Path| std::fs::create_dir_all(dir).map_err(|e| Error::Invalid(format!("{}: {e}", dir.display())));
    match cli.command {
        Command::Ingest { vec, max, out } => {
            let (space, stats) = commands::ingest(&vec, max, &out)?;
            println!("{} words x {} dims -> {}", space.len(), space.dim(), out.display());
            if stats.skipped() > 0 {
                println!(
                    "skipped {} multi-token and {} duplicate words",
                    stats.skipped_spaced, stats.skipped_duplicates
                );
            }
        }
        Command::Induce { src, tgt, lexicon } => {
            let map = commands::induce(&src, &tgt, &lexicon, &out_dir)?;
            if map.is_degenerate() {
                log::warn!("dictionary does not span the space; the map is not unique");
            }
            println!("map {}x{} -> {}", map.src_dim(), map.dst_dim(), out("clwe_map.lxrw").display());
        }
        Command::Mine {
            src,
            tgt,
            lexicon,
            negatives,
            scale,
        } => {
            ensure_dir(&out_dir)?;
            let table = commands::mine(&src, &tgt, &lexicon, negatives, sim(&scale)?, &out("negatives.tsv"))?;
            println!("{} pairs x {} negatives", table.len(), table.n_negatives());
        }
        Command::Train {
            src,
            tgt,
            lexicon,
            negatives,
            epochs,
            batch_size,
            lr,
            weight_decay,
            scale,
        } => {
            let cfg = TrainConfig {
                batch_size,
                scale: scale.scale,
                epochs,
                learning_rate: lr,
                weight_decay,
                seed: cli.seed.unwrap_or(0),
                ..TrainConfig::default()
            };
            let outcome = commands::train_adapter(&src, &tgt, &lexicon, &negatives, &cfg, &out_dir)?;
            for (epoch, loss) in outcome.epoch_losses.iter().enumerate() {
                println!("epoch {}: {loss}", epoch + 1);
            }
        }
        Command::Map { views, lexicon } => {
            ensure_dir(&out_dir)?;
            let map = commands::fit_map(&views.into(), &lexicon, &out("static_to_encoder.lxrw"))?;
            println!("map {}x{}", map.src_dim(), map.dst_dim());
        }
        Command::Interpolate {
            static_space,
            encoder,
            map,
            adapter,
            lambda,
            out,
        } => {
            let space = commands::interpolate(&static_space, &encoder, &map, adapter.as_deref(), lambda, &out)?;
            println!("{} words x {} dims -> {}", space.len(), space.dim(), out.display());
        }
        Command::EvalBli {
            src,
            tgt,
            test,
            k,
            items,
            scale,
        } => {
            let items = items.then(|| out("bli.items.tsv"));
            let report = commands::eval_bli(&src, &tgt, &test, &k, sim(&scale)?, &out("bli.tsv"), items.as_deref())?;
            print!("{}", report.metrics_tsv());
        }
        Command::EvalXlsim { src, tgt, gold, items } => {
            let items = items.then(|| out("xlsim.items.tsv"));
            let report = commands::eval_xlsim(&src, &tgt, &gold, &out("xlsim.tsv"), items.as_deref())?;
            print!("{}", report.metrics_tsv());
        }
        Command::Sweep {
            views,
            map,
            bli_test,
            xlsim_gold,
            lambdas,
            scale,
        } => {
            let gold = match (bli_test, xlsim_gold) {
                (Some(p), _) => SweepGold::Bli(p),
                (None, Some(p)) => SweepGold::Xlsim(p),
                (None, None) => unreachable!("enforced by the argument parser"),
            };
            ensure_dir(&out_dir)?;
            let rows = commands::sweep(&views.into(), &map, &gold, &lambdas, sim(&scale)?, &out("sweep.csv"))?;
            for (l, v) in rows {
                println!("{l}\t{v}");
            }
        }
        Command::Run { config } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(dir) = cli.out_dir {
                cfg.paths.out_dir = dir;
            }
            let summary = pipeline::run(&cfg)?;
            for (name, report) in &summary.reports {
                for (metric, value) in &report.metrics {
                    println!("{name}\t{metric}\t{value}");
                }
            }
        }
    }
    Ok(())
}
