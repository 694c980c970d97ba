//! Declarative run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [paths]
//! static_src = "en.lxrw"
//! static_tgt = "de.lxrw"
//! encoder_src = "en.enc.vec"
//! encoder_tgt = "de.enc.vec"
//! train_lexicon = "en-de.train.txt"
//! test_lexicon = "en-de.test.txt"
//! out_dir = "runs/en-de"
//!
//! [stages]
//! induce = true
//! mine = true
//! train = true
//! interpolate = true
//! eval = ["bli"]
//!
//! [train]
//! epochs = 5
//!
//! [interpolation]
//! lambdas = [0.0, 0.3, 1.0]
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::align::InterpolationConfig;
use crate::contrast::TrainConfig;
use crate::error::{Error, Result};
use crate::retrieve::SimilarityConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalTask {
    Bli,
    Xlsim,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub static_src: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub static_tgt: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoder_src: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoder_tgt: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_lexicon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_lexicon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xlsim_gold: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stages {
    pub induce: bool,
    pub mine: bool,
    pub train: bool,
    pub interpolate: bool,
    pub eval: Vec<EvalTask>,
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            induce: false,
            mine: false,
            train: false,
            interpolate: false,
            eval: vec![EvalTask::Bli],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: usize,
    pub n_negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            batch_size: d.batch_size,
            n_negatives: d.n_negatives,
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            weight_decay: d.weight_decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilaritySection {
    pub scale: f64,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        SimilaritySection {
            scale: SimilarityConfig::DEFAULT_SCALE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolationSection {
    pub lambdas: Vec<f64>,
}

impl Default for InterpolationSection {
    fn default() -> Self {
        InterpolationSection {
            lambdas: vec![InterpolationConfig::BLI_DEFAULT],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub ks: Vec<usize>,
    /// Also write one line per evaluated item next to each report.
    pub per_item: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            ks: vec![1, 5, 10],
            per_item: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub stages: Stages,
    pub train: TrainSection,
    pub similarity: SimilaritySection,
    pub interpolation: InterpolationSection,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file, resolving relative paths against
    /// its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative_to(base);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        let p = &mut self.paths;
        for slot in [
            &mut p.static_src,
            &mut p.static_tgt,
            &mut p.encoder_src,
            &mut p.encoder_tgt,
            &mut p.train_lexicon,
            &mut p.test_lexicon,
            &mut p.xlsim_gold,
        ]
        .into_iter()
        .flatten()
        {
            if slot.is_relative() {
                *slot = base.join(&*slot);
            }
        }
        if p.out_dir.is_relative() {
            p.out_dir = base.join(&p.out_dir);
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.train.batch_size,
            n_negatives: self.train.n_negatives,
            scale: self.similarity.scale,
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            weight_decay: self.train.weight_decay,
            seed: self.seed,
        }
    }

    pub fn similarity_config(&self) -> Result<SimilarityConfig> {
        SimilarityConfig::new(self.similarity.scale)
    }

    pub fn has_static(&self) -> bool {
        self.paths.static_src.is_some() && self.paths.static_tgt.is_some()
    }

    pub fn has_encoder(&self) -> bool {
        self.paths.encoder_src.is_some() && self.paths.encoder_tgt.is_some()
    }

    /// Checks stage dependencies, hyperparameters and input paths. Nothing
    /// is read beyond file existence.
    pub fn validate(&self) -> Result<()> {
        let s = &self.stages;
        let p = &self.paths;
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.to_string())) };

        need(p.static_src.is_some() == p.static_tgt.is_some(), "static_src and static_tgt go together")?;
        need(p.encoder_src.is_some() == p.encoder_tgt.is_some(), "encoder_src and encoder_tgt go together")?;
        need(!s.train || s.mine, "the train stage requires the mine stage")?;
        if s.induce {
            need(self.has_static(), "induce needs static_src and static_tgt")?;
            need(p.train_lexicon.is_some(), "induce needs train_lexicon")?;
        }
        if s.mine {
            need(self.has_encoder(), "mine needs encoder_src and encoder_tgt")?;
            need(p.train_lexicon.is_some(), "mine needs train_lexicon")?;
        }
        if s.interpolate {
            need(self.has_static() && self.has_encoder(), "interpolate needs static and encoder spaces")?;
            need(p.train_lexicon.is_some(), "interpolate needs train_lexicon")?;
            need(!self.interpolation.lambdas.is_empty(), "interpolation.lambdas is empty")?;
            for &l in &self.interpolation.lambdas {
                InterpolationConfig::new(l).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        need(!s.eval.is_empty(), "stages.eval lists no task")?;
        need(self.has_static() || self.has_encoder(), "no embedding spaces configured")?;
        if s.eval.contains(&EvalTask::Bli) {
            need(p.test_lexicon.is_some(), "bli evaluation needs test_lexicon")?;
            need(!self.eval.ks.is_empty() && !self.eval.ks.contains(&0), "eval.ks must be positive")?;
        }
        if s.eval.contains(&EvalTask::Xlsim) {
            need(p.xlsim_gold.is_some(), "xlsim evaluation needs xlsim_gold")?;
        }
        self.train_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.similarity_config().map_err(|e| Error::Config(e.to_string()))?;

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
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = RunConfig::from_toml("[paths]\nout_dir = \"o\"\n").unwrap();
        assert_eq!(cfg.train.batch_size, 128);
        assert_eq!(cfg.train.n_negatives, 10);
        assert_eq!(cfg.similarity.scale, 20.0);
        assert_eq!(cfg.stages.eval, vec![EvalTask::Bli]);
        assert_eq!(cfg.eval.ks, vec![1, 5, 10]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("sed = 1\n"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("[train]\nlr = 1\n").is_err());
    }

    #[test]
    fn train_without_mine_is_a_config_error() {
        let cfg = RunConfig::from_toml(
            "[paths]\nencoder_src = \"a\"\nencoder_tgt = \"b\"\ntrain_lexicon = \"c\"\ntest_lexicon = \"d\"\n[stages]\ntrain = true\n",
        )
        .unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("requires the mine stage"), "{err}");
    }

    #[test]
    fn lambda_outside_unit_interval() {
        let cfg = RunConfig::from_toml(
            "[paths]\nstatic_src = \"a\"\nstatic_tgt = \"b\"\nencoder_src = \"c\"\nencoder_tgt = \"d\"\ntrain_lexicon = \"e\"\ntest_lexicon = \"f\"\n[stages]\ninterpolate = true\n[interpolation]\nlambdas = [0.5, 1.5]\n",
        )
        .unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn missing_input_is_reported_by_path() {
        let cfg = RunConfig::from_toml(
            "[paths]\nencoder_src = \"/nonexistent/a.vec\"\nencoder_tgt = \"/nonexistent/b.vec\"\ntest_lexicon = \"/nonexistent/t\"\n",
        )
        .unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.is_usage());
        assert!(err.to_string().contains("/nonexistent/a.vec"), "{err}");
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut cfg = RunConfig::from_toml("[paths]\nstatic_src = \"x.vec\"\nstatic_tgt = \"/abs/y.vec\"\nout_dir = \"out\"\n").unwrap();
        cfg.resolve_relative_to(Path::new("/cfg"));
        assert_eq!(cfg.paths.static_src.as_deref(), Some(Path::new("/cfg/x.vec")));
        assert_eq!(cfg.paths.static_tgt.as_deref(), Some(Path::new("/abs/y.vec")));
        assert_eq!(cfg.paths.out_dir, Path::new("/cfg/out"));
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig {
            seed: 9,
            ..RunConfig::default()
        };
        cfg.stages.eval = vec![EvalTask::Bli, EvalTask::Xlsim];
        cfg.interpolation.lambdas = vec![0.0, 0.25];
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
