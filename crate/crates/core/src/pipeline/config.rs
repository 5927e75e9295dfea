use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::BaselineRule;
use crate::metrics::Aggregation;
use crate::nn::TrainConfig;
use crate::pairs::PairStrategy;
use crate::{Error, Exec, Result};

/// The scoring method of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    /// Tuned cosine threshold, over a cosine transform when one is given.
    Cosine,
    Regressor,
    /// Regressor scoring only same-type pairs.
    RegressorType,
    /// Regressor scoring only lemma-matching pairs.
    RegressorLemma,
    /// Regressor on top of a frozen cosine transform.
    RegressorCosine,
    Baseline(BaselineRule),
}

impl Method {
    /// The pair strategy the method is defined with.
    pub fn strategy(self) -> PairStrategy {
        match self {
            Method::RegressorType => PairStrategy::SameType,
            Method::RegressorLemma => PairStrategy::LemmaMatch,
            _ => PairStrategy::AllPreceding,
        }
    }

    pub fn is_regressor(self) -> bool {
        matches!(
            self,
            Method::Regressor
                | Method::RegressorType
                | Method::RegressorLemma
                | Method::RegressorCosine
        )
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Method::Baseline(_))
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cosine" => Method::Cosine,
            "regressor" => Method::Regressor,
            "regressor-type" => Method::RegressorType,
            "regressor-lemma" => Method::RegressorLemma,
            "regressor-cosine" => Method::RegressorCosine,
            other => match other.strip_prefix("baseline-") {
                Some(rule) => Method::Baseline(rule.parse()?),
                None => return Err(Error::Config(format!("unknown method `{other}`"))),
            },
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Cosine => f.write_str("cosine"),
            Method::Regressor => f.write_str("regressor"),
            Method::RegressorType => f.write_str("regressor-type"),
            Method::RegressorLemma => f.write_str("regressor-lemma"),
            Method::RegressorCosine => f.write_str("regressor-cosine"),
            Method::Baseline(rule) => write!(f, "baseline-{rule}"),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.to_string()
    }
}

/// Evenly spaced thresholds `min, min + step, …, max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self {
            min: 0.0,
            max: 1.0,
            step: 0.01,
        }
    }
}

impl ThresholdGrid {
    /// Grid values, rounded to 10 decimals so that e.g. 0.55 is the literal
    /// `0.55` rather than an accumulated sum.
    pub fn values(&self) -> Result<Vec<f64>> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        if !ok(self.min) || !ok(self.max) || self.min > self.max {
            return Err(Error::Config(format!(
                "threshold range [{}, {}] must lie within [0, 1]",
                self.min, self.max
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!(
                "threshold step {} must be positive",
                self.step
            )));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|k| ((self.min + k as f64 * self.step) * 1e10).round() / 1e10)
            .map(|v| v.min(1.0))
            .collect())
    }
}

fn default_method() -> Method {
    Method::Cosine
}
fn default_epochs() -> usize {
    50
}
fn default_lr() -> f64 {
    5e-6
}
fn default_weight_decay() -> f64 {
    0.01
}
fn default_batch_size() -> usize {
    32
}
fn default_hidden_units() -> usize {
    crate::scorer::HIDDEN_UNITS
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_step() -> f64 {
    0.01
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a run needs, read from a flat TOML file.
///
/// `embeddings` is used for any split without its own embeddings file.
/// Relative paths are resolved against the config file's directory by
/// [`PipelineConfig::load`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub train_corpus: Option<PathBuf>,
    pub dev_corpus: Option<PathBuf>,
    pub test_corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub train_embeddings: Option<PathBuf>,
    pub dev_embeddings: Option<PathBuf>,
    pub test_embeddings: Option<PathBuf>,
    /// Expected embedding dimension; checked against the files when set.
    pub embedding_dim: Option<usize>,

    #[serde(default = "default_method")]
    pub method: Method,
    /// Must agree with the method when given.
    pub strategy: Option<PairStrategy>,

    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    /// Regressor mini-batch size.
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_hidden_units")]
    pub hidden_units: usize,
    #[serde(default = "default_true")]
    pub shuffle: bool,
    /// Cosine transform epochs; defaults to `epochs`.
    pub transform_epochs: Option<usize>,
    /// Cosine transform learning rate; defaults to `lr`.
    pub transform_lr: Option<f64>,
    /// Cosine transform batch size; full-batch when absent.
    pub transform_batch_size: Option<usize>,
    /// Fraction of negative training pairs kept.
    #[serde(default = "default_one")]
    pub negative_keep_ratio: f64,

    /// Pretrained cosine transform checkpoint.
    pub cosine_transform: Option<PathBuf>,
    /// Train a cosine transform on the training split during the run.
    #[serde(default)]
    pub train_transform: bool,

    #[serde(default)]
    pub threshold_min: f64,
    #[serde(default = "default_one")]
    pub threshold_max: f64,
    #[serde(default = "default_step")]
    pub threshold_step: f64,

    #[serde(default)]
    pub mode: Aggregation,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub parallel: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, context: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{context}: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative_to(base);
        }
        Ok(cfg)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.train_corpus,
            &mut self.dev_corpus,
            &mut self.test_corpus,
            &mut self.embeddings,
            &mut self.train_embeddings,
            &mut self.dev_embeddings,
            &mut self.test_embeddings,
            &mut self.cosine_transform,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.out_dir);
    }

    pub fn strategy(&self) -> PairStrategy {
        self.strategy.unwrap_or_else(|| self.method.strategy())
    }

    pub fn exec(&self) -> Exec {
        if self.parallel {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }

    pub fn grid(&self) -> ThresholdGrid {
        ThresholdGrid {
            min: self.threshold_min,
            max: self.threshold_max,
            step: self.threshold_step,
        }
    }

    pub fn regressor_train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            weight_decay: self.weight_decay,
            batch_size: Some(self.batch_size),
            seed: self.seed,
            shuffle: self.shuffle,
        }
    }

    pub fn transform_train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.transform_epochs.unwrap_or(self.epochs),
            lr: self.transform_lr.unwrap_or(self.lr),
            weight_decay: self.weight_decay,
            batch_size: self.transform_batch_size,
            seed: self.seed,
            shuffle: self.shuffle,
        }
    }

    pub fn embeddings_for(&self, split: crate::corpus::Split) -> Option<&Path> {
        use crate::corpus::Split;
        let own = match split {
            Split::Train => &self.train_embeddings,
            Split::Dev => &self.dev_embeddings,
            Split::Test => &self.test_embeddings,
        };
        own.as_deref().or(self.embeddings.as_deref())
    }

    pub fn corpus_for(&self, split: crate::corpus::Split) -> Option<&Path> {
        use crate::corpus::Split;
        match split {
            Split::Train => self.train_corpus.as_deref(),
            Split::Dev => self.dev_corpus.as_deref(),
            Split::Test => self.test_corpus.as_deref(),
        }
    }

    /// Whether the run trains a cosine transform (as opposed to loading one
    /// or using none).
    pub fn trains_transform(&self) -> bool {
        self.cosine_transform.is_none()
            && (self.train_transform || self.method == Method::RegressorCosine)
    }

    /// Splits the configured method reads.
    pub fn required_splits(&self) -> Vec<crate::corpus::Split> {
        use crate::corpus::Split;
        let mut s = Vec::new();
        if self.method.is_regressor() || (self.method == Method::Cosine && self.trains_transform())
        {
            s.push(Split::Train);
        }
        if !self.method.is_baseline() {
            s.push(Split::Dev);
        }
        s.push(Split::Test);
        s
    }

    /// Checks method requirements and that every referenced path exists.
    pub fn validate(&self) -> Result<()> {
        if self.strategy() != self.method.strategy() {
            return Err(Error::Config(format!(
                "method {} uses the {} pair strategy, config asks for {}",
                self.method,
                self.method.strategy(),
                self.strategy()
            )));
        }
        self.regressor_train_config().validate()?;
        self.transform_train_config().validate()?;
        self.grid().values()?;
        if self.hidden_units == 0 {
            return Err(Error::Config("hidden_units must be positive".into()));
        }
        if !(self.negative_keep_ratio > 0.0 && self.negative_keep_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "negative_keep_ratio {} must lie in (0, 1]",
                self.negative_keep_ratio
            )));
        }
        if self.embedding_dim == Some(0) {
            return Err(Error::Config("embedding_dim must be positive".into()));
        }
        if self.method.is_baseline() && (self.cosine_transform.is_some() || self.train_transform) {
            return Err(Error::Config(
                "baselines do not use a cosine transform".into(),
            ));
        }
        if matches!(
            self.method,
            Method::Regressor | Method::RegressorType | Method::RegressorLemma
        ) && (self.cosine_transform.is_some() || self.train_transform)
        {
            return Err(Error::Config(format!(
                "method {} takes no cosine transform; use regressor-cosine",
                self.method
            )));
        }
        let must_exist = |what: &str, p: Option<&Path>| -> Result<()> {
            match p {
                None => Err(Error::Config(format!(
                    "{what} is required for method {}",
                    self.method
                ))),
                Some(p) if !p.exists() => Err(Error::Config(format!(
                    "{what} `{}` does not exist",
                    p.display()
                ))),
                Some(_) => Ok(()),
            }
        };
        for split in self.required_splits() {
            must_exist(&format!("{split} corpus"), self.corpus_for(split))?;
            if !self.method.is_baseline() {
                must_exist(&format!("{split} embeddings"), self.embeddings_for(split))?;
            }
        }
        if let Some(p) = &self.cosine_transform {
            must_exist("cosine transform checkpoint", Some(p))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for name in [
            "cosine",
            "regressor",
            "regressor-type",
            "regressor-lemma",
            "regressor-cosine",
            "baseline-singletons",
            "baseline-type",
            "baseline-lemma",
            "baseline-lemma-type",
        ] {
            let m: Method = name.parse().unwrap();
            assert_eq!(m.to_string(), name);
        }
        assert!("baseline-nope".parse::<Method>().is_err());
        assert!("svm".parse::<Method>().is_err());
    }

    #[test]
    fn strategies_follow_method() {
        assert_eq!(Method::RegressorType.strategy(), PairStrategy::SameType);
        assert_eq!(Method::RegressorLemma.strategy(), PairStrategy::LemmaMatch);
        assert_eq!(
            Method::RegressorCosine.strategy(),
            PairStrategy::AllPreceding
        );
        let cfg = PipelineConfig {
            method: Method::RegressorType,
            strategy: Some(PairStrategy::AllPreceding),
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn default_grid_has_101_exact_points() {
        let v = ThresholdGrid::default().values().unwrap();
        assert_eq!(v.len(), 101);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[55], 0.55);
        assert_eq!(v[100], 1.0);
        assert!(ThresholdGrid {
            min: 0.5,
            max: 0.2,
            step: 0.1
        }
        .values()
        .is_err());
        assert!(ThresholdGrid {
            min: 0.0,
            max: 1.0,
            step: 0.0
        }
        .values()
        .is_err());
        let v = ThresholdGrid {
            min: 0.3,
            max: 0.7,
            step: 0.2,
        }
        .values()
        .unwrap();
        assert_eq!(v, vec![0.3, 0.5, 0.7]);
    }

    #[test]
    fn toml_defaults_and_unknown_keys() {
        let cfg = PipelineConfig::from_toml("method = \"regressor\"\nseed = 7\n", "t").unwrap();
        assert_eq!(cfg.method, Method::Regressor);
        assert_eq!(
            (cfg.epochs, cfg.lr, cfg.batch_size, cfg.seed),
            (50, 5e-6, 32, 7)
        );
        assert_eq!(cfg.mode, Aggregation::Micro);
        assert!(PipelineConfig::from_toml("methd = \"cosine\"", "t").is_err());
        assert!(PipelineConfig::from_toml("method = \"nope\"", "t").is_err());
        let back = PipelineConfig::from_toml(&cfg.to_toml(), "t").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn missing_paths_fail_validation() {
        let cfg = PipelineConfig {
            method: Method::Baseline(BaselineRule::Lemma),
            test_corpus: Some("/definitely/not/here.json".into()),
            ..Default::default()
        };
        let e = cfg.validate().unwrap_err();
        assert!(e.is_validation(), "{e}");
        let cfg = PipelineConfig {
            method: Method::RegressorType,
            train_transform: true,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
