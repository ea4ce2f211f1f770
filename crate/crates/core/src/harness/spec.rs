//! Experiment and model specs in the flat `key=value` grammar.

use crate::corpus::{Age, CorpusSpec};
use crate::error::{Error, Result};
use crate::network::{Arch, TrainConfig};
use crate::textio::{parse_kv, split_list};
use crate::transfer::{AdaptConfig, ScheduleSpec};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Network and front-end shape, independent of corpus dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArchSpec {
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub group: usize,
    pub p: f64,
    pub splice_left: usize,
    pub splice_right: usize,
    /// 0 disables the i-vector front end.
    pub ivector_dim: usize,
    pub ubm_components: usize,
    pub ubm_iters: usize,
    pub tv_iters: usize,
}

impl Default for ArchSpec {
    fn default() -> Self {
        ArchSpec {
            hidden_layers: 5,
            hidden_units: 64,
            group: 2,
            p: 2.0,
            splice_left: 3,
            splice_right: 3,
            ivector_dim: 8,
            ubm_components: 16,
            ubm_iters: 8,
            tv_iters: 5,
        }
    }
}

impl ArchSpec {
    pub fn network_arch(&self, feat_dim: usize, classes: usize) -> Arch {
        Arch {
            feat_dim,
            ivec_dim: self.ivector_dim,
            splice_left: self.splice_left,
            splice_right: self.splice_right,
            hidden_layers: self.hidden_layers,
            hidden_units: self.hidden_units,
            group: self.group,
            p: self.p,
            classes,
        }
    }
}

/// Source-training and adaptation configurations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainParams {
    pub base: TrainConfig,
    pub adapt: TrainConfig,
}

impl Default for TrainParams {
    fn default() -> Self {
        let base = TrainConfig {
            max_epochs: 20,
            seed: 7,
            ..TrainConfig::default()
        };
        // Adaptation runs at half the pretraining rate with smaller batches
        // and a longer patience so lightly-masked configurations converge.
        let adapt = TrainConfig {
            lr_initial: 0.5 * base.lr_initial,
            lr_final: 0.05 * base.lr_initial,
            batch: 16,
            max_epochs: 60,
            tol_abs: 1e-4,
            patience: 8,
            ..base
        };
        TrainParams { base, adapt }
    }
}

/// One curve of the sweep: a baseline or a transfer configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    SourceOnly,
    TargetOnly,
    Pooled,
    OracleWarp,
    Transfer {
        config: AdaptConfig,
        schedule: ScheduleSpec,
    },
}

impl Variant {
    /// Name recorded in the CSV `variant` column.
    pub fn name(&self) -> String {
        match self {
            Variant::SourceOnly => "source".to_string(),
            Variant::TargetOnly => "target".to_string(),
            Variant::Pooled => "pooled".to_string(),
            Variant::OracleWarp => "oracle".to_string(),
            Variant::Transfer { config, .. } => config.to_string(),
        }
    }

    /// Name recorded in the CSV `schedule` column.
    pub fn schedule_name(&self) -> String {
        match self {
            Variant::Transfer { schedule, .. } => schedule.to_string(),
            _ => "-".to_string(),
        }
    }

    /// Whether this variant consumes child training data.
    pub fn trains(&self) -> bool {
        !matches!(self, Variant::SourceOnly | Variant::OracleWarp)
    }

    pub fn default_transfer() -> Variant {
        Variant::Transfer {
            config: AdaptConfig::All,
            schedule: ScheduleSpec::Sim,
        }
    }
}

/// Budget in frames, or as a percentage of the training set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Frames(usize),
    Percent(f64),
}

impl Budget {
    pub fn resolve(&self, total_frames: usize) -> usize {
        match *self {
            Budget::Frames(n) => n,
            Budget::Percent(p) => ((total_frames as f64) * p / 100.0).round() as usize,
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Budget> {
        if let Some(pct) = s.strip_suffix('%') {
            let p: f64 = pct
                .parse()
                .map_err(|_| Error::parse("budget", format!("bad percentage `{s}`")))?;
            if !(p > 0.0 && p <= 100.0) {
                return Err(Error::parse("budget", format!("percentage `{s}` out of range")));
            }
            Ok(Budget::Percent(p))
        } else {
            let n: usize = s
                .parse()
                .map_err(|_| Error::parse("budget", format!("bad frame count `{s}`")))?;
            Ok(Budget::Frames(n))
        }
    }
}

/// A test partition selector: the whole child test set or one age.
#[derive(Clone, Debug, PartialEq)]
pub enum TestAge {
    All,
    Age(Age),
}

impl fmt::Display for TestAge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestAge::All => write!(f, "all"),
            TestAge::Age(age) => write!(f, "{age}"),
        }
    }
}

impl FromStr for TestAge {
    type Err = Error;

    fn from_str(s: &str) -> Result<TestAge> {
        if s == "all" {
            Ok(TestAge::All)
        } else {
            Ok(TestAge::Age(s.parse()?))
        }
    }
}

/// Which analysis the sweep runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Grid,
    AgeMatrix,
    AgeIndep,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "grid" => Ok(Mode::Grid),
            "age-matrix" => Ok(Mode::AgeMatrix),
            "age-indep" => Ok(Mode::AgeIndep),
            _ => Err(Error::parse("mode", format!("unknown mode `{s}`"))),
        }
    }
}

/// Train-age selector for grid sweeps.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainAges {
    All,
    Single(Age),
}

/// Arch plus training parameters; the payload of `train-source --arch`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelSpec {
    pub arch: ArchSpec,
    pub train: TrainParams,
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<ModelSpec> {
        let mut spec = ModelSpec::default();
        for (key, value) in parse_kv("model spec", text)? {
            if !spec.apply(&key, &value)? {
                return Err(Error::parse("model spec", format!("unknown key `{key}`")));
            }
        }
        Ok(spec)
    }

    /// Apply one key; returns false when the key is not a model key.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool> {
        let bad = |e: &dyn fmt::Display| Error::parse("model spec", format!("key `{key}`: {e}"));
        match key {
            "hidden_layers" => self.arch.hidden_layers = value.parse().map_err(|e| bad(&e))?,
            "hidden_units" => self.arch.hidden_units = value.parse().map_err(|e| bad(&e))?,
            "group" => self.arch.group = value.parse().map_err(|e| bad(&e))?,
            "p" => self.arch.p = value.parse().map_err(|e| bad(&e))?,
            "splice_left" => self.arch.splice_left = value.parse().map_err(|e| bad(&e))?,
            "splice_right" => self.arch.splice_right = value.parse().map_err(|e| bad(&e))?,
            "ivector_dim" => self.arch.ivector_dim = value.parse().map_err(|e| bad(&e))?,
            "ubm_components" => self.arch.ubm_components = value.parse().map_err(|e| bad(&e))?,
            "ubm_iters" => self.arch.ubm_iters = value.parse().map_err(|e| bad(&e))?,
            "tv_iters" => self.arch.tv_iters = value.parse().map_err(|e| bad(&e))?,
            "lr_initial" => self.train.base.lr_initial = value.parse().map_err(|e| bad(&e))?,
            "lr_final" => self.train.base.lr_final = value.parse().map_err(|e| bad(&e))?,
            "lr_decay" => self.train.base.lr_decay = value.parse().map_err(|e| bad(&e))?,
            "batch" => self.train.base.batch = value.parse().map_err(|e| bad(&e))?,
            "max_epochs" => self.train.base.max_epochs = value.parse().map_err(|e| bad(&e))?,
            "tol" => self.train.base.tol_abs = value.parse().map_err(|e| bad(&e))?,
            "patience" => self.train.base.patience = value.parse().map_err(|e| bad(&e))?,
            "epochs_per_stage" => {
                self.train.base.epochs_per_stage = value.parse().map_err(|e| bad(&e))?
            }
            "heldout_frac" => self.train.base.heldout_frac = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.train.base.seed = value.parse().map_err(|e| bad(&e))?,
            "adapt_lr_initial" => {
                self.train.adapt.lr_initial = value.parse().map_err(|e| bad(&e))?
            }
            "adapt_lr_final" => self.train.adapt.lr_final = value.parse().map_err(|e| bad(&e))?,
            "adapt_batch" => self.train.adapt.batch = value.parse().map_err(|e| bad(&e))?,
            "adapt_max_epochs" => {
                self.train.adapt.max_epochs = value.parse().map_err(|e| bad(&e))?
            }
            "adapt_patience" => self.train.adapt.patience = value.parse().map_err(|e| bad(&e))?,
            "adapt_tol" => self.train.adapt.tol_abs = value.parse().map_err(|e| bad(&e))?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Everything one sweep needs; each grid cell is fully determined by
/// (spec, seed).
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub corpus: CorpusSpec,
    pub arch: ArchSpec,
    pub train: TrainParams,
    pub variants: Vec<Variant>,
    pub budgets: Vec<Budget>,
    pub train_ages: TrainAges,
    pub test_ages: Vec<TestAge>,
    pub seeds: Vec<u64>,
    pub mode: Mode,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let configs = [
            AdaptConfig::SymmetricTotal(2),
            AdaptConfig::SymmetricTotal(4),
            AdaptConfig::SymmetricTotal(6),
            AdaptConfig::All,
        ];
        ExperimentSpec {
            corpus: CorpusSpec::default(),
            arch: ArchSpec::default(),
            train: TrainParams::default(),
            variants: configs
                .into_iter()
                .map(|config| Variant::Transfer {
                    config,
                    schedule: ScheduleSpec::Sim,
                })
                .collect(),
            budgets: vec![
                Budget::Percent(1.0),
                Budget::Percent(3.0),
                Budget::Percent(10.0),
                Budget::Percent(30.0),
                Budget::Percent(100.0),
            ],
            train_ages: TrainAges::All,
            test_ages: vec![TestAge::All],
            seeds: vec![1, 2, 3, 4, 5],
            mode: Mode::Grid,
        }
    }
}

impl ExperimentSpec {
    /// Parse an experiment file. `base_dir` resolves the `corpus_spec`
    /// path reference.
    pub fn parse(text: &str, base_dir: &Path) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::default();
        let mut model = ModelSpec::default();
        let mut baselines: Vec<Variant> = Vec::new();
        let mut configs: Vec<AdaptConfig> = vec![
            AdaptConfig::SymmetricTotal(2),
            AdaptConfig::SymmetricTotal(4),
            AdaptConfig::SymmetricTotal(6),
            AdaptConfig::All,
        ];
        let mut schedules: Vec<ScheduleSpec> = vec![ScheduleSpec::Sim];
        let mut corpus_seen = false;

        for (key, value) in parse_kv("experiment spec", text)? {
            match key.as_str() {
                "corpus_spec" => {
                    let path = base_dir.join(&value);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::io(path.display().to_string(), e))?;
                    spec.corpus = CorpusSpec::parse(&text)?;
                    corpus_seen = true;
                }
                "mode" => spec.mode = value.parse()?,
                "baselines" => {
                    baselines = split_list(&value)
                        .iter()
                        .map(|s| match s.as_str() {
                            "source" => Ok(Variant::SourceOnly),
                            "target" => Ok(Variant::TargetOnly),
                            "pooled" => Ok(Variant::Pooled),
                            "oracle" => Ok(Variant::OracleWarp),
                            other => Err(Error::parse(
                                "experiment spec",
                                format!("unknown baseline `{other}`"),
                            )),
                        })
                        .collect::<Result<_>>()?;
                }
                "configs" => {
                    configs = split_list(&value)
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<_>>()?;
                }
                "schedules" => {
                    schedules = split_list(&value)
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<_>>()?;
                }
                "budgets" => {
                    spec.budgets = split_list(&value)
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<_>>()?;
                }
                "train_ages" => {
                    spec.train_ages = if value == "all" {
                        TrainAges::All
                    } else {
                        TrainAges::Single(value.parse()?)
                    };
                }
                "test_ages" => {
                    spec.test_ages = split_list(&value)
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<_>>()?;
                }
                "seeds" => {
                    spec.seeds = split_list(&value)
                        .iter()
                        .map(|s| {
                            s.parse::<u64>()
                                .map_err(|e| Error::parse("experiment spec", format!("seed: {e}")))
                        })
                        .collect::<Result<_>>()?;
                }
                other => {
                    if !model.apply(other, &value)? {
                        return Err(Error::parse(
                            "experiment spec",
                            format!("unknown key `{key}`"),
                        ));
                    }
                }
            }
        }
        if !corpus_seen {
            return Err(Error::parse(
                "experiment spec",
                "missing required key `corpus_spec`",
            ));
        }
        if spec.seeds.is_empty() {
            return Err(Error::parse("experiment spec", "seeds list is empty"));
        }
        spec.arch = model.arch;
        spec.train = model.train;
        spec.variants = baselines;
        for config in configs {
            for schedule in &schedules {
                spec.variants.push(Variant::Transfer {
                    config,
                    schedule: *schedule,
                });
            }
        }
        Ok(spec)
    }

    pub fn resolved_train_ages(&self) -> Vec<Age> {
        match &self.train_ages {
            TrainAges::All => Age::all_children().collect(),
            TrainAges::Single(age) => vec![*age],
        }
    }

    pub fn train_age_label(&self) -> String {
        match &self.train_ages {
            TrainAges::All => "all".to_string(),
            TrainAges::Single(age) => age.to_string(),
        }
    }
}
