//! Run configuration: one JSON document per run, strictly validated.
//! Unknown keys are rejected everywhere and every random seed is spelled
//! out in the file — nothing is seeded from the clock, so identical
//! configs reproduce identical outputs.
//!
//! Relative paths inside the config (IDX files, report files, `out_dir`)
//! resolve against the config file's own directory; `--out` given on the
//! command line resolves against the working directory as usual.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use advkit::attack::{AttackSpec, CwConfig};
use advkit::data::{gen_gaussian_mixture, load_idx, split, Dataset};
use advkit::defense::{AdvTrainConfig, TrainAttack};
use advkit::model::TrainConfig;
use advkit::transfer::TransferMetric;
use advkit::vulnscore::ThreatModel;

use crate::error::CliError;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub dataset: Option<DatasetSection>,
    #[serde(default)]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub attack: Option<AttackSection>,
    #[serde(default)]
    pub defense: Option<DefenseSection>,
    #[serde(default)]
    pub transfer: Option<TransferSection>,
    #[serde(default)]
    pub score: Option<ScoreSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub source: SourceSection,
    pub test_fraction: f64,
    pub split_seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSection {
    Generator {
        classes: usize,
        dim: usize,
        per_class: usize,
        spread: f64,
        seed: u64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub widths: Vec<usize>,
    pub id: String,
    pub train: TrainSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl TrainSection {
    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    /// One of: fgsm, step_ll, iter_basic, iter_ll, deepfool, cw_l2.
    pub name: String,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    /// Budgets for a robustness sweep; writes robustness.csv.
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default)]
    pub deepfool: Option<DeepFoolSection>,
    #[serde(default)]
    pub cw: Option<CwSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeepFoolSection {
    pub max_iter: usize,
    pub overshoot: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CwSection {
    pub c: f64,
    pub confidence: f64,
    pub steps: usize,
    pub learning_rate: f64,
    pub binary_search_steps: usize,
}

impl CwSection {
    fn to_cw_config(&self) -> CwConfig {
        CwConfig {
            c: self.c,
            confidence: self.confidence,
            steps: self.steps,
            learning_rate: self.learning_rate,
            binary_search_steps: self.binary_search_steps,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenseSection {
    /// Crafting attack: fgsm, step_ll, iter_basic, or iter_ll.
    pub attack: String,
    pub epsilon: f64,
    /// Required for the iterative crafting attacks; rejected otherwise.
    #[serde(default)]
    pub steps: Option<usize>,
    /// Optional per-step size override for iterative crafting.
    #[serde(default)]
    pub step_size: Option<f64>,
    pub adv_fraction: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSection {
    pub zoo: Vec<ZooEntry>,
    /// One training seed per zoo entry.
    pub seeds: Vec<u64>,
    pub train: ZooTrainSection,
    /// Budgeted attack only: fgsm, step_ll, iter_basic, or iter_ll.
    pub attack: String,
    pub epsilon: f64,
    #[serde(default)]
    pub steps: Option<usize>,
    /// "top1" or "top5".
    pub metric: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZooEntry {
    pub widths: Vec<usize>,
    pub id: String,
}

/// Training settings shared by every zoo model; the per-model seeds live
/// in `TransferSection::seeds`, so no seed field here.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZooTrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSection {
    pub findings: Vec<FindingSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FindingSection {
    pub title: String,
    /// "white_box" or "black_box_transfer".
    pub threat_model: String,
    /// Mean off-diagonal transfer rate in percent; required with (and
    /// only with) the black-box threat model.
    #[serde(default)]
    pub mean_transfer_rate: Option<f64>,
    /// Path to an attack report JSON produced by the attack subcommand.
    pub report: PathBuf,
    pub narrative: String,
}

impl FindingSection {
    pub fn threat(&self) -> Result<ThreatModel, CliError> {
        match (self.threat_model.as_str(), self.mean_transfer_rate) {
            ("white_box", None) => Ok(ThreatModel::WhiteBox),
            ("white_box", Some(_)) => Err(bad(format!(
                "finding {:?}: mean_transfer_rate only applies to black_box_transfer",
                self.title
            ))),
            ("black_box_transfer", Some(mean_transfer_rate)) => {
                Ok(ThreatModel::BlackBoxTransfer { mean_transfer_rate })
            }
            ("black_box_transfer", None) => Err(bad(format!(
                "finding {:?}: black_box_transfer needs mean_transfer_rate",
                self.title
            ))),
            (other, _) => Err(bad(format!(
                "finding {:?}: unknown threat model {other:?} \
                 (expected white_box or black_box_transfer)",
                self.title
            ))),
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub eps: Option<Vec<f64>>,
}

/// A parsed config plus the directory its relative paths resolve against.
pub struct Loaded {
    pub cfg: RunConfig,
    base_dir: PathBuf,
    out_override: Option<PathBuf>,
}

pub fn load_config(path: &Path, overrides: Overrides) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("config {}: {e}", path.display())))?;
    let mut cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| bad(format!("config {}: {e}", path.display())))?;

    if let Some(seed) = overrides.seed {
        match cfg.model.as_mut() {
            Some(model) => model.train.seed = seed,
            None => return Err(bad("--seed given but the config has no model section")),
        }
    }
    if let Some(eps) = overrides.eps {
        match cfg.attack.as_mut() {
            Some(attack) => attack.eps_list = Some(eps),
            None => return Err(bad("--eps given but the config has no attack section")),
        }
    }

    let base_dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Loaded {
        cfg,
        base_dir,
        out_override: overrides.out,
    })
}

impl Loaded {
    /// Resolves a config-relative path.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The output directory: `--out` wins, else the config's `out_dir`.
    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        if let Some(out) = &self.out_override {
            return Ok(out.clone());
        }
        match &self.cfg.out_dir {
            Some(dir) => Ok(self.resolve(dir)),
            None => Err(bad("no output directory: set out_dir in the config or pass --out")),
        }
    }

    /// Builds the configured dataset and splits it into (train, test).
    pub fn datasets(&self) -> Result<(Dataset, Dataset), CliError> {
        let section = self
            .cfg
            .dataset
            .as_ref()
            .ok_or_else(|| bad("this subcommand needs a dataset section"))?;
        let full = match &section.source {
            SourceSection::Generator {
                classes,
                dim,
                per_class,
                spread,
                seed,
            } => gen_gaussian_mixture(*classes, *dim, *per_class, *spread, *seed)?,
            SourceSection::Idx { images, labels } => {
                let images = self.resolve(images);
                let labels = self.resolve(labels);
                for p in [&images, &labels] {
                    if !p.is_file() {
                        return Err(bad(format!("dataset file not found: {}", p.display())));
                    }
                }
                load_idx(&images, &labels)?
            }
        };
        Ok(split(&full, section.test_fraction, section.split_seed)?)
    }
}

fn require_epsilon(section: &AttackSection) -> Result<f64, CliError> {
    section
        .epsilon
        .or_else(|| section.eps_list.as_ref().and_then(|l| l.first().copied()))
        .ok_or_else(|| {
            bad(format!(
                "attack {:?} needs epsilon (or a nonempty eps_list)",
                section.name
            ))
        })
}

fn require_steps(section: &AttackSection) -> Result<usize, CliError> {
    section
        .steps
        .ok_or_else(|| bad(format!("attack {:?} needs steps", section.name)))
}

fn reject_field(set: bool, name: &str, attack: &str) -> Result<(), CliError> {
    if set {
        Err(bad(format!("{name} does not apply to attack {attack:?}")))
    } else {
        Ok(())
    }
}

impl AttackSection {
    /// Builds the attack, validating that exactly the fields this attack
    /// uses are present.
    pub fn to_spec(&self) -> Result<AttackSpec, CliError> {
        let name = self.name.as_str();
        if name != "deepfool" {
            reject_field(self.deepfool.is_some(), "deepfool settings", name)?;
        }
        if name != "cw_l2" {
            reject_field(self.cw.is_some(), "cw settings", name)?;
        }
        match name {
            "fgsm" | "step_ll" => {
                reject_field(self.steps.is_some(), "steps", name)?;
                let epsilon = require_epsilon(self)?;
                Ok(if name == "fgsm" {
                    AttackSpec::Fgsm { epsilon }
                } else {
                    AttackSpec::StepLl { epsilon }
                })
            }
            "iter_basic" | "iter_ll" => {
                let epsilon = require_epsilon(self)?;
                let steps = require_steps(self)?;
                Ok(if name == "iter_basic" {
                    AttackSpec::IterBasic { epsilon, steps }
                } else {
                    AttackSpec::IterLl { epsilon, steps }
                })
            }
            "deepfool" => {
                reject_field(self.epsilon.is_some(), "epsilon", name)?;
                reject_field(self.steps.is_some(), "steps", name)?;
                reject_field(self.eps_list.is_some(), "eps_list", name)?;
                let s = self
                    .deepfool
                    .as_ref()
                    .ok_or_else(|| bad("attack \"deepfool\" needs a deepfool section"))?;
                Ok(AttackSpec::DeepFool {
                    max_iter: s.max_iter,
                    overshoot: s.overshoot,
                })
            }
            "cw_l2" => {
                reject_field(self.epsilon.is_some(), "epsilon", name)?;
                reject_field(self.steps.is_some(), "steps", name)?;
                reject_field(self.eps_list.is_some(), "eps_list", name)?;
                let s = self
                    .cw
                    .as_ref()
                    .ok_or_else(|| bad("attack \"cw_l2\" needs a cw section"))?;
                Ok(AttackSpec::CarliniWagner(s.to_cw_config()))
            }
            other => Err(bad(format!(
                "unknown attack {other:?} (expected fgsm, step_ll, iter_basic, \
                 iter_ll, deepfool, or cw_l2)"
            ))),
        }
    }
}

/// Parses a budgeted-attack name/epsilon/steps triple (defense crafting
/// and transfer experiments; the unbudgeted attacks are rejected).
pub fn budgeted_spec(
    name: &str,
    epsilon: f64,
    steps: Option<usize>,
) -> Result<AttackSpec, CliError> {
    match name {
        "fgsm" | "step_ll" => {
            if steps.is_some() {
                return Err(bad(format!("steps does not apply to attack {name:?}")));
            }
            Ok(if name == "fgsm" {
                AttackSpec::Fgsm { epsilon }
            } else {
                AttackSpec::StepLl { epsilon }
            })
        }
        "iter_basic" | "iter_ll" => {
            let steps =
                steps.ok_or_else(|| bad(format!("attack {name:?} needs steps")))?;
            Ok(if name == "iter_basic" {
                AttackSpec::IterBasic { epsilon, steps }
            } else {
                AttackSpec::IterLl { epsilon, steps }
            })
        }
        other => Err(bad(format!(
            "attack {other:?} is not a budgeted attack \
             (expected fgsm, step_ll, iter_basic, or iter_ll)"
        ))),
    }
}

impl DefenseSection {
    pub fn to_adv_config(&self, base: TrainConfig) -> Result<AdvTrainConfig, CliError> {
        use advkit::attack::AttackBudget;

        let attack = match self.attack.as_str() {
            "fgsm" => TrainAttack::Fgsm,
            "step_ll" => TrainAttack::StepLl,
            "iter_basic" => TrainAttack::IterBasic,
            "iter_ll" => TrainAttack::IterLl,
            other => {
                return Err(bad(format!(
                    "unknown crafting attack {other:?} (expected fgsm, step_ll, \
                     iter_basic, or iter_ll)"
                )))
            }
        };
        let iterative = matches!(attack, TrainAttack::IterBasic | TrainAttack::IterLl);
        let mut budget = if iterative {
            let steps = self
                .steps
                .ok_or_else(|| bad(format!("crafting attack {:?} needs steps", self.attack)))?;
            AttackBudget::iterative(self.epsilon, steps)
        } else {
            if self.steps.is_some() {
                return Err(bad(format!(
                    "steps does not apply to crafting attack {:?}",
                    self.attack
                )));
            }
            if self.step_size.is_some() {
                return Err(bad(format!(
                    "step_size does not apply to crafting attack {:?}",
                    self.attack
                )));
            }
            AttackBudget::single_step(self.epsilon)
        };
        if let Some(step_size) = self.step_size {
            budget.step_size = step_size;
        }
        Ok(AdvTrainConfig {
            base,
            attack,
            budget,
            adv_fraction: self.adv_fraction,
        })
    }
}

impl TransferSection {
    pub fn metric(&self) -> Result<TransferMetric, CliError> {
        match self.metric.as_str() {
            "top1" => Ok(TransferMetric::Top1),
            "top5" => Ok(TransferMetric::Top5),
            other => Err(bad(format!(
                "unknown transfer metric {other:?} (expected top1 or top5)"
            ))),
        }
    }
}
