//! Adversarial training and robustness-curve evaluation.
//!
//! Training hardens a model by crafting perturbed inputs against the
//! current parameters inside every minibatch, so the model continually
//! sees its own best adversarial examples. Robustness curves then sweep a
//! budget-bounded attack over an ε grid to show how accuracy degrades.

use crate::attack::{
    evaluate_attack, fgsm, iter_attack, step_ll, AttackBudget, AttackSpec, IterMode,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{
    train_engine, BatchMixer, EpochStats, MlpParams, MlpSpec, TrainConfig,
};
use crate::tensor::Tensor;

/// Budget-bounded attacks usable inside the training loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainAttack {
    /// Single signed-gradient step away from the true class.
    Fgsm,
    /// Single signed-gradient step toward the least-likely class.
    StepLl,
    /// Iterated projected steps away from the true class.
    IterBasic,
    /// Iterated projected steps toward the least-likely class.
    IterLl,
}

/// Configuration of adversarially-mixed training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvTrainConfig {
    /// Plain optimization settings (epochs, batch size, rate, seed).
    pub base: TrainConfig,
    /// Attack used to craft the in-batch adversarial examples.
    pub attack: TrainAttack,
    /// Perturbation budget handed to that attack.
    pub budget: AttackBudget,
    /// Fraction of each minibatch replaced by adversarial versions
    /// (rounded up); `0` trains purely on clean data.
    pub adv_fraction: f64,
}

impl AdvTrainConfig {
    /// Defaults: craft with a single least-likely step and replace half of
    /// every batch. Single-step least-likely crafting avoids the label
    /// leaking that true-label crafting causes during training.
    pub fn new(base: TrainConfig, budget: AttackBudget) -> Self {
        Self {
            base,
            attack: TrainAttack::StepLl,
            budget,
            adv_fraction: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.adv_fraction) || !self.adv_fraction.is_finite() {
            return Err(Error::Argument(format!(
                "adv_fraction must lie in [0, 1], got {}",
                self.adv_fraction
            )));
        }
        match self.attack {
            TrainAttack::Fgsm | TrainAttack::StepLl => self.budget.validate_common(),
            TrainAttack::IterBasic | TrainAttack::IterLl => self.budget.validate_iterative(),
        }
    }
}

/// Craft one adversarial replacement for `(x, y)` against parameters `p`.
fn craft(
    cfg: &AdvTrainConfig,
    p: &MlpParams,
    x: &Tensor,
    y: usize,
) -> Result<Tensor> {
    let r = match cfg.attack {
        TrainAttack::Fgsm => fgsm(p, x, y, &cfg.budget)?,
        TrainAttack::StepLl => step_ll(p, x, y, &cfg.budget)?,
        TrainAttack::IterBasic => iter_attack(p, x, y, &cfg.budget, IterMode::Basic)?,
        TrainAttack::IterLl => iter_attack(p, x, y, &cfg.budget, IterMode::LeastLikely)?,
    };
    Ok(r.x_adv)
}

/// Minibatch SGD where a seeded-chosen share of every batch is replaced by
/// adversarial examples crafted against the current parameters. With
/// `adv_fraction = 0` this reproduces plain training exactly, bit for bit.
pub fn adversarial_train(
    spec: &MlpSpec,
    cfg: &AdvTrainConfig,
    data: &Dataset,
) -> Result<(MlpParams, Vec<EpochStats>)> {
    cfg.validate()?;
    let craft_fn = |p: &MlpParams, x: &Tensor, y: usize| craft(cfg, p, x, y);
    let mixer = BatchMixer {
        fraction: cfg.adv_fraction,
        craft: &craft_fn,
    };
    train_engine(spec, &cfg.base, data, Some(mixer))
}

/// One evaluated point of a robustness curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    /// `ℓ∞` budget of this row; the leading clean row has `0`.
    pub epsilon: f64,
    pub top1: f64,
    pub top5: f64,
    pub success_rate: f64,
    pub median_l2: f64,
}

/// Sweeps a budget-bounded attack over `eps_list` on a fixed model,
/// prepending a clean (`ε = 0`) row. `eps_list` must be nonempty and
/// strictly ascending; the attack must carry an `ℓ∞` budget.
pub fn robustness_curve(
    p: &MlpParams,
    data: &Dataset,
    spec: &AttackSpec,
    eps_list: &[f64],
) -> Result<Vec<CurveRow>> {
    if eps_list.is_empty() {
        return Err(Error::Argument(
            "epsilon sweep needs at least one value".to_string(),
        ));
    }
    if eps_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument(format!(
            "epsilon sweep must be strictly ascending, got {eps_list:?}"
        )));
    }
    let at = |eps: f64| {
        spec.with_epsilon(eps).ok_or_else(|| {
            Error::Argument(format!(
                "attack {} has no perturbation budget to sweep",
                spec.name()
            ))
        })
    };

    let mut rows = Vec::with_capacity(eps_list.len() + 1);
    for eps in std::iter::once(0.0).chain(eps_list.iter().copied()) {
        let report = evaluate_attack(p, data, &at(eps)?)?;
        rows.push(CurveRow {
            epsilon: eps,
            top1: report.adv_top1,
            top5: report.adv_top5,
            success_rate: report.success_rate,
            median_l2: report.median_l2,
        });
    }
    Ok(rows)
}
