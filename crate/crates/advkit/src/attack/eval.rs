//! Whole-dataset attack evaluation.
//!
//! [`AttackSpec`] names an attack together with its knobs so callers can
//! sweep budgets generically; [`evaluate_attack`] runs one spec over every
//! example of a dataset and aggregates accuracy, success, and perturbation
//! norms in dataset order, so reports are deterministic.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{forward, ranked_ahead, MlpParams};
use crate::tensor::Tensor;

use super::carlini_wagner::{cw_l2, CwConfig};
use super::deepfool::deepfool;
use super::fast_gradient::{fgsm, iter_attack, step_ll, IterMode};
use super::{AttackBudget, AttackResult};

/// A fully-specified attack, ready to run on any `(model, example)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackSpec {
    /// Single signed-gradient step of size `epsilon` away from the true
    /// class.
    Fgsm { epsilon: f64 },
    /// Single signed-gradient step of size `epsilon` toward the
    /// least-likely class.
    StepLl { epsilon: f64 },
    /// `steps` projected signed-gradient steps of size `epsilon / steps`
    /// ascending the true-class loss.
    IterBasic { epsilon: f64, steps: usize },
    /// `steps` projected signed-gradient steps of size `epsilon / steps`
    /// descending toward the least-likely class.
    IterLl { epsilon: f64, steps: usize },
    /// Iterative linearization attack minimizing the `ℓ2` perturbation.
    DeepFool { max_iter: usize, overshoot: f64 },
    /// Tanh-reparameterized `ℓ2` optimization attack.
    CarliniWagner(CwConfig),
}

impl AttackSpec {
    /// Short machine-readable name used in CSV and report output.
    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::Fgsm { .. } => "fgsm",
            AttackSpec::StepLl { .. } => "step_ll",
            AttackSpec::IterBasic { .. } => "iter_basic",
            AttackSpec::IterLl { .. } => "iter_ll",
            AttackSpec::DeepFool { .. } => "deepfool",
            AttackSpec::CarliniWagner(_) => "cw_l2",
        }
    }

    /// The `ℓ∞` budget, for the budget-bounded attacks.
    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            AttackSpec::Fgsm { epsilon }
            | AttackSpec::StepLl { epsilon }
            | AttackSpec::IterBasic { epsilon, .. }
            | AttackSpec::IterLl { epsilon, .. } => Some(epsilon),
            AttackSpec::DeepFool { .. } | AttackSpec::CarliniWagner(_) => None,
        }
    }

    /// The same attack with its `ℓ∞` budget replaced (iterative variants
    /// keep their step count and rescale the step size). `None` for
    /// attacks that are not budget-bounded.
    pub fn with_epsilon(&self, epsilon: f64) -> Option<AttackSpec> {
        match *self {
            AttackSpec::Fgsm { .. } => Some(AttackSpec::Fgsm { epsilon }),
            AttackSpec::StepLl { .. } => Some(AttackSpec::StepLl { epsilon }),
            AttackSpec::IterBasic { steps, .. } => {
                Some(AttackSpec::IterBasic { epsilon, steps })
            }
            AttackSpec::IterLl { steps, .. } => Some(AttackSpec::IterLl { epsilon, steps }),
            AttackSpec::DeepFool { .. } | AttackSpec::CarliniWagner(_) => None,
        }
    }

    /// Runs the attack on one example.
    pub fn run(&self, p: &MlpParams, x: &Tensor, y_true: usize) -> Result<AttackResult> {
        match *self {
            AttackSpec::Fgsm { epsilon } => {
                fgsm(p, x, y_true, &AttackBudget::single_step(epsilon))
            }
            AttackSpec::StepLl { epsilon } => {
                step_ll(p, x, y_true, &AttackBudget::single_step(epsilon))
            }
            AttackSpec::IterBasic { epsilon, steps } => iter_attack(
                p,
                x,
                y_true,
                &AttackBudget::iterative(epsilon, steps),
                IterMode::Basic,
            ),
            AttackSpec::IterLl { epsilon, steps } => iter_attack(
                p,
                x,
                y_true,
                &AttackBudget::iterative(epsilon, steps),
                IterMode::LeastLikely,
            ),
            AttackSpec::DeepFool { max_iter, overshoot } => {
                deepfool(p, x, y_true, max_iter, overshoot)
            }
            AttackSpec::CarliniWagner(cfg) => cw_l2(p, x, y_true, &cfg),
        }
    }
}

/// Aggregate results of one attack over one dataset.
///
/// Accuracies and rates are fractions in `[0, 1]`. `success_rate` counts
/// every example whose adversarial prediction differs from the true
/// label; the `cleanly_correct` variant restricts to examples the model
/// got right before the attack. `median_l2_successes` is the median
/// perturbation norm over that fooled cleanly-correct subset — the
/// cleanest size measure of the attack, since already-misclassified
/// examples need no perturbation at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackReport {
    pub attack: String,
    pub epsilon: Option<f64>,
    pub examples: usize,
    pub clean_top1: f64,
    pub clean_top5: f64,
    pub adv_top1: f64,
    pub adv_top5: f64,
    pub success_rate: f64,
    pub success_rate_cleanly_correct: Option<f64>,
    pub mean_l2: f64,
    pub median_l2: f64,
    pub mean_linf: f64,
    pub median_linf: f64,
    pub median_l2_successes: Option<f64>,
}

/// Median of an unordered sample: the middle value, or the mean of the
/// two middle values for an even count. `None` on an empty sample.
pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Runs `spec` against every example of `data` on model `p` and
/// aggregates in dataset order.
pub fn evaluate_attack(p: &MlpParams, data: &Dataset, spec: &AttackSpec) -> Result<AttackReport> {
    if data.is_empty() {
        return Err(Error::Argument(
            "attack evaluation needs a nonempty dataset".to_string(),
        ));
    }
    let top_k = 5.min(p.spec().class_count());

    let mut clean1 = 0usize;
    let mut clean5 = 0usize;
    let mut adv1 = 0usize;
    let mut adv5 = 0usize;
    let mut fooled = 0usize;
    let mut cleanly_correct = 0usize;
    let mut fooled_cleanly_correct = 0usize;
    let mut l2s = Vec::with_capacity(data.len());
    let mut linfs = Vec::with_capacity(data.len());
    let mut l2_fooled_correct = Vec::new();

    for i in 0..data.len() {
        let x = data.example(i);
        let y = data.label(i);
        let clean_rank = ranked_ahead(forward(p, &x)?.logits(), y);
        let r = spec.run(p, &x, y)?;
        let adv_rank = ranked_ahead(forward(p, &r.x_adv)?.logits(), y);

        let clean_ok = clean_rank == 0;
        clean1 += usize::from(clean_ok);
        clean5 += usize::from(clean_rank < top_k);
        adv1 += usize::from(adv_rank == 0);
        adv5 += usize::from(adv_rank < top_k);
        fooled += usize::from(r.success);
        if clean_ok {
            cleanly_correct += 1;
            if r.success {
                fooled_cleanly_correct += 1;
                l2_fooled_correct.push(r.l2);
            }
        }
        l2s.push(r.l2);
        linfs.push(r.linf);
    }

    let n = data.len() as f64;
    Ok(AttackReport {
        attack: spec.name().to_string(),
        epsilon: spec.epsilon(),
        examples: data.len(),
        clean_top1: clean1 as f64 / n,
        clean_top5: clean5 as f64 / n,
        adv_top1: adv1 as f64 / n,
        adv_top5: adv5 as f64 / n,
        success_rate: fooled as f64 / n,
        success_rate_cleanly_correct: (cleanly_correct > 0)
            .then(|| fooled_cleanly_correct as f64 / cleanly_correct as f64),
        mean_l2: mean(&l2s),
        median_l2: median(&l2s).expect("nonempty"),
        mean_linf: mean(&linfs),
        median_linf: median(&linfs).expect("nonempty"),
        median_l2_successes: median(&l2_fooled_correct),
    })
}
