//! Sign-based gradient attacks, single-step and iterated.
//!
//! All four share one core loop that tracks the perturbation separately
//! from the input. Keeping the running delta in its own buffer makes the
//! `ℓ∞` projection exact — each component is clamped into `[-ε, ε]`
//! directly — and makes the single-step cases reduce to precisely
//! `clip(x ± ε·sign(∇), lo, hi)` bit for bit.

use crate::error::{Error, Result};
use crate::model::{least_likely_class, loss_and_input_grad, predict, MlpParams};
use crate::tensor::{clip, sign, Tensor};

use super::{AttackBudget, AttackResult};

/// Direction of the iterated attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterMode {
    /// Ascend the loss of the true class (drive the prediction anywhere
    /// else).
    Basic,
    /// Descend the loss of the least-likely class, recomputed at every
    /// iterate (drive the prediction toward it).
    LeastLikely,
}

enum StepTarget {
    AscendTrue,
    DescendLeastLikely,
}

/// One-shot sign attack: `x_adv = clip(x + ε·sign(∇ₓ L(h(x), y_true)))`.
/// Exactly one gradient evaluation; `budget.steps`/`step_size` are unused.
pub fn fgsm(
    p: &MlpParams,
    x: &Tensor,
    y_true: usize,
    budget: &AttackBudget,
) -> Result<AttackResult> {
    budget.validate_common()?;
    signed_steps(p, x, y_true, budget, 1, budget.epsilon, StepTarget::AscendTrue)
}

/// One-shot least-likely-class attack:
/// `x_adv = clip(x - ε·sign(∇ₓ L(h(x), y_LL)))` with `y_LL` the class of
/// minimal logit. The true label only feeds the success flag.
pub fn step_ll(
    p: &MlpParams,
    x: &Tensor,
    y_true: usize,
    budget: &AttackBudget,
) -> Result<AttackResult> {
    budget.validate_common()?;
    signed_steps(
        p,
        x,
        y_true,
        budget,
        1,
        budget.epsilon,
        StepTarget::DescendLeastLikely,
    )
}

/// Iterated sign attack: `budget.steps` steps of size `budget.step_size`,
/// the running perturbation projected onto the `ℓ∞` ball of radius
/// `budget.epsilon` after every step and the iterate clipped to the
/// feature domain. Always runs all steps (no early stopping).
pub fn iter_attack(
    p: &MlpParams,
    x: &Tensor,
    y_true: usize,
    budget: &AttackBudget,
    mode: IterMode,
) -> Result<AttackResult> {
    budget.validate_iterative()?;
    let target = match mode {
        IterMode::Basic => StepTarget::AscendTrue,
        IterMode::LeastLikely => StepTarget::DescendLeastLikely,
    };
    signed_steps(p, x, y_true, budget, budget.steps, budget.step_size, target)
}

fn signed_steps(
    p: &MlpParams,
    x: &Tensor,
    y_true: usize,
    budget: &AttackBudget,
    steps: usize,
    alpha: f64,
    target: StepTarget,
) -> Result<AttackResult> {
    let c = p.spec().class_count();
    if y_true >= c {
        return Err(Error::Argument(format!(
            "true label {y_true} out of range for {c} classes"
        )));
    }
    let (lo, hi) = (budget.clip_lo, budget.clip_hi);
    if x.data().iter().any(|&v| v < lo || v > hi) {
        return Err(Error::Argument(format!(
            "input lies outside the clip domain [{lo}, {hi}]"
        )));
    }

    let eps = budget.epsilon;
    if eps == 0.0 {
        // Zero budget: the input is returned untouched, bit for bit.
        let success = predict(p, x)? != y_true;
        return AttackResult::measured(x, x.clone(), success, 0);
    }

    let signed_alpha = match target {
        StepTarget::AscendTrue => alpha,
        StepTarget::DescendLeastLikely => -alpha,
    };
    let mut delta = vec![0.0; x.len()];
    let mut current = x.clone();
    for _ in 0..steps {
        let loss_class = match target {
            StepTarget::AscendTrue => y_true,
            StepTarget::DescendLeastLikely => least_likely_class(p, &current)?,
        };
        let (_, grad) = loss_and_input_grad(p, &current, loss_class)?;
        let s = sign(&grad);
        for (dv, sv) in delta.iter_mut().zip(s.data()) {
            *dv = (*dv + signed_alpha * sv).max(-eps).min(eps);
        }
        let stepped: Vec<f64> = x.data().iter().zip(&delta).map(|(xv, dv)| xv + dv).collect();
        current = clip(&Tensor::from_vec(stepped), lo, hi)?;
    }

    let success = predict(p, &current)? != y_true;
    AttackResult::measured(x, current, success, steps)
}
