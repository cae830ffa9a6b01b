//! Adversarial example generators and a batch evaluation harness.
//!
//! Five generators: the single-step sign attacks (toward higher true-class
//! loss, or away from the least-likely class), their iterated projected
//! variants, a linearization attack that walks to the nearest decision
//! boundary, and an optimization attack over a tanh-reparameterized input.
//! All of them return an [`AttackResult`] carrying the crafted input, the
//! success flag (top-1 prediction differs from the true label), and the
//! perturbation norms.

mod carlini_wagner;
mod deepfool;
mod eval;
mod fast_gradient;

pub use carlini_wagner::{cw_l2, CwConfig};
pub use deepfool::deepfool;
pub use eval::{evaluate_attack, AttackReport, AttackSpec};
pub use fast_gradient::{fgsm, iter_attack, step_ll, IterMode};

use crate::error::{Error, Result};
use crate::tensor::{self, Tensor};

/// Perturbation constraints for the sign-based attacks: an `ℓ∞` radius,
/// an iteration count with per-step size, and the feature-domain bounds
/// every crafted input is clipped into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackBudget {
    pub epsilon: f64,
    pub steps: usize,
    pub step_size: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
}

impl AttackBudget {
    /// Budget for a one-shot attack: one step of size `epsilon`, unit clip
    /// bounds.
    pub fn single_step(epsilon: f64) -> Self {
        Self {
            epsilon,
            steps: 1,
            step_size: epsilon,
            clip_lo: 0.0,
            clip_hi: 1.0,
        }
    }

    /// Budget for an iterated attack: `steps` steps of the default size
    /// `epsilon / steps`, unit clip bounds.
    pub fn iterative(epsilon: f64, steps: usize) -> Self {
        let k = steps.max(1);
        Self {
            epsilon,
            steps: k,
            step_size: epsilon / k as f64,
            clip_lo: 0.0,
            clip_hi: 1.0,
        }
    }

    pub(crate) fn validate_common(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Argument(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.clip_lo <= self.clip_hi) {
            return Err(Error::Argument(format!(
                "clip bounds out of order: {} > {}",
                self.clip_lo, self.clip_hi
            )));
        }
        Ok(())
    }

    pub(crate) fn validate_iterative(&self) -> Result<()> {
        self.validate_common()?;
        if self.steps == 0 {
            return Err(Error::Argument("steps must be at least 1".to_string()));
        }
        if !self.step_size.is_finite() || self.step_size < 0.0 {
            return Err(Error::Argument(format!(
                "step_size must be finite and non-negative, got {}",
                self.step_size
            )));
        }
        if self.step_size > self.epsilon {
            return Err(Error::Argument(format!(
                "step_size {} exceeds the perturbation budget {}",
                self.step_size, self.epsilon
            )));
        }
        if self.step_size == 0.0 && self.epsilon > 0.0 {
            return Err(Error::Argument(
                "step_size must be positive when epsilon is positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one attack invocation. The norms always measure
/// `x_adv - x` where `x` is the original input.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub x_adv: Tensor,
    pub success: bool,
    pub l2: f64,
    pub linf: f64,
    pub iterations_used: usize,
}

impl AttackResult {
    pub(crate) fn measured(
        x: &Tensor,
        x_adv: Tensor,
        success: bool,
        iterations_used: usize,
    ) -> Result<Self> {
        let diff = x_adv.sub(x)?;
        let (l2, linf) = tensor::norms(&diff);
        Ok(Self {
            x_adv,
            success,
            l2,
            linf,
            iterations_used,
        })
    }
}
