//! `ℓ2` optimization attack over a tanh-reparameterized input.
//!
//! The crafted input is `x' = (tanh(ω) + 1) / 2`, which lives in `(0, 1)`
//! for any real `ω`, so the box constraint disappears from the
//! optimization. Plain gradient descent minimizes
//! `‖x' − x‖₂² + c · f(x')` where the hinge
//! `f = max(Z_y − max_{i≠y} Z_i, −confidence)` rewards pushing the true
//! class below the strongest rival by the confidence margin. An outer
//! binary search tunes the tradeoff constant `c`, keeping the smallest
//! successful perturbation seen anywhere.

use crate::error::{Error, Result};
use crate::model::{argmax_slice, forward, input_grad_from_logit_cotangent, MlpParams};
use crate::tensor::Tensor;

use super::AttackResult;

/// Hyperparameters of the optimization attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwConfig {
    /// Initial tradeoff constant between perturbation size and attack
    /// strength.
    pub c: f64,
    /// Required logit margin of the strongest rival over the true class.
    pub confidence: f64,
    /// Gradient-descent steps per tradeoff constant.
    pub steps: usize,
    /// Gradient-descent step size in `ω` space.
    pub learning_rate: f64,
    /// Additional optimization rounds spent bisecting `c`. Zero means a
    /// single round at the initial constant.
    pub binary_search_steps: usize,
}

impl Default for CwConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            confidence: 0.0,
            steps: 100,
            learning_rate: 0.05,
            binary_search_steps: 5,
        }
    }
}

impl CwConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Argument(format!(
                "tradeoff constant must be positive and finite, got {}",
                self.c
            )));
        }
        if !(self.confidence >= 0.0) || !self.confidence.is_finite() {
            return Err(Error::Argument(format!(
                "confidence must be non-negative and finite, got {}",
                self.confidence
            )));
        }
        if self.steps == 0 {
            return Err(Error::Argument("steps must be at least 1".to_string()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Argument(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Margin of the true class over its strongest rival, and that rival's
/// index (ties to the lowest index among the rivals).
pub(crate) fn logit_margin(logits: &[f64], y_true: usize) -> (f64, usize) {
    let mut rival = usize::MAX;
    for (i, &z) in logits.iter().enumerate() {
        if i == y_true {
            continue;
        }
        if rival == usize::MAX || z > logits[rival] {
            rival = i;
        }
    }
    (logits[y_true] - logits[rival], rival)
}

fn decode(omega: &[f64]) -> (Tensor, Vec<f64>) {
    let t: Vec<f64> = omega.iter().map(|w| w.tanh()).collect();
    let xp = Tensor::from_vec(t.iter().map(|v| (v + 1.0) / 2.0).collect());
    (xp, t)
}

/// Runs the optimization attack against `(x, y_true)`.
///
/// The input is shrunk into `[1e-6, 1 - 1e-6]` before the `atanh`
/// reparameterization so boundary pixels do not map to infinities. The
/// result is the smallest-`ℓ2` successful candidate observed across every
/// round, or the final iterate if no candidate ever succeeded.
pub fn cw_l2(
    p: &MlpParams,
    x: &Tensor,
    y_true: usize,
    cfg: &CwConfig,
) -> Result<AttackResult> {
    cfg.validate()?;
    let c_classes = p.spec().class_count();
    if y_true >= c_classes {
        return Err(Error::Argument(format!(
            "true label {y_true} out of range for {c_classes} classes"
        )));
    }

    const EDGE: f64 = 1e-6;
    let omega0: Vec<f64> = x
        .data()
        .iter()
        .map(|&v| (2.0 * v.clamp(EDGE, 1.0 - EDGE) - 1.0).atanh())
        .collect();

    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    let mut c_cur = cfg.c;
    let mut best: Option<(f64, Tensor)> = None;
    let mut last_candidate: Option<Tensor> = None;
    let mut total_steps = 0usize;

    for _ in 0..=cfg.binary_search_steps {
        let mut omega = omega0.clone();
        let mut round_success = false;

        for step in 0..=cfg.steps {
            let (xp, tanh_vals) = decode(&omega);
            let trace = forward(p, &xp)?;
            let logits = trace.logits();

            if argmax_slice(logits) != y_true {
                round_success = true;
                let l2 = xp.sub(x)?.l2_norm();
                if best.as_ref().is_none_or(|(bl, _)| l2 < *bl) {
                    best = Some((l2, xp.clone()));
                }
            }
            if step == cfg.steps {
                // Final evaluation of the round: no further update.
                last_candidate = Some(xp);
                break;
            }

            let (margin, rival) = logit_margin(logits, y_true);
            let mut grad_x: Vec<f64> = xp
                .data()
                .iter()
                .zip(x.data())
                .map(|(a, b)| 2.0 * (a - b))
                .collect();
            if margin > -cfg.confidence {
                // Hinge active: push the true logit down, the rival up.
                let mut cot = vec![0.0; c_classes];
                cot[y_true] = 1.0;
                cot[rival] = -1.0;
                let g = input_grad_from_logit_cotangent(p, &trace, &cot);
                for (gx, gf) in grad_x.iter_mut().zip(g.data()) {
                    *gx += c_cur * gf;
                }
            }
            for ((w, gx), t) in omega.iter_mut().zip(&grad_x).zip(&tanh_vals) {
                // dx'/dω = (1 − tanh²ω) / 2
                *w -= cfg.learning_rate * gx * 0.5 * (1.0 - t * t);
            }
            total_steps += 1;
        }

        if round_success {
            upper = c_cur;
        } else {
            lower = c_cur;
        }
        c_cur = if upper.is_finite() {
            0.5 * (lower + upper)
        } else {
            c_cur * 10.0
        };
    }

    match best {
        Some((_, x_adv)) => AttackResult::measured(x, x_adv, true, total_steps),
        None => {
            let x_adv = last_candidate.expect("at least one round evaluated");
            AttackResult::measured(x, x_adv, false, total_steps)
        }
    }
}
