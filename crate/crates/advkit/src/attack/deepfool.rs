//! Minimal-perturbation boundary attack via iterative linearization.
//!
//! At each iterate the classifier is linearized around the current point;
//! the closest linearized class boundary (in `ℓ2`) determines the step.
//! Steps accumulate until the prediction leaves the true class or the
//! iteration cap is reached. The final perturbation is inflated by a small
//! overshoot so the output actually crosses the boundary instead of
//! landing on it, then clipped into `[0, 1]`.

use crate::error::{Error, Result};
use crate::model::{
    argmax_slice, forward, input_grad_from_logit_cotangent, predict, MlpParams,
};
use crate::tensor::{clip, Tensor};

use super::AttackResult;

/// Distance to the nearest linearized boundary below which the iterate
/// counts as having reached it.
const BOUNDARY_EPS: f64 = 1e-12;

/// Runs the linearization attack. `overshoot` is the relative inflation of
/// the final accumulated perturbation (e.g. `0.02` for 2%).
///
/// The input is not required to lie in `[0, 1]`; only the final output is
/// clipped there. An input the model already misclassifies returns with
/// zero perturbation and immediate success.
pub fn deepfool(
    p: &MlpParams,
    x: &Tensor,
    y_true: usize,
    max_iter: usize,
    overshoot: f64,
) -> Result<AttackResult> {
    if max_iter == 0 {
        return Err(Error::Argument("max_iter must be at least 1".to_string()));
    }
    if !(overshoot >= 0.0) || !overshoot.is_finite() {
        return Err(Error::Argument(format!(
            "overshoot must be finite and non-negative, got {overshoot}"
        )));
    }
    let c = p.spec().class_count();
    if y_true >= c {
        return Err(Error::Argument(format!(
            "true label {y_true} out of range for {c} classes"
        )));
    }

    let factor = 1.0 + overshoot;
    let d = x.len();
    let mut r_total = vec![0.0; d];
    let mut iterations = 0usize;

    while iterations < max_iter {
        // Stop as soon as the point that would be returned (overshoot
        // included) already flips the label.
        let probe = add_scaled(x, &r_total, factor);
        if predict(p, &probe)? != y_true {
            break;
        }

        // Linearize at the accumulated (un-overshot) iterate.
        let point = add_scaled(x, &r_total, 1.0);
        let trace = forward(p, &point)?;
        let logits = trace.logits().to_vec();
        let y_hat = argmax_slice(&logits);

        let mut cot = vec![0.0; c];
        let grad_of = |k: usize, cot: &mut Vec<f64>| {
            cot[k] = 1.0;
            let g = input_grad_from_logit_cotangent(p, &trace, cot);
            cot[k] = 0.0;
            g
        };
        let g_hat = grad_of(y_hat, &mut cot);

        // Closest linearized boundary: minimize |f_k| / ‖w_k‖ over the
        // other classes, where f_k = z_k - z_ŷ and w_k = ∇z_k - ∇z_ŷ.
        let mut best: Option<(f64, f64, f64, Vec<f64>)> = None; // (dist, |f|, ‖w‖², w)
        for k in 0..c {
            if k == y_hat {
                continue;
            }
            let g_k = grad_of(k, &mut cot);
            let w: Vec<f64> = g_k
                .data()
                .iter()
                .zip(g_hat.data())
                .map(|(a, b)| a - b)
                .collect();
            let norm2: f64 = w.iter().map(|v| v * v).sum();
            if norm2 == 0.0 {
                continue;
            }
            let f_abs = (logits[k] - logits[y_hat]).abs();
            let dist = f_abs / norm2.sqrt();
            if best.as_ref().is_none_or(|(bd, ..)| dist < *bd) {
                best = Some((dist, f_abs, norm2, w));
            }
        }
        let (dist, f_abs, norm2, w) = best.ok_or(Error::DegenerateGradient)?;
        if dist <= BOUNDARY_EPS {
            // The iterate already sits on the nearest linearized boundary
            // (e.g. zero overshoot landed exactly on it); further steps
            // would have negligible length, so the loop has converged.
            break;
        }

        let scale = f_abs / norm2;
        for (r, wv) in r_total.iter_mut().zip(&w) {
            *r += scale * wv;
        }
        iterations += 1;
    }

    let x_adv = if iterations == 0 {
        x.clone()
    } else {
        clip(&add_scaled(x, &r_total, factor), 0.0, 1.0)?
    };
    let success = predict(p, &x_adv)? != y_true;
    AttackResult::measured(x, x_adv, success, iterations)
}

fn add_scaled(x: &Tensor, r: &[f64], factor: f64) -> Tensor {
    Tensor::from_vec(
        x.data()
            .iter()
            .zip(r)
            .map(|(xv, rv)| xv + factor * rv)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Layer, MlpSpec};

    /// Linear two-class model with z = [x·w1, x·w2], w1=(1,0), w2=(0,1).
    fn axis_model() -> MlpParams {
        let spec = MlpSpec::new(vec![2, 2], "axis").unwrap();
        MlpParams::from_layers(
            spec,
            0,
            vec![Layer {
                w: Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
                b: vec![0.0, 0.0],
            }],
        )
        .unwrap()
    }

    #[test]
    fn linear_closed_form_interior() {
        // x=(0.9, 0.4): z=(0.9, 0.4), predicted 0. f_1 = -0.5, w = (-1, 1),
        // so r = (0.5/2)·(-1,1) = (-0.25, 0.25), landing at (0.65, 0.65).
        let p = axis_model();
        let x = Tensor::from_vec(vec![0.9, 0.4]);
        let r = deepfool(&p, &x, 0, 50, 0.0).unwrap();
        assert_eq!(r.iterations_used, 1);
        let diff: Vec<f64> = r
            .x_adv
            .data()
            .iter()
            .zip(x.data())
            .map(|(a, b)| a - b)
            .collect();
        assert!((diff[0] - (-0.25)).abs() <= 1e-9, "diff {diff:?}");
        assert!((diff[1] - 0.25).abs() <= 1e-9);
        // Landing on the linear boundary: logits equal within float noise.
        let trace = forward(&p, &r.x_adv).unwrap();
        let z = trace.logits();
        assert!((z[0] - z[1]).abs() <= 1e-9);
    }

    #[test]
    fn linear_closed_form_out_of_domain_input() {
        // The classic construction x=(2,1): unclipped landing is
        // (1.5, 1.5); the [0,1] clip pulls the output to (1,1).
        let p = axis_model();
        let x = Tensor::from_vec(vec![2.0, 1.0]);
        let r = deepfool(&p, &x, 0, 50, 0.0).unwrap();
        assert_eq!(r.iterations_used, 1);
        assert_eq!(r.x_adv.data(), &[1.0, 1.0]);
    }

    #[test]
    fn already_misclassified_returns_immediately() {
        let p = axis_model();
        let x = Tensor::from_vec(vec![0.2, 0.8]); // predicted class 1
        let r = deepfool(&p, &x, 0, 50, 0.02).unwrap();
        assert!(r.success);
        assert_eq!(r.iterations_used, 0);
        assert_eq!(r.l2, 0.0);
        assert!(r.x_adv.bits_eq(&x));
    }

    #[test]
    fn overshoot_crosses_in_one_iteration_on_linear_model() {
        let p = axis_model();
        let x = Tensor::from_vec(vec![0.9, 0.4]);
        let r = deepfool(&p, &x, 0, 50, 0.02).unwrap();
        assert!(r.success);
        assert_eq!(r.iterations_used, 1);
        // Perturbation still matches the closed form within the overshoot.
        assert!((r.l2 - 1.02 * 0.25 * 2.0_f64.sqrt()).abs() <= 1e-9);
    }

    #[test]
    fn degenerate_gradients_are_reported() {
        // Constant model: every logit gradient is zero.
        let spec = MlpSpec::new(vec![2, 2], "flat").unwrap();
        let p = MlpParams::from_layers(
            spec,
            0,
            vec![Layer {
                w: Tensor::zeros(vec![2, 2]),
                b: vec![1.0, 0.0],
            }],
        )
        .unwrap();
        let x = Tensor::from_vec(vec![0.5, 0.5]);
        assert!(matches!(
            deepfool(&p, &x, 0, 10, 0.02),
            Err(Error::DegenerateGradient)
        ));
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = axis_model();
        let x = Tensor::from_vec(vec![0.9, 0.4]);
        assert!(deepfool(&p, &x, 0, 0, 0.02).is_err());
        assert!(deepfool(&p, &x, 0, 10, -0.5).is_err());
        assert!(deepfool(&p, &x, 0, 10, f64::NAN).is_err());
    }
}
