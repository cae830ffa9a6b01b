//! Built-in numerical self-checks.
//!
//! Two independent oracles guard the crate's calculus: a finite-difference
//! sweep over every analytic gradient (input and parameters alike), and a
//! closed-form check of the linearization attack on random affine
//! classifiers, where the minimal boundary-crossing perturbation is known
//! exactly. The `selftest` CLI subcommand and the test suite both run
//! these; they are deterministic for a given seed.

use crate::attack::deepfool;
use crate::error::Error;
use crate::model::{
    forward, init_params, loss_and_grads, Layer, MlpParams, MlpSpec,
};
use crate::rng::RngStream;
use crate::tensor::{cross_entropy, finite_diff_grad, Tensor};

/// Central-difference step for all finite-difference probes.
const FD_STEP: f64 = 1e-5;
/// Relative tolerance for gradient agreement.
const REL_TOL: f64 = 1e-5;
/// Absolute tolerance for gradients near zero.
const ABS_TOL: f64 = 1e-8;
/// Allowed coordinate-wise gap between the attack's one-step perturbation
/// and the closed-form minimal perturbation on an affine classifier.
const MATCH_TOL: f64 = 1e-6;
/// Allowed logit gap between the crossed class pair at the returned point
/// when no overshoot is applied.
const RESIDUAL_TOL: f64 = 1e-9;

const GRADIENT_ORACLE_SEED: u64 = 41;
const AFFINE_CHECK_SEED: u64 = 47;

/// Outcome of one self-check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// One-line human-readable summary (worst margins, counts, or the
    /// failure reason).
    pub detail: String,
}

impl CheckResult {
    fn failed(name: &'static str, detail: String) -> CheckResult {
        CheckResult {
            name,
            passed: false,
            detail,
        }
    }
}

/// Runs both self-checks with their committed seeds and sizes.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        gradient_oracle_check(20, GRADIENT_ORACLE_SEED),
        deepfool_closed_form_check(10, AFFINE_CHECK_SEED),
    ]
}

/// Ratio of the observed gradient gap to the allowed gap; ≤ 1 passes.
fn tolerance_ratio(analytic: f64, fd: f64) -> f64 {
    let diff = (analytic - fd).abs();
    diff / ABS_TOL.max(REL_TOL * analytic.abs().max(fd.abs()))
}

/// Compares every analytic derivative of the cross-entropy loss — with
/// respect to the input and to every weight and bias — against central
/// finite differences on `triples` randomly shaped models, inputs, and
/// labels.
pub fn gradient_oracle_check(triples: usize, seed: u64) -> CheckResult {
    const NAME: &str = "gradient finite-difference oracle";
    let mut rng = RngStream::new(seed);
    let mut worst: f64 = 0.0;
    let mut compared: usize = 0;
    let mut non_finite = false;

    for t in 0..triples {
        // Random small architecture: 3–6 inputs, one or two hidden layers
        // of 4–8 units, 3–5 classes.
        let d = 3 + rng.next_index(4);
        let c = 3 + rng.next_index(3);
        let mut widths = vec![d];
        for _ in 0..(1 + rng.next_index(2)) {
            widths.push(4 + rng.next_index(5));
        }
        widths.push(c);
        let spec = match MlpSpec::new(widths, format!("grad-check-{t}")) {
            Ok(s) => s,
            Err(e) => return CheckResult::failed(NAME, format!("bad spec: {e}")),
        };
        let mut params = init_params(&spec, rng.next_u64());
        // Seeded init leaves biases at zero; jitter them so the probe
        // exercises generic parameter values.
        for layer in params.layers_mut() {
            for b in layer.b.iter_mut() {
                *b = rng.uniform_in(-0.3, 0.3);
            }
        }
        let x = Tensor::from_vec((0..d).map(|_| rng.uniform_in(0.05, 0.95)).collect());
        let y = rng.next_index(c);

        let (_, param_grads, input_grad) = match loss_and_grads(&params, &x, y) {
            Ok(v) => v,
            Err(e) => return CheckResult::failed(NAME, format!("triple {t}: {e}")),
        };

        let loss_of = |p: &MlpParams, xx: &Tensor| -> f64 {
            forward(p, xx)
                .and_then(|tr| cross_entropy(&tr.logits_tensor(), y))
                .map(|(loss, _)| loss)
                .unwrap_or(f64::NAN)
        };

        let mut track = |analytic: f64, fd: f64| {
            let ratio = tolerance_ratio(analytic, fd);
            if ratio.is_finite() {
                worst = worst.max(ratio);
            } else {
                non_finite = true;
            }
            compared += 1;
        };

        let fd_input = finite_diff_grad(|xx| loss_of(&params, xx), &x, FD_STEP);
        for (&a, &fd) in input_grad.data().iter().zip(fd_input.data()) {
            track(a, fd);
        }

        for li in 0..param_grads.len() {
            for wi in 0..param_grads[li].w.len() {
                let mut plus = params.clone();
                plus.layers_mut()[li].w.data_mut()[wi] += FD_STEP;
                let mut minus = params.clone();
                minus.layers_mut()[li].w.data_mut()[wi] -= FD_STEP;
                let fd = (loss_of(&plus, &x) - loss_of(&minus, &x)) / (2.0 * FD_STEP);
                track(param_grads[li].w.data()[wi], fd);
            }
            for bi in 0..param_grads[li].b.len() {
                let mut plus = params.clone();
                plus.layers_mut()[li].b[bi] += FD_STEP;
                let mut minus = params.clone();
                minus.layers_mut()[li].b[bi] -= FD_STEP;
                let fd = (loss_of(&plus, &x) - loss_of(&minus, &x)) / (2.0 * FD_STEP);
                track(param_grads[li].b[bi], fd);
            }
        }
    }

    CheckResult {
        name: NAME,
        passed: !non_finite && worst <= 1.0,
        detail: if non_finite {
            format!("{triples} triples: non-finite derivative encountered")
        } else {
            format!(
                "{triples} triples, {compared} partial derivatives; worst gap at \
                 {:.3}x the tolerance (rel {REL_TOL:.0e}, abs {ABS_TOL:.0e})",
                worst
            )
        },
    }
}

/// A random affine classifier whose minimal boundary-crossing
/// perturbation from `x` is known in closed form.
struct AffineCase {
    params: MlpParams,
    x: Tensor,
    y_true: usize,
    /// The class whose boundary is nearest.
    nearest: usize,
    /// Exact minimal perturbation reaching that boundary.
    r_star: Vec<f64>,
}

/// Draws an affine classifier with logits exactly `margins[i]` at `x`,
/// the true class on top, and a nearest decision boundary close enough
/// that the crossing point stays strictly inside `[0,1]`.
fn draw_affine_case(rng: &mut RngStream, tag: usize) -> Result<AffineCase, Error> {
    for _ in 0..100 {
        let d = 4 + rng.next_index(5);
        let c = 3 + rng.next_index(3);
        let w_data: Vec<f64> = (0..c * d).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let w = Tensor::new(vec![c, d], w_data)?;
        let x: Vec<f64> = (0..d).map(|_| rng.uniform_in(0.35, 0.65)).collect();
        let y_true = rng.next_index(c);
        let mut margins = vec![0.0; c];
        for (k, m) in margins.iter_mut().enumerate() {
            *m = if k == y_true {
                0.15
            } else {
                rng.uniform_in(0.0, 0.1)
            };
        }
        let b: Vec<f64> = (0..c)
            .map(|i| {
                let dot: f64 = w.row(i).iter().zip(&x).map(|(wj, xj)| wj * xj).sum();
                margins[i] - dot
            })
            .collect();

        // Closed form: for each rival class the distance to its linear
        // boundary is |f_k - f_y| / ||w_k - w_y||; the attack must cross
        // the nearest one.
        let mut best: Option<(usize, f64, f64)> = None; // (class, dist, norm2)
        let mut degenerate = false;
        for k in (0..c).filter(|&k| k != y_true) {
            let diff: Vec<f64> = w
                .row(k)
                .iter()
                .zip(w.row(y_true))
                .map(|(a, b)| a - b)
                .collect();
            let norm2: f64 = diff.iter().map(|v| v * v).sum();
            if norm2 < 1e-12 {
                degenerate = true;
                break;
            }
            let f_gap = (margins[k] - margins[y_true]).abs();
            let dist = f_gap / norm2.sqrt();
            if best.map_or(true, |(_, bd, _)| dist < bd) {
                best = Some((k, dist, norm2));
            }
        }
        if degenerate {
            continue;
        }
        let (nearest, dist, norm2) = best.expect("at least two classes");
        // Keep the crossing point well inside the box so clipping stays
        // inert and the closed form is exact.
        if dist > 0.3 {
            continue;
        }

        let f_gap = (margins[nearest] - margins[y_true]).abs();
        let r_star: Vec<f64> = w
            .row(nearest)
            .iter()
            .zip(w.row(y_true))
            .map(|(a, b)| (f_gap / norm2) * (a - b))
            .collect();

        let spec = MlpSpec::new(vec![d, c], format!("affine-check-{tag}"))?;
        let params = MlpParams::from_layers(spec, 0, vec![Layer { w, b }])?;
        return Ok(AffineCase {
            params,
            x: Tensor::from_vec(x),
            y_true,
            nearest,
            r_star,
        });
    }
    Err(Error::Argument(
        "could not draw a well-conditioned affine classifier".to_string(),
    ))
}

/// Runs the linearization attack with zero overshoot on `models` random
/// affine classifiers and compares its single-step perturbation against
/// the closed-form minimal perturbation, plus the logit residual on the
/// crossed boundary.
pub fn deepfool_closed_form_check(models: usize, seed: u64) -> CheckResult {
    const NAME: &str = "affine closed-form attack oracle";
    let mut rng = RngStream::new(seed);
    let mut worst_match: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;

    for m in 0..models {
        let case = match draw_affine_case(&mut rng, m) {
            Ok(c) => c,
            Err(e) => return CheckResult::failed(NAME, format!("case {m}: {e}")),
        };
        let result = match deepfool(&case.params, &case.x, case.y_true, 50, 0.0) {
            Ok(r) => r,
            Err(e) => return CheckResult::failed(NAME, format!("case {m}: attack: {e}")),
        };
        if result.iterations_used != 1 {
            return CheckResult::failed(
                NAME,
                format!(
                    "case {m}: took {} iterations on an affine classifier",
                    result.iterations_used
                ),
            );
        }

        for i in 0..case.x.len() {
            let applied = result.x_adv.data()[i] - case.x.data()[i];
            let gap = (applied - case.r_star[i]).abs();
            worst_match = worst_match.max(gap);
        }

        let logits = match forward(&case.params, &result.x_adv) {
            Ok(tr) => tr.logits_tensor(),
            Err(e) => return CheckResult::failed(NAME, format!("case {m}: forward: {e}")),
        };
        let residual = (logits.data()[case.nearest] - logits.data()[case.y_true]).abs();
        worst_residual = worst_residual.max(residual);
    }

    CheckResult {
        name: NAME,
        passed: worst_match <= MATCH_TOL && worst_residual <= RESIDUAL_TOL,
        detail: format!(
            "{models} affine classifiers, all single-iteration; worst perturbation \
             mismatch {worst_match:.2e} (tol {MATCH_TOL:.0e}), worst boundary \
             residual {worst_residual:.2e} (tol {RESIDUAL_TOL:.0e})"
        ),
    }
}
