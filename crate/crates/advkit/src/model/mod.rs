//! Multilayer perceptron classifiers: ReLU hidden layers, softmax
//! cross-entropy loss, exact reverse-mode gradients to both parameters and
//! input, plus evaluation helpers and weight (de)serialization.

mod io;
mod train;

pub use io::{load_weights, save_weights};
pub use train::{sgd_train, EpochStats, TrainConfig};
pub(crate) use train::{train_engine, BatchMixer};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::{self, cross_entropy, Tensor};

/// Architecture description: layer widths from input dimension through
/// hidden widths to the class count, plus a short identifying label.
/// The hidden activation is always ReLU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    layer_widths: Vec<usize>,
    id: String,
}

impl MlpSpec {
    /// Validates and builds a spec: at least `[input_dim, class_count]`,
    /// every width positive, and at least two classes.
    pub fn new(layer_widths: Vec<usize>, id: impl Into<String>) -> Result<Self> {
        if layer_widths.len() < 2 {
            return Err(Error::Argument(format!(
                "need at least input and output widths, got {layer_widths:?}"
            )));
        }
        if layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::Argument(format!(
                "layer widths must be positive, got {layer_widths:?}"
            )));
        }
        let c = *layer_widths.last().expect("nonempty");
        if c < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 output classes, got {c}"
            )));
        }
        Ok(Self {
            layer_widths,
            id: id.into(),
        })
    }

    pub fn layer_widths(&self) -> &[usize] {
        &self.layer_widths
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn class_count(&self) -> usize {
        *self.layer_widths.last().expect("nonempty")
    }

    /// Number of affine layers (= widths − 1).
    pub fn layer_count(&self) -> usize {
        self.layer_widths.len() - 1
    }
}

/// One affine layer: weight matrix stored `out x in`, bias of length `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub(crate) w: Tensor,
    pub(crate) b: Vec<f64>,
}

impl Layer {
    pub fn weights(&self) -> &Tensor {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }
}

/// Full parameter set of a classifier, tied to its spec and init seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    spec: MlpSpec,
    seed: u64,
    layers: Vec<Layer>,
}

impl MlpParams {
    /// Builds parameters from explicit layers, validating every shape
    /// against the spec and requiring finite values throughout.
    pub fn from_layers(spec: MlpSpec, seed: u64, layers: Vec<Layer>) -> Result<Self> {
        if layers.len() != spec.layer_count() {
            return Err(Error::ShapeInconsistency(format!(
                "{} layers provided but widths {:?} require {}",
                layers.len(),
                spec.layer_widths(),
                spec.layer_count()
            )));
        }
        for (l, layer) in layers.iter().enumerate() {
            let (fan_in, fan_out) = (spec.layer_widths[l], spec.layer_widths[l + 1]);
            if layer.w.shape() != [fan_out, fan_in] {
                return Err(Error::ShapeInconsistency(format!(
                    "layer {l} weights are {:?}, expected [{fan_out}, {fan_in}]",
                    layer.w.shape()
                )));
            }
            if layer.b.len() != fan_out {
                return Err(Error::ShapeInconsistency(format!(
                    "layer {l} bias has {} entries, expected {fan_out}",
                    layer.b.len()
                )));
            }
            if layer.w.data().iter().chain(&layer.b).any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!(
                    "layer {l} contains non-finite values"
                )));
            }
        }
        Ok(Self { spec, seed, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Bitwise equality of every weight and bias (plus spec and seed).
    pub fn bits_eq(&self, other: &MlpParams) -> bool {
        self.spec == other.spec
            && self.seed == other.seed
            && self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| {
                    a.w.bits_eq(&b.w)
                        && a.b
                            .iter()
                            .zip(&b.b)
                            .all(|(x, y)| x.to_bits() == y.to_bits())
                })
    }
}

/// Everything the backward pass needs from one forward evaluation:
/// the activation entering each layer and each layer's pre-activation.
/// The logits are the last pre-activation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub(crate) inputs: Vec<Vec<f64>>,
    pub(crate) pre: Vec<Vec<f64>>,
}

impl ForwardTrace {
    /// Pre-softmax class scores.
    pub fn logits(&self) -> &[f64] {
        self.pre.last().expect("at least one layer")
    }

    /// Logits as an owned rank-1 tensor.
    pub fn logits_tensor(&self) -> Tensor {
        Tensor::from_vec(self.logits().to_vec())
    }
}

/// Per-layer parameter gradients, shaped exactly like the layers.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub w: Tensor,
    pub b: Vec<f64>,
}

/// Seeded uniform init: each layer's weights drawn from
/// `[-s, s]` with `s = sqrt(6 / (fan_in + fan_out))` in row-major order,
/// biases all zero. Deterministic per `(spec, seed)`.
pub fn init_params(spec: &MlpSpec, seed: u64) -> MlpParams {
    let mut rng = RngStream::new(seed);
    let widths = spec.layer_widths();
    let mut layers = Vec::with_capacity(spec.layer_count());
    for l in 0..spec.layer_count() {
        let (fan_in, fan_out) = (widths[l], widths[l + 1]);
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| rng.uniform_in(-s, s))
            .collect();
        layers.push(Layer {
            w: Tensor::new(vec![fan_out, fan_in], data).expect("consistent init shape"),
            b: vec![0.0; fan_out],
        });
    }
    MlpParams {
        spec: spec.clone(),
        seed,
        layers,
    }
}

/// Runs the network on one input: affine + ReLU through the hidden layers,
/// a final affine for the logits. Returns the full trace.
pub fn forward(p: &MlpParams, x: &Tensor) -> Result<ForwardTrace> {
    if x.shape() != [p.spec.input_dim()] {
        return Err(Error::Dimension {
            context: "forward",
            left: x.shape().to_vec(),
            right: vec![p.spec.input_dim()],
        });
    }
    let l_count = p.layers.len();
    let mut inputs = Vec::with_capacity(l_count);
    let mut pre = Vec::with_capacity(l_count);
    let mut a = x.data().to_vec();
    for (l, layer) in p.layers.iter().enumerate() {
        let mut z = tensor::matvec(&layer.w, &a);
        for (zi, bi) in z.iter_mut().zip(&layer.b) {
            *zi += bi;
        }
        inputs.push(a);
        a = if l + 1 < l_count {
            z.iter().map(|&v| v.max(0.0)).collect()
        } else {
            Vec::new()
        };
        pre.push(z);
    }
    Ok(ForwardTrace { inputs, pre })
}

/// Reverse accumulation from an arbitrary cotangent on the logits.
/// Returns parameter gradients only when requested (attacks that need just
/// the input gradient skip the allocation).
fn backprop(
    p: &MlpParams,
    trace: &ForwardTrace,
    logit_cot: &[f64],
    want_params: bool,
) -> (Option<Vec<LayerGrads>>, Tensor) {
    let l_count = p.layers.len();
    debug_assert_eq!(logit_cot.len(), p.spec.class_count());
    let mut rev: Vec<LayerGrads> = Vec::with_capacity(if want_params { l_count } else { 0 });
    let mut delta = logit_cot.to_vec();
    for l in (0..l_count).rev() {
        let layer = &p.layers[l];
        if want_params {
            let input = &trace.inputs[l];
            let mut gw = Vec::with_capacity(delta.len() * input.len());
            for &d in &delta {
                for &a in input {
                    gw.push(d * a);
                }
            }
            rev.push(LayerGrads {
                w: Tensor::new(vec![delta.len(), input.len()], gw)
                    .expect("gradient shape matches layer"),
                b: delta.clone(),
            });
        }
        let back = tensor::matvec_transposed(&layer.w, &delta);
        delta = if l > 0 {
            // ReLU passes gradient only where the pre-activation was
            // strictly positive (derivative at exactly 0 taken as 0).
            back.iter()
                .zip(&trace.pre[l - 1])
                .map(|(&v, &z)| if z > 0.0 { v } else { 0.0 })
                .collect()
        } else {
            back
        };
    }
    let grads = want_params.then(|| {
        rev.reverse();
        rev
    });
    (grads, Tensor::from_vec(delta))
}

/// Gradient of an arbitrary scalar function of the logits with respect to
/// the input, given that function's gradient in logit space.
pub(crate) fn input_grad_from_logit_cotangent(
    p: &MlpParams,
    trace: &ForwardTrace,
    logit_cot: &[f64],
) -> Tensor {
    backprop(p, trace, logit_cot, false).1
}

/// Cross-entropy loss of the model on `(x, y)` with exact gradients to
/// every parameter and to the input.
pub fn loss_and_grads(
    p: &MlpParams,
    x: &Tensor,
    y: usize,
) -> Result<(f64, Vec<LayerGrads>, Tensor)> {
    let trace = forward(p, x)?;
    let (loss, grad_logits) = cross_entropy(&trace.logits_tensor(), y)?;
    let (grads, input_grad) = backprop(p, &trace, grad_logits.data(), true);
    Ok((loss, grads.expect("requested"), input_grad))
}

/// Cross-entropy loss and its input gradient only (cheaper than
/// [`loss_and_grads`] when parameters are not being updated).
pub fn loss_and_input_grad(p: &MlpParams, x: &Tensor, y: usize) -> Result<(f64, Tensor)> {
    let trace = forward(p, x)?;
    let (loss, grad_logits) = cross_entropy(&trace.logits_tensor(), y)?;
    let (_, input_grad) = backprop(p, &trace, grad_logits.data(), false);
    Ok((loss, input_grad))
}

/// Index of the largest value; ties to the lowest index.
pub(crate) fn argmax_slice(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Index of the smallest value; ties to the lowest index.
pub(crate) fn argmin_slice(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Top-1 predicted class; ties to the lowest index.
pub fn predict(p: &MlpParams, x: &Tensor) -> Result<usize> {
    Ok(argmax_slice(forward(p, x)?.logits()))
}

/// The class the model considers least probable (minimal logit, which is
/// also the minimal softmax probability); ties to the lowest index.
pub fn least_likely_class(p: &MlpParams, x: &Tensor) -> Result<usize> {
    Ok(argmin_slice(forward(p, x)?.logits()))
}

/// Top-1 and top-k accuracies. The true label counts as "in the top k"
/// when fewer than `k` classes rank ahead of it, where class `i` ranks
/// ahead of `y` if its logit is larger, or equal with `i < y`.
pub fn evaluate(p: &MlpParams, data: &Dataset, k: usize) -> Result<(f64, f64)> {
    let c = p.spec.class_count();
    if k == 0 || k > c {
        return Err(Error::Argument(format!(
            "k must lie in 1..={c}, got {k}"
        )));
    }
    if data.is_empty() {
        return Err(Error::Argument("cannot evaluate on an empty dataset".to_string()));
    }
    let mut top1 = 0usize;
    let mut topk = 0usize;
    for i in 0..data.len() {
        let trace = forward(p, &data.example(i))?;
        let ahead = ranked_ahead(trace.logits(), data.label(i));
        if ahead == 0 {
            top1 += 1;
        }
        if ahead < k {
            topk += 1;
        }
    }
    let n = data.len() as f64;
    Ok((top1 as f64 / n, topk as f64 / n))
}

/// How many classes rank strictly ahead of `y` under the tie rule
/// (larger logit, or equal logit with lower index).
pub(crate) fn ranked_ahead(logits: &[f64], y: usize) -> usize {
    let zy = logits[y];
    logits
        .iter()
        .enumerate()
        .filter(|&(i, &z)| z > zy || (z == zy && i < y))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_gaussian_mixture;
    use crate::tensor::finite_diff_grad;

    fn tiny_two_class() -> MlpParams {
        // Widths [1, 2]: a single affine layer mapping x to [x, -x].
        let spec = MlpSpec::new(vec![1, 2], "tiny").unwrap();
        let layers = vec![Layer {
            w: Tensor::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
            b: vec![0.0, 0.0],
        }];
        MlpParams::from_layers(spec, 0, layers).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![4], "x").is_err());
        assert!(MlpSpec::new(vec![4, 0, 2], "x").is_err());
        assert!(MlpSpec::new(vec![4, 1], "x").is_err());
        assert!(MlpSpec::new(vec![4, 3, 2], "ok").is_ok());
    }

    #[test]
    fn init_shapes_and_zero_biases() {
        let spec = MlpSpec::new(vec![2, 3, 2], "s").unwrap();
        let p = init_params(&spec, 5);
        assert_eq!(p.layers()[0].weights().shape(), &[3, 2]);
        assert_eq!(p.layers()[1].weights().shape(), &[2, 3]);
        assert!(p.layers().iter().all(|l| l.bias().iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let spec = MlpSpec::new(vec![3, 4, 2], "s").unwrap();
        assert!(init_params(&spec, 9).bits_eq(&init_params(&spec, 9)));
        assert!(!init_params(&spec, 9).bits_eq(&init_params(&spec, 10)));
    }

    #[test]
    fn init_respects_uniform_bound() {
        let spec = MlpSpec::new(vec![5, 7, 3], "s").unwrap();
        let p = init_params(&spec, 1);
        for (l, layer) in p.layers().iter().enumerate() {
            let widths = spec.layer_widths();
            let s = (6.0 / (widths[l] + widths[l + 1]) as f64).sqrt();
            assert!(layer.weights().data().iter().all(|v| v.abs() <= s));
        }
    }

    #[test]
    fn forward_hand_oracle_single_layer() {
        let p = tiny_two_class();
        let trace = forward(&p, &Tensor::from_vec(vec![0.5])).unwrap();
        assert_eq!(trace.logits(), &[0.5, -0.5]);
    }

    #[test]
    fn forward_zero_weights_give_zero_logits() {
        let spec = MlpSpec::new(vec![3, 4, 2], "z").unwrap();
        let layers = vec![
            Layer {
                w: Tensor::zeros(vec![4, 3]),
                b: vec![0.0; 4],
            },
            Layer {
                w: Tensor::zeros(vec![2, 4]),
                b: vec![0.0; 2],
            },
        ];
        let p = MlpParams::from_layers(spec, 0, layers).unwrap();
        let trace = forward(&p, &Tensor::from_vec(vec![0.3, 0.9, 0.1])).unwrap();
        assert_eq!(trace.logits(), &[0.0, 0.0]);
    }

    #[test]
    fn forward_relu_kills_negative_preactivations() {
        // Hidden layer drives both units negative; output sees zeros, so
        // logits equal the output bias.
        let spec = MlpSpec::new(vec![2, 2, 2], "r").unwrap();
        let layers = vec![
            Layer {
                w: Tensor::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap(),
                b: vec![0.0, 0.0],
            },
            Layer {
                w: Tensor::from_rows(&[vec![5.0, 5.0], vec![5.0, 5.0]]).unwrap(),
                b: vec![0.25, -0.75],
            },
        ];
        let p = MlpParams::from_layers(spec, 0, layers).unwrap();
        let trace = forward(&p, &Tensor::from_vec(vec![0.6, 0.8])).unwrap();
        assert_eq!(trace.logits(), &[0.25, -0.75]);
    }

    #[test]
    fn forward_rejects_wrong_input_length() {
        let p = tiny_two_class();
        assert!(matches!(
            forward(&p, &Tensor::from_vec(vec![0.1, 0.2])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn loss_hand_oracle_single_layer() {
        let p = tiny_two_class();
        let (loss, _, input_grad) =
            loss_and_grads(&p, &Tensor::from_vec(vec![0.5]), 0).unwrap();
        assert!((loss - 0.313_261_687_518_222_86).abs() <= 1e-12);
        assert!((input_grad.data()[0] - (-0.537_882_842_739_990_2)).abs() <= 1e-12);
    }

    #[test]
    fn loss_uniform_logits_is_ln_c() {
        let spec = MlpSpec::new(vec![2, 3], "u").unwrap();
        let layers = vec![Layer {
            w: Tensor::zeros(vec![3, 2]),
            b: vec![0.0; 3],
        }];
        let p = MlpParams::from_layers(spec, 0, layers).unwrap();
        let (loss, _) = loss_and_input_grad(&p, &Tensor::from_vec(vec![0.4, 0.6]), 1).unwrap();
        assert!((loss - 3.0_f64.ln()).abs() <= 1e-12);
    }

    fn assert_grad_close(analytic: &[f64], numeric: &[f64], what: &str) {
        for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
            let ok = if a.abs() > 1e-6 {
                ((a - n) / a).abs() <= 1e-5
            } else {
                (a - n).abs() <= 1e-8
            };
            assert!(ok, "{what}[{i}]: analytic {a} vs numeric {n}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5u64 {
            let spec = MlpSpec::new(vec![4, 6, 3], "g").unwrap();
            let p = init_params(&spec, seed);
            let mut rng = RngStream::new(1000 + seed);
            let x = Tensor::from_vec((0..4).map(|_| rng.uniform_in(0.0, 1.0)).collect());
            let y = rng.next_index(3);

            let (_, grads, input_grad) = loss_and_grads(&p, &x, y).unwrap();

            let fd_input = finite_diff_grad(
                |t| loss_and_grads(&p, t, y).unwrap().0,
                &x,
                1e-5,
            );
            assert_grad_close(input_grad.data(), fd_input.data(), "input");

            for l in 0..p.layers().len() {
                let w0 = p.layers()[l].weights().clone();
                let fd_w = finite_diff_grad(
                    |wt| {
                        let mut q = p.clone();
                        q.layers_mut()[l].w = wt.clone();
                        loss_and_grads(&q, &x, y).unwrap().0
                    },
                    &w0,
                    1e-5,
                );
                assert_grad_close(grads[l].w.data(), fd_w.data(), "weights");

                let b0 = Tensor::from_vec(p.layers()[l].bias().to_vec());
                let fd_b = finite_diff_grad(
                    |bt| {
                        let mut q = p.clone();
                        q.layers_mut()[l].b = bt.data().to_vec();
                        loss_and_grads(&q, &x, y).unwrap().0
                    },
                    &b0,
                    1e-5,
                );
                assert_grad_close(&grads[l].b, fd_b.data(), "bias");
            }
        }
    }

    #[test]
    fn least_likely_matches_argmin_with_ties_low() {
        // Logits [2, 5, -1] via bias-only network.
        let spec = MlpSpec::new(vec![2, 3], "ll").unwrap();
        let layers = vec![Layer {
            w: Tensor::zeros(vec![3, 2]),
            b: vec![2.0, 5.0, -1.0],
        }];
        let p = MlpParams::from_layers(spec, 0, layers).unwrap();
        let x = Tensor::from_vec(vec![0.0, 0.0]);
        assert_eq!(least_likely_class(&p, &x).unwrap(), 2);

        let uniform = MlpParams::from_layers(
            MlpSpec::new(vec![2, 3], "u").unwrap(),
            0,
            vec![Layer {
                w: Tensor::zeros(vec![3, 2]),
                b: vec![0.0; 3],
            }],
        )
        .unwrap();
        assert_eq!(least_likely_class(&uniform, &x).unwrap(), 0);
    }

    #[test]
    fn evaluate_with_k_equal_class_count_is_one() {
        let data = gen_gaussian_mixture(3, 4, 5, 0.2, 8).unwrap();
        let spec = MlpSpec::new(vec![4, 5, 3], "e").unwrap();
        let p = init_params(&spec, 3);
        let (_, topk) = evaluate(&p, &data, 3).unwrap();
        assert_eq!(topk, 1.0);
    }

    #[test]
    fn evaluate_tie_break_favors_lower_index() {
        // Zero network: uniform logits for every input.
        let spec = MlpSpec::new(vec![2, 3], "t").unwrap();
        let p = MlpParams::from_layers(
            spec,
            0,
            vec![Layer {
                w: Tensor::zeros(vec![3, 2]),
                b: vec![0.0; 3],
            }],
        )
        .unwrap();
        let features = Tensor::new(vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let y0 = Dataset::new(features.clone(), vec![0, 0], 3).unwrap();
        let y1 = Dataset::new(features, vec![1, 1], 3).unwrap();
        assert_eq!(evaluate(&p, &y0, 1).unwrap().0, 1.0);
        assert_eq!(evaluate(&p, &y1, 1).unwrap().0, 0.0);
        // The tied label 1 still makes it into the top 2.
        assert_eq!(evaluate(&p, &y1, 2).unwrap().1, 1.0);
    }

    #[test]
    fn evaluate_rejects_bad_k() {
        let data = gen_gaussian_mixture(3, 4, 2, 0.2, 8).unwrap();
        let p = init_params(&MlpSpec::new(vec![4, 3], "e").unwrap(), 0);
        assert!(evaluate(&p, &data, 0).is_err());
        assert!(evaluate(&p, &data, 4).is_err());
    }

    #[test]
    fn softmax_argmax_equals_logit_argmax() {
        let spec = MlpSpec::new(vec![4, 8, 5], "sm").unwrap();
        let p = init_params(&spec, 77);
        let mut rng = RngStream::new(4242);
        for _ in 0..50 {
            let x = Tensor::from_vec((0..4).map(|_| rng.uniform_in(0.0, 1.0)).collect());
            let trace = forward(&p, &x).unwrap();
            let probs = crate::tensor::softmax(&trace.logits_tensor());
            assert_eq!(
                argmax_slice(trace.logits()),
                argmax_slice(probs.data())
            );
        }
    }

    #[test]
    fn from_layers_rejects_shape_mismatch() {
        let spec = MlpSpec::new(vec![2, 3], "bad").unwrap();
        let layers = vec![Layer {
            w: Tensor::zeros(vec![2, 2]),
            b: vec![0.0; 2],
        }];
        assert!(matches!(
            MlpParams::from_layers(spec, 0, layers),
            Err(Error::ShapeInconsistency(_))
        ));
    }
}
