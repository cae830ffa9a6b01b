//! Minibatch SGD training. One engine serves both plain training and
//! adversarially augmented training: the optional [`BatchMixer`] swaps a
//! seeded selection of each batch's examples for crafted ones before the
//! gradient step.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::Tensor;

use super::{evaluate, init_params, loss_and_grads, LayerGrads, MlpParams, MlpSpec};

/// Hyperparameters for SGD. The single seed drives parameter init,
/// per-epoch example shuffling, and (when mixing) adversarial-slot
/// selection, each through its own derived stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

/// One epoch of history: mean per-example loss over the epoch's batches
/// and end-of-epoch top-1 accuracy on the training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub loss: f64,
    pub top1: f64,
}

// Fixed salts deriving independent random streams from the one training
// seed, so example shuffling and batch-mixing choices never share state.
const SHUFFLE_SALT: u64 = 0x31E1_D0C5_8F4A_11B7;
const MIX_SALT: u64 = 0x7C9A_2E64_D513_F08D;

/// Swaps part of each training batch for crafted examples.
pub(crate) struct BatchMixer<'a> {
    /// Fraction of each batch to replace, in `[0, 1]`; the count is the
    /// ceiling of `fraction * batch_len`.
    pub fraction: f64,
    /// Produces the replacement for `(current params, x, y)`.
    #[allow(clippy::type_complexity)]
    pub craft: &'a dyn Fn(&MlpParams, &Tensor, usize) -> Result<Tensor>,
}

/// Plain minibatch SGD from a fresh seeded init. History has one entry per
/// epoch; zero epochs returns the untouched initial parameters.
pub fn sgd_train(
    spec: &MlpSpec,
    cfg: &TrainConfig,
    data: &Dataset,
) -> Result<(MlpParams, Vec<EpochStats>)> {
    train_engine(spec, cfg, data, None)
}

pub(crate) fn train_engine(
    spec: &MlpSpec,
    cfg: &TrainConfig,
    data: &Dataset,
    mixer: Option<BatchMixer<'_>>,
) -> Result<(MlpParams, Vec<EpochStats>)> {
    if data.is_empty() {
        return Err(Error::Argument("cannot train on an empty dataset".to_string()));
    }
    if cfg.batch_size == 0 || cfg.batch_size > data.len() {
        return Err(Error::Argument(format!(
            "batch_size must lie in 1..={}, got {}",
            data.len(),
            cfg.batch_size
        )));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::Argument(format!(
            "learning_rate must be positive, got {}",
            cfg.learning_rate
        )));
    }
    if spec.input_dim() != data.dim() {
        return Err(Error::Dimension {
            context: "train",
            left: vec![spec.input_dim()],
            right: vec![data.dim()],
        });
    }
    if data.class_count() > spec.class_count() {
        return Err(Error::Argument(format!(
            "dataset has {} classes but the model emits {}",
            data.class_count(),
            spec.class_count()
        )));
    }
    if let Some(m) = &mixer {
        if !(0.0..=1.0).contains(&m.fraction) {
            return Err(Error::Argument(format!(
                "mix fraction must lie in [0, 1], got {}",
                m.fraction
            )));
        }
    }

    let mut params = init_params(spec, cfg.seed);
    let mut shuffle_rng = RngStream::new(cfg.seed ^ SHUFFLE_SALT);
    let mut mix_rng = RngStream::new(cfg.seed ^ MIX_SALT);
    let n = data.len();
    let mut history = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;

        for batch in order.chunks(cfg.batch_size) {
            let mut xs: Vec<Tensor> = batch.iter().map(|&i| data.example(i)).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| data.label(i)).collect();

            if let Some(m) = &mixer {
                let n_swap = ((m.fraction * batch.len() as f64).ceil() as usize)
                    .min(batch.len());
                if n_swap > 0 {
                    let mut positions: Vec<usize> = (0..batch.len()).collect();
                    mix_rng.shuffle(&mut positions);
                    let mut chosen = positions[..n_swap].to_vec();
                    chosen.sort_unstable();
                    for &j in &chosen {
                        xs[j] = (m.craft)(&params, &xs[j], ys[j])?;
                    }
                }
            }

            let mut acc: Option<Vec<LayerGrads>> = None;
            for (x, &y) in xs.iter().zip(&ys) {
                let (loss, grads, _) = loss_and_grads(&params, x, y)?;
                loss_sum += loss;
                match &mut acc {
                    None => acc = Some(grads),
                    Some(a) => accumulate(a, &grads),
                }
            }
            let step = cfg.learning_rate / xs.len() as f64;
            apply_update(&mut params, &acc.expect("nonempty batch"), step);
        }

        let (top1, _) = evaluate(&params, data, 1)?;
        history.push(EpochStats {
            loss: loss_sum / n as f64,
            top1,
        });
    }

    Ok((params, history))
}

fn accumulate(acc: &mut [LayerGrads], g: &[LayerGrads]) {
    for (a, b) in acc.iter_mut().zip(g) {
        for (x, y) in a.w.data_mut().iter_mut().zip(b.w.data()) {
            *x += y;
        }
        for (x, y) in a.b.iter_mut().zip(&b.b) {
            *x += y;
        }
    }
}

fn apply_update(params: &mut MlpParams, grads: &[LayerGrads], step: f64) {
    for (layer, g) in params.layers_mut().iter_mut().zip(grads) {
        for (w, gw) in layer.w.data_mut().iter_mut().zip(g.w.data()) {
            *w -= step * gw;
        }
        for (b, gb) in layer.b.iter_mut().zip(&g.b) {
            *b -= step * gb;
        }
    }
}
