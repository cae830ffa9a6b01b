//! Cross-model transferability of adversarial examples.
//!
//! A zoo of independently trained models plays both roles: each model
//! takes a turn as the white-box source the attack is crafted against,
//! and every model (the source included) is then measured as a black-box
//! target on those crafted inputs. Rates are percentages of the source's
//! *fooled* subset, so the diagonal reads 100 whenever it is defined —
//! matching the way published transfer tables are normalized.

use serde::{Deserialize, Serialize};

use crate::attack::AttackSpec;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{forward, ranked_ahead, sgd_train, MlpParams, MlpSpec, TrainConfig};

/// Which rank decides "the target is fooled".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMetric {
    /// Fooled when the true label is not the top prediction.
    Top1,
    /// Fooled when the true label falls outside the top five predictions.
    Top5,
}

impl TransferMetric {
    /// The true label must rank inside the first `bound` predictions to
    /// count as correct; at or beyond it, the model is fooled.
    fn bound(self) -> usize {
        match self {
            TransferMetric::Top1 => 1,
            TransferMetric::Top5 => 5,
        }
    }

    /// Name used in CSV and report output.
    pub fn name(self) -> &'static str {
        match self {
            TransferMetric::Top1 => "top1",
            TransferMetric::Top5 => "top5",
        }
    }
}

/// Square matrix of transfer rates: `rates[source][target]` is the
/// percentage of the source-fooling subset that also fools the target.
/// `None` marks an undefined entry — the attack fooled the source on no
/// correctly-classified example, leaving nothing to transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferMatrix {
    pub model_ids: Vec<String>,
    pub rates: Vec<Vec<Option<f64>>>,
    pub attack: String,
    pub epsilon: Option<f64>,
    pub metric: TransferMetric,
}

impl TransferMatrix {
    /// Number of models (the matrix is square).
    pub fn len(&self) -> usize {
        self.model_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model_ids.is_empty()
    }

    /// Rate for `(source, target)`, `None` when undefined.
    pub fn rate(&self, source: usize, target: usize) -> Option<f64> {
        self.rates[source][target]
    }

    /// Mean of the defined off-diagonal rates; `None` when every
    /// off-diagonal entry is undefined (or the zoo has a single model).
    pub fn mean_off_diagonal(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (s, row) in self.rates.iter().enumerate() {
            for (t, rate) in row.iter().enumerate() {
                if s != t {
                    if let Some(r) = rate {
                        sum += r;
                        count += 1;
                    }
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

/// Trains one model per `(spec, seed)` pair on the shared dataset. Models
/// are independent: each depends only on its own spec and seed, never on
/// its position in the list.
pub fn train_zoo(
    specs: &[MlpSpec],
    cfg: &TrainConfig,
    data: &Dataset,
    seeds: &[u64],
) -> Result<Vec<MlpParams>> {
    if specs.is_empty() || specs.len() != seeds.len() {
        return Err(Error::Argument(format!(
            "zoo needs matching nonempty spec and seed lists, got {} specs and {} seeds",
            specs.len(),
            seeds.len()
        )));
    }
    specs
        .iter()
        .zip(seeds)
        .map(|(spec, &seed)| {
            let cfg = TrainConfig { seed, ..*cfg };
            sgd_train(spec, &cfg, data).map(|(p, _)| p)
        })
        .collect()
}

/// Crafts the attack against every zoo model in turn and measures how the
/// resulting examples fare on every other model.
///
/// For source `s`, the crafting subset is the set of evaluation examples
/// `s` ranks correctly (within the metric bound) and that the attack then
/// pushes out of that bound on `s` itself. Entry `(s, t)` is the share of
/// this subset that also falls outside the bound on target `t`. Sources
/// whose subset is empty yield a row of `None`.
pub fn transfer_matrix(
    zoo: &[MlpParams],
    data: &Dataset,
    spec: &AttackSpec,
    metric: TransferMetric,
) -> Result<TransferMatrix> {
    if zoo.is_empty() {
        return Err(Error::Argument("transfer needs at least one model".to_string()));
    }
    if data.is_empty() {
        return Err(Error::Argument(
            "transfer needs a nonempty evaluation set".to_string(),
        ));
    }
    let class_count = zoo[0].spec().class_count();
    if zoo.iter().any(|p| p.spec().class_count() != class_count) {
        return Err(Error::Argument(
            "all zoo models must share one class set".to_string(),
        ));
    }
    let bound = metric.bound();
    let n_models = zoo.len();

    let mut rates = vec![vec![None; n_models]; n_models];
    for (s, source) in zoo.iter().enumerate() {
        // Craft on examples the source gets right, keep those it then
        // misranks — the subset with a proven white-box attack.
        let mut fooled_source = Vec::new();
        for i in 0..data.len() {
            let x = data.example(i);
            let y = data.label(i);
            if ranked_ahead(forward(source, &x)?.logits(), y) >= bound {
                continue;
            }
            let r = spec.run(source, &x, y)?;
            if ranked_ahead(forward(source, &r.x_adv)?.logits(), y) >= bound {
                fooled_source.push((r.x_adv, y));
            }
        }
        if fooled_source.is_empty() {
            continue; // the whole row stays undefined
        }
        for (t, target) in zoo.iter().enumerate() {
            let mut transferred = 0usize;
            for (x_adv, y) in &fooled_source {
                if ranked_ahead(forward(target, x_adv)?.logits(), *y) >= bound {
                    transferred += 1;
                }
            }
            rates[s][t] = Some(100.0 * transferred as f64 / fooled_source.len() as f64);
        }
    }

    Ok(TransferMatrix {
        model_ids: zoo.iter().map(|p| p.spec().id().to_string()).collect(),
        rates,
        attack: spec.name().to_string(),
        epsilon: spec.epsilon(),
        metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_gaussian_mixture;

    fn mixture() -> Dataset {
        gen_gaussian_mixture(3, 4, 40, 0.08, 17).unwrap()
    }

    fn train_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 20,
            batch_size: 8,
            learning_rate: 0.3,
            seed: 5,
        }
    }

    fn spec_with(id: &str, hidden: usize) -> MlpSpec {
        MlpSpec::new(vec![4, hidden, 3], id).unwrap()
    }

    #[test]
    fn zoo_of_one_and_seed_sensitivity() {
        let data = mixture();
        let specs = vec![spec_with("a", 8)];
        let zoo = train_zoo(&specs, &train_cfg(), &data, &[1]).unwrap();
        assert_eq!(zoo.len(), 1);

        let pair = vec![spec_with("a", 8), spec_with("a", 8)];
        let zoo = train_zoo(&pair, &train_cfg(), &data, &[1, 2]).unwrap();
        assert!(!zoo[0].bits_eq(&zoo[1]), "different seeds must differ");
    }

    #[test]
    fn zoo_models_are_order_independent() {
        let data = mixture();
        let a = spec_with("a", 8);
        let b = spec_with("b", 6);
        let fwd = train_zoo(&[a.clone(), b.clone()], &train_cfg(), &data, &[1, 2]).unwrap();
        let rev = train_zoo(&[b, a], &train_cfg(), &data, &[2, 1]).unwrap();
        assert!(fwd[0].bits_eq(&rev[1]));
        assert!(fwd[1].bits_eq(&rev[0]));
    }

    #[test]
    fn zoo_rejects_mismatched_lists() {
        let data = mixture();
        let specs = vec![spec_with("a", 8)];
        assert!(train_zoo(&specs, &train_cfg(), &data, &[1, 2]).is_err());
        assert!(train_zoo(&[], &train_cfg(), &data, &[]).is_err());
    }

    #[test]
    fn identical_models_transfer_everything() {
        let data = mixture();
        let specs = vec![spec_with("a", 8), spec_with("a", 8)];
        let zoo = train_zoo(&specs, &train_cfg(), &data, &[1, 1]).unwrap();
        assert!(zoo[0].bits_eq(&zoo[1]));

        let attack = AttackSpec::Fgsm { epsilon: 0.3 };
        let m = transfer_matrix(&zoo, &data, &attack, TransferMetric::Top1).unwrap();
        let defined: Vec<f64> = m.rates.iter().flatten().filter_map(|r| *r).collect();
        assert!(!defined.is_empty(), "expected the attack to fool something");
        assert!(defined.iter().all(|&r| r == 100.0), "{:?}", m.rates);
    }

    #[test]
    fn diagonal_is_exact_and_entries_bounded() {
        let data = mixture();
        let specs = vec![spec_with("a", 8), spec_with("b", 6), spec_with("c", 10)];
        let zoo = train_zoo(&specs, &train_cfg(), &data, &[1, 2, 3]).unwrap();
        let attack = AttackSpec::Fgsm { epsilon: 0.2 };
        let m = transfer_matrix(&zoo, &data, &attack, TransferMetric::Top1).unwrap();

        assert_eq!(m.model_ids, vec!["a", "b", "c"]);
        for s in 0..m.len() {
            if let Some(d) = m.rate(s, s) {
                assert_eq!(d, 100.0);
            }
            for t in 0..m.len() {
                if let Some(r) = m.rate(s, t) {
                    assert!((0.0..=100.0).contains(&r));
                }
            }
        }
    }

    #[test]
    fn permuting_the_zoo_permutes_the_matrix() {
        let data = mixture();
        let specs = vec![spec_with("a", 8), spec_with("b", 6), spec_with("c", 10)];
        let zoo = train_zoo(&specs, &train_cfg(), &data, &[1, 2, 3]).unwrap();
        let attack = AttackSpec::Fgsm { epsilon: 0.2 };
        let m = transfer_matrix(&zoo, &data, &attack, TransferMetric::Top1).unwrap();

        let perm = [2usize, 0, 1];
        let permuted: Vec<MlpParams> = perm.iter().map(|&i| zoo[i].clone()).collect();
        let mp = transfer_matrix(&permuted, &data, &attack, TransferMetric::Top1).unwrap();
        for (si, &s) in perm.iter().enumerate() {
            assert_eq!(mp.model_ids[si], m.model_ids[s]);
            for (ti, &t) in perm.iter().enumerate() {
                assert_eq!(mp.rate(si, ti), m.rate(s, t));
            }
        }
    }

    #[test]
    fn zero_budget_leaves_every_entry_undefined() {
        let data = mixture();
        let specs = vec![spec_with("a", 8), spec_with("b", 6)];
        let zoo = train_zoo(&specs, &train_cfg(), &data, &[1, 2]).unwrap();
        let attack = AttackSpec::Fgsm { epsilon: 0.0 };
        let m = transfer_matrix(&zoo, &data, &attack, TransferMetric::Top1).unwrap();
        assert!(m.rates.iter().flatten().all(|r| r.is_none()));
        assert_eq!(m.mean_off_diagonal(), None);
    }

    #[test]
    fn top5_on_a_three_class_zoo_is_undefined() {
        // With three classes the true label can never leave the top five,
        // so no example ever fools a source under the top-5 criterion.
        let data = mixture();
        let specs = vec![spec_with("a", 8), spec_with("b", 6)];
        let zoo = train_zoo(&specs, &train_cfg(), &data, &[1, 2]).unwrap();
        let attack = AttackSpec::Fgsm { epsilon: 0.3 };
        let m = transfer_matrix(&zoo, &data, &attack, TransferMetric::Top5).unwrap();
        assert!(m.rates.iter().flatten().all(|r| r.is_none()));
    }

    #[test]
    fn mean_off_diagonal_ignores_undefined_entries() {
        let m = TransferMatrix {
            model_ids: vec!["a".into(), "b".into()],
            rates: vec![vec![Some(100.0), Some(50.0)], vec![None, Some(100.0)]],
            attack: "fgsm".into(),
            epsilon: Some(0.1),
            metric: TransferMetric::Top1,
        };
        assert_eq!(m.mean_off_diagonal(), Some(50.0));

        let empty = TransferMatrix {
            model_ids: vec!["a".into()],
            rates: vec![vec![Some(100.0)]],
            attack: "fgsm".into(),
            epsilon: Some(0.1),
            metric: TransferMetric::Top1,
        };
        assert_eq!(empty.mean_off_diagonal(), None);
    }

    #[test]
    fn rejects_empty_inputs_and_mixed_class_sets() {
        let data = mixture();
        let attack = AttackSpec::Fgsm { epsilon: 0.1 };
        assert!(transfer_matrix(&[], &data, &attack, TransferMetric::Top1).is_err());

        let four_class = MlpSpec::new(vec![4, 6, 4], "four").unwrap();
        let three = train_zoo(&[spec_with("a", 8)], &train_cfg(), &data, &[1]).unwrap();
        let four = {
            let labels4 = gen_gaussian_mixture(4, 4, 30, 0.08, 9).unwrap();
            train_zoo(&[four_class], &train_cfg(), &labels4, &[1]).unwrap()
        };
        let mixed = vec![three[0].clone(), four[0].clone()];
        assert!(transfer_matrix(&mixed, &data, &attack, TransferMetric::Top1).is_err());
    }
}
