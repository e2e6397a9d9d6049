//! Comparison baselines: one center on its own, all data pooled, and score
//! fusion over independently trained single-center models.

use super::FederationConfig;
use crate::data::DomainDataset;
use crate::error::{Error, Result};
use crate::model::{LocalTrainer, MlpModel, Scorer};
use crate::rng::center_stream;

/// Centralized training for `rounds * local_epochs` epochs with one
/// optimizer state throughout. Epoch block `t` shuffles with the same stream
/// that center `stream_center` would use in federated round `t`, so with
/// plain gradient descent this reproduces a one-center federation exactly.
///
/// Returns the model and the per-epoch training losses.
pub fn train_centralized(
    dataset: &DomainDataset,
    config: &FederationConfig,
    stream_center: usize,
) -> Result<(MlpModel, Vec<f64>)> {
    let init = MlpModel::init_from_seed(config.arch.clone(), config.master_seed);
    let mut trainer = LocalTrainer::new(init, dataset, config)?;
    let mut losses = Vec::with_capacity(config.rounds * config.local_epochs);
    for round in 0..config.rounds {
        let mut rng = center_stream(config.master_seed, stream_center, round);
        losses.extend(trainer.run_epochs(config.local_epochs, &mut rng)?);
    }
    Ok((trainer.into_model(), losses))
}

/// Model trained on one data center's data alone.
pub fn train_single(center: &DomainDataset, config: &FederationConfig) -> Result<MlpModel> {
    train_centralized(center, config, 0).map(|(m, _)| m)
}

/// Upper-bound model trained on the union of every center's data.
pub fn train_all(centers: &[DomainDataset], config: &FederationConfig) -> Result<MlpModel> {
    if centers.is_empty() {
        return Err(Error::Protocol("no data centers to pool".into()));
    }
    let id = centers
        .iter()
        .map(|c| c.domain_id())
        .collect::<Vec<_>>()
        .join("+");
    let parts: Vec<&DomainDataset> = centers.iter().collect();
    train_single(&DomainDataset::concat(id, &parts)?, config)
}

/// Mean of the models' scores.
pub fn fused_predict(models: &[MlpModel], x: &[f64]) -> Result<f64> {
    if models.is_empty() {
        return Err(Error::Protocol(
            "score fusion needs at least one model".into(),
        ));
    }
    let mut sum = 0.0;
    for m in models {
        sum += m.forward(x)?;
    }
    Ok(sum / models.len() as f64)
}

/// Score-averaging ensemble.
#[derive(Debug, Clone)]
pub struct FusedModel {
    models: Vec<MlpModel>,
}

impl FusedModel {
    pub fn new(models: Vec<MlpModel>) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::Protocol("score fusion needs at least one model".into()))?;
        let d = first.arch().input_dim();
        if models.iter().any(|m| m.arch().input_dim() != d) {
            return Err(Error::shape("fused models disagree on input dimension"));
        }
        Ok(FusedModel { models })
    }

    pub fn models(&self) -> &[MlpModel] {
        &self.models
    }
}

impl Scorer for FusedModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        fused_predict(&self.models, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AttackType, Split, REAL, SPOOF};
    use crate::model::{ArchSpec, OptimizerKind};

    fn separable(n: usize) -> DomainDataset {
        let mut d = DomainDataset::empty("S", 2).unwrap();
        for i in 0..n {
            let t = (i as f64 * 0.61).cos() * 0.3;
            if i % 2 == 0 {
                d.push(&[1.0 + t, 1.0 - t], REAL, AttackType::None, Split::Train)
                    .unwrap();
            } else {
                d.push(
                    &[-1.0 + t, -1.0 - t],
                    SPOOF,
                    AttackType::Print,
                    Split::Train,
                )
                .unwrap();
            }
        }
        d
    }

    fn config() -> FederationConfig {
        FederationConfig {
            arch: ArchSpec::relu(vec![2, 4, 1]).unwrap(),
            rounds: 5,
            local_epochs: 3,
            batch_size: 8,
            master_seed: 3,
            ..FederationConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_returns_initial_model() {
        let cfg = FederationConfig {
            learning_rate: 0.0,
            ..config()
        };
        let m = train_single(&separable(20), &cfg).unwrap();
        assert_eq!(
            m,
            MlpModel::init_from_seed(cfg.arch.clone(), cfg.master_seed)
        );
    }

    #[test]
    fn loss_falls_on_separable_data() {
        for optimizer in [OptimizerKind::PlainGd, OptimizerKind::Adam] {
            let cfg = FederationConfig {
                optimizer,
                learning_rate: 0.05,
                ..config()
            };
            let (_, losses) = train_centralized(&separable(40), &cfg, 0).unwrap();
            assert_eq!(losses.len(), 15);
            assert!(losses.last().unwrap() < losses.first().unwrap());
        }
    }

    #[test]
    fn pooling_a_center_with_itself_equals_doubled_data() {
        let d = separable(20);
        let doubled = DomainDataset::concat("S+S", &[&d, &d]).unwrap();
        let a = train_all(&[d.clone(), d.clone()], &config()).unwrap();
        let b = train_single(&doubled, &config()).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            train_all(std::slice::from_ref(&d), &config()).unwrap(),
            train_single(&d, &config()).unwrap()
        );
    }

    #[test]
    fn fusion() {
        let arch = ArchSpec::relu(vec![1, 1]).unwrap();
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let m02 = MlpModel::new(arch.clone(), vec![0.0, logit(0.2)].into()).unwrap();
        let m08 = MlpModel::new(arch.clone(), vec![0.0, logit(0.8)].into()).unwrap();
        let s = fused_predict(&[m02.clone(), m08], &[3.0]).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
        assert_eq!(
            fused_predict(std::slice::from_ref(&m02), &[3.0]).unwrap(),
            m02.forward(&[3.0]).unwrap()
        );
        assert!(matches!(
            fused_predict(&[], &[3.0]),
            Err(Error::Protocol(_))
        ));
        assert!(FusedModel::new(vec![]).is_err());
    }
}
