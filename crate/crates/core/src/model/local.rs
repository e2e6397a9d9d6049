use rand::Rng;

use super::{loss_and_gradient, MlpModel, OptimizerState, ParamVector};
use crate::data::{batch_iter, DomainDataset};
use crate::error::{Error, Result};
use crate::federation::FederationConfig;

/// Mini-batch trainer bound to one private dataset.
///
/// The optimizer state lives as long as the trainer: federated local updates
/// build a fresh trainer every round, centralized baselines keep one for the
/// whole run.
pub struct LocalTrainer<'a> {
    model: MlpModel,
    optimizer: OptimizerState,
    dataset: &'a DomainDataset,
    batch_size: usize,
    eta: f64,
}

impl<'a> LocalTrainer<'a> {
    pub fn new(
        model: MlpModel,
        dataset: &'a DomainDataset,
        config: &FederationConfig,
    ) -> Result<Self> {
        config.validate()?;
        dataset.check_trainable()?;
        if dataset.dim() != model.arch().input_dim() {
            return Err(Error::shape(format!(
                "dataset `{}` has {} features, model expects {}",
                dataset.domain_id(),
                dataset.dim(),
                model.arch().input_dim()
            )));
        }
        let optimizer = OptimizerState::new(config.optimizer, model.params().len());
        Ok(LocalTrainer {
            model,
            optimizer,
            dataset,
            batch_size: config.batch_size,
            eta: config.learning_rate,
        })
    }

    /// One shuffled pass over the dataset. Returns the sample-weighted mean
    /// of the batch losses seen before each step.
    pub fn run_epoch<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        let n = self.dataset.len() as f64;
        let mut epoch_loss = 0.0;
        for batch in batch_iter(self.dataset, self.batch_size, rng)? {
            let (xs, ys) = self.dataset.gather(&batch);
            let (loss, grad) = loss_and_gradient(&self.model, &xs, &ys)?;
            epoch_loss += loss * batch.len() as f64 / n;
            let mut params = self.model.params().clone();
            self.optimizer.step(&mut params, &grad, self.eta)?;
            self.model.set_params(params);
        }
        Ok(epoch_loss)
    }

    pub fn run_epochs<R: Rng + ?Sized>(&mut self, epochs: usize, rng: &mut R) -> Result<Vec<f64>> {
        (0..epochs).map(|_| self.run_epoch(rng)).collect()
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn into_model(self) -> MlpModel {
        self.model
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOutcome {
    pub params: ParamVector,
    pub epoch_losses: Vec<f64>,
}

/// Local training at one data center: start from the downloaded global
/// parameters, run `config.local_epochs` epochs with fresh optimizer state,
/// hand back only the new parameters.
pub fn data_center_update<R: Rng + ?Sized>(
    global_params: &ParamVector,
    dataset: &DomainDataset,
    config: &FederationConfig,
    rng: &mut R,
) -> Result<ParamVector> {
    local_update(global_params, dataset, config, rng).map(|o| o.params)
}

pub(crate) fn local_update<R: Rng + ?Sized>(
    global_params: &ParamVector,
    dataset: &DomainDataset,
    config: &FederationConfig,
    rng: &mut R,
) -> Result<LocalOutcome> {
    let model = MlpModel::new(config.arch.clone(), global_params.clone())?;
    let mut trainer = LocalTrainer::new(model, dataset, config)?;
    let epoch_losses = trainer.run_epochs(config.local_epochs, rng)?;
    Ok(LocalOutcome {
        params: trainer.into_model().into_params(),
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AttackType, Split, REAL, SPOOF};
    use crate::model::{loss_gradient, optimizer_step, ArchSpec, OptimizerKind};
    use crate::rng::stream;

    fn dataset(n: usize) -> DomainDataset {
        let mut d = DomainDataset::empty("D", 2).unwrap();
        for i in 0..n {
            let t = i as f64 / n as f64;
            if i % 2 == 0 {
                d.push(&[1.0 + t, 0.5 - t], REAL, AttackType::None, Split::Train)
                    .unwrap();
            } else {
                d.push(&[-1.0 + t, t], SPOOF, AttackType::Print, Split::Train)
                    .unwrap();
            }
        }
        d
    }

    fn config(optimizer: OptimizerKind, eta: f64, batch: usize, epochs: usize) -> FederationConfig {
        FederationConfig {
            arch: ArchSpec::relu(vec![2, 4, 1]).unwrap(),
            optimizer,
            learning_rate: eta,
            batch_size: batch,
            local_epochs: epochs,
            ..FederationConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let d = dataset(20);
        for kind in [OptimizerKind::PlainGd, OptimizerKind::Adam] {
            let cfg = config(kind, 0.0, 4, 3);
            let global = MlpModel::init_from_seed(cfg.arch.clone(), 1).into_params();
            let out = data_center_update(&global, &d, &cfg, &mut stream(1, &[])).unwrap();
            assert_eq!(out, global);
        }
    }

    #[test]
    fn full_batch_epoch_is_one_gradient_step() {
        let d = dataset(12);
        let cfg = config(OptimizerKind::PlainGd, 0.05, 64, 1);
        let model = MlpModel::init_from_seed(cfg.arch.clone(), 2);
        let out = data_center_update(model.params(), &d, &cfg, &mut stream(9, &[])).unwrap();

        let all: Vec<usize> = (0..d.len()).collect();
        let (xs, ys) = d.gather(&all);
        let grad = loss_gradient(&model, &xs, &ys).unwrap();
        let fresh = OptimizerState::new(OptimizerKind::PlainGd, grad.len());
        let (expected, _) = optimizer_step(model.params(), &grad, &fresh, 0.05).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn repeated_invocations_are_bit_identical() {
        let d = dataset(30);
        let cfg = config(OptimizerKind::Adam, 0.01, 8, 3);
        let global = MlpModel::init_from_seed(cfg.arch.clone(), 3).into_params();
        let a = data_center_update(&global, &d, &cfg, &mut stream(4, &[])).unwrap();
        let b = data_center_update(&global, &d, &cfg, &mut stream(4, &[])).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, global);
    }

    #[test]
    fn single_class_dataset_is_degenerate() {
        let d = dataset(10).filter(|i| i % 2 == 0);
        let cfg = config(OptimizerKind::Adam, 0.01, 8, 1);
        let global = MlpModel::init_from_seed(cfg.arch.clone(), 3).into_params();
        assert!(matches!(
            data_center_update(&global, &d, &cfg, &mut stream(0, &[])),
            Err(Error::DegenerateDataset { .. })
        ));
    }

    #[test]
    fn training_reduces_loss() {
        let d = dataset(40);
        let cfg = config(OptimizerKind::Adam, 0.01, 8, 30);
        let global = MlpModel::init_from_seed(cfg.arch.clone(), 5).into_params();
        let out = local_update(&global, &d, &cfg, &mut stream(0, &[])).unwrap();
        assert!(out.epoch_losses.last().unwrap() < &(out.epoch_losses[0] * 0.5));
    }
}
