use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FederationConfig, Server, Upload};
use crate::data::DomainDataset;
use crate::error::{Error, Result};
use crate::model::{local::local_update, LocalOutcome, MlpModel, ParamVector};
use crate::rng::center_stream;

const PLATEAU_ROUNDS: usize = 5;
const PLATEAU_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterLog {
    pub center: usize,
    pub domain: String,
    pub num_samples: usize,
    /// Checksum of the parameters this center started the round from.
    pub start_checksum: String,
    pub first_epoch_loss: f64,
    pub last_epoch_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub centers: Vec<CenterLog>,
    /// Checksum of the aggregated global parameters.
    pub checksum: String,
    pub duration_ms: f64,
}

impl RoundLog {
    pub fn mean_local_loss(&self) -> f64 {
        self.centers.iter().map(|c| c.last_epoch_loss).sum::<f64>() / self.centers.len() as f64
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("round log serializes")
    }
}

fn check_centers(centers: &[DomainDataset], config: &FederationConfig) -> Result<()> {
    config.validate()?;
    if centers.is_empty() {
        return Err(Error::Protocol(
            "federation needs at least one data center".into(),
        ));
    }
    for (k, c) in centers.iter().enumerate() {
        c.check_trainable().map_err(|e| e.at_center(k))?;
    }
    Ok(())
}

/// One broadcast, local-train, aggregate cycle.
///
/// Every center starts from the same `global` parameters and draws from its
/// own `(master_seed, center, round)` stream, so the result does not depend
/// on whether centers run concurrently or one after another.
pub fn run_round(
    global: &ParamVector,
    centers: &[DomainDataset],
    config: &FederationConfig,
    round: usize,
) -> Result<(ParamVector, RoundLog)> {
    check_centers(centers, config)?;
    let started = Instant::now();
    let mut server = Server::new(global.clone(), config.weighting);

    let train = |(k, dataset): (usize, &DomainDataset)| -> Result<(ParamVector, LocalOutcome)> {
        let download = server.download();
        let mut rng = center_stream(config.master_seed, k, round);
        let outcome =
            local_update(&download, dataset, config, &mut rng).map_err(|e| e.at_center(k))?;
        Ok((download, outcome))
    };
    let results: Vec<Result<(ParamVector, LocalOutcome)>> = match config.dispatch {
        super::Dispatch::Parallel => centers.par_iter().enumerate().map(train).collect(),
        super::Dispatch::Sequential => centers.iter().enumerate().map(train).collect(),
    };

    let mut uploads = Vec::with_capacity(centers.len());
    let mut logs = Vec::with_capacity(centers.len());
    for (k, result) in results.into_iter().enumerate() {
        let (download, outcome) = result?;
        logs.push(CenterLog {
            center: k,
            domain: centers[k].domain_id().to_string(),
            num_samples: centers[k].len(),
            start_checksum: download.checksum(),
            first_epoch_loss: outcome.epoch_losses[0],
            last_epoch_loss: *outcome.epoch_losses.last().unwrap(),
        });
        uploads.push(Upload {
            center: k,
            params: outcome.params,
            num_samples: centers[k].len(),
        });
    }
    server.aggregate(uploads)?;
    let global = server.into_global();
    let log = RoundLog {
        round,
        centers: logs,
        checksum: global.checksum(),
        duration_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok((global, log))
}

/// Full federated training from the seeded initial model.
pub fn run_federation(
    centers: &[DomainDataset],
    config: &FederationConfig,
) -> Result<(MlpModel, Vec<RoundLog>)> {
    run_federation_with(centers, config, |_, _| Ok(()))
}

/// Like [`run_federation`], calling `observe` after every round with the
/// round log and the freshly aggregated global parameters.
pub fn run_federation_with<F>(
    centers: &[DomainDataset],
    config: &FederationConfig,
    mut observe: F,
) -> Result<(MlpModel, Vec<RoundLog>)>
where
    F: FnMut(&RoundLog, &ParamVector) -> Result<()>,
{
    check_centers(centers, config)?;
    let mut global =
        MlpModel::init_from_seed(config.arch.clone(), config.master_seed).into_params();
    let mut logs: Vec<RoundLog> = Vec::with_capacity(config.rounds);
    let mut calm_rounds = 0;
    for round in 0..config.rounds {
        let (next, log) = run_round(&global, centers, config, round)?;
        observe(&log, &next)?;
        global = next;
        if config.early_stop {
            if let Some(prev) = logs.last() {
                let (a, b) = (prev.mean_local_loss(), log.mean_local_loss());
                let change = (b - a).abs() / a.abs().max(f64::MIN_POSITIVE);
                calm_rounds = if change < PLATEAU_TOLERANCE {
                    calm_rounds + 1
                } else {
                    0
                };
            }
        }
        logs.push(log);
        if config.early_stop && calm_rounds >= PLATEAU_ROUNDS {
            break;
        }
    }
    Ok((MlpModel::new(config.arch.clone(), global)?, logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AttackType, Split, REAL, SPOOF};
    use crate::federation::Dispatch;
    use crate::model::{ArchSpec, OptimizerKind};

    fn center(id: &str, offset: f64, n: usize) -> DomainDataset {
        let mut d = DomainDataset::empty(id, 2).unwrap();
        for i in 0..n {
            let t = (i as f64 * 0.37).sin();
            if i % 2 == 0 {
                d.push(&[1.0 + offset + t, t], REAL, AttackType::None, Split::Train)
                    .unwrap();
            } else {
                d.push(
                    &[-1.0 + offset, t - offset],
                    SPOOF,
                    AttackType::Video,
                    Split::Train,
                )
                .unwrap();
            }
        }
        d
    }

    fn config() -> FederationConfig {
        FederationConfig {
            arch: ArchSpec::relu(vec![2, 5, 1]).unwrap(),
            rounds: 4,
            local_epochs: 2,
            batch_size: 8,
            master_seed: 21,
            ..FederationConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_round_is_identity() {
        let centers = vec![center("A", 0.0, 20), center("B", 0.5, 30)];
        let cfg = FederationConfig {
            learning_rate: 0.0,
            ..config()
        };
        let global = MlpModel::init_from_seed(cfg.arch.clone(), 1).into_params();
        let (out, _) = run_round(&global, &centers, &cfg, 0).unwrap();
        assert_eq!(out, global);
    }

    #[test]
    fn every_center_starts_from_the_broadcast() {
        let centers = vec![
            center("A", 0.0, 20),
            center("B", 0.5, 30),
            center("C", -0.5, 16),
        ];
        let cfg = config();
        let global = MlpModel::init_from_seed(cfg.arch.clone(), 1).into_params();
        let (_, log) = run_round(&global, &centers, &cfg, 3).unwrap();
        assert_eq!(log.round, 3);
        assert!(log
            .centers
            .iter()
            .all(|c| c.start_checksum == global.checksum()));
    }

    #[test]
    fn sequential_and_parallel_dispatch_agree() {
        let centers = vec![
            center("A", 0.0, 20),
            center("B", 0.5, 30),
            center("C", -0.5, 16),
        ];
        let par = run_federation(&centers, &config()).unwrap();
        let seq_cfg = FederationConfig {
            dispatch: Dispatch::Sequential,
            ..config()
        };
        let seq = run_federation(&centers, &seq_cfg).unwrap();
        assert_eq!(par.0, seq.0);
        let ck = |logs: &[RoundLog]| logs.iter().map(|l| l.checksum.clone()).collect::<Vec<_>>();
        assert_eq!(ck(&par.1), ck(&seq.1));
    }

    #[test]
    fn degenerate_center_is_named() {
        let centers = vec![
            center("A", 0.0, 20),
            center("B", 0.0, 20).filter(|i| i % 2 == 1),
        ];
        match run_federation(&centers, &config()) {
            Err(Error::DegenerateDataset {
                center: Some(1), ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_center_list_is_rejected() {
        assert!(matches!(
            run_federation(&[], &config()),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn round_indices_increase_and_observer_sees_each_round() {
        let centers = vec![center("A", 0.0, 20), center("B", 0.5, 30)];
        let mut seen = Vec::new();
        let (model, logs) = run_federation_with(&centers, &config(), |log, params| {
            seen.push((log.round, params.checksum()));
            Ok(())
        })
        .unwrap();
        assert_eq!(
            logs.iter().map(|l| l.round).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(seen.last().unwrap().1, model.params().checksum());
    }

    #[test]
    fn early_stop_ends_frozen_runs() {
        let centers = vec![center("A", 0.0, 20)];
        let cfg = FederationConfig {
            rounds: 40,
            learning_rate: 0.0,
            early_stop: true,
            optimizer: OptimizerKind::PlainGd,
            ..config()
        };
        let (_, logs) = run_federation(&centers, &cfg).unwrap();
        assert_eq!(logs.len(), PLATEAU_ROUNDS + 1);
    }

    #[test]
    fn round_log_serializes_to_one_line() {
        let centers = vec![center("A", 0.0, 20)];
        let (_, logs) = run_federation(
            &centers,
            &FederationConfig {
                rounds: 1,
                ..config()
            },
        )
        .unwrap();
        let line = logs[0].to_json_line();
        assert!(!line.contains('\n'));
        let back: RoundLog = serde_json::from_str(&line).unwrap();
        assert_eq!(back.checksum, logs[0].checksum);
    }
}
