use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArchSpec, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Plain `1/K` mean of the returned parameters.
    #[default]
    Uniform,
    /// Mean weighted by each center's training-set size.
    BySampleCount,
}

/// How local updates within a round are scheduled. Output is identical
/// either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dispatch {
    #[default]
    Parallel,
    Sequential,
}

/// Training hyperparameters shared by every data center. The number of
/// centers is the length of the center list handed to the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederationConfig {
    pub arch: ArchSpec,
    pub rounds: usize,
    pub local_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub master_seed: u64,
    pub weighting: Weighting,
    /// Stop once the mean local loss changes by less than 1e-5 (relative)
    /// for 5 consecutive rounds.
    pub early_stop: bool,
    pub dispatch: Dispatch,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            arch: ArchSpec::default(),
            rounds: 50,
            local_epochs: 3,
            learning_rate: 1e-2,
            batch_size: 64,
            optimizer: OptimizerKind::Adam,
            master_seed: 0,
            weighting: Weighting::Uniform,
            early_stop: false,
            dispatch: Dispatch::Parallel,
        }
    }
}

impl FederationConfig {
    /// A zero learning rate is accepted so that frozen runs stay expressible;
    /// the experiment harness requires a positive one.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.rounds == 0 {
            return fail("rounds must be at least 1".into());
        }
        if self.local_epochs == 0 {
            return fail("local_epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_setup() {
        let c = FederationConfig::default();
        assert_eq!(c.local_epochs, 3);
        assert_eq!(c.learning_rate, 1e-2);
        assert_eq!(c.batch_size, 64);
        assert_eq!(c.optimizer, OptimizerKind::Adam);
        assert_eq!(c.weighting, Weighting::Uniform);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for bad in [
            FederationConfig {
                rounds: 0,
                ..Default::default()
            },
            FederationConfig {
                local_epochs: 0,
                ..Default::default()
            },
            FederationConfig {
                batch_size: 0,
                ..Default::default()
            },
            FederationConfig {
                learning_rate: -1.0,
                ..Default::default()
            },
            FederationConfig {
                learning_rate: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }
}
