//! Server-side control plane: broadcast, local updates, parameter averaging,
//! plus the single-center, pooled and score-fusion baselines.

mod aggregate;
mod baselines;
mod config;
mod round;
mod sink;

pub use aggregate::{aggregate, Server, Upload};
pub use baselines::{fused_predict, train_all, train_centralized, train_single, FusedModel};
pub use config::{Dispatch, FederationConfig, Weighting};
pub use round::{run_federation, run_federation_with, run_round, CenterLog, RoundLog};
pub use sink::RoundRecorder;
