use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::benchmark;
use crate::data::{AttackType, DomainSpec};
use crate::error::{Error, Result};
use crate::federation::FederationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Leave-one-domain-out over O, C, I, M with all four methods.
    Table2,
    /// Federated runs over a growing list of centers for one user.
    SweepCenters,
    /// Print-only and video-only centers, mixed-attack user.
    #[serde(rename = "2d-split")]
    TwoDSplit,
    /// 2D-attack centers with and without a mask-attack center, mask user.
    #[serde(rename = "3d-holdout")]
    ThreeDHoldout,
    /// Domains, users, center sets and methods all taken from the spec.
    Custom,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Table2 => "table2",
            Scenario::SweepCenters => "sweep-centers",
            Scenario::TwoDSplit => "2d-split",
            Scenario::ThreeDHoldout => "3d-holdout",
            Scenario::Custom => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Scenario::Table2,
            Scenario::SweepCenters,
            Scenario::TwoDSplit,
            Scenario::ThreeDHoldout,
            Scenario::Custom,
        ]
        .into_iter()
        .find(|sc| sc.as_str() == s)
        .ok_or_else(|| Error::ExperimentSpec(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Single,
    Fused,
    Federated,
    All,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Single,
        Method::Fused,
        Method::Federated,
        Method::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Single => "single",
            Method::Fused => "fused",
            Method::Federated => "federated",
            Method::All => "all",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::ExperimentSpec(format!("unknown method `{s}`")))
    }
}

/// A complete experiment description, read from and written to TOML.
///
/// `users` and `center_sets` define the evaluation cells. With no center
/// sets, each user is evaluated against all remaining domains
/// (leave-one-domain-out); otherwise every user is paired with every listed
/// center set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub users: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub center_sets: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub federation: FederationConfig,
    pub domains: Vec<DomainSpec>,
}

pub const DEFAULT_SEED_COUNT: u64 = 30;

/// Federation settings used by the built-in scenarios.
///
/// Ten rounds keeps the pooled baseline from over-fitting the training
/// domains: with three times the data per epoch it takes three times as many
/// steps, and longer budgets erode its cross-domain AUC.
pub fn benchmark_federation() -> FederationConfig {
    FederationConfig {
        rounds: 10,
        ..FederationConfig::default()
    }
}

fn strings(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

impl ExperimentSpec {
    /// Built-in benchmark for a scenario, with seeds `0..DEFAULT_SEED_COUNT`.
    pub fn preset(scenario: Scenario) -> Self {
        let base = ExperimentSpec {
            scenario,
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            output: None,
            users: Vec::new(),
            center_sets: Vec::new(),
            methods: Vec::new(),
            federation: benchmark_federation(),
            domains: Vec::new(),
        };
        match scenario {
            Scenario::Table2 | Scenario::Custom => ExperimentSpec {
                domains: benchmark::domains(&["O", "C", "I", "M"]),
                ..base
            },
            Scenario::SweepCenters => ExperimentSpec {
                domains: benchmark::domains(&["O", "M", "I", "C", "S"]),
                users: strings(&["C"]),
                center_sets: vec![
                    strings(&["O", "M"]),
                    strings(&["O", "M", "I"]),
                    strings(&["O", "M", "I", "S"]),
                ],
                ..base
            },
            Scenario::TwoDSplit => ExperimentSpec {
                domains: vec![
                    benchmark::domain("I", Some(&[AttackType::Print])).unwrap(),
                    benchmark::domain("O", Some(&[AttackType::Video])).unwrap(),
                    benchmark::domain("M", None).unwrap(),
                ],
                users: strings(&["M"]),
                center_sets: vec![strings(&["I", "O"])],
                ..base
            },
            Scenario::ThreeDHoldout => ExperimentSpec {
                domains: benchmark::domains(&["O", "C", "M", "H", "3"]),
                users: strings(&["3"]),
                center_sets: vec![strings(&["O", "C", "M"]), strings(&["O", "C", "M", "H"])],
                ..base
            },
        }
    }

    /// Center-count sweep for `user` over the built-in five-domain set: the
    /// remaining domains in declared order, first 2, then 3, ... up to
    /// `max_centers`.
    pub fn sweep(user: &str, max_centers: usize) -> Result<Self> {
        let preset = Self::preset(Scenario::SweepCenters);
        if !preset.domains.iter().any(|d| d.domain_id == user) {
            return Err(Error::UnknownDomain(user.to_string()));
        }
        let others: Vec<String> = preset
            .domains
            .iter()
            .map(|d| d.domain_id.clone())
            .filter(|id| id != user)
            .collect();
        if max_centers < 2 || max_centers > others.len() {
            return Err(Error::ExperimentSpec(format!(
                "max centers must be between 2 and {}, got {max_centers}",
                others.len()
            )));
        }
        Ok(ExperimentSpec {
            users: vec![user.to_string()],
            center_sets: (2..=max_centers).map(|k| others[..k].to_vec()).collect(),
            ..preset
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::ExperimentSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Methods to run, defaulting per scenario.
    pub fn methods(&self) -> Vec<Method> {
        if !self.methods.is_empty() {
            let mut m = self.methods.clone();
            m.sort();
            m.dedup();
            return m;
        }
        match self.scenario {
            Scenario::Table2 | Scenario::Custom => Method::ALL.to_vec(),
            Scenario::SweepCenters | Scenario::ThreeDHoldout => vec![Method::Federated],
            Scenario::TwoDSplit => vec![Method::Single, Method::Fused, Method::Federated],
        }
    }

    /// Users to rotate through; every domain when none are listed.
    pub fn users(&self) -> Vec<String> {
        if self.users.is_empty() {
            self.domains.iter().map(|d| d.domain_id.clone()).collect()
        } else {
            self.users.clone()
        }
    }

    /// Evaluation cells as `(user, centers)` in canonical order.
    pub fn cells(&self) -> Vec<(String, Vec<String>)> {
        let mut cells = Vec::new();
        for user in self.users() {
            if self.center_sets.is_empty() {
                let centers = self
                    .domains
                    .iter()
                    .map(|d| d.domain_id.clone())
                    .filter(|id| *id != user)
                    .collect();
                cells.push((user, centers));
            } else {
                for set in &self.center_sets {
                    cells.push((user.clone(), set.clone()));
                }
            }
        }
        cells
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ExperimentSpec(msg));
        if self.seeds.is_empty() {
            return fail("seed list is empty".into());
        }
        self.federation.validate()?;
        if self.federation.learning_rate <= 0.0 {
            return fail("learning_rate must be positive".into());
        }
        if self.domains.len() < 2 {
            return fail("at least two domains are required".into());
        }
        for (i, d) in self.domains.iter().enumerate() {
            d.validate()?;
            if self.domains[..i].iter().any(|o| o.domain_id == d.domain_id) {
                return fail(format!("duplicate domain `{}`", d.domain_id));
            }
            if d.geometry.dim() != self.federation.arch.input_dim() {
                return fail(format!(
                    "domain `{}` has {} features but the model takes {}",
                    d.domain_id,
                    d.geometry.dim(),
                    self.federation.arch.input_dim()
                ));
            }
        }
        let known = |id: &str| self.domains.iter().any(|d| d.domain_id == id);
        for user in &self.users {
            if !known(user) {
                return Err(Error::UnknownDomain(user.clone()));
            }
        }
        for set in &self.center_sets {
            if set.is_empty() {
                return fail("empty center set".into());
            }
            for id in set {
                if !known(id) {
                    return Err(Error::UnknownDomain(id.clone()));
                }
            }
            for (i, id) in set.iter().enumerate() {
                if set[..i].contains(id) {
                    return fail(format!("center `{id}` listed twice in one set"));
                }
            }
        }
        for (user, centers) in self.cells() {
            if centers.contains(&user) {
                return fail(format!("user `{user}` also appears as a data center"));
            }
            if centers.is_empty() {
                return fail(format!("user `{user}` has no data centers"));
            }
        }
        match self.scenario {
            Scenario::SweepCenters | Scenario::TwoDSplit | Scenario::ThreeDHoldout
                if self.users.is_empty() || self.center_sets.is_empty() =>
            {
                fail(format!(
                    "scenario {} needs explicit users and center_sets",
                    self.scenario
                ))
            }
            _ => Ok(()),
        }
    }
}
