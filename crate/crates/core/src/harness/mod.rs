//! Experiment runner: trains every method on every evaluation cell for
//! every seed, evaluates on the held-out user domain, and summarizes.

pub mod benchmark;
mod report;
mod spec;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate_domain, leave_one_out_split, DomainDataset, Split};
use crate::error::{Error, Result};
use crate::federation::{run_federation, train_all, train_single, FederationConfig, FusedModel};
use crate::metrics::{cross_domain_threshold, hter, EvalReport, ScoreSet};
use crate::model::Scorer;
use crate::rng::derive_seed;

pub use report::{
    read_rows, read_rows_from, spearman, summarize, write_outputs, write_rows, GroupSummary,
    PairOrdering, Summary,
};
pub use spec::{benchmark_federation, ExperimentSpec, Method, Scenario, DEFAULT_SEED_COUNT};

const DOMAIN_TAG: u64 = 0x444f_4d41;
const TRAIN_TAG: u64 = 0x5452_4149;

/// Name of the environment variable that caps worker threads.
pub const THREADS_ENV: &str = "FEDSIM_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub centers: Vec<String>,
    pub user: String,
    pub seed: u64,
    pub hter: f64,
    pub eer: f64,
    pub auc: f64,
}

impl ResultRow {
    fn new(
        method: Method,
        centers: Vec<String>,
        user: &str,
        seed: u64,
        report: &EvalReport,
    ) -> Self {
        ResultRow {
            method,
            centers,
            user: user.to_string(),
            seed,
            hter: report.hter,
            eer: report.eer,
            auc: report.auc,
        }
    }

    pub fn centers_label(&self) -> String {
        self.centers.join("&")
    }
}

/// Thread pool sized by `FEDSIM_THREADS` when set to a positive integer.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Domains of one seed, generated from the spec templates.
pub fn generate_domains(spec: &ExperimentSpec, seed: u64) -> Result<Vec<DomainDataset>> {
    spec.domains
        .iter()
        .map(|d| {
            let mut d = d.clone();
            d.seed = derive_seed(seed, &[DOMAIN_TAG, d.seed]);
            generate_domain(&d)
        })
        .collect()
}

/// Runs every `(seed, cell)` pair and returns rows ordered by seed, then
/// cell, then method.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let methods = spec.methods();
    let cells = spec.cells();
    let jobs: Vec<(u64, usize)> = spec
        .seeds
        .iter()
        .flat_map(|&seed| (0..cells.len()).map(move |c| (seed, c)))
        .collect();
    let pool = worker_pool()?;
    let per_job: Vec<Vec<ResultRow>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, c)| {
                let (user, centers) = &cells[c];
                run_cell(spec, seed, user, centers, &methods).map_err(|e| Error::Experiment {
                    scenario: spec.scenario.to_string(),
                    seed,
                    user: user.clone(),
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()
    })?;
    let mut rows: Vec<(usize, ResultRow)> = per_job
        .into_iter()
        .zip(&jobs)
        .flat_map(|(rows, &(_, c))| rows.into_iter().map(move |r| (c, r)))
        .collect();
    rows.sort_by(|(ca, a), (cb, b)| {
        (a.seed, *ca, a.method, &a.centers).cmp(&(b.seed, *cb, b.method, &b.centers))
    });
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn evaluate<S: Scorer + ?Sized>(
    model: &S,
    centers: &[&DomainDataset],
    user: &DomainDataset,
) -> Result<EvalReport> {
    let center_scores = centers
        .iter()
        .map(|c| ScoreSet::from_scorer(model, c))
        .collect::<Result<Vec<_>>>()?;
    let threshold = cross_domain_threshold(&center_scores)?;
    hter(&ScoreSet::from_scorer(model, user)?, threshold)
}

fn run_cell(
    spec: &ExperimentSpec,
    seed: u64,
    user: &str,
    center_ids: &[String],
    methods: &[Method],
) -> Result<Vec<ResultRow>> {
    let domains = generate_domains(spec, seed)?;
    let (centers, user_data) = if spec.center_sets.is_empty() {
        leave_one_out_split(&domains, user)?
    } else {
        let find = |id: &str| {
            domains
                .iter()
                .find(|d| d.domain_id() == id)
                .ok_or_else(|| Error::UnknownDomain(id.to_string()))
        };
        let centers = center_ids
            .iter()
            .map(|id| find(id).map(|d| d.split_part(Split::Train)))
            .collect::<Result<Vec<_>>>()?;
        (centers, find(user)?.split_part(Split::Test))
    };
    let config = FederationConfig {
        master_seed: derive_seed(seed, &[TRAIN_TAG]),
        ..spec.federation.clone()
    };
    let ids: Vec<String> = centers.iter().map(|c| c.domain_id().to_string()).collect();
    let all_refs: Vec<&DomainDataset> = centers.iter().collect();
    let mut rows = Vec::new();

    let wants = |m: Method| methods.contains(&m);
    if wants(Method::Single) || wants(Method::Fused) {
        let singles = centers
            .iter()
            .enumerate()
            .map(|(k, c)| train_single(c, &config).map_err(|e| e.at_center(k)))
            .collect::<Result<Vec<_>>>()?;
        if wants(Method::Single) {
            for (k, model) in singles.iter().enumerate() {
                let report = evaluate(model, &[&centers[k]], &user_data)?;
                rows.push(ResultRow::new(
                    Method::Single,
                    vec![ids[k].clone()],
                    user,
                    seed,
                    &report,
                ));
            }
        }
        if wants(Method::Fused) {
            let fused = FusedModel::new(singles)?;
            let report = evaluate(&fused, &all_refs, &user_data)?;
            rows.push(ResultRow::new(
                Method::Fused,
                ids.clone(),
                user,
                seed,
                &report,
            ));
        }
    }
    if wants(Method::Federated) {
        let (model, _) = run_federation(&centers, &config)?;
        let report = evaluate(&model, &all_refs, &user_data)?;
        rows.push(ResultRow::new(
            Method::Federated,
            ids.clone(),
            user,
            seed,
            &report,
        ));
    }
    if wants(Method::All) {
        let model = train_all(&centers, &config)?;
        let report = evaluate(&model, &all_refs, &user_data)?;
        rows.push(ResultRow::new(
            Method::All,
            ids.clone(),
            user,
            seed,
            &report,
        ));
    }
    Ok(rows)
}
