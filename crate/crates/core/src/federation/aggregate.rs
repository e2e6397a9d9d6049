use crate::error::{Error, Result};
use crate::model::ParamVector;

use super::Weighting;

/// Elementwise mean of parameter vectors, summed left to right.
///
/// Without weights this is the plain `1/K` average; with weights it is the
/// normalized weighted mean. Only parameter vectors cross this boundary.
pub fn aggregate(updates: &[ParamVector], weights: Option<&[f64]>) -> Result<ParamVector> {
    let first = updates
        .first()
        .ok_or_else(|| Error::Protocol("no updates to aggregate".into()))?;
    let len = first.len();
    if let Some(bad) = updates.iter().find(|u| u.len() != len) {
        return Err(Error::shape(format!(
            "update of length {} does not match {len}",
            bad.len()
        )));
    }
    match weights {
        None => {
            let mut sum = first.as_slice().to_vec();
            for u in &updates[1..] {
                for (s, v) in sum.iter_mut().zip(u.as_slice()) {
                    *s += v;
                }
            }
            let k = updates.len() as f64;
            Ok(ParamVector::new(sum.into_iter().map(|s| s / k).collect()))
        }
        Some(w) => {
            if w.len() != updates.len() {
                return Err(Error::shape(format!(
                    "{} weights for {} updates",
                    w.len(),
                    updates.len()
                )));
            }
            if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::Protocol(
                    "weights must be finite and non-negative".into(),
                ));
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::Protocol("weights sum to zero".into()));
            }
            let mut sum = vec![0.0; len];
            for (u, &wk) in updates.iter().zip(w) {
                for (s, v) in sum.iter_mut().zip(u.as_slice()) {
                    *s += wk * v;
                }
            }
            Ok(ParamVector::new(
                sum.into_iter().map(|s| s / total).collect(),
            ))
        }
    }
}

/// What a data center sends back after local training.
#[derive(Debug, Clone, PartialEq)]
pub struct Upload {
    pub center: usize,
    pub params: ParamVector,
    pub num_samples: usize,
}

/// Holds the global parameters between rounds.
#[derive(Debug, Clone)]
pub struct Server {
    global: ParamVector,
    weighting: Weighting,
}

impl Server {
    pub fn new(initial: ParamVector, weighting: Weighting) -> Self {
        Server {
            global: initial,
            weighting,
        }
    }

    pub fn global(&self) -> &ParamVector {
        &self.global
    }

    pub fn into_global(self) -> ParamVector {
        self.global
    }

    /// Copy of the current global parameters for one data center.
    pub fn download(&self) -> ParamVector {
        self.global.clone()
    }

    /// Replaces the global parameters with the aggregate of `uploads`.
    /// Uploads are put in ascending center order first, so arrival order
    /// does not matter.
    pub fn aggregate(&mut self, mut uploads: Vec<Upload>) -> Result<&ParamVector> {
        uploads.sort_by_key(|u| u.center);
        if let Some(w) = uploads.windows(2).find(|w| w[0].center == w[1].center) {
            return Err(Error::Protocol(format!(
                "center {} uploaded twice",
                w[0].center
            )));
        }
        let weights: Option<Vec<f64>> = match self.weighting {
            Weighting::Uniform => None,
            Weighting::BySampleCount => {
                Some(uploads.iter().map(|u| u.num_samples as f64).collect())
            }
        };
        let params: Vec<ParamVector> = uploads.into_iter().map(|u| u.params).collect();
        self.global = aggregate(&params, weights.as_deref())?;
        Ok(&self.global)
    }
}
