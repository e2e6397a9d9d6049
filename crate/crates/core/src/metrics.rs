//! Anti-spoofing evaluation: AUC, EER and HTER.
//!
//! Scores follow one orientation throughout: higher means more likely real
//! (label 1). A sample is accepted as real when its score is at or above the
//! threshold, so
//!
//! * FAR = spoof samples with score >= threshold / spoof count
//! * FRR = real samples with score < threshold / real count
//! * HTER = (FAR + FRR) / 2
//!
//! The HTER threshold is never tuned on the user domain. It is the EER
//! threshold of the data centers' pooled scores.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{DomainDataset, REAL, SPOOF};
use crate::error::{Error, Result};
use crate::model::Scorer;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::shape(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::DegenerateEvaluation("NaN score".into()));
        }
        if let Some(y) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::shape(format!("label {y} is not 0 or 1")));
        }
        Ok(ScoreSet { scores, labels })
    }

    /// Scores every sample of `dataset`.
    pub fn from_scorer<S: Scorer + ?Sized>(scorer: &S, dataset: &DomainDataset) -> Result<Self> {
        let scores = dataset
            .samples()
            .map(|x| scorer.score(x))
            .collect::<Result<Vec<_>>>()?;
        ScoreSet::new(scores, dataset.labels().to_vec())
    }

    /// Concatenation of several score sets.
    pub fn pool(sets: &[ScoreSet]) -> ScoreSet {
        ScoreSet {
            scores: sets.iter().flat_map(|s| s.scores.iter().copied()).collect(),
            labels: sets.iter().flat_map(|s| s.labels.iter().copied()).collect(),
        }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn count_real(&self) -> usize {
        self.labels.iter().filter(|&&y| y == REAL).count()
    }

    pub fn count_spoof(&self) -> usize {
        self.len() - self.count_real()
    }

    fn require_both_classes(&self) -> Result<(usize, usize)> {
        let real = self.count_real();
        let spoof = self.count_spoof();
        if real == 0 || spoof == 0 {
            return Err(Error::DegenerateEvaluation(format!(
                "need both classes, got {real} real and {spoof} spoof scores"
            )));
        }
        Ok((real, spoof))
    }

    /// Distinct scores ascending, each with its (real, spoof) counts.
    fn tie_groups(&self) -> Vec<(f64, usize, usize)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[a]
                .partial_cmp(&self.scores[b])
                .unwrap_or(Ordering::Equal)
        });
        let mut groups: Vec<(f64, usize, usize)> = Vec::new();
        for i in order {
            let (s, y) = (self.scores[i], self.labels[i]);
            match groups.last_mut() {
                Some(g) if g.0 == s => {}
                _ => groups.push((s, 0, 0)),
            }
            let g = groups.last_mut().unwrap();
            if y == REAL {
                g.1 += 1;
            } else {
                g.2 += 1;
            }
        }
        groups
    }
}

/// Probability that a random real sample outscores a random spoof sample,
/// ties counting one half.
pub fn auc(s: &ScoreSet) -> Result<f64> {
    let (n_real, n_spoof) = s.require_both_classes()?;
    // Twice the Mann-Whitney U statistic, kept integral.
    let mut twice_u: u128 = 0;
    let mut spoof_below: u128 = 0;
    for (_, real, spoof) in s.tie_groups() {
        twice_u += 2 * real as u128 * spoof_below + real as u128 * spoof as u128;
        spoof_below += spoof as u128;
    }
    Ok(twice_u as f64 / (2 * n_real as u128 * n_spoof as u128) as f64)
}

/// Operating point of a threshold in exact integer form.
#[derive(Debug, Clone, Copy)]
struct Point {
    threshold: f64,
    false_accepts: usize,
    false_rejects: usize,
}

impl Point {
    fn rates(&self, n_real: usize, n_spoof: usize) -> (f64, f64) {
        (
            self.false_accepts as f64 / n_spoof as f64,
            self.false_rejects as f64 / n_real as f64,
        )
    }

    /// `(|FAR - FRR|, FAR + FRR)` scaled by `n_real * n_spoof`.
    fn key(&self, n_real: usize, n_spoof: usize) -> (u128, u128) {
        let fa = self.false_accepts as u128 * n_real as u128;
        let fr = self.false_rejects as u128 * n_spoof as u128;
        (fa.abs_diff(fr), fa + fr)
    }
}

/// Equal error rate and the threshold that attains it.
///
/// Candidates are every distinct score plus both infinities. The winner
/// minimizes `|FAR - FRR|`, then `FAR + FRR`, then the threshold itself;
/// the reported rate is `(FAR + FRR) / 2` there.
pub fn eer(s: &ScoreSet) -> Result<(f64, f64)> {
    let (n_real, n_spoof) = s.require_both_classes()?;
    let groups = s.tie_groups();
    let mut best = Point {
        threshold: f64::NEG_INFINITY,
        false_accepts: n_spoof,
        false_rejects: 0,
    };
    let mut real_below = 0;
    let mut spoof_at_or_above = n_spoof;
    let candidates = groups
        .iter()
        .map(|&(score, real, spoof)| {
            let p = Point {
                threshold: score,
                false_accepts: spoof_at_or_above,
                false_rejects: real_below,
            };
            real_below += real;
            spoof_at_or_above -= spoof;
            p
        })
        .collect::<Vec<_>>()
        .into_iter()
        .chain(std::iter::once(Point {
            threshold: f64::INFINITY,
            false_accepts: 0,
            false_rejects: n_real,
        }));
    for p in candidates {
        if p.key(n_real, n_spoof) < best.key(n_real, n_spoof) {
            best = p;
        }
    }
    let (far, frr) = best.rates(n_real, n_spoof);
    Ok(((far + frr) / 2.0, best.threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub hter: f64,
    pub eer: f64,
    pub auc: f64,
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    /// Real samples accepted.
    pub tp: usize,
    /// Spoof samples rejected.
    pub tn: usize,
    /// Spoof samples accepted.
    pub fp: usize,
    /// Real samples rejected.
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn percent(x: f64) -> f64 {
    (x * 10_000.0).round() / 100.0
}

impl EvalReport {
    /// Flat JSON object with rates as percentages rounded to 2 decimals.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "hter": percent(self.hter),
            "eer": percent(self.eer),
            "auc": percent(self.auc),
            "far": percent(self.far),
            "frr": percent(self.frr),
            "threshold": self.threshold,
            "tp": self.tp,
            "tn": self.tn,
            "fp": self.fp,
            "fn": self.fn_,
        })
    }
}

/// Full report at an externally chosen threshold.
pub fn hter(s: &ScoreSet, threshold: f64) -> Result<EvalReport> {
    let (n_real, n_spoof) = s.require_both_classes()?;
    let (mut tp, mut fp) = (0, 0);
    for (&score, &y) in s.scores.iter().zip(&s.labels) {
        if score >= threshold {
            if y == REAL {
                tp += 1;
            } else {
                debug_assert_eq!(y, SPOOF);
                fp += 1;
            }
        }
    }
    let far = fp as f64 / n_spoof as f64;
    let frr = (n_real - tp) as f64 / n_real as f64;
    Ok(EvalReport {
        hter: (far + frr) / 2.0,
        eer: eer(s)?.0,
        auc: auc(s)?,
        threshold,
        far,
        frr,
        tp,
        tn: n_spoof - fp,
        fp,
        fn_: n_real - tp,
    })
}

/// EER threshold of the pooled data-center scores.
pub fn cross_domain_threshold(center_scores: &[ScoreSet]) -> Result<f64> {
    eer(&ScoreSet::pool(center_scores)).map(|(_, t)| t)
}
