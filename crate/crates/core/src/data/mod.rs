//! Labeled multi-domain real/spoof datasets.

mod generate;
mod io;
mod split;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{
    generate_domain, AttackCluster, ClusterGeometry, DomainShift, DomainSpec, SplitCounts,
};
pub use io::{load_dataset, read_dataset, save_dataset, write_dataset};
pub use split::leave_one_out_split;

pub const SPOOF: u8 = 0;
pub const REAL: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttackType {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "print")]
    Print,
    #[serde(rename = "video")]
    Video,
    #[serde(rename = "mask-A")]
    MaskA,
    #[serde(rename = "mask-B")]
    MaskB,
}

impl AttackType {
    pub const SPOOFS: [AttackType; 4] = [
        AttackType::Print,
        AttackType::Video,
        AttackType::MaskA,
        AttackType::MaskB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackType::None => "none",
            AttackType::Print => "print",
            AttackType::Video => "video",
            AttackType::MaskA => "mask-A",
            AttackType::MaskB => "mask-B",
        }
    }

    pub fn is_mask(self) -> bool {
        matches!(self, AttackType::MaskA | AttackType::MaskB)
    }
}

impl fmt::Display for AttackType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(AttackType::None),
            "print" => Ok(AttackType::Print),
            "video" => Ok(AttackType::Video),
            "mask-A" => Ok(AttackType::MaskA),
            "mask-B" => Ok(AttackType::MaskB),
            other => Err(format!("unknown attack type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// Samples of one domain. Features are stored row-major, `dim` per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    domain_id: String,
    dim: usize,
    features: Vec<f64>,
    labels: Vec<u8>,
    attacks: Vec<AttackType>,
    splits: Vec<Split>,
}

pub(crate) fn check_domain_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains([',', '&', '\n', '\r']) {
        return Err(Error::Spec(format!(
            "domain id `{id}` must be non-empty and free of commas, '&' and newlines"
        )));
    }
    Ok(())
}

fn check_sample(x: &[f64], label: u8, attack: AttackType) -> std::result::Result<(), String> {
    if label > 1 {
        return Err(format!("label {label} is not 0 or 1"));
    }
    if (label == REAL) != (attack == AttackType::None) {
        return Err(format!(
            "label {label} is inconsistent with attack type `{attack}`"
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err("non-finite feature value".into());
    }
    Ok(())
}

impl DomainDataset {
    pub fn empty(domain_id: impl Into<String>, dim: usize) -> Result<Self> {
        let domain_id = domain_id.into();
        check_domain_id(&domain_id)?;
        if dim == 0 {
            return Err(Error::Spec("feature dimension must be positive".into()));
        }
        Ok(DomainDataset {
            domain_id,
            dim,
            features: Vec::new(),
            labels: Vec::new(),
            attacks: Vec::new(),
            splits: Vec::new(),
        })
    }

    /// Appends one sample, enforcing label/attack consistency.
    pub fn push(&mut self, x: &[f64], label: u8, attack: AttackType, split: Split) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InputShape {
                expected: self.dim,
                actual: x.len(),
            });
        }
        check_sample(x, label, attack).map_err(Error::Spec)?;
        self.features.extend_from_slice(x);
        self.labels.push(label);
        self.attacks.push(attack);
        self.splits.push(split);
        Ok(())
    }

    pub fn domain_id(&self) -> &str {
        &self.domain_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn attacks(&self) -> &[AttackType] {
        &self.attacks
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn count_real(&self) -> usize {
        self.labels.iter().filter(|&&y| y == REAL).count()
    }

    pub fn count_spoof(&self) -> usize {
        self.len() - self.count_real()
    }

    /// Distinct attack types present among spoof samples.
    pub fn attack_types(&self) -> Vec<AttackType> {
        let mut types: Vec<AttackType> = self
            .attacks
            .iter()
            .copied()
            .filter(|&a| a != AttackType::None)
            .collect();
        types.sort();
        types.dedup();
        types
    }

    /// Copy holding only the samples of one split.
    pub fn split_part(&self, split: Split) -> DomainDataset {
        self.filter(|i| self.splits[i] == split)
    }

    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> DomainDataset {
        let mut out = DomainDataset {
            domain_id: self.domain_id.clone(),
            dim: self.dim,
            features: Vec::new(),
            labels: Vec::new(),
            attacks: Vec::new(),
            splits: Vec::new(),
        };
        for i in (0..self.len()).filter(|&i| keep(i)) {
            out.features.extend_from_slice(self.sample(i));
            out.labels.push(self.labels[i]);
            out.attacks.push(self.attacks[i]);
            out.splits.push(self.splits[i]);
        }
        out
    }

    /// Union with multiplicity, in the order given.
    pub fn concat(domain_id: impl Into<String>, parts: &[&DomainDataset]) -> Result<DomainDataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Protocol("cannot concatenate zero datasets".into()))?;
        let mut out = DomainDataset::empty(domain_id, first.dim)?;
        for part in parts {
            if part.dim != out.dim {
                return Err(Error::shape(format!(
                    "cannot concatenate {}-dim `{}` with {}-dim data",
                    part.dim, part.domain_id, out.dim
                )));
            }
            out.features.extend_from_slice(&part.features);
            out.labels.extend_from_slice(&part.labels);
            out.attacks.extend_from_slice(&part.attacks);
            out.splits.extend_from_slice(&part.splits);
        }
        Ok(out)
    }

    /// Training needs at least one sample of each class.
    pub fn check_trainable(&self) -> Result<()> {
        let real = self.count_real();
        if real == 0 || real == self.len() {
            return Err(Error::DegenerateDataset {
                center: None,
                reason: format!(
                    "`{}` has {} real and {} spoof samples",
                    self.domain_id,
                    real,
                    self.len() - real
                ),
            });
        }
        Ok(())
    }

    /// Feature views and labels for a set of sample indices.
    pub fn gather(&self, indices: &[usize]) -> (Vec<&[f64]>, Vec<u8>) {
        (
            indices.iter().map(|&i| self.sample(i)).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

/// One epoch of mini-batches as sample indices.
///
/// The dataset is shuffled with `rng` and cut into chunks of `batch_size`;
/// the last chunk may be short. Indices inside each batch are sorted so the
/// gradient accumulation order depends only on batch membership.
pub fn batch_iter<R: Rng + ?Sized>(
    dataset: &DomainDataset,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);
    Ok(order
        .chunks(batch_size)
        .map(|chunk| {
            let mut batch = chunk.to_vec();
            batch.sort_unstable();
            batch
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn toy(n: usize) -> DomainDataset {
        let mut d = DomainDataset::empty("T", 2).unwrap();
        for i in 0..n {
            let (y, a) = if i % 2 == 0 {
                (REAL, AttackType::None)
            } else {
                (SPOOF, AttackType::Print)
            };
            d.push(&[i as f64, -(i as f64)], y, a, Split::Train)
                .unwrap();
        }
        d
    }

    #[test]
    fn batch_sizes_cover_dataset() {
        let batches = batch_iter(&toy(10), 4, &mut stream(0, &[])).unwrap();
        let sizes: Vec<usize> = batches.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        let mut all: Vec<usize> = batches.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn epochs_reshuffle_and_seeds_replay() {
        let d = toy(32);
        let mut rng = stream(5, &[]);
        let e1 = batch_iter(&d, 8, &mut rng).unwrap();
        let e2 = batch_iter(&d, 8, &mut rng).unwrap();
        assert_ne!(e1, e2);
        let again = batch_iter(&d, 8, &mut stream(5, &[])).unwrap();
        assert_eq!(e1, again);
    }

    #[test]
    fn batch_errors() {
        assert!(matches!(
            batch_iter(
                &DomainDataset::empty("E", 2).unwrap(),
                4,
                &mut stream(0, &[])
            ),
            Err(Error::EmptyBatch)
        ));
        assert!(batch_iter(&toy(4), 0, &mut stream(0, &[])).is_err());
    }

    #[test]
    fn push_enforces_label_attack_consistency() {
        let mut d = DomainDataset::empty("T", 1).unwrap();
        assert!(d
            .push(&[0.0], REAL, AttackType::Print, Split::Train)
            .is_err());
        assert!(d
            .push(&[0.0], SPOOF, AttackType::None, Split::Train)
            .is_err());
        assert!(d.push(&[0.0], 2, AttackType::Print, Split::Train).is_err());
        assert!(d
            .push(&[f64::NAN], REAL, AttackType::None, Split::Train)
            .is_err());
        assert!(d
            .push(&[0.0, 1.0], REAL, AttackType::None, Split::Train)
            .is_err());
        assert!(d.is_empty());
    }

    #[test]
    fn single_class_is_not_trainable() {
        let mut d = DomainDataset::empty("R", 1).unwrap();
        d.push(&[1.0], REAL, AttackType::None, Split::Train)
            .unwrap();
        assert!(matches!(
            d.check_trainable(),
            Err(Error::DegenerateDataset { .. })
        ));
        assert!(toy(4).check_trainable().is_ok());
    }

    #[test]
    fn attack_type_names_round_trip() {
        for a in [AttackType::None].iter().chain(&AttackType::SPOOFS) {
            assert_eq!(a.as_str().parse::<AttackType>().unwrap(), *a);
        }
    }

    #[test]
    fn concat_keeps_multiplicity() {
        let d = toy(3);
        let both = DomainDataset::concat("TT", &[&d, &d]).unwrap();
        assert_eq!(both.len(), 6);
        assert_eq!(both.sample(4), d.sample(1));
    }
}
