//! Synthetic domains: shared class clusters pushed through a per-domain
//! affine shift plus isotropic noise.
//!
//! The real cluster and one cluster per attack type are defined once in a
//! [`ClusterGeometry`] and reused by every domain, so "print" means the same
//! thing everywhere. A domain then rotates, scales and translates all of its
//! samples and adds noise, which is what makes domains differ.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_domain_id, AttackType, DomainDataset, Split, REAL, SPOOF};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackCluster {
    pub attack: AttackType,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    pub real: Vec<f64>,
    pub attacks: Vec<AttackCluster>,
    /// Per-coordinate standard deviation of every base cluster.
    pub spread: f64,
}

impl ClusterGeometry {
    /// Real cluster at the origin, each attack cluster at distance
    /// `separation` along a random direction.
    pub fn random(dim: usize, separation: f64, spread: f64, seed: u64) -> Self {
        let mut rng = rng::stream(seed, &[0x4745_4f4d]);
        let attacks = AttackType::SPOOFS
            .iter()
            .map(|&attack| {
                let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = dir
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
                    .max(f64::MIN_POSITIVE);
                AttackCluster {
                    attack,
                    center: dir.iter().map(|v| v * separation / norm).collect(),
                }
            })
            .collect();
        ClusterGeometry {
            real: vec![0.0; dim],
            attacks,
            spread,
        }
    }

    pub fn dim(&self) -> usize {
        self.real.len()
    }

    pub fn center(&self, attack: AttackType) -> Option<&[f64]> {
        if attack == AttackType::None {
            return Some(&self.real);
        }
        self.attacks
            .iter()
            .find(|c| c.attack == attack)
            .map(|c| c.center.as_slice())
    }
}

/// Affine map `x -> scale * (R x) + translation` followed by noise. `R`
/// rotates every coordinate pair `(0,1), (2,3), ...` by `rotation` radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainShift {
    pub rotation: f64,
    pub translation: Vec<f64>,
    pub scale: Vec<f64>,
    pub noise_sigma: f64,
}

impl DomainShift {
    pub fn identity(dim: usize) -> Self {
        DomainShift {
            rotation: 0.0,
            translation: vec![0.0; dim],
            scale: vec![1.0; dim],
            noise_sigma: 0.0,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (c, s) = (self.rotation.cos(), self.rotation.sin());
        let mut out = x.to_vec();
        for pair in out.chunks_exact_mut(2) {
            let (a, b) = (pair[0], pair[1]);
            pair[0] = c * a - s * b;
            pair[1] = s * a + c * b;
        }
        for ((v, k), t) in out.iter_mut().zip(&self.scale).zip(&self.translation) {
            *v = *v * k + t;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train_real: usize,
    pub train_spoof: usize,
    pub test_real: usize,
    pub test_spoof: usize,
}

impl SplitCounts {
    /// Balanced real/spoof counts.
    pub fn balanced(train_per_class: usize, test_per_class: usize) -> Self {
        SplitCounts {
            train_real: train_per_class,
            train_spoof: train_per_class,
            test_real: test_per_class,
            test_spoof: test_per_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub domain_id: String,
    pub geometry: ClusterGeometry,
    pub counts: SplitCounts,
    pub attack_types: Vec<AttackType>,
    pub shift: DomainShift,
    pub seed: u64,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        check_domain_id(&self.domain_id)?;
        let dim = self.geometry.dim();
        let fail = |msg: String| Err(Error::Spec(format!("domain `{}`: {msg}", self.domain_id)));
        if dim == 0 {
            return fail("feature dimension must be positive".into());
        }
        if self.geometry.attacks.iter().any(|c| c.center.len() != dim) {
            return fail("attack cluster centers must match the real center's dimension".into());
        }
        if !(self.geometry.spread >= 0.0 && self.geometry.spread.is_finite()) {
            return fail(format!(
                "cluster spread {} must be >= 0",
                self.geometry.spread
            ));
        }
        let spoofs = self.counts.train_spoof + self.counts.test_spoof;
        if spoofs > 0 && self.attack_types.is_empty() {
            return fail("spoof samples requested but no attack types listed".into());
        }
        for &a in &self.attack_types {
            if a == AttackType::None {
                return fail("`none` is not an attack type".into());
            }
            if self.geometry.center(a).is_none() {
                return fail(format!("geometry has no cluster for `{a}`"));
            }
        }
        let s = &self.shift;
        if s.translation.len() != dim || s.scale.len() != dim {
            return fail(format!("shift vectors must have length {dim}"));
        }
        if s.scale.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return fail("scales must be positive".into());
        }
        if !(s.noise_sigma >= 0.0 && s.noise_sigma.is_finite()) {
            return fail(format!("noise sigma {} must be >= 0", s.noise_sigma));
        }
        if !s.rotation.is_finite() || s.translation.iter().any(|t| !t.is_finite()) {
            return fail("shift parameters must be finite".into());
        }
        Ok(())
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, center: &[f64], sd: f64) -> Vec<f64> {
    center
        .iter()
        .map(|&c| {
            let z: f64 = StandardNormal.sample(rng);
            c + sd * z
        })
        .collect()
}

/// Draws both splits of a domain. Spoof samples cycle through the listed
/// attack types so each type gets an equal share.
pub fn generate_domain(spec: &DomainSpec) -> Result<DomainDataset> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, &[0x4441_5441]);
    let mut out = DomainDataset::empty(spec.domain_id.clone(), spec.geometry.dim())?;
    let c = spec.counts;
    for (split, n_real, n_spoof) in [
        (Split::Train, c.train_real, c.train_spoof),
        (Split::Test, c.test_real, c.test_spoof),
    ] {
        let labels = std::iter::repeat_n((REAL, AttackType::None), n_real)
            .chain((0..n_spoof).map(|i| (SPOOF, spec.attack_types[i % spec.attack_types.len()])));
        for (label, attack) in labels {
            let center = spec.geometry.center(attack).expect("validated");
            let base = gaussian(&mut rng, center, spec.geometry.spread);
            let shifted = spec.shift.apply(&base);
            let x = gaussian(&mut rng, &shifted, spec.shift.noise_sigma);
            out.push(&x, label, attack, split)?;
        }
    }
    Ok(out)
}
