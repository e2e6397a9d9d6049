//! Built-in synthetic domains.
//!
//! Seven domains named after the usual anti-spoofing corpora. They share one
//! cluster geometry (real faces plus print, video and two mask attack
//! clusters) and differ in their affine shift, noise level and in which
//! attack instruments they contain:
//!
//! | id | attacks        |
//! |----|----------------|
//! | O  | print, video   |
//! | C  | print, video   |
//! | I  | print, video   |
//! | M  | print, video   |
//! | S  | print, video   |
//! | 3  | mask-A         |
//! | H  | mask-A, mask-B |

use crate::data::{
    AttackCluster, AttackType, ClusterGeometry, DomainShift, DomainSpec, SplitCounts,
};

pub const FEATURE_DIM: usize = 8;

/// Shared class clusters.
pub fn geometry() -> ClusterGeometry {
    let axis = |i: usize, v: f64| {
        let mut c = vec![0.0; FEATURE_DIM];
        c[i] = v;
        c
    };
    ClusterGeometry {
        real: vec![0.0; FEATURE_DIM],
        attacks: vec![
            AttackCluster {
                attack: AttackType::Print,
                center: axis(0, 2.5),
            },
            AttackCluster {
                attack: AttackType::Video,
                center: axis(1, 2.5),
            },
            AttackCluster {
                attack: AttackType::MaskA,
                center: axis(2, 2.5),
            },
            AttackCluster {
                attack: AttackType::MaskB,
                center: axis(3, 2.5),
            },
        ],
        spread: 1.0,
    }
}

struct Profile {
    id: &'static str,
    attacks: &'static [AttackType],
    rotation: f64,
    translation: [f64; FEATURE_DIM],
    scale: [f64; FEATURE_DIM],
    noise: f64,
}

const PV: &[AttackType] = &[AttackType::Print, AttackType::Video];

const PROFILES: &[Profile] = &[
    Profile {
        id: "O",
        attacks: PV,
        rotation: 0.0,
        translation: [0.8, 0.0, -0.5, 0.0, 0.3, 0.0, 0.0, -0.4],
        scale: [1.0, 1.2, 1.0, 0.9, 1.0, 1.0, 1.1, 1.0],
        noise: 0.5,
    },
    Profile {
        id: "C",
        attacks: PV,
        rotation: 0.5,
        translation: [-0.6, 0.5, 0.0, 0.4, 0.0, -0.3, 0.2, 0.0],
        scale: [0.9, 1.0, 1.1, 1.0, 1.2, 1.0, 1.0, 0.9],
        noise: 0.5,
    },
    Profile {
        id: "I",
        attacks: PV,
        rotation: -0.5,
        translation: [0.0, -0.7, 0.4, 0.0, -0.4, 0.5, 0.0, 0.3],
        scale: [1.1, 0.9, 1.0, 1.2, 1.0, 0.9, 1.0, 1.1],
        noise: 0.5,
    },
    Profile {
        id: "M",
        attacks: PV,
        rotation: 0.25,
        translation: [0.3, 0.6, 0.0, -0.5, 0.2, 0.0, -0.4, 0.0],
        scale: [1.0, 1.0, 0.9, 1.1, 1.0, 1.2, 1.0, 1.0],
        noise: 0.5,
    },
    Profile {
        id: "S",
        attacks: PV,
        rotation: -0.25,
        translation: [-0.3, -0.3, 0.3, 0.3, 0.0, 0.0, 0.5, -0.5],
        scale: [1.2, 1.1, 1.0, 1.0, 0.9, 1.0, 1.0, 1.0],
        noise: 0.5,
    },
    Profile {
        id: "3",
        attacks: &[AttackType::MaskA],
        rotation: 0.1,
        translation: [0.2, 0.0, 0.0, 0.3, 0.0, -0.2, 0.0, 0.0],
        scale: [1.0; FEATURE_DIM],
        noise: 0.5,
    },
    Profile {
        id: "H",
        attacks: &[AttackType::MaskA, AttackType::MaskB],
        rotation: -0.1,
        translation: [0.0, 0.3, -0.3, 0.0, 0.2, 0.0, 0.0, 0.2],
        scale: [1.0; FEATURE_DIM],
        noise: 0.5,
    },
];

pub const TRAIN_PER_CLASS: usize = 100;
pub const TEST_PER_CLASS: usize = 100;

/// Built-in domain by id, with its attack list optionally narrowed.
pub fn domain(id: &str, attacks: Option<&[AttackType]>) -> Option<DomainSpec> {
    let (index, p) = PROFILES.iter().enumerate().find(|(_, p)| p.id == id)?;
    Some(DomainSpec {
        domain_id: p.id.to_string(),
        geometry: geometry(),
        counts: SplitCounts::balanced(TRAIN_PER_CLASS, TEST_PER_CLASS),
        attack_types: attacks.unwrap_or(p.attacks).to_vec(),
        shift: DomainShift {
            rotation: p.rotation,
            translation: p.translation.to_vec(),
            scale: p.scale.to_vec(),
            noise_sigma: p.noise,
        },
        seed: index as u64,
    })
}

pub fn domains(ids: &[&str]) -> Vec<DomainSpec> {
    ids.iter()
        .map(|id| domain(id, None).unwrap_or_else(|| panic!("no built-in domain `{id}`")))
        .collect()
}

pub fn ids() -> impl Iterator<Item = &'static str> {
    PROFILES.iter().map(|p| p.id)
}
