//! Seeded synthetic benchmarks.
//!
//! Scores: ID ~ N(0, 1) and OOD ~ N(shift, 1), so the population AUROC is
//! `Phi(shift / sqrt(2))`; the default shift 1.593 gives about 0.87.
//!
//! Classes: three isotropic unit-variance Gaussians in the plane centred at
//! `CLASS_CENTERS`, labels assigned round-robin.

use conformal_ood::rng::{stream, Purpose};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::io::FeatureTable;

pub const DEFAULT_SHIFT: f64 = 1.593;

pub const CLASS_CENTERS: [[f64; 2]; 3] = [[0.0, 0.0], [2.0, 0.0], [1.0, 1.8]];

// Stream indices under `Purpose::Fixture`.
const ID_STREAM: u64 = 0;
const OOD_STREAM: u64 = 1;
const CLASS_STREAM_BASE: u64 = 16;

pub fn gaussian_scores(n: usize, mean: f64, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = stream(seed, Purpose::Fixture, index);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            mean + z
        })
        .collect()
}

/// `(id, ood)` detector scores.
pub fn score_fixture(n_id: usize, n_ood: usize, shift: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    (
        gaussian_scores(n_id, 0.0, seed, ID_STREAM),
        gaussian_scores(n_ood, shift, seed, OOD_STREAM),
    )
}

/// `n` labeled rows of the three-class problem. Different `split` values give
/// independent samples under the same seed.
pub fn class_fixture(n: usize, seed: u64, split: u64) -> FeatureTable {
    let mut rng = stream(seed, Purpose::Fixture, CLASS_STREAM_BASE + split);
    let labels: Vec<usize> = (0..n).map(|i| i % CLASS_CENTERS.len() + 1).collect();
    let mut values = Vec::with_capacity(2 * n);
    for &y in &labels {
        for c in CLASS_CENTERS[y - 1] {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(c + z);
        }
    }
    FeatureTable {
        features: DMatrix::from_row_slice(n, 2, &values),
        labels,
    }
}
