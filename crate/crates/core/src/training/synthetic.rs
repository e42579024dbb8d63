//! Seeded synthetic datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataio::RawDataset;
use crate::error::Result;
use crate::structure::StructuredLabel;
use crate::task::Task;

/// Cut points on the latent score; deliberately unevenly spaced.
pub const ORDINAL_CUTS: [f64; 4] = [-1.0, -0.3, 0.2, 1.3];

/// Ordinal data with k = 5 levels: latent z = ⟨β, x⟩/‖β‖ + ε, ε ~ N(0, noise²),
/// label = number of cut points below z. Features are N(0, 1).
pub fn ordinal_linear(n: usize, d: usize, noise: f64, seed: u64) -> Result<RawDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let eps: f64 = StandardNormal.sample(&mut rng);
        let z = x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() / norm + noise * eps;
        let level = ORDINAL_CUTS.iter().filter(|&&c| z > c).count();
        features.push(x);
        labels.push(StructuredLabel::Ordinal(level));
    }
    RawDataset::new(features, labels, Task::Ordinal { k: ORDINAL_CUTS.len() + 1 }, d)
}

/// Two well separated Gaussian blobs in the plane, one per class.
pub fn separable_two_class(n: usize, seed: u64) -> Result<RawDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2;
        let center = if y == 0 { -3.0 } else { 3.0 };
        let x = vec![center + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        features.push(x);
        labels.push(StructuredLabel::Class(y));
    }
    RawDataset::new(features, labels, Task::Multiclass { k: 2 }, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinal_levels_all_appear() {
        let d = ordinal_linear(500, 5, 0.3, 1).unwrap();
        for level in 0..5 {
            assert!(d.labels.contains(&StructuredLabel::Ordinal(level)));
        }
        assert_eq!(d, ordinal_linear(500, 5, 0.3, 1).unwrap());
    }
}
