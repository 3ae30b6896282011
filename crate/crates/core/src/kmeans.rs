//! Lloyd-style k-means over reference-election vote shares, used as the
//! conventional grouping baseline.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::ga::GroupingChromosome;
use crate::regression::to_elec_shares;

pub const MAX_ITERATIONS: usize = 100;
pub const MOVEMENT_TOLERANCE: f64 = 1e-9;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// k-means++ seeding.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let d: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in d.iter().enumerate() {
                if r < *w {
                    chosen = i;
                    break;
                }
                r -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[pick].clone());
    }
    centroids
}

/// Clusters `points` into `k` groups. Deterministic in `seed`.
pub fn lloyd(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<u32> {
    if points.is_empty() || k <= 1 {
        return vec![0; points.len()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let dim = points[0].len();
    let mut labels = vec![0u32; points.len()];
    for _ in 0..MAX_ITERATIONS {
        for (l, p) in labels.iter_mut().zip(points) {
            *l = nearest(p, &centroids).0 as u32;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (l, p) in labels.iter().zip(points) {
            counts[*l as usize] += 1;
            for (s, x) in sums[*l as usize].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut moved = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let new: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            moved = moved.max(libm::sqrt(dist2(&new, &centroids[c])));
            centroids[c] = new;
        }
        if moved < MOVEMENT_TOLERANCE {
            break;
        }
    }
    for (l, p) in labels.iter_mut().zip(points) {
        *l = nearest(p, &centroids).0 as u32;
    }
    labels
}

/// Baseline grouping from reference-election %Elec share vectors.
pub fn kmeans_baseline(dataset: &Dataset, n_groups: usize, seed: u64) -> GroupingChromosome {
    let points: Vec<Vec<f64>> = dataset
        .constituencies()
        .iter()
        .map(|c| {
            let v: Vec<f64> = c.ref_votes().iter().map(|&x| x as f64).collect();
            to_elec_shares(&v).unwrap_or_else(|_| vec![0.0; v.len()])
        })
        .collect();
    GroupingChromosome::new(lloyd(&points, n_groups, seed))
}
