//! k-means with k-means++ seeding and medoid snapping.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::euclidean;

pub const MAX_ITERS: usize = 100;
/// Iteration stops once the largest centroid shift is below this fraction
/// of the data scale.
pub const RELATIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Index into the input of the member nearest each centroid.
    pub medoids: Vec<usize>,
}

/// Clusters `points` into `k` groups. Deterministic for a given generator
/// state.
pub fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::InvalidArgument("cluster count must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} vectors cannot form {k} clusters",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("feature vectors differ in length".into()));
    }
    let scale = points
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);

    let mut centroids = plus_plus_seeds(points, k, rng);
    let mut assignment = vec![0; points.len()];
    for _ in 0..MAX_ITERS {
        for (slot, p) in assignment.iter_mut().zip(points) {
            *slot = nearest(p, &centroids);
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            sums[c].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let next: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(euclidean(&next, &centroids[c]));
            centroids[c] = next;
        }
        if shift <= RELATIVE_TOL * scale {
            break;
        }
    }
    for (slot, p) in assignment.iter_mut().zip(points) {
        *slot = nearest(p, &centroids);
    }

    let medoids = (0..k)
        .map(|c| {
            let members = (0..points.len()).filter(|&i| assignment[i] == c);
            let candidates: Vec<usize> = if members.clone().next().is_some() {
                members.collect()
            } else {
                (0..points.len()).collect()
            };
            candidates
                .into_iter()
                .min_by(|&a, &b| {
                    euclidean(&points[a], &centroids[c])
                        .total_cmp(&euclidean(&points[b], &centroids[c]))
                        .then(a.cmp(&b))
                })
                .expect("non-empty candidates")
        })
        .collect();
    Ok(Clustering {
        centroids,
        assignment,
        medoids,
    })
}

fn plus_plus_seeds(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.gen_range(0..points.len())];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| euclidean(p, &points[chosen[0]]).powi(2))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            pick.expect("positive total weight")
        } else {
            // every point coincides with a seed: take unused indices in order
            (0..points.len()).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (slot, p) in d2.iter_mut().zip(points) {
            *slot = slot.min(euclidean(p, &points[next]).powi(2));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = euclidean(p, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// One-dimensional k-means with centroids initialised at quantiles of the
/// distinct values. Returns the snapped medoids, sorted and deduplicated;
/// `k` is clamped to the number of distinct values.
pub fn kmeans_1d(values: &[f64], k: usize) -> Result<Vec<f64>> {
    if values.is_empty() || k == 0 {
        return Err(Error::InvalidArgument(
            "1-D clustering needs values and at least one cluster".into(),
        ));
    }
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let k = k.min(distinct.len());
    let u = distinct.len();
    let mut centroids: Vec<f64> = (0..k)
        .map(|i| distinct[((2 * i + 1) * u) / (2 * k)])
        .collect();

    let scale = distinct.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let assign = |centroids: &[f64], v: f64| {
        let mut best = 0;
        for (c, &x) in centroids.iter().enumerate() {
            if (v - x).abs() < (v - centroids[best]).abs() {
                best = c;
            }
        }
        best
    };
    for _ in 0..MAX_ITERS {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for &v in values {
            let c = assign(&centroids, v);
            sums[c] += v;
            counts[c] += 1;
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] > 0 {
                let next = sums[c] / counts[c] as f64;
                shift = shift.max((next - centroids[c]).abs());
                centroids[c] = next;
            }
        }
        if shift <= RELATIVE_TOL * scale {
            break;
        }
    }

    let mut medoids: Vec<f64> = (0..k)
        .filter_map(|c| {
            values
                .iter()
                .copied()
                .filter(|&v| assign(&centroids, v) == c)
                .min_by(|a, b| {
                    (a - centroids[c])
                        .abs()
                        .total_cmp(&(b - centroids[c]).abs())
                        .then(a.total_cmp(b))
                })
        })
        .collect();
    medoids.sort_by(f64::total_cmp);
    medoids.dedup();
    Ok(medoids)
}
