use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_from_regions, validate_classes, ClassSpec, LabeledRegions, TrainingConfig};
use crate::error::{Error, Result};
use crate::inference::classify_regions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub clusters: usize,
    pub sets: usize,
    pub accuracy: f64,
    /// Why training failed on some fold, if it did; such rows score 0.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub best: TrainingConfig,
    /// Sorted by accuracy (descending), then clusters and sets (ascending).
    pub rows: Vec<GridRow>,
}

/// Fold index per sample: within each class, samples are dealt round-robin
/// in input order.
pub fn stratified_folds(samples: &[LabeledRegions], folds: usize) -> Vec<usize> {
    let mut seen = std::collections::BTreeMap::<usize, usize>::new();
    samples
        .iter()
        .map(|s| {
            let k = seen.entry(s.class_id).or_insert(0);
            let fold = *k % folds;
            *k += 1;
            fold
        })
        .collect()
}

/// Exhaustive search over clusters-per-class and fuzzy-set counts (with
/// `e_b = e_q`), scored by stratified k-fold held-out accuracy. Ties prefer
/// the smaller model.
pub fn grid_search(
    samples: &[LabeledRegions],
    classes: &[ClassSpec],
    clusters: &[usize],
    sets: &[usize],
    folds: usize,
    base: &TrainingConfig,
) -> Result<GridReport> {
    validate_classes(classes)?;
    if clusters.is_empty() || sets.is_empty() {
        return Err(Error::InvalidArgument("grid search ranges must be non-empty".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("at least 2 folds are required, got {folds}")));
    }
    let fold_of = stratified_folds(samples, folds);
    let mut candidates: Vec<(usize, usize)> = clusters
        .iter()
        .flat_map(|&c| sets.iter().map(move |&s| (c, s)))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    let mut rows: Vec<GridRow> = candidates
        .par_iter()
        .map(|&(c, s)| {
            let cfg = TrainingConfig {
                clusters_per_class: c,
                e_b: s,
                e_q: s,
                ..base.clone()
            };
            match cross_validate(samples, classes, &cfg, &fold_of, folds) {
                Ok(accuracy) => GridRow { clusters: c, sets: s, accuracy, error: None },
                Err(e) => GridRow { clusters: c, sets: s, accuracy: 0.0, error: Some(e.to_string()) },
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(a.clusters.cmp(&b.clusters))
            .then(a.sets.cmp(&b.sets))
    });
    let top = &rows[0];
    let best = TrainingConfig {
        clusters_per_class: top.clusters,
        e_b: top.sets,
        e_q: top.sets,
        cluster_range: (candidates[0].0, candidates[candidates.len() - 1].0),
        set_range: (
            *sets.iter().min().expect("non-empty"),
            *sets.iter().max().expect("non-empty"),
        ),
        ..base.clone()
    };
    Ok(GridReport { best, rows })
}

fn cross_validate(
    samples: &[LabeledRegions],
    classes: &[ClassSpec],
    cfg: &TrainingConfig,
    fold_of: &[usize],
    folds: usize,
) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for fold in 0..folds {
        let (test, train): (Vec<_>, Vec<_>) = samples
            .iter()
            .zip(fold_of)
            .partition(|(_, &f)| f == fold);
        if test.is_empty() {
            continue;
        }
        let train: Vec<LabeledRegions> = train.into_iter().map(|(s, _)| s.clone()).collect();
        let model = train_from_regions(&train, classes, cfg)?;
        for (s, _) in test {
            total += 1;
            if classify_regions(&model, &s.regions)?.predicted == s.class_id {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData("no held-out samples".into()));
    }
    Ok(correct as f64 / total as f64)
}
