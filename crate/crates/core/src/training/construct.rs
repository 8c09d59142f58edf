use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ClassSpec;
use crate::cluster::{kmeans, kmeans_1d};
use crate::error::{Error, Result};
use crate::features::euclidean;
use crate::ifs::{
    icoa, ifs_intersection, ifs_union, ifs_validate, IfValue, Ifs, LinguisticPartition,
    MembershipFunction, VALIDATION_GRID,
};
use crate::model::Medoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MfShape {
    Triangular,
    Gaussian,
}

/// Smallest foot extension and Gaussian spread used for fuzzy-set families.
pub const MIN_SPREAD: f64 = 0.05;
/// Amplitude applied to both families when no raw pair is valid.
pub const FALLBACK_SCALE: f64 = 0.5;

/// Clusters each class's region vectors into `m_f` groups and snaps each
/// centroid to its nearest member. Medoids are returned class by class.
pub fn mine_concepts(
    classes: &[ClassSpec],
    class_features: &[Vec<Vec<f64>>],
    m_f: usize,
    seed: u64,
) -> Result<Vec<Medoid>> {
    if classes.len() != class_features.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} classes but {} feature groups",
            classes.len(),
            class_features.len()
        )));
    }
    let per_class: Vec<Vec<Medoid>> = classes
        .par_iter()
        .zip(class_features)
        .map(|(class, vectors)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(class.id as u64);
            let clustering = kmeans(vectors, m_f, &mut rng).map_err(|e| match e {
                Error::InsufficientData(msg) => {
                    Error::InsufficientData(format!("class {} ({}): {msg}", class.id, class.name))
                }
                other => other,
            })?;
            Ok(clustering
                .medoids
                .iter()
                .enumerate()
                .map(|(k, &idx)| Medoid {
                    vector: vectors[idx].clone(),
                    class_id: class.id,
                    label: format!("{}-part{}", class.name, k + 1),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_class.into_iter().flatten().collect())
}

/// Share of the summed distance from `d` to every medoid that falls on each
/// medoid. The shares sum to one; when `d` coincides with every medoid each
/// share is `1 / M`.
pub fn similarity_ratios<M: AsRef<[f64]>>(d: &[f64], medoids: &[M]) -> Vec<f64> {
    let dists: Vec<f64> = medoids.iter().map(|r| euclidean(d, r.as_ref())).collect();
    let total: f64 = dists.iter().sum();
    if total > 0.0 {
        dists.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / medoids.len() as f64; medoids.len()]
    }
}

/// Normalised similarity of an image's region set to each medoid: the mean
/// over regions of one minus the region's distance share.
pub fn similarity<M: AsRef<[f64]>>(d_set: &[Vec<f64>], medoids: &[M]) -> Result<Vec<f64>> {
    if medoids.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "similarity needs at least 2 medoids, got {}",
            medoids.len()
        )));
    }
    if d_set.is_empty() {
        return Err(Error::InvalidArgument("similarity needs at least one region".into()));
    }
    let dim = medoids[0].as_ref().len();
    if let Some(bad) = d_set
        .iter()
        .map(Vec::len)
        .chain(medoids.iter().map(|m| m.as_ref().len()))
        .find(|&l| l != dim)
    {
        return Err(Error::DimensionMismatch(format!(
            "feature vectors of length {bad} against medoids of length {dim}"
        )));
    }
    let mut z = vec![0.0; medoids.len()];
    for d in d_set {
        for (acc, ratio) in z.iter_mut().zip(similarity_ratios(d, medoids)) {
            *acc += 1.0 - ratio;
        }
    }
    let p = d_set.len() as f64;
    Ok(z.into_iter().map(|s| (s / p).clamp(0.0, 1.0)).collect())
}

/// Covering family of membership functions over `[0, 1]`, one per 1-D
/// cluster medoid of `values`.
pub fn build_mf_family(values: &[f64], e: usize, shape: MfShape) -> Result<Vec<MembershipFunction>> {
    let b = kmeans_1d(values, e)?;
    let n = b.len();
    if n == 1 {
        let c = b[0];
        return Ok(vec![match shape {
            MfShape::Triangular => {
                MembershipFunction::trapezoidal(c.min(0.0) - MIN_SPREAD, c, c.max(1.0), c.max(1.0))?
            }
            MfShape::Gaussian => MembershipFunction::gaussian(c, (0.5 * c.max(1.0 - c)).max(MIN_SPREAD))?,
        }]);
    }
    (0..n)
        .map(|i| match shape {
            MfShape::Triangular => {
                if i == 0 {
                    let s = (b[1] - b[0]).max(MIN_SPREAD);
                    MembershipFunction::triangular(b[0].min(0.0) - s, b[0], b[1])
                } else if i + 1 == n {
                    MembershipFunction::trapezoidal(b[i - 1], b[i], 1.0f64.max(b[i]), 1.0f64.max(b[i]))
                } else {
                    MembershipFunction::triangular(b[i - 1], b[i], b[i + 1])
                }
            }
            MfShape::Gaussian => {
                let left = if i > 0 { b[i] - b[i - 1] } else { f64::INFINITY };
                let right = if i + 1 < n { b[i + 1] - b[i] } else { f64::INFINITY };
                MembershipFunction::gaussian(b[i], (0.5 * left.min(right)).max(MIN_SPREAD))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSets {
    pub sets: Vec<Ifs>,
    pub scaled: bool,
}

/// Every (B, Q) pair that forms a valid intuitionistic fuzzy set, labelled
/// by the linguistic term of the B apex. When none is valid, both families
/// are halved in amplitude and every pair is returned.
pub fn pair_ifs(
    b_family: &[MembershipFunction],
    q_family: &[MembershipFunction],
    partition: &LinguisticPartition,
) -> Result<PairedSets> {
    if b_family.is_empty() || q_family.is_empty() {
        return Err(Error::EmptyAggregation);
    }
    let pairs = |factor: Option<f64>| -> Vec<Ifs> {
        let mut out = Vec::new();
        for b in b_family {
            for q in q_family {
                let label = partition.label_for(b.apex());
                let s = match factor {
                    None => Ifs::new(label, b.clone(), q.clone()),
                    Some(f) => Ifs::new(label, b.clone(), q.clone()).scaled(f),
                };
                if factor.is_some() || ifs_validate(&s, VALIDATION_GRID) {
                    out.push(s);
                }
            }
        }
        out
    };
    let raw = pairs(None);
    if !raw.is_empty() {
        return Ok(PairedSets { sets: raw, scaled: false });
    }
    Ok(PairedSets {
        sets: pairs(Some(FALLBACK_SCALE)),
        scaled: true,
    })
}

/// Edge weight read off a relation set at its center of area.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationWeight {
    pub weight: IfValue,
    pub relation: Ifs,
    /// `None` when the center of area was indeterminate (neutral edge).
    pub z: Option<f64>,
}

fn read_weight(relation: Ifs, locator: &Ifs, sims: &[f64]) -> Result<RelationWeight> {
    match icoa(locator, sims) {
        Ok(z) => {
            let v = relation.eval(z);
            Ok(RelationWeight {
                weight: IfValue::saturating(v.mu, v.gamma),
                relation,
                z: Some(z),
            })
        }
        Err(Error::Indeterminate) => Ok(RelationWeight {
            weight: IfValue::ZERO,
            relation,
            z: None,
        }),
        Err(e) => Err(e),
    }
}

/// Medoid concept to its own class: union of the medoid's sets,
/// defuzzified over same-class similarities.
pub fn weight_input_output(ifs_set: &[Ifs], same_class_sims: &[f64]) -> Result<RelationWeight> {
    let relation = ifs_union(ifs_set)?;
    let locator = relation.clone();
    read_weight(relation, &locator, same_class_sims)
}

/// Medoid concept to another class. The center of area is taken with
/// membership and non-membership exchanged, over that class's similarities
/// to the medoid, so the weight is read where the evidence argues against
/// the medoid's own relation.
pub fn weight_cross_class(ifs_set: &[Ifs], other_class_sims: &[f64]) -> Result<RelationWeight> {
    let relation = ifs_union(ifs_set)?;
    let locator = relation.swapped();
    read_weight(relation, &locator, other_class_sims)
}

/// Medoid concept to medoid concept: intersection of the two unions,
/// defuzzified over both medoids' same-class similarities.
pub fn weight_input_input(
    ifs_i: &[Ifs],
    ifs_j: &[Ifs],
    sims_i: &[f64],
    sims_j: &[f64],
) -> Result<RelationWeight> {
    let relation = ifs_intersection(&ifs_union(ifs_i)?, &ifs_union(ifs_j)?)?;
    let pooled: Vec<f64> = sims_i.iter().chain(sims_j).copied().collect();
    let locator = relation.clone();
    read_weight(relation, &locator, &pooled)
}
