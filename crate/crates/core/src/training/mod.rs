//! Data-driven construction of the cognitive map: concept mining,
//! similarity, fuzzy-set families and edge weights.

mod construct;
mod grid;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use construct::{
    build_mf_family, mine_concepts, pair_ifs, similarity, similarity_ratios, weight_cross_class,
    weight_input_input, weight_input_output, MfShape, PairedSets, RelationWeight, FALLBACK_SCALE,
    MIN_SPREAD,
};
pub use grid::{grid_search, stratified_folds, GridReport, GridRow};

use crate::error::{Error, Result};
use crate::ifs::{ifs_union, LinguisticPartition};
use crate::model::{
    Diagnostics, Edge, IfcmModel, IfsLibrary, Polarity, MODEL_FORMAT, MODEL_VERSION,
};
use crate::pack::FeaturePack;
use crate::reasoning::ReasoningConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub id: usize,
    pub name: String,
}

/// Class ids must be exactly `1..=F` in order, with at least two classes.
pub fn validate_classes(classes: &[ClassSpec]) -> Result<()> {
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 classes are required, got {}",
            classes.len()
        )));
    }
    for (i, c) in classes.iter().enumerate() {
        if c.id != i + 1 {
            return Err(Error::InvalidArgument(format!(
                "class ids must be 1..={} in order; found {} at position {}",
                classes.len(),
                c.id,
                i + 1
            )));
        }
    }
    let names: BTreeSet<&str> = classes.iter().map(|c| c.name.as_str()).collect();
    if names.len() != classes.len() {
        return Err(Error::InvalidArgument("class names must be unique".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub clusters_per_class: usize,
    pub e_b: usize,
    pub e_q: usize,
    pub mf_shape: MfShape,
    pub cluster_range: (usize, usize),
    pub set_range: (usize, usize),
    pub seed: u64,
    /// SLIC target for packs that carry a raster but no label map.
    pub superpixels: usize,
    pub compactness: f64,
    pub levels: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            clusters_per_class: 5,
            e_b: 5,
            e_q: 5,
            mf_shape: MfShape::Triangular,
            cluster_range: (5, 50),
            set_range: (5, 15),
            seed: 0,
            superpixels: 16,
            compactness: 0.1,
            levels: 5,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.clusters_per_class == 0 {
            return fail("clusters per class must be at least 1".into());
        }
        if self.e_b < 2 || self.e_q < 2 {
            return fail(format!("fuzzy-set counts must be at least 2, got {} and {}", self.e_b, self.e_q));
        }
        let (c0, c1) = self.cluster_range;
        let (s0, s1) = self.set_range;
        if c0 == 0 || c0 > c1 || s0 < 2 || s0 > s1 {
            return fail(format!(
                "invalid search ranges: clusters {c0}..={c1}, sets {s0}..={s1}"
            ));
        }
        if self.superpixels == 0 || !(self.compactness > 0.0) {
            return fail("superpixel count and compactness must be positive".into());
        }
        LinguisticPartition::new(self.levels)?;
        Ok(())
    }
}

/// Region descriptors of one labelled training image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRegions {
    pub image_id: String,
    pub class_id: usize,
    pub regions: Vec<Vec<f64>>,
}

/// Runs the region pipeline over every pack. Packs must carry a class id.
pub fn extract_regions(packs: &[FeaturePack], cfg: &TrainingConfig) -> Result<Vec<LabeledRegions>> {
    packs
        .par_iter()
        .map(|p| {
            let class_id = p.class_id.ok_or_else(|| {
                Error::InvalidArgument(format!("pack {:?} has no class id", p.image_id))
            })?;
            Ok(LabeledRegions {
                image_id: p.image_id.clone(),
                class_id,
                regions: p.regions(cfg.superpixels, cfg.compactness)?,
            })
        })
        .collect()
}

pub fn train(packs: &[FeaturePack], classes: &[ClassSpec], cfg: &TrainingConfig) -> Result<IfcmModel> {
    cfg.validate()?;
    let samples = extract_regions(packs, cfg)?;
    train_from_regions(&samples, classes, cfg)
}

pub fn train_from_regions(
    samples: &[LabeledRegions],
    classes: &[ClassSpec],
    cfg: &TrainingConfig,
) -> Result<IfcmModel> {
    cfg.validate()?;
    validate_classes(classes)?;
    let partition = LinguisticPartition::new(cfg.levels)?;
    let f = classes.len();

    let mut class_features: Vec<Vec<Vec<f64>>> = vec![Vec::new(); f];
    let mut counts = vec![0usize; f];
    for s in samples {
        let idx = s
            .class_id
            .checked_sub(1)
            .filter(|&i| i < f)
            .ok_or_else(|| Error::InvalidArgument(format!(
                "image {:?} has class {} outside the manifest",
                s.image_id, s.class_id
            )))?;
        if s.regions.is_empty() {
            return Err(Error::InvalidArgument(format!("image {:?} has no regions", s.image_id)));
        }
        counts[idx] += 1;
        class_features[idx].extend(s.regions.iter().cloned());
    }
    let short: Vec<String> = classes
        .iter()
        .zip(&counts)
        .filter(|(_, &n)| n < cfg.clusters_per_class)
        .map(|(c, n)| format!("{} ({}: {n} images)", c.id, c.name))
        .collect();
    if !short.is_empty() {
        return Err(Error::InsufficientData(format!(
            "classes with fewer than {} images: {}",
            cfg.clusters_per_class,
            short.join(", ")
        )));
    }

    let medoids = mine_concepts(classes, &class_features, cfg.clusters_per_class, cfg.seed)?;
    let m = medoids.len();
    let sims: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| similarity(&s.regions, &medoids))
        .collect::<Result<_>>()?;
    // sims_by_class[m][g]: similarities to medoid m of every image of class g
    let sims_by_class: Vec<Vec<Vec<f64>>> = (0..m)
        .map(|mi| {
            let mut groups = vec![Vec::new(); f];
            for (s, z) in samples.iter().zip(&sims) {
                groups[s.class_id - 1].push(z[mi]);
            }
            groups
        })
        .collect();

    let built: Vec<(IfsLibrary, usize)> = (0..m)
        .into_par_iter()
        .map(|mi| {
            let own = medoids[mi].class_id - 1;
            let same = &sims_by_class[mi][own];
            let other: Vec<f64> = sims_by_class[mi]
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != own)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let b = build_mf_family(same, cfg.e_b, cfg.mf_shape)?;
            let q = build_mf_family(&other, cfg.e_q, cfg.mf_shape)?;
            let clamped = usize::from(b.len() < cfg.e_b) + usize::from(q.len() < cfg.e_q);
            let paired = pair_ifs(&b, &q, &partition)?;
            let relation = ifs_union(&paired.sets)?;
            Ok((
                IfsLibrary {
                    sets: paired.sets,
                    relation,
                    scaled: paired.scaled,
                },
                clamped,
            ))
        })
        .collect::<Result<_>>()?;
    let mut diagnostics = Diagnostics::default();
    let mut libraries = Vec::with_capacity(m);
    for (i, (lib, clamped)) in built.into_iter().enumerate() {
        diagnostics.clamped_families += clamped;
        if lib.scaled {
            diagnostics.scaled_libraries.push(i);
        }
        libraries.push(lib);
    }

    let mut edges = Vec::with_capacity(m * (m - 1) + m * f);
    for i in 0..m {
        let own_i = medoids[i].class_id - 1;
        for j in (i + 1)..m {
            let own_j = medoids[j].class_id - 1;
            let rw = weight_input_input(
                &libraries[i].sets,
                &libraries[j].sets,
                &sims_by_class[i][own_i],
                &sims_by_class[j][own_j],
            )?;
            let polarity = if own_i == own_j { Polarity::Positive } else { Polarity::Negative };
            for (from, to) in [(i, j), (j, i)] {
                edges.push(Edge {
                    from,
                    to,
                    weight: rw.weight,
                    z: rw.z,
                    polarity,
                    relation: rw.relation.clone(),
                });
            }
        }
        for g in 0..f {
            let (rw, polarity) = if g == own_i {
                (weight_input_output(&libraries[i].sets, &sims_by_class[i][g])?, Polarity::Positive)
            } else {
                (weight_cross_class(&libraries[i].sets, &sims_by_class[i][g])?, Polarity::Negative)
            };
            edges.push(Edge {
                from: i,
                to: m + g,
                weight: rw.weight,
                z: rw.z,
                polarity,
                relation: rw.relation,
            });
        }
    }
    edges.sort_by_key(|e| (e.from, e.to));
    diagnostics.neutral_edges = edges
        .iter()
        .filter(|e| e.z.is_none())
        .map(|e| (e.from, e.to))
        .collect();

    let model = IfcmModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        classes: classes.to_vec(),
        medoids,
        libraries,
        edges,
        partition,
        reasoning: ReasoningConfig::default(),
        training: cfg.clone(),
        diagnostics,
    };
    model.validate()?;
    Ok(model)
}
