//! Region-level feature preparation.
//!
//! Feature maps are rescaled to the superpixel map's resolution, averaged
//! inside each superpixel, and the most central and typical regions are kept.

mod slic;

use serde::{Deserialize, Serialize};

pub use slic::{enforce_connectivity, slic_segment, SLIC_ITERATIONS};

use crate::error::{Error, Result};

/// Image intensities in `[0, 1]`, channel-major (`data[ch * H * W + r * W + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Raster {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::DimensionMismatch(format!(
                "raster dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::DimensionMismatch(format!(
                "raster {height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("raster value {v} outside [0, 1]")));
        }
        Ok(Raster { height, width, channels, data })
    }

    pub fn pixel(&self, r: usize, c: usize) -> Vec<f64> {
        let plane = self.height * self.width;
        (0..self.channels).map(|ch| self.data[ch * plane + r * self.width + c]).collect()
    }
}

/// Superpixel labels in `[0, count)`, row-major. Every label occurs and
/// every label's pixels form one 4-connected region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    height: usize,
    width: usize,
    labels: Vec<usize>,
    count: usize,
}

impl SuperpixelMap {
    pub fn new(height: usize, width: usize, labels: Vec<usize>) -> Result<Self> {
        if height == 0 || width == 0 || labels.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "label map {height}x{width} with {} labels",
                labels.len()
            )));
        }
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; count];
        labels.iter().for_each(|&l| seen[l] = true);
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("superpixel label {missing} never occurs")));
        }
        let (_, components) = slic::connected_components(&labels, height, width);
        if components.len() != count {
            return Err(Error::InvalidArgument(format!(
                "{count} superpixel labels form {} connected regions",
                components.len()
            )));
        }
        Ok(SuperpixelMap { height, width, labels, count })
    }

    /// Builds a map from signed labels as stored on disk.
    pub fn from_i32(height: usize, width: usize, labels: &[i32]) -> Result<Self> {
        let labels = labels
            .iter()
            .map(|&l| {
                usize::try_from(l)
                    .map_err(|_| Error::InvalidArgument(format!("negative superpixel label {l}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SuperpixelMap::new(height, width, labels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0; self.count];
        self.labels.iter().for_each(|&l| areas[l] += 1);
        areas
    }
}

/// `delta` feature channels over a `height x width` grid, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    pub delta: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl FeatureMaps {
    pub fn new(delta: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if delta == 0 || height == 0 || width == 0 {
            return Err(Error::DimensionMismatch(format!(
                "feature maps must have positive dimensions, got {delta}x{height}x{width}"
            )));
        }
        if values.len() != delta * height * width {
            return Err(Error::DimensionMismatch(format!(
                "feature maps {delta}x{height}x{width} need {} values, got {}",
                delta * height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        Ok(FeatureMaps { delta, height, width, values })
    }

    pub fn channel(&self, ch: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.values[ch * plane..(ch + 1) * plane]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpixelFeature {
    pub label: usize,
    /// Centre of mass as (row, col).
    pub centroid: (f64, f64),
    pub vector: Vec<f64>,
}

/// Per-channel bilinear interpolation with pixel-centre alignment.
pub fn rescale_maps(maps: &FeatureMaps, target_h: usize, target_w: usize) -> Result<FeatureMaps> {
    if target_h == 0 || target_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "rescale target must be positive, got {target_h}x{target_w}"
        )));
    }
    if (target_h, target_w) == (maps.height, maps.width) {
        return Ok(maps.clone());
    }
    let rows = axis_samples(maps.height, target_h);
    let cols = axis_samples(maps.width, target_w);
    let mut values = Vec::with_capacity(maps.delta * target_h * target_w);
    for ch in 0..maps.delta {
        let src = maps.channel(ch);
        for &(r0, r1, fr) in &rows {
            for &(c0, c1, fc) in &cols {
                let top = src[r0 * maps.width + c0] * (1.0 - fc) + src[r0 * maps.width + c1] * fc;
                let bottom = src[r1 * maps.width + c0] * (1.0 - fc) + src[r1 * maps.width + c1] * fc;
                values.push(top * (1.0 - fr) + bottom * fr);
            }
        }
    }
    FeatureMaps::new(maps.delta, target_h, target_w, values)
}

// For each output index: the two source indices and the weight of the second.
fn axis_samples(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = x.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, x - i0 as f64)
        })
        .collect()
}

/// Per-superpixel channel means and centres of mass, ordered by label.
pub fn pool_superpixels(maps: &FeatureMaps, sp: &SuperpixelMap) -> Result<Vec<SuperpixelFeature>> {
    if (maps.height, maps.width) != (sp.height, sp.width) {
        return Err(Error::DimensionMismatch(format!(
            "feature maps are {}x{} but superpixel map is {}x{}",
            maps.height, maps.width, sp.height, sp.width
        )));
    }
    let p = sp.count;
    let mut count = vec![0usize; p];
    let mut pos = vec![(0.0, 0.0); p];
    let mut sums = vec![vec![0.0; maps.delta]; p];
    for (idx, &l) in sp.labels.iter().enumerate() {
        count[l] += 1;
        pos[l].0 += (idx / sp.width) as f64;
        pos[l].1 += (idx % sp.width) as f64;
    }
    for ch in 0..maps.delta {
        let plane = maps.channel(ch);
        for (idx, &l) in sp.labels.iter().enumerate() {
            sums[l][ch] += plane[idx];
        }
    }
    Ok((0..p)
        .map(|l| {
            let m = count[l] as f64;
            SuperpixelFeature {
                label: l,
                centroid: (pos[l].0 / m, pos[l].1 / m),
                vector: sums[l].iter().map(|s| s / m).collect(),
            }
        })
        .collect())
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Keeps superpixels whose mean spatial distance and mean feature distance
/// to all others are both strictly below the respective grand means. Falls
/// back to the full list when fewer than two qualify.
pub fn select_informative(features: &[SuperpixelFeature]) -> Vec<SuperpixelFeature> {
    let n = features.len();
    if n <= 2 {
        return features.to_vec();
    }
    // canonical order makes the sums independent of input order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| features[i].label);

    let mut spatial = vec![0.0; n];
    let mut feature = vec![0.0; n];
    for &i in &order {
        let (ri, ci) = features[i].centroid;
        for &j in &order {
            if i == j {
                continue;
            }
            let (rj, cj) = features[j].centroid;
            spatial[i] += ((ri - rj).powi(2) + (ci - cj).powi(2)).sqrt();
            feature[i] += euclidean(&features[i].vector, &features[j].vector);
        }
        spatial[i] /= (n - 1) as f64;
        feature[i] /= (n - 1) as f64;
    }
    let grand_spatial = order.iter().map(|&i| spatial[i]).sum::<f64>() / n as f64;
    let grand_feature = order.iter().map(|&i| feature[i]).sum::<f64>() / n as f64;

    let selected: Vec<SuperpixelFeature> = (0..n)
        .filter(|&i| spatial[i] < grand_spatial && feature[i] < grand_feature)
        .map(|i| features[i].clone())
        .collect();
    if selected.len() < 2 {
        features.to_vec()
    } else {
        selected
    }
}

/// Where an image's superpixels come from.
#[derive(Debug, Clone, Copy)]
pub enum Segmentation<'a> {
    Labels(&'a SuperpixelMap),
    Slic {
        raster: &'a Raster,
        superpixels: usize,
        compactness: f64,
    },
}

/// Full region pipeline for one image: segment (if needed), rescale the
/// feature maps to the segmentation, pool, and keep informative regions.
pub fn region_features(maps: &FeatureMaps, seg: Segmentation<'_>) -> Result<Vec<SuperpixelFeature>> {
    let computed;
    let sp = match seg {
        Segmentation::Labels(sp) => sp,
        Segmentation::Slic { raster, superpixels, compactness } => {
            computed = slic_segment(raster, superpixels.min(raster.height * raster.width), compactness)?;
            &computed
        }
    };
    let maps = rescale_maps(maps, sp.height, sp.width)?;
    Ok(select_informative(&pool_superpixels(&maps, sp)?))
}
