//! SLIC superpixels over raw raster channels.
//!
//! Cluster centres start on a regular grid, are nudged to the lowest-gradient
//! pixel of their 3x3 neighbourhood, and are refined for a fixed number of
//! local k-means passes in joint colour + position space. A final pass makes
//! every label 4-connected by merging small fragments into their largest
//! neighbouring region.

use std::collections::{BTreeSet, VecDeque};

use super::{Raster, SuperpixelMap};
use crate::error::{Error, Result};

pub const SLIC_ITERATIONS: usize = 10;

#[derive(Debug, Clone)]
struct Center {
    row: f64,
    col: f64,
    color: Vec<f64>,
}

pub fn slic_segment(raster: &Raster, p_target: usize, compactness: f64) -> Result<SuperpixelMap> {
    let (h, w) = (raster.height, raster.width);
    let n = h * w;
    if p_target == 0 || p_target > n {
        return Err(Error::InvalidArgument(format!(
            "superpixel count {p_target} outside [1, {n}]"
        )));
    }
    if !(compactness > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "compactness must be positive, got {compactness}"
        )));
    }
    if p_target == 1 {
        return SuperpixelMap::new(h, w, vec![0; n]);
    }

    let step = (n as f64 / p_target as f64).sqrt();
    let mut centers = seed_centers(raster, p_target);
    let spatial_weight = (compactness / step).powi(2);
    let radius = step.ceil() as isize;

    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![f64::INFINITY; n];
    for _ in 0..SLIC_ITERATIONS {
        labels.fill(usize::MAX);
        dist.fill(f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let (r0, c0) = (c.row.round() as isize, c.col.round() as isize);
            let rows = (r0 - radius).max(0)..(r0 + radius + 1).min(h as isize);
            for r in rows {
                let cols = (c0 - radius).max(0)..(c0 + radius + 1).min(w as isize);
                for col in cols {
                    let idx = r as usize * w + col as usize;
                    let d = joint_distance(raster, idx, c, spatial_weight, w);
                    if d < dist[idx] {
                        dist[idx] = d;
                        labels[idx] = k;
                    }
                }
            }
        }
        // pixels outside every search window go to the globally nearest centre
        for idx in 0..n {
            if labels[idx] == usize::MAX {
                let (k, _) = centers
                    .iter()
                    .enumerate()
                    .map(|(k, c)| (k, joint_distance(raster, idx, c, spatial_weight, w)))
                    .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
                labels[idx] = k;
            }
        }
        update_centers(raster, &labels, &mut centers);
    }

    let labels = enforce_connectivity(&labels, h, w, p_target);
    SuperpixelMap::new(h, w, labels)
}

fn seed_centers(raster: &Raster, p_target: usize) -> Vec<Center> {
    let (h, w) = (raster.height, raster.width);
    let ny = ((p_target as f64 * h as f64 / w as f64).sqrt().round() as usize).clamp(1, h);
    let nx = p_target.div_ceil(ny).clamp(1, w);
    let mut centers = Vec::with_capacity(ny * nx);
    for iy in 0..ny {
        for ix in 0..nx {
            let r = (((iy as f64 + 0.5) * h as f64 / ny as f64) as usize).min(h - 1);
            let c = (((ix as f64 + 0.5) * w as f64 / nx as f64) as usize).min(w - 1);
            let (r, c) = lowest_gradient(raster, r, c);
            centers.push(Center {
                row: r as f64,
                col: c as f64,
                color: raster.pixel(r, c),
            });
        }
    }
    centers
}

fn lowest_gradient(raster: &Raster, r: usize, c: usize) -> (usize, usize) {
    let (h, w) = (raster.height, raster.width);
    let mut best = (r, c);
    let mut best_g = f64::INFINITY;
    for dr in -1isize..=1 {
        for dc in -1isize..=1 {
            let (rr, cc) = (r as isize + dr, c as isize + dc);
            if rr < 1 || cc < 1 || rr + 1 >= h as isize || cc + 1 >= w as isize {
                continue;
            }
            let (rr, cc) = (rr as usize, cc as usize);
            let g = color_dist2(&raster.pixel(rr + 1, cc), &raster.pixel(rr - 1, cc))
                + color_dist2(&raster.pixel(rr, cc + 1), &raster.pixel(rr, cc - 1));
            if g < best_g {
                best_g = g;
                best = (rr, cc);
            }
        }
    }
    best
}

fn color_dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn joint_distance(raster: &Raster, idx: usize, c: &Center, spatial_weight: f64, w: usize) -> f64 {
    let plane = raster.height * raster.width;
    let dc: f64 = (0..raster.channels)
        .map(|ch| (raster.data[ch * plane + idx] - c.color[ch]).powi(2))
        .sum();
    let (r, col) = ((idx / w) as f64, (idx % w) as f64);
    let ds = (r - c.row).powi(2) + (col - c.col).powi(2);
    dc + spatial_weight * ds
}

fn update_centers(raster: &Raster, labels: &[usize], centers: &mut [Center]) {
    let plane = raster.height * raster.width;
    let w = raster.width;
    let k = centers.len();
    let mut count = vec![0usize; k];
    let mut pos = vec![(0.0, 0.0); k];
    let mut color = vec![vec![0.0; raster.channels]; k];
    for (idx, &l) in labels.iter().enumerate() {
        count[l] += 1;
        pos[l].0 += (idx / w) as f64;
        pos[l].1 += (idx % w) as f64;
        for (ch, acc) in color[l].iter_mut().enumerate() {
            *acc += raster.data[ch * plane + idx];
        }
    }
    for (l, center) in centers.iter_mut().enumerate() {
        if count[l] == 0 {
            continue;
        }
        let m = count[l] as f64;
        center.row = pos[l].0 / m;
        center.col = pos[l].1 / m;
        center.color = color[l].iter().map(|v| v / m).collect();
    }
}

/// Splits labels into 4-connected components and merges components smaller
/// than a quarter of the nominal superpixel area into their largest
/// neighbour. Returns contiguous labels in row-major order of appearance.
pub fn enforce_connectivity(labels: &[usize], h: usize, w: usize, p_target: usize) -> Vec<usize> {
    let n = h * w;
    let (component, sizes) = connected_components(labels, h, w);
    let count = sizes.len();

    let mut adjacency = vec![BTreeSet::new(); count];
    for idx in 0..n {
        let (r, c) = (idx / w, idx % w);
        if c + 1 < w && component[idx] != component[idx + 1] {
            adjacency[component[idx]].insert(component[idx + 1]);
            adjacency[component[idx + 1]].insert(component[idx]);
        }
        if r + 1 < h && component[idx] != component[idx + w] {
            adjacency[component[idx]].insert(component[idx + w]);
            adjacency[component[idx + w]].insert(component[idx]);
        }
    }

    let mut parent: Vec<usize> = (0..count).collect();
    let mut size = sizes;
    let mut members: Vec<Vec<usize>> = (0..count).map(|c| vec![c]).collect();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by_key(|&c| (size[c], c));

    let is_small = |s: usize| s * 4 * p_target < n;
    for c in order {
        let root = find(&mut parent, c);
        if !is_small(size[root]) {
            continue;
        }
        let mut neighbours = BTreeSet::new();
        for &m in &members[root] {
            for &a in &adjacency[m] {
                let r = find(&mut parent, a);
                if r != root {
                    neighbours.insert(r);
                }
            }
        }
        let Some(&target) = neighbours
            .iter()
            .max_by(|&&a, &&b| size[a].cmp(&size[b]).then(b.cmp(&a)))
        else {
            continue;
        };
        parent[root] = target;
        size[target] += size[root];
        let moved = std::mem::take(&mut members[root]);
        members[target].extend(moved);
    }

    let mut remap = vec![usize::MAX; count];
    let mut next = 0;
    component
        .iter()
        .map(|&c| {
            let root = find(&mut parent, c);
            if remap[root] == usize::MAX {
                remap[root] = next;
                next += 1;
            }
            remap[root]
        })
        .collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// 4-connected components of equal labels. Returns per-pixel component ids
/// and component sizes.
pub(crate) fn connected_components(labels: &[usize], h: usize, w: usize) -> (Vec<usize>, Vec<usize>) {
    let n = h * w;
    let mut component = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let label = labels[start];
        component[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(idx) = queue.pop_front() {
            size += 1;
            let (r, c) = (idx / w, idx % w);
            let mut visit = |j: usize| {
                if component[j] == usize::MAX && labels[j] == label {
                    component[j] = id;
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(idx - w);
            }
            if r + 1 < h {
                visit(idx + w);
            }
            if c > 0 {
                visit(idx - 1);
            }
            if c + 1 < w {
                visit(idx + 1);
            }
        }
        sizes.push(size);
    }
    (component, sizes)
}
