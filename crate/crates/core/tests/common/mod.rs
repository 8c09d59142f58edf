//! Synthetic labelled packs: each class owns two "part" blobs in feature
//! space; every image shows both parts in its central superpixels and
//! unrelated noise, spread wider than the part blobs, everywhere else.

#![allow(dead_code)]

use ifcm_core::pack::FeaturePack;
use ifcm_core::training::ClassSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const DELTA: usize = 8;
pub const MAP: usize = 8;
pub const RASTER: usize = 8;
pub const TILES: usize = 4;
pub const PARTS: usize = 2;

pub struct Fixture {
    pub classes: Vec<ClassSpec>,
    pub train: Vec<FeaturePack>,
    pub test: Vec<FeaturePack>,
}

pub fn classes(n: usize) -> Vec<ClassSpec> {
    (1..=n)
        .map(|id| ClassSpec {
            id,
            name: format!("class{id}"),
        })
        .collect()
}

/// `per_class` packs per class; the first `train_per_class` of each class
/// go to the training split.
pub fn blobs(seed: u64, n_classes: usize, per_class: usize, train_per_class: usize) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<Vec<f64>>> = (0..n_classes)
        .map(|_| {
            (0..PARTS)
                .map(|_| (0..DELTA).map(|_| rng.gen_range(0.0..3.0)).collect())
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, 0.15).unwrap();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for k in 0..per_class {
        for (c, parts) in centers.iter().enumerate() {
            let pack = image(&mut rng, &noise, c + 1, parts, format!("c{}-{k:03}", c + 1));
            if k < train_per_class {
                train.push(pack);
            } else {
                test.push(pack);
            }
        }
    }
    Fixture {
        classes: classes(n_classes),
        train,
        test,
    }
}

fn image(
    rng: &mut ChaCha8Rng,
    noise: &Normal<f64>,
    class_id: usize,
    parts: &[Vec<f64>],
    image_id: String,
) -> FeaturePack {
    let central = [(1, 1), (1, 2), (2, 1), (2, 2)];
    let mut slots = [0usize, 0, 1, 1];
    for i in (1..slots.len()).rev() {
        slots.swap(i, rng.gen_range(0..=i));
    }
    let mut tile_vectors = vec![vec![0.0; DELTA]; TILES * TILES];
    for ty in 0..TILES {
        for tx in 0..TILES {
            let v = &mut tile_vectors[ty * TILES + tx];
            match central.iter().position(|&p| p == (ty, tx)) {
                Some(i) => {
                    for (d, slot) in v.iter_mut().enumerate() {
                        *slot = parts[slots[i]][d] + noise.sample(rng);
                    }
                }
                None => v.iter_mut().for_each(|slot| *slot = rng.gen_range(-2.0..5.0)),
            }
        }
    }
    let cell = MAP / TILES;
    let mut features = vec![0.0f32; DELTA * MAP * MAP];
    for d in 0..DELTA {
        for r in 0..MAP {
            for col in 0..MAP {
                features[d * MAP * MAP + r * MAP + col] =
                    tile_vectors[(r / cell) * TILES + col / cell][d] as f32;
            }
        }
    }
    let tile = RASTER / TILES;
    let labels = (0..RASTER * RASTER)
        .map(|idx| ((idx / RASTER / tile) * TILES + (idx % RASTER) / tile) as i32)
        .collect();
    FeaturePack {
        image_id,
        class_id: Some(class_id),
        height: RASTER,
        width: RASTER,
        channels: 0,
        delta: DELTA,
        zeta: MAP,
        rho: MAP,
        raster: None,
        features,
        labels: Some(labels),
        extra: Vec::new(),
    }
}
