use ifcm_core::features::{
    pool_superpixels, region_features, rescale_maps, select_informative, FeatureMaps, Raster,
    Segmentation, SuperpixelFeature, SuperpixelMap,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_maps(rng: &mut ChaCha8Rng, delta: usize, h: usize, w: usize) -> FeatureMaps {
    let values = (0..delta * h * w).map(|_| rng.gen_range(-2.0..5.0)).collect();
    FeatureMaps::new(delta, h, w, values).unwrap()
}

fn stripes(h: usize, w: usize, p: usize) -> SuperpixelMap {
    let labels = (0..h * w).map(|idx| (idx % w) * p / w).collect();
    SuperpixelMap::new(h, w, labels).unwrap()
}

#[test]
fn superpixel_map_rejects_gaps_and_split_labels() {
    assert!(SuperpixelMap::new(1, 3, vec![0, 2, 2]).is_err());
    assert!(SuperpixelMap::new(1, 3, vec![0, 1, 0]).is_err());
    assert!(SuperpixelMap::new(2, 2, vec![0, 1, 1, 0]).is_err());
    assert!(SuperpixelMap::new(2, 2, vec![0, 0, 1]).is_err());
    assert!(SuperpixelMap::from_i32(1, 2, &[0, -1]).is_err());
    assert_eq!(SuperpixelMap::from_i32(1, 2, &[1, 0]).unwrap().count(), 2);
}

#[test]
fn rescale_constant_and_identity() {
    let c = FeatureMaps::new(2, 3, 5, vec![0.75; 30]).unwrap();
    let up = rescale_maps(&c, 11, 4).unwrap();
    assert!(up.values.iter().all(|&v| (v - 0.75).abs() < 1e-15));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = random_maps(&mut rng, 3, 4, 6);
    assert_eq!(rescale_maps(&m, 4, 6).unwrap(), m);
    assert!(rescale_maps(&m, 0, 6).is_err());
}

#[test]
fn rescale_2x2_to_4x4_matches_bilinear_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = random_maps(&mut rng, 2, 2, 2);
    let out = rescale_maps(&m, 4, 4).unwrap();
    for ch in 0..2 {
        let v = |r: usize, c: usize| m.values[ch * 4 + r * 2 + c];
        for i in 0..4 {
            for j in 0..4 {
                // source coordinate of output pixel centre, clamped to the grid
                let y = ((i as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, 1.0);
                let x = ((j as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, 1.0);
                let expected = v(0, 0) * (1.0 - y) * (1.0 - x)
                    + v(0, 1) * (1.0 - y) * x
                    + v(1, 0) * y * (1.0 - x)
                    + v(1, 1) * y * x;
                let got = out.values[ch * 16 + i * 4 + j];
                assert!((got - expected).abs() < 1e-12, "({i},{j}) {got} vs {expected}");
            }
        }
    }
}

#[test]
fn pooling_constant_and_global_mean() {
    let c = FeatureMaps::new(2, 4, 4, vec![3.0; 32]).unwrap();
    for f in pool_superpixels(&c, &stripes(4, 4, 3)).unwrap() {
        assert_eq!(f.vector, vec![3.0, 3.0]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_maps(&mut rng, 3, 5, 4);
    let single = SuperpixelMap::new(5, 4, vec![0; 20]).unwrap();
    let pooled = pool_superpixels(&m, &single).unwrap();
    assert_eq!(pooled.len(), 1);
    for ch in 0..3 {
        let mean = m.channel(ch).iter().sum::<f64>() / 20.0;
        assert!((pooled[0].vector[ch] - mean).abs() < 1e-12);
    }
    assert!((pooled[0].centroid.0 - 2.0).abs() < 1e-12);
    assert!((pooled[0].centroid.1 - 1.5).abs() < 1e-12);
}

#[test]
fn pooling_matches_naive_accumulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (h, w, delta) = (6, 10, 4);
    let m = random_maps(&mut rng, delta, h, w);
    let sp = stripes(h, w, 5);
    let pooled = pool_superpixels(&m, &sp).unwrap();
    assert_eq!(pooled.len(), 5);
    for f in &pooled {
        let mut n = 0.0;
        let mut acc = vec![0.0; delta];
        let (mut rs, mut cs) = (0.0, 0.0);
        for r in 0..h {
            for c in 0..w {
                if sp.labels()[r * w + c] != f.label {
                    continue;
                }
                n += 1.0;
                rs += r as f64;
                cs += c as f64;
                for (ch, a) in acc.iter_mut().enumerate() {
                    *a += m.values[ch * h * w + r * w + c];
                }
            }
        }
        for ch in 0..delta {
            assert!((f.vector[ch] - acc[ch] / n).abs() < 1e-12);
        }
        assert!((f.centroid.0 - rs / n).abs() < 1e-12 && (f.centroid.1 - cs / n).abs() < 1e-12);
    }
}

#[test]
fn pooling_dimension_mismatch() {
    let m = FeatureMaps::new(1, 4, 4, vec![0.0; 16]).unwrap();
    assert!(pool_superpixels(&m, &stripes(4, 5, 2)).is_err());
}

fn feature(label: usize, centroid: (f64, f64), vector: Vec<f64>) -> SuperpixelFeature {
    SuperpixelFeature { label, centroid, vector }
}

#[test]
fn selection_fallbacks() {
    let one = vec![feature(0, (1.0, 1.0), vec![0.1])];
    assert_eq!(select_informative(&one), one);
    let two = vec![feature(0, (1.0, 1.0), vec![0.1]), feature(1, (5.0, 1.0), vec![0.9])];
    assert_eq!(select_informative(&two), two);
    let same: Vec<_> = (0..5).map(|l| feature(l, (2.0, 2.0), vec![0.5, 0.5])).collect();
    assert_eq!(select_informative(&same), same);
}

#[test]
fn selection_keeps_tight_cluster() {
    let mut fs: Vec<_> = (0..6)
        .map(|l| feature(l, (10.0 + (l % 3) as f64 * 0.5, 10.0 + (l / 3) as f64 * 0.5), vec![0.2, 0.4]))
        .collect();
    fs.push(feature(6, (0.0, 40.0), vec![3.0, -1.0]));
    fs.push(feature(7, (40.0, 0.0), vec![-2.0, 5.0]));

    // brute-force oracle
    let n = fs.len() as f64;
    let sd = |a: &SuperpixelFeature, b: &SuperpixelFeature| {
        ((a.centroid.0 - b.centroid.0).powi(2) + (a.centroid.1 - b.centroid.1).powi(2)).sqrt()
    };
    let fd = |a: &SuperpixelFeature, b: &SuperpixelFeature| {
        a.vector.iter().zip(&b.vector).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    let ms: Vec<f64> = fs.iter().map(|a| fs.iter().map(|b| sd(a, b)).sum::<f64>() / (n - 1.0)).collect();
    let mf: Vec<f64> = fs.iter().map(|a| fs.iter().map(|b| fd(a, b)).sum::<f64>() / (n - 1.0)).collect();
    let gs = ms.iter().sum::<f64>() / n;
    let gf = mf.iter().sum::<f64>() / n;
    let expected: Vec<usize> = (0..fs.len()).filter(|&i| ms[i] < gs && mf[i] < gf).collect();
    assert_eq!(expected, (0..6).collect::<Vec<_>>());

    let got: Vec<usize> = select_informative(&fs).iter().map(|f| f.label).collect();
    assert_eq!(got, expected);
}

#[test]
fn region_pipeline_with_labels_and_slic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let maps = random_maps(&mut rng, 3, 4, 4);
    let sp = stripes(8, 8, 4);
    let regions = region_features(&maps, Segmentation::Labels(&sp)).unwrap();
    assert!(!regions.is_empty() && regions.len() <= 4);
    let raster = Raster::new(8, 8, 1, (0..64).map(|_| rng.gen()).collect()).unwrap();
    let seg = Segmentation::Slic { raster: &raster, superpixels: 4, compactness: 0.1 };
    let regions = region_features(&maps, seg).unwrap();
    assert!(regions.iter().all(|f| f.vector.len() == 3));
}

#[test]
fn raster_validation() {
    assert!(Raster::new(2, 2, 1, vec![0.0; 3]).is_err());
    assert!(Raster::new(2, 2, 1, vec![0.0, 0.5, 1.0, 1.5]).is_err());
    assert!(Raster::new(0, 2, 1, vec![]).is_err());
}

fn arb_features() -> impl Strategy<Value = Vec<SuperpixelFeature>> {
    prop::collection::vec(
        ((0.0..50.0f64, 0.0..50.0f64), prop::collection::vec(-3.0..3.0f64, 3)),
        1..14,
    )
    .prop_map(|v| v.into_iter().enumerate().map(|(l, (c, d))| feature(l, c, d)).collect())
}

fn labels_of(fs: &[SuperpixelFeature]) -> Vec<usize> {
    let mut l: Vec<usize> = fs.iter().map(|f| f.label).collect();
    l.sort();
    l
}

proptest! {
    #[test]
    fn pooling_conserves_mass(seed in any::<u64>(), h in 1usize..12, w in 1usize..12, p in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let maps = random_maps(&mut rng, 2, h, w);
        let sp = stripes(h, w, p.min(w));
        let areas = sp.areas();
        let pooled = pool_superpixels(&maps, &sp).unwrap();
        for ch in 0..2 {
            let total: f64 = maps.channel(ch).iter().sum();
            let pooled_total: f64 = pooled.iter().map(|f| areas[f.label] as f64 * f.vector[ch]).sum();
            let scale = maps.channel(ch).iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!((total - pooled_total).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn rescale_stays_within_channel_bounds(seed in any::<u64>(), h in 1usize..8, w in 1usize..8, th in 1usize..20, tw in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let maps = random_maps(&mut rng, 2, h, w);
        let out = rescale_maps(&maps, th, tw).unwrap();
        for ch in 0..2 {
            let lo = maps.channel(ch).iter().copied().fold(f64::INFINITY, f64::min);
            let hi = maps.channel(ch).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out.channel(ch).iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        }
    }

    #[test]
    fn selection_is_subset_and_permutation_invariant(fs in arb_features(), shuffle_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let selected = select_informative(&fs);
        prop_assert!(selected.iter().all(|s| fs.contains(s)));
        let mut shuffled = fs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        prop_assert_eq!(labels_of(&select_informative(&shuffled)), labels_of(&selected));
    }

    #[test]
    fn selection_is_translation_invariant(fs in arb_features(), dr in -20i32..20, dc in -20i32..20) {
        // integer offsets keep centroid arithmetic exact
        let rounded: Vec<_> = fs
            .iter()
            .map(|f| feature(f.label, (f.centroid.0.round(), f.centroid.1.round()), f.vector.clone()))
            .collect();
        let moved: Vec<_> = rounded
            .iter()
            .map(|f| feature(f.label, (f.centroid.0 + dr as f64, f.centroid.1 + dc as f64), f.vector.clone()))
            .collect();
        prop_assert_eq!(labels_of(&select_informative(&moved)), labels_of(&select_informative(&rounded)));
    }
}
