//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use ifcm_core::ifs::{icoa, ifs_union, IfValue, Ifs, LinguisticPartition, MembershipFunction, Curve};
use ifcm_core::inference::{classify_regions, explain, ClassDecision};
use ifcm_core::model::IfcmModel;
use ifcm_core::pack::FeaturePack;
use ifcm_core::reasoning::{
    ifcm_update, sigma_accumulate, ConceptState, ReasoningConfig, ReasoningTrace, WeightMatrix,
};
use ifcm_core::training::{
    build_mf_family, pair_ifs, similarity, similarity_ratios, train, weight_cross_class,
    weight_input_input, weight_input_output, MfShape, TrainingConfig,
};
use ifcm_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn run(&mut self, name: &'static str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let mut outcome = f();
        let took = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if took > limit {
                outcome = Err(format!("took {took:.2?}, limit {limit:?}"));
            }
        }
        let line = match outcome {
            Ok(detail) => format!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                self.failed.push(name);
                format!("FAIL  {name}: {why} [{took:.2?}]")
            }
        };
        // straight to the process stdout so the lines survive output capture
        writeln!(std::io::stdout().lock(), "{line}").unwrap();
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- oracles

const GRID: usize = 1001;

fn grid_valid(mu: impl Fn(f64) -> f64, gamma: impl Fn(f64) -> f64) -> bool {
    (0..GRID).all(|k| {
        let x = k as f64 / (GRID - 1) as f64;
        let (m, g) = (mu(x), gamma(x));
        (0.0..=1.0).contains(&m) && (0.0..=1.0).contains(&g) && m + g <= 1.0 + 1e-12
    })
}

fn ifs_valid(s: &Ifs) -> bool {
    grid_valid(|x| s.mu.eval(x), |x| s.gamma.eval(x))
}

fn value_valid(v: IfValue) -> bool {
    (0.0..=1.0).contains(&v.mu) && (0.0..=1.0).contains(&v.gamma) && v.mu + v.gamma <= 1.0 + 1e-12
}

fn literal_ifcm_step(state: &[IfValue], w: &[Vec<IfValue>]) -> Vec<IfValue> {
    let n = state.len();
    (0..n)
        .map(|i| {
            let mut sigma = 0.0;
            let mut first = true;
            let mut prod = 1.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let t = state[j].mu * w[j][i].mu;
                sigma = if first { t } else { sigma + t - sigma * t };
                first = false;
                prod *= state[j].gamma + w[j][i].gamma - state[j].gamma * w[j][i].gamma;
            }
            let mu = (state[i].mu + (1.0 - state[i].mu) * sigma).tanh().clamp(0.0, 1.0);
            let mut gamma = (state[i].gamma * prod).tanh().clamp(0.0, 1.0);
            if mu + gamma > 1.0 {
                gamma = 1.0 - mu;
            }
            IfValue { mu, gamma }
        })
        .collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn similarity_oracle(d_set: &[Vec<f64>], medoids: &[Vec<f64>]) -> Vec<f64> {
    let m = medoids.len() as f64;
    medoids
        .iter()
        .map(|r| {
            d_set
                .iter()
                .map(|d| {
                    let total: f64 = medoids.iter().map(|ri| euclid(d, ri)).sum();
                    if total == 0.0 {
                        1.0 - 1.0 / m
                    } else {
                        1.0 - euclid(d, r) / total
                    }
                })
                .sum::<f64>()
                / d_set.len() as f64
        })
        .collect()
}

fn icoa_oracle(s: &Ifs, samples: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (mut num, mut den, mut kept) = (0.0, 0.0, Vec::new());
    for &z in samples {
        let (m, g) = (s.mu.eval(z), s.gamma.eval(z));
        if m > g {
            num += (m - g) * z;
            den += m - g;
            kept.push(z);
        }
    }
    (den > 0.0).then(|| (num / den, kept))
}

// ------------------------------------------------------------- generators

fn random_mf(rng: &mut ChaCha8Rng) -> MembershipFunction {
    let mut v = [rng.gen::<f64>(), rng.gen(), rng.gen(), rng.gen()];
    v.sort_by(f64::total_cmp);
    match rng.gen_range(0..3) {
        0 => MembershipFunction::triangular(v[0], v[1], v[2]).unwrap(),
        1 => MembershipFunction::trapezoidal(v[0], v[1], v[2], v[3]).unwrap(),
        _ => MembershipFunction::gaussian(v[1], 0.02 + 0.3 * v[0]).unwrap(),
    }
}

// Random valid IFS: a union of amplitude-bounded pairs.
fn random_ifs(rng: &mut ChaCha8Rng) -> Ifs {
    let parts: Vec<Ifs> = (0..rng.gen_range(1..4))
        .map(|_| {
            let a = rng.gen_range(0.2..=1.0);
            let b = rng.gen_range(0.0..=1.0 - a);
            Ifs::new("r", Curve::from(random_mf(rng)).scaled(a), Curve::from(random_mf(rng)).scaled(b))
        })
        .collect();
    ifs_union(&parts).unwrap()
}

fn random_value(rng: &mut ChaCha8Rng) -> IfValue {
    let mu: f64 = rng.gen();
    IfValue { mu, gamma: rng.gen::<f64>() * (1.0 - mu) }
}

fn random_vectors(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect()
}

fn random_pack(rng: &mut ChaCha8Rng, k: usize) -> FeaturePack {
    let (h, w) = (rng.gen_range(1..9), rng.gen_range(1..9));
    let channels = rng.gen_range(0..4);
    let (delta, zeta, rho) = (rng.gen_range(1..6), rng.gen_range(1..6), rng.gen_range(1..6));
    let labels = (channels == 0 || rng.gen()).then(|| (0..h * w).map(|_| rng.gen()).collect());
    FeaturePack {
        image_id: format!("fuzz-{k}"),
        class_id: rng.gen::<bool>().then(|| rng.gen_range(1..20)),
        height: h,
        width: w,
        channels,
        delta,
        zeta,
        rho,
        raster: (channels > 0).then(|| (0..channels * h * w).map(|_| rng.gen()).collect()),
        features: (0..delta * zeta * rho).map(|_| rng.gen_range(-1e3..1e3)).collect(),
        labels,
        extra: (0..rng.gen_range(0..3)).map(|i| (format!("key{i}"), format!("v{}", rng.gen::<u32>()))).collect(),
    }
}

fn accuracy(model: &IfcmModel, packs: &[FeaturePack]) -> Result<f64, Error> {
    let mut correct = 0;
    for p in packs {
        let regions = p.regions(model.training.superpixels, model.training.compactness)?;
        if classify_regions(model, &regions)?.predicted == p.class_id.unwrap() {
            correct += 1;
        }
    }
    Ok(correct as f64 / packs.len() as f64)
}

fn fixture_config(seed: u64) -> TrainingConfig {
    TrainingConfig {
        clusters_per_class: 2,
        e_b: 5,
        e_q: 5,
        seed,
        ..Default::default()
    }
}

// ------------------------------------------------------------- criteria

fn ifs_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let partition = LinguisticPartition::default();
    let mut sets = 0usize;
    let mut values = 0usize;
    for case in 0..1000 {
        let shape = if case % 2 == 0 { MfShape::Gaussian } else { MfShape::Triangular };
        let centre = rng.gen_range(0.3..0.9);
        let same: Vec<f64> = (0..rng.gen_range(1..30))
            .map(|_| (centre + rng.gen_range(-0.1..0.1f64)).clamp(0.0, 1.0))
            .collect();
        let other: Vec<f64> = (0..rng.gen_range(1..30)).map(|_| rng.gen()).collect();
        let e = rng.gen_range(2..8);
        let b = build_mf_family(&same, e, shape).map_err(|e| e.to_string())?;
        let q = build_mf_family(&other, e, shape).map_err(|e| e.to_string())?;
        let lib = pair_ifs(&b, &q, &partition).map_err(|e| e.to_string())?.sets;
        let lib2 = pair_ifs(&q, &b, &partition).map_err(|e| e.to_string())?.sets;
        let relation = ifs_union(&lib).map_err(|e| e.to_string())?;
        let weights = [
            weight_input_output(&lib, &same),
            weight_cross_class(&lib, &other),
            weight_input_input(&lib, &lib2, &same, &other),
        ];
        for s in lib.iter().chain(&lib2).chain(std::iter::once(&relation)) {
            sets += 1;
            ensure(ifs_valid(s), || format!("case {case}: invalid set {s:?}"))?;
        }
        for w in weights {
            let w = w.map_err(|e| e.to_string())?;
            sets += 1;
            values += 1;
            ensure(ifs_valid(&w.relation), || format!("case {case}: invalid relation"))?;
            ensure(value_valid(w.weight), || format!("case {case}: invalid weight {:?}", w.weight))?;
        }
        // one reasoning step over the produced weights
        let n = 4;
        let mut wm = WeightMatrix::<IfValue>::new(n);
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    let v = relation.eval(rng.gen());
                    wm.set(j, i, IfValue::saturating(v.mu, v.gamma)).map_err(|e| e.to_string())?;
                }
            }
        }
        let state: Vec<IfValue> = (0..n).map(|_| random_value(&mut rng)).collect();
        let (next, _) = ifcm_update(&state, &wm, &ReasoningConfig::default()).map_err(|e| e.to_string())?;
        for v in next {
            values += 1;
            ensure(value_valid(v), || format!("case {case}: invalid state {v:?}"))?;
        }
    }
    Ok(format!("{sets} sets and {values} values valid on a {GRID}-point grid"))
}

fn sigma_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let n = rng.gen_range(0..16);
        let v: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let closed = 1.0 - v.iter().zip(&w).map(|(a, b)| 1.0 - a * b).product::<f64>();
        let fold = sigma_accumulate(&v, &w).map_err(|e| e.to_string())?;
        worst = worst.max((fold - closed).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("10000 cases, max deviation {worst:.1e}"))
}

fn reasoning_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let cfg = ReasoningConfig::default();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let state: Vec<IfValue> = (0..n).map(|_| random_value(&mut rng)).collect();
        let mut raw = vec![vec![IfValue::ZERO; n]; n];
        let mut w = WeightMatrix::<IfValue>::new(n);
        for j in 0..n {
            for i in 0..n {
                if i != j && rng.gen_bool(0.7) {
                    raw[j][i] = random_value(&mut rng);
                    w.set(j, i, raw[j][i]).map_err(|e| e.to_string())?;
                }
            }
        }
        let (ours, _) = ifcm_update(&state, &w, &cfg).map_err(|e| e.to_string())?;
        for (a, b) in ours.iter().zip(literal_ifcm_step(&state, &raw)) {
            worst = worst.max((a.mu - b.mu).abs()).max((a.gamma - b.gamma).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("1000 instances, max deviation {worst:.1e}"))
}

fn gamma_decay() -> Outcome {
    let mut worst_gamma = 0.0f64;
    let mut max_iters = 0;
    for seed in 0..100u64 {
        let classes = 2 + (seed % 3) as usize;
        let clusters = 1 + (seed % 3) as usize;
        let fx = common::blobs(1000 + seed, classes, 12, 10);
        let cfg = TrainingConfig { clusters_per_class: clusters, seed, ..Default::default() };
        let model = train(&fx.train, &fx.classes, &cfg).map_err(|e| e.to_string())?;
        let probe = &fx.test[(seed as usize) % fx.test.len()];
        let regions = probe.regions(16, 0.1).map_err(|e| e.to_string())?;
        let d = classify_regions(&model, &regions).map_err(|e| e.to_string())?;
        ensure(d.converged && d.iterations <= 100, || {
            format!("model {seed}: not converged after {} iterations", d.iterations)
        })?;
        max_iters = max_iters.max(d.iterations);
        let states: Vec<&[IfValue]> = d.trace.states.iter().map(|s| s.as_ifcm().unwrap()).collect();
        for c in 0..model.n_concepts() {
            for t in 1..states.len() {
                ensure(states[t][c].gamma <= states[t - 1][c].gamma, || {
                    format!("model {seed}: gamma of concept {c} rises at iteration {t}")
                })?;
            }
            worst_gamma = worst_gamma.max(states.last().unwrap()[c].gamma);
        }
    }
    ensure(worst_gamma < 1e-4, || format!("final gamma {worst_gamma:e}"))?;
    Ok(format!("100 models, max final gamma {worst_gamma:.1e}, max {max_iters} iterations"))
}

fn similarity_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let (mut worst, mut worst_sum) = (0.0f64, 0.0f64);
    for case in 0..1000 {
        let dim = rng.gen_range(1..10);
        let (m, p) = (rng.gen_range(2..8), rng.gen_range(1..20));
        let mut medoids = random_vectors(&mut rng, m, dim);
        let mut d_set = random_vectors(&mut rng, p, dim);
        if case % 50 == 0 {
            // coincident points exercise the zero-distance guard
            d_set[0] = medoids[0].clone();
            medoids = vec![medoids[0].clone(); medoids.len()];
        }
        let z = similarity(&d_set, &medoids).map_err(|e| e.to_string())?;
        for (a, b) in z.iter().zip(similarity_oracle(&d_set, &medoids)) {
            worst = worst.max((a - b).abs());
        }
        for d in &d_set {
            let s: f64 = similarity_ratios(d, &medoids).iter().sum();
            worst_sum = worst_sum.max((s - 1.0).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    ensure(worst_sum <= 1e-14, || format!("ratio sums off by {worst_sum:e}"))?;
    Ok(format!("1000 cases, max deviation {worst:.1e}, ratio sums within {worst_sum:.1e} of 1"))
}

fn icoa_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let (mut worst, mut determinate) = (0.0f64, 0);
    for case in 0..1000 {
        let s = random_ifs(&mut rng);
        let samples: Vec<f64> = (0..rng.gen_range(1..40)).map(|_| rng.gen()).collect();
        match (icoa(&s, &samples), icoa_oracle(&s, &samples)) {
            (Ok(z), Some((expected, kept))) => {
                determinate += 1;
                worst = worst.max((z - expected).abs());
                let lo = kept.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = kept.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                ensure(z >= lo && z <= hi, || format!("case {case}: {z} outside [{lo}, {hi}]"))?;
            }
            (Err(Error::Indeterminate), None) => {}
            (got, want) => return Err(format!("case {case}: got {got:?}, oracle {want:?}")),
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("1000 cases ({determinate} determinate), max deviation {worst:.1e}"))
}

fn end_to_end() -> Outcome {
    let mut accs = Vec::new();
    for seed in 0..5u64 {
        let fx = common::blobs(seed, 3, 60, 40);
        let model = train(&fx.train, &fx.classes, &fixture_config(seed)).map_err(|e| e.to_string())?;
        accs.push(accuracy(&model, &fx.test).map_err(|e| e.to_string())?);
    }
    let shown: Vec<String> = accs.iter().map(|a| format!("{a:.3}")).collect();
    ensure(accs.iter().all(|&a| a >= 0.90), || format!("held-out accuracy per seed {shown:?}"))?;
    Ok(format!("held-out accuracy per seed {}", shown.join(", ")))
}

fn topology() -> Outcome {
    let fx = common::blobs(0, 3, 20, 20);
    let model = train(&fx.train, &fx.classes, &fixture_config(0)).map_err(|e| e.to_string())?;
    let (m, f) = (model.n_inputs(), model.n_classes());
    ensure((m, f) == (6, 3), || format!("{m} input and {f} output concepts"))?;
    let input_input = model.edges.iter().filter(|e| e.to < m).count();
    let input_output = model.edges.iter().filter(|e| e.to >= m).count();
    ensure(input_input == 30 && input_output == 18, || {
        format!("{input_input} input-input and {input_output} input-output edges")
    })?;
    Ok("6 input + 3 output concepts, 30 input-input and 18 input-output edges".into())
}

fn explanation_golden() -> Outcome {
    let fx = common::blobs(0, 2, 10, 10);
    let cfg = TrainingConfig { clusters_per_class: 1, ..Default::default() };
    let mut model = train(&fx.train, &fx.classes, &cfg).map_err(|e| e.to_string())?;
    model.set_concept_label(0, "Flamingo-head").map_err(|e| e.to_string())?;
    let state = vec![
        IfValue { mu: 0.95, gamma: 0.02f64.tanh() },
        IfValue { mu: 0.2, gamma: 0.1 },
        IfValue { mu: 0.8, gamma: 0.0 },
        IfValue { mu: 0.3, gamma: 0.0 },
    ];
    let decision = ClassDecision {
        predicted: 1,
        runner_up: Some(2),
        scores: Vec::new(),
        iterations: 0,
        converged: true,
        trace: ReasoningTrace {
            states: vec![ConceptState::Ifcm(state)],
            converged: true,
            iterations: 0,
            renormalized: 0,
        },
    };
    let e = explain(&decision, &model).map_err(|e| e.to_string())?;
    let clause = "Very High similarity with Very Low hesitancy with Flamingo-head";
    let text = e.render();
    ensure(text.contains(&format!("because it has (a) {clause}.")), || text.clone())?;
    Ok(format!("\"{clause}\""))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fx = common::blobs(9, 3, 30, 20);
    let mut files = Vec::new();
    let mut decisions = Vec::new();
    for run in 0..2 {
        let model = train(&fx.train, &fx.classes, &fixture_config(9)).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("run{run}.json"));
        model.save(&path).map_err(|e| e.to_string())?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        let d: Vec<ClassDecision> = fx
            .test
            .iter()
            .map(|p| classify_regions(&model, &p.regions(16, 0.1)?))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        decisions.push(d);
    }
    ensure(files[0] == files[1], || "model files differ".into())?;
    ensure(decisions[0] == decisions[1], || "decisions differ".into())?;
    Ok(format!("{} byte model file and {} decisions identical", files[0].len(), decisions[0].len()))
}

fn format_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    for k in 0..1000 {
        let pack = random_pack(&mut rng, k);
        let bytes = pack.to_bytes().map_err(|e| e.to_string())?;
        let back = FeaturePack::from_bytes(&bytes).map_err(|e| format!("pack {k}: {e}"))?;
        ensure(back.to_bytes().map_err(|e| e.to_string())? == bytes, || format!("pack {k} bytes differ"))?;
        ensure(back == pack, || format!("pack {k} differs"))?;
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for k in 0..8u64 {
        let classes = 2 + (k % 3) as usize;
        let fx = common::blobs(700 + k, classes, 14, 10);
        let cfg = TrainingConfig {
            clusters_per_class: 1 + (k % 3) as usize,
            e_b: 2 + (k % 5) as usize,
            e_q: 3 + (k % 4) as usize,
            mf_shape: if k % 2 == 0 { MfShape::Gaussian } else { MfShape::Triangular },
            levels: [3, 5, 7][(k % 3) as usize],
            seed: k,
            ..Default::default()
        };
        let model = train(&fx.train, &fx.classes, &cfg).map_err(|e| e.to_string())?;
        let path = dir.path().join("m.json");
        model.save(&path).map_err(|e| e.to_string())?;
        let first = std::fs::read(&path).map_err(|e| e.to_string())?;
        let loaded = IfcmModel::load(&path).map_err(|e| e.to_string())?;
        loaded.save(&path).map_err(|e| e.to_string())?;
        ensure(std::fs::read(&path).map_err(|e| e.to_string())? == first, || format!("model {k} not stable"))?;
        for p in &fx.test {
            let regions = p.regions(16, 0.1).map_err(|e| e.to_string())?;
            let a = classify_regions(&model, &regions).map_err(|e| e.to_string())?;
            let b = classify_regions(&loaded, &regions).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("model {k}: reloaded decision differs"))?;
        }
    }
    Ok("1000 packs byte-identical, 8 models stable and observationally identical".into())
}

#[test]
fn acceptance() {
    let mut r = Report { failed: Vec::new() };
    r.run("IFS validity", Some(Duration::from_secs(10)), ifs_validity);
    r.run("sigma recursion identity", Some(Duration::from_secs(1)), sigma_identity);
    r.run("reasoning oracle", None, reasoning_oracle);
    r.run("non-membership decay", None, gamma_decay);
    r.run("similarity oracle", None, similarity_criterion);
    r.run("icoa oracle", None, icoa_criterion);
    r.run("end-to-end synthetic classification", Some(Duration::from_secs(60)), end_to_end);
    r.run("topology", None, topology);
    r.run("explanation golden", None, explanation_golden);
    r.run("determinism", None, determinism);
    r.run("format round trips", None, format_round_trips);
    assert!(r.failed.is_empty(), "failed criteria: {:?}", r.failed);
}
