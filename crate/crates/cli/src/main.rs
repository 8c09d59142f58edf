//! `ifcm`: train, query and inspect intuitionistic FCM image classifiers.
//!
//! Exit codes: 0 ok, 2 bad input data, 3 training failure, 4 model/input
//! mismatch, 5 unreadable or corrupt model.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ifcm_core::inference::{classify_regions, explain, trace_export, ClassDecision};
use ifcm_core::model::{IfcmModel, Polarity};
use ifcm_core::pack::{read_manifest, read_pack, read_pack_dir, FeaturePack};
use ifcm_core::training::{
    extract_regions, grid_search, train, ClassSpec, GridReport, MfShape, TrainingConfig,
};
use ifcm_core::Error;
use serde::Deserialize;

const EXIT_INPUT: u8 = 2;
const EXIT_TRAINING: u8 = 3;
const EXIT_MISMATCH: u8 = 4;
const EXIT_MODEL: u8 = 5;

#[derive(Parser)]
#[command(name = "ifcm", version, about = "Interpretable image classification with intuitionistic fuzzy cognitive maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a directory of labelled feature packs.
    Train(TrainArgs),
    /// Classify one feature pack.
    Classify(ClassifyArgs),
    /// Classify one feature pack and write the reasoning trace as CSV.
    Trace(TraceArgs),
    /// Print concepts, weighted edges and training diagnostics of a model.
    Inspect(InspectArgs),
    /// Search clusters per class and fuzzy-set counts by cross-validation.
    Gridsearch(GridArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Triangular,
    Gaussian,
}

impl From<Shape> for MfShape {
    fn from(s: Shape) -> Self {
        match s {
            Shape::Triangular => MfShape::Triangular,
            Shape::Gaussian => MfShape::Gaussian,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Directory of `.ifp` feature packs.
    #[arg(long)]
    data: PathBuf,
    /// Class manifest with one `id,name` line per class.
    #[arg(long)]
    manifest: PathBuf,
    /// Superpixel target for packs without a stored label map.
    #[arg(long)]
    superpixels: Option<usize>,
    #[arg(long)]
    compactness: Option<f64>,
    /// Linguistic levels (3, 5 or 7).
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, value_enum)]
    mf: Option<Shape>,
    /// Random seed; the IFCM_SEED environment variable takes precedence.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Clusters (medoid concepts) per class.
    #[arg(long)]
    clusters: Option<usize>,
    /// Fuzzy sets per family (both families).
    #[arg(long)]
    sets: Option<usize>,
    /// Start from a saved configuration or grid-search report.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Concept labels, one `concept,label` line per renamed medoid concept.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Print the linguistic explanation.
    #[arg(long)]
    explain: bool,
    /// Write the reasoning trace to this CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    model: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Clusters per class: `N` or `LO-HI[:STEP]`.
    #[arg(long, default_value = "5-50:5", value_parser = parse_range)]
    clusters: Grid,
    /// Fuzzy sets per family: `N` or `LO-HI[:STEP]`.
    #[arg(long, default_value = "5-15", value_parser = parse_range)]
    sets: Grid,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    /// Report file: winning configuration and the accuracy table.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone)]
struct Grid(Vec<usize>);

fn parse_range(s: &str) -> Result<Grid, String> {
    let bad = || format!("expected N or LO-HI[:STEP], got {s:?}");
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let (span, step) = match s.split_once(':') {
        Some((span, step)) => (span, num(step)?),
        None => (s, 1),
    };
    let (lo, hi) = match span.split_once('-') {
        Some((lo, hi)) => (num(lo)?, num(hi)?),
        None => (num(span)?, num(span)?),
    };
    if step == 0 || lo > hi {
        return Err(bad());
    }
    Ok(Grid((lo..=hi).step_by(step).collect()))
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8) -> impl Fn(Error) -> Failure {
    move |e| Failure { code, message: e.to_string() }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Trace(a) => cmd_classify(ClassifyArgs {
            model: a.model,
            input: a.input,
            explain: false,
            trace: Some(a.out),
        }),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Gridsearch(a) => cmd_gridsearch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("IFCM_SEED") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Failure {
            code: EXIT_INPUT,
            message: format!("IFCM_SEED must be an unsigned integer, got {v:?}"),
        }),
        Err(_) => Ok(None),
    }
}

fn apply_data_overrides(cfg: &mut TrainingConfig, a: &DataArgs) -> Result<(), Failure> {
    if let Some(v) = a.superpixels {
        cfg.superpixels = v;
    }
    if let Some(v) = a.compactness {
        cfg.compactness = v;
    }
    if let Some(v) = a.levels {
        cfg.levels = v;
    }
    if let Some(v) = a.mf {
        cfg.mf_shape = v.into();
    }
    if let Some(v) = env_seed()?.or(a.seed) {
        cfg.seed = v;
    }
    Ok(())
}

/// Manifest plus every pack in the data directory; each pack must name a
/// class from the manifest.
fn load_training_data(a: &DataArgs) -> Result<(Vec<ClassSpec>, Vec<FeaturePack>), Failure> {
    let classes = read_manifest(&a.manifest).map_err(fail(EXIT_INPUT))?;
    let loaded = read_pack_dir(&a.data).map_err(fail(EXIT_INPUT))?;
    if loaded.is_empty() {
        return Err(Failure {
            code: EXIT_INPUT,
            message: format!("no .ifp packs in {}", a.data.display()),
        });
    }
    let mut packs = Vec::with_capacity(loaded.len());
    for (path, pack) in loaded {
        match pack.class_id {
            Some(c) if (1..=classes.len()).contains(&c) => packs.push(pack),
            other => {
                return Err(Failure {
                    code: EXIT_INPUT,
                    message: format!("{}: class id {other:?} is not in the manifest", path.display()),
                })
            }
        }
    }
    Ok((classes, packs))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Report(GridReport),
    Config(TrainingConfig),
}

fn read_config(path: &Path) -> Result<TrainingConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })?;
    match serde_json::from_str(&text) {
        Ok(ConfigFile::Report(r)) => Ok(r.best),
        Ok(ConfigFile::Config(c)) => Ok(c),
        Err(e) => Err(Failure {
            code: EXIT_INPUT,
            message: format!("{}: not a training configuration: {e}", path.display()),
        }),
    }
}

fn parse_labels(path: &Path) -> Result<Vec<(usize, String)>, Failure> {
    let bad = |msg: String| Failure { code: EXIT_INPUT, message: format!("{}: {msg}", path.display()) };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    text.lines()
        .enumerate()
        .map(|(n, l)| (n, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(n, l)| {
            let (c, label) = l
                .split_once(',')
                .ok_or_else(|| bad(format!("line {}: expected `concept,label`", n + 1)))?;
            let c = c
                .trim()
                .parse()
                .map_err(|_| bad(format!("line {}: bad concept id {c:?}", n + 1)))?;
            Ok((c, label.trim().to_string()))
        })
        .collect()
}

fn cmd_train(a: TrainArgs) -> CliResult {
    let mut cfg = match &a.config {
        Some(p) => read_config(p)?,
        None => TrainingConfig::default(),
    };
    if let Some(v) = a.clusters {
        cfg.clusters_per_class = v;
    }
    if let Some(v) = a.sets {
        cfg.e_b = v;
        cfg.e_q = v;
    }
    apply_data_overrides(&mut cfg, &a.data)?;
    cfg.validate().map_err(fail(EXIT_INPUT))?;
    let labels = a.labels.as_deref().map(parse_labels).transpose()?;
    let (classes, packs) = load_training_data(&a.data)?;

    let mut model = train(&packs, &classes, &cfg).map_err(|e| match e {
        Error::InvalidShape(_) | Error::DimensionMismatch(_) | Error::InvalidArgument(_) => {
            fail(EXIT_INPUT)(e)
        }
        other => fail(EXIT_TRAINING)(other),
    })?;
    for (c, label) in labels.unwrap_or_default() {
        model.set_concept_label(c, label).map_err(fail(EXIT_INPUT))?;
    }
    model.save(&a.out).map_err(fail(EXIT_TRAINING))?;

    println!(
        "trained {} concepts ({} input, {} output) from {} images",
        model.n_concepts(),
        model.n_inputs(),
        model.n_classes(),
        packs.len()
    );
    let phi: Vec<String> = model.libraries.iter().map(|l| l.sets.len().to_string()).collect();
    println!("fuzzy sets per medoid: {}", phi.join(" "));
    let d = &model.diagnostics;
    println!(
        "diagnostics: {} neutral edges, {} scaled libraries, {} clamped families",
        d.neutral_edges.len(),
        d.scaled_libraries.len(),
        d.clamped_families
    );
    println!("model written to {}", a.out.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<IfcmModel, Failure> {
    IfcmModel::load(path).map_err(fail(EXIT_MODEL))
}

fn run_pack(model: &IfcmModel, pack: &FeaturePack) -> Result<ClassDecision, Failure> {
    if pack.delta != model.feature_dim() {
        return Err(Failure {
            code: EXIT_MISMATCH,
            message: format!(
                "pack {:?} has {} feature channels, model expects {}",
                pack.image_id,
                pack.delta,
                model.feature_dim()
            ),
        });
    }
    let regions = pack
        .regions(model.training.superpixels, model.training.compactness)
        .map_err(fail(EXIT_INPUT))?;
    classify_regions(model, &regions).map_err(|e| match e {
        Error::DimensionMismatch(_) => fail(EXIT_MISMATCH)(e),
        other => fail(EXIT_MODEL)(other),
    })
}

fn cmd_classify(a: ClassifyArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let pack = read_pack(&a.input).map_err(fail(EXIT_INPUT))?;
    let d = run_pack(&model, &pack)?;

    println!("predicted: class {} ({})", d.predicted, model.class_name(d.predicted));
    if let Some(r) = d.runner_up {
        println!("runner-up: class {r} ({})", model.class_name(r));
    }
    println!("{:<6} {:<16} {:>10} {:>10} {:>10}", "class", "name", "mu", "gamma", "hesitancy");
    for s in &d.scores {
        println!(
            "{:<6} {:<16} {:>10.6} {:>10.6} {:>10.6}",
            s.class_id,
            model.class_name(s.class_id),
            s.value.mu,
            s.value.gamma,
            s.real_hesitancy
        );
    }
    println!(
        "iterations: {} ({})",
        d.iterations,
        if d.converged { "converged" } else { "not converged" }
    );
    if a.explain {
        let e = explain(&d, &model).map_err(fail(EXIT_MISMATCH))?;
        print!("{}", e.render());
    }
    if let Some(path) = &a.trace {
        std::fs::write(path, trace_export(&d)).map_err(|e| Failure {
            code: EXIT_INPUT,
            message: format!("{}: {e}", path.display()),
        })?;
        println!("trace written to {}", path.display());
    }
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let m = model.n_inputs();
    println!(
        "model: {} classes, {} input concepts, {} concepts, feature dimension {}",
        model.n_classes(),
        m,
        model.n_concepts(),
        model.feature_dim()
    );
    let t = &model.training;
    println!(
        "training: clusters {}, sets {}/{}, {:?} membership functions, seed {}",
        t.clusters_per_class, t.e_b, t.e_q, t.mf_shape, t.seed
    );
    println!("concepts:");
    for c in 0..model.n_concepts() {
        let kind = if c < m { "input" } else { "output" };
        println!(
            "  C{c:<3} {kind:<6} class {:<3} {}",
            model.concept_class(c),
            model.concept_label(c)
        );
    }
    println!("edges:");
    for e in &model.edges {
        let w = e.weight;
        let z = e.z.map_or("neutral".to_string(), |z| format!("z={z:.4}"));
        let polarity = match e.polarity {
            Polarity::Positive => "+",
            Polarity::Negative => "-",
        };
        println!(
            "  C{:<3} -> C{:<3} <{:.4}, {:.4}> {:<9} {polarity} {z}",
            e.from,
            e.to,
            w.mu,
            w.gamma,
            model.partition.label_for(w.mu)
        );
    }
    let d = &model.diagnostics;
    let neutral: Vec<String> = d.neutral_edges.iter().map(|(f, t)| format!("C{f}->C{t}")).collect();
    println!("diagnostics:");
    println!("  neutral edges: {} {}", neutral.len(), neutral.join(" "));
    println!("  scaled libraries: {:?}", d.scaled_libraries);
    println!("  clamped families: {}", d.clamped_families);
    Ok(())
}

fn cmd_gridsearch(a: GridArgs) -> CliResult {
    let mut base = TrainingConfig::default();
    apply_data_overrides(&mut base, &a.data)?;
    let (classes, packs) = load_training_data(&a.data)?;
    let samples = extract_regions(&packs, &base).map_err(fail(EXIT_INPUT))?;
    let report = grid_search(&samples, &classes, &a.clusters.0, &a.sets.0, a.folds, &base)
        .map_err(fail(EXIT_TRAINING))?;
    let json = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    std::fs::write(&a.out, json).map_err(|e| Failure {
        code: EXIT_TRAINING,
        message: format!("{}: {e}", a.out.display()),
    })?;

    println!("{:>8} {:>5} {:>9}", "clusters", "sets", "accuracy");
    for r in &report.rows {
        let note = r.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default();
        println!("{:>8} {:>5} {:>9.4}{note}", r.clusters, r.sets, r.accuracy);
    }
    println!(
        "best: clusters {}, sets {}, accuracy {:.4}",
        report.best.clusters_per_class, report.best.e_b, report.rows[0].accuracy
    );
    println!("report written to {}", a.out.display());
    Ok(())
}
