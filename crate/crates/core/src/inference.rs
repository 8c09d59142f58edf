//! Classification of a single image with a trained model, and the
//! linguistic explanation of the outcome.
//!
//! Input concepts carry the image's evidence and keep their membership
//! fixed while the map settles; output concepts start at `<0, 1>` and are
//! driven only by incoming edges.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{IfValue, LinguisticPartition};
use crate::model::{IfcmModel, Polarity};
use crate::reasoning::{real_hesitancy, run_reasoning, ConceptState, ReasoningConfig, ReasoningTrace, Weights};
use crate::training::similarity;

/// Initial value of every output concept.
pub const OUTPUT_INIT: IfValue = IfValue { mu: 0.0, gamma: 1.0 };

/// Evidence for each input concept read off its relation set at the image's
/// similarity to the medoid, followed by the output concepts at
/// [`OUTPUT_INIT`].
pub fn build_state_vector(d_set: &[Vec<f64>], model: &IfcmModel) -> Result<Vec<IfValue>> {
    let dim = model.feature_dim();
    if let Some(bad) = d_set.iter().find(|d| d.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "region vectors have length {}, model expects {dim}",
            bad.len()
        )));
    }
    let z = similarity(d_set, &model.medoids)?;
    let mut state: Vec<IfValue> = model
        .libraries
        .iter()
        .zip(&z)
        .map(|(lib, &z)| {
            let v = lib.relation.eval(z);
            IfValue::saturating(v.mu, v.gamma)
        })
        .collect();
    state.extend(std::iter::repeat_n(OUTPUT_INIT, model.n_classes()));
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputScore {
    pub class_id: usize,
    pub value: IfValue,
    pub real_hesitancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDecision {
    pub predicted: usize,
    pub runner_up: Option<usize>,
    /// One entry per class, in class order.
    pub scores: Vec<OutputScore>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: ReasoningTrace,
}

impl ClassDecision {
    pub fn final_state(&self) -> &[IfValue] {
        self.trace
            .final_state()
            .as_ifcm()
            .expect("classification traces are intuitionistic")
    }

    pub fn score(&self, class_id: usize) -> Option<&OutputScore> {
        self.scores.iter().find(|s| s.class_id == class_id)
    }
}

/// Reasoning configuration actually used for a model: its stored settings
/// with every input concept anchored.
pub fn reasoning_config(model: &IfcmModel, cfg: &ReasoningConfig) -> ReasoningConfig {
    ReasoningConfig {
        anchored: model.n_inputs(),
        ..*cfg
    }
}

/// Runs the map to steady state and picks the class with the largest
/// output membership; ties go to the lower real hesitancy, then the lower
/// class id. Non-convergence is reported, not an error.
pub fn classify(model: &IfcmModel, state: &[IfValue], cfg: &ReasoningConfig) -> Result<ClassDecision> {
    if state.len() != model.n_concepts() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} concepts, model has {}",
            state.len(),
            model.n_concepts()
        )));
    }
    if let Some(v) = state.iter().find(|v| !v.is_valid()) {
        return Err(Error::InvalidValue { mu: v.mu, gamma: v.gamma });
    }
    let cfg = reasoning_config(model, cfg);
    let w = Weights::Ifcm(model.weight_matrix()?);
    let trace = run_reasoning(&ConceptState::Ifcm(state.to_vec()), &w, &cfg)?;
    let last = trace
        .final_state()
        .as_ifcm()
        .expect("intuitionistic trace")
        .to_vec();

    let scores = model
        .classes
        .iter()
        .enumerate()
        .map(|(k, class)| {
            let value = last[model.output_concept(k)];
            Ok(OutputScore {
                class_id: class.id,
                value,
                real_hesitancy: real_hesitancy(value, &cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<&OutputScore> = scores.iter().collect();
    order.sort_by(|a, b| {
        b.value
            .mu
            .total_cmp(&a.value.mu)
            .then(a.real_hesitancy.total_cmp(&b.real_hesitancy))
            .then(a.class_id.cmp(&b.class_id))
    });
    let predicted = order[0].class_id;
    let runner_up = order.get(1).map(|s| s.class_id);
    Ok(ClassDecision {
        predicted,
        runner_up,
        iterations: trace.iterations,
        converged: trace.converged,
        scores,
        trace,
    })
}

/// Region descriptors in, decision out, using the model's stored reasoning
/// settings.
pub fn classify_regions(model: &IfcmModel, d_set: &[Vec<f64>]) -> Result<ClassDecision> {
    let state = build_state_vector(d_set, model)?;
    classify(model, &state, &model.reasoning)
}

/// Real hesitancy of an anchored input concept: its membership is raw
/// evidence, so only the non-membership passes through the inverse
/// transfer.
pub fn input_real_hesitancy(v: IfValue, cfg: &ReasoningConfig) -> Result<f64> {
    Ok((1.0 - v.mu - cfg.transfer_gamma.inverse(v.gamma)?).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub concept: usize,
    pub label: String,
    pub mu: f64,
    pub real_hesitancy: f64,
    pub similarity_term: String,
    pub hesitancy_term: String,
    pub polarity: Polarity,
}

impl Clause {
    pub fn text(&self) -> String {
        format!(
            "{} similarity with {} hesitancy with {}",
            self.similarity_term, self.hesitancy_term, self.label
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub predicted: usize,
    pub predicted_name: String,
    pub positive: Vec<Clause>,
    pub runner_up: Option<usize>,
    pub runner_up_name: Option<String>,
    pub negative: Vec<Clause>,
}

impl Explanation {
    /// Two bullets: why the image is the predicted class, and why it is not
    /// the runner-up.
    pub fn render(&self) -> String {
        let mut out = format!(
            "- The input image is classified as \"{}\" because it has {}.\n",
            self.predicted_name,
            enumerate_clauses(&self.positive)
        );
        if let Some(name) = &self.runner_up_name {
            let _ = writeln!(
                out,
                "- The input image cannot be classified as \"{name}\" because it has {}.",
                enumerate_clauses(&self.negative)
            );
        }
        out
    }
}

fn enumerate_clauses(clauses: &[Clause]) -> String {
    clauses
        .iter()
        .enumerate()
        .map(|(i, c)| format!("({}) {}", item_marker(i), c.text()))
        .collect::<Vec<_>>()
        .join("; ")
}

fn item_marker(i: usize) -> String {
    if i < 26 {
        char::from(b'a' + i as u8).to_string()
    } else {
        (i + 1).to_string()
    }
}

/// Linguistic terms for a membership degree and a hesitancy degree.
pub fn describe(partition: &LinguisticPartition, mu: f64, hesitancy: f64) -> (String, String) {
    (
        partition.label_for(mu).to_string(),
        partition.label_for(hesitancy).to_string(),
    )
}

pub fn explain(decision: &ClassDecision, model: &IfcmModel) -> Result<Explanation> {
    let cfg = reasoning_config(model, &model.reasoning);
    let last = decision.final_state();
    if last.len() != model.n_concepts() {
        return Err(Error::DimensionMismatch("decision was not produced by this model".into()));
    }
    let clauses_for = |class_id: usize, polarity: Polarity| -> Result<Vec<Clause>> {
        (0..model.n_inputs())
            .filter(|&c| model.medoids[c].class_id == class_id)
            .map(|c| {
                let v = last[c];
                let h = input_real_hesitancy(v, &cfg)?;
                let (similarity_term, hesitancy_term) = describe(&model.partition, v.mu, h);
                Ok(Clause {
                    concept: c,
                    label: model.concept_label(c).to_string(),
                    mu: v.mu,
                    real_hesitancy: h,
                    similarity_term,
                    hesitancy_term,
                    polarity,
                })
            })
            .collect()
    };
    Ok(Explanation {
        predicted: decision.predicted,
        predicted_name: model.class_name(decision.predicted).to_string(),
        positive: clauses_for(decision.predicted, Polarity::Positive)?,
        runner_up: decision.runner_up,
        runner_up_name: decision.runner_up.map(|c| model.class_name(c).to_string()),
        negative: match decision.runner_up {
            Some(c) => clauses_for(c, Polarity::Negative)?,
            None => Vec::new(),
        },
    })
}

pub const TRACE_HEADER: &str = "iteration,concept_id,mu,gamma,hesitancy";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub concept: usize,
    pub mu: f64,
    pub gamma: f64,
    /// Plain `1 - mu - gamma`.
    pub hesitancy: f64,
}

pub fn trace_rows(trace: &ReasoningTrace) -> Vec<TraceRow> {
    trace
        .states
        .iter()
        .enumerate()
        .flat_map(|(t, state)| {
            state
                .as_ifcm()
                .unwrap_or(&[])
                .iter()
                .enumerate()
                .map(move |(i, v)| TraceRow {
                    iteration: t,
                    concept: i,
                    mu: v.mu,
                    gamma: v.gamma,
                    hesitancy: v.hesitancy(),
                })
        })
        .collect()
}

/// CSV with one row per (iteration, concept); reals use nine significant
/// digits in scientific notation.
pub fn render_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.8e},{:.8e},{:.8e}",
            r.iteration, r.concept, r.mu, r.gamma, r.hesitancy
        );
    }
    out
}

pub fn trace_export(decision: &ClassDecision) -> String {
    render_trace_csv(&trace_rows(&decision.trace))
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(Error::Format("trace CSV header mismatch".into()));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let bad = || Error::Format(format!("trace CSV row {}: {line:?}", n + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad());
            }
            Ok(TraceRow {
                iteration: f[0].parse().map_err(|_| bad())?,
                concept: f[1].parse().map_err(|_| bad())?,
                mu: f[2].parse().map_err(|_| bad())?,
                gamma: f[3].parse().map_err(|_| bad())?,
                hesitancy: f[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
