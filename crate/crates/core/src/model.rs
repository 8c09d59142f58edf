//! Trained model and its on-disk form.
//!
//! Concept ids: `0..M` are the medoid (input) concepts in medoid order,
//! `M..M + F` the class (output) concepts in class order. Only input
//! concepts have outgoing edges.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{ifs_validate, IfValue, Ifs, LinguisticPartition, VALIDATION_GRID};
use crate::reasoning::{ReasoningConfig, WeightMatrix};
use crate::training::{validate_classes, ClassSpec, TrainingConfig};

pub const MODEL_FORMAT: &str = "ifcm-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medoid {
    pub vector: Vec<f64>,
    pub class_id: usize,
    pub label: String,
}

impl AsRef<[f64]> for Medoid {
    fn as_ref(&self) -> &[f64] {
        &self.vector
    }
}

/// The intuitionistic fuzzy sets built for one medoid and their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsLibrary {
    pub sets: Vec<Ifs>,
    pub relation: Ifs,
    /// True when no raw (B, Q) pair was valid and both families were
    /// halved in amplitude.
    pub scaled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: IfValue,
    /// Defuzzified similarity the weight was read at; absent for neutral
    /// edges.
    pub z: Option<f64>,
    pub polarity: Polarity,
    pub relation: Ifs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Edges whose center of area was indeterminate and were set to <0, 0>.
    pub neutral_edges: Vec<(usize, usize)>,
    /// Medoids whose IFS library needed the amplitude fallback.
    pub scaled_libraries: Vec<usize>,
    /// Fuzzy-set families that got fewer sets than requested because the
    /// similarity values had too few distinct points.
    pub clamped_families: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfcmModel {
    pub format: String,
    pub version: u32,
    pub classes: Vec<ClassSpec>,
    pub medoids: Vec<Medoid>,
    pub libraries: Vec<IfsLibrary>,
    pub edges: Vec<Edge>,
    pub partition: LinguisticPartition,
    pub reasoning: ReasoningConfig,
    pub training: TrainingConfig,
    pub diagnostics: Diagnostics,
}

impl IfcmModel {
    pub fn n_inputs(&self) -> usize {
        self.medoids.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_concepts(&self) -> usize {
        self.n_inputs() + self.n_classes()
    }

    pub fn feature_dim(&self) -> usize {
        self.medoids.first().map_or(0, |m| m.vector.len())
    }

    /// Position of a class id in `classes`.
    pub fn class_index(&self, class_id: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.id == class_id)
    }

    pub fn output_concept(&self, class_index: usize) -> usize {
        self.n_inputs() + class_index
    }

    pub fn class_name(&self, class_id: usize) -> &str {
        self.class_index(class_id)
            .map_or("?", |i| self.classes[i].name.as_str())
    }

    pub fn concept_label(&self, concept: usize) -> &str {
        if concept < self.n_inputs() {
            &self.medoids[concept].label
        } else {
            &self.classes[concept - self.n_inputs()].name
        }
    }

    pub fn concept_class(&self, concept: usize) -> usize {
        if concept < self.n_inputs() {
            self.medoids[concept].class_id
        } else {
            self.classes[concept - self.n_inputs()].id
        }
    }

    pub fn weight_matrix(&self) -> Result<WeightMatrix<IfValue>> {
        let mut w = WeightMatrix::new(self.n_concepts());
        for e in &self.edges {
            w.set(e.from, e.to, e.weight)?;
        }
        Ok(w)
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn set_concept_label(&mut self, concept: usize, label: impl Into<String>) -> Result<()> {
        let m = self.n_inputs();
        let slot = self.medoids.get_mut(concept).ok_or_else(|| {
            Error::InvalidArgument(format!("concept {concept} is not an input concept (0..{m})"))
        })?;
        slot.label = label.into();
        Ok(())
    }

    /// Checks every structural and numeric invariant of a trained model.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Corrupt(msg));
        if self.format != MODEL_FORMAT {
            return bad(format!("unknown model format {:?}", self.format));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {}", self.version)));
        }
        validate_classes(&self.classes).map_err(|e| Error::Corrupt(e.to_string()))?;
        self.reasoning.validate().map_err(|e| Error::Corrupt(e.to_string()))?;
        if LinguisticPartition::new(self.partition.levels()).ok().as_ref() != Some(&self.partition) {
            return bad("linguistic partition is not a uniform 3/5/7-level partition".into());
        }
        let m = self.n_inputs();
        if m == 0 {
            return bad("model has no input concepts".into());
        }
        let dim = self.feature_dim();
        for (i, med) in self.medoids.iter().enumerate() {
            if med.vector.len() != dim || dim == 0 || med.vector.iter().any(|v| !v.is_finite()) {
                return bad(format!("medoid {i} has a malformed vector"));
            }
            if self.class_index(med.class_id).is_none() {
                return bad(format!("medoid {i} refers to unknown class {}", med.class_id));
            }
        }
        if self.libraries.len() != m {
            return bad(format!("{} IFS libraries for {m} medoids", self.libraries.len()));
        }
        for (i, lib) in self.libraries.iter().enumerate() {
            if lib.sets.is_empty() {
                return bad(format!("medoid {i} has an empty IFS library"));
            }
            for s in lib.sets.iter().chain([&lib.relation]) {
                check_ifs(s).map_err(|e| Error::Corrupt(format!("medoid {i}: {e}")))?;
            }
        }

        let n = self.n_concepts();
        let mut seen = vec![false; n * n];
        for e in &self.edges {
            if e.from >= m || e.to >= n || e.from == e.to {
                return bad(format!("illegal edge {} -> {}", e.from, e.to));
            }
            if std::mem::replace(&mut seen[e.from * n + e.to], true) {
                return bad(format!("duplicate edge {} -> {}", e.from, e.to));
            }
            if !e.weight.is_valid() {
                return bad(format!("edge {} -> {} has invalid weight", e.from, e.to));
            }
            if e.z.is_some_and(|z| !(0.0..=1.0).contains(&z)) {
                return bad(format!("edge {} -> {} has similarity outside [0, 1]", e.from, e.to));
            }
            check_ifs(&e.relation)
                .map_err(|err| Error::Corrupt(format!("edge {} -> {}: {err}", e.from, e.to)))?;
        }
        if self.edges.len() != m * (m - 1) + m * self.n_classes() {
            return bad(format!("{} edges, expected a complete input layer", self.edges.len()));
        }
        for e in self.edges.iter().filter(|e| e.to < m) {
            match self.edge(e.to, e.from) {
                Some(back) if back.weight == e.weight => {}
                _ => return bad(format!("input edge {} -> {} is not symmetric", e.from, e.to)),
            }
        }
        Ok(())
    }

    /// Canonical text form: pretty JSON with fields in declaration order and
    /// shortest round-trip floats.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("model serialization failed: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: IfcmModel =
            serde_json::from_str(text).map_err(|e| Error::Corrupt(format!("unreadable model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    /// Writes the model through a temporary file in the target directory
    /// and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        IfcmModel::from_json(&text)
    }
}

fn check_ifs(s: &Ifs) -> Result<()> {
    s.mu.validate()?;
    s.gamma.validate()?;
    if ifs_validate(s, VALIDATION_GRID) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("set {:?} violates mu + gamma <= 1", s.label)))
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
