use serde::{Deserialize, Serialize};

use super::MembershipFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticTerm {
    pub label: String,
    pub mf: MembershipFunction,
}

/// Uniform triangular partition of `[0, 1]` into named terms.
///
/// Apexes sit at `k / (levels - 1)`; each triangle's feet are its
/// neighbours' apexes, so memberships sum to one everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticPartition {
    pub terms: Vec<LinguisticTerm>,
}

impl LinguisticPartition {
    pub fn new(levels: usize) -> Result<Self> {
        let labels: &[&str] = match levels {
            3 => &["Low", "Medium", "High"],
            5 => &["Very Low", "Low", "Medium", "High", "Very High"],
            7 => &[
                "Extremely Low",
                "Very Low",
                "Low",
                "Medium",
                "High",
                "Very High",
                "Extremely High",
            ],
            other => return Err(Error::UnsupportedLevels(other)),
        };
        let step = 1.0 / (levels - 1) as f64;
        let terms = labels
            .iter()
            .enumerate()
            .map(|(k, label)| {
                let apex = k as f64 * step;
                let left = if k == 0 { 0.0 } else { apex - step };
                let right = if k + 1 == levels { 1.0 } else { apex + step };
                Ok(LinguisticTerm {
                    label: (*label).to_string(),
                    mf: MembershipFunction::triangular(left, apex, right)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LinguisticPartition { terms })
    }

    pub fn levels(&self) -> usize {
        self.terms.len()
    }

    /// Term with the highest membership at `x`; ties go to the higher term.
    pub fn term_for(&self, x: f64) -> &LinguisticTerm {
        let x = x.clamp(0.0, 1.0);
        let mut best = &self.terms[0];
        let mut best_degree = f64::NEG_INFINITY;
        for term in &self.terms {
            let degree = term.mf.eval(x);
            if degree >= best_degree - 1e-12 {
                best = term;
                best_degree = degree.max(best_degree);
            }
        }
        best
    }

    pub fn label_for(&self, x: f64) -> &str {
        &self.term_for(x).label
    }
}

impl Default for LinguisticPartition {
    fn default() -> Self {
        LinguisticPartition::new(5).expect("5-level partition is supported")
    }
}
