//! Intuitionistic fuzzy set algebra.
//!
//! An intuitionistic fuzzy set pairs a membership curve `mu` with an
//! independent non-membership curve `gamma` under the constraint
//! `mu(x) + gamma(x) <= 1`. The remainder `1 - mu - gamma` is the hesitancy.
//! Validity of curve pairs is checked on a uniform grid over `[0, 1]`.

mod linguistic;
mod membership;

use serde::{Deserialize, Serialize};

pub use linguistic::{LinguisticPartition, LinguisticTerm};
pub use membership::{Curve, MembershipFunction};

use crate::error::{Error, Result};

/// Number of grid points used to validate curve pairs.
pub const VALIDATION_GRID: usize = 1001;
/// Slack allowed on `mu + gamma <= 1`.
pub const VALIDITY_TOL: f64 = 1e-12;

/// A ⟨membership, non-membership⟩ pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IfValue {
    pub mu: f64,
    pub gamma: f64,
}

impl IfValue {
    /// No relation / no evidence.
    pub const ZERO: IfValue = IfValue { mu: 0.0, gamma: 0.0 };

    pub fn new(mu: f64, gamma: f64) -> Result<Self> {
        let v = IfValue { mu, gamma };
        if v.is_valid() {
            Ok(v)
        } else {
            Err(Error::InvalidValue { mu, gamma })
        }
    }

    /// Clamps both degrees into `[0, 1]` and lowers `gamma` to `1 - mu`
    /// when their sum exceeds one.
    pub fn saturating(mu: f64, gamma: f64) -> Self {
        let mu = mu.clamp(0.0, 1.0);
        let gamma = gamma.clamp(0.0, 1.0).min(1.0 - mu);
        IfValue { mu, gamma }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.mu)
            && (0.0..=1.0).contains(&self.gamma)
            && self.mu + self.gamma <= 1.0 + VALIDITY_TOL
    }

    pub fn hesitancy(&self) -> f64 {
        1.0 - self.mu - self.gamma
    }
}

/// Paired membership and non-membership curves with a linguistic label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ifs {
    pub label: String,
    pub mu: Curve,
    pub gamma: Curve,
}

impl Ifs {
    pub fn new(label: impl Into<String>, mu: impl Into<Curve>, gamma: impl Into<Curve>) -> Self {
        Ifs {
            label: label.into(),
            mu: mu.into(),
            gamma: gamma.into(),
        }
    }

    /// Evaluates both curves at `x`.
    ///
    /// The pair is returned as-is; callers that need an [`IfValue`] should
    /// only use sets that passed [`ifs_validate`].
    pub fn eval(&self, x: f64) -> IfValue {
        IfValue {
            mu: self.mu.eval(x),
            gamma: self.gamma.eval(x),
        }
    }

    /// The same set with membership and non-membership exchanged.
    pub fn swapped(&self) -> Ifs {
        Ifs {
            label: format!("not {}", self.label),
            mu: self.gamma.clone(),
            gamma: self.mu.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Ifs {
        Ifs {
            label: self.label.clone(),
            mu: self.mu.clone().scaled(factor),
            gamma: self.gamma.clone().scaled(factor),
        }
    }
}

/// Uniform grid of `n` points spanning `[0, 1]`.
pub fn grid(n: usize) -> impl Iterator<Item = f64> {
    let last = (n.max(2) - 1) as f64;
    (0..n).map(move |k| k as f64 / last)
}

/// True iff `mu(x) + gamma(x) <= 1` on a uniform grid of `grid_n` points.
pub fn ifs_validate(s: &Ifs, grid_n: usize) -> bool {
    first_violation(s, grid_n).is_none()
}

fn first_violation(s: &Ifs, grid_n: usize) -> Option<f64> {
    grid(grid_n.max(2)).find(|&x| {
        let mu = s.mu.eval(x);
        let gamma = s.gamma.eval(x);
        !(mu + gamma <= 1.0 + VALIDITY_TOL)
    })
}

fn checked(s: Ifs) -> Result<Ifs> {
    match first_violation(&s, VALIDATION_GRID) {
        Some(x) => Err(Error::InvalidResult { x }),
        None => Ok(s),
    }
}

/// Intuitionistic union: pointwise max of memberships, pointwise min of
/// non-memberships.
pub fn ifs_union(sets: &[Ifs]) -> Result<Ifs> {
    match sets {
        [] => Err(Error::EmptyAggregation),
        [single] => Ok(single.clone()),
        _ => {
            let mut labels: Vec<&str> = Vec::new();
            for s in sets {
                if !labels.contains(&s.label.as_str()) {
                    labels.push(&s.label);
                }
            }
            checked(Ifs {
                label: labels.join(" or "),
                mu: Curve::max_of(sets.iter().map(|s| s.mu.clone())),
                gamma: Curve::min_of(sets.iter().map(|s| s.gamma.clone())),
            })
        }
    }
}

/// Intuitionistic intersection: pointwise min of memberships, pointwise
/// max of non-memberships.
pub fn ifs_intersection(s1: &Ifs, s2: &Ifs) -> Result<Ifs> {
    if s1 == s2 {
        return Ok(s1.clone());
    }
    checked(Ifs {
        label: format!("({}) and ({})", s1.label, s2.label),
        mu: Curve::min_of([s1.mu.clone(), s2.mu.clone()]),
        gamma: Curve::max_of([s1.gamma.clone(), s2.gamma.clone()]),
    })
}

/// Intuitionistic center of area over sample points.
///
/// Each sample `z` is weighted by `mu(z) - gamma(z)`; only samples where
/// membership exceeds non-membership contribute.
pub fn icoa(s: &Ifs, samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("icoa needs at least one sample".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &z in samples {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::InvalidArgument(format!(
                "similarity sample {z} outside [0, 1]"
            )));
        }
        let weight = s.mu.eval(z) - s.gamma.eval(z);
        if weight > 0.0 {
            num += weight * z;
            den += weight;
            lo = lo.min(z);
            hi = hi.max(z);
        }
    }
    if den > 0.0 {
        // rounding can push the weighted mean just past the retained samples
        Ok((num / den).clamp(lo, hi))
    } else {
        Err(Error::Indeterminate)
    }
}
