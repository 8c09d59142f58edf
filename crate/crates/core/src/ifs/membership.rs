use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A primitive membership function over the similarity domain `[0, 1]`.
///
/// Feet of triangles and trapezoids may lie outside `[0, 1]`; only the
/// evaluation domain is restricted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MembershipFunction {
    Triangular { a: f64, b: f64, c: f64 },
    Trapezoidal { a: f64, b: f64, c: f64, d: f64 },
    Gaussian { center: f64, sigma: f64 },
}

impl MembershipFunction {
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<Self> {
        let mf = MembershipFunction::Triangular { a, b, c };
        mf.validate()?;
        Ok(mf)
    }

    pub fn trapezoidal(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let mf = MembershipFunction::Trapezoidal { a, b, c, d };
        mf.validate()?;
        Ok(mf)
    }

    pub fn gaussian(center: f64, sigma: f64) -> Result<Self> {
        let mf = MembershipFunction::Gaussian { center, sigma };
        mf.validate()?;
        Ok(mf)
    }

    /// Checks the ordering constraints of the shape parameters.
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            MembershipFunction::Triangular { a, b, c } => {
                if !finite(&[a, b, c]) || a > b || b > c {
                    return Err(Error::InvalidShape(format!(
                        "triangular requires a <= b <= c, got ({a}, {b}, {c})"
                    )));
                }
            }
            MembershipFunction::Trapezoidal { a, b, c, d } => {
                if !finite(&[a, b, c, d]) || a > b || b > c || c > d {
                    return Err(Error::InvalidShape(format!(
                        "trapezoidal requires a <= b <= c <= d, got ({a}, {b}, {c}, {d})"
                    )));
                }
            }
            MembershipFunction::Gaussian { center, sigma } => {
                if !finite(&[center, sigma]) || sigma <= 0.0 {
                    return Err(Error::InvalidShape(format!(
                        "gaussian requires sigma > 0, got sigma = {sigma}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MembershipFunction::Triangular { a, b, c } => plateau(x, a, b, b, c),
            MembershipFunction::Trapezoidal { a, b, c, d } => plateau(x, a, b, c, d),
            MembershipFunction::Gaussian { center, sigma } => {
                let t = x - center;
                (-(t * t) / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    /// Point where the function first reaches its peak.
    pub fn apex(&self) -> f64 {
        match *self {
            MembershipFunction::Triangular { b, .. } => b,
            MembershipFunction::Trapezoidal { b, .. } => b,
            MembershipFunction::Gaussian { center, .. } => center,
        }
    }
}

// Zero outside [a, d], one on [b, c], linear ramps in between. Degenerate
// ramps (a == b or c == d) are vertical edges.
fn plateau(x: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    if x < a || x > d {
        0.0
    } else if x >= b && x <= c {
        1.0
    } else if x < b {
        ((x - a) / (b - a)).clamp(0.0, 1.0)
    } else {
        ((d - x) / (d - c)).clamp(0.0, 1.0)
    }
}

/// Membership curve built lazily from primitives: the composite produced
/// by fuzzy union (pointwise max), intersection (pointwise min) and
/// amplitude scaling. Evaluation never resamples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Mf(MembershipFunction),
    Scaled { factor: f64, curve: Box<Curve> },
    Max(Vec<Curve>),
    Min(Vec<Curve>),
}

impl Curve {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Curve::Mf(mf) => mf.eval(x),
            Curve::Scaled { factor, curve } => factor * curve.eval(x),
            Curve::Max(parts) => parts.iter().map(|c| c.eval(x)).fold(0.0, f64::max),
            Curve::Min(parts) => parts.iter().map(|c| c.eval(x)).fold(1.0, f64::min),
        }
    }

    pub fn scaled(self, factor: f64) -> Curve {
        Curve::Scaled {
            factor,
            curve: Box::new(self),
        }
    }

    /// Pointwise max, flattening nested maxima and dropping duplicates.
    pub fn max_of(curves: impl IntoIterator<Item = Curve>) -> Curve {
        let parts = flatten(curves, |c| match c {
            Curve::Max(inner) => Ok(inner),
            other => Err(other),
        });
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            Curve::Max(parts)
        }
    }

    /// Pointwise min, flattening nested minima and dropping duplicates.
    pub fn min_of(curves: impl IntoIterator<Item = Curve>) -> Curve {
        let parts = flatten(curves, |c| match c {
            Curve::Min(inner) => Ok(inner),
            other => Err(other),
        });
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            Curve::Min(parts)
        }
    }

    /// Validates every primitive and scaling factor in the tree.
    pub fn validate(&self) -> Result<()> {
        match self {
            Curve::Mf(mf) => mf.validate(),
            Curve::Scaled { factor, curve } => {
                if !(0.0..=1.0).contains(factor) {
                    return Err(Error::InvalidShape(format!(
                        "scaling factor {factor} outside [0, 1]"
                    )));
                }
                curve.validate()
            }
            Curve::Max(parts) | Curve::Min(parts) => {
                if parts.is_empty() {
                    return Err(Error::EmptyAggregation);
                }
                parts.iter().try_for_each(Curve::validate)
            }
        }
    }
}

impl From<MembershipFunction> for Curve {
    fn from(mf: MembershipFunction) -> Self {
        Curve::Mf(mf)
    }
}

fn flatten(
    curves: impl IntoIterator<Item = Curve>,
    split: impl Fn(Curve) -> std::result::Result<Vec<Curve>, Curve>,
) -> Vec<Curve> {
    let mut out: Vec<Curve> = Vec::new();
    let push = |c: Curve, out: &mut Vec<Curve>| {
        if !out.contains(&c) {
            out.push(c);
        }
    };
    for curve in curves {
        match split(curve) {
            Ok(inner) => inner.into_iter().for_each(|c| push(c, &mut out)),
            Err(single) => push(single, &mut out),
        }
    }
    out
}
