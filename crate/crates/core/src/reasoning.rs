//! Iterative reasoning over fuzzy cognitive maps.
//!
//! Two engines share one driver:
//!
//! * the conventional FCM update, where concept activations are reals in
//!   `[0, 1]` and weights are reals in `[-1, 1]`;
//! * the intuitionistic (iFCM-II) update, where both activations and weights
//!   are ⟨membership, non-membership⟩ pairs. Membership aggregates incoming
//!   influence with a probabilistic OR; non-membership is multiplied by the
//!   algebraic sum of each neighbour's non-membership and the arc's
//!   non-membership.
//!
//! Weight matrices are indexed `w[from][to]`; the diagonal is always the
//! no-relation value and never contributes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{IfValue, VALIDITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransferFunction {
    Sigmoid { steepness: f64 },
    Tanh,
    Identity,
}

impl TransferFunction {
    pub fn sigmoid(steepness: f64) -> Result<Self> {
        if steepness > 0.0 && steepness.is_finite() {
            Ok(TransferFunction::Sigmoid { steepness })
        } else {
            Err(Error::InvalidArgument(format!(
                "sigmoid steepness must be positive, got {steepness}"
            )))
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            TransferFunction::Sigmoid { steepness } => 1.0 / (1.0 + (-steepness * x).exp()),
            TransferFunction::Tanh => x.tanh(),
            TransferFunction::Identity => x,
        }
    }

    /// Image of `[0, 1]`.
    pub fn image(&self) -> (f64, f64) {
        (self.apply(0.0), self.apply(1.0))
    }

    /// Inverse on the image of `[0, 1]`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.image();
        if !(y >= lo - VALIDITY_TOL && y <= hi + VALIDITY_TOL) {
            return Err(Error::OutOfImage { value: y });
        }
        let y = y.clamp(lo, hi);
        let x = match *self {
            TransferFunction::Sigmoid { steepness } => -(1.0 / y - 1.0).ln() / steepness,
            TransferFunction::Tanh => y.atanh(),
            TransferFunction::Identity => y,
        };
        Ok(x.clamp(0.0, 1.0))
    }
}

/// Square matrix of arc weights with a fixed no-relation diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix<T> {
    n: usize,
    entries: Vec<T>,
}

pub trait NoRelation: Copy {
    const NONE: Self;
    fn admissible(&self) -> bool;
}

impl NoRelation for f64 {
    const NONE: f64 = 0.0;
    fn admissible(&self) -> bool {
        (-1.0..=1.0).contains(self)
    }
}

impl NoRelation for IfValue {
    const NONE: IfValue = IfValue::ZERO;
    fn admissible(&self) -> bool {
        self.is_valid()
    }
}

impl<T: NoRelation> WeightMatrix<T> {
    pub fn new(n: usize) -> Self {
        WeightMatrix {
            n,
            entries: vec![T::NONE; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Influence of concept `from` on concept `to`.
    pub fn get(&self, from: usize, to: usize) -> T {
        self.entries[from * self.n + to]
    }

    pub fn set(&mut self, from: usize, to: usize, w: T) -> Result<()> {
        if from >= self.n || to >= self.n {
            return Err(Error::DimensionMismatch(format!(
                "arc {from}->{to} outside a {n}-concept map",
                n = self.n
            )));
        }
        if from == to {
            return Err(Error::InvalidArgument("self-loops are not allowed".into()));
        }
        if !w.admissible() {
            return Err(Error::InvalidArgument(format!("inadmissible weight on arc {from}->{to}")));
        }
        self.entries[from * self.n + to] = w;
        Ok(())
    }
}

/// Weights tagged by reasoning mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Fcm(WeightMatrix<f64>),
    Ifcm(WeightMatrix<IfValue>),
}

impl Weights {
    pub fn len(&self) -> usize {
        match self {
            Weights::Fcm(w) => w.len(),
            Weights::Ifcm(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptState {
    Fcm(Vec<f64>),
    Ifcm(Vec<IfValue>),
}

impl ConceptState {
    pub fn len(&self) -> usize {
        match self {
            ConceptState::Fcm(v) => v.len(),
            ConceptState::Ifcm(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_ifcm(&self) -> Option<&[IfValue]> {
        match self {
            ConceptState::Ifcm(v) => Some(v),
            ConceptState::Fcm(_) => None,
        }
    }

    pub fn as_fcm(&self) -> Option<&[f64]> {
        match self {
            ConceptState::Fcm(v) => Some(v),
            ConceptState::Ifcm(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReasoningConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    pub transfer_mu: TransferFunction,
    pub transfer_gamma: TransferFunction,
    /// Number of leading concepts whose membership is held at its initial
    /// value between steps (evidence nodes). Non-membership of these
    /// concepts still evolves.
    #[serde(default)]
    pub anchored: usize,
}

impl Default for ReasoningConfig {
    fn default() -> Self {
        ReasoningConfig {
            epsilon: 1e-5,
            max_iters: 100,
            transfer_mu: TransferFunction::Tanh,
            transfer_gamma: TransferFunction::Tanh,
            anchored: 0,
        }
    }
}

impl ReasoningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    /// `states[0]` is the initial state; one entry per iteration after it.
    pub states: Vec<ConceptState>,
    pub converged: bool,
    pub iterations: usize,
    /// Number of concept updates where non-membership was scaled down to
    /// keep `mu + gamma <= 1`.
    pub renormalized: usize,
}

impl ReasoningTrace {
    pub fn final_state(&self) -> &ConceptState {
        self.states.last().expect("trace holds the initial state")
    }
}

/// Probabilistic-OR fold of the products `v_j * w_j`:
/// `s_1 = p_1`, `s_j = s_{j-1} + p_j - s_{j-1} p_j`.
pub fn sigma_accumulate(mu_values: &[f64], mu_weights: &[f64]) -> Result<f64> {
    if mu_values.len() != mu_weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values against {} weights",
            mu_values.len(),
            mu_weights.len()
        )));
    }
    Ok(mu_values
        .iter()
        .zip(mu_weights)
        .fold(0.0, |sigma, (v, w)| {
            let p = v * w;
            sigma + p - sigma * p
        }))
}

/// One conventional FCM update.
pub fn fcm_update(state: &[f64], w: &WeightMatrix<f64>, f: TransferFunction) -> Result<Vec<f64>> {
    check_dims(state.len(), w.len())?;
    Ok((0..state.len())
        .map(|i| {
            let influence: f64 = (0..state.len())
                .filter(|&j| j != i)
                .map(|j| state[j] * w.get(j, i))
                .sum();
            f.apply(state[i] + influence)
        })
        .collect())
}

pub fn fcm_step(state: &ConceptState, w: &Weights, f: TransferFunction) -> Result<ConceptState> {
    match (state, w) {
        (ConceptState::Fcm(a), Weights::Fcm(w)) => Ok(ConceptState::Fcm(fcm_update(a, w, f)?)),
        _ => Err(Error::ModeMismatch),
    }
}

/// One iFCM-II update. Returns the new state and the number of concepts
/// whose non-membership had to be scaled down to `1 - mu`.
pub fn ifcm_update(
    state: &[IfValue],
    w: &WeightMatrix<IfValue>,
    cfg: &ReasoningConfig,
) -> Result<(Vec<IfValue>, usize)> {
    check_dims(state.len(), w.len())?;
    let n = state.len();
    let mut renormalized = 0;
    let next = (0..n)
        .map(|i| {
            let own = state[i];
            let mut sigma = 0.0;
            let mut keep = 1.0;
            for (j, other) in state.iter().enumerate() {
                if j == i {
                    continue;
                }
                let arc = w.get(j, i);
                let p = other.mu * arc.mu;
                sigma = sigma + p - sigma * p;
                keep *= other.gamma + arc.gamma - other.gamma * arc.gamma;
            }
            let mu = cfg.transfer_mu.apply(own.mu + (1.0 - own.mu) * sigma);
            let gamma = cfg.transfer_gamma.apply(own.gamma * keep);
            let (v, renorm) = admissible_pair(mu, gamma);
            renormalized += usize::from(renorm);
            v
        })
        .collect();
    Ok((next, renormalized))
}

pub fn ifcm_step(state: &ConceptState, w: &Weights, cfg: &ReasoningConfig) -> Result<ConceptState> {
    match (state, w) {
        (ConceptState::Ifcm(v), Weights::Ifcm(w)) => {
            Ok(ConceptState::Ifcm(ifcm_update(v, w, cfg)?.0))
        }
        _ => Err(Error::ModeMismatch),
    }
}

// Clamp into [0, 1] and, when mu + gamma > 1, shrink gamma to 1 - mu.
fn admissible_pair(mu: f64, gamma: f64) -> (IfValue, bool) {
    let mu = mu.clamp(0.0, 1.0);
    let gamma = gamma.clamp(0.0, 1.0);
    if mu + gamma > 1.0 {
        (IfValue { mu, gamma: 1.0 - mu }, true)
    } else {
        (IfValue { mu, gamma }, false)
    }
}

fn check_dims(state: usize, weights: usize) -> Result<()> {
    if state == weights {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "state has {state} concepts, weight matrix has {weights}"
        )))
    }
}

/// Iterates the update matching the state's mode until the largest change
/// in every component drops below `epsilon`, or `max_iters` is reached.
pub fn run_reasoning(state0: &ConceptState, w: &Weights, cfg: &ReasoningConfig) -> Result<ReasoningTrace> {
    cfg.validate()?;
    if state0.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} concepts, weight matrix has {}",
            state0.len(),
            w.len()
        )));
    }
    let mut states = vec![state0.clone()];
    let mut renormalized = 0;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let current = states.last().unwrap();
        let (next, change) = match (current, w) {
            (ConceptState::Fcm(a), Weights::Fcm(wm)) => {
                let next = fcm_update(a, wm, cfg.transfer_mu)?;
                let change = a
                    .iter()
                    .zip(&next)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                (ConceptState::Fcm(next), change)
            }
            (ConceptState::Ifcm(v), Weights::Ifcm(wm)) => {
                let (mut next, renorm) = ifcm_update(v, wm, cfg)?;
                renormalized += renorm;
                if let ConceptState::Ifcm(initial) = state0 {
                    for (slot, held) in next.iter_mut().zip(initial).take(cfg.anchored) {
                        let (pair, renorm) = admissible_pair(held.mu, slot.gamma);
                        *slot = pair;
                        renormalized += usize::from(renorm);
                    }
                }
                let change = v
                    .iter()
                    .zip(&next)
                    .map(|(x, y)| (x.mu - y.mu).abs().max((x.gamma - y.gamma).abs()))
                    .fold(0.0, f64::max);
                (ConceptState::Ifcm(next), change)
            }
            _ => return Err(Error::ModeMismatch),
        };
        states.push(next);
        if change < cfg.epsilon {
            converged = true;
            break;
        }
    }
    Ok(ReasoningTrace {
        iterations: states.len() - 1,
        states,
        converged,
        renormalized,
    })
}

/// `1 - F_mu^-1(mu) - F_gamma^-1(gamma)` before clamping.
pub fn real_hesitancy_unclamped(v: IfValue, cfg: &ReasoningConfig) -> Result<f64> {
    Ok(1.0 - cfg.transfer_mu.inverse(v.mu)? - cfg.transfer_gamma.inverse(v.gamma)?)
}

/// Hesitancy measured after undoing the transfer functions, clamped to
/// `[0, 1]`.
pub fn real_hesitancy(v: IfValue, cfg: &ReasoningConfig) -> Result<f64> {
    Ok(real_hesitancy_unclamped(v, cfg)?.clamp(0.0, 1.0))
}
