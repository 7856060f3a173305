use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::distribution::MASS_TOLERANCE;
use crate::state::State;

/// Exact one-step transition law over a countable space.
pub trait CountableKernel: Send + Sync {
    /// Finite row `P(state, ·)`.
    fn row(&self, state: &State) -> Result<Vec<(State, f64)>>;
}

/// How a sampling kernel advances time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeKind {
    /// One step per unit time; holding times are zero.
    Discrete,
    /// Exponential holding times with the given rate between jumps.
    JumpChain { rate: f64 },
}

/// Stochastic one-step sampler.
///
/// In jump-chain mode the returned holding time is the time spent in `state`
/// before the returned jump target is entered. A kernel with a deterministic
/// flow component stores states relative to time zero and maps them to the
/// actual state at absolute time `t` through [`SamplingKernel::flow`].
pub trait SamplingKernel: Send + Sync {
    fn time_kind(&self) -> TimeKind;

    fn sample_next(&self, state: &State, rng: &mut dyn RngCore) -> Result<(State, f64)>;

    /// State at absolute time `t` of a jump component stored at time zero.
    fn flow(&self, state: &State, _t: f64) -> State {
        state.clone()
    }

    /// Whether `flow` is anything other than the identity.
    fn has_flow(&self) -> bool {
        false
    }
}

pub type SharedCountable = Arc<dyn CountableKernel>;
pub type SharedSampling = Arc<dyn SamplingKernel>;

/// Checks a kernel row: finite nonnegative entries summing to one.
pub fn validate_row(state: &State, row: &[(State, f64)]) -> Result<()> {
    if row.is_empty() {
        return Err(Error::KernelInvalid {
            state: state.clone(),
            reason: "empty row".into(),
        });
    }
    let mut total = 0.0;
    for (target, p) in row {
        if !(p.is_finite() && *p >= 0.0) {
            return Err(Error::KernelInvalid {
                state: state.clone(),
                reason: format!("probability {p} to {target}"),
            });
        }
        total += p;
    }
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::KernelInvalid {
            state: state.clone(),
            reason: format!("row sums to {total}"),
        });
    }
    Ok(())
}

/// Draws from a finite row by inversion.
pub fn sample_row(row: &[(State, f64)], rng: &mut dyn RngCore) -> State {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (s, p) in row {
        acc += p;
        if u < acc {
            return s.clone();
        }
    }
    // u landed in the rounding gap above the last cumulative sum
    row.iter()
        .rev()
        .find(|(_, p)| *p > 0.0)
        .map(|(s, _)| s.clone())
        .unwrap_or_else(|| row[0].0.clone())
}

/// Draws an `Exp(rate)` holding time.
pub fn exponential_holding(rate: f64, rng: &mut dyn RngCore) -> f64 {
    let exp = Exp::new(rate).expect("jump rate must be positive");
    loop {
        let h: f64 = exp.sample(rng);
        if h > 0.0 {
            return h;
        }
    }
}

/// Discrete-time sampler driven by a countable kernel's rows.
pub struct RowSampler<K> {
    kernel: K,
}

impl<K: CountableKernel> RowSampler<K> {
    pub fn new(kernel: K) -> Self {
        RowSampler { kernel }
    }
}

impl<K: CountableKernel> SamplingKernel for RowSampler<K> {
    fn time_kind(&self) -> TimeKind {
        TimeKind::Discrete
    }

    fn sample_next(&self, state: &State, rng: &mut dyn RngCore) -> Result<(State, f64)> {
        let row = self.kernel.row(state)?;
        validate_row(state, &row)?;
        Ok((sample_row(&row, rng), 0.0))
    }
}

impl<K: CountableKernel + ?Sized> CountableKernel for Arc<K> {
    fn row(&self, state: &State) -> Result<Vec<(State, f64)>> {
        (**self).row(state)
    }
}

impl<K: SamplingKernel + ?Sized> SamplingKernel for Arc<K> {
    fn time_kind(&self) -> TimeKind {
        (**self).time_kind()
    }

    fn sample_next(&self, state: &State, rng: &mut dyn RngCore) -> Result<(State, f64)> {
        (**self).sample_next(state, rng)
    }

    fn flow(&self, state: &State, t: f64) -> State {
        (**self).flow(state, t)
    }

    fn has_flow(&self) -> bool {
        (**self).has_flow()
    }
}

/// `P(x, ·) = δ_x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityKernel;

impl CountableKernel for IdentityKernel {
    fn row(&self, state: &State) -> Result<Vec<(State, f64)>> {
        Ok(vec![(state.clone(), 1.0)])
    }
}

impl SamplingKernel for IdentityKernel {
    fn time_kind(&self) -> TimeKind {
        TimeKind::Discrete
    }

    fn sample_next(&self, state: &State, _rng: &mut dyn RngCore) -> Result<(State, f64)> {
        Ok((state.clone(), 0.0))
    }
}
