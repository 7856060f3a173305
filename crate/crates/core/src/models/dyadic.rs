//! Absorbing doubling chain on `{0} ∪ {2^i : i ≥ 1}`: from `2^i` jump to `0`
//! or to `2^{i+1}` with probability 1/2 each; `0` is absorbing.

use crate::error::{Error, Result};
use crate::markov::{CountableKernel, SparseDistribution};
use crate::state::{exp2_exact, Dyadic, State};

#[derive(Clone, Copy, Debug, Default)]
pub struct DyadicKernel;

impl CountableKernel for DyadicKernel {
    fn row(&self, state: &State) -> Result<Vec<(State, f64)>> {
        match state {
            State::Dyadic(Dyadic::Zero) => Ok(vec![(State::zero(), 1.0)]),
            State::Dyadic(Dyadic::Pow(i)) => {
                let up = i.checked_add(1).ok_or_else(|| Error::KernelInvalid {
                    state: state.clone(),
                    reason: "exponent overflow".into(),
                })?;
                Ok(vec![(State::zero(), 0.5), (State::dyadic(up), 0.5)])
            }
            other => Err(Error::KernelInvalid {
                state: other.clone(),
                reason: "not a dyadic state".into(),
            }),
        }
    }
}

/// `V(x) = x`.
pub fn identity_v(s: &State) -> f64 {
    s.real_line().unwrap_or(f64::NAN)
}

/// Closed-form `n`-step law from `2^i`: `{0: 1 − 2^{−n}, 2^{i+n}: 2^{−n}}`.
pub fn n_step_law(i: u32, n: u32) -> SparseDistribution {
    if n == 0 {
        return SparseDistribution::dirac(State::dyadic(i));
    }
    let tail = exp2_exact(-(n as i64));
    SparseDistribution::new(vec![(State::zero(), 1.0 - tail), (State::dyadic(i + n), tail)])
        .expect("closed-form law is a probability measure")
}

/// Closed-form `⟨V^α, P_n^*δ_{2^i}⟩ = 2^{αi} 2^{−(1−α)n}`.
pub fn moment(alpha: f64, i: u32, n: u32) -> f64 {
    (alpha * i as f64 - (1.0 - alpha) * n as f64).exp2()
}

/// Dyadic states within distance `r` of `x`, excluding `x`.
pub fn neighbors(x: &State, r: f64, max_exponent: u32) -> Vec<State> {
    let Some(v) = x.real_line() else {
        return Vec::new();
    };
    std::iter::once(State::zero())
        .chain((1..=max_exponent).map(State::dyadic))
        .filter(|s| s != x && (s.real_line().unwrap() - v).abs() <= r)
        .collect()
}
