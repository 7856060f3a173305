//! Path simulation.

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::kernel::{SamplingKernel, TimeKind};
use crate::state::State;
use crate::stats::stream_rng;

/// Default sub-step for time integrals along a flowing segment.
pub const DEFAULT_QUADRATURE_STEP: f64 = 0.05;

/// Streams one path forward in time.
///
/// Queries must come with nondecreasing times. The walker keeps only the
/// current segment, so arbitrarily long horizons cost no memory.
pub struct Walker<'k, R> {
    kernel: &'k dyn SamplingKernel,
    kind: TimeKind,
    rng: R,
    current: State,
    /// Start of the current segment.
    start: f64,
    /// Start of the next segment and the state entered there.
    next_time: f64,
    next_state: Option<State>,
    /// Upper end of the integrated window.
    integrated_to: f64,
    jumps: usize,
}

impl<'k, R: RngCore> Walker<'k, R> {
    pub fn new(kernel: &'k dyn SamplingKernel, x: State, rng: R) -> Self {
        Walker {
            kernel,
            kind: kernel.time_kind(),
            rng,
            current: x,
            start: 0.0,
            next_time: 0.0,
            next_state: None,
            integrated_to: 0.0,
            jumps: 0,
        }
    }

    fn draw_next(&mut self) -> Result<()> {
        let (state, hold) = self.kernel.sample_next(&self.current, &mut self.rng)?;
        let step = match self.kind {
            TimeKind::Discrete => 1.0,
            TimeKind::JumpChain { .. } => {
                if !(hold.is_finite() && hold > 0.0) {
                    return Err(Error::ContractViolation(format!(
                        "jump-chain kernel returned holding time {hold}"
                    )));
                }
                hold
            }
        };
        self.next_time = self.start + step;
        self.next_state = Some(state);
        Ok(())
    }

    /// Moves the current segment forward until it covers time `t`.
    fn advance_to(&mut self, t: f64) -> Result<()> {
        if self.next_state.is_none() {
            self.draw_next()?;
        }
        while self.next_time <= t {
            self.current = self.next_state.take().expect("next state drawn");
            self.start = self.next_time;
            self.jumps += 1;
            self.draw_next()?;
        }
        Ok(())
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&mut self, t: f64) -> Result<State> {
        self.advance_to(t)?;
        Ok(self.kernel.flow(&self.current, t))
    }

    /// Number of jumps (or steps) realized so far.
    pub fn jumps(&self) -> usize {
        self.jumps
    }

    /// Adds `∫ f(Φ_s) ds` over `[integrated_to, t]` and returns the increment.
    ///
    /// Piecewise-constant stretches contribute exactly; segments moved by the
    /// flow use the midpoint rule with sub-steps no longer than `step`.
    pub fn integrate_to(&mut self, t: f64, step: f64, f: &dyn Fn(&State) -> f64) -> Result<f64> {
        let mut total = 0.0;
        while self.integrated_to < t {
            self.advance_to(self.integrated_to)?;
            let a = self.integrated_to;
            let b = self.next_time.min(t);
            if b <= a {
                break;
            }
            if self.kernel.has_flow() {
                let pieces = ((b - a) / step).ceil().max(1.0) as usize;
                let h = (b - a) / pieces as f64;
                for m in 0..pieces {
                    let s = a + (m as f64 + 0.5) * h;
                    total += f(&self.kernel.flow(&self.current, s)) * h;
                }
            } else {
                total += f(&self.current) * (b - a);
            }
            self.integrated_to = b;
        }
        Ok(total)
    }
}

/// Right-continuous piecewise-constant path record.
///
/// `states[k]` holds on `[times[k], times[k+1])`; with a flow component the
/// stored states are relative to time zero, see [`Trajectory::state_at`].
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub horizon: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub state: State,
}

impl Trajectory {
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn state_at(&self, kernel: &dyn SamplingKernel, t: f64) -> State {
        kernel.flow(&self.states[self.index_at(t)], t)
    }

    /// Number of recorded jumps (steps in discrete time).
    pub fn jumps(&self) -> usize {
        self.times.len() - 1
    }

    /// Jump records with the flow applied, suitable for serialization.
    pub fn records(&self, kernel: &dyn SamplingKernel) -> Vec<TrajectoryRecord> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&time, s)| TrajectoryRecord {
                time,
                state: kernel.flow(s, time),
            })
            .collect()
    }

    /// Values `f(Φ_s)` at integer times `0..len` of a discrete path.
    pub fn values(&self, f: impl Fn(&State) -> f64) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }
}

/// Simulates one path on `[0, horizon]`.
pub fn simulate_path(
    kernel: &dyn SamplingKernel,
    x: &State,
    horizon: f64,
    rng: &mut dyn RngCore,
) -> Result<Trajectory> {
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut t = 0.0;
    let mut current = x.clone();
    loop {
        let (next, hold) = kernel.sample_next(&current, rng)?;
        let step = match kernel.time_kind() {
            TimeKind::Discrete => 1.0,
            TimeKind::JumpChain { .. } => hold,
        };
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::ContractViolation(format!("holding time {hold}")));
        }
        t += step;
        if t > horizon {
            break;
        }
        times.push(t);
        states.push(next.clone());
        current = next;
    }
    Ok(Trajectory {
        times,
        states,
        horizon,
    })
}

/// Simulates `n_paths` independent paths; path `i` uses stream `i` of `seed`.
pub fn simulate_paths(
    kernel: &dyn SamplingKernel,
    x: &State,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::ContractViolation(format!("horizon must be positive, got {horizon}")));
    }
    if n_paths == 0 {
        return Err(Error::ContractViolation("n_paths must be at least 1".into()));
    }
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            simulate_path(kernel, x, horizon, &mut rng)
        })
        .collect()
}
