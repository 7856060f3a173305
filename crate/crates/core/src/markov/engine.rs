//! One interface for `P_t f(x)` and `Q_t f(x)` curves, exact or Monte Carlo.

use crate::error::{Error, Result};
use crate::markov::distribution::SparseDistribution;
use crate::markov::family::StateFn;
use crate::markov::kernel::{CountableKernel, SamplingKernel};
use crate::markov::semigroup::{cesaro_mc_many, estimate_ptf_many, laws, MonteCarlo};
use crate::state::State;
use crate::stats::Estimate;

#[derive(Clone, Copy)]
pub enum Engine<'a> {
    /// Exact propagation; times must be integers.
    Exact(&'a dyn CountableKernel),
    MonteCarlo {
        kernel: &'a dyn SamplingKernel,
        mc: MonteCarlo,
    },
}

impl<'a> Engine<'a> {
    pub fn is_exact(&self) -> bool {
        matches!(self, Engine::Exact(_))
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            Engine::Exact(_) => "exact",
            Engine::MonteCarlo { .. } => "monte-carlo",
        }
    }

    /// Laws `P_t^*δ_x` at integer `times` (exact engine only).
    pub fn laws_at(&self, x: &State, times: &[f64]) -> Result<Vec<SparseDistribution>> {
        let Engine::Exact(k) = self else {
            return Err(Error::Unsupported("exact laws need a countable kernel".into()));
        };
        let steps = integer_times(times)?;
        let max = steps.iter().copied().max().unwrap_or(0);
        let all = laws(*k, &SparseDistribution::dirac(x.clone()), max)?;
        Ok(steps.iter().map(|&n| all[n].clone()).collect())
    }

    /// Exact Cesàro laws `Q_t(x, ·)` at integer `times ≥ 1`.
    pub fn cesaro_laws_at(&self, x: &State, times: &[f64]) -> Result<Vec<SparseDistribution>> {
        let Engine::Exact(k) = self else {
            return Err(Error::Unsupported("exact laws need a countable kernel".into()));
        };
        let steps = integer_times(times)?;
        if steps.contains(&0) {
            return Err(Error::ContractViolation("Cesàro horizon must be at least 1".into()));
        }
        let max = steps.iter().copied().max().unwrap_or(0);
        let all = laws(*k, &SparseDistribution::dirac(x.clone()), max)?;
        let mut out = Vec::with_capacity(steps.len());
        for &t in &steps {
            let c = 1.0 / t as f64;
            let parts: Vec<(f64, &SparseDistribution)> = all[1..=t].iter().map(|m| (c, m)).collect();
            let mut acc = std::collections::BTreeMap::new();
            for (w, m) in parts {
                for (s, p) in m.atoms() {
                    *acc.entry(s.clone()).or_insert(0.0) += w * p;
                }
            }
            out.push(SparseDistribution::from_accumulated(acc, all[t].pruned_mass()));
        }
        Ok(out)
    }

    /// `P_t f(x)` for each time.
    pub fn ptf_curve(&self, x: &State, times: &[f64], f: &StateFn) -> Result<Vec<Estimate>> {
        match self {
            Engine::Exact(_) => self
                .laws_at(x, times)?
                .iter()
                .map(|mu| mu.integrate(f).map(Estimate::exact))
                .collect(),
            Engine::MonteCarlo { kernel, mc } => estimate_ptf_many(*kernel, x, times, f, *mc),
        }
    }

    /// `Q_t f(x)` for each horizon.
    pub fn qtf_curve(&self, x: &State, times: &[f64], f: &StateFn) -> Result<Vec<Estimate>> {
        match self {
            Engine::Exact(_) => self
                .cesaro_laws_at(x, times)?
                .iter()
                .map(|mu| mu.integrate(f).map(Estimate::exact))
                .collect(),
            Engine::MonteCarlo { kernel, mc } => cesaro_mc_many(*kernel, x, times, f, *mc),
        }
    }
}

fn integer_times(times: &[f64]) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            if t >= 0.0 && t.fract() == 0.0 && t.is_finite() {
                Ok(t as usize)
            } else {
                Err(Error::ContractViolation(format!("exact mode needs integer times, got {t}")))
            }
        })
        .collect()
}
