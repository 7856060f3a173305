//! Exact propagation on countable chains and Monte Carlo estimates of
//! `P_t f(x)` and `Q_t f(x)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::distribution::SparseDistribution;
use crate::markov::family::StateFn;
use crate::markov::kernel::{validate_row, CountableKernel, SamplingKernel, TimeKind};
use crate::markov::path::{Walker, DEFAULT_QUADRATURE_STEP};
use crate::state::State;
use crate::stats::{blocked_replicas, stream_rng, Estimate, RunningStats};

/// One exact step `μ ↦ P^*μ`.
pub fn step(kernel: &dyn CountableKernel, mu: &SparseDistribution) -> Result<SparseDistribution> {
    let mut acc: BTreeMap<State, f64> = BTreeMap::new();
    for (s, w) in mu.atoms() {
        let row = kernel.row(s)?;
        validate_row(s, &row)?;
        for (target, p) in row {
            if p > 0.0 {
                *acc.entry(target).or_insert(0.0) += w * p;
            }
        }
    }
    Ok(SparseDistribution::from_accumulated(acc, mu.pruned_mass()))
}

/// Exact `n`-step law `(P^n)^*μ`.
pub fn propagate(kernel: &dyn CountableKernel, init: &SparseDistribution, n: usize) -> Result<SparseDistribution> {
    let mut mu = init.clone();
    for _ in 0..n {
        mu = step(kernel, &mu)?;
    }
    Ok(mu)
}

/// Laws at times `0..=n`.
pub fn laws(kernel: &dyn CountableKernel, init: &SparseDistribution, n: usize) -> Result<Vec<SparseDistribution>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(init.clone());
    for k in 0..n {
        let next = step(kernel, &out[k])?;
        out.push(next);
    }
    Ok(out)
}

/// Exact Cesàro average `(1/t) Σ_{s=1}^{t} P_s f(x)`.
pub fn cesaro_exact(kernel: &dyn CountableKernel, x: &State, t: usize, f: &StateFn) -> Result<f64> {
    if t == 0 {
        return Err(Error::ContractViolation("Cesàro horizon must be at least 1".into()));
    }
    let mut mu = SparseDistribution::dirac(x.clone());
    let mut total = 0.0;
    for _ in 0..t {
        mu = step(kernel, &mu)?;
        total += mu.integrate(f)?;
    }
    Ok(total / t as f64)
}

/// Exact Cesàro law `(1/t) Σ_{s=1}^{t} P_s^*δ_x`.
pub fn cesaro_law(kernel: &dyn CountableKernel, x: &State, t: usize) -> Result<SparseDistribution> {
    if t == 0 {
        return Err(Error::ContractViolation("Cesàro horizon must be at least 1".into()));
    }
    let all = laws(kernel, &SparseDistribution::dirac(x.clone()), t)?;
    let c = 1.0 / t as f64;
    let mut acc: BTreeMap<State, f64> = BTreeMap::new();
    for mu in &all[1..] {
        for (s, w) in mu.atoms() {
            *acc.entry(s.clone()).or_insert(0.0) += c * w;
        }
    }
    Ok(SparseDistribution::from_accumulated(acc, all[t].pruned_mass()))
}

/// Monte Carlo settings shared by the estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
    /// Turn excluded (non-finite) samples into an error.
    pub strict: bool,
}

impl MonteCarlo {
    pub fn new(samples: usize, seed: u64) -> Self {
        MonteCarlo {
            samples,
            seed,
            strict: false,
        }
    }

    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    fn check(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::ContractViolation(format!(
                "need at least 2 samples, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    fn finish(&self, blocks: Vec<RunningStats>) -> Result<Estimate> {
        let mut total = RunningStats::new();
        for b in &blocks {
            total.merge(b);
        }
        if self.strict && total.excluded() > 0 {
            return Err(Error::ExcludedSamples {
                excluded: total.excluded(),
                total: self.samples,
            });
        }
        Ok(total.estimate())
    }
}

/// Monte Carlo estimate of `P_t f(x)`: path `i` uses stream `i`.
pub fn estimate_ptf(kernel: &dyn SamplingKernel, x: &State, t: f64, f: &StateFn, mc: MonteCarlo) -> Result<Estimate> {
    estimate_ptf_many(kernel, x, &[t], f, mc).map(|mut v| v.remove(0))
}

/// `P_t f(x)` at several nondecreasing times from the same set of paths.
pub fn estimate_ptf_many(
    kernel: &dyn SamplingKernel,
    x: &State,
    times: &[f64],
    f: &StateFn,
    mc: MonteCarlo,
) -> Result<Vec<Estimate>> {
    mc.check()?;
    check_times(times)?;
    let blocks = blocked_replicas(
        mc.samples,
        || vec![RunningStats::new(); times.len()],
        |acc, i| {
            let mut w = Walker::new(kernel, x.clone(), stream_rng(mc.seed, i as u64));
            for (slot, &t) in acc.iter_mut().zip(times) {
                slot.push(f(&w.state_at(t)?));
            }
            Ok::<_, Error>(())
        },
    )?;
    transpose_finish(&mc, blocks, times.len())
}

/// Monte Carlo estimate of `Q_t f(x)` by path time averages.
///
/// Discrete time averages `f(Φ_1), …, f(Φ_t)`; continuous time integrates
/// `f(Φ_s)` over `[0, t]`.
pub fn cesaro_mc(kernel: &dyn SamplingKernel, x: &State, t: f64, f: &StateFn, mc: MonteCarlo) -> Result<Estimate> {
    cesaro_mc_many(kernel, x, &[t], f, mc).map(|mut v| v.remove(0))
}

/// `Q_t f(x)` at several nondecreasing horizons from the same paths.
pub fn cesaro_mc_many(
    kernel: &dyn SamplingKernel,
    x: &State,
    horizons: &[f64],
    f: &StateFn,
    mc: MonteCarlo,
) -> Result<Vec<Estimate>> {
    mc.check()?;
    check_times(horizons)?;
    let discrete = matches!(kernel.time_kind(), TimeKind::Discrete);
    if discrete && horizons.iter().any(|&t| t < 1.0 || t.fract() != 0.0) {
        return Err(Error::ContractViolation("discrete Cesàro horizons must be integers ≥ 1".into()));
    }
    let blocks = blocked_replicas(
        mc.samples,
        || vec![RunningStats::new(); horizons.len()],
        |acc, i| {
            let mut w = Walker::new(kernel, x.clone(), stream_rng(mc.seed, i as u64));
            if discrete {
                let mut sum = 0.0;
                let mut s = 0usize;
                for (slot, &t) in acc.iter_mut().zip(horizons) {
                    while (s as f64) < t {
                        s += 1;
                        sum += f(&w.state_at(s as f64)?);
                    }
                    slot.push(sum / t);
                }
            } else {
                let mut integral = 0.0;
                for (slot, &t) in acc.iter_mut().zip(horizons) {
                    integral += w.integrate_to(t, DEFAULT_QUADRATURE_STEP, f)?;
                    slot.push(integral / t);
                }
            }
            Ok::<_, Error>(())
        },
    )?;
    transpose_finish(&mc, blocks, horizons.len())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::ContractViolation("no evaluation times".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::ContractViolation("times must be finite, nonnegative and nondecreasing".into()));
    }
    Ok(())
}

fn transpose_finish(mc: &MonteCarlo, blocks: Vec<Vec<RunningStats>>, width: usize) -> Result<Vec<Estimate>> {
    (0..width)
        .map(|k| mc.finish(blocks.iter().map(|b| b[k]).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::kernel::{IdentityKernel, RowSampler};

    /// Two-state flip chain with holding probability `a`.
    struct Lazy(f64);

    impl CountableKernel for Lazy {
        fn row(&self, s: &State) -> Result<Vec<(State, f64)>> {
            let other = if *s == State::zero() { State::dyadic(1) } else { State::zero() };
            Ok(vec![(s.clone(), self.0), (other, 1.0 - self.0)])
        }
    }

    struct Broken;

    impl CountableKernel for Broken {
        fn row(&self, _: &State) -> Result<Vec<(State, f64)>> {
            Ok(vec![(State::zero(), 0.7)])
        }
    }

    #[test]
    fn zero_steps_returns_init() {
        let d = SparseDistribution::dirac(State::dyadic(3));
        assert_eq!(propagate(&Lazy(0.3), &d, 0).unwrap(), d);
    }

    #[test]
    fn broken_rows_name_the_state() {
        let d = SparseDistribution::dirac(State::dyadic(2));
        match propagate(&Broken, &d, 1) {
            Err(Error::KernelInvalid { state, .. }) => assert_eq!(state, State::dyadic(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lazy_flip_matches_closed_form() {
        // P^n(0, 0) = (1 + (2a - 1)^n) / 2
        let a = 0.3;
        let d = SparseDistribution::dirac(State::zero());
        for n in 0..20 {
            let mu = propagate(&Lazy(a), &d, n).unwrap();
            let expect = (1.0 + (2.0 * a - 1.0f64).powi(n as i32)) / 2.0;
            assert!((mu.weight(&State::zero()) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn cesaro_law_integrates_to_cesaro_value() {
        let f = |s: &State| if *s == State::zero() { 3.0 } else { -1.0 };
        let q = cesaro_exact(&Lazy(0.2), &State::zero(), 7, &f).unwrap();
        let law = cesaro_law(&Lazy(0.2), &State::zero(), 7).unwrap();
        assert!((law.integrate(f).unwrap() - q).abs() < 1e-14);
        assert!(cesaro_exact(&Lazy(0.2), &State::zero(), 0, &f).is_err());
    }

    #[test]
    fn constant_function_has_zero_stderr() {
        let k = RowSampler::new(Lazy(0.5));
        let est = estimate_ptf(&k, &State::zero(), 5.0, &|_| 2.5, MonteCarlo::new(1000, 9)).unwrap();
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn strict_mode_rejects_exclusions() {
        let f = |_: &State| f64::NAN;
        let loose = estimate_ptf(&IdentityKernel, &State::zero(), 1.0, &f, MonteCarlo::new(10, 1)).unwrap();
        assert_eq!(loose.excluded, 10);
        let strict = estimate_ptf(&IdentityKernel, &State::zero(), 1.0, &f, MonteCarlo::new(10, 1).strict());
        assert!(matches!(strict, Err(Error::ExcludedSamples { excluded: 10, .. })));
    }

    #[test]
    fn discrete_cesaro_mc_matches_exact_on_identity() {
        let f = |s: &State| s.real_line().unwrap();
        let est = cesaro_mc(&IdentityKernel, &State::dyadic(2), 5.0, &f, MonteCarlo::new(4, 1)).unwrap();
        assert_eq!(est.mean, 4.0);
        assert!(cesaro_mc(&IdentityKernel, &State::dyadic(2), 0.5, &f, MonteCarlo::new(4, 1)).is_err());
    }
}
