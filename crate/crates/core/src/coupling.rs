//! Independent product coupling, hitting times of `B̄(z,r) × B̄(z,r)` and the
//! blockwise survival bound `(1 − γ/2)^n`.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::diagnostics::report::Verdict;
use crate::error::{Error, Result};
use crate::markov::kernel::{exponential_holding, validate_row, CountableKernel, SamplingKernel, TimeKind};
use crate::markov::{Engine, MonteCarlo, Walker};
use crate::metric::Metric;
use crate::state::State;
use crate::stats::{blocked_replicas, stream_rng, Estimate};

/// `R((x, y), A × B) = P(x, A) P(y, B)` acting on pair states.
#[derive(Clone, Debug)]
pub struct CoupledKernel<K> {
    base: K,
}

pub fn product_kernel<K>(base: K) -> CoupledKernel<K> {
    CoupledKernel { base }
}

impl<K> CoupledKernel<K> {
    pub fn base(&self) -> &K {
        &self.base
    }
}

fn split(state: &State) -> Result<(&State, &State)> {
    state.as_pair().ok_or_else(|| Error::KernelInvalid {
        state: state.clone(),
        reason: "coupled kernel needs a pair state".into(),
    })
}

impl<K: CountableKernel> CountableKernel for CoupledKernel<K> {
    fn row(&self, state: &State) -> Result<Vec<(State, f64)>> {
        let (a, b) = split(state)?;
        let ra = self.base.row(a)?;
        validate_row(a, &ra)?;
        let rb = self.base.row(b)?;
        validate_row(b, &rb)?;
        let mut acc: BTreeMap<State, f64> = BTreeMap::new();
        for (x, p) in &ra {
            for (y, q) in &rb {
                *acc.entry(State::pair(x.clone(), y.clone())).or_insert(0.0) += p * q;
            }
        }
        Ok(acc.into_iter().collect())
    }
}

impl<K: SamplingKernel> SamplingKernel for CoupledKernel<K> {
    /// Jump chains run on the superposition of the two clocks, which has
    /// twice the base rate; each ring moves one component chosen fairly.
    fn time_kind(&self) -> TimeKind {
        match self.base.time_kind() {
            TimeKind::Discrete => TimeKind::Discrete,
            TimeKind::JumpChain { rate } => TimeKind::JumpChain { rate: 2.0 * rate },
        }
    }

    fn sample_next(&self, state: &State, rng: &mut dyn RngCore) -> Result<(State, f64)> {
        let (a, b) = split(state)?;
        match self.base.time_kind() {
            TimeKind::Discrete => {
                let (x, _) = self.base.sample_next(a, rng)?;
                let (y, _) = self.base.sample_next(b, rng)?;
                Ok((State::pair(x, y), 0.0))
            }
            TimeKind::JumpChain { rate } => {
                let hold = exponential_holding(2.0 * rate, rng);
                if rng.random::<bool>() {
                    let (x, _) = self.base.sample_next(a, rng)?;
                    Ok((State::pair(x, b.clone()), hold))
                } else {
                    let (y, _) = self.base.sample_next(b, rng)?;
                    Ok((State::pair(a.clone(), y), hold))
                }
            }
        }
    }

    fn flow(&self, state: &State, t: f64) -> State {
        match state.as_pair() {
            Some((a, b)) => State::pair(self.base.flow(a, t), self.base.flow(b, t)),
            None => state.clone(),
        }
    }

    fn has_flow(&self) -> bool {
        self.base.has_flow()
    }
}

/// Target set `B̄(z, r) × B̄(z, r)`.
pub struct PairBall<'m> {
    pub center: State,
    pub radius: f64,
    pub metric: &'m dyn Metric,
}

impl PairBall<'_> {
    pub fn contains(&self, pair: &State) -> bool {
        match pair.as_pair() {
            Some((a, b)) => {
                self.metric.distance(a, &self.center) <= self.radius
                    && self.metric.distance(b, &self.center) <= self.radius
            }
            None => false,
        }
    }
}

/// Outcome of one hitting-time simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingRecord {
    pub start: State,
    pub center: State,
    pub radius: f64,
    /// `None` when the pair had not entered the target by `horizon`.
    pub tau: Option<f64>,
    pub horizon: f64,
    /// Jumps (or steps) simulated.
    pub path_length: usize,
}

impl HittingRecord {
    pub fn censored(&self) -> bool {
        self.tau.is_none()
    }
}

/// Writes records as JSON lines.
pub fn to_json_lines(records: &[HittingRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Time grid for checking membership along a flowing path.
pub const DEFAULT_FLOW_RESOLUTION: f64 = 0.01;

/// First entry time into the target, or censoring at `horizon`.
///
/// Discrete chains are checked at every step. Jump chains without a flow are
/// checked at their jump times, which is exact; with a flow the check runs on
/// a grid of spacing `resolution`.
pub fn sample_hitting_time(
    ck: &dyn SamplingKernel,
    start: &State,
    target: &PairBall<'_>,
    horizon: f64,
    resolution: f64,
    rng: &mut dyn RngCore,
) -> Result<HittingRecord> {
    if !(target.radius > 0.0) {
        return Err(Error::ContractViolation(format!("radius must be positive, got {}", target.radius)));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::ContractViolation(format!("horizon must be finite, got {horizon}")));
    }
    split(start)?;
    let record = |tau, path_length| HittingRecord {
        start: start.clone(),
        center: target.center.clone(),
        radius: target.radius,
        tau,
        horizon,
        path_length,
    };
    if ck.has_flow() {
        let mut walker = Walker::new(ck, start.clone(), rng);
        let steps = (horizon / resolution).floor() as usize;
        for k in 0..=steps {
            let t = k as f64 * resolution;
            if target.contains(&walker.state_at(t)?) {
                return Ok(record(Some(t), walker.jumps()));
            }
        }
        return Ok(record(None, walker.jumps()));
    }
    let discrete = matches!(ck.time_kind(), TimeKind::Discrete);
    let mut t = 0.0;
    let mut current = start.clone();
    let mut jumps = 0usize;
    loop {
        if target.contains(&current) {
            return Ok(record(Some(t), jumps));
        }
        let (next, hold) = ck.sample_next(&current, rng)?;
        t += if discrete { 1.0 } else { hold };
        if t > horizon {
            return Ok(record(None, jumps));
        }
        jumps += 1;
        current = next;
    }
}

/// Exact survival `P(τ > s)` for `s = 0..=n` on a countable coupled chain.
pub fn exact_survival(ck: &dyn CountableKernel, start: &State, target: &PairBall<'_>, n: usize) -> Result<Vec<f64>> {
    let mut alive: BTreeMap<State, f64> = BTreeMap::new();
    if !target.contains(start) {
        alive.insert(start.clone(), 1.0);
    }
    let mut out = vec![alive.values().sum::<f64>()];
    for _ in 0..n {
        let mut next: BTreeMap<State, f64> = BTreeMap::new();
        for (s, w) in &alive {
            let row = ck.row(s)?;
            validate_row(s, &row)?;
            for (y, p) in row {
                if p > 0.0 && !target.contains(&y) {
                    *next.entry(y).or_insert(0.0) += w * p;
                }
            }
        }
        alive = next;
        out.push(alive.values().sum());
    }
    Ok(out)
}

/// Plug-in estimate of `γ_z(r) = (inf_x liminf_t P_t(x, B(z, r)) / 2)²`.
#[derive(Clone, Debug, Serialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    /// Minimum over probes of the tail minimum.
    pub lower_bound: Estimate,
    pub per_probe: Vec<(State, Estimate)>,
    pub tail_times: Vec<f64>,
    /// Set when the estimate is 0: the lower bound may simply be unresolved.
    pub inconclusive: bool,
}

/// Indices of the upper `tail_fraction` of a grid.
pub fn tail_indices(len: usize, tail_fraction: f64) -> std::ops::Range<usize> {
    let keep = ((len as f64) * tail_fraction).ceil().max(1.0) as usize;
    len - keep.min(len)..len
}

/// `γ` from the tail minimum over the upper half of `t_grid` of
/// `P_t(x, B(z, r))` (open ball), minimized over the probes.
pub fn estimate_gamma(
    engine: &Engine<'_>,
    metric: &dyn Metric,
    z: &State,
    r: f64,
    probes: &[State],
    t_grid: &[f64],
) -> Result<GammaEstimate> {
    if probes.is_empty() {
        return Err(Error::ContractViolation("probe set is empty".into()));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::grid("t_grid", "must be nonempty and strictly increasing"));
    }
    let tail = tail_indices(t_grid.len(), 0.5);
    let tail_times = t_grid[tail.clone()].to_vec();
    let z = z.clone();
    let indicator = move |s: &State| if metric.distance(s, &z) < r { 1.0 } else { 0.0 };
    let mut per_probe = Vec::with_capacity(probes.len());
    for x in probes {
        let curve = engine.ptf_curve(x, &tail_times, &indicator)?;
        let min = curve
            .into_iter()
            .min_by(|a, b| a.mean.total_cmp(&b.mean))
            .expect("tail is nonempty");
        per_probe.push((x.clone(), min));
    }
    let lower_bound = per_probe
        .iter()
        .map(|p| p.1)
        .min_by(|a, b| a.mean.total_cmp(&b.mean))
        .expect("probes nonempty");
    let gamma = (lower_bound.mean / 2.0).powi(2);
    Ok(GammaEstimate {
        gamma,
        lower_bound,
        per_probe,
        tail_times,
        inconclusive: gamma == 0.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockRow {
    pub block: usize,
    /// Length chosen for this block.
    pub block_length: f64,
    /// Cumulative horizon at the end of the block.
    pub horizon: f64,
    pub survival: Estimate,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailBoundReport {
    pub gamma: f64,
    pub blocks: Vec<BlockRow>,
    pub verdict: Verdict,
    /// Survival `P(τ > t)` at the requested fixed times.
    pub survival_curve: Vec<(f64, Estimate)>,
    pub censored: usize,
    pub samples: usize,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// Options for [`verify_tail_bound`].
#[derive(Clone, Debug)]
pub struct TailBoundOptions {
    pub n_blocks: usize,
    pub mc: MonteCarlo,
    /// Longest block the doubling search may try.
    pub max_block_length: f64,
    /// Extra fixed times at which survival is reported.
    pub survival_times: Vec<f64>,
    pub resolution: f64,
}

/// Compares the empirical survival of the coupled pair with `(1 − γ/2)^n`.
///
/// Block `n` has the smallest power-of-two length (in time units) for which at
/// least a fraction `γ/2` of the paths still outside the target at the start
/// of the block enter it during the block; surviving paths simply continue,
/// which realizes the restart from the conditioned law empirically.
pub fn verify_tail_bound(
    ck: &dyn SamplingKernel,
    start: &State,
    target: &PairBall<'_>,
    gamma: f64,
    options: &TailBoundOptions,
) -> Result<TailBoundReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::ContractViolation(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if options.n_blocks == 0 {
        return Err(Error::ContractViolation("need at least one block".into()));
    }
    let n = options.mc.samples;
    if n < 2 {
        return Err(Error::ContractViolation("need at least 2 samples".into()));
    }
    let total_horizon = options.n_blocks as f64 * options.max_block_length;
    let seed = options.mc.seed;
    let taus: Vec<Option<f64>> = blocked_replicas(
        n,
        Vec::new,
        |acc: &mut Vec<Option<f64>>, i| {
            let mut rng = stream_rng(seed, i as u64);
            let rec = sample_hitting_time(ck, start, target, total_horizon, options.resolution, &mut rng)?;
            acc.push(rec.tau);
            Ok::<_, Error>(())
        },
    )?
    .into_iter()
    .flatten()
    .collect();

    let survival_at = |h: f64| -> Estimate {
        let alive = taus.iter().filter(|t| t.is_none_or(|t| t > h)).count();
        let p = alive as f64 / n as f64;
        Estimate {
            mean: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            samples: n,
            excluded: 0,
        }
    };

    let mut blocks = Vec::with_capacity(options.n_blocks);
    let mut notes = Vec::new();
    let mut horizon = 0.0;
    let mut verdict = Verdict::Pass;
    let unit = if matches!(ck.time_kind(), TimeKind::Discrete) { 1.0 } else { options.resolution.max(f64::MIN_POSITIVE) };
    for b in 1..=options.n_blocks {
        let alive: Vec<f64> = taus
            .iter()
            .map(|t| t.unwrap_or(f64::INFINITY))
            .filter(|&t| t > horizon)
            .collect();
        let mut length = unit;
        if !alive.is_empty() {
            loop {
                let entered = alive.iter().filter(|&&t| t <= horizon + length).count();
                if entered as f64 >= gamma / 2.0 * alive.len() as f64 {
                    break;
                }
                if length * 2.0 > options.max_block_length {
                    notes.push(format!("block {b}: no length up to {} reaches entry fraction γ/2", options.max_block_length));
                    verdict = Verdict::Inconclusive;
                    break;
                }
                length *= 2.0;
            }
        }
        if verdict == Verdict::Inconclusive {
            break;
        }
        horizon += length;
        let survival = survival_at(horizon);
        let bound = (1.0 - gamma / 2.0).powi(b as i32);
        let pass = survival.mean <= bound + 3.0 * survival.stderr;
        if !pass {
            verdict = Verdict::Fail;
        }
        blocks.push(BlockRow {
            block: b,
            block_length: length,
            horizon,
            survival,
            bound,
            pass,
        });
    }
    let censored = taus.iter().filter(|t| t.is_none()).count();
    Ok(TailBoundReport {
        gamma,
        blocks,
        verdict,
        survival_curve: options.survival_times.iter().map(|&t| (t, survival_at(t))).collect(),
        censored,
        samples: n,
        seed,
        notes,
    })
}
