//! Random iterated function system on `ℝ⁺` driven by a rate-1 clock, run
//! alongside the unit-speed rotation `y ↦ y + t` of the circle.
//!
//! Maps: `w₁(x) = 0`, `w₂(x) = x`, `w₃(x) = x⁻¹ χ_{x≠0}`. The radial
//! component only ever visits `{x, 1/x}` before it is absorbed at `0`, so the
//! invariant law is `δ₀ × Leb(𝕋)` normalized.

use std::f64::consts::TAU;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::kernel::{exponential_holding, SamplingKernel, TimeKind};
use crate::markov::{MonteCarlo, StateFn};
use crate::state::{arc_distance, State, TorusPoint};
use crate::stats::{blocked_replicas, stream_rng, Estimate, RunningStats};

/// Absolute tolerance of the invariant-measure quadrature.
pub const INVARIANT_QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Midpoints used for `∫ |g_a − g_b| dθ` in [`CesaroSummary`].
pub const DEFAULT_ANGLE_GRID: usize = 4096;

/// `(p₁, p₂, p₃)(x)`.
pub fn ifs_probabilities(x: f64) -> [f64; 3] {
    let p = if x < 2.0 / 3.0 {
        [x / 2.0, 1.0 - x, x / 2.0]
    } else if x <= 1.5 {
        [1.0 / 3.0; 3]
    } else {
        let h = 1.0 / (2.0 * x);
        [h, 1.0 - 1.0 / x, h]
    };
    assert!(
        p.iter().all(|q| (0.0..=1.0).contains(q)),
        "jump probabilities {p:?} at x = {x} leave [0, 1]"
    );
    p
}

/// `(w₁, w₂, w₃)(x)`.
pub fn ifs_maps(x: f64) -> [f64; 3] {
    [0.0, x, if x != 0.0 { 1.0 / x } else { 0.0 }]
}

fn torus_point(state: &State) -> Result<TorusPoint> {
    match state {
        State::Torus(p) => Ok(*p),
        other => Err(Error::KernelInvalid {
            state: other.clone(),
            reason: "not a torus state".into(),
        }),
    }
}

/// The jump chain on `ℝ⁺ × 𝕋`. Stored states carry the angle at time zero;
/// [`SamplingKernel::flow`] rotates it to the requested time.
#[derive(Clone, Copy, Debug, Default)]
pub struct IfsTorusKernel;

impl IfsTorusKernel {
    /// Next radial position.
    pub fn jump_radial(x: f64, rng: &mut dyn RngCore) -> f64 {
        let p = ifs_probabilities(x);
        let w = ifs_maps(x);
        let u: f64 = rng.random();
        if u < p[0] {
            w[0]
        } else if u < p[0] + p[1] {
            w[1]
        } else {
            w[2]
        }
    }
}

impl SamplingKernel for IfsTorusKernel {
    fn time_kind(&self) -> TimeKind {
        TimeKind::JumpChain { rate: 1.0 }
    }

    fn sample_next(&self, state: &State, rng: &mut dyn RngCore) -> Result<(State, f64)> {
        let p = torus_point(state)?;
        let hold = exponential_holding(1.0, rng);
        let x = Self::jump_radial(p.x(), rng);
        Ok((State::torus(x, p.y())?, hold))
    }

    fn flow(&self, state: &State, t: f64) -> State {
        match state {
            State::Torus(p) => State::torus(p.x(), p.y() + t).expect("rotation keeps the state valid"),
            other => other.clone(),
        }
    }

    fn has_flow(&self) -> bool {
        true
    }
}

/// `V(x, y) = x`.
pub fn radial_v(s: &State) -> f64 {
    match s {
        State::Torus(p) => p.x(),
        _ => f64::NAN,
    }
}

/// `⟨f, δ₀ × Leb(𝕋)/2π⟩` by double-exponential quadrature.
pub fn invariant_integral(f: &StateFn) -> Result<f64> {
    let bad = std::cell::RefCell::new(None);
    let out = quadrature::integrate(
        |y| {
            let s = State::torus(0.0, y).expect("finite angle");
            let v = f(&s);
            if !v.is_finite() {
                bad.borrow_mut().get_or_insert((s, v));
            }
            v
        },
        0.0,
        TAU,
        INVARIANT_QUADRATURE_TOLERANCE,
    );
    if let Some((state, value)) = bad.into_inner() {
        return Err(Error::NonFinite { state, value });
    }
    Ok(out.integral / TAU)
}

/// Torus states within distance `r` of `x` under the product metric.
pub fn neighbors(x: &State, r: f64) -> Vec<State> {
    let Ok(p) = torus_point(x) else {
        return Vec::new();
    };
    let mut out = vec![
        State::torus(p.x() + r, p.y()).unwrap(),
        State::torus(p.x(), p.y() + r.min(std::f64::consts::PI)).unwrap(),
        State::torus(p.x(), p.y() - r.min(std::f64::consts::PI)).unwrap(),
    ];
    if p.x() >= r {
        out.push(State::torus(p.x() - r, p.y()).unwrap());
    }
    out.retain(|s| s != x);
    out
}

/// Per-path data behind the Cesàro law `Q_t((x₀, y₀), ·)`.
///
/// Before absorption the radial coordinate is nonzero, so that part of the
/// law is singular with respect to the invariant measure. After absorption
/// the path sits on `{0} × 𝕋` and spends time `#{k : τ ≤ u + 2πk ≤ t}` per
/// unit angle at `u = θ − y₀`, which gives the density `g(θ)` exactly given
/// the absorption times.
#[derive(Clone, Debug, Serialize)]
pub struct CesaroSummary {
    pub x0: f64,
    pub y0: f64,
    pub horizon: f64,
    pub paths: usize,
    /// Per path: `(1/t) ∫_0^{τ∧t} (1 + V(Φ_s)) ds`.
    singular: Vec<f64>,
    /// Per path: absorption time, `None` when later than the horizon.
    taus: Vec<Option<f64>>,
    /// `1 + V(0)`.
    atom_weight: f64,
}

/// Radial excursion until absorption or `t`: returns the absorption time and
/// `∫_0^{τ∧t} (1 + v(Φ_s)) ds`.
fn radial_excursion(x0: f64, t: f64, v: &dyn Fn(f64) -> f64, rng: &mut dyn RngCore) -> (Option<f64>, f64) {
    let mut x = x0;
    let mut clock = 0.0;
    let mut weighted = 0.0;
    while x != 0.0 {
        let hold = exponential_holding(1.0, rng);
        if clock + hold >= t {
            weighted += (t - clock) * (1.0 + v(x));
            return (None, weighted);
        }
        weighted += hold * (1.0 + v(x));
        clock += hold;
        x = IfsTorusKernel::jump_radial(x, rng);
    }
    (Some(clock), weighted)
}

/// Simulates the per-path data of `Q_t((x₀, y₀), ·)` for a radial weight `v`.
pub fn cesaro_summary(x0: f64, y0: f64, t: f64, v: &(dyn Fn(f64) -> f64 + Sync), mc: MonteCarlo) -> Result<CesaroSummary> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::ContractViolation(format!("horizon must be positive, got {t}")));
    }
    if mc.samples < 2 {
        return Err(Error::ContractViolation("need at least 2 samples".into()));
    }
    TorusPoint::new(x0, y0)?;
    let v0 = v(0.0);
    if !(v0.is_finite() && v0 >= 0.0) {
        return Err(Error::ContractViolation(format!("V(0) = {v0} must be finite and nonnegative")));
    }
    let blocks = blocked_replicas(
        mc.samples,
        Vec::new,
        |acc: &mut Vec<(Option<f64>, f64)>, i| {
            let mut rng = stream_rng(mc.seed, i as u64);
            acc.push(radial_excursion(x0, t, v, &mut rng));
            Ok::<_, Error>(())
        },
    )?;
    let (taus, singular): (Vec<_>, Vec<_>) = blocks.into_iter().flatten().map(|(tau, w)| (tau, w / t)).unzip();
    Ok(CesaroSummary {
        x0,
        y0: crate::state::normalize_angle(y0),
        horizon: t,
        paths: mc.samples,
        singular,
        taus,
        atom_weight: 1.0 + v0,
    })
}

/// Number of batches for the batch-means standard error.
const BATCHES: usize = 20;

impl CesaroSummary {
    /// Fraction of paths absorbed by the horizon.
    pub fn absorbed_fraction(&self) -> f64 {
        self.taus.iter().filter(|t| t.is_some()).count() as f64 / self.paths as f64
    }

    fn batch(&self, range: std::ops::Range<usize>) -> Density {
        let mut rho: Vec<f64> = Vec::new();
        let mut sum_q = 0.0;
        for tau in self.taus[range.clone()].iter().flatten() {
            let q = (tau / TAU).floor();
            sum_q += q;
            rho.push(tau - q * TAU);
        }
        rho.sort_by(f64::total_cmp);
        let singular = self.singular[range.clone()].iter().sum::<f64>() / range.len() as f64;
        Density {
            y0: self.y0,
            horizon: self.horizon,
            paths: range.len(),
            rho,
            sum_q,
            singular,
        }
    }

    fn batches(&self) -> Vec<Density> {
        let b = BATCHES.min(self.paths);
        (0..b)
            .map(|k| self.batch(k * self.paths / b..(k + 1) * self.paths / b))
            .collect()
    }

    /// Density of the absorbed part at angle `θ`.
    pub fn density(&self, theta: f64) -> f64 {
        self.batch(0..self.paths).at(theta)
    }

    /// `d_V(Q_t((x₀, y₀), ·), μ)` with `μ = δ₀ × Leb/2π`.
    pub fn d_v_to_invariant(&self, grid: usize) -> Result<Estimate> {
        self.combine(None, grid)
    }

    /// `d_V` between two Cesàro laws at the same horizon. One of them must
    /// start on `{0} × 𝕋`, where it has no singular part.
    pub fn d_v_between(&self, other: &CesaroSummary, grid: usize) -> Result<Estimate> {
        if self.x0 != 0.0 && other.x0 != 0.0 {
            return Err(Error::Unsupported(
                "structural d_V needs one of the two starts on {0} × 𝕋".into(),
            ));
        }
        if self.horizon != other.horizon {
            return Err(Error::ContractViolation("horizons differ".into()));
        }
        if self.atom_weight != other.atom_weight {
            return Err(Error::ContractViolation("summaries use different weights".into()));
        }
        self.combine(Some(other), grid)
    }

    fn combine(&self, other: Option<&CesaroSummary>, grid: usize) -> Result<Estimate> {
        if grid == 0 {
            return Err(Error::grid("angle_grid", "must be positive"));
        }
        let value = |a: &Density, b: Option<&Density>| {
            let h = TAU / grid as f64;
            let mut gap = 0.0;
            for k in 0..grid {
                let theta = (k as f64 + 0.5) * h;
                let gb = b.map_or(1.0 / TAU, |d| d.at(theta));
                gap += (a.at(theta) - gb).abs() * h;
            }
            a.singular + b.map_or(0.0, |d| d.singular) + self.atom_weight * gap
        };
        let full_a = self.batch(0..self.paths);
        let full_b = other.map(|o| o.batch(0..o.paths));
        let mean = value(&full_a, full_b.as_ref());
        let ba = self.batches();
        let bb = other.map(|o| o.batches());
        let mut stats = RunningStats::new();
        for (k, a) in ba.iter().enumerate() {
            stats.push(value(a, bb.as_ref().and_then(|v| v.get(k))));
        }
        let deterministic = self.x0 == 0.0 && other.is_none_or(|o| o.x0 == 0.0);
        Ok(Estimate {
            mean,
            stderr: if deterministic { 0.0 } else { stats.stderr() },
            samples: if deterministic { 0 } else { self.paths },
            excluded: 0,
        })
    }
}

struct Density {
    y0: f64,
    horizon: f64,
    paths: usize,
    /// Sorted `τ_i mod 2π` over absorbed paths.
    rho: Vec<f64>,
    /// `Σ floor(τ_i / 2π)` over absorbed paths.
    sum_q: f64,
    singular: f64,
}

impl Density {
    fn at(&self, theta: f64) -> f64 {
        let u = (theta - self.y0).rem_euclid(TAU);
        let t = self.horizon;
        let visits = if u <= t { ((t - u) / TAU).floor() + 1.0 } else { 0.0 };
        let absorbed = self.rho.len() as f64;
        // D_i(u) = #{k ≥ 0 : u + 2πk < τ_i} = q_i + [ρ_i > u]
        let late = (self.rho.len() - self.rho.partition_point(|&r| r <= u)) as f64;
        (absorbed * visits - self.sum_q - late) / (t * self.paths as f64)
    }
}

/// Arc-ball fraction `r/π` of the circle covered by `B(y, r)`, `r ≤ π`.
pub fn arc_fraction(r: f64) -> f64 {
    (r.min(std::f64::consts::PI)) / std::f64::consts::PI
}

/// Whether a torus state lies in the open product ball `B((0, 0), r)`.
pub fn in_origin_ball(s: &State, r: f64) -> bool {
    match s {
        State::Torus(p) => p.x() + arc_distance(p.y(), 0.0) < r,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{cesaro_mc, estimate_ptf};

    #[test]
    fn probability_table() {
        assert_eq!(ifs_probabilities(0.0), [0.0, 1.0, 0.0]);
        assert_eq!(ifs_probabilities(1.0), [1.0 / 3.0; 3]);
        assert_eq!(ifs_probabilities(2.0), [0.25, 0.5, 0.25]);
        for k in 0..1000 {
            let x = k as f64 * 0.01;
            let p = ifs_probabilities(x);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_is_absorbing_and_rotation_is_exact() {
        let k = IfsTorusKernel;
        let mut rng = stream_rng(3, 0);
        let mut s = State::torus(0.0, 1.0).unwrap();
        for _ in 0..100 {
            s = k.sample_next(&s, &mut rng).unwrap().0;
            assert_eq!(radial_v(&s), 0.0);
        }
        let moved = k.flow(&State::torus(0.0, 1.0).unwrap(), 10.0);
        match moved {
            State::Torus(p) => assert_eq!(p.y(), crate::state::normalize_angle(11.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn invariant_integrals() {
        assert!(invariant_integral(&|s: &State| s.coordinates()[1].cos()).unwrap().abs() < 1e-10);
        assert!((invariant_integral(&|_: &State| 2.5).unwrap() - 2.5).abs() < 1e-12);
        let sq = invariant_integral(&|s: &State| s.coordinates()[1].powi(2)).unwrap();
        assert!((sq - TAU * TAU / 3.0).abs() < 1e-8);
    }

    #[test]
    fn start_at_zero_density_is_exact() {
        // from (0, 0) the angle at time s is s, so g(θ) counts full turns
        let s = cesaro_summary(0.0, 0.0, TAU * 3.0, &|x| x, MonteCarlo::new(10, 1)).unwrap();
        assert!((s.density(1.0) - 1.0 / TAU).abs() < 1e-12);
        let d = s.d_v_to_invariant(1024).unwrap();
        assert!(d.mean.abs() < 1e-12 && d.is_exact());
        let half = cesaro_summary(0.0, 0.0, TAU * 1.5, &|x| x, MonteCarlo::new(10, 1)).unwrap();
        // two visits on half the circle, one on the other half, over 3π
        assert!((half.density(1.0) - 2.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert!((half.density(4.0) - 1.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn absorbed_density_integrates_to_absorbed_time_share() {
        let t = 50.0;
        let s = cesaro_summary(1.0, 0.3, t, &|x| x, MonteCarlo::new(4000, 9)).unwrap();
        let grid = 20_000;
        let h = TAU / grid as f64;
        let mass: f64 = (0..grid).map(|k| s.density((k as f64 + 0.5) * h) * h).sum();
        // the remaining share of time is spent before absorption at x = 1
        let singular: f64 = s.singular.iter().sum::<f64>() / s.paths as f64;
        assert!((mass + singular / 2.0 - 1.0).abs() < 2e-3, "{mass} {singular}");
    }

    #[test]
    fn structural_distance_shrinks_with_horizon() {
        let mc = MonteCarlo::new(4000, 5);
        let a = cesaro_summary(1.0, 0.0, 20.0, &|x| x, mc).unwrap().d_v_to_invariant(2048).unwrap();
        let b = cesaro_summary(1.0, 0.0, 400.0, &|x| x, mc).unwrap().d_v_to_invariant(2048).unwrap();
        assert!(b.mean < a.mean / 5.0, "{a:?} {b:?}");
    }

    #[test]
    fn cesaro_cosine_matches_rotation_average() {
        // started at 0 the radial part never moves: Q_t cos(y) = sin(t)/t
        let k = IfsTorusKernel;
        let f = |s: &State| s.coordinates()[1].cos();
        let q = cesaro_mc(&k, &State::torus(0.0, 0.0).unwrap(), 10.0, &f, MonteCarlo::new(4, 2)).unwrap();
        assert!((q.mean - 10f64.sin() / 10.0).abs() < 1e-3, "{q:?}");
        let p = estimate_ptf(&k, &State::torus(0.0, 0.5).unwrap(), 2.0, &f, MonteCarlo::new(4, 2)).unwrap();
        assert!((p.mean - 2.5f64.cos()).abs() < 1e-12);
    }
}
