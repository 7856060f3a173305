//! Acceptance run: one line per criterion, expected values from oracles
//! written here rather than from the library.
//!
//! Criterion 9 is a known failure (see README); the run exits non-zero only
//! if some other criterion fails or criterion 9 fails for a different reason.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ergokit::coupling::{exact_survival, product_kernel, verify_tail_bound, PairBall, TailBoundOptions, DEFAULT_FLOW_RESOLUTION};
use ergokit::diagnostics::{
    check_uniform_integrability, default_k_grid, lyapunov_bound, stability_report, tail_curve_exact, tail_expectation,
    Equivalence, IfsStructural, LimitGridSpec, LyapunovSpec, StabilityConfig, Verdict,
};
use ergokit::distances::{tv_distance, wasserstein_exact, weighted_tv};
use ergokit::markov::{cesaro_mc, laws, propagate, Engine, MonteCarlo, RowSampler, SparseDistribution};
use ergokit::metric::{LatticeIndexMetric, Metric, RealLineMetric, TorusProductMetric};
use ergokit::models::{self, divergence_certificate, dyadic_chain, ifs, ifs_torus, parse_family, DyadicKernel, LatticeKernel};
use ergokit::State;

const SEED: u64 = 20_240_601;

/// Criterion that is expected to fail, with the reason.
const KNOWN_FAILURE: (usize, &str) = (
    9,
    "Q_T carries an O(1/T) bias that is deterministic for cos(y), so no Monte Carlo margin can cover it",
);

struct Outcome {
    pass: bool,
    detail: String,
    /// For a known failure: whether it failed in the documented way.
    explained: bool,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
            explained: false,
        }
    }
}

fn pow2(e: f64) -> f64 {
    e.exp2()
}

fn dyadic_value(s: &State) -> f64 {
    s.real_line().expect("dyadic state")
}

// 1
fn dyadic_laws() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 1..=10u32 {
        for n in 1..=30u32 {
            let law = propagate(&DyadicKernel, &SparseDistribution::dirac(State::dyadic(i)), n as usize).unwrap();
            let expected = [(State::zero(), 1.0 - pow2(-f64::from(n))), (State::dyadic(i + n), pow2(-f64::from(n)))];
            let states: BTreeSet<State> = law.support().cloned().chain(expected.iter().map(|e| e.0.clone())).collect();
            for s in states {
                let want = expected.iter().find(|e| e.0 == s).map_or(0.0, |e| e.1);
                worst = worst.max((law.weight(&s) - want).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max atom error {worst:.3e} over i <= 10, n <= 30 in {:.3} s", elapsed.as_secs_f64()),
    )
}

// 2
fn martingale_moment() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 1..=10u32 {
        let mut mu = SparseDistribution::dirac(State::dyadic(i));
        for _ in 1..=30 {
            mu = propagate(&DyadicKernel, &mu, 1).unwrap();
            let m = mu.integrate(dyadic_value).unwrap();
            worst = worst.max((m - pow2(f64::from(i))).abs());
        }
    }
    Outcome::new(worst <= 1e-12, format!("max |<V, P_n δ_(2^i)> - 2^i| = {worst:.3e}"))
}

// 3
fn alpha_moments() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75, 1.0] {
        for i in 1..=10u32 {
            let all = laws(&DyadicKernel, &SparseDistribution::dirac(State::dyadic(i)), 30).unwrap();
            for (n, mu) in all.iter().enumerate() {
                let got = mu.integrate(|s| dyadic_value(s).powf(alpha)).unwrap();
                let want = pow2(alpha * f64::from(i) - (1.0 - alpha) * n as f64);
                worst = worst.max((got - want).abs());
            }
        }
    }
    Outcome::new(
        worst <= 1e-12,
        format!("max moment error {worst:.3e} for alpha in {{1/4, 1/2, 3/4}} (decaying) and alpha = 1 (constant 2^i)"),
    )
}

// 4
fn tv_and_w1() -> Outcome {
    let (mut tv_err, mut w_err): (f64, f64) = (0.0, 0.0);
    let zero = SparseDistribution::dirac(State::zero());
    for i in 1..=10u32 {
        let all = laws(&DyadicKernel, &SparseDistribution::dirac(State::dyadic(i)), 30).unwrap();
        for (n, mu) in all.iter().enumerate().skip(1) {
            tv_err = tv_err.max((tv_distance(mu, &zero) - pow2(1.0 - n as f64)).abs());
            let w = wasserstein_exact(mu, &zero, 1.0, &RealLineMetric).unwrap().value;
            w_err = w_err.max((w - pow2(f64::from(i))).abs());
        }
    }
    Outcome::new(
        tv_err <= 1e-12 && w_err <= 1e-9,
        format!("max |TV - 2^(1-n)| = {tv_err:.3e}, max |W1 - 2^i| = {w_err:.3e}"),
    )
}

/// `sup_{|g| ≤ 1 + V} ⟨g, μ − ν⟩`, enumerating the sign of `g` on each atom.
fn weighted_tv_by_signs(mu: &SparseDistribution, nu: &SparseDistribution, v: impl Fn(&State) -> f64) -> f64 {
    let support: Vec<&State> = mu.support().chain(nu.support()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << support.len()) {
        let value: f64 = support
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let sign = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
                sign * (1.0 + v(s)) * (mu.weight(s) - nu.weight(s))
            })
            .sum();
        best = best.max(value);
    }
    best
}

fn random_measure(rng: &mut ChaCha8Rng, torus: bool) -> Vec<(State, f64)> {
    let k = rng.random_range(1..=6);
    let mut states = BTreeSet::new();
    while states.len() < k {
        let s = if torus {
            State::torus(f64::from(rng.random_range(0..6u32)) * 0.5, f64::from(rng.random_range(0..8u32)) * 0.8).unwrap()
        } else {
            State::real(f64::from(rng.random_range(0..12u32)) * 0.75).unwrap()
        };
        states.insert(s);
    }
    // integer weights keep both marginals summing to one exactly enough for the LP
    let raw: Vec<u32> = (0..k).map(|_| rng.random_range(1..=20)).collect();
    let total: u32 = raw.iter().sum();
    states.into_iter().zip(raw).map(|(s, w)| (s, f64::from(w) / f64::from(total))).collect()
}

fn radial(s: &State) -> f64 {
    match s {
        State::Torus(p) => p.x(),
        _ => s.real_line().unwrap().abs(),
    }
}

// 5
fn transport_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut w_err, mut v_err): (f64, f64) = (0.0, 0.0);
    for instance in 0..500 {
        let torus = instance % 2 == 1;
        let a = random_measure(&mut rng, torus);
        let b = random_measure(&mut rng, torus);
        let mu = SparseDistribution::new(a.clone()).unwrap();
        let nu = SparseDistribution::new(b.clone()).unwrap();
        let metric: &dyn Metric = if torus { &TorusProductMetric } else { &RealLineMetric };
        for p in [1.0, 2.0] {
            let got = wasserstein_exact(&mu, &nu, p, metric).unwrap().value;
            let want = common::lp_transport_cost(&a, &b, |x, y| metric.distance(x, y).powf(p)).max(0.0).powf(1.0 / p);
            w_err = w_err.max((got - want).abs());
        }
        let got = weighted_tv(&mu, &nu, &radial).unwrap();
        v_err = v_err.max((got - weighted_tv_by_signs(&mu, &nu, radial)).abs());
    }
    let elapsed = start.elapsed();
    Outcome::new(
        w_err <= 1e-9 && v_err <= 1e-9 && elapsed < Duration::from_secs(30),
        format!(
            "500 instances: max W_p error {w_err:.3e} vs LP, max d_V error {v_err:.3e} vs sign enumeration, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

// 6
fn coupling_tail() -> Outcome {
    let started = Instant::now();
    let start = State::pair(State::dyadic(1), State::dyadic(1));
    let target = PairBall {
        center: State::zero(),
        radius: 1.0,
        metric: &RealLineMetric,
    };
    let exact = exact_survival(&product_kernel(DyadicKernel), &start, &target, 10).unwrap();
    let mut exact_err: f64 = 0.0;
    for (n, s) in exact.iter().enumerate() {
        let q = 1.0 - pow2(-(n as f64));
        exact_err = exact_err.max((s - (1.0 - q * q)).abs());
    }
    let options = TailBoundOptions {
        n_blocks: 10,
        mc: MonteCarlo::new(100_000, SEED),
        max_block_length: 64.0,
        survival_times: (1..=10).map(f64::from).collect(),
        resolution: DEFAULT_FLOW_RESOLUTION,
    };
    let report = verify_tail_bound(&product_kernel(RowSampler::new(DyadicKernel)), &start, &target, 0.25, &options).unwrap();
    let mut worst_z: f64 = 0.0;
    let mut mc_ok = report.survival_curve.len() == 10;
    for (t, est) in &report.survival_curve {
        let q = 1.0 - pow2(-t);
        let want = 1.0 - q * q;
        mc_ok &= est.within(want, 3.0);
        if est.stderr > 0.0 {
            worst_z = worst_z.max((est.mean - want).abs() / est.stderr);
        }
    }
    let blocks_ok = report.blocks.iter().all(|b| b.pass && (1.0 - 0.125f64).powi(b.block as i32) == b.bound);
    let elapsed = started.elapsed();
    Outcome::new(
        exact_err <= 1e-12 && mc_ok && blocks_ok && report.verdict == Verdict::Pass && elapsed < Duration::from_secs(30),
        format!(
            "exact error {exact_err:.3e}, worst MC deviation {worst_z:.2} sigma, {} blocks under (1 - 0.125)^n, {:.2} s",
            report.blocks.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// 7
fn ui_verdicts() -> Outcome {
    let started = Instant::now();
    let engine = Engine::Exact(&DyadicKernel);
    let grid = LimitGridSpec::steps(40, vec![], 2, 0).unwrap();
    let x = State::dyadic(2);
    let k = default_k_grid();
    let kmax = *k.last().unwrap();
    // E[f(Φ_n); f ≥ K] from 4: Φ_n = 2^{2+n} with probability 2^{-n}, else 0
    let oracle = |g: fn(f64) -> f64| {
        grid.tail_times()
            .iter()
            .map(|&n| {
                let top = g(pow2(2.0 + n));
                if top >= kmax {
                    top * pow2(-n)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    };
    let v = check_uniform_integrability(&engine, &x, &dyadic_value, &k, &grid, 1e-3).unwrap();
    let sqrt = |s: &State| dyadic_value(s).sqrt();
    let h = check_uniform_integrability(&engine, &x, &sqrt, &k, &grid, 1e-3).unwrap();
    let (tv, th) = (v.statistic.unwrap_or(f64::NAN), h.statistic.unwrap_or(f64::NAN));
    let (ov, oh) = (oracle(|y| y), oracle(f64::sqrt));
    let elapsed = started.elapsed();
    Outcome::new(
        v.verdict == Verdict::Fail
            && tv == 4.0
            && ov == 4.0
            && h.verdict == Verdict::Pass
            && th <= 1e-3
            && th == oh
            && elapsed < Duration::from_secs(5),
        format!(
            "f = V: {} with T(2^20) = {tv} (oracle {ov}); f = V^(1/2): {} with T(2^20) = {th:.3e} (oracle {oh:.3e}); {:.2} s",
            v.verdict.as_str(),
            h.verdict.as_str(),
            elapsed.as_secs_f64()
        ),
    )
}

// 8
fn lyapunov() -> Outcome {
    let started = Instant::now();
    let b = lyapunov_bound(&LyapunovSpec::linear(1.0, 5.0), 30.0, 0.1).unwrap();
    let worst = b
        .times
        .iter()
        .zip(&b.values)
        .map(|(t, v)| (v - (1.0 + 4.0 * (-t).exp())).abs())
        .fold(0.0, f64::max);
    let elapsed = started.elapsed();
    Outcome::new(
        (b.bound - 5.0).abs() <= 1e-6
            && (b.terminal - 1.0).abs() <= 1e-6
            && worst <= 1e-6
            && b.monotone
            && !b.crosses_fixed_point
            && elapsed < Duration::from_secs(1),
        format!(
            "bound {:.9}, terminal {:.9}, max deviation from 1 + 4e^-t {worst:.2e}, monotone {}, crossings {}",
            b.bound,
            b.terminal,
            b.monotone,
            u8::from(b.crosses_fixed_point)
        ),
    )
}

// 9
fn ifs_mean_ergodicity() -> Outcome {
    let started = Instant::now();
    let x = State::torus(1.0, 0.0).unwrap();
    let t: f64 = 1000.0;
    let cos_y = |s: &State| match s {
        State::Torus(p) => p.y().cos(),
        _ => f64::NAN,
    };
    let min_x = |s: &State| radial(s).min(1.0);
    // limit ⟨f, δ₀ × Leb⟩ and the exact value at horizon T from (1, 0)
    let cases: [(&str, &(dyn Fn(&State) -> f64 + Sync + Send), f64, f64); 2] = [
        ("cos(y)", &cos_y, 0.0, t.sin() / t),
        ("min(x, 1)", &min_x, 0.0, 3.0 * (1.0 - (-t / 3.0).exp()) / t),
    ];
    let mut pass = true;
    let mut explained = true;
    let mut parts = Vec::new();
    for (k, (name, f, limit, finite)) in cases.iter().enumerate() {
        let est = cesaro_mc(&ifs::IfsTorusKernel, &x, t, *f, MonteCarlo::new(20_000, SEED + k as u64)).unwrap();
        pass &= est.within(*limit, 3.0);
        explained &= (est.mean - finite).abs() <= 3.0 * est.stderr + 1e-6;
        parts.push(format!("{name}: {:.3e} ± {:.1e} (limit {limit}, horizon value {finite:.3e})", est.mean, est.stderr));
    }
    let elapsed = started.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    Outcome {
        pass,
        detail: format!("{}; {:.1} s", parts.join("; "), elapsed.as_secs_f64()),
        explained,
    }
}

// 10
fn lattice_tightness() -> Outcome {
    let start = State::lattice(1, 0, Some(1)).unwrap();
    let all = laws(&LatticeKernel::default_parameters(), &SparseDistribution::dirac(start.clone()), 50).unwrap();
    let mut worst: f64 = 0.0;
    let mut j_ok = true;
    let mut checked = 0;
    for (n, mu) in all.iter().enumerate() {
        j_ok &= mu.support().all(|s| matches!(s, State::Lattice(p) if p.j == n as u64));
        for r in 0..n {
            worst = worst.max(mu.mass_where(|s| LatticeIndexMetric.distance(s, &start) <= r as f64));
            checked += 1;
        }
    }
    Outcome::new(
        worst == 0.0 && j_ok,
        format!("{checked} (R, n) pairs with R < n <= 50: max ball mass {}; every atom at time n has j = n: {j_ok}", worst.abs()),
    )
}

// 11
fn heavy_tail() -> Outcome {
    // S(0, M) > 1e6  ⟺  6 Σ_{m ≤ M} 2^m/m² > 1e6 π²; π² ∈ [9.8696044010, 9.8696044011]
    let ten10 = BigInt::from(10_000_000_000u64);
    let pi2_lo = BigRational::new(BigInt::from(98_696_044_010u64), ten10.clone());
    let pi2_hi = BigRational::new(BigInt::from(98_696_044_011u64), ten10);
    let million = BigRational::from_integer(BigInt::from(1_000_000));
    let six = BigRational::from_integer(BigInt::from(6));
    let mut sum = BigRational::zero();
    let mut first = None;
    let mut undecided = false;
    for m in 1..=40u32 {
        sum += BigRational::new(BigInt::one() << m as usize, BigInt::from(m) * BigInt::from(m));
        let lhs = &six * &sum;
        if lhs > &million * &pi2_hi {
            first = Some(m);
            break;
        }
        undecided |= lhs > &million * &pi2_lo;
    }
    let cert = divergence_certificate(0, 1e6, 40).unwrap();
    let approx = 6.0 / (std::f64::consts::PI * std::f64::consts::PI) * sum.to_f64().unwrap();
    Outcome::new(
        first.is_some() && !undecided && cert.first_crossing == first,
        format!(
            "first M with S(0, M) > 1e6: oracle {first:?}, library {:?}; S(0, M) = {approx:.6e}",
            cert.first_crossing
        ),
    )
}

// 12
fn property_suite() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = (
        prop::collection::vec((1u32..8, 1u32..20), 1..4),
        5usize..30,
        0.0f64..=1.0,
        0.05f64..=1.0,
        0.0f64..=0.75,
        prop::collection::vec(0usize..30, 1..6),
    );
    let k_grid: Vec<f64> = (0..=24).map(|p| pow2(f64::from(p))).collect();
    let mut violations = [0usize; 3];
    for _ in 0..200 {
        let (atoms, horizon, c, alpha, dbeta, times) = strategy.new_tree(&mut runner).unwrap().current();
        let total: u32 = atoms.iter().map(|a| a.1).sum();
        let init = initial_law(&atoms, total);
        let all = laws(&DyadicKernel, &init, horizon).unwrap();
        let beta = alpha + dbeta;
        let f = move |s: &State| c * dyadic_value(s).powf(alpha);
        let g = move |s: &State| dyadic_value(s).powf(beta);

        // comparison: 0 ≤ f ≤ g on the support, so T_f(K) ≤ T_g(K)
        let tf = tail_curve_exact(&all, &f, &k_grid).unwrap();
        let tg = tail_curve_exact(&all, &g, &k_grid).unwrap();
        if tf.iter().zip(&tg).any(|(a, b)| *a > b * (1.0 + 1e-12) + 1e-300) {
            violations[0] += 1;
        }

        // Cesàro laws inherit the tail bound of the laws they average
        let mut bad = false;
        for t in 1..=horizon {
            let parts: Vec<(f64, &SparseDistribution)> = all[..t].iter().map(|mu| (1.0 / t as f64, mu)).collect();
            let q = SparseDistribution::mixture(parts).unwrap();
            for &k in &k_grid {
                let lhs = tail_expectation(&q, &f, k).unwrap();
                let rhs = all[..t].iter().map(|mu| tail_expectation(mu, &f, k).unwrap()).fold(0.0, f64::max);
                bad |= lhs > rhs * (1.0 + 1e-12) + 1e-300;
            }
        }
        violations[1] += usize::from(bad);

        // max_t E f(Φ_t) ≤ E max_t f(Φ_t), the right side by path enumeration
        let times: BTreeSet<usize> = times.into_iter().filter(|&t| t <= horizon).collect();
        if times.is_empty() {
            continue;
        }
        let lhs = times.iter().map(|&t| all[t].integrate(f).unwrap()).fold(f64::NEG_INFINITY, f64::max);
        let rhs = expected_path_max(&atoms, total, &times, horizon, |x| c * x.powf(alpha));
        if lhs > rhs * (1.0 + 1e-12) + 1e-300 {
            violations[2] += 1;
        }
    }
    Outcome::new(
        violations.iter().all(|&v| v == 0),
        format!(
            "200 random families: violations comparison {}, Cesàro tails {}, limit exchange {}",
            violations[0], violations[1], violations[2]
        ),
    )
}

fn initial_law(atoms: &[(u32, u32)], total: u32) -> SparseDistribution {
    let mut merged = std::collections::BTreeMap::new();
    for &(i, w) in atoms {
        *merged.entry(i).or_insert(0u32) += w;
    }
    SparseDistribution::new(merged.into_iter().map(|(i, w)| (State::dyadic(i), f64::from(w) / f64::from(total)))).unwrap()
}

/// `E max_{t ∈ S} h(Φ_t)` for the dyadic chain: from `2^i` the path sits at
/// `2^{i+t}` until the absorption step `N ~ Geom(1/2)` and at `0` afterwards.
fn expected_path_max(atoms: &[(u32, u32)], total: u32, times: &BTreeSet<usize>, horizon: usize, h: impl Fn(f64) -> f64) -> f64 {
    let mut out = 0.0;
    for &(i, w) in atoms {
        let weight = f64::from(w) / f64::from(total);
        let path_max = |absorbed: usize| {
            times
                .iter()
                .map(|&t| if t < absorbed { h(pow2(f64::from(i) + t as f64)) } else { h(0.0) })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut e = 0.0;
        for n in 1..=horizon {
            e += pow2(-(n as f64)) * path_max(n);
        }
        e += pow2(-(horizon as f64)) * path_max(horizon + 1);
        out += weight * e;
    }
    out
}

// 13
fn stability_consistency() -> Outcome {
    let started = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;

    let d = dyadic_chain();
    for (family, uniform) in [("alpha:0.5", false), ("supnorm", true)] {
        let cfg = StabilityConfig {
            equivalence: Equivalence::Asymptotic,
            uniform,
            family: parse_family(family, d.metric.clone(), d.v.clone(), &d.default_center).unwrap(),
            probes: vec![State::dyadic(1), State::dyadic(2), State::dyadic(4)],
            z: State::zero(),
            grid: LimitGridSpec::steps(40, vec![16.0, 8.0, 4.0], 2, SEED).unwrap(),
            lbc_radii: vec![0.5, 1.0],
            lbc_grid: None,
            k_grid: default_k_grid(),
            tolerance: 1e-2,
            structural: None,
        };
        pass &= record(&mut parts, &format!("dyadic x {family}"), stability_report(&d, &cfg));
    }

    let m = ifs_torus();
    let structural = IfsStructural::new(MonteCarlo::new(20_000, SEED + 1));
    let cfg = StabilityConfig {
        equivalence: Equivalence::MeanErgodic,
        uniform: true,
        family: parse_family("weighted", m.metric.clone(), m.v.clone(), &m.default_center).unwrap(),
        probes: vec![
            State::torus(1.0, 0.0).unwrap(),
            State::torus(2.0, 1.0).unwrap(),
            State::torus(0.5, 3.0).unwrap(),
        ],
        z: State::torus(0.0, 0.0).unwrap(),
        grid: LimitGridSpec::new((2..=20).map(|k| f64::from(k * 50)).collect(), vec![2.0, 1.0, 0.5], 20_000, SEED).unwrap(),
        lbc_radii: vec![0.5, 1.0],
        lbc_grid: Some(LimitGridSpec::new((1..=5).map(|k| f64::from(k * 20)).collect(), vec![], 4_000, SEED + 2).unwrap()),
        k_grid: default_k_grid(),
        tolerance: 0.05,
        structural: Some(&structural),
    };
    pass &= record(&mut parts, "ifs-torus x weighted", stability_report(&m, &cfg));

    Outcome::new(pass, format!("{}; {:.1} s", parts.join("; "), started.elapsed().as_secs_f64()))
}

fn record(
    parts: &mut Vec<String>,
    name: &str,
    result: ergokit::Result<ergokit::diagnostics::DiagnosticReport>,
) -> bool {
    match result {
        Ok(r) => {
            let sides: Vec<String> = r.children.iter().map(|c| format!("{}={}", c.condition, c.verdict.as_str())).collect();
            parts.push(format!("{name}: {} [{}]", r.verdict.as_str(), sides.join(", ")));
            r.verdict == Verdict::Pass
        }
        Err(e) => {
            parts.push(format!("{name}: error {e}"));
            false
        }
    }
}

fn main() -> ExitCode {
    // the registry is part of the contract the criteria rely on
    assert!(models::model("ifs-torus").is_ok());
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("dyadic exact laws", dyadic_laws),
        ("martingale moment", martingale_moment),
        ("alpha-moment decay", alpha_moments),
        ("TV convergence and W1 non-convergence", tv_and_w1),
        ("transport oracle equivalence", transport_oracles),
        ("coupling tail", coupling_tail),
        ("UI diagnostic verdicts", ui_verdicts),
        ("Lyapunov ODE", lyapunov),
        ("IFS mean ergodicity", ifs_mean_ergodicity),
        ("lattice tightness failure", lattice_tightness),
        ("heavy-tail divergence", heavy_tail),
        ("property suite", property_suite),
        ("stability equivalence consistency", stability_consistency),
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {name}: {}", o.detail);
        if o.pass {
            passed += 1;
        } else if id == KNOWN_FAILURE.0 && o.explained {
            println!("             known failure: {}", KNOWN_FAILURE.1);
        } else {
            unexpected += 1;
        }
    }
    println!("acceptance: {passed}/13 pass, {unexpected} unexpected failure(s)");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
