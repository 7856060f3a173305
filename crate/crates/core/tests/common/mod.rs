//! Independent oracles shared by the integration suites.

#![allow(dead_code)]

use ergokit::markov::SparseDistribution;
use ergokit::State;
use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// Minimum of `Σ c(x, y) π(x, y)` over couplings, solved as a dense LP.
pub fn lp_transport_cost(
    mu: &[(State, f64)],
    nu: &[(State, f64)],
    cost: impl Fn(&State, &State) -> f64,
) -> f64 {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let mut vars = Vec::new();
    for (x, _) in mu {
        let row: Vec<_> = nu
            .iter()
            .map(|(y, _)| problem.add_var(cost(x, y), (0.0, f64::INFINITY)))
            .collect();
        vars.push(row);
    }
    for (i, (_, w)) in mu.iter().enumerate() {
        let terms: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        problem.add_constraint(&terms, ComparisonOp::Eq, *w);
    }
    for (j, (_, w)) in nu.iter().enumerate() {
        let terms: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        problem.add_constraint(&terms, ComparisonOp::Eq, *w);
    }
    problem.solve().expect("transport LP is feasible").objective()
}

/// Atoms at distinct real points with weights `w_k / Σ w`.
pub fn real_measure(points: &[(f64, u32)]) -> SparseDistribution {
    let total: u32 = points.iter().map(|p| p.1).sum();
    let mut seen = std::collections::BTreeMap::new();
    for &(x, w) in points {
        *seen.entry(State::real(x).unwrap()).or_insert(0u32) += w;
    }
    let atoms: Vec<_> = seen
        .into_iter()
        .map(|(s, w)| (s, f64::from(w) / f64::from(total)))
        .collect();
    let sum: f64 = atoms.iter().map(|a| a.1).sum();
    SparseDistribution::new(atoms.into_iter().map(|(s, w)| (s, w / sum))).unwrap()
}

pub fn atoms(d: &SparseDistribution) -> Vec<(State, f64)> {
    d.atoms().map(|(s, w)| (s.clone(), w)).collect()
}

/// Exact dyadic `n`-step law from `2^i`: `{0: 1 − 2^{−n}, 2^{i+n}: 2^{−n}}`.
pub fn dyadic_law(i: u32, n: u32) -> Vec<(State, f64)> {
    let tail = 0.5f64.powi(n as i32);
    if n == 0 {
        return vec![(State::dyadic(i), 1.0)];
    }
    vec![(State::zero(), 1.0 - tail), (State::dyadic(i + n), tail)]
}
