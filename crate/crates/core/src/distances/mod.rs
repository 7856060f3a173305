//! Probability metrics on finitely supported measures.
//!
//! Total variation follows the `‖f‖∞ ≤ 1` dual convention, so it ranges over
//! `[0, 2]` and is twice `sup_A |μ(A) − ν(A)|`.

pub mod assignment;
pub mod transport;

use std::collections::BTreeSet;

pub use transport::{
    transport_simplex, wasserstein_1d, wasserstein_exact, wasserstein_exact_capped, PlanEntry, TransportPlan,
    WassersteinResult, DEFAULT_SUPPORT_CAP, MARGINAL_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::markov::{FamilyKind, SparseDistribution, StateFn, TestFunctionFamily};
use crate::metric::TruncatedMetric;
use crate::state::State;

fn union_support<'a>(mu: &'a SparseDistribution, nu: &'a SparseDistribution) -> BTreeSet<&'a State> {
    mu.support().chain(nu.support()).collect()
}

/// `Σ_s |μ(s) − ν(s)|`.
pub fn tv_distance(mu: &SparseDistribution, nu: &SparseDistribution) -> f64 {
    union_support(mu, nu)
        .into_iter()
        .map(|s| (mu.weight(s) - nu.weight(s)).abs())
        .sum()
}

/// `d_V(μ, ν) = Σ_s |μ(s) − ν(s)| (1 + V(s))`.
pub fn weighted_tv(mu: &SparseDistribution, nu: &SparseDistribution, v: &StateFn) -> Result<f64> {
    let mut total = 0.0;
    for s in union_support(mu, nu) {
        let vs = v(s);
        if !(vs.is_finite() && vs >= 0.0) {
            return Err(Error::ContractViolation(format!("weight V({s}) = {vs} must be finite and nonnegative")));
        }
        total += (mu.weight(s) - nu.weight(s)).abs() * (1.0 + vs);
    }
    Ok(total)
}

/// `sup_{f∈𝔉} |⟨f, μ⟩ − ⟨f, ν⟩|` where a closed form exists.
///
/// For bounded 1-Lipschitz functions with `‖f‖∞ ≤ r` the dual problem is
/// transport with ground cost `min(d, 2r)`, which equals plain `W₁` whenever
/// no transported pair is further than `2r` apart.
pub fn family_sup_gap(mu: &SparseDistribution, nu: &SparseDistribution, family: &TestFunctionFamily) -> Result<f64> {
    match &family.kind {
        FamilyKind::SupNorm { bound } => Ok(bound * tv_distance(mu, nu)),
        FamilyKind::Weighted => weighted_tv(mu, nu, family.weight().as_ref()),
        FamilyKind::LipBounded { bound } => {
            let cost = TruncatedMetric {
                inner: family.metric().as_ref(),
                cap: 2.0 * bound,
            };
            Ok(wasserstein_exact(mu, nu, 1.0, &cost)?.value)
        }
        other => Err(Error::Unsupported(format!(
            "no closed-form supremum for family {other:?}; use its representatives"
        ))),
    }
}
