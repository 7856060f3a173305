//! Exact optimal transport between finitely supported measures.

use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distances::assignment::hungarian;
use crate::error::{Error, Result};
use crate::markov::DiscreteMeasure;
use crate::metric::Metric;
use crate::state::State;

/// Largest combined support the exact solver accepts by default.
pub const DEFAULT_SUPPORT_CAP: usize = 2000;

/// Marginal feasibility tolerance for plans.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PlanEntry {
    pub source: State,
    pub target: State,
    pub mass: f64,
}

impl Serialize for PlanEntry {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(3)?;
        t.serialize_element(&self.source)?;
        t.serialize_element(&self.target)?;
        t.serialize_element(&self.mass)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for PlanEntry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let (source, target, mass) = <(State, State, f64)>::deserialize(deserializer)?;
        Ok(PlanEntry { source, target, mass })
    }
}

/// Coupling of two discrete measures; serialized as a list of
/// `[source, target, mass]` triples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
}

impl TransportPlan {
    /// Total mass leaving `s`.
    pub fn source_mass(&self, s: &State) -> f64 {
        self.entries.iter().filter(|e| &e.source == s).map(|e| e.mass).sum()
    }

    /// Total mass arriving at `s`.
    pub fn target_mass(&self, s: &State) -> f64 {
        self.entries.iter().filter(|e| &e.target == s).map(|e| e.mass).sum()
    }

    /// `∫ d^p dπ`.
    pub fn cost(&self, d: &dyn Metric, p: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| e.mass * d.distance(&e.source, &e.target).powf(p))
            .sum()
    }

    /// Checks nonnegativity and both marginals against `mu`, `nu`.
    pub fn check_marginals(&self, mu: &dyn DiscreteMeasure, nu: &dyn DiscreteMeasure, tol: f64) -> Result<()> {
        if let Some(e) = self.entries.iter().find(|e| e.mass < 0.0) {
            return Err(Error::Solver(format!("negative plan mass {}", e.mass)));
        }
        for (side, measure) in [("source", mu), ("target", nu)] {
            for (s, w) in merged(measure) {
                let got = if side == "source" { self.source_mass(&s) } else { self.target_mass(&s) };
                if (got - w).abs() > tol {
                    return Err(Error::Solver(format!("{side} marginal at {s}: {got} vs {w}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WassersteinResult {
    pub value: f64,
    pub plan: TransportPlan,
}

/// Atoms with repeated states merged, in first-seen order.
fn merged(measure: &dyn DiscreteMeasure) -> Vec<(State, f64)> {
    let mut out: Vec<(State, f64)> = Vec::new();
    let mut index: std::collections::HashMap<State, usize> = std::collections::HashMap::new();
    for (s, w) in measure.points() {
        match index.get(s) {
            Some(&k) => out[k].1 += w,
            None => {
                index.insert(s.clone(), out.len());
                out.push((s.clone(), w));
            }
        }
    }
    out
}

/// `W_{p,d}(μ, ν)` with an optimal plan, support cap [`DEFAULT_SUPPORT_CAP`].
pub fn wasserstein_exact(
    mu: &dyn DiscreteMeasure,
    nu: &dyn DiscreteMeasure,
    p: f64,
    d: &dyn Metric,
) -> Result<WassersteinResult> {
    wasserstein_exact_capped(mu, nu, p, d, DEFAULT_SUPPORT_CAP)
}

pub fn wasserstein_exact_capped(
    mu: &dyn DiscreteMeasure,
    nu: &dyn DiscreteMeasure,
    p: f64,
    d: &dyn Metric,
    cap: usize,
) -> Result<WassersteinResult> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::ContractViolation(format!("Wasserstein order must be ≥ 1, got {p}")));
    }
    let a = mu.points();
    let b = nu.points();
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidDistribution("empty measure".into()));
    }
    let size = a.len() + b.len();
    if size > cap {
        return Err(Error::SupportTooLarge { size, cap });
    }
    let mass_a: f64 = a.iter().map(|x| x.1).sum();
    let mass_b: f64 = b.iter().map(|x| x.1).sum();
    if (mass_a - mass_b).abs() > MARGINAL_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("masses differ: {mass_a} vs {mass_b}")));
    }

    let uniform = |pts: &[(&State, f64)]| pts.iter().all(|x| (x.1 - pts[0].1).abs() <= 1e-15);
    let (flows, cost) = if a.len() == b.len() && uniform(&a) && uniform(&b) {
        let n = a.len();
        let cost = cost_matrix(&a, &b, p, d)?;
        let perm = hungarian(&cost, n);
        let w = mass_a / n as f64;
        let flows = perm.iter().enumerate().map(|(i, &j)| (i, j, w)).collect::<Vec<_>>();
        (flows, cost)
    } else {
        let cost = cost_matrix(&a, &b, p, d)?;
        let supply: Vec<f64> = a.iter().map(|x| x.1).collect();
        // absorb rounding so both sides carry identical totals
        let mut demand: Vec<f64> = b.iter().map(|x| x.1 * mass_a / mass_b).collect();
        let drift = mass_a - demand.iter().sum::<f64>();
        if let Some(last) = demand.last_mut() {
            *last += drift;
        }
        let flows = transport_simplex(&supply, &demand, &cost)?;
        (flows, cost)
    };

    let n = b.len();
    let mut total = 0.0;
    let mut entries = Vec::new();
    for (i, j, m) in flows {
        if m > 0.0 {
            total += m * cost[i * n + j];
            entries.push(PlanEntry {
                source: a[i].0.clone(),
                target: b[j].0.clone(),
                mass: m,
            });
        }
    }
    let plan = TransportPlan { entries };
    plan.check_marginals(mu, nu, MARGINAL_TOLERANCE)?;
    Ok(WassersteinResult {
        value: total.max(0.0).powf(1.0 / p),
        plan,
    })
}

fn cost_matrix(a: &[(&State, f64)], b: &[(&State, f64)], p: f64, d: &dyn Metric) -> Result<Vec<f64>> {
    let mut cost = Vec::with_capacity(a.len() * b.len());
    for (x, _) in a {
        for (y, _) in b {
            let dist = d.distance(x, y);
            if !dist.is_finite() {
                return Err(Error::ContractViolation(format!(
                    "metric {} gives non-finite distance between {x} and {y}",
                    d.name()
                )));
            }
            cost.push(dist.powf(p));
        }
    }
    Ok(cost)
}

/// Solves the balanced transportation problem by the primal network simplex
/// on the bipartite spanning-tree basis. Returns basic cells `(i, j, flow)`.
pub fn transport_simplex(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<Vec<(usize, usize, f64)>> {
    let m = supply.len();
    let n = demand.len();
    assert_eq!(cost.len(), m * n);
    let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let eps = 1e-12 * scale;

    // North-west corner start: exactly m + n - 1 cells forming a spanning tree.
    let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(m + n - 1);
    {
        let mut ra = supply.to_vec();
        let mut rb = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra[i].min(rb[j]).max(0.0);
            ra[i] -= x;
            rb[j] -= x;
            if i == m - 1 && j == n - 1 {
                // leftover rounding goes on the final cell
                basis.push((i, j, (x + ra[i].max(rb[j]).max(0.0)).max(0.0)));
                break;
            }
            basis.push((i, j, x));
            if j == n - 1 || (i < m - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let nodes = m + n;
    let mut in_basis = vec![usize::MAX; m * n];
    for (k, &(i, j, _)) in basis.iter().enumerate() {
        in_basis[i * n + j] = k;
    }
    let mut u = vec![0.0f64; m];
    let mut v = vec![0.0f64; n];
    let block = ((m * n) as f64).sqrt().ceil().max(32.0) as usize;
    let mut cursor = 0usize;
    let max_iter = 50 * m * n + 1000;

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut parent_edge = vec![usize::MAX; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];

    for _ in 0..max_iter {
        // Tree structure and potentials from the root (row 0).
        adj.iter_mut().for_each(|a| a.clear());
        for (k, &(i, j, _)) in basis.iter().enumerate() {
            adj[i].push(k);
            adj[m + j].push(k);
        }
        parent_edge.iter_mut().for_each(|x| *x = usize::MAX);
        parent.iter_mut().for_each(|x| *x = usize::MAX);
        let mut stack = vec![0usize];
        parent[0] = 0;
        depth[0] = 0;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &k in &adj[node] {
                let (i, j, _) = basis[k];
                let other = if node < m { m + j } else { i };
                if parent[other] != usize::MAX {
                    continue;
                }
                parent[other] = node;
                parent_edge[other] = k;
                depth[other] = depth[node] + 1;
                if other >= m {
                    v[j] = cost[i * n + j] - u[i];
                } else {
                    u[i] = cost[i * n + j] - v[j];
                }
                stack.push(other);
            }
        }
        if parent.contains(&usize::MAX) {
            return Err(Error::Solver("basis is not a spanning tree".into()));
        }

        // Block pricing.
        let total = m * n;
        let mut entering = None;
        let mut scanned = 0;
        while scanned < total {
            let mut best = -eps;
            let end = (scanned + block).min(total);
            for _ in scanned..end {
                let c = cursor;
                cursor = (cursor + 1) % total;
                if in_basis[c] != usize::MAX {
                    continue;
                }
                let (i, j) = (c / n, c % n);
                let r = cost[c] - u[i] - v[j];
                if r < best {
                    best = r;
                    entering = Some((i, j));
                }
            }
            scanned = end;
            if entering.is_some() {
                break;
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(basis);
        };

        // Cycle: entering cell plus tree path from column node back to row node.
        let (mut a, mut b) = (ei, m + ej);
        let mut path_a = Vec::new();
        let mut path_b = Vec::new();
        while a != b {
            if depth[a] >= depth[b] {
                path_a.push(parent_edge[a]);
                a = parent[a];
            } else {
                path_b.push(parent_edge[b]);
                b = parent[b];
            }
        }
        // Walking from the column node ej to row ei: edges alternate −, +, −, …
        let mut cycle: Vec<usize> = path_b;
        cycle.extend(path_a.into_iter().rev());
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &k) in cycle.iter().enumerate() {
            if pos % 2 == 0 && basis[k].2 < theta {
                theta = basis[k].2;
                leave = k;
            }
        }
        if leave == usize::MAX {
            return Err(Error::Solver("unbounded pivot".into()));
        }
        for (pos, &k) in cycle.iter().enumerate() {
            if pos % 2 == 0 {
                basis[k].2 = (basis[k].2 - theta).max(0.0);
            } else {
                basis[k].2 += theta;
            }
        }
        let (li, lj, _) = basis[leave];
        in_basis[li * n + lj] = usize::MAX;
        basis[leave] = (ei, ej, theta);
        in_basis[ei * n + ej] = leave;
    }
    Err(Error::Solver(format!("no convergence after {max_iter} pivots")))
}

/// `W_p` on the real line by the quantile coupling.
pub fn wasserstein_1d(mu: &dyn DiscreteMeasure, nu: &dyn DiscreteMeasure, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::ContractViolation(format!("Wasserstein order must be ≥ 1, got {p}")));
    }
    let embed = |m: &dyn DiscreteMeasure| -> Result<Vec<(f64, f64)>> {
        let mut pts = m
            .points()
            .into_iter()
            .map(|(s, w)| s.real_line().map(|x| (x, w)).ok_or_else(|| Error::NotEmbeddable(s.clone())))
            .collect::<Result<Vec<_>>>()?;
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(pts)
    };
    let a = embed(mu)?;
    let b = embed(nu)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidDistribution("empty measure".into()));
    }
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    loop {
        let step = ra.min(rb);
        total += step * (a[i].0 - b[j].0).abs().powf(p);
        ra -= step;
        rb -= step;
        let a_done = ra <= 0.0;
        let b_done = rb <= 0.0;
        if a_done {
            i += 1;
            if i == a.len() {
                break;
            }
            ra = a[i].1;
        }
        if b_done {
            j += 1;
            if j == b.len() {
                break;
            }
            rb = b[j].1;
        }
    }
    Ok(total.powf(1.0 / p))
}
