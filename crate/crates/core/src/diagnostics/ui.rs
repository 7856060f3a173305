//! Uniform integrability of `{f(Φ_t)}_t` through the tail curve
//! `T(K) = sup_t E[|f(Φ_t)|; |f(Φ_t)| ≥ K]`, with the supremum over the tail
//! of the time grid.

use crate::diagnostics::grid::LimitGridSpec;
use crate::diagnostics::report::{below, tail_max, Curve, DiagnosticReport, Verdict, MARGIN_SIGMAS};
use crate::error::{Error, Result};
use crate::markov::{Engine, SparseDistribution, StateFn};
use crate::state::State;
use crate::stats::Estimate;

pub const DEFAULT_UI_TOLERANCE: f64 = 1e-3;

/// `K = 2^0, 2^1, …, 2^20`.
pub fn default_k_grid() -> Vec<f64> {
    (0..=20).map(|p| f64::from(p).exp2()).collect()
}

/// `E[|f|; |f| ≥ K]` under `mu`.
pub fn tail_expectation(mu: &SparseDistribution, f: &StateFn, k: f64) -> Result<f64> {
    mu.integrate(|s| truncated_tail(f(s), k))
}

fn truncated_tail(v: f64, k: f64) -> f64 {
    let a = v.abs();
    if a >= k {
        a
    } else {
        0.0
    }
}

/// `T(K) = max_t E[|f|; |f| ≥ K]` over a finite family of laws.
pub fn tail_curve_exact(laws: &[SparseDistribution], f: &StateFn, k_grid: &[f64]) -> Result<Vec<f64>> {
    k_grid
        .iter()
        .map(|&k| {
            let mut best: f64 = 0.0;
            for mu in laws {
                best = best.max(tail_expectation(mu, f, k)?);
            }
            Ok(best)
        })
        .collect()
}

fn validate_k_grid(k_grid: &[f64]) -> Result<()> {
    if k_grid.len() < 2 {
        return Err(Error::grid("k_grid", "need at least two levels"));
    }
    if let Some(w) = k_grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::grid("k_grid", format!("not strictly increasing at {} → {}", w[0], w[1])));
    }
    if k_grid[0] < 0.0 || !k_grid[k_grid.len() - 1].is_finite() {
        return Err(Error::grid("k_grid", "levels must be finite and nonnegative"));
    }
    Ok(())
}

/// Decides UI of `f(Φ_t)` under `ℙ^x`.
///
/// Pass when `T(K_max)` is below `tol`. Fail when the last two levels give
/// the same `T` within the margin and it stays above `tol`.
pub fn check_uniform_integrability(
    engine: &Engine<'_>,
    x: &State,
    f: &StateFn,
    k_grid: &[f64],
    grid: &LimitGridSpec,
    tol: f64,
) -> Result<DiagnosticReport> {
    grid.validate()?;
    validate_k_grid(k_grid)?;
    let tail = grid.tail_range();
    let mut report = DiagnosticReport::new("H1", engine.mode_name())
        .with_grid(grid)
        .tolerance("T(K_max)", tol);
    report.note(format!("start {x}"));
    let t_values: Vec<Estimate> = match engine {
        Engine::Exact(_) => {
            let laws = engine.laws_at(x, grid.tail_times())?;
            tail_curve_exact(&laws, f, k_grid)?
                .into_iter()
                .map(Estimate::exact)
                .collect()
        }
        Engine::MonteCarlo { .. } => {
            // one seed for every K, so each path gives a pointwise nonincreasing curve
            let mut out = Vec::with_capacity(k_grid.len());
            for &k in k_grid {
                let g = |s: &State| truncated_tail(f(s), k);
                let curve = engine.ptf_curve(x, &grid.t_grid, &g)?;
                out.push(tail_max(&curve[tail.clone()]));
            }
            out
        }
    };
    report.curves.push(Curve::new("T", "K", k_grid, &t_values));
    let n = t_values.len();
    let (last, prev) = (t_values[n - 1], t_values[n - 2]);
    let plateau = prev.mean - last.mean <= MARGIN_SIGMAS * prev.stderr.hypot(last.stderr) + 1e-12 * prev.mean.abs();
    report.verdict = match below(last, tol) {
        Verdict::Pass => Verdict::Pass,
        Verdict::Fail if plateau => Verdict::Fail,
        _ => Verdict::Inconclusive,
    };
    Ok(report.with_statistic(last))
}

/// Hypothesis (H2): the same test on the family envelope.
pub fn check_envelope_integrability(
    engine: &Engine<'_>,
    x: &State,
    envelope: &StateFn,
    k_grid: &[f64],
    grid: &LimitGridSpec,
    tol: f64,
) -> Result<DiagnosticReport> {
    let mut r = check_uniform_integrability(engine, x, envelope, k_grid, grid, tol)?;
    r.condition = "H2".into();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::MonteCarlo;
    use crate::models::dyadic::{identity_v, n_step_law};
    use crate::models::DyadicKernel;

    fn grid() -> LimitGridSpec {
        LimitGridSpec::steps(40, vec![], 2, 0).unwrap()
    }

    #[test]
    fn identity_weight_is_not_ui() {
        let e = Engine::Exact(&DyadicKernel);
        let r = check_uniform_integrability(&e, &State::dyadic(3), &identity_v, &default_k_grid(), &grid(), 1e-3).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.statistic, Some(8.0));
    }

    #[test]
    fn square_root_is_ui() {
        let e = Engine::Exact(&DyadicKernel);
        let f = |s: &State| identity_v(s).sqrt();
        let r = check_uniform_integrability(&e, &State::dyadic(2), &f, &default_k_grid(), &grid(), 1e-3).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        // largest admissible tail value: n = 38, 2^{(2−38)/2}
        assert_eq!(r.statistic, Some(2f64.powi(-18)));
    }

    #[test]
    fn bounded_function_has_empty_tail() {
        let laws: Vec<_> = (0..10).map(|n| n_step_law(3, n)).collect();
        let f = |s: &State| identity_v(s).min(1.0);
        let t = tail_curve_exact(&laws, &f, &[2.0, 4.0]).unwrap();
        assert_eq!(t, vec![0.0, 0.0]);
    }

    #[test]
    fn monte_carlo_curve_is_monotone() {
        let e = Engine::MonteCarlo {
            kernel: &crate::markov::RowSampler::new(DyadicKernel),
            mc: MonteCarlo::new(4000, 5),
        };
        let g = LimitGridSpec::steps(12, vec![], 4000, 5).unwrap();
        let r = check_uniform_integrability(&e, &State::dyadic(1), &identity_v, &[1.0, 4.0, 16.0, 64.0], &g, 1e-3).unwrap();
        let pts = &r.curves[0].points;
        assert!(pts.windows(2).all(|w| w[1].mean <= w[0].mean));
    }
}
