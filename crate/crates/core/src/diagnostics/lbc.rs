//! Lower bound conditions: `inf_x liminf_t P_t(x, B(z, r)) > 0` and its
//! Cesàro form with `limsup_t Q_t`.

use crate::diagnostics::grid::LimitGridSpec;
use crate::diagnostics::report::{above, tail_max, tail_min, Curve, DiagnosticReport, Verdict};
use crate::error::{Error, Result};
use crate::markov::Engine;
use crate::metric::Metric;
use crate::state::State;
use crate::stats::Estimate;

/// A statistic counts as bounded away from zero when it clears this floor
/// by the Monte Carlo margin.
pub const DEFAULT_LBC_FLOOR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lbc {
    /// Tail minimum of `P_t(x, B(z, r))`.
    C1,
    /// Tail maximum of `Q_t(x, B(z, r))`.
    C2,
}

#[allow(clippy::too_many_arguments)]
pub fn check_lbc(
    engine: &Engine<'_>,
    metric: &dyn Metric,
    z: &State,
    r_list: &[f64],
    probes: &[State],
    grid: &LimitGridSpec,
    which: Lbc,
    floor: f64,
) -> Result<DiagnosticReport> {
    grid.validate()?;
    if probes.is_empty() {
        return Err(Error::ContractViolation("probe set is empty".into()));
    }
    if r_list.is_empty() {
        return Err(Error::grid("r_list", "must not be empty"));
    }
    let name = match which {
        Lbc::C1 => "C1",
        Lbc::C2 => "C2",
    };
    let mut report = DiagnosticReport::new(name, engine.mode_name())
        .with_grid(grid)
        .tolerance("floor", floor);
    let tail = grid.tail_range();
    let mut verdicts = Vec::new();
    let mut overall: Option<Estimate> = None;
    for &r in r_list {
        let zc = z.clone();
        let indicator = move |s: &State| if metric.distance(s, &zc) < r { 1.0 } else { 0.0 };
        let mut stat: Option<Estimate> = None;
        for x in probes {
            let curve = match which {
                Lbc::C1 => engine.ptf_curve(x, &grid.t_grid, &indicator)?,
                Lbc::C2 => engine.qtf_curve(x, &grid.t_grid, &indicator)?,
            };
            let s = match which {
                Lbc::C1 => tail_min(&curve[tail.clone()]),
                Lbc::C2 => tail_max(&curve[tail.clone()]),
            };
            report.curves.push(Curve::new(format!("r={r} x={x}"), "t", &grid.t_grid, &curve));
            if stat.is_none_or(|m| s.mean < m.mean) {
                stat = Some(s);
            }
        }
        let stat = stat.expect("probes nonempty");
        let v = above(stat, floor);
        report.note(format!("r = {r}: statistic {:.6} ± {:.2e} → {}", stat.mean, stat.stderr, v.as_str()));
        verdicts.push(v);
        if overall.is_none_or(|m| stat.mean < m.mean) {
            overall = Some(stat);
        }
    }
    report.verdict = Verdict::all(verdicts);
    Ok(report.with_statistic(overall.expect("radii nonempty")))
}

pub fn check_lbc_c1(
    engine: &Engine<'_>,
    metric: &dyn Metric,
    z: &State,
    r_list: &[f64],
    probes: &[State],
    grid: &LimitGridSpec,
) -> Result<DiagnosticReport> {
    check_lbc(engine, metric, z, r_list, probes, grid, Lbc::C1, DEFAULT_LBC_FLOOR)
}

pub fn check_lbc_c2(
    engine: &Engine<'_>,
    metric: &dyn Metric,
    z: &State,
    r_list: &[f64],
    probes: &[State],
    grid: &LimitGridSpec,
) -> Result<DiagnosticReport> {
    check_lbc(engine, metric, z, r_list, probes, grid, Lbc::C2, DEFAULT_LBC_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::kernel::IdentityKernel;
    use crate::metric::RealLineMetric;
    use crate::models::DyadicKernel;

    #[test]
    fn dyadic_chain_meets_c1_at_zero() {
        let grid = LimitGridSpec::steps(30, vec![], 2, 0).unwrap();
        let probes = [State::zero(), State::dyadic(1), State::dyadic(2), State::dyadic(10)];
        let e = Engine::Exact(&DyadicKernel);
        let r = check_lbc_c1(&e, &RealLineMetric, &State::zero(), &[0.5, 1.0], &probes, &grid).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.statistic.unwrap() > 0.99);
        let c2 = check_lbc_c2(&e, &RealLineMetric, &State::zero(), &[0.5], &probes, &grid).unwrap();
        assert_eq!(c2.verdict, Verdict::Pass);
    }

    #[test]
    fn identity_chain_fails_away_from_probe() {
        let grid = LimitGridSpec::steps(4, vec![], 2, 0).unwrap();
        let e = Engine::Exact(&IdentityKernel);
        let r = check_lbc_c1(&e, &RealLineMetric, &State::dyadic(1), &[0.5], &[State::dyadic(1), State::dyadic(3)], &grid)
            .unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.statistic, Some(0.0));
    }
}
