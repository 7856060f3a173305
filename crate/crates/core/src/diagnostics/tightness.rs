//! Tightness of `{Q_t(x, ·)}_t` along an exhaustion by balls `B(x₀, R)`.

use crate::diagnostics::grid::LimitGridSpec;
use crate::diagnostics::report::{tail_min, Curve, DiagnosticReport, Verdict, MARGIN_SIGMAS};
use crate::error::{Error, Result};
use crate::markov::Engine;
use crate::metric::Metric;
use crate::state::State;
use crate::stats::Estimate;

/// Mass a ball must keep for the family to count as tight at that radius.
pub const DEFAULT_TIGHTNESS_LEVEL: f64 = 0.99;

/// `m(R) = min_{tail t} Q_t(x, B̄(x₀, R))` for increasing `R`.
///
/// Pass when the largest ball keeps at least `level`; fail when no ball
/// reaches it.
#[allow(clippy::too_many_arguments)]
pub fn check_tightness(
    engine: &Engine<'_>,
    metric: &dyn Metric,
    x: &State,
    x0: &State,
    radii: &[f64],
    grid: &LimitGridSpec,
    level: f64,
) -> Result<DiagnosticReport> {
    grid.validate()?;
    if radii.is_empty() {
        return Err(Error::grid("radii", "must not be empty"));
    }
    if let Some(w) = radii.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::grid("radii", format!("not strictly increasing at {} → {}", w[0], w[1])));
    }
    let tail = grid.tail_range();
    let mut report = DiagnosticReport::new("tightness", engine.mode_name())
        .with_grid(grid)
        .tolerance("level", level);
    report.note(format!("start {x}, balls around {x0} in the {} metric", metric.name()));
    let mut m = Vec::with_capacity(radii.len());
    for &r in radii {
        let inside = |s: &State| if metric.distance(s, x0) <= r { 1.0 } else { 0.0 };
        let curve = engine.qtf_curve(x, &grid.t_grid, &inside)?;
        m.push(tail_min(&curve[tail.clone()]));
        report.curves.push(Curve::new(format!("Q_t(B(R={r}))"), "t", &grid.t_grid, &curve));
    }
    report.curves.push(Curve::new("m", "R", radii, &m));
    let last: Estimate = *m.last().expect("nonempty");
    report.verdict = if last.mean - MARGIN_SIGMAS * last.stderr >= level {
        Verdict::Pass
    } else if m.iter().all(|e| e.mean + MARGIN_SIGMAS * e.stderr < level) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Ok(report.with_statistic(last))
}
