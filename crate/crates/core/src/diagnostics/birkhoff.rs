//! Running time averages `(1/c) ∫_0^c f(Φ_s) ds` along one path.

use serde::{Deserialize, Serialize};

use crate::diagnostics::report::{Curve, DiagnosticReport, Verdict};
use crate::error::{Error, Result};
use crate::markov::{StateFn, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BirkhoffOutcome {
    Diverging,
    Bounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffCheck {
    pub checkpoints: Vec<f64>,
    pub averages: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub outcome: BirkhoffOutcome,
}

/// Averages at each checkpoint, treating the path as constant between
/// recorded times.
pub fn birkhoff_averages(trajectory: &Trajectory, f: &StateFn, checkpoints: &[f64]) -> Result<Vec<f64>> {
    if let Some(w) = checkpoints.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::grid("checkpoints", format!("not strictly increasing at {} → {}", w[0], w[1])));
    }
    match checkpoints.first() {
        None => return Err(Error::grid("checkpoints", "must not be empty")),
        Some(&c) if !(c > 0.0) => return Err(Error::grid("checkpoints", "must be positive")),
        _ => {}
    }
    let last = *checkpoints.last().expect("nonempty");
    if last > trajectory.horizon {
        return Err(Error::grid(
            "checkpoints",
            format!("checkpoint {last} beyond the path horizon {}", trajectory.horizon),
        ));
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut integral = 0.0;
    let mut covered = 0.0;
    let mut k = 0;
    for &c in checkpoints {
        while covered < c {
            let end = trajectory.times.get(k + 1).copied().unwrap_or(f64::INFINITY).min(c);
            let value = f(&trajectory.states[k]);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    state: trajectory.states[k].clone(),
                    value,
                });
            }
            integral += value * (end - covered);
            covered = end;
            if trajectory.times.get(k + 1).is_some_and(|&t| t <= covered) {
                k += 1;
            }
        }
        out.push(integral / c);
    }
    Ok(out)
}

/// Diverging when the average at the last checkpoint exceeds every threshold.
pub fn birkhoff_divergence_check(
    trajectory: &Trajectory,
    f: &StateFn,
    checkpoints: &[f64],
    thresholds: &[f64],
) -> Result<BirkhoffCheck> {
    if thresholds.is_empty() {
        return Err(Error::grid("thresholds", "must not be empty"));
    }
    let averages = birkhoff_averages(trajectory, f, checkpoints)?;
    let last = *averages.last().expect("nonempty");
    let outcome = if thresholds.iter().all(|&t| last > t) {
        BirkhoffOutcome::Diverging
    } else {
        BirkhoffOutcome::Bounded
    };
    Ok(BirkhoffCheck {
        checkpoints: checkpoints.to_vec(),
        averages,
        thresholds: thresholds.to_vec(),
        outcome,
    })
}

impl BirkhoffCheck {
    /// Report for the condition "averages stay bounded".
    pub fn report(&self, mode: &str) -> DiagnosticReport {
        let mut r = DiagnosticReport::new("birkhoff-bounded", mode)
            .with_statistic(crate::stats::Estimate::exact(*self.averages.last().expect("nonempty")));
        for (i, t) in self.thresholds.iter().enumerate() {
            r.tolerances.insert(format!("threshold[{i}]"), *t);
        }
        r.curves.push(Curve::exact("average", "t", &self.checkpoints, &self.averages));
        r.verdict = match self.outcome {
            BirkhoffOutcome::Bounded => Verdict::Pass,
            BirkhoffOutcome::Diverging => Verdict::Fail,
        };
        r
    }
}
