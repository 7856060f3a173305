//! Verdicts, statistic curves and their JSON/CSV forms.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diagnostics::grid::LimitGridSpec;
use crate::error::Result;
use crate::stats::Estimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Fail dominates, then inconclusive.
    pub fn all(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in verdicts {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Margin in standard errors for Monte Carlo decisions.
pub const MARGIN_SIGMAS: f64 = 3.0;

/// Decides `statistic > floor`. Exact estimates need no margin.
pub fn above(est: Estimate, floor: f64) -> Verdict {
    let m = MARGIN_SIGMAS * est.stderr;
    if est.mean - m > floor {
        Verdict::Pass
    } else if est.mean + m <= floor && (est.is_exact() || est.mean + m < floor) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Decides `statistic ≤ tol`.
pub fn below(est: Estimate, tol: f64) -> Verdict {
    let m = MARGIN_SIGMAS * est.stderr;
    if est.mean + m <= tol {
        Verdict::Pass
    } else if est.mean - m > tol {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Share of its tail maximum a curve may lose by the last time and still
/// count as a plateau.
pub const PLATEAU_DROP: f64 = 0.1;

/// `limsup_t a_t → 0` on a tail: pass when the tail maximum is below `tol`,
/// fail when even the tail minimum stays above it and the curve has
/// flattened out, inconclusive while it is still decaying.
pub fn vanishing_tail(tail: &[Estimate], tol: f64) -> (Verdict, Estimate) {
    let max = tail_max(tail);
    match below(max, tol) {
        Verdict::Pass => (Verdict::Pass, max),
        _ => {
            let min = tail_min(tail);
            let last = *tail.last().expect("tail is nonempty");
            let margin = MARGIN_SIGMAS * last.stderr.hypot(max.stderr);
            let flat = last.mean + margin >= (1.0 - PLATEAU_DROP) * max.mean;
            let v = if below(min, tol) == Verdict::Fail && flat {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            };
            (v, max)
        }
    }
}

pub fn tail_max(tail: &[Estimate]) -> Estimate {
    *tail
        .iter()
        .max_by(|a, b| a.mean.total_cmp(&b.mean))
        .expect("tail is nonempty")
}

pub fn tail_min(tail: &[Estimate]) -> Estimate {
    *tail
        .iter()
        .min_by(|a, b| a.mean.total_cmp(&b.mean))
        .expect("tail is nonempty")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    /// Name of the abscissa, e.g. `t`, `r` or `K`.
    pub x_name: String,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    pub fn new(label: impl Into<String>, x_name: &str, xs: &[f64], ys: &[Estimate]) -> Self {
        Curve {
            label: label.into(),
            x_name: x_name.to_string(),
            points: xs
                .iter()
                .zip(ys)
                .map(|(&x, e)| CurvePoint {
                    x,
                    mean: e.mean,
                    stderr: e.stderr,
                })
                .collect(),
        }
    }

    pub fn exact(label: impl Into<String>, x_name: &str, xs: &[f64], ys: &[f64]) -> Self {
        let est: Vec<Estimate> = ys.iter().map(|&y| Estimate::exact(y)).collect();
        Curve::new(label, x_name, xs, &est)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub condition: String,
    pub verdict: Verdict,
    /// Headline number the verdict was decided on.
    pub statistic: Option<f64>,
    pub statistic_stderr: Option<f64>,
    pub curves: Vec<Curve>,
    pub tolerances: BTreeMap<String, f64>,
    pub grid: Option<LimitGridSpec>,
    pub model: Option<String>,
    /// `exact` or `monte-carlo`.
    pub mode: String,
    pub seed: Option<u64>,
    pub notes: Vec<String>,
    pub children: Vec<DiagnosticReport>,
}

impl DiagnosticReport {
    pub fn new(condition: impl Into<String>, mode: &str) -> Self {
        DiagnosticReport {
            condition: condition.into(),
            verdict: Verdict::Inconclusive,
            statistic: None,
            statistic_stderr: None,
            curves: Vec::new(),
            tolerances: BTreeMap::new(),
            grid: None,
            model: None,
            mode: mode.to_string(),
            seed: None,
            notes: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn with_statistic(mut self, est: Estimate) -> Self {
        self.statistic = Some(est.mean);
        self.statistic_stderr = Some(est.stderr);
        self
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Records the grid and, for Monte Carlo runs, its seed.
    pub fn with_grid(mut self, grid: &LimitGridSpec) -> Self {
        if self.mode != "exact" {
            self.seed = Some(grid.seed);
        }
        self.grid = Some(grid.clone());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// All curves of this report and its children as
    /// `condition,curve,x_name,x,mean,stderr` rows.
    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["condition", "curve", "x_name", "x", "mean", "stderr"])?;
        self.write_rows(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for c in &self.curves {
            for p in &c.points {
                w.write_record([
                    self.condition.as_str(),
                    c.label.as_str(),
                    c.x_name.as_str(),
                    &format_number(p.x),
                    &format_number(p.mean),
                    &format_number(p.stderr),
                ])?;
            }
        }
        for child in &self.children {
            child.write_rows(w)?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mc(mean: f64, stderr: f64) -> Estimate {
        Estimate {
            mean,
            stderr,
            samples: 100,
            excluded: 0,
        }
    }

    #[test]
    fn margins() {
        assert_eq!(above(mc(0.5, 0.1), 0.1), Verdict::Pass);
        assert_eq!(above(mc(0.2, 0.1), 0.1), Verdict::Inconclusive);
        assert_eq!(above(Estimate::exact(0.0), 0.01), Verdict::Fail);
        assert_eq!(below(mc(0.0, 0.001), 0.01), Verdict::Pass);
        assert_eq!(below(mc(1.0, 0.001), 0.01), Verdict::Fail);
        assert_eq!(Verdict::all([Verdict::Pass, Verdict::Inconclusive]), Verdict::Inconclusive);
        assert_eq!(Verdict::all([Verdict::Inconclusive, Verdict::Fail]), Verdict::Fail);
    }

    #[test]
    fn decaying_tail_is_not_a_failure() {
        let flat: Vec<Estimate> = [1.0, 1.0, 1.0].map(Estimate::exact).to_vec();
        assert_eq!(vanishing_tail(&flat, 0.1).0, Verdict::Fail);
        let decay: Vec<Estimate> = [1.0, 0.7, 0.5].map(Estimate::exact).to_vec();
        assert_eq!(vanishing_tail(&decay, 0.1).0, Verdict::Inconclusive);
        let small: Vec<Estimate> = [0.01, 0.005].map(Estimate::exact).to_vec();
        assert_eq!(vanishing_tail(&small, 0.1).0, Verdict::Pass);
    }

    #[test]
    fn csv_rows_are_stable() {
        let mut r = DiagnosticReport::new("H1", "exact");
        r.curves.push(Curve::exact("T", "K", &[1.0, 2.0], &[0.5, 0.25]));
        let mut buf = Vec::new();
        r.write_curves_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("H1,T,K,1.0000000000000000e0,5.0000000000000000e-1,0.0000000000000000e0"));
        assert_eq!(format_number(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
