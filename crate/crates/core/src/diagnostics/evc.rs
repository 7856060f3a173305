//! Eventual continuity: `limsup_{x′→x} limsup_t |P_t f(x′) − P_t f(x)| = 0`,
//! with Cesàro and uniform-in-`f` variants.

use serde::{Deserialize, Serialize};

use crate::diagnostics::grid::LimitGridSpec;
use crate::diagnostics::report::{below, tail_max, Curve, DiagnosticReport, Verdict, MARGIN_SIGMAS};
use crate::distances::family_sup_gap;
use crate::error::{Error, Result};
use crate::markov::{Engine, FamilyKind, SparseDistribution, TestFunctionFamily};
use crate::models::ifs::{cesaro_summary, CesaroSummary, DEFAULT_ANGLE_GRID};
use crate::markov::MonteCarlo;
use crate::state::State;
use crate::stats::{child_seed, Estimate};

/// Default decision tolerance for `D(r)`.
pub const DEFAULT_EVC_TOLERANCE: f64 = 1e-2;

/// Fewest radii a trend verdict may rest on.
pub const MIN_RADII: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvcVariant {
    Plain,
    Cesaro,
    Uniform,
    UniformCesaro,
}

impl EvcVariant {
    pub fn cesaro(self) -> bool {
        matches!(self, EvcVariant::Cesaro | EvcVariant::UniformCesaro)
    }

    pub fn uniform(self) -> bool {
        matches!(self, EvcVariant::Uniform | EvcVariant::UniformCesaro)
    }

    pub fn condition(self) -> &'static str {
        match self {
            EvcVariant::Plain => "EvC",
            EvcVariant::Cesaro => "EvC-cesaro",
            EvcVariant::Uniform => "EvC-uniform",
            EvcVariant::UniformCesaro => "EvC-uniform-cesaro",
        }
    }
}

/// Laws known in structure rather than by atoms, for continuous-state
/// models where the family supremum has a closed form.
pub trait StructuralLaws: Sync {
    /// `sup_{f∈𝔉} |Q_t f(a) − Q_t f(b)|`.
    fn cesaro_gap(&self, a: &State, b: &State, t: f64) -> Result<Estimate>;

    /// `sup_{f∈𝔉} |Q_t f(x) − ⟨f, μ⟩|`.
    fn cesaro_to_invariant(&self, x: &State, t: f64) -> Result<Estimate>;

    fn name(&self) -> &str;
}

/// `d_V` between Cesàro laws of the torus model for `V(x, y) = x`.
#[derive(Clone, Copy, Debug)]
pub struct IfsStructural {
    pub mc: MonteCarlo,
    pub angle_grid: usize,
}

impl IfsStructural {
    pub fn new(mc: MonteCarlo) -> Self {
        IfsStructural {
            mc,
            angle_grid: DEFAULT_ANGLE_GRID,
        }
    }

    fn summary(&self, s: &State, t: f64, label: u64) -> Result<CesaroSummary> {
        let State::Torus(p) = s else {
            return Err(Error::ContractViolation(format!("{s} is not a torus state")));
        };
        let mc = MonteCarlo::new(self.mc.samples, child_seed(self.mc.seed, label));
        cesaro_summary(p.x(), p.y(), t, &|x| x, mc)
    }
}

impl StructuralLaws for IfsStructural {
    fn cesaro_gap(&self, a: &State, b: &State, t: f64) -> Result<Estimate> {
        let sa = self.summary(a, t, 1)?;
        let sb = self.summary(b, t, 2)?;
        sa.d_v_between(&sb, self.angle_grid)
    }

    fn cesaro_to_invariant(&self, x: &State, t: f64) -> Result<Estimate> {
        self.summary(x, t, 0)?.d_v_to_invariant(self.angle_grid)
    }

    fn name(&self) -> &str {
        "ifs-torus d_V"
    }
}

fn difference(a: Estimate, b: Estimate) -> Estimate {
    Estimate {
        mean: (a.mean - b.mean).abs(),
        stderr: a.stderr.hypot(b.stderr),
        samples: a.samples.max(b.samples),
        excluded: a.excluded + b.excluded,
    }
}

/// `sup_{f∈𝔉} |⟨f, μ⟩ − ⟨f, ν⟩|` on finitely supported laws.
///
/// Envelope-only families reach the supremum with `f = ±envelope` on the
/// atoms, so it equals `Σ_s |μ(s) − ν(s)| envelope(s)`.
pub fn sup_gap_exact(mu: &SparseDistribution, nu: &SparseDistribution, family: &TestFunctionFamily) -> Result<f64> {
    match family.kind {
        FamilyKind::Growth { .. } | FamilyKind::Alpha { .. } => {
            let env = family.envelope_fn();
            let atoms: std::collections::BTreeSet<&State> = mu.support().chain(nu.support()).collect();
            let mut total = 0.0;
            for s in atoms {
                let w = env(s);
                if !w.is_finite() {
                    return Err(Error::NonFinite { state: s.clone(), value: w });
                }
                total += (mu.weight(s) - nu.weight(s)).abs() * w;
            }
            Ok(total)
        }
        _ => family_sup_gap(mu, nu, family),
    }
}

/// Gap curves `t ↦ gap(x′, x)` over the whole grid for one probe `x′`.
fn gap_curve(
    engine: &Engine<'_>,
    family: &TestFunctionFamily,
    xp: &State,
    x: &State,
    grid: &LimitGridSpec,
    variant: EvcVariant,
    structural: Option<&dyn StructuralLaws>,
) -> Result<Vec<Estimate>> {
    let times = &grid.t_grid;
    if variant.uniform() {
        if let (Some(s), true) = (structural, variant.cesaro()) {
            return times.iter().map(|&t| s.cesaro_gap(xp, x, t)).collect();
        }
        if engine.is_exact() {
            let (a, b) = if variant.cesaro() {
                (engine.cesaro_laws_at(xp, times)?, engine.cesaro_laws_at(x, times)?)
            } else {
                (engine.laws_at(xp, times)?, engine.laws_at(x, times)?)
            };
            return a
                .iter()
                .zip(&b)
                .map(|(m, n)| sup_gap_exact(m, n, family).map(Estimate::exact))
                .collect();
        }
        if matches!(family.kind, FamilyKind::SupNorm { .. } | FamilyKind::Weighted) {
            return Err(Error::Unsupported(format!(
                "uniform {} gaps need exact or structural laws; empirical total variation is degenerate",
                family.name()
            )));
        }
    }
    let mut best = vec![Estimate::exact(0.0); times.len()];
    for rep in family.representatives() {
        let f = &*rep.f;
        let (a, b) = if variant.cesaro() {
            (engine.qtf_curve(xp, times, f)?, engine.qtf_curve(x, times, f)?)
        } else {
            (engine.ptf_curve(xp, times, f)?, engine.ptf_curve(x, times, f)?)
        };
        for (slot, (p, q)) in best.iter_mut().zip(a.into_iter().zip(b)) {
            let d = difference(p, q);
            if d.mean > slot.mean {
                *slot = d;
            }
        }
    }
    Ok(best)
}

/// Estimates `D(r)` for each probe radius and decides whether it vanishes.
///
/// `D(r)` is the largest tail maximum of the gap over the states returned by
/// `neighbors(x, r)`. With no neighbors at radius `r` the point is isolated
/// at that scale and `D(r) = 0`. Pass: every `D(r)` is below `tol`, or the
/// sequence is nonincreasing across at least three radii and ends below it.
#[allow(clippy::too_many_arguments)]
pub fn check_evc(
    engine: &Engine<'_>,
    family: &TestFunctionFamily,
    x: &State,
    neighbors: &dyn Fn(&State, f64) -> Vec<State>,
    grid: &LimitGridSpec,
    variant: EvcVariant,
    structural: Option<&dyn StructuralLaws>,
    tol: f64,
) -> Result<DiagnosticReport> {
    grid.validate()?;
    if grid.probe_radii.len() < MIN_RADII {
        return Err(Error::grid("grid.probe_radii", format!("need at least {MIN_RADII} radii")));
    }
    let mode = match (structural, variant) {
        (Some(_), EvcVariant::UniformCesaro) => "structural",
        _ => engine.mode_name(),
    };
    let mut report = DiagnosticReport::new(variant.condition(), mode)
        .with_grid(grid)
        .tolerance("D(r)", tol);
    if mode == "structural" {
        report.seed = Some(grid.seed);
    }
    report.note(format!("family {} at {x}", family.name()));
    if variant.uniform() && !engine.is_exact() && structural.is_none() {
        report.note("uniform supremum taken over representatives only");
    }
    let tail = grid.tail_range();
    let mut d_values = Vec::with_capacity(grid.probe_radii.len());
    for &r in &grid.probe_radii {
        let probes = neighbors(x, r);
        let mut d = Estimate::exact(0.0);
        if probes.is_empty() {
            report.note(format!("no states within {r} of {x}: D({r}) = 0"));
        }
        for xp in &probes {
            let curve = gap_curve(engine, family, xp, x, grid, variant, structural)?;
            let m = tail_max(&curve[tail.clone()]);
            report.curves.push(Curve::new(format!("gap r={r} x'={xp}"), "t", &grid.t_grid, &curve));
            if m.mean > d.mean {
                d = m;
            }
        }
        d_values.push(d);
    }
    report.curves.push(Curve::new("D", "r", &grid.probe_radii, &d_values));
    let worst = *d_values.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)).expect("radii");
    let last = *d_values.last().expect("radii");
    let decreasing = d_values
        .windows(2)
        .all(|w| w[1].mean <= w[0].mean + MARGIN_SIGMAS * w[0].stderr.hypot(w[1].stderr));
    report.verdict = match below(worst, tol) {
        Verdict::Pass => Verdict::Pass,
        _ if decreasing && below(last, tol) == Verdict::Pass => Verdict::Pass,
        _ if below(last, tol) == Verdict::Fail && !decreasing => Verdict::Fail,
        _ => Verdict::Inconclusive,
    };
    Ok(report.with_statistic(last))
}
