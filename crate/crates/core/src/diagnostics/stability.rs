//! Both sides of the stability equivalences on one model:
//! asymptotic stability ⇔ EvC + (C1) and mean ergodicity ⇔ Cesàro EvC + (C2),
//! each optionally uniform over the family, which brings in (H2).

use serde::{Deserialize, Serialize};

use crate::diagnostics::evc::{check_evc, sup_gap_exact, EvcVariant, StructuralLaws};
use crate::diagnostics::grid::LimitGridSpec;
use crate::diagnostics::lbc::{check_lbc, Lbc, DEFAULT_LBC_FLOOR};
use crate::diagnostics::report::{vanishing_tail, Curve, DiagnosticReport, Verdict};
use crate::diagnostics::ui::{check_uniform_integrability, DEFAULT_UI_TOLERANCE};
use crate::error::{Error, Result};
use crate::markov::{Engine, FamilyKind, TestFunctionFamily};
use crate::models::{InvariantLaw, ModelDescriptor};
use crate::state::State;
use crate::stats::Estimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equivalence {
    /// `P_t` converges.
    Asymptotic,
    /// `Q_t` converges.
    MeanErgodic,
}

pub struct StabilityConfig<'a> {
    pub equivalence: Equivalence,
    pub uniform: bool,
    pub family: TestFunctionFamily,
    /// Starting points for the convergence side, the lower bound condition
    /// and the integrability hypothesis.
    pub probes: Vec<State>,
    /// Point of eventual continuity and center of the lower bound ball.
    pub z: State,
    /// Grid for convergence and EvC; its radii are the EvC probe radii.
    pub grid: LimitGridSpec,
    pub lbc_radii: Vec<f64>,
    /// Grid for (C1)/(C2) and the hypothesis; defaults to `grid`.
    pub lbc_grid: Option<LimitGridSpec>,
    pub k_grid: Vec<f64>,
    /// Tolerance for the convergence gap and for `D(r)`.
    pub tolerance: f64,
    pub structural: Option<&'a dyn StructuralLaws>,
}

impl StabilityConfig<'_> {
    fn condition(&self) -> String {
        let t = match self.equivalence {
            Equivalence::Asymptotic => "as",
            Equivalence::MeanErgodic => "me",
        };
        if self.uniform {
            format!("{t}-equivalence-uniform")
        } else {
            format!("{t}-equivalence")
        }
    }

    fn evc_variant(&self) -> EvcVariant {
        match (self.equivalence, self.uniform) {
            (Equivalence::Asymptotic, false) => EvcVariant::Plain,
            (Equivalence::MeanErgodic, false) => EvcVariant::Cesaro,
            (Equivalence::Asymptotic, true) => EvcVariant::Uniform,
            (Equivalence::MeanErgodic, true) => EvcVariant::UniformCesaro,
        }
    }
}

fn gap_to_invariant(
    model: &ModelDescriptor,
    engine: &Engine<'_>,
    cfg: &StabilityConfig<'_>,
    x: &State,
) -> Result<Vec<Estimate>> {
    let times = &cfg.grid.t_grid;
    let cesaro = cfg.equivalence == Equivalence::MeanErgodic;
    if cfg.uniform {
        if let (InvariantLaw::Sparse(mu), true) = (&model.invariant, engine.is_exact()) {
            let laws = if cesaro {
                engine.cesaro_laws_at(x, times)?
            } else {
                engine.laws_at(x, times)?
            };
            return laws
                .iter()
                .map(|law| sup_gap_exact(law, mu, &cfg.family).map(Estimate::exact))
                .collect();
        }
        if let (Some(s), true) = (cfg.structural, cesaro) {
            return times.iter().map(|&t| s.cesaro_to_invariant(x, t)).collect();
        }
        if matches!(cfg.family.kind, FamilyKind::SupNorm { .. } | FamilyKind::Weighted) {
            return Err(Error::Unsupported(format!(
                "uniform {} distance to the invariant law needs exact or structural laws",
                cfg.family.name()
            )));
        }
    }
    let mut best = vec![Estimate::exact(0.0); times.len()];
    for rep in cfg.family.representatives() {
        let target = model.invariant.integrate(&*rep.f)?;
        let curve = if cesaro {
            engine.qtf_curve(x, times, &*rep.f)?
        } else {
            engine.ptf_curve(x, times, &*rep.f)?
        };
        for (slot, e) in best.iter_mut().zip(curve) {
            let gap = Estimate {
                mean: (e.mean - target).abs(),
                ..e
            };
            if gap.mean > slot.mean {
                *slot = gap;
            }
        }
    }
    Ok(best)
}

/// Left side: `sup_f |P_t f(x) − ⟨f, μ⟩| → 0` (or with `Q_t`) for every probe.
fn convergence_side(model: &ModelDescriptor, engine: &Engine<'_>, cfg: &StabilityConfig<'_>) -> Result<DiagnosticReport> {
    let name = match cfg.equivalence {
        Equivalence::Asymptotic => "asymptotic-stability",
        Equivalence::MeanErgodic => "mean-ergodicity",
    };
    let mode = match (cfg.structural, cfg.equivalence, cfg.uniform) {
        (Some(_), Equivalence::MeanErgodic, true) if !engine.is_exact() => "structural",
        _ => engine.mode_name(),
    };
    let mut report = DiagnosticReport::new(name, mode)
        .with_grid(&cfg.grid)
        .tolerance("gap", cfg.tolerance);
    if mode == "structural" {
        report.seed = Some(cfg.grid.seed);
    }
    if !model.has_invariant() {
        report.note("the model has no invariant probability measure");
        report.verdict = Verdict::Fail;
        return Ok(report);
    }
    let tail = cfg.grid.tail_range();
    let mut verdicts = Vec::new();
    let mut worst: Option<Estimate> = None;
    for x in &cfg.probes {
        let curve = gap_to_invariant(model, engine, cfg, x)?;
        let (v, stat) = vanishing_tail(&curve[tail.clone()], cfg.tolerance);
        report.curves.push(Curve::new(format!("gap x={x}"), "t", &cfg.grid.t_grid, &curve));
        report.note(format!("x = {x}: tail max {:.6e} ± {:.1e} → {}", stat.mean, stat.stderr, v.as_str()));
        verdicts.push(v);
        if worst.is_none_or(|w| stat.mean > w.mean) {
            worst = Some(stat);
        }
    }
    report.verdict = Verdict::all(verdicts);
    Ok(report.with_statistic(worst.expect("probes nonempty")))
}

/// Runs both sides and the integrability hypothesis, and checks that they
/// agree.
///
/// When the hypothesis fails the equivalence says nothing, and the composite
/// verdict is pass with a note. When it holds and the two sides reach
/// opposite decided verdicts, the result is [`Error::Inconsistent`].
pub fn stability_report(model: &ModelDescriptor, cfg: &StabilityConfig<'_>) -> Result<DiagnosticReport> {
    if cfg.probes.is_empty() {
        return Err(Error::ContractViolation("probe set is empty".into()));
    }
    let engine = model.engine(cfg.grid.mc());
    let lbc_grid = cfg.lbc_grid.as_ref().unwrap_or(&cfg.grid);
    let lbc_engine = model.engine(lbc_grid.mc());

    let left = convergence_side(model, &engine, cfg)?;
    let evc = check_evc(
        &engine,
        &cfg.family,
        &cfg.z,
        &model.neighbors,
        &cfg.grid,
        cfg.evc_variant(),
        cfg.structural,
        cfg.tolerance,
    )?;
    let which = match cfg.equivalence {
        Equivalence::Asymptotic => Lbc::C1,
        Equivalence::MeanErgodic => Lbc::C2,
    };
    let lbc = check_lbc(
        &lbc_engine,
        model.metric.as_ref(),
        &cfg.z,
        &cfg.lbc_radii,
        &cfg.probes,
        lbc_grid,
        which,
        DEFAULT_LBC_FLOOR,
    )?;
    let envelope = cfg.family.envelope_fn();
    let hypothesis_name = if cfg.uniform { "H2" } else { "H1" };
    let mut hypotheses = Vec::new();
    for x in &cfg.probes {
        let mut h = check_uniform_integrability(&lbc_engine, x, envelope.as_ref(), &cfg.k_grid, lbc_grid, DEFAULT_UI_TOLERANCE)?;
        h.condition = hypothesis_name.into();
        hypotheses.push(h);
    }

    let right_v = Verdict::all([evc.verdict, lbc.verdict]);
    let hyp_v = Verdict::all(hypotheses.iter().map(|h| h.verdict));
    let left_v = left.verdict;

    let mut report = DiagnosticReport::new(cfg.condition(), left.mode.as_str())
        .with_grid(&cfg.grid)
        .tolerance("gap", cfg.tolerance);
    report.model = Some(model.id.to_string());
    report.seed = left.seed.or(lbc.seed);
    report.note(format!("family {}", cfg.family.name()));
    report.note(format!(
        "convergence: {}; {} + {}: {}; {hypothesis_name}: {}",
        left_v.as_str(),
        evc.condition,
        lbc.condition,
        right_v.as_str(),
        hyp_v.as_str()
    ));
    report.verdict = match hyp_v {
        Verdict::Fail => {
            report.note(format!("{hypothesis_name} fails, so the equivalence is out of scope"));
            Verdict::Pass
        }
        Verdict::Inconclusive => Verdict::Inconclusive,
        Verdict::Pass => match (left_v, right_v) {
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            (a, b) if a == b => Verdict::Pass,
            (a, b) => {
                return Err(Error::Inconsistent(format!(
                    "{} on {}: convergence side {} but EvC/LBC side {}",
                    cfg.condition(),
                    model.id,
                    a.as_str(),
                    b.as_str()
                )))
            }
        },
    };
    report.children.push(left);
    report.children.push(evc);
    report.children.push(lbc);
    report.children.extend(hypotheses);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::ui::default_k_grid;
    use crate::models::{dyadic_chain, parse_family};

    fn dyadic_config(family: &str, equivalence: Equivalence, uniform: bool) -> StabilityConfig<'static> {
        let m = dyadic_chain();
        StabilityConfig {
            equivalence,
            uniform,
            family: parse_family(family, m.metric.clone(), m.v.clone(), &m.default_center).unwrap(),
            probes: vec![State::dyadic(1), State::dyadic(2), State::dyadic(4)],
            z: State::zero(),
            grid: LimitGridSpec::steps(40, vec![16.0, 8.0, 4.0], 2, 0).unwrap(),
            lbc_radii: vec![0.5, 1.0],
            lbc_grid: None,
            k_grid: default_k_grid(),
            tolerance: 1e-2,
            structural: None,
        }
    }

    fn child<'r>(r: &'r DiagnosticReport, name: &str) -> &'r DiagnosticReport {
        r.children.iter().find(|c| c.condition == name).unwrap()
    }

    #[test]
    fn dyadic_square_root_family_agrees() {
        let r = stability_report(&dyadic_chain(), &dyadic_config("alpha:0.5", Equivalence::Asymptotic, false)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(child(&r, "asymptotic-stability").verdict, Verdict::Pass);
        assert_eq!(child(&r, "EvC").verdict, Verdict::Pass);
        assert_eq!(child(&r, "C1").verdict, Verdict::Pass);
    }

    #[test]
    fn dyadic_identity_family_is_out_of_scope() {
        let r = stability_report(&dyadic_chain(), &dyadic_config("alpha:1", Equivalence::Asymptotic, false)).unwrap();
        assert_eq!(child(&r, "asymptotic-stability").verdict, Verdict::Fail);
        assert_eq!(child(&r, "H1").verdict, Verdict::Fail);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.notes.iter().any(|n| n.contains("out of scope")));
    }

    #[test]
    fn dyadic_supnorm_uniform_both_equivalences() {
        let r = stability_report(&dyadic_chain(), &dyadic_config("supnorm", Equivalence::Asymptotic, true)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.notes);
        // Cesàro total variation decays like 2/t, so mean ergodicity needs long horizons
        let mut cfg = dyadic_config("supnorm", Equivalence::MeanErgodic, true);
        assert_eq!(stability_report(&dyadic_chain(), &cfg).unwrap().verdict, Verdict::Inconclusive);
        cfg.grid = LimitGridSpec::new((1..=40).map(|k| f64::from(k * 100)).collect(), vec![16.0, 8.0, 4.0], 2, 0).unwrap();
        cfg.lbc_grid = Some(LimitGridSpec::steps(40, vec![], 2, 0).unwrap());
        let r = stability_report(&dyadic_chain(), &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.notes);
        assert_eq!(child(&r, "mean-ergodicity").verdict, Verdict::Pass);
    }
}
