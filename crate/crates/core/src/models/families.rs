//! Named test-function families.
//!
//! Ids: `supnorm`, `lip-bounded[:r]`, `growth:p`, `alpha:a`, `weighted`.

use crate::error::{Error, Result};
use crate::markov::{FamilyKind, SharedFn, TestFunctionFamily};
use crate::metric::SharedMetric;
use crate::state::State;

pub const FAMILY_IDS: [&str; 5] = ["supnorm", "lip-bounded[:r]", "growth:p", "alpha:a", "weighted"];

fn parameter(id: &str, raw: Option<&str>, default: Option<f64>) -> Result<f64> {
    match (raw, default) {
        (Some(s), _) => s.parse::<f64>().map_err(|_| Error::UnknownId {
            kind: "family",
            id: id.to_string(),
        }),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(Error::Parse(format!("family `{id}` needs a parameter"))),
    }
}

/// Parses a family id. `base` anchors growth envelopes and distance probes.
pub fn parse_family(id: &str, metric: SharedMetric, v: SharedFn, base: &State) -> Result<TestFunctionFamily> {
    let (name, raw) = match id.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (id, None),
    };
    let kind = match name {
        "supnorm" => FamilyKind::SupNorm {
            bound: parameter(id, raw, Some(1.0))?,
        },
        "lip-bounded" => FamilyKind::LipBounded {
            bound: parameter(id, raw, Some(1.0))?,
        },
        "growth" => FamilyKind::Growth {
            exponent: parameter(id, raw, None)?,
            base: base.clone(),
        },
        "alpha" => FamilyKind::Alpha {
            alpha: parameter(id, raw, None)?,
        },
        "weighted" if raw.is_none() => FamilyKind::Weighted,
        _ => {
            return Err(Error::UnknownId {
                kind: "family",
                id: id.to_string(),
            })
        }
    };
    Ok(TestFunctionFamily::new(kind, metric, v)?.with_anchor(base.clone()))
}

/// `supnorm`, `lip-bounded:1`, `growth:1`, `alpha:0.5` and `weighted`.
pub fn family_presets(metric: SharedMetric, v: SharedFn, base: &State) -> Vec<TestFunctionFamily> {
    ["supnorm", "lip-bounded:1", "growth:1", "alpha:0.5", "weighted"]
        .into_iter()
        .map(|id| parse_family(id, metric.clone(), v.clone(), base).expect("preset ids parse"))
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::metric::RealLineMetric;
    use crate::models::dyadic::identity_v;

    fn parse(id: &str) -> Result<TestFunctionFamily> {
        parse_family(id, Arc::new(RealLineMetric), Arc::new(identity_v), &State::zero())
    }

    #[test]
    fn ids_round_trip_to_kinds() {
        assert_eq!(parse("alpha:0.25").unwrap().kind, FamilyKind::Alpha { alpha: 0.25 });
        assert_eq!(parse("supnorm").unwrap().kind, FamilyKind::SupNorm { bound: 1.0 });
        assert_eq!(parse("lip-bounded:3").unwrap().kind, FamilyKind::LipBounded { bound: 3.0 });
        assert!(parse("growth").is_err());
        assert!(parse("alpha:x").is_err());
        assert!(parse("weighted:2").is_err());
        assert!(parse("sobolev").is_err());
    }

    #[test]
    fn growth_envelope_on_dyadic_states() {
        let fam = parse("growth:1").unwrap();
        for i in 1..40 {
            let s = State::dyadic(i);
            for rep in fam.representatives() {
                assert!(rep.eval(&s).abs() <= 1.0 + s.real_line().unwrap());
            }
        }
    }

    #[test]
    fn presets_cover_every_kind() {
        let p = family_presets(Arc::new(RealLineMetric), Arc::new(identity_v), &State::zero());
        assert_eq!(p.len(), 5);
    }
}
