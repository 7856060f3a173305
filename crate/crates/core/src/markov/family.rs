//! Test-function families and their finite representative sets.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::SharedMetric;
use crate::state::State;

pub type StateFn<'a> = dyn Fn(&State) -> f64 + Send + Sync + 'a;
pub type SharedFn = Arc<StateFn<'static>>;

/// Truncation levels `K = 2^0, 2^2, …, 2^20` used for `±min(envelope, K)`.
pub const TRUNCATION_LADDER: [u32; 11] = [0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20];

/// Which class of test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyKind {
    /// 1-Lipschitz functions with `‖f‖∞ ≤ bound`.
    LipBounded { bound: f64 },
    /// `‖f‖∞ ≤ bound`.
    SupNorm { bound: f64 },
    /// `|f(x)| ≤ 1 + ρ(x₀, x)^p`.
    Growth { exponent: f64, base: State },
    /// `|f| ≤ V^α`.
    Alpha { alpha: f64 },
    /// `|f| ≤ 1 + V`.
    Weighted,
}

/// One member function with a stable id.
#[derive(Clone)]
pub struct NamedFn {
    pub id: String,
    pub f: SharedFn,
}

impl NamedFn {
    pub fn new(id: impl Into<String>, f: impl Fn(&State) -> f64 + Send + Sync + 'static) -> Self {
        NamedFn {
            id: id.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, s: &State) -> f64 {
        (self.f)(s)
    }
}

impl fmt::Debug for NamedFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NamedFn({})", self.id)
    }
}

/// A test-function family bound to a metric and a Lyapunov-type weight `V`.
#[derive(Clone)]
pub struct TestFunctionFamily {
    pub kind: FamilyKind,
    metric: SharedMetric,
    v: SharedFn,
    /// Anchor for distance-based members.
    anchor: Option<State>,
}

impl fmt::Debug for TestFunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunctionFamily")
            .field("kind", &self.kind)
            .field("metric", &self.metric.name())
            .field("anchor", &self.anchor)
            .finish()
    }
}

impl TestFunctionFamily {
    pub fn new(kind: FamilyKind, metric: SharedMetric, v: SharedFn) -> Result<Self> {
        match &kind {
            FamilyKind::LipBounded { bound } | FamilyKind::SupNorm { bound } if !(*bound > 0.0 && bound.is_finite()) => {
                return Err(Error::ContractViolation(format!("family bound must be positive, got {bound}")));
            }
            FamilyKind::Growth { exponent, .. } if !(*exponent > 0.0 && exponent.is_finite()) => {
                return Err(Error::ContractViolation(format!("growth exponent must be positive, got {exponent}")));
            }
            FamilyKind::Alpha { alpha } if !(*alpha >= 0.0 && alpha.is_finite()) => {
                return Err(Error::ContractViolation(format!("alpha must be nonnegative, got {alpha}")));
            }
            _ => {}
        }
        Ok(TestFunctionFamily {
            kind,
            metric,
            v,
            anchor: None,
        })
    }

    pub fn with_anchor(mut self, anchor: State) -> Self {
        self.anchor = Some(anchor);
        self
    }

    pub fn metric(&self) -> &SharedMetric {
        &self.metric
    }

    pub fn weight(&self) -> &SharedFn {
        &self.v
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FamilyKind::LipBounded { bound } => format!("lip-bounded({bound})"),
            FamilyKind::SupNorm { bound } => format!("supnorm({bound})"),
            FamilyKind::Growth { exponent, base } => format!("growth({exponent}, {base})"),
            FamilyKind::Alpha { alpha } => format!("alpha({alpha})"),
            FamilyKind::Weighted => "weighted".to_string(),
        }
    }

    /// Pointwise bound `sup_{f∈𝔉} |f(x)|`.
    pub fn envelope(&self, x: &State) -> f64 {
        envelope_fn(&self.kind, &self.metric, &self.v)(x)
    }

    /// The envelope as a standalone function.
    pub fn envelope_fn(&self) -> SharedFn {
        let f = envelope_fn(&self.kind, &self.metric, &self.v);
        Arc::from(f)
    }

    /// Finite member list used by the estimators.
    pub fn representatives(&self) -> Vec<NamedFn> {
        let env: SharedFn = self.envelope_fn();
        let mut reps = Vec::new();
        match &self.kind {
            FamilyKind::LipBounded { bound } => {
                let r = *bound;
                reps.push(NamedFn::new("const", move |_| r));
                reps.push(NamedFn::new("coord0", move |s: &State| {
                    s.coordinates().first().copied().unwrap_or(0.0).clamp(-r, r)
                }));
                if let Some(a) = self.anchor.clone() {
                    let m = self.metric.clone();
                    reps.push(NamedFn::new("dist-anchor", move |s: &State| m.distance(s, &a).min(r)));
                }
            }
            _ => {
                let e = env.clone();
                reps.push(NamedFn::new("envelope", move |s: &State| e(s)));
                let e = env.clone();
                reps.push(NamedFn::new("neg-envelope", move |s: &State| -e(s)));
                for p in TRUNCATION_LADDER {
                    let k = f64::from(1u32 << p);
                    let e = env.clone();
                    reps.push(NamedFn::new(format!("envelope-min-2^{p}"), move |s: &State| e(s).min(k)));
                }
                for c in 0..2usize {
                    let e = env.clone();
                    reps.push(NamedFn::new(format!("cos-coord{c}"), move |s: &State| {
                        e(s) * s.coordinates().get(c).copied().unwrap_or(0.0).cos()
                    }));
                }
                if let Some(a) = self.anchor.clone() {
                    let m = self.metric.clone();
                    let e = env.clone();
                    reps.push(NamedFn::new("bump-anchor", move |s: &State| {
                        e(s) * (1.0 - m.distance(s, &a)).max(0.0)
                    }));
                }
            }
        }
        reps
    }

    /// Value of the representative `id` at `x`.
    pub fn evaluate(&self, id: &str, x: &State) -> Result<f64> {
        self.representatives()
            .into_iter()
            .find(|r| r.id == id)
            .map(|r| r.eval(x))
            .ok_or_else(|| Error::UnknownId {
                kind: "function",
                id: id.to_string(),
            })
    }
}

fn envelope_fn(kind: &FamilyKind, metric: &SharedMetric, v: &SharedFn) -> Box<StateFn<'static>> {
    match kind.clone() {
        FamilyKind::LipBounded { bound } | FamilyKind::SupNorm { bound } => Box::new(move |_| bound),
        FamilyKind::Growth { exponent, base } => {
            let m = metric.clone();
            Box::new(move |s| 1.0 + m.distance(&base, s).powf(exponent))
        }
        FamilyKind::Alpha { alpha } => {
            let v = v.clone();
            Box::new(move |s| v(s).powf(alpha))
        }
        FamilyKind::Weighted => {
            let v = v.clone();
            Box::new(move |s| 1.0 + v(s))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::RealLineMetric;

    fn identity_v() -> SharedFn {
        Arc::new(|s: &State| s.real_line().unwrap_or(0.0))
    }

    fn dyadic_states() -> Vec<State> {
        std::iter::once(State::zero()).chain((1..40).map(State::dyadic)).collect()
    }

    #[test]
    fn representatives_respect_envelope() {
        let kinds = vec![
            FamilyKind::SupNorm { bound: 1.0 },
            FamilyKind::LipBounded { bound: 2.0 },
            FamilyKind::Growth { exponent: 1.0, base: State::zero() },
            FamilyKind::Alpha { alpha: 0.5 },
            FamilyKind::Weighted,
        ];
        for kind in kinds {
            let fam = TestFunctionFamily::new(kind, Arc::new(RealLineMetric), identity_v())
                .unwrap()
                .with_anchor(State::dyadic(1));
            for rep in fam.representatives() {
                for s in dyadic_states() {
                    assert!(rep.eval(&s).abs() <= fam.envelope(&s) * (1.0 + 1e-12), "{} at {s}", rep.id);
                }
            }
        }
    }

    #[test]
    fn alpha_envelope_is_attained() {
        let fam = TestFunctionFamily::new(FamilyKind::Alpha { alpha: 0.5 }, Arc::new(RealLineMetric), identity_v()).unwrap();
        assert_eq!(fam.evaluate("envelope", &State::dyadic(4)).unwrap(), 4.0);
        assert!(fam.evaluate("nope", &State::zero()).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TestFunctionFamily::new(FamilyKind::SupNorm { bound: 0.0 }, Arc::new(RealLineMetric), identity_v()).is_err());
        assert!(TestFunctionFamily::new(FamilyKind::Alpha { alpha: -1.0 }, Arc::new(RealLineMetric), identity_v()).is_err());
    }
}
