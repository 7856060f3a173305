//! Ground metrics on the model state spaces.

use std::sync::Arc;

use crate::state::{arc_distance, State};

pub trait Metric: Send + Sync {
    fn distance(&self, a: &State, b: &State) -> f64;

    fn name(&self) -> &str;
}

pub type SharedMetric = Arc<dyn Metric>;

/// `|x - y|` on states with a real-line embedding. Non-embeddable pairs are
/// infinitely far apart.
#[derive(Clone, Copy, Debug, Default)]
pub struct RealLineMetric;

impl Metric for RealLineMetric {
    fn distance(&self, a: &State, b: &State) -> f64 {
        match (a.real_line(), b.real_line()) {
            (Some(x), Some(y)) => (x - y).abs(),
            _ => f64::INFINITY,
        }
    }

    fn name(&self) -> &str {
        "abs"
    }
}

/// `|x - x'| + arc(y, y')` on `ℝ⁺ × 𝕋`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TorusProductMetric;

impl Metric for TorusProductMetric {
    fn distance(&self, a: &State, b: &State) -> f64 {
        match (a, b) {
            (State::Torus(p), State::Torus(q)) => (p.x() - q.x()).abs() + arc_distance(p.y(), q.y()),
            _ => f64::INFINITY,
        }
    }

    fn name(&self) -> &str {
        "torus-product"
    }
}

/// Sup-norm distance between the sequence embeddings
/// `h(i,j,k) = (i, 0, …, 0, 2^{-k}, 0, …)` with `2^{-k}` at position `j + 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LatticeSupMetric;

impl Metric for LatticeSupMetric {
    fn distance(&self, a: &State, b: &State) -> f64 {
        match (a, b) {
            (State::Lattice(p), State::Lattice(q)) => {
                let head = (p.i as f64 - q.i as f64).abs();
                let (mp, mq) = (p.marker(), q.marker());
                let tail = if p.j == q.j {
                    (mp - mq).abs()
                } else {
                    mp.max(mq)
                };
                head.max(tail)
            }
            _ => f64::INFINITY,
        }
    }

    fn name(&self) -> &str {
        "lattice-sup"
    }
}

/// `|i - i'| + |j - j'| + |2^{-k} - 2^{-k'}|` on index triples. Closed balls
/// are compact, so balls of growing radius form a compact exhaustion.
#[derive(Clone, Copy, Debug, Default)]
pub struct LatticeIndexMetric;

impl Metric for LatticeIndexMetric {
    fn distance(&self, a: &State, b: &State) -> f64 {
        match (a, b) {
            (State::Lattice(p), State::Lattice(q)) => {
                (p.i as f64 - q.i as f64).abs()
                    + (p.j as f64 - q.j as f64).abs()
                    + (p.marker() - q.marker()).abs()
            }
            _ => f64::INFINITY,
        }
    }

    fn name(&self) -> &str {
        "lattice-index"
    }
}

/// `χ_{x ≠ y}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DiscreteMetric;

impl Metric for DiscreteMetric {
    fn distance(&self, a: &State, b: &State) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }

    fn name(&self) -> &str {
        "discrete"
    }
}

/// Sum of component distances on pair states.
pub struct PairMetric<M>(pub M);

impl<M: Metric> Metric for PairMetric<M> {
    fn distance(&self, a: &State, b: &State) -> f64 {
        match (a.as_pair(), b.as_pair()) {
            (Some((a1, a2)), Some((b1, b2))) => self.0.distance(a1, b1) + self.0.distance(a2, b2),
            _ => f64::INFINITY,
        }
    }

    fn name(&self) -> &str {
        "pair-sum"
    }
}

/// `min(d, cap)`; the ground cost whose W₁ is dual to bounded-Lipschitz functions.
pub struct TruncatedMetric<'a> {
    pub inner: &'a dyn Metric,
    pub cap: f64,
}

impl Metric for TruncatedMetric<'_> {
    fn distance(&self, a: &State, b: &State) -> f64 {
        self.inner.distance(a, b).min(self.cap)
    }

    fn name(&self) -> &str {
        "truncated"
    }
}

/// Metric from a closure.
pub struct FnMetric<F> {
    name: String,
    f: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&State, &State) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnMetric { name: name.into(), f }
    }
}

impl<F> Metric for FnMetric<F>
where
    F: Fn(&State, &State) -> f64 + Send + Sync,
{
    fn distance(&self, a: &State, b: &State) -> f64 {
        (self.f)(a, b)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_axioms(m: &dyn Metric, a: &State, b: &State, c: &State) {
        let ab = m.distance(a, b);
        assert!(ab >= 0.0);
        assert_eq!(m.distance(a, a), 0.0);
        assert!((ab - m.distance(b, a)).abs() <= 1e-12);
        assert!(m.distance(a, c) <= ab + m.distance(b, c) + 1e-9);
    }

    fn dyadic_state() -> impl Strategy<Value = State> {
        (0u32..30).prop_map(|e| if e == 0 { State::zero() } else { State::dyadic(e) })
    }

    fn torus_state() -> impl Strategy<Value = State> {
        (0.0f64..5.0, -10.0f64..10.0).prop_map(|(x, y)| State::torus(x, y).unwrap())
    }

    fn lattice_state() -> impl Strategy<Value = State> {
        (1u64..6, 0u64..6, proptest::option::of(1u64..8))
            .prop_map(|(i, j, k)| State::lattice(i, j, k).unwrap())
    }

    proptest! {
        #[test]
        fn real_line_axioms(a in dyadic_state(), b in dyadic_state(), c in dyadic_state()) {
            check_axioms(&RealLineMetric, &a, &b, &c);
        }

        #[test]
        fn torus_axioms(a in torus_state(), b in torus_state(), c in torus_state()) {
            check_axioms(&TorusProductMetric, &a, &b, &c);
        }

        #[test]
        fn lattice_axioms(a in lattice_state(), b in lattice_state(), c in lattice_state()) {
            check_axioms(&LatticeSupMetric, &a, &b, &c);
            check_axioms(&LatticeIndexMetric, &a, &b, &c);
        }
    }

    #[test]
    fn lattice_sup_identifies_infinite_marker_rows() {
        // h(i, j, ∞) does not depend on j
        let a = State::lattice(1, 0, None).unwrap();
        let b = State::lattice(1, 7, None).unwrap();
        assert_eq!(LatticeSupMetric.distance(&a, &b), 0.0);
        let c = State::lattice(1, 3, Some(4)).unwrap();
        assert_eq!(LatticeSupMetric.distance(&a, &c), 1.0 / 16.0);
        assert_eq!(LatticeIndexMetric.distance(&a, &c), 3.0 + 1.0 / 16.0);
    }
}
