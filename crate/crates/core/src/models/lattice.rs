//! Chain on index triples `(i, j, k)` with no invariant law: every transition
//! raises `j` by one.
//!
//! From `(i, j, k)`: to `(i, j+1, k+1)` with `p₁(k)`, to `(i+1, j+1, k)` with
//! `p₂(i, k)`, and to `(1, j+1, 1)` otherwise. The default parameters are our
//! own instantiation, not a canonical choice.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::markov::CountableKernel;
use crate::state::{LatticePoint, State};

/// `p₁(k)`, with `k = None` meaning `∞`.
pub type P1 = Arc<dyn Fn(Option<u64>) -> f64 + Send + Sync>;
/// `p₂(i, k)`.
pub type P2 = Arc<dyn Fn(u64, Option<u64>) -> f64 + Send + Sync>;

/// Indices on which the parameters are checked when the kernel is built.
pub const VALIDATION_RANGE: u64 = 64;

#[derive(Clone)]
pub struct LatticeKernel {
    p1: P1,
    p2: P2,
}

impl fmt::Debug for LatticeKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LatticeKernel")
    }
}

fn bad(i: u64, k: Option<u64>, reason: String) -> Error {
    let k = k.map_or("∞".to_string(), |k| k.to_string());
    Error::ContractViolation(format!("lattice parameters at (i={i}, k={k}): {reason}"))
}

fn check(p1: f64, p2: f64, i: u64, k: Option<u64>) -> Result<()> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(bad(i, k, format!("{name} = {p} outside [0, 1]")));
        }
    }
    if p1 + p2 > 1.0 + 1e-12 {
        return Err(bad(i, k, format!("p1 + p2 = {} exceeds 1", p1 + p2)));
    }
    Ok(())
}

impl LatticeKernel {
    /// Checks `p₁(k) + p₂(i, k) ≤ 1` on `i, k ≤ 64` and `k = ∞`.
    pub fn new(p1: P1, p2: P2) -> Result<Self> {
        let ks = (1..=VALIDATION_RANGE).map(Some).chain(std::iter::once(None));
        for k in ks {
            for i in 1..=VALIDATION_RANGE {
                check(p1(k), p2(i, k), i, k)?;
            }
        }
        Ok(LatticeKernel { p1, p2 })
    }

    /// `p₁(k) = 1 − 2^{−k}`, `p₂(i, k) = 2^{−k−i−1}`.
    pub fn default_parameters() -> Self {
        let p1: P1 = Arc::new(|k| match k {
            None => 1.0,
            Some(k) => 1.0 - (-(k.min(2000) as f64)).exp2(),
        });
        let p2: P2 = Arc::new(|i, k| match k {
            None => 0.0,
            Some(k) => (-((k + i + 1).min(2000) as f64)).exp2(),
        });
        LatticeKernel::new(p1, p2).expect("default parameters are valid")
    }
}

impl CountableKernel for LatticeKernel {
    fn row(&self, state: &State) -> Result<Vec<(State, f64)>> {
        let State::Lattice(LatticePoint { i, j, k }) = *state else {
            return Err(Error::KernelInvalid {
                state: state.clone(),
                reason: "not a lattice state".into(),
            });
        };
        let (a, b) = ((self.p1)(k), (self.p2)(i, k));
        check(a, b, i, k)?;
        let j1 = j + 1;
        let candidates = [
            (State::lattice(i, j1, k.map(|k| k + 1))?, a),
            (State::lattice(i + 1, j1, k)?, b),
            (State::lattice(1, j1, Some(1))?, (1.0 - a - b).max(0.0)),
        ];
        let mut row: Vec<(State, f64)> = Vec::with_capacity(3);
        for (s, p) in candidates {
            if p <= 0.0 {
                continue;
            }
            match row.iter_mut().find(|(t, _)| *t == s) {
                Some(entry) => entry.1 += p,
                None => row.push((s, p)),
            }
        }
        Ok(row)
    }
}

/// A few lattice states at index distance about `r` from `x`.
pub fn neighbors(x: &State, r: f64) -> Vec<State> {
    let State::Lattice(p) = x else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let step = r.floor() as u64;
    if step >= 1 {
        out.push(State::lattice(p.i + step, p.j, p.k).unwrap());
        out.push(State::lattice(p.i, p.j + step, p.k).unwrap());
    }
    // moving k changes the marker by at most 2^{-k}
    if let Some(k) = p.k {
        out.push(State::lattice(p.i, p.j, Some(k + 1)).unwrap());
    }
    out.retain(|s| s != x);
    out
}
