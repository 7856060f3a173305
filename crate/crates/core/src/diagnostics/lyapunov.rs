//! Uniform moment bound from a drift inequality `ℒV ≤ −φ(V) + C`.
//!
//! `f(t) = E φ(V(Φ_t))` is dominated by the solution of
//! `f′ = (C − f) φ′(φ^{−1}(f))`, `f(0) = φ(V(x))`, which moves monotonically
//! to its only fixed point `C`.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use ode_solvers::{Dopri5, System, Vector1};
use serde::Serialize;

use crate::diagnostics::report::{Curve, DiagnosticReport, Verdict};
use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const ODE_RTOL: f64 = 1e-8;
pub const ODE_ATOL: f64 = 1e-12;
/// Points used for the sampled concavity and monotonicity checks.
pub const SHAPE_SAMPLES: usize = 512;

#[derive(Clone)]
pub struct LyapunovSpec {
    pub phi: RealFn,
    pub phi_prime: RealFn,
    pub c: f64,
    /// `U₀ = φ(V(x))`.
    pub u0: f64,
}

impl fmt::Debug for LyapunovSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LyapunovSpec").field("c", &self.c).field("u0", &self.u0).finish()
    }
}

impl LyapunovSpec {
    pub fn new(phi: RealFn, phi_prime: RealFn, c: f64, u0: f64) -> Self {
        LyapunovSpec { phi, phi_prime, c, u0 }
    }

    /// `φ(v) = v`.
    pub fn linear(c: f64, u0: f64) -> Self {
        Self::new(Arc::new(|v| v), Arc::new(|_| 1.0), c, u0)
    }

    /// `φ(v) = log(1 + v)`.
    pub fn log1p(c: f64, u0: f64) -> Self {
        Self::new(Arc::new(f64::ln_1p), Arc::new(|v| 1.0 / (1.0 + v)), c, u0)
    }

    /// `φ(v) = v^p` for `0 < p ≤ 1`.
    pub fn power(p: f64, c: f64, u0: f64) -> Self {
        Self::new(Arc::new(move |v: f64| v.powf(p)), Arc::new(move |v: f64| p * v.powf(p - 1.0)), c, u0)
    }

    /// `φ^{−1}(f)` by bisection on `[0, v_max]`.
    pub fn phi_inverse(&self, f: f64) -> Result<f64> {
        let phi = &self.phi;
        if !f.is_finite() {
            return Err(Error::Domain(format!("φ^(-1)({f}) is undefined")));
        }
        if phi(0.0) > f {
            return Err(Error::Domain(format!("{f} is below φ(0) = {}", phi(0.0))));
        }
        let mut hi = 1.0;
        while phi(hi) < f {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Domain(format!("φ never reaches {f}")));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if phi(mid) < f {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::ContractViolation(format!("C must be finite and nonnegative, got {}", self.c)));
        }
        if !(self.u0 >= 0.0 && self.u0.is_finite()) {
            return Err(Error::ContractViolation(format!("U0 must be finite and nonnegative, got {}", self.u0)));
        }
        let top = self.phi_inverse(self.u0.max(self.c))?.max(1.0);
        let h = top / SHAPE_SAMPLES as f64;
        let vals: Vec<f64> = (0..=SHAPE_SAMPLES).map(|i| (self.phi)(i as f64 * h)).collect();
        if vals[0] < 0.0 || vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::ContractViolation("φ must be finite and nonnegative".into()));
        }
        for (i, w) in vals.windows(3).enumerate() {
            let second = w[0] - 2.0 * w[1] + w[2];
            if second > 1e-9 * (1.0 + w[1].abs()) {
                return Err(Error::ContractViolation(format!(
                    "φ is not concave near v = {:.6}: second difference {second:.3e}",
                    (i + 1) as f64 * h
                )));
            }
        }
        for i in 1..=SHAPE_SAMPLES {
            let d = (self.phi_prime)(i as f64 * h);
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::ContractViolation(format!("φ′({:.6}) = {d} is not positive", i as f64 * h)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovBound {
    /// `max_{[0, t_max]} f`, which dominates `sup_t E φ(V(Φ_t))`.
    pub bound: f64,
    pub terminal: f64,
    pub fixed_point: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Monotone in the direction of `C`.
    pub monotone: bool,
    /// Whether the trajectory ever passes to the other side of `C`.
    pub crosses_fixed_point: bool,
}

struct Comparison<'a> {
    spec: &'a LyapunovSpec,
    failure: &'a RefCell<Option<Error>>,
}

impl System<f64, Vector1<f64>> for Comparison<'_> {
    fn system(&self, _t: f64, y: &Vector1<f64>, dy: &mut Vector1<f64>) {
        let f = y[0];
        let rate = self
            .spec
            .phi_inverse(f)
            .map(|v| (self.spec.phi_prime)(v))
            .and_then(|d| {
                if d.is_finite() {
                    Ok(d)
                } else {
                    Err(Error::Domain(format!("φ′(φ^(-1)({f})) = {d}")))
                }
            });
        dy[0] = match rate {
            Ok(d) => (self.spec.c - f) * d,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                0.0
            }
        };
    }
}

/// Integrates the comparison ODE on `[0, t_max]` with output every `step`.
pub fn lyapunov_bound(spec: &LyapunovSpec, t_max: f64, step: f64) -> Result<LyapunovBound> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::grid("step", format!("{step} must be positive")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::grid("t_max", format!("{t_max} must be positive")));
    }
    spec.validate()?;
    let failure = RefCell::new(None);
    let system = Comparison { spec, failure: &failure };
    let mut solver = Dopri5::new(system, 0.0, t_max, step, Vector1::new(spec.u0), ODE_RTOL, ODE_ATOL);
    let outcome = solver.integrate();
    let times = solver.x_out().clone();
    let values: Vec<f64> = solver.y_out().iter().map(|y| y[0]).collect();
    drop(solver);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    outcome.map_err(|e| Error::Solver(format!("{e:?}")))?;
    let c = spec.c;
    let slack = 1e-9 * (1.0 + c.abs());
    let up = spec.u0 <= c;
    let monotone = values
        .windows(2)
        .all(|w| if up { w[1] >= w[0] - slack } else { w[1] <= w[0] + slack });
    let crosses_fixed_point = values.iter().any(|&v| if up { v > c + slack } else { v < c - slack });
    let bound = values.iter().copied().fold(spec.u0, f64::max);
    Ok(LyapunovBound {
        bound,
        terminal: *values.last().expect("nonempty output"),
        fixed_point: c,
        times,
        values,
        monotone,
        crosses_fixed_point,
    })
}

/// Wraps [`lyapunov_bound`] as a report: pass when the trajectory is
/// monotone and never crosses `C`.
pub fn lyapunov_report(spec: &LyapunovSpec, t_max: f64, step: f64) -> Result<DiagnosticReport> {
    let b = lyapunov_bound(spec, t_max, step)?;
    let mut r = DiagnosticReport::new("lyapunov", "exact")
        .tolerance("rtol", ODE_RTOL)
        .with_statistic(crate::stats::Estimate::exact(b.bound));
    r.curves.push(Curve::exact("f", "t", &b.times, &b.values));
    r.note(format!("terminal value {:.10}, fixed point {}", b.terminal, b.fixed_point));
    r.verdict = if b.monotone && !b.crosses_fixed_point {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(r)
}
