//! Initial law `ν(2^{2m}) = c/m²`, `c = 6/π²`, for which `⟨V^{1/2}, ν⟩ = ∞`
//! under the dyadic chain with `V(x) = x`.
//!
//! From `2^{2m}` the chain is at `2^{2m+n}` with probability `2^{−n}` after
//! `n` steps, so
//! `⟨V^{1/2}, P_n^*ν⟩ = c 2^{−n} Σ_m 2^{m + n/2}/m² = c 2^{−n/2} Σ_m 2^m/m²`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::SparseDistribution;
use crate::state::State;

/// `c = (Σ 1/m²)^{-1} = 6/π²`.
pub const C_NU: f64 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);

/// `ν` restricted to `m ≤ m_max`; the missing tail mass `Σ_{m>M} c/m²` is
/// put on `0`, where `V^{1/2}` vanishes.
pub fn truncated_nu(m_max: u32) -> Result<SparseDistribution> {
    if m_max == 0 || 2 * m_max > 1000 {
        return Err(Error::ContractViolation(format!("truncation level must lie in 1..=500, got {m_max}")));
    }
    let mut atoms: Vec<(State, f64)> = (1..=m_max)
        .map(|m| (State::dyadic(2 * m), C_NU / (m as f64 * m as f64)))
        .collect();
    let kept: f64 = atoms.iter().map(|a| a.1).sum();
    atoms.push((State::zero(), 1.0 - kept));
    SparseDistribution::new(atoms)
}

/// `Σ_{m=1}^{M} 2^m/m²` as an exact rational.
pub fn power_sum_exact(m_max: u32) -> BigRational {
    let mut total = BigRational::zero();
    for m in 1..=m_max {
        let num = BigInt::one() << m as usize;
        let den = BigInt::from(m) * BigInt::from(m);
        total += BigRational::new(num, den);
    }
    total
}

/// `S(n, M) = c 2^{−n/2} Σ_{m≤M} 2^m/m²`, the `V^{1/2}`-moment of `P_n^*ν_M`.
pub fn partial_moment(n: u32, m_max: u32) -> f64 {
    let sum = power_sum_exact(m_max).to_f64().unwrap_or(f64::INFINITY);
    C_NU * (-(n as f64) / 2.0).exp2() * sum
}

/// Rational upper bound on `π²`.
fn pi_squared_upper() -> BigRational {
    BigRational::new(BigInt::from(98_696_044_011u64), BigInt::from(10_000_000_000u64))
}

/// Rational upper bound on `√2`.
fn sqrt2_upper() -> BigRational {
    BigRational::new(BigInt::from(141_421_356_238u64), BigInt::from(100_000_000_000u64))
}

/// Certified first crossing of `threshold` by `M ↦ S(n, M)`.
#[derive(Clone, Debug, Serialize)]
pub struct DivergenceCertificate {
    pub n: u32,
    pub threshold: f64,
    /// Smallest `M` with `S(n, M) > threshold`, certified in rational
    /// arithmetic against upper bounds of `π²` and `√2`.
    pub first_crossing: Option<u32>,
    pub searched_to: u32,
    /// `(M, S(n, M))` for `M = 1..=searched_to`.
    pub partial_sums: Vec<(u32, f64)>,
    /// Every summand is positive, so the sequence increases strictly, and
    /// `2^m/m² ≥ 1` makes it unbounded.
    pub strictly_increasing: bool,
}

/// Searches `M = 1..=m_cap` for the first certified crossing.
pub fn divergence_certificate(n: u32, threshold: f64, m_cap: u32) -> Result<DivergenceCertificate> {
    let thr = BigRational::from_float(threshold)
        .filter(|t| *t > BigRational::zero())
        .ok_or_else(|| Error::ContractViolation(format!("threshold must be positive and finite, got {threshold}")))?;
    // S > thr  ⇐  6 Σ > thr · π²₊ · 2^{n/2}₊
    let mut scale = thr * pi_squared_upper() * BigRational::from_integer(BigInt::one() << (n / 2) as usize);
    if n % 2 == 1 {
        scale *= sqrt2_upper();
    }
    let six = BigRational::from_integer(BigInt::from(6));
    let mut sum = BigRational::zero();
    let mut first_crossing = None;
    let mut partial_sums = Vec::with_capacity(m_cap as usize);
    let mut strictly_increasing = true;
    let mut previous = f64::NEG_INFINITY;
    for m in 1..=m_cap {
        sum += BigRational::new(BigInt::one() << m as usize, BigInt::from(m) * BigInt::from(m));
        let value = C_NU * (-(n as f64) / 2.0).exp2() * sum.to_f64().unwrap_or(f64::INFINITY);
        strictly_increasing &= value > previous;
        previous = value;
        partial_sums.push((m, value));
        if first_crossing.is_none() && &six * &sum > scale {
            first_crossing = Some(m);
        }
    }
    Ok(DivergenceCertificate {
        n,
        threshold,
        first_crossing,
        searched_to: m_cap,
        partial_sums,
        strictly_increasing,
    })
}
