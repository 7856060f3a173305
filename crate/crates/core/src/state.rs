//! States of the supported model spaces.
//!
//! Three concrete spaces are represented: the dyadic lattice `{0} ∪ {2^i : i ≥ 1}`,
//! the half-line times circle `ℝ⁺ × 𝕋`, and the index triples `(i, j, k)` with
//! `k ∈ ℤ⁺ ∪ {∞}`. `Real` is a plain real number for measures that live
//! outside those spaces, and `Pair` holds the two components of a coupled chain.
//!
//! States serialize as their display string (`"0"`, `"2^5"`, `"(0.5, 3.1)"`,
//! `"(1,4,inf)"`, `"real(1.5)"`, `"<2^1 | 0>"`) and parse back losslessly.

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Element of `{0} ∪ {2^i : i ≥ 1}`, stored as exponent-or-zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dyadic {
    Zero,
    Pow(u32),
}

impl Dyadic {
    pub fn pow(exponent: u32) -> Result<Self> {
        if exponent == 0 {
            return Err(Error::ContractViolation(
                "dyadic exponent must be at least 1 (2^0 = 1 is not a state)".into(),
            ));
        }
        Ok(Dyadic::Pow(exponent))
    }

    /// Parses a plain value such as `0`, `2`, `1024`; rejects non powers of two.
    pub fn from_value(value: f64) -> Result<Self> {
        if value == 0.0 {
            return Ok(Dyadic::Zero);
        }
        if !(value.is_finite() && value >= 2.0) {
            return Err(Error::Parse(format!("{value} is not a dyadic state")));
        }
        let exp = value.log2().round();
        if (2f64).powi(exp as i32) != value {
            return Err(Error::Parse(format!("{value} is not a power of two")));
        }
        Dyadic::pow(exp as u32)
    }

    pub fn exponent(self) -> Option<u32> {
        match self {
            Dyadic::Zero => None,
            Dyadic::Pow(i) => Some(i),
        }
    }

    /// Numeric value; exact for every representable exponent.
    pub fn value(self) -> f64 {
        match self {
            Dyadic::Zero => 0.0,
            Dyadic::Pow(i) => exp2_exact(i as i64),
        }
    }
}

/// `2^e` built from the bit pattern, exact over the normal range.
pub(crate) fn exp2_exact(e: i64) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e < -1022 {
        (2f64).powi(e as i32)
    } else {
        f64::from_bits(((e + 1023) as u64) << 52)
    }
}

/// Point of `ℝ⁺ × 𝕋`; the angle is kept in `[0, 2π)`.
#[derive(Clone, Copy, Debug)]
pub struct TorusPoint {
    x: f64,
    y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::ContractViolation(format!(
                "torus point needs a finite nonnegative radial coordinate, got {x}"
            )));
        }
        if !y.is_finite() {
            return Err(Error::ContractViolation(format!("non-finite angle {y}")));
        }
        // -0.0 would break bitwise equality with 0.0
        Ok(TorusPoint {
            x: x + 0.0,
            y: normalize_angle(y),
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn normalize_angle(y: f64) -> f64 {
    let r = y.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r + 0.0
    }
}

/// Shorter arc between two angles, in `[0, π]`.
pub fn arc_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

impl PartialEq for TorusPoint {
    fn eq(&self, other: &Self) -> bool {
        self.x.to_bits() == other.x.to_bits() && self.y.to_bits() == other.y.to_bits()
    }
}

impl Eq for TorusPoint {}

impl Hash for TorusPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.x.to_bits().hash(state);
        self.y.to_bits().hash(state);
    }
}

impl Ord for TorusPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl PartialOrd for TorusPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Finite point of the real line, for measures built outside the model spaces.
#[derive(Clone, Copy, Debug)]
pub struct RealPoint(f64);

impl RealPoint {
    pub fn new(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::ContractViolation(format!("non-finite real state {v}")));
        }
        Ok(RealPoint(v + 0.0))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl PartialEq for RealPoint {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for RealPoint {}

impl Hash for RealPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl Ord for RealPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for RealPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Index triple `(i, j, k)`; `k = None` stands for `k = ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub i: u64,
    pub j: u64,
    pub k: Option<u64>,
}

impl LatticePoint {
    pub fn new(i: u64, j: u64, k: Option<u64>) -> Result<Self> {
        if i == 0 {
            return Err(Error::ContractViolation("lattice index i must be positive".into()));
        }
        if k == Some(0) {
            return Err(Error::ContractViolation("lattice index k must be positive or ∞".into()));
        }
        Ok(LatticePoint { i, j, k })
    }

    /// `2^{-k}`, with `2^{-∞} = 0`.
    pub fn marker(&self) -> f64 {
        match self.k {
            None => 0.0,
            Some(k) => exp2_exact(-(k.min(2000) as i64)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    Dyadic(Dyadic),
    Torus(TorusPoint),
    Lattice(LatticePoint),
    Real(RealPoint),
    Pair(Box<State>, Box<State>),
}

impl State {
    pub fn zero() -> State {
        State::Dyadic(Dyadic::Zero)
    }

    /// The dyadic state `2^exponent`.
    pub fn dyadic(exponent: u32) -> State {
        State::Dyadic(Dyadic::pow(exponent).expect("dyadic exponent must be >= 1"))
    }

    pub fn torus(x: f64, y: f64) -> Result<State> {
        TorusPoint::new(x, y).map(State::Torus)
    }

    pub fn lattice(i: u64, j: u64, k: Option<u64>) -> Result<State> {
        LatticePoint::new(i, j, k).map(State::Lattice)
    }

    pub fn real(v: f64) -> Result<State> {
        RealPoint::new(v).map(State::Real)
    }

    pub fn pair(a: State, b: State) -> State {
        State::Pair(Box::new(a), Box::new(b))
    }

    pub fn as_pair(&self) -> Option<(&State, &State)> {
        match self {
            State::Pair(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Position on the real line, when the state space embeds there.
    pub fn real_line(&self) -> Option<f64> {
        match self {
            State::Dyadic(d) => Some(d.value()),
            State::Real(r) => Some(r.0),
            _ => None,
        }
    }

    /// Numeric coordinates used by coordinate and cosine probe functions.
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            State::Dyadic(d) => vec![d.value()],
            State::Torus(p) => vec![p.x, p.y],
            State::Lattice(l) => vec![l.i as f64, l.j as f64, l.marker()],
            State::Real(r) => vec![r.0],
            State::Pair(a, b) => {
                let mut c = a.coordinates();
                c.extend(b.coordinates());
                c
            }
        }
    }

    pub fn space_name(&self) -> &'static str {
        match self {
            State::Dyadic(_) => "dyadic",
            State::Torus(_) => "torus",
            State::Lattice(_) => "lattice",
            State::Real(_) => "real",
            State::Pair(..) => "pair",
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::Dyadic(Dyadic::Zero) => write!(f, "0"),
            State::Dyadic(Dyadic::Pow(i)) => write!(f, "2^{i}"),
            State::Torus(p) => write!(f, "({}, {})", p.x, p.y),
            State::Lattice(l) => match l.k {
                Some(k) => write!(f, "({},{},{})", l.i, l.j, k),
                None => write!(f, "({},{},inf)", l.i, l.j),
            },
            State::Real(r) => write!(f, "real({})", r.0),
            State::Pair(a, b) => write!(f, "<{a} | {b}>"),
        }
    }
}

impl FromStr for State {
    type Err = Error;

    fn from_str(s: &str) -> Result<State> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
            let (a, b) = split_pair(inner)
                .ok_or_else(|| Error::Parse(format!("pair state `{s}` needs `<a | b>`")))?;
            return Ok(State::pair(a.parse()?, b.parse()?));
        }
        if let Some(inner) = s.strip_prefix("real(").and_then(|r| r.strip_suffix(')')) {
            return State::real(parse_f64(inner)?);
        }
        if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            return match parts.as_slice() {
                [x, y] => State::torus(parse_f64(x)?, parse_f64(y)?),
                [i, j, k] => {
                    let k = if matches!(*k, "inf" | "∞") {
                        None
                    } else {
                        Some(parse_u64(k)?)
                    };
                    State::lattice(parse_u64(i)?, parse_u64(j)?, k)
                }
                _ => Err(Error::Parse(format!("cannot parse state `{s}`"))),
            };
        }
        if let Some(exp) = s.strip_prefix("2^") {
            let e: u32 = exp
                .parse()
                .map_err(|_| Error::Parse(format!("bad dyadic exponent in `{s}`")))?;
            return Dyadic::pow(e).map(State::Dyadic);
        }
        Dyadic::from_value(parse_f64(s)?).map(State::Dyadic)
    }
}

fn split_pair(inner: &str) -> Option<(&str, &str)> {
    // split at the top-level `|`
    let mut depth = 0i32;
    for (idx, ch) in inner.char_indices() {
        match ch {
            '<' | '(' => depth += 1,
            '>' | ')' => depth -= 1,
            '|' if depth == 0 => return Some((&inner[..idx], &inner[idx + 1..])),
            _ => {}
        }
    }
    None
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("`{s}` is not a number")))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("`{s}` is not a nonnegative integer")))
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
