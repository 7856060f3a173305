//! Example chains with their closed forms, addressable by id.

pub mod dyadic;
pub mod families;
pub mod heavy_tail;
pub mod ifs;
pub mod lattice;

use std::fmt;
use std::sync::Arc;

pub use dyadic::DyadicKernel;
pub use families::{family_presets, parse_family, FAMILY_IDS};
pub use heavy_tail::{divergence_certificate, partial_moment, truncated_nu, DivergenceCertificate, C_NU};
pub use ifs::{cesaro_summary, ifs_probabilities, CesaroSummary, IfsTorusKernel};
pub use lattice::LatticeKernel;

use crate::error::{Error, Result};
use crate::markov::kernel::{IdentityKernel, RowSampler, SharedCountable, SharedSampling};
use crate::markov::{Engine, MonteCarlo, SharedFn, SparseDistribution, StateFn};
use crate::metric::{LatticeIndexMetric, LatticeSupMetric, RealLineMetric, SharedMetric, TorusProductMetric};
use crate::state::State;

/// What is known about the invariant law.
#[derive(Clone)]
pub enum InvariantLaw {
    Sparse(SparseDistribution),
    /// `f ↦ ⟨f, μ⟩` for a law without a finite support.
    Integrator(fn(&StateFn) -> Result<f64>),
    /// The model has no invariant probability measure.
    None,
}

impl InvariantLaw {
    pub fn integrate(&self, f: &StateFn) -> Result<f64> {
        match self {
            InvariantLaw::Sparse(mu) => mu.integrate(f),
            InvariantLaw::Integrator(g) => g(f),
            InvariantLaw::None => Err(Error::Unsupported("model has no invariant measure".into())),
        }
    }
}

pub type NeighborFn = fn(&State, f64) -> Vec<State>;

#[derive(Clone)]
pub struct ModelDescriptor {
    pub id: &'static str,
    pub description: &'static str,
    pub countable: Option<SharedCountable>,
    pub sampling: SharedSampling,
    pub metric: SharedMetric,
    /// Metric whose balls around the default start exhaust the space by
    /// compact sets; used for tightness.
    pub exhaustion_metric: SharedMetric,
    pub v: SharedFn,
    pub invariant: InvariantLaw,
    pub default_start: State,
    pub default_center: State,
    /// States at distance about `r` from a given state.
    pub neighbors: NeighborFn,
    /// Names of the closed forms served by [`ModelDescriptor::oracle`].
    pub oracles: &'static [&'static str],
    pub notes: &'static [&'static str],
}

impl fmt::Debug for ModelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelDescriptor")
            .field("id", &self.id)
            .field("metric", &self.metric.name())
            .finish()
    }
}

impl ModelDescriptor {
    /// Exact engine when a countable kernel exists, otherwise Monte Carlo.
    pub fn engine(&self, mc: MonteCarlo) -> Engine<'_> {
        match &self.countable {
            Some(k) => Engine::Exact(k.as_ref()),
            None => self.monte_carlo(mc),
        }
    }

    pub fn monte_carlo(&self, mc: MonteCarlo) -> Engine<'_> {
        Engine::MonteCarlo {
            kernel: self.sampling.as_ref(),
            mc,
        }
    }

    pub fn has_invariant(&self) -> bool {
        !matches!(self.invariant, InvariantLaw::None)
    }

    /// Evaluates a named closed form.
    pub fn oracle(&self, name: &str, args: &[f64]) -> Result<f64> {
        let arity = |k: usize| {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::ContractViolation(format!("oracle `{name}` takes {k} arguments, got {}", args.len())))
            }
        };
        let index = |v: f64| -> Result<u32> {
            if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                Ok(v as u32)
            } else {
                Err(Error::ContractViolation(format!("expected a nonnegative integer, got {v}")))
            }
        };
        match (self.id, name) {
            ("dyadic", "moment") => {
                arity(3)?;
                Ok(dyadic::moment(args[0], index(args[1])?, index(args[2])?))
            }
            ("dyadic", "tv-to-invariant") => {
                arity(1)?;
                Ok((1.0 - f64::from(index(args[0])?)).exp2().min(2.0))
            }
            ("ifs-torus", "p1" | "p2" | "p3") => {
                arity(1)?;
                let slot = name[1..].parse::<usize>().unwrap() - 1;
                Ok(ifs_probabilities(args[0])[slot])
            }
            ("lattice", "j-after") => {
                arity(2)?;
                Ok(args[0] + args[1])
            }
            _ => Err(Error::UnknownId {
                kind: "oracle",
                id: format!("{}/{name}", self.id),
            }),
        }
    }
}

pub const MODEL_IDS: [&str; 4] = ["dyadic", "ifs-torus", "lattice", "identity"];

pub fn dyadic_chain() -> ModelDescriptor {
    ModelDescriptor {
        id: "dyadic",
        description: "doubling chain on {0} ∪ {2^i}, absorbed at 0",
        countable: Some(Arc::new(DyadicKernel)),
        sampling: Arc::new(RowSampler::new(DyadicKernel)),
        metric: Arc::new(RealLineMetric),
        exhaustion_metric: Arc::new(RealLineMetric),
        v: Arc::new(dyadic::identity_v),
        invariant: InvariantLaw::Sparse(SparseDistribution::dirac(State::zero())),
        default_start: State::dyadic(2),
        default_center: State::zero(),
        neighbors: |x, r| dyadic::neighbors(x, r, 60),
        oracles: &["moment(alpha, i, n)", "tv-to-invariant(n)"],
        notes: &["V(x) = x; P_n V = V, so {V(Φ_n)} is a martingale"],
    }
}

pub fn ifs_torus() -> ModelDescriptor {
    ModelDescriptor {
        id: "ifs-torus",
        description: "random IFS {0, x, 1/x} with Exp(1) clock times the unit rotation of the circle",
        countable: None,
        sampling: Arc::new(IfsTorusKernel),
        metric: Arc::new(TorusProductMetric),
        exhaustion_metric: Arc::new(TorusProductMetric),
        v: Arc::new(ifs::radial_v),
        invariant: InvariantLaw::Integrator(ifs::invariant_integral),
        default_start: State::torus(1.0, 0.0).expect("valid"),
        default_center: State::torus(0.0, 0.0).expect("valid"),
        neighbors: ifs::neighbors,
        oracles: &["p1(x)", "p2(x)", "p3(x)"],
        notes: &[
            "V(x, y) = x",
            "P_t δ_x does not converge: the angle rotates; convergence holds for the Cesàro laws",
        ],
    }
}

/// Lattice chain with the given parameters.
pub fn lattice_model(p1: lattice::P1, p2: lattice::P2) -> Result<ModelDescriptor> {
    Ok(lattice_descriptor(LatticeKernel::new(p1, p2)?))
}

pub fn lattice_default() -> ModelDescriptor {
    lattice_descriptor(LatticeKernel::default_parameters())
}

fn lattice_descriptor(kernel: LatticeKernel) -> ModelDescriptor {
    let kernel = Arc::new(kernel);
    ModelDescriptor {
        id: "lattice",
        description: "index-triple chain with j ↦ j + 1 every step; no invariant measure",
        countable: Some(kernel.clone()),
        sampling: Arc::new(RowSampler::new(kernel)),
        metric: Arc::new(LatticeSupMetric),
        exhaustion_metric: Arc::new(LatticeIndexMetric),
        v: Arc::new(|_: &State| 0.0),
        invariant: InvariantLaw::None,
        default_start: State::lattice(1, 0, Some(1)).expect("valid"),
        default_center: State::lattice(1, 0, None).expect("valid"),
        neighbors: lattice::neighbors,
        oracles: &["j-after(j, n)"],
        notes: &["default parameters p1(k) = 1 − 2^{−k}, p2(i, k) = 2^{−k−i−1} are non-canonical"],
    }
}

pub fn identity_chain() -> ModelDescriptor {
    ModelDescriptor {
        id: "identity",
        description: "every state is absorbing",
        countable: Some(Arc::new(IdentityKernel)),
        sampling: Arc::new(IdentityKernel),
        metric: Arc::new(RealLineMetric),
        exhaustion_metric: Arc::new(RealLineMetric),
        v: Arc::new(dyadic::identity_v),
        invariant: InvariantLaw::Sparse(SparseDistribution::dirac(State::dyadic(1))),
        default_start: State::dyadic(1),
        default_center: State::dyadic(1),
        neighbors: |x, r| dyadic::neighbors(x, r, 60),
        oracles: &[],
        notes: &["every Dirac mass is invariant; the listed one belongs to the default start"],
    }
}

/// Looks a model up by id.
pub fn model(id: &str) -> Result<ModelDescriptor> {
    match id {
        "dyadic" => Ok(dyadic_chain()),
        "ifs-torus" => Ok(ifs_torus()),
        "lattice" => Ok(lattice_default()),
        "identity" => Ok(identity_chain()),
        _ => Err(Error::UnknownId {
            kind: "model",
            id: id.to_string(),
        }),
    }
}

pub fn registry() -> Vec<ModelDescriptor> {
    MODEL_IDS.iter().map(|id| model(id).expect("registered")).collect()
}
