//! State-space dynamics: kernels, exact propagation, paths and semigroup estimates.

pub mod distribution;
pub mod engine;
pub mod family;
pub mod kernel;
pub mod path;
pub mod semigroup;

pub use engine::Engine;
pub use distribution::{AtomRecord, DiscreteMeasure, EmpiricalMeasure, Provenance, SparseDistribution};
pub use family::{FamilyKind, NamedFn, SharedFn, StateFn, TestFunctionFamily};
pub use kernel::{CountableKernel, IdentityKernel, RowSampler, SamplingKernel, SharedCountable, SharedSampling, TimeKind};
pub use path::{simulate_path, simulate_paths, Trajectory, TrajectoryRecord, Walker};
pub use semigroup::{cesaro_exact, cesaro_law, cesaro_mc, estimate_ptf, laws, propagate, MonteCarlo};
