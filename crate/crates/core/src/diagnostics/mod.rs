//! Estimators and verdicts for the conditions behind the stability equivalences.

pub mod birkhoff;
pub mod evc;
pub mod grid;
pub mod lbc;
pub mod lyapunov;
pub mod report;
pub mod stability;
pub mod tightness;
pub mod ui;

pub use birkhoff::{birkhoff_averages, birkhoff_divergence_check, BirkhoffCheck, BirkhoffOutcome};
pub use evc::{check_evc, sup_gap_exact, EvcVariant, IfsStructural, StructuralLaws, DEFAULT_EVC_TOLERANCE};
pub use grid::LimitGridSpec;
pub use lbc::{check_lbc, check_lbc_c1, check_lbc_c2, Lbc, DEFAULT_LBC_FLOOR};
pub use lyapunov::{lyapunov_bound, lyapunov_report, LyapunovBound, LyapunovSpec};
pub use report::{Curve, CurvePoint, DiagnosticReport, Verdict, MARGIN_SIGMAS};
pub use stability::{stability_report, Equivalence, StabilityConfig};
pub use tightness::{check_tightness, DEFAULT_TIGHTNESS_LEVEL};
pub use ui::{
    check_envelope_integrability, check_uniform_integrability, default_k_grid, tail_curve_exact, tail_expectation,
    DEFAULT_UI_TOLERANCE,
};
