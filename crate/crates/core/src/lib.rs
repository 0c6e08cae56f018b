//! Stepwise multiple test procedures built on the asymptotically optimal
//! rejection curve (AORC) `f_α(t) = t / (t(1-α) + α)`.
//!
//! The crate covers the curve family and its critical values ([`curves`]),
//! step-up / step-down / step-up-down decisions ([`stepwise`]), the exact
//! law of the step-up rejection count under Dirac-uniform configurations
//! ([`exact_du`]), closed-form asymptotics ([`asymptotics`]), a seeded Monte
//! Carlo harness ([`montecarlo`]) and finite-n calibration of the
//! β-adjusted critical values ([`calibrate`]).

pub mod asymptotics;
pub mod calibrate;
pub mod curves;
pub mod error;
pub mod exact_du;
pub mod montecarlo;
pub mod stepwise;

pub use asymptotics::AsymptoticModel;
pub use calibrate::{adjusted_curve, calibrate_beta, max_du_fdr, CalibrationResult};
pub use curves::{f_alpha, f_alpha_inv, kappa_for_xstar, Alpha, AdjustedKind, CriticalValues, Curve, RejectionCurveSpec};
pub use error::{Error, Result};
pub use exact_du::{
    exact_du_fdr_su, fdr_upper_bound, noncrossing_prob, su_rejection_pmf, worst_case_scan, DuConfig,
    RejectionPmf, WorstCase, EXACT_SIZE_CAP,
};
pub use montecarlo::{compare_power, estimate, generate, DataModel, McEstimate, PowerComparison};
pub use stepwise::{crossing_points, decide, fdp, lambda_index, power_proportion, Decision, PValueSample, ProcedureKind};
