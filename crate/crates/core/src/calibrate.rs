//! Finite-n calibration of `α_{i:n} = iα / (n + β - i(1-α))`.
//!
//! `α_{i:n}/i` is increasing for every `β ≥ 0`, so Dirac-uniform
//! configurations are least favorable for the step-up procedure and the
//! exact DU scan over `n₀` gives its worst-case FDR.

use serde::{Deserialize, Serialize};

use crate::curves::{Alpha, RejectionCurveSpec};
use crate::error::{invalid, Error, Result};
use crate::exact_du::{worst_case_scan, EXACT_SIZE_CAP};

const BETA_CEILING: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub beta_star: f64,
    pub worst_n0: usize,
    pub achieved_max_fdr: f64,
    pub tolerance: f64,
    pub n: usize,
    pub alpha: Alpha,
    /// Every `(β, max DU FDR)` evaluated, in evaluation order.
    pub trace: Vec<(f64, f64)>,
}

/// Worst-case DU FDR of the β-adjusted step-up procedure and its maximizing `n₀`.
pub fn max_du_fdr(beta: f64, n: usize, alpha: Alpha) -> Result<(f64, usize)> {
    let spec = RejectionCurveSpec::beta_adjusted(alpha, beta, n)?;
    let scan = worst_case_scan(&spec, n)?;
    Ok((scan.max_fdr, scan.worst_n0))
}

/// Smallest `β` (up to `tol`) whose step-up procedure keeps the DU FDR at or
/// below `α` for every `n₀`.
pub fn calibrate_beta(n: usize, alpha: Alpha, tol: f64) -> Result<CalibrationResult> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    if n > EXACT_SIZE_CAP {
        return Err(Error::SizeCap { n, cap: EXACT_SIZE_CAP });
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let a = alpha.value();
    let mut trace = Vec::new();
    let mut eval = |beta: f64| -> Result<(f64, usize)> {
        let r = max_du_fdr(beta, n, alpha)?;
        trace.push((beta, r.0));
        Ok(r)
    };

    let at_zero = eval(0.0)?;
    let (beta_star, best) = if at_zero.0 <= a {
        (0.0, at_zero)
    } else {
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut at_hi = eval(hi)?;
        while at_hi.0 > a {
            lo = hi;
            hi *= 2.0;
            if hi > BETA_CEILING {
                return Err(invalid(format!("no beta below {BETA_CEILING} controls the FDR")));
            }
            at_hi = eval(hi)?;
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let r = eval(mid)?;
            if r.0 <= a {
                hi = mid;
                at_hi = r;
            } else {
                lo = mid;
            }
        }
        (hi, at_hi)
    };
    check_monotone(&trace)?;
    Ok(CalibrationResult {
        beta_star,
        worst_n0: best.1,
        achieved_max_fdr: best.0,
        tolerance: tol,
        n,
        alpha,
        trace,
    })
}

/// The bisection is only valid if max FDR is nonincreasing in β along the trace.
fn check_monotone(trace: &[(f64, f64)]) -> Result<()> {
    let mut sorted = trace.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    for w in sorted.windows(2) {
        if w[1].1 > w[0].1 + 1e-12 {
            return Err(Error::NonMonotoneTrace(format!(
                "max FDR {} at beta {} rises to {} at beta {}",
                w[0].1, w[0].0, w[1].1, w[1].0
            )));
        }
    }
    Ok(())
}

/// The β-adjusted curve selected by a calibration run.
pub fn adjusted_curve(result: &CalibrationResult) -> RejectionCurveSpec {
    RejectionCurveSpec::beta_adjusted(result.alpha, result.beta_star, result.n)
        .expect("calibration results carry a valid beta and n")
}
