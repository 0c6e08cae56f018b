//! Closed forms for the Dirac-uniform limit `n → ∞` with `n₀/n → ζ`, where the
//! ecdf converges to `F_∞(t|ζ) = (1 - ζ) + ζt`.

use serde::{Deserialize, Serialize};

use crate::curves::{Alpha, Curve, RejectionCurveSpec};
use crate::error::{invalid, Error, Result};

const ROOT_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticModel {
    pub zeta: f64,
    pub alpha: Alpha,
}

impl AsymptoticModel {
    pub fn new(zeta: f64, alpha: Alpha) -> Result<Self> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(invalid(format!("zeta must lie in [0, 1], got {zeta}")));
        }
        Ok(AsymptoticModel { zeta, alpha })
    }

    /// `F_∞(t|ζ) = (1 - ζ) + ζt`.
    pub fn f_infinity(&self, t: f64) -> f64 {
        (1.0 - self.zeta) + self.zeta * t
    }

    /// Threshold at which the limiting FDR of the fixed-threshold test is α.
    pub fn t_zeta(&self) -> f64 {
        let (z, a) = (self.zeta, self.alpha.value());
        if z < a {
            1.0
        } else if z >= 1.0 {
            0.0
        } else {
            a * (1.0 - z) / (z * (1.0 - a))
        }
    }

    /// `FDR_ζ(t) = tζ / ((1 - ζ) + tζ)`.
    pub fn limiting_fdr_at_threshold(&self, t: f64) -> f64 {
        let num = t * self.zeta;
        if num == 0.0 {
            return 0.0;
        }
        num / ((1.0 - self.zeta) + num)
    }
}

/// `ζ*(κ) = α / (κ(1 - α) + α)`.
pub fn zeta_star(kappa: f64, alpha: Alpha) -> Result<f64> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(invalid(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    let a = alpha.value();
    Ok(a / (kappa * (1.0 - a) + a))
}

/// Smallest solution of `F_∞(ρ(t)|ζ) = t` on `[0, 1]`.
///
/// The equation may have two roots (one of them `t = 1`), so the interval is
/// scanned on a fixed grid for the first sign change before bisecting.
pub fn solve_r_star(spec: &RejectionCurveSpec, m: &AsymptoticModel) -> f64 {
    let gap = |t: f64| m.f_infinity(spec.rho_unchecked(t)) - t;
    if gap(0.0) <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=ROOT_GRID {
        let t = k as f64 / ROOT_GRID as f64;
        let g = gap(t);
        if g == 0.0 {
            return t;
        }
        if g < 0.0 {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let Some(mut hi) = hi else {
        return 1.0;
    };
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Limiting FDR `ζ q(r*)` of the step-up procedure based on `spec`; falls back
/// to `ζ q(0)` when `r* = 0`.
pub fn limiting_fdr_of_procedure(spec: &RejectionCurveSpec, m: &AsymptoticModel) -> f64 {
    let r = solve_r_star(spec, m);
    m.zeta * spec.q_unchecked(r)
}

/// Level function `g(ζ)` guaranteed by the family of `spec`.
pub fn level_function_g(spec: &RejectionCurveSpec, zeta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(invalid(format!("zeta must lie in [0, 1], got {zeta}")));
    }
    let a = spec.alpha.value();
    match spec.curve {
        Curve::Simes => Ok(zeta * a),
        Curve::BetaAdjusted { .. } => Ok(a.min(zeta)),
        Curve::Truncated { kappa } => {
            if zeta >= zeta_star(kappa, spec.alpha)? {
                Ok(a)
            } else {
                Ok(zeta * kappa / (1.0 - zeta + zeta * kappa))
            }
        }
        _ => Err(Error::Unsupported("level_function_g")),
    }
}
