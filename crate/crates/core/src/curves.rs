//! The rejection curve family and the critical value functions it induces.
//!
//! A rejection curve `r` lives in the (threshold, ecdf) plane; procedures
//! consume its inverse view, the critical value function `ρ`, through
//! `α_{i:n} = ρ(i/n)`. Every member of the family is parameterized by the
//! target level `α` and is evaluated in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

/// Target FDR level, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Alpha(value))
        } else {
            Err(invalid(format!("alpha must lie in (0, 1), got {value}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = crate::Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain(format!("{what} must lie in [0, 1], got {x}")))
    }
}

// Unchecked kernels; callers guarantee the domain.

#[inline]
pub(crate) fn aorc(t: f64, alpha: f64) -> f64 {
    if t >= 1.0 {
        return 1.0;
    }
    t / (t * (1.0 - alpha) + alpha)
}

#[inline]
pub(crate) fn aorc_inv(x: f64, alpha: f64) -> f64 {
    if x >= 1.0 {
        return 1.0;
    }
    alpha * x / ((1.0 - x) + alpha * x)
}

#[inline]
fn aorc_slope(t: f64, alpha: f64) -> f64 {
    let d = t * (1.0 - alpha) + alpha;
    alpha / (d * d)
}

/// The AORC `f_α(t) = t / (t(1-α) + α)`.
pub fn f_alpha(t: f64, alpha: Alpha) -> Result<f64> {
    check_unit(t, "t")?;
    Ok(aorc(t, alpha.0))
}

/// Inverse of the AORC, `f_α⁻¹(x) = αx / (1 - (1-α)x) = 1 - f_α(1 - x)`.
pub fn f_alpha_inv(x: f64, alpha: Alpha) -> Result<f64> {
    check_unit(x, "x")?;
    Ok(aorc_inv(x, alpha.0))
}

/// Shape of the linear continuation used by the adjusted curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjustedKind {
    /// Tangent continuation `h₁(x) = f_α'(κ)(x - κ) + f_α(κ)`.
    H1,
    /// Ray through the origin `h₂(x) = x f_α(κ) / κ`.
    H2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Curve {
    Simes,
    Aorc,
    AdjustedH1 { kappa: f64 },
    AdjustedH2 { kappa: f64 },
    Truncated { kappa: f64 },
    BetaAdjusted { beta: f64, n: usize },
}

/// A validated member of the curve family at a fixed level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionCurveSpec {
    pub curve: Curve,
    pub alpha: Alpha,
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("kappa must lie in (0, 1), got {kappa}")))
    }
}

impl RejectionCurveSpec {
    pub fn new(curve: Curve, alpha: Alpha) -> Result<Self> {
        match curve {
            Curve::Simes | Curve::Aorc => {}
            Curve::AdjustedH1 { kappa } | Curve::AdjustedH2 { kappa } | Curve::Truncated { kappa } => {
                check_kappa(kappa)?
            }
            Curve::BetaAdjusted { beta, n } => {
                if !(beta >= 0.0 && beta.is_finite()) {
                    return Err(invalid(format!("beta must be finite and >= 0, got {beta}")));
                }
                if n == 0 {
                    return Err(invalid("beta-adjusted curve needs n >= 1"));
                }
            }
        }
        Ok(RejectionCurveSpec { curve, alpha })
    }

    pub fn simes(alpha: Alpha) -> Self {
        RejectionCurveSpec { curve: Curve::Simes, alpha }
    }

    pub fn aorc(alpha: Alpha) -> Self {
        RejectionCurveSpec { curve: Curve::Aorc, alpha }
    }

    pub fn adjusted(kind: AdjustedKind, alpha: Alpha, kappa: f64) -> Result<Self> {
        let curve = match kind {
            AdjustedKind::H1 => Curve::AdjustedH1 { kappa },
            AdjustedKind::H2 => Curve::AdjustedH2 { kappa },
        };
        Self::new(curve, alpha)
    }

    /// Adjusted curve whose rejection curve first reaches 1 at `xstar`.
    pub fn adjusted_with_xstar(kind: AdjustedKind, alpha: Alpha, xstar: f64) -> Result<Self> {
        Self::adjusted(kind, alpha, kappa_for_xstar(kind, alpha, xstar)?)
    }

    pub fn truncated(alpha: Alpha, kappa: f64) -> Result<Self> {
        Self::new(Curve::Truncated { kappa }, alpha)
    }

    pub fn beta_adjusted(alpha: Alpha, beta: f64, n: usize) -> Result<Self> {
        Self::new(Curve::BetaAdjusted { beta, n }, alpha)
    }

    #[inline]
    fn a(&self) -> f64 {
        self.alpha.0
    }

    /// Critical value function `ρ(x)`.
    pub fn rho(&self, x: f64) -> Result<f64> {
        check_unit(x, "x")?;
        Ok(self.rho_unchecked(x))
    }

    pub(crate) fn rho_unchecked(&self, x: f64) -> f64 {
        let a = self.a();
        match self.curve {
            Curve::Simes => a * x,
            Curve::Aorc => aorc_inv(x, a),
            Curve::AdjustedH1 { kappa } => {
                let junction = aorc(kappa, a);
                if x < junction {
                    aorc_inv(x, a)
                } else {
                    kappa + (x - junction) / aorc_slope(kappa, a)
                }
            }
            Curve::AdjustedH2 { kappa } => {
                let junction = aorc(kappa, a);
                if x < junction {
                    aorc_inv(x, a)
                } else {
                    x * kappa / junction
                }
            }
            Curve::Truncated { kappa } => aorc_inv(x, a).min(kappa),
            Curve::BetaAdjusted { beta, n } => {
                let b = beta / n as f64;
                (x * a / ((1.0 - x) + b + x * a)).clamp(0.0, 1.0)
            }
        }
    }

    /// Rejection curve `r(t)`, the generalized inverse of `ρ`.
    ///
    /// Values above 1 mean the ecdf can never reach the curve at `t`;
    /// `+∞` marks thresholds beyond the range of a truncated `ρ`.
    pub fn rejection_curve(&self, t: f64) -> Result<f64> {
        check_unit(t, "t")?;
        let a = self.a();
        Ok(match self.curve {
            Curve::Simes => t / a,
            Curve::Aorc => aorc(t, a),
            Curve::AdjustedH1 { kappa } => {
                if t < kappa {
                    aorc(t, a)
                } else {
                    aorc_slope(kappa, a) * (t - kappa) + aorc(kappa, a)
                }
            }
            Curve::AdjustedH2 { kappa } => {
                if t < kappa {
                    aorc(t, a)
                } else {
                    t * aorc(kappa, a) / kappa
                }
            }
            Curve::Truncated { kappa } => {
                if t <= kappa {
                    aorc(t, a)
                } else {
                    f64::INFINITY
                }
            }
            Curve::BetaAdjusted { beta, n } => {
                let b = beta / n as f64;
                (1.0 + b) * (t / (t * (1.0 - a) + a))
            }
        })
    }

    /// `q(x) = ρ(x)/x`, with the right limit at `x = 0`.
    pub fn q(&self, x: f64) -> Result<f64> {
        check_unit(x, "x")?;
        Ok(self.q_unchecked(x))
    }

    pub(crate) fn q_unchecked(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.q_at_zero();
        }
        self.rho_unchecked(x) / x
    }

    pub fn q_at_zero(&self) -> f64 {
        match self.curve {
            Curve::BetaAdjusted { beta, n } => self.a() / (1.0 + beta / n as f64),
            _ => self.a(),
        }
    }

    /// Least isotonic majorant `q̄(x) = max_{0 ≤ t ≤ x} q(t)`.
    pub fn q_bar(&self, x: f64) -> Result<f64> {
        check_unit(x, "x")?;
        Ok(self.q_bar_unchecked(x))
    }

    pub(crate) fn q_bar_unchecked(&self, x: f64) -> f64 {
        match self.curve {
            // q = κ/x past the kink, so the running maximum freezes there.
            Curve::Truncated { kappa } => self.q_unchecked(x.min(aorc(kappa, self.a()))),
            _ => self.q_unchecked(x),
        }
    }

    /// True when `q` is nondecreasing on `(0, 1]`.
    pub fn has_nondecreasing_ratio(&self) -> bool {
        !matches!(self.curve, Curve::Truncated { .. })
    }

    /// Smallest `x` with curve value 1 (adjusted curves), or the saturation
    /// abscissa `f_α(κ)` of the truncated `ρ`.
    pub fn x_star(&self) -> Result<f64> {
        let a = self.a();
        match self.curve {
            Curve::AdjustedH1 { kappa } => Ok(kappa * (1.0 - a) * (2.0 - kappa) + a),
            Curve::AdjustedH2 { kappa } => Ok(kappa * (1.0 - a) + a),
            Curve::Truncated { kappa } => Ok(aorc(kappa, a)),
            _ => Err(crate::Error::Unsupported("x_star")),
        }
    }

    /// Critical values `α_{i:n} = ρ(i/n)`, `i = 1..n`.
    pub fn critical_values(&self, n: usize) -> Result<CriticalValues> {
        if n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        let a = self.a();
        let nf = n as f64;
        let values: Vec<f64> = match self.curve {
            Curve::BetaAdjusted { n: spec_n, .. } if spec_n != n => {
                return Err(invalid(format!("beta-adjusted curve built for n = {spec_n}, asked for n = {n}")))
            }
            Curve::Simes => (1..=n).map(|i| i as f64 * a / nf).collect(),
            Curve::Aorc => (1..=n)
                .map(|i| {
                    let i = i as f64;
                    (i * a / ((nf - i) + i * a)).min(1.0)
                })
                .collect(),
            Curve::BetaAdjusted { beta, .. } => (1..=n)
                .map(|i| {
                    let i = i as f64;
                    (i * a / ((nf - i) + beta + i * a)).min(1.0)
                })
                .collect(),
            _ => (1..=n).map(|i| self.rho_unchecked(i as f64 / nf)).collect(),
        };
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        Ok(CriticalValues { values, source: Some(*self) })
    }
}

/// Nondecreasing critical values `α_{1:n} ≤ … ≤ α_{n:n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    values: Vec<f64>,
    source: Option<RejectionCurveSpec>,
}

impl CriticalValues {
    /// Wrap an arbitrary vector; it must be nonempty, nondecreasing and in `(0, 1]`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("critical values must be nonempty"));
        }
        if values.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(domain("critical values must lie in (0, 1]"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(domain("critical values must be nondecreasing"));
        }
        Ok(CriticalValues { values, source: None })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `α_{i:n}` for 1-based `i`.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn source(&self) -> Option<&RejectionCurveSpec> {
        self.source.as_ref()
    }

    /// Whether `α_{i:n}/i` is nondecreasing in `i`, up to relative rounding.
    pub fn ratio_nondecreasing(&self) -> bool {
        self.values.windows(2).enumerate().all(|(k, w)| {
            let lo = w[0] / (k + 1) as f64;
            let hi = w[1] / (k + 2) as f64;
            hi >= lo * (1.0 - 1e-12)
        })
    }
}

/// κ placing the first unit value of the adjusted rejection curve at `xstar`.
pub fn kappa_for_xstar(kind: AdjustedKind, alpha: Alpha, xstar: f64) -> Result<f64> {
    let a = alpha.0;
    if !(xstar > a && xstar <= 1.0) {
        return Err(domain(format!("xstar must lie in (alpha, 1], got {xstar}")));
    }
    let c = (xstar - a) / (1.0 - a);
    Ok(match kind {
        AdjustedKind::H2 => c,
        // κ(2 - κ) = c, root in (0, 1].
        AdjustedKind::H1 => c / (1.0 + (1.0 - c).sqrt()),
    })
}
