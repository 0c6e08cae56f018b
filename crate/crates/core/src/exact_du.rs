//! Exact law of the step-up rejection count under Dirac-uniform (DU)
//! configurations: `n₀` true nulls with i.i.d. uniform p-values and
//! `n₁ = n - n₀` false nulls whose p-values are identically 0.
//!
//! All probabilities come from one boundary-crossing engine for uniform order
//! statistics. Scanning the bounds from the top down, the number of uniforms
//! at or below `d_i` given the number at or below `d_{i+1}` is a binomial
//! thinning with success probability `d_i / d_{i+1}`; truncating the state at
//! `i - 1` after each step yields `P(U_(j) > d_j for all j ≥ i)` for every
//! `i` in a single pass. Binomial rows are evaluated outward from their mode
//! and cut once terms drop below `1e-30`, so each step only touches a narrow
//! band of states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{CriticalValues, RejectionCurveSpec};
use crate::error::{domain, invalid, Error, Result};

/// Largest `n` accepted by the exact engine.
pub const EXACT_SIZE_CAP: usize = 2000;

const NEGLIGIBLE: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuConfig {
    pub n: usize,
    pub n0: usize,
}

impl DuConfig {
    pub fn new(n: usize, n0: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        if n0 > n {
            return Err(invalid(format!("n0 = {n0} exceeds n = {n}")));
        }
        Ok(DuConfig { n, n0 })
    }

    pub fn n1(&self) -> usize {
        self.n - self.n0
    }

    /// Proportion of true nulls `ζ_n = n₀/n`.
    pub fn zeta(&self) -> f64 {
        self.n0 as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionPmf {
    /// `probs[k] = P(R = k)`, `k = 0..=n`.
    pub probs: Vec<f64>,
    pub config: DuConfig,
    pub critical_values: CriticalValues,
}

impl RejectionPmf {
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// `E[V / (R ∨ 1)]` with `V = R - n₁`.
    pub fn fdr(&self) -> f64 {
        let n1 = self.config.n1();
        neumaier(
            self.probs
                .iter()
                .enumerate()
                .skip(n1.max(1))
                .map(|(k, p)| p * (k - n1) as f64 / k as f64),
        )
    }
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn ln_factorials(m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=m {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Adds `weight * Binomial(s, r)(k)` into `out[k]` for `k ≤ cap`, `0 < r < 1`.
fn spread_binomial(weight: f64, s: usize, r: f64, ln_r: f64, ln_q: f64, lnf: &[f64], out: &mut [f64]) {
    let cap = out.len() - 1;
    let mode = (((s + 1) as f64 * r).floor() as usize).min(s);
    let start = mode.min(cap);
    let ln_pmf = lnf[s] - lnf[start] - lnf[s - start] + start as f64 * ln_r + (s - start) as f64 * ln_q;
    let at_start = ln_pmf.exp();
    let odds = r / (1.0 - r);

    let mut pmf = at_start;
    let mut k = start;
    loop {
        if pmf < NEGLIGIBLE {
            break;
        }
        out[k] += weight * pmf;
        if k == 0 {
            break;
        }
        pmf *= k as f64 / ((s - k + 1) as f64 * odds);
        k -= 1;
    }

    let top = s.min(cap);
    let mut pmf = at_start;
    let mut k = start;
    while k < top {
        pmf *= (s - k) as f64 / (k + 1) as f64 * odds;
        k += 1;
        if pmf < NEGLIGIBLE {
            break;
        }
        out[k] += weight * pmf;
    }
}

fn check_bounds(bounds: &[f64]) -> Result<()> {
    if bounds.iter().any(|d| !(0.0..=1.0).contains(d)) {
        return Err(domain("bounds must lie in [0, 1]"));
    }
    if bounds.windows(2).any(|w| w[0] > w[1]) {
        return Err(domain("bounds must be nondecreasing"));
    }
    Ok(())
}

/// For `m = bounds.len()` i.i.d. uniforms, returns `v` of length `m + 1` with
/// `v[j] = P(U_(i) > d_i for all i in j+1..=m)`; `v[m] = 1`.
pub(crate) fn suffix_noncrossing(bounds: &[f64]) -> Vec<f64> {
    let m = bounds.len();
    let mut tail = vec![0.0; m + 1];
    tail[m] = 1.0;
    if m == 0 {
        return tail;
    }
    let lnf = ln_factorials(m);

    // distribution of N(d_m) over 0..=m - 1
    let mut state = vec![0.0; m];
    let top = bounds[m - 1];
    if top <= 0.0 {
        state[0] = 1.0;
    } else if top < 1.0 {
        spread_binomial(1.0, m, top, top.ln(), (1.0 - top).ln(), &lnf, &mut state);
    }
    tail[m - 1] = neumaier(state.iter().copied());

    let mut next = vec![0.0; m];
    for i in (1..m).rev() {
        // state holds N(d_{i+1}) over 0..=i; thin to N(d_i) over 0..=i-1
        let upper = bounds[i];
        let lower = bounds[i - 1];
        let cap = i - 1;
        let out = &mut next[..=cap];
        out.iter_mut().for_each(|x| *x = 0.0);
        if upper <= 0.0 || lower >= upper {
            out.copy_from_slice(&state[..=cap]);
        } else if lower <= 0.0 {
            out[0] = neumaier(state[..=i].iter().copied());
        } else {
            let r = lower / upper;
            let (ln_r, ln_q) = (r.ln(), (-r).ln_1p());
            for (s, &w) in state[..=i].iter().enumerate() {
                if w < NEGLIGIBLE {
                    continue;
                }
                if s == 0 {
                    out[0] += w;
                } else {
                    spread_binomial(w, s, r, ln_r, ln_q, &lnf, out);
                }
            }
        }
        std::mem::swap(&mut state, &mut next);
        tail[i - 1] = neumaier(state[..=cap].iter().copied());
    }
    tail
}

/// `P(U_(j) > d_j, j = 1..m)` for `m = bounds.len()` i.i.d. uniform order statistics.
pub fn noncrossing_prob(bounds: &[f64]) -> Result<f64> {
    check_bounds(bounds)?;
    Ok(suffix_noncrossing(bounds)[0])
}

fn check_exact(c: &CriticalValues, cfg: DuConfig) -> Result<()> {
    if c.n() != cfg.n {
        return Err(Error::LengthMismatch { expected: cfg.n, got: c.n() });
    }
    if cfg.n > EXACT_SIZE_CAP {
        return Err(Error::SizeCap { n: cfg.n, cap: EXACT_SIZE_CAP });
    }
    Ok(())
}

/// Exact law of the step-up rejection count `R = n₁ + max{i : U_(i) ≤ α_{n₁+i:n}}`.
pub fn su_rejection_pmf(c: &CriticalValues, cfg: DuConfig) -> Result<RejectionPmf> {
    check_exact(c, cfg)?;
    let n1 = cfg.n1();
    let cdf = suffix_noncrossing(&c.values()[n1..]);
    let mut probs = vec![0.0; cfg.n + 1];
    let mut prev = 0.0;
    for (k, &v) in cdf.iter().enumerate() {
        probs[n1 + k] = (v - prev).max(0.0);
        prev = v;
    }
    Ok(RejectionPmf { probs, config: cfg, critical_values: c.clone() })
}

/// Exact FDR of the step-up procedure under the DU configuration `cfg`.
pub fn exact_du_fdr_su(c: &CriticalValues, cfg: DuConfig) -> Result<f64> {
    Ok(su_rejection_pmf(c, cfg)?.fdr())
}

/// Upper bound `(n₀/n) E q̄(R/n)`, the expectation taken under DU with one
/// true null moved to the Dirac zeros.
pub fn fdr_upper_bound(c: &CriticalValues, spec: &RejectionCurveSpec, cfg: DuConfig) -> Result<f64> {
    if cfg.n0 == 0 {
        return Err(invalid("the bound needs n0 >= 1"));
    }
    let shifted = DuConfig { n: cfg.n, n0: cfg.n0 - 1 };
    let pmf = su_rejection_pmf(c, shifted)?;
    let n = cfg.n as f64;
    let e = neumaier(pmf.probs.iter().enumerate().map(|(k, p)| p * spec.q_bar_unchecked(k as f64 / n)));
    Ok(cfg.n0 as f64 / n * e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub worst_n0: usize,
    pub max_fdr: f64,
    /// `(n₀, exact FDR)` for `n₀ = 0..=n`.
    pub table: Vec<(usize, f64)>,
    /// `α_{i:n}/i` nondecreasing, so DU configurations are least favorable.
    pub du_least_favorable: bool,
}

/// Exact step-up FDR for every `n₀` and its maximizer.
pub fn worst_case_scan(spec: &RejectionCurveSpec, n: usize) -> Result<WorstCase> {
    if n > EXACT_SIZE_CAP {
        return Err(Error::SizeCap { n, cap: EXACT_SIZE_CAP });
    }
    let c = spec.critical_values(n)?;
    worst_case_scan_values(&c)
}

pub(crate) fn worst_case_scan_values(c: &CriticalValues) -> Result<WorstCase> {
    let n = c.n();
    let table = (0..=n)
        .into_par_iter()
        .map(|n0| exact_du_fdr_su(c, DuConfig { n, n0 }).map(|f| (n0, f)))
        .collect::<Result<Vec<_>>>()?;
    let (worst_n0, max_fdr) = table.iter().fold((0, f64::NEG_INFINITY), |best, &(n0, f)| {
        if f > best.1 {
            (n0, f)
        } else {
            best
        }
    });
    Ok(WorstCase { worst_n0, max_fdr, table, du_least_favorable: c.ratio_nondecreasing() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{AdjustedKind, Alpha};
    use approx::assert_abs_diff_eq;

    fn alpha(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    /// Independent route: `P(R' = k) = C(m,k) d_k^k S_k` with the suffix
    /// recursion `S_k = 1 - Σ_l C(m-k, l) d_{k+l}^l S_{k+l}`. Only stable for
    /// small `m`.
    fn recursion_pmf(d: &[f64]) -> Vec<f64> {
        let m = d.len();
        let binom = |a: usize, b: usize| -> f64 { (0..b).fold(1.0, |acc, j| acc * (a - j) as f64 / (j + 1) as f64) };
        let mut s = vec![0.0; m + 1];
        s[m] = 1.0;
        for k in (0..m).rev() {
            let mut acc = 0.0;
            for l in 1..=(m - k) {
                acc += binom(m - k, l) * d[k + l - 1].powi(l as i32) * s[k + l];
            }
            s[k] = 1.0 - acc;
        }
        (0..=m)
            .map(|k| if k == 0 { s[0] } else { binom(m, k) * d[k - 1].powi(k as i32) * s[k] })
            .collect()
    }

    #[test]
    fn noncrossing_examples() {
        assert_abs_diff_eq!(noncrossing_prob(&[0.05]).unwrap(), 0.95, epsilon = 1e-15);
        assert_abs_diff_eq!(noncrossing_prob(&[0.025, 0.05]).unwrap(), 0.95, epsilon = 1e-15);
        assert_eq!(noncrossing_prob(&[0.0; 7]).unwrap(), 1.0);
        assert_eq!(noncrossing_prob(&[]).unwrap(), 1.0);
        assert_eq!(noncrossing_prob(&[0.2, 1.0]).unwrap(), 0.0);
        assert!(noncrossing_prob(&[0.2, 0.1]).is_err());
        assert!(noncrossing_prob(&[0.2, 1.1]).is_err());
    }

    #[test]
    fn pmf_examples() {
        let c = RejectionCurveSpec::simes(alpha(0.05)).critical_values(2).unwrap();
        let pmf = su_rejection_pmf(&c, DuConfig::new(2, 2).unwrap()).unwrap();
        for (got, want) in pmf.probs.iter().zip([0.95, 0.0475, 0.0025]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let pmf = su_rejection_pmf(&c, DuConfig::new(2, 1).unwrap()).unwrap();
        for (got, want) in pmf.probs.iter().zip([0.0, 0.95, 0.05]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let pmf = su_rejection_pmf(&c, DuConfig::new(2, 0).unwrap()).unwrap();
        assert_eq!(pmf.probs, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn fdr_examples() {
        let c = RejectionCurveSpec::simes(alpha(0.05)).critical_values(2).unwrap();
        assert_abs_diff_eq!(exact_du_fdr_su(&c, DuConfig::new(2, 2).unwrap()).unwrap(), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(exact_du_fdr_su(&c, DuConfig::new(2, 1).unwrap()).unwrap(), 0.025, epsilon = 1e-15);
        assert_eq!(exact_du_fdr_su(&c, DuConfig::new(2, 0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn agrees_with_recursion_oracle() {
        let specs = [
            RejectionCurveSpec::simes(alpha(0.1)),
            RejectionCurveSpec::aorc(alpha(0.05)),
            RejectionCurveSpec::adjusted_with_xstar(AdjustedKind::H2, alpha(0.05), 0.5).unwrap(),
            RejectionCurveSpec::adjusted_with_xstar(AdjustedKind::H1, alpha(0.2), 0.6).unwrap(),
            RejectionCurveSpec::truncated(alpha(0.05), 0.3).unwrap(),
        ];
        for spec in specs {
            for n in [1, 3, 8, 15] {
                let c = spec.critical_values(n).unwrap();
                for n0 in 0..=n {
                    let cfg = DuConfig::new(n, n0).unwrap();
                    let pmf = su_rejection_pmf(&c, cfg).unwrap();
                    let oracle = recursion_pmf(&c.values()[n - n0..]);
                    for (k, &o) in oracle.iter().enumerate() {
                        assert_abs_diff_eq!(pmf.probs[n - n0 + k], o, epsilon = 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn pmf_is_a_distribution() {
        let spec = RejectionCurveSpec::adjusted_with_xstar(AdjustedKind::H2, alpha(0.05), 0.5).unwrap();
        for n in [50, 300, 500] {
            let c = spec.critical_values(n).unwrap();
            for n0 in [0, 1, n / 7, n / 2, n] {
                let pmf = su_rejection_pmf(&c, DuConfig::new(n, n0).unwrap()).unwrap();
                assert!(pmf.probs.iter().all(|&p| p >= 0.0));
                assert_abs_diff_eq!(pmf.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
                assert!(pmf.probs[..n - n0].iter().all(|&p| p == 0.0));
            }
        }
    }

    #[test]
    fn shift_identity() {
        let spec = RejectionCurveSpec::aorc(alpha(0.1));
        let c = spec.critical_values(12).unwrap();
        let cfg = DuConfig::new(12, 7).unwrap();
        let pmf = su_rejection_pmf(&c, cfg).unwrap();
        let sub = CriticalValues::from_values(c.values()[5..].to_vec()).unwrap();
        let inner = su_rejection_pmf(&sub, DuConfig::new(7, 7).unwrap()).unwrap();
        for k in 0..=7 {
            assert_abs_diff_eq!(pmf.probs[5 + k], inner.probs[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn critical_values_of_one_reject_all() {
        let c = RejectionCurveSpec::aorc(alpha(0.05)).critical_values(20).unwrap();
        for n0 in 0..=20 {
            let pmf = su_rejection_pmf(&c, DuConfig::new(20, n0).unwrap()).unwrap();
            assert_eq!(pmf.probs[20], 1.0);
        }
    }

    #[test]
    fn simes_bound_is_exact_level() {
        let spec = RejectionCurveSpec::simes(alpha(0.05));
        let n = 40;
        let c = spec.critical_values(n).unwrap();
        for n0 in 1..=n {
            let cfg = DuConfig::new(n, n0).unwrap();
            assert_abs_diff_eq!(fdr_upper_bound(&c, &spec, cfg).unwrap(), n0 as f64 * 0.05 / n as f64, epsilon = 1e-12);
        }
        assert!(fdr_upper_bound(&c, &spec, DuConfig::new(n, 0).unwrap()).is_err());
    }

    #[test]
    fn bound_is_sharp_for_adjusted_h2() {
        let spec = RejectionCurveSpec::adjusted_with_xstar(AdjustedKind::H2, alpha(0.05), 0.5).unwrap();
        let c = spec.critical_values(100).unwrap();
        let cfg = DuConfig::new(100, 16).unwrap();
        let exact = exact_du_fdr_su(&c, cfg).unwrap();
        let bound = fdr_upper_bound(&c, &spec, cfg).unwrap();
        assert_abs_diff_eq!(exact, bound, epsilon = 1e-10);
    }

    #[test]
    fn bound_dominates_for_truncated() {
        let spec = RejectionCurveSpec::truncated(alpha(0.05), 0.3).unwrap();
        let n = 60;
        let c = spec.critical_values(n).unwrap();
        for n0 in 1..=n {
            let cfg = DuConfig::new(n, n0).unwrap();
            let exact = exact_du_fdr_su(&c, cfg).unwrap();
            assert!(fdr_upper_bound(&c, &spec, cfg).unwrap() >= exact - 1e-12);
        }
    }

    #[test]
    fn simes_scan_matches_linear_formula() {
        let scan = worst_case_scan(&RejectionCurveSpec::simes(alpha(0.05)), 50).unwrap();
        for &(n0, f) in &scan.table {
            assert_abs_diff_eq!(f, n0 as f64 * 0.05 / 50.0, epsilon = 1e-12);
        }
        assert_eq!(scan.worst_n0, 50);
        assert!(scan.du_least_favorable);
        assert_eq!(scan.table[0], (0, 0.0));
    }

    #[test]
    fn truncated_scan_flags_lfc_assumption() {
        let scan = worst_case_scan(&RejectionCurveSpec::truncated(alpha(0.05), 0.3).unwrap(), 30).unwrap();
        assert!(!scan.du_least_favorable);
    }

    #[test]
    fn size_cap_and_mismatch() {
        let spec = RejectionCurveSpec::simes(alpha(0.05));
        assert!(matches!(worst_case_scan(&spec, 2001), Err(Error::SizeCap { .. })));
        let c = spec.critical_values(5).unwrap();
        assert!(matches!(su_rejection_pmf(&c, DuConfig::new(6, 2).unwrap()), Err(Error::LengthMismatch { .. })));
        assert!(DuConfig::new(3, 4).is_err());
    }
}
