//! Step-up, step-down and step-up-down decisions on a p-value vector.

use serde::{Deserialize, Serialize};

use crate::curves::{CriticalValues, RejectionCurveSpec};
use crate::error::{domain, invalid, Error, Result};

/// Observed p-values, unordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueSample {
    values: Vec<f64>,
}

impl PValueSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("no p-values"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(domain(format!("p-value #{} = {v} is outside [0, 1]", i + 1)));
        }
        Ok(PValueSample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Order statistics `p_{1:n} ≤ … ≤ p_{n:n}`.
    pub fn sorted(&self) -> Vec<f64> {
        let mut s = self.values.clone();
        s.sort_by(f64::total_cmp);
        s
    }

    /// Empirical cdf at `t`.
    pub fn ecdf(&self, t: f64) -> f64 {
        self.values.iter().filter(|&&p| p <= t).count() as f64 / self.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProcedureKind {
    StepUp,
    StepDown,
    /// Step-up-down with order parameter `λ ∈ [0, 1]`.
    StepUpDown(f64),
}

impl ProcedureKind {
    pub fn step_up_down(lambda: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&lambda) {
            Ok(ProcedureKind::StepUpDown(lambda))
        } else {
            Err(invalid(format!("lambda must lie in [0, 1], got {lambda}")))
        }
    }

    /// The starting rank `λ_n` for these critical values.
    pub fn start_index(&self, c: &CriticalValues) -> usize {
        match *self {
            ProcedureKind::StepUp => c.n(),
            ProcedureKind::StepDown => 1,
            ProcedureKind::StepUpDown(lambda) => lambda_index(lambda, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub rejected: Vec<bool>,
    pub rejections: usize,
    /// `α_{m_n:n}`, `None` when nothing is rejected.
    pub threshold: Option<f64>,
    /// `m_n`, with 0 standing for `sup ∅`.
    pub m_index: usize,
}

/// `λ_n = inf{j : α_{j:n} ≥ λ}`, and `n` when no such `j` exists.
pub fn lambda_index(lambda: f64, c: &CriticalValues) -> usize {
    c.values().iter().position(|&v| v >= lambda).map_or(c.n(), |j| j + 1)
}

/// The index `m_n` selected on sorted p-values, starting at rank `start`.
pub(crate) fn select_index(sorted: &[f64], c: &[f64], start: usize) -> usize {
    let n = sorted.len();
    debug_assert!(start >= 1 && start <= n);
    if sorted[start - 1] <= c[start - 1] {
        // step down from λ_n towards n
        let mut m = start;
        while m < n && sorted[m] <= c[m] {
            m += 1;
        }
        m
    } else {
        // step up from λ_n towards 1
        (1..start).rev().find(|&j| sorted[j - 1] <= c[j - 1]).unwrap_or(0)
    }
}

pub fn decide(p: &PValueSample, c: &CriticalValues, kind: ProcedureKind) -> Result<Decision> {
    if p.len() != c.n() {
        return Err(Error::LengthMismatch { expected: c.n(), got: p.len() });
    }
    let sorted = p.sorted();
    let m = select_index(&sorted, c.values(), kind.start_index(c));
    Ok(decision_from_index(p.values(), c, m))
}

pub(crate) fn decision_from_index(p: &[f64], c: &CriticalValues, m: usize) -> Decision {
    if m == 0 {
        return Decision { rejected: vec![false; p.len()], rejections: 0, threshold: None, m_index: 0 };
    }
    let t = c.get(m);
    let rejected: Vec<bool> = p.iter().map(|&pi| pi <= t).collect();
    let rejections = rejected.iter().filter(|&&r| r).count();
    Decision { rejected, rejections, threshold: Some(t), m_index: m }
}

/// Crossing points of the ecdf with the rejection curve of `spec`.
///
/// Equal p-values are collapsed; the largest distinct value only needs the
/// ecdf to sit on or above the curve.
pub fn crossing_points(p: &PValueSample, spec: &RejectionCurveSpec) -> Vec<f64> {
    let sorted = p.sorted();
    let n = sorted.len() as f64;
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match distinct.last_mut() {
            Some(last) if last.0 == v => last.1 = f,
            _ => distinct.push((v, f)),
        }
    }
    let above = |&(t, f): &(f64, f64)| f >= spec.rejection_curve(t).expect("p-values are in [0, 1]");
    let flags: Vec<bool> = distinct.iter().map(above).collect();
    distinct
        .iter()
        .enumerate()
        .filter(|&(k, _)| flags[k] && flags.get(k + 1).is_none_or(|&next| !next))
        .map(|(_, &(t, _))| t)
        .collect()
}

fn check_truth(decision: &Decision, truth: &[bool]) -> Result<()> {
    if decision.rejected.len() != truth.len() {
        return Err(Error::LengthMismatch { expected: decision.rejected.len(), got: truth.len() });
    }
    Ok(())
}

/// Number of rejected true nulls.
pub fn false_rejections(decision: &Decision, truth: &[bool]) -> Result<usize> {
    check_truth(decision, truth)?;
    Ok(decision.rejected.iter().zip(truth).filter(|(&r, &t)| r && t).count())
}

/// False discovery proportion `V / (R ∨ 1)`; `truth[i]` marks a true null.
pub fn fdp(decision: &Decision, truth: &[bool]) -> Result<f64> {
    let v = false_rejections(decision, truth)?;
    Ok(v as f64 / decision.rejections.max(1) as f64)
}

/// Proportion of false nulls rejected, `(R - V) / (n₁ ∨ 1)`.
pub fn power_proportion(decision: &Decision, truth: &[bool]) -> Result<f64> {
    let v = false_rejections(decision, truth)?;
    let n1 = truth.iter().filter(|&&t| !t).count();
    Ok((decision.rejections - v) as f64 / n1.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Alpha;

    fn sample(v: &[f64]) -> PValueSample {
        PValueSample::new(v.to_vec()).unwrap()
    }

    fn cv(v: &[f64]) -> CriticalValues {
        CriticalValues::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn step_up_example() {
        let c = RejectionCurveSpec::simes(Alpha::new(0.15).unwrap()).critical_values(3).unwrap();
        let d = decide(&sample(&[0.01, 0.02, 0.9]), &c, ProcedureKind::StepUp).unwrap();
        assert_eq!(d.rejections, 2);
        assert!((d.threshold.unwrap() - 0.10).abs() < 1e-15);
        assert_eq!(d.rejected, vec![true, true, false]);
        assert_eq!(d.m_index, 2);
    }

    #[test]
    fn step_down_example() {
        let c = cv(&[0.05, 0.10, 0.15]);
        let d = decide(&sample(&[0.04, 0.06, 0.2]), &c, ProcedureKind::StepDown).unwrap();
        assert_eq!(d.rejections, 2);
        assert_eq!(d.threshold, Some(0.10));
    }

    #[test]
    fn nothing_rejected() {
        let c = cv(&[0.05, 0.10, 0.15]);
        for kind in [ProcedureKind::StepUp, ProcedureKind::StepDown, ProcedureKind::StepUpDown(0.1)] {
            let d = decide(&sample(&[0.3, 0.5, 0.2]), &c, kind).unwrap();
            assert_eq!(d.rejections, 0);
            assert_eq!(d.threshold, None);
            assert_eq!(d.m_index, 0);
        }
    }

    #[test]
    fn lambda_index_examples() {
        let simes = RejectionCurveSpec::simes(Alpha::new(0.05).unwrap()).critical_values(10).unwrap();
        assert_eq!(lambda_index(0.0, &simes), 1);
        assert_eq!(lambda_index(1.0, &simes), 10);
        assert_eq!(lambda_index(0.12, &cv(&[0.05, 0.10, 0.15])), 3);
    }

    #[test]
    fn length_mismatch() {
        let c = cv(&[0.05, 0.10]);
        assert!(matches!(
            decide(&sample(&[0.1]), &c, ProcedureKind::StepUp),
            Err(Error::LengthMismatch { .. })
        ));
        let d = decide(&sample(&[0.01, 0.5]), &c, ProcedureKind::StepUp).unwrap();
        assert!(fdp(&d, &[true]).is_err());
        assert!(power_proportion(&d, &[true, true, false]).is_err());
    }

    #[test]
    fn sample_validation() {
        assert!(PValueSample::new(vec![]).is_err());
        assert!(PValueSample::new(vec![0.2, 1.5]).is_err());
        assert!(PValueSample::new(vec![f64::NAN]).is_err());
        assert!(PValueSample::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn crossing_point_examples() {
        let simes = RejectionCurveSpec::simes(Alpha::new(0.15).unwrap());
        assert_eq!(crossing_points(&sample(&[0.01, 0.02, 0.9]), &simes), vec![0.02]);
        let aorc = RejectionCurveSpec::aorc(Alpha::new(0.05).unwrap());
        assert_eq!(crossing_points(&sample(&[1.0, 1.0, 1.0]), &aorc), vec![1.0]);
        let simes = RejectionCurveSpec::simes(Alpha::new(0.05).unwrap());
        assert!(crossing_points(&sample(&[0.5]), &simes).is_empty());
    }

    #[test]
    fn tied_pvalues_at_threshold_all_rejected() {
        let c = cv(&[0.01, 0.02, 0.03, 0.04]);
        let d = decide(&sample(&[0.02, 0.02, 0.02, 0.5]), &c, ProcedureKind::StepUp).unwrap();
        assert_eq!(d.rejections, 3);
        assert_eq!(d.m_index, 3);
    }

    #[test]
    fn error_rates() {
        let d = Decision { rejected: vec![true, true, true, true, false], rejections: 4, threshold: Some(0.1), m_index: 4 };
        let truth = [true, false, false, false, false];
        assert_eq!(fdp(&d, &truth).unwrap(), 0.25);
        assert_eq!(power_proportion(&d, &truth).unwrap(), 0.75);
        assert_eq!(fdp(&d, &[true; 5]).unwrap(), 1.0);
        assert_eq!(power_proportion(&d, &[true; 5]).unwrap(), 0.0);

        let none = Decision { rejected: vec![false; 5], rejections: 0, threshold: None, m_index: 0 };
        assert_eq!(fdp(&none, &truth).unwrap(), 0.0);

        let one = Decision { rejected: vec![false, true, false, false, false], rejections: 1, threshold: Some(0.1), m_index: 1 };
        assert_eq!(power_proportion(&one, &truth).unwrap(), 0.25);
        let all = Decision { rejected: vec![false, true, true, true, true], rejections: 4, threshold: Some(0.1), m_index: 4 };
        assert_eq!(power_proportion(&all, &truth).unwrap(), 1.0);
    }

    #[test]
    fn aorc_step_up_rejects_everything() {
        let c = RejectionCurveSpec::aorc(Alpha::new(0.05).unwrap()).critical_values(4).unwrap();
        let d = decide(&sample(&[0.99, 1.0, 0.7, 0.3]), &c, ProcedureKind::StepUp).unwrap();
        assert_eq!(d.rejections, 4);
    }
}
