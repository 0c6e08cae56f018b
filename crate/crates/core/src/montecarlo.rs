//! Seeded Monte Carlo estimation of FDR and power.
//!
//! Replication `k` draws from its own ChaCha stream `(seed, k)`, and per-rep
//! outcomes are reduced in replication order, so estimates are bit-identical
//! for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{CriticalValues, RejectionCurveSpec};
use crate::error::{invalid, Result};
use crate::stepwise::{decision_from_index, select_index, PValueSample, ProcedureKind};

pub const DEFAULT_MU: f64 = 2.0;
pub const DEFAULT_RHO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DataModel {
    /// `n0` uniform p-values, the rest identically 0.
    DiracUniform { n0: usize },
    /// One-sided z-tests, false nulls shifted by `mu`.
    NormalShift { n0: usize, mu: f64 },
    /// As `NormalShift`, with a shared factor: `Z_i = √r W + √(1-r) ξ_i`.
    Equicorrelated { n0: usize, mu: f64, rho: f64 },
}

impl DataModel {
    pub fn n0(&self) -> usize {
        match *self {
            DataModel::DiracUniform { n0 } | DataModel::NormalShift { n0, .. } | DataModel::Equicorrelated { n0, .. } => n0,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        if self.n0() > n {
            return Err(invalid(format!("n0 = {} exceeds n = {n}", self.n0())));
        }
        match *self {
            DataModel::DiracUniform { .. } => Ok(()),
            DataModel::NormalShift { mu, .. } => check_mu(mu),
            DataModel::Equicorrelated { mu, rho, .. } => {
                check_mu(mu)?;
                if (0.0..1.0).contains(&rho) {
                    Ok(())
                } else {
                    Err(invalid(format!("correlation must lie in [0, 1), got {rho}")))
                }
            }
        }
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("mu must be positive, got {mu}")))
    }
}

/// Upper-tail normal probability `1 - Φ(z)`.
pub(crate) fn normal_sf(z: f64) -> f64 {
    (0.5 * libm::erfc(z / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn draw(model: &DataModel, n: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<bool>) {
    let n0 = model.n0();
    let truth: Vec<bool> = (0..n).map(|i| i < n0).collect();
    let p = match *model {
        DataModel::DiracUniform { .. } => (0..n).map(|i| if i < n0 { rng.random::<f64>() } else { 0.0 }).collect(),
        DataModel::NormalShift { mu, .. } => (0..n)
            .map(|i| {
                let z: f64 = rng.sample(StandardNormal);
                normal_sf(if i < n0 { z } else { z + mu })
            })
            .collect(),
        DataModel::Equicorrelated { mu, rho, .. } => {
            let w: f64 = rng.sample(StandardNormal);
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            (0..n)
                .map(|i| {
                    let xi: f64 = rng.sample(StandardNormal);
                    let z = a * w + b * xi;
                    normal_sf(if i < n0 { z } else { z + mu })
                })
                .collect()
        }
    };
    (p, truth)
}

/// One dataset from replication stream `rep`; `truth[i]` marks a true null.
pub fn generate(model: &DataModel, n: usize, seed: u64, rep: u64) -> Result<(PValueSample, Vec<bool>)> {
    model.validate(n)?;
    let (p, truth) = draw(model, n, &mut rep_rng(seed, rep));
    Ok((PValueSample::new(p)?, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rejections: usize,
    pub false_rejections: usize,
    pub fdp: f64,
    pub power: f64,
}

fn evaluate(p: &[f64], truth: &[bool], c: &CriticalValues, kind: ProcedureKind) -> RepOutcome {
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = select_index(&sorted, c.values(), kind.start_index(c));
    let d = decision_from_index(p, c, m);
    let v = d.rejected.iter().zip(truth).filter(|(&r, &t)| r && t).count();
    let n1 = truth.iter().filter(|&&t| !t).count();
    RepOutcome {
        rejections: d.rejections,
        false_rejections: v,
        fdp: v as f64 / d.rejections.max(1) as f64,
        power: (d.rejections - v) as f64 / n1.max(1) as f64,
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(invalid("reps must be >= 1"));
    }
    Ok(())
}

/// Per-replication outcomes in replication order.
pub fn simulate(
    model: &DataModel,
    spec: &RejectionCurveSpec,
    kind: ProcedureKind,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<RepOutcome>> {
    model.validate(n)?;
    check_reps(reps)?;
    let c = spec.critical_values(n)?;
    Ok((0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let (p, truth) = draw(model, n, &mut rep_rng(seed, rep));
            evaluate(&p, &truth, &c, kind)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean_fdp: f64,
    pub mean_power: f64,
    pub se_fdp: f64,
    pub se_power: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Mean and standard error `sd / √reps`, summed in the given order.
fn mean_se(values: impl Iterator<Item = f64> + Clone, reps: usize) -> (f64, f64) {
    let n = reps as f64;
    let mean = values.clone().sum::<f64>() / n;
    if reps < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

pub fn summarize(outcomes: &[RepOutcome], seed: u64) -> McEstimate {
    let reps = outcomes.len();
    let (mean_fdp, se_fdp) = mean_se(outcomes.iter().map(|o| o.fdp), reps);
    let (mean_power, se_power) = mean_se(outcomes.iter().map(|o| o.power), reps);
    McEstimate { mean_fdp, mean_power, se_fdp, se_power, reps, seed }
}

pub fn estimate(
    model: &DataModel,
    spec: &RejectionCurveSpec,
    kind: ProcedureKind,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    Ok(summarize(&simulate(model, spec, kind, n, reps, seed)?, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerComparison {
    pub power_a: f64,
    pub power_b: f64,
    pub fdr_a: f64,
    pub fdr_b: f64,
    /// Mean of the paired differences `power_a - power_b`.
    pub mean_diff: f64,
    pub se_diff: f64,
    pub reps: usize,
    pub seed: u64,
}

impl PowerComparison {
    /// Normal-approximation interval `mean_diff ± z·se_diff`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.mean_diff - z * self.se_diff, self.mean_diff + z * self.se_diff)
    }
}

/// Paired power comparison of two curves on common random numbers.
pub fn compare_power(
    model: &DataModel,
    spec_a: &RejectionCurveSpec,
    spec_b: &RejectionCurveSpec,
    kind: ProcedureKind,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<PowerComparison> {
    model.validate(n)?;
    check_reps(reps)?;
    let ca = spec_a.critical_values(n)?;
    let cb = spec_b.critical_values(n)?;
    let pairs: Vec<(RepOutcome, RepOutcome)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let (p, truth) = draw(model, n, &mut rep_rng(seed, rep));
            (evaluate(&p, &truth, &ca, kind), evaluate(&p, &truth, &cb, kind))
        })
        .collect();
    let (power_a, _) = mean_se(pairs.iter().map(|(a, _)| a.power), reps);
    let (power_b, _) = mean_se(pairs.iter().map(|(_, b)| b.power), reps);
    let (fdr_a, _) = mean_se(pairs.iter().map(|(a, _)| a.fdp), reps);
    let (fdr_b, _) = mean_se(pairs.iter().map(|(_, b)| b.fdp), reps);
    let (mean_diff, se_diff) = mean_se(pairs.iter().map(|(a, b)| a.power - b.power), reps);
    Ok(PowerComparison { power_a, power_b, fdr_a, fdr_b, mean_diff, se_diff, reps, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Alpha;

    fn alpha(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn dirac_uniform_extremes() {
        let (p, truth) = generate(&DataModel::DiracUniform { n0: 0 }, 5, 1, 0).unwrap();
        assert_eq!(p.values(), &[0.0; 5]);
        assert!(truth.iter().all(|&t| !t));
        let (p, truth) = generate(&DataModel::DiracUniform { n0: 6 }, 6, 1, 0).unwrap();
        assert!(p.values().iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(truth.iter().all(|&t| t));
    }

    #[test]
    fn huge_shift_gives_tiny_pvalues() {
        let (p, truth) = generate(&DataModel::NormalShift { n0: 2, mu: 38.0 }, 10, 3, 9).unwrap();
        for (v, t) in p.values().iter().zip(&truth) {
            if !t {
                assert!(*v < 1e-300, "{v}");
            }
        }
    }

    #[test]
    fn normal_sf_values() {
        assert!((normal_sf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_sf(1.959963984540054) - 0.025).abs() < 1e-15);
        assert!((normal_sf(-3.0) - 0.9986501019683699).abs() < 1e-15);
    }

    #[test]
    fn invalid_models() {
        assert!(DataModel::DiracUniform { n0: 4 }.validate(3).is_err());
        assert!(DataModel::NormalShift { n0: 1, mu: 0.0 }.validate(3).is_err());
        assert!(DataModel::Equicorrelated { n0: 1, mu: 1.0, rho: 1.0 }.validate(3).is_err());
        let spec = RejectionCurveSpec::simes(alpha(0.05));
        assert!(estimate(&DataModel::DiracUniform { n0: 1 }, &spec, ProcedureKind::StepUp, 3, 0, 1).is_err());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let m = DataModel::Equicorrelated { n0: 3, mu: 2.0, rho: 0.5 };
        let a = generate(&m, 8, 42, 7).unwrap();
        let b = generate(&m, 8, 42, 7).unwrap();
        let c = generate(&m, 8, 42, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn estimate_is_bit_reproducible_across_pools() {
        let m = DataModel::NormalShift { n0: 30, mu: 2.0 };
        let spec = RejectionCurveSpec::aorc(alpha(0.05));
        let kind = ProcedureKind::StepUpDown(0.5);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| estimate(&m, &spec, kind, 50, 400, 11).unwrap());
        let b = four.install(|| estimate(&m, &spec, kind, 50, 400, 11).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.mean_fdp.to_bits(), b.mean_fdp.to_bits());
    }

    #[test]
    fn aorc_step_up_full_power() {
        let spec = RejectionCurveSpec::aorc(alpha(0.05));
        let est = estimate(&DataModel::NormalShift { n0: 5, mu: 1.0 }, &spec, ProcedureKind::StepUp, 20, 200, 5).unwrap();
        assert_eq!(est.mean_power, 1.0);
        assert_eq!(est.mean_fdp, 5.0 / 20.0);
    }

    #[test]
    fn no_false_nulls_means_zero_power() {
        let a = RejectionCurveSpec::aorc(alpha(0.05));
        let b = RejectionCurveSpec::simes(alpha(0.05));
        let cmp = compare_power(&DataModel::NormalShift { n0: 40, mu: 2.0 }, &a, &b, ProcedureKind::StepUpDown(0.5), 40, 300, 1)
            .unwrap();
        assert_eq!((cmp.power_a, cmp.power_b, cmp.mean_diff), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identical_specs_have_zero_difference() {
        let a = RejectionCurveSpec::aorc(alpha(0.05));
        let out = compare_power(&DataModel::NormalShift { n0: 20, mu: 2.5 }, &a, &a, ProcedureKind::StepUpDown(0.5), 60, 300, 8)
            .unwrap();
        assert_eq!(out.mean_diff, 0.0);
        assert_eq!(out.se_diff, 0.0);
        assert!(out.power_a > 0.0);
    }
}
