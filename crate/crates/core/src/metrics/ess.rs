//! Effective sample size with zero-variance (inactive) handling.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::reference::SampleTrace;
use crate::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// ρ(k) = γ(k) / γ(0) with the biased (1/n) autocovariance estimator.
pub fn autocorr(seq: &[f64], k: usize) -> Result<f64> {
    let n = seq.len();
    if n < 2 {
        return Err(Error::arg("autocorrelation needs at least two samples"));
    }
    if k >= n {
        return Err(Error::arg(format!("lag {k} must be below length {n}")));
    }
    let mean = seq.iter().sum::<f64>() / n as f64;
    let gamma = |lag: usize| -> f64 {
        (0..n - lag)
            .map(|t| (seq[t] - mean) * (seq[t + lag] - mean))
            .sum::<f64>()
            / n as f64
    };
    let g0 = gamma(0);
    if g0 == 0.0 || is_constant(seq) {
        return Err(Error::arg("autocorrelation undefined for zero variance"));
    }
    Ok(gamma(k) / g0)
}

/// Autocorrelation at every lag 0..n, via zero-padded FFT. `None` when the
/// sequence is constant.
pub fn autocorrelation(seq: &[f64]) -> Option<Vec<f64>> {
    let n = seq.len();
    if n < 2 || is_constant(seq) {
        return None;
    }
    let mean = seq.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = seq
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        p.plan_fft_forward(size).process(&mut buf);
        for c in buf.iter_mut() {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        p.plan_fft_inverse(size).process(&mut buf);
    });
    let g0 = buf[0].re;
    if g0 <= 0.0 {
        return None;
    }
    Some(buf[..n].iter().map(|c| c.re / g0).collect())
}

fn is_constant<T: PartialEq>(seq: &[T]) -> bool {
    seq.windows(2).all(|w| w[0] == w[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum EssValue {
    Active { ess: f64, over_unity: bool },
    Inactive,
}

impl EssValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            EssValue::Active { ess, .. } => Some(*ess),
            EssValue::Inactive => None,
        }
    }

    pub fn is_active(&self) -> bool {
        matches!(self, EssValue::Active { .. })
    }
}

/// ESS = n / (1 + 2 Σ_{k=1..K} ρ(k)), summing consecutive pairs
/// (1,2), (3,4), ... and stopping before the first pair with a negative sum.
pub fn ess(seq: &[f64]) -> Result<EssValue> {
    let n = seq.len();
    if n < 4 {
        return Err(Error::arg(format!("ESS needs at least 4 samples, got {n}")));
    }
    let Some(rho) = autocorrelation(seq) else {
        return Ok(EssValue::Inactive);
    };
    let mut sum = 0.0;
    let mut k = 1;
    while k + 1 < n {
        let pair = rho[k] + rho[k + 1];
        if pair < 0.0 {
            break;
        }
        sum += pair;
        k += 2;
    }
    let ess = n as f64 / (1.0 + 2.0 * sum);
    Ok(EssValue::Active {
        ess,
        over_unity: ess > n as f64,
    })
}

pub fn ess_of_labels(labels: &[u16]) -> Result<EssValue> {
    if labels.len() >= 4 && is_constant(labels) {
        return Ok(EssValue::Inactive);
    }
    let seq: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    ess(&seq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssResult {
    pub per_variable: Vec<EssValue>,
    /// Mean over active variables; `None` when every variable is inactive.
    pub mean_overall_ess: Option<f64>,
    pub inactive_percentage: f64,
    pub over_unity_count: usize,
}

impl EssResult {
    pub fn from_values(per_variable: Vec<EssValue>) -> Self {
        let active: Vec<f64> = per_variable.iter().filter_map(EssValue::value).collect();
        let total = per_variable.len();
        let inactive = total - active.len();
        let over_unity_count = per_variable
            .iter()
            .filter(|v| {
                matches!(
                    v,
                    EssValue::Active {
                        over_unity: true,
                        ..
                    }
                )
            })
            .count();
        Self {
            mean_overall_ess: mean(&active),
            inactive_percentage: if total == 0 {
                0.0
            } else {
                100.0 * inactive as f64 / total as f64
            },
            over_unity_count,
            per_variable,
        }
    }

    pub fn from_trace(trace: &SampleTrace) -> Result<Self> {
        let values = (0..trace.variables())
            .map(|v| ess_of_labels(trace.variable(v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_values(values))
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum ActiveEss {
    Defined {
        software: f64,
        hardware: f64,
        variables: usize,
    },
    Undefined {
        reason: String,
    },
}

/// Mean ESS over the variables active in both results.
pub fn mean_active_ess(software: &EssResult, hardware: &EssResult) -> Result<ActiveEss> {
    if software.per_variable.len() != hardware.per_variable.len() {
        return Err(Error::arg(format!(
            "variable counts differ: {} vs {}",
            software.per_variable.len(),
            hardware.per_variable.len()
        )));
    }
    let (sw, hw): (Vec<f64>, Vec<f64>) = software
        .per_variable
        .iter()
        .zip(&hardware.per_variable)
        .filter_map(|(s, h)| Some((s.value()?, h.value()?)))
        .unzip();
    Ok(match (mean(&sw), mean(&hw)) {
        (Some(software), Some(hardware)) => ActiveEss::Defined {
            software,
            hardware,
            variables: sw.len(),
        },
        _ => ActiveEss::Undefined {
            reason: "no variable is active in both runs".into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ReferenceRng;

    #[test]
    fn lag_zero_is_one() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        assert!((autocorr(&x, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alternating_sequence() {
        let x: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let r = autocorr(&x, 1).unwrap();
        assert!((r + 1.0).abs() < 0.01, "{r}");
    }

    #[test]
    fn iid_lag_one_small() {
        let mut rng = ReferenceRng::new(11);
        let x: Vec<f64> = (0..10_000).map(|_| rng.below(4) as f64).collect();
        assert!(autocorr(&x, 1).unwrap().abs() < 0.05);
    }

    #[test]
    fn autocorr_errors() {
        assert!(autocorr(&[1.0], 0).is_err());
        assert!(autocorr(&[1.0, 2.0], 2).is_err());
        assert!(autocorr(&[3.0; 10], 1).is_err());
    }

    #[test]
    fn fft_matches_direct_sum() {
        let mut rng = ReferenceRng::new(5);
        let mut x = vec![0.0];
        for _ in 1..777 {
            let prev = *x.last().unwrap();
            x.push(0.7 * prev + rng.uniform());
        }
        let fast = autocorrelation(&x).unwrap();
        for k in [0, 1, 2, 5, 17, 100, 776] {
            assert!(
                (fast[k] - autocorr(&x, k).unwrap()).abs() < 1e-10,
                "lag {k}"
            );
        }
    }

    #[test]
    fn constant_is_inactive() {
        assert_eq!(ess(&[2.0; 50]).unwrap(), EssValue::Inactive);
        assert_eq!(ess_of_labels(&[1; 50]).unwrap(), EssValue::Inactive);
        assert!(ess(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn summary_averages_active_only() {
        let r = EssResult::from_values(vec![
            EssValue::Active {
                ess: 10.0,
                over_unity: false,
            },
            EssValue::Inactive,
            EssValue::Active {
                ess: 30.0,
                over_unity: true,
            },
            EssValue::Inactive,
        ]);
        assert_eq!(r.mean_overall_ess, Some(20.0));
        assert_eq!(r.inactive_percentage, 50.0);
        assert_eq!(r.over_unity_count, 1);
        let none = EssResult::from_values(vec![EssValue::Inactive]);
        assert_eq!(none.mean_overall_ess, None);
    }

    fn active(x: f64) -> EssValue {
        EssValue::Active {
            ess: x,
            over_unity: false,
        }
    }

    #[test]
    fn active_mask_intersection() {
        let sw = EssResult::from_values(vec![active(100.0), active(50.0), EssValue::Inactive]);
        let hw = EssResult::from_values(vec![active(80.0), EssValue::Inactive, active(10.0)]);
        assert_eq!(
            mean_active_ess(&sw, &hw).unwrap(),
            ActiveEss::Defined {
                software: 100.0,
                hardware: 80.0,
                variables: 1
            }
        );
    }

    #[test]
    fn active_identical_inputs() {
        let sw = EssResult::from_values(vec![active(4.0), active(6.0), EssValue::Inactive]);
        match mean_active_ess(&sw, &sw).unwrap() {
            ActiveEss::Defined {
                software, hardware, ..
            } => {
                assert_eq!(software, hardware);
                assert_eq!(Some(software), sw.mean_overall_ess);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn active_empty_and_mismatch() {
        let sw = EssResult::from_values(vec![active(4.0), active(6.0)]);
        let hw = EssResult::from_values(vec![EssValue::Inactive, EssValue::Inactive]);
        assert!(matches!(
            mean_active_ess(&sw, &hw).unwrap(),
            ActiveEss::Undefined { .. }
        ));
        let short = EssResult::from_values(vec![active(1.0)]);
        assert!(mean_active_ess(&sw, &short).is_err());
    }
}
