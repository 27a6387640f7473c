//! Gelman-Rubin R̂ with explicit handling of zero within-chain variance.

use serde::{Deserialize, Serialize};

use crate::reference::SampleTrace;
use crate::{Error, Result};

pub const DEFAULT_RHAT_THRESHOLD: f64 = 1.1;

/// Which branch of the decision process settled a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceBranch {
    /// W = 0 and B = 0: every sample in every chain is the same value.
    ConstantEqual,
    /// W = 0 and B > 0: constant within chains, different across them.
    ConstantDifferent,
    /// W > 0: decided by R̂ against the threshold.
    Rhat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDiagnostic {
    pub converged: bool,
    pub branch: ConvergenceBranch,
    pub within: f64,
    pub between: f64,
    pub rhat: Option<f64>,
}

fn chain_moments(chain: &[f64]) -> (f64, f64) {
    let n = chain.len();
    if chain.windows(2).all(|w| w[0] == w[1]) {
        return (chain[0], 0.0);
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let ss: f64 = chain.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1) as f64)
}

/// Convergence decision for one scalar variable observed in `m` chains of
/// equal length `n`.
pub fn gelman_rubin<C: AsRef<[f64]>>(
    chains: &[C],
    threshold: f64,
) -> Result<ConvergenceDiagnostic> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::arg(format!("R̂ needs at least 2 chains, got {m}")));
    }
    let n = chains[0].as_ref().len();
    if n < 2 {
        return Err(Error::arg(format!(
            "R̂ needs at least 2 samples per chain, got {n}"
        )));
    }
    if chains.iter().any(|c| c.as_ref().len() != n) {
        return Err(Error::arg("chains have different lengths"));
    }
    let (means, vars): (Vec<f64>, Vec<f64>) =
        chains.iter().map(|c| chain_moments(c.as_ref())).unzip();
    let within = vars.iter().sum::<f64>() / m as f64;
    let between = if means.windows(2).all(|w| w[0] == w[1]) {
        0.0
    } else {
        let grand = means.iter().sum::<f64>() / m as f64;
        n as f64 / (m - 1) as f64 * means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>()
    };

    let (nf, mf) = (n as f64, m as f64);
    Ok(if within == 0.0 {
        let equal = between == 0.0;
        ConvergenceDiagnostic {
            converged: equal,
            branch: if equal {
                ConvergenceBranch::ConstantEqual
            } else {
                ConvergenceBranch::ConstantDifferent
            },
            within,
            between,
            rhat: None,
        }
    } else {
        let sigma_plus = (nf - 1.0) / nf * within + between / nf;
        let rhat_sq = (mf + 1.0) / mf * (sigma_plus / within) - (nf - 1.0) / (mf * nf);
        let rhat = rhat_sq.max(0.0).sqrt();
        ConvergenceDiagnostic {
            converged: rhat < threshold,
            branch: ConvergenceBranch::Rhat,
            within,
            between,
            rhat: Some(rhat),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceResult {
    pub per_variable: Vec<ConvergenceDiagnostic>,
    pub convergence_percentage: f64,
}

impl ConvergenceResult {
    pub fn from_diagnostics(per_variable: Vec<ConvergenceDiagnostic>) -> Self {
        let converged = per_variable.iter().filter(|d| d.converged).count();
        let convergence_percentage = if per_variable.is_empty() {
            0.0
        } else {
            100.0 * converged as f64 / per_variable.len() as f64
        };
        Self {
            per_variable,
            convergence_percentage,
        }
    }

    pub fn converged_count(&self) -> usize {
        self.per_variable.iter().filter(|d| d.converged).count()
    }
}

/// Applies [`gelman_rubin`] to every scalar variable; each item of
/// `variables` holds that variable's chains.
pub fn convergence_percentage<V, C>(variables: V, threshold: f64) -> Result<ConvergenceResult>
where
    V: IntoIterator,
    V::Item: AsRef<[C]>,
    C: AsRef<[f64]>,
{
    let per_variable = variables
        .into_iter()
        .map(|chains| gelman_rubin(chains.as_ref(), threshold))
        .collect::<Result<Vec<_>>>()?;
    if per_variable.is_empty() {
        return Err(Error::arg("convergence needs at least one variable"));
    }
    Ok(ConvergenceResult::from_diagnostics(per_variable))
}

/// Convergence over label traces, one trace per chain (burn-in already removed).
pub fn convergence_from_traces(
    chains: &[SampleTrace],
    threshold: f64,
) -> Result<ConvergenceResult> {
    let first = chains
        .first()
        .ok_or_else(|| Error::arg("no chains supplied"))?;
    if chains
        .iter()
        .any(|c| c.variables() != first.variables() || c.len() != first.len())
    {
        return Err(Error::arg("chains have different shapes"));
    }
    let per_variable = (0..first.variables())
        .map(|v| {
            let var_chains: Vec<Vec<f64>> = chains
                .iter()
                .map(|c| c.variable(v).iter().map(|&l| l as f64).collect())
                .collect();
            gelman_rubin(&var_chains, threshold)
        })
        .collect::<Result<Vec<_>>>()?;
    if per_variable.is_empty() {
        return Err(Error::arg("convergence needs at least one variable"));
    }
    Ok(ConvergenceResult::from_diagnostics(per_variable))
}

/// Splits chains of D-dimensional samples (e.g. motion vectors) into D scalar
/// variables, each with the same chains.
pub fn vector_components<const D: usize>(chains: &[Vec<[f64; D]>]) -> Vec<Vec<Vec<f64>>> {
    (0..D)
        .map(|d| {
            chains
                .iter()
                .map(|c| c.iter().map(|s| s[d]).collect())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_constants_converge() {
        let d = gelman_rubin(&[vec![2.0; 10], vec![2.0; 10], vec![2.0; 10]], 1.1).unwrap();
        assert!(d.converged);
        assert_eq!(d.branch, ConvergenceBranch::ConstantEqual);
        assert_eq!((d.within, d.between), (0.0, 0.0));
    }

    #[test]
    fn different_constants_do_not_converge() {
        let d = gelman_rubin(&[vec![0.1; 10], vec![0.3; 10]], 1.1).unwrap();
        assert!(!d.converged);
        assert_eq!(d.branch, ConvergenceBranch::ConstantDifferent);
        assert!(d.between > 0.0);
    }

    #[test]
    fn hand_computed_rhat() {
        // chain means 1.5 and 3.5, s^2 = 0.5 each; W = 0.5, B = 2 * 2 = 4
        let d = gelman_rubin(&[vec![1.0, 2.0], vec![3.0, 4.0]], 1.1).unwrap();
        assert!((d.within - 0.5).abs() < 1e-15);
        assert!((d.between - 4.0).abs() < 1e-15);
        // sigma+ = 0.25 + 2 = 2.25; R^2 = 1.5 * 4.5 - 0.25 = 6.5
        assert!((d.rhat.unwrap() - 6.5f64.sqrt()).abs() < 1e-12);
        assert!(!d.converged);
    }

    #[test]
    fn argument_errors() {
        assert!(gelman_rubin(&[vec![1.0, 2.0]], 1.1).is_err());
        assert!(gelman_rubin(&[vec![1.0], vec![2.0]], 1.1).is_err());
        assert!(gelman_rubin(&[vec![1.0, 2.0], vec![2.0]], 1.1).is_err());
        let none: Vec<Vec<Vec<f64>>> = vec![];
        assert!(convergence_percentage(none, 1.1).is_err());
    }

    #[test]
    fn percentage_counts() {
        let conv = vec![vec![1.0; 5], vec![1.0; 5]];
        let split = vec![vec![0.0; 5], vec![1.0; 5]];
        let all = convergence_percentage(vec![conv.clone(), conv.clone()], 1.1).unwrap();
        assert_eq!(all.convergence_percentage, 100.0);
        let half = convergence_percentage(vec![conv.clone(), split.clone()], 1.1).unwrap();
        assert_eq!(half.convergence_percentage, 50.0);
        assert_eq!(half.converged_count(), 1);
    }

    #[test]
    fn motion_vectors_count_as_two_variables() {
        // x-component constant-equal, y-component constant-different
        let chains = vec![vec![[3.0, 0.0]; 6], vec![[3.0, 1.0]; 6]];
        let scalars = vector_components(&chains);
        assert_eq!(scalars.len(), 2);
        let r = convergence_percentage(&scalars, 1.1).unwrap();
        assert_eq!(r.per_variable.len(), 2);
        assert_eq!(r.convergence_percentage, 50.0);
    }

    #[test]
    fn from_traces() {
        let a = SampleTrace::from_parts(2, 1, 2, 3, vec![1, 1, 1, 0, 1, 0]).unwrap();
        let b = SampleTrace::from_parts(2, 1, 2, 3, vec![1, 1, 1, 1, 0, 1]).unwrap();
        let r = convergence_from_traces(&[a.clone(), b], 1.1).unwrap();
        assert_eq!(r.per_variable[0].branch, ConvergenceBranch::ConstantEqual);
        assert_eq!(r.per_variable[1].branch, ConvergenceBranch::Rhat);
        let short = SampleTrace::from_parts(2, 1, 2, 2, vec![1, 1, 1, 1]).unwrap();
        assert!(convergence_from_traces(&[a, short], 1.1).is_err());
    }
}
