//! End-point goodness of fit: mode-of-runs reference, RMSE, box statistics.

use serde::{Deserialize, Serialize};

use crate::model::LabelField;
use crate::reference::argmax_first;
use crate::{Error, Result};

/// Per-variable most frequent label across runs, ties to the smallest label.
pub fn reference_mode(runs: &[LabelField]) -> Result<LabelField> {
    let first = runs.first().ok_or_else(|| Error::arg("no runs supplied"))?;
    if let Some(bad) = runs.iter().position(|r| !r.same_shape(first)) {
        return Err(Error::arg(format!("run {bad} has different dimensions")));
    }
    let label_count = runs
        .iter()
        .flat_map(|r| r.as_slice())
        .max()
        .map_or(1, |&m| m as usize + 1);
    let mut counts = vec![0usize; label_count];
    let labels = (0..first.len())
        .map(|v| {
            counts.fill(0);
            for r in runs {
                counts[r.get(v) as usize] += 1;
            }
            argmax_first(&counts) as u16
        })
        .collect();
    LabelField::new(first.width(), first.height(), labels)
}

/// sqrt(mean (label - reference)^2), labels treated as integers.
pub fn rmse(result: &LabelField, reference: &LabelField) -> Result<f64> {
    if !result.same_shape(reference) {
        return Err(Error::arg(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            result.width(),
            result.height(),
            reference.width(),
            reference.height()
        )));
    }
    let sum: f64 = result
        .as_slice()
        .iter()
        .zip(reference.as_slice())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok((sum / result.len() as f64).sqrt())
}

/// Fraction of variables whose label differs from `truth`.
pub fn label_error_rate(result: &LabelField, truth: &LabelField) -> Result<f64> {
    if !result.same_shape(truth) {
        return Err(Error::arg("dimension mismatch"));
    }
    let wrong = result
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / result.len() as f64)
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Box-plot summary; outliers lie beyond 1.5 IQR from the quartiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub n_outliers: usize,
}

pub const OUTLIER_IQR_FACTOR: f64 = 1.5;

impl BoxSummary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("box summary needs finite, non-empty data"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q25 = quantile_sorted(&sorted, 0.25);
        let q75 = quantile_sorted(&sorted, 0.75);
        let fence = OUTLIER_IQR_FACTOR * (q75 - q25);
        let n_outliers = sorted
            .iter()
            .filter(|&&v| v < q25 - fence || v > q75 + fence)
            .count();
        Ok(Self {
            min: sorted[0],
            q25,
            median: quantile_sorted(&sorted, 0.5),
            q75,
            max: sorted[sorted.len() - 1],
            n_outliers,
        })
    }

    /// Whether the interquartile boxes intersect.
    pub fn box_overlaps(&self, other: &BoxSummary) -> bool {
        self.q25 <= other.q75 && other.q25 <= self.q75
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(v: &[u16]) -> LabelField {
        LabelField::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn reference_mode_rules() {
        let a = field(&[0, 1, 1]);
        assert_eq!(reference_mode(std::slice::from_ref(&a)).unwrap(), a);
        let runs = [field(&[1, 0, 3]), field(&[1, 1, 2]), field(&[2, 0, 2])];
        assert_eq!(reference_mode(&runs).unwrap().as_slice(), &[1, 0, 2]);
        let tie = [field(&[1]), field(&[0])];
        assert_eq!(reference_mode(&tie).unwrap().as_slice(), &[0]);
        assert!(reference_mode(&[]).is_err());
        assert!(reference_mode(&[field(&[0]), field(&[0, 1])]).is_err());
    }

    #[test]
    fn rmse_examples() {
        let a = field(&[0, 1, 2, 3]);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(rmse(&a, &field(&[1, 2, 3, 4])).unwrap(), 1.0);
        assert_eq!(
            rmse(&field(&[0, 0, 0, 0]), &field(&[2, 0, 0, 0])).unwrap(),
            1.0
        );
        assert!(rmse(&a, &field(&[0])).is_err());
    }

    #[test]
    fn error_rate() {
        assert_eq!(
            label_error_rate(&field(&[0, 1, 1, 0]), &field(&[0, 0, 1, 1])).unwrap(),
            0.5
        );
    }

    #[test]
    fn box_summary_quartiles_and_outliers() {
        let b = BoxSummary::from_values(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(
            (b.min, b.q25, b.median, b.q75, b.max),
            (1.0, 2.0, 3.0, 4.0, 5.0)
        );
        assert_eq!(b.n_outliers, 0);
        let b = BoxSummary::from_values(&[1.0, 1.0, 1.0, 1.0, 10.0]).unwrap();
        assert_eq!(b.n_outliers, 1);
        assert_eq!(BoxSummary::from_values(&[2.5]).unwrap().median, 2.5);
        assert!(BoxSummary::from_values(&[]).is_err());
    }

    #[test]
    fn overlap() {
        let a = BoxSummary::from_values(&[0.0, 1.0, 2.0]).unwrap();
        let b = BoxSummary::from_values(&[1.0, 2.0, 3.0]).unwrap();
        let c = BoxSummary::from_values(&[5.0, 6.0]).unwrap();
        assert!(a.box_overlaps(&b) && b.box_overlaps(&a));
        assert!(!a.box_overlaps(&c));
    }
}
