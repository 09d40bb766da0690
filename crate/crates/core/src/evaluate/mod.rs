//! Validation studies: cross-validated prediction error, coverage of
//! parameter recovery, and posterior-predictive correlation checks.

mod cv;
mod ppc;
mod recovery;

pub use cv::{cross_validate, predict_records, CvReport, CvStudy, FoldScore, ModelChoice};
pub use ppc::{posterior_predictive_correlations, PairCorrelation, PpcReport, PPC_QUANTILES};
pub use recovery::{parameter_recovery, CoverageEntry, RecoveryConfig, RecoveryReport};

use crate::{Error, Result};

/// Mean squared error divided by the sample variance (n − 1) of the truths.
pub fn smse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::UndefinedSmse(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    if truths.len() < 2 {
        return Err(Error::UndefinedSmse(format!("need at least 2 test points, got {}", truths.len())));
    }
    let var = crate::stats::variance(truths);
    if !(var > 0.0) {
        return Err(Error::UndefinedSmse("test responses are constant".into()));
    }
    let mse = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / truths.len() as f64;
    Ok(mse / var)
}

/// Right-aligned fixed-width cell.
pub(crate) fn cell(s: impl std::fmt::Display, width: usize) -> String {
    format!("{s:>width$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smse_cases() {
        let t = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(smse(&t, &t).unwrap(), 0.0);
        assert_eq!(smse(&[0.0, 0.0], &[0.0, 2.0]).unwrap(), 1.0);
        // The mean predictor scores (n − 1)/n under the n − 1 variance.
        let m = crate::stats::mean(&t);
        assert!((smse(&[m; 4], &t).unwrap() - 0.75).abs() < 1e-12);
        assert!(matches!(smse(&[1.0, 2.0], &[3.0, 3.0]), Err(Error::UndefinedSmse(_))));
        assert!(matches!(smse(&[1.0], &[3.0]), Err(Error::UndefinedSmse(_))));
    }
}
