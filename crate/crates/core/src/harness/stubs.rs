//! Fixed predictors for checking the protocol itself.

use super::{Classifier, HarnessError, Sample};

/// Knows every label.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleClassifier;

impl Classifier for OracleClassifier {
    fn fit_batch(&mut self, _batch: &[&Sample]) -> Result<f64, HarnessError> {
        Ok(0.0)
    }

    fn predict_proba(&self, sample: &Sample) -> Result<f64, HarnessError> {
        Ok(sample.label.as_f64())
    }
}

/// Returns the same probability for every sample.
#[derive(Debug, Clone, Copy)]
pub struct ConstantClassifier(pub f64);

impl Classifier for ConstantClassifier {
    fn fit_batch(&mut self, _batch: &[&Sample]) -> Result<f64, HarnessError> {
        Ok(0.0)
    }

    fn predict_proba(&self, _sample: &Sample) -> Result<f64, HarnessError> {
        Ok(self.0)
    }
}
