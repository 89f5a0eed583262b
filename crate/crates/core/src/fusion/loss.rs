use super::FusionError;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy on logits, in the stable form
/// `max(x, 0) - x y + ln(1 + e^-|x|)`.
pub fn bce_with_logits(logits: &[f64], labels: &[f64]) -> Result<f64, FusionError> {
    if logits.is_empty() {
        return Err(FusionError::Domain("empty batch".into()));
    }
    if logits.len() != labels.len() {
        return Err(FusionError::Domain(format!("{} logits but {} labels", logits.len(), labels.len())));
    }
    let mut total = 0.0;
    for (&x, &y) in logits.iter().zip(labels) {
        if y != 0.0 && y != 1.0 {
            return Err(FusionError::Domain(format!("label {y} is not 0 or 1")));
        }
        total += softplus(x) - x * y;
    }
    Ok(total / logits.len() as f64)
}
