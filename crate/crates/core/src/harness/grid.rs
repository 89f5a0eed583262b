use std::io::Write;

use super::{cross_validate, CvReport, ExperimentConfig, HarnessError, Sample};
use crate::fusion::FusionVariant;
use crate::ModalitySet;

/// The fifteen subsets in the usual reporting order: singles, pairs,
/// triples, then all four.
pub const STANDARD_SUBSETS: [&str; 15] = [
    "A", "T", "F", "V", "A+F", "A+T", "T+F", "A+V", "V+F", "V+T", "A+T+F", "V+T+F", "V+T+A", "V+A+F", "V+A+T+F",
];

pub fn standard_subsets() -> Vec<ModalitySet> {
    STANDARD_SUBSETS.iter().map(|s| s.parse().expect("valid subset")).collect()
}

/// Parse a comma-separated subset list such as `"V,T,V+T"`.
pub fn parse_subsets(list: &str) -> Result<Vec<ModalitySet>, HarnessError> {
    let subsets = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<ModalitySet>().map_err(|e| HarnessError::Config(format!("subset {s:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if subsets.is_empty() {
        return Err(HarnessError::Config("empty subset list".into()));
    }
    Ok(subsets)
}

/// The configuration of one grid cell: `base` with subset and variant
/// replaced and nothing else touched.
pub fn cell_config(base: &ExperimentConfig, subset: &ModalitySet, variant: FusionVariant) -> ExperimentConfig {
    ExperimentConfig { subset: subset.clone(), variant, ..base.clone() }
}

/// One cross-validation per subset and variant, rows ordered subset-major.
pub fn run_ablation_grid(
    corpus: &[Sample],
    base: &ExperimentConfig,
    subsets: &[ModalitySet],
    variants: &[FusionVariant],
) -> Result<Vec<CvReport>, HarnessError> {
    let mut rows = Vec::with_capacity(subsets.len() * variants.len());
    for subset in subsets {
        for &variant in variants {
            log::info!("cross-validating {} / {variant}", subset.key());
            rows.push(cross_validate(&cell_config(base, subset, variant), corpus)?);
        }
    }
    Ok(rows)
}

/// One JSON object per line.
pub fn write_records(mut out: impl Write, rows: &[CvReport]) -> std::io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Plain-text table: modality subset, fusion, then the five scores.
pub fn render_table(rows: &[CvReport]) -> String {
    let width = rows.iter().map(|r| r.subset.len()).max().unwrap_or(0).max("Modality".len());
    let mut out = format!(
        "{:<width$}  {:<6}  {:>6} {:>6} {:>6} {:>8} {:>6}\n",
        "Modality", "Fusion", "P_p", "R_p", "F1_p", "F1_macro", "Acc"
    );
    for r in rows {
        let m = &r.metrics;
        out.push_str(&format!(
            "{:<width$}  {:<6}  {:>6.2} {:>6.2} {:>6.2} {:>8.2} {:>6.2}\n",
            r.subset, r.variant, m.precision, m.recall, m.f1, m.f1_macro, m.accuracy
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_keep_their_spelling() {
        let keys: Vec<String> = parse_subsets("V, T,V+T").unwrap().iter().map(|s| s.key().to_string()).collect();
        assert_eq!(keys, ["V", "T", "V+T"]);
        assert!(parse_subsets("V,Q").is_err());
        assert!(parse_subsets(" , ").is_err());
        assert_eq!(standard_subsets().len(), 15);
    }
}
