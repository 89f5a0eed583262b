//! Five-fold cross-validation with top-epoch averaging on a generated corpus.
//!
//!     cargo run --release --example cross_validation [separable|agreement]

use multipcl::harness::synthetic::{agreement, separable, SyntheticDims};
use multipcl::harness::{cross_validate, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind = std::env::args().nth(1).unwrap_or_else(|| "separable".into());
    let dims = SyntheticDims::default();
    let (corpus, subset) = match kind.as_str() {
        "separable" => (separable(60, 0, dims, 0.5)?, "V+A+T+F"),
        "agreement" => (agreement(120, 0, dims, 0.3)?.0, "V+T"),
        other => return Err(format!("unknown corpus {other}").into()),
    };
    let config = ExperimentConfig { subset: subset.parse()?, model_dim: 32, heads: 2, ..Default::default() };
    let report = cross_validate(&config, &corpus)?;
    println!("{kind} corpus, {} items, {} {}", corpus.len(), report.subset, report.variant);
    for fold in &report.per_fold {
        println!("  fold {}: top epochs {:?}, {}", fold.fold, fold.epochs, fold.metrics.row());
    }
    println!("P_p R_p F1_p F1_macro Acc: {}", report.metrics.row());
    Ok(())
}
