//! Modality subset x fusion variant grid on the agreement corpus, where only
//! the video/text interaction predicts the label.
//!
//!     cargo run --release --example ablation_grid

use multipcl::fusion::FusionVariant;
use multipcl::harness::synthetic::{agreement, SyntheticDims};
use multipcl::harness::{parse_subsets, render_table, run_ablation_grid, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (corpus, _) = agreement(120, 0, SyntheticDims::default(), 0.3)?;
    let base = ExperimentConfig { model_dim: 32, heads: 2, jobs: 2, ..Default::default() };
    let subsets = parse_subsets("V,T,A,V+T")?;
    let rows = run_ablation_grid(&corpus, &base, &subsets, &[FusionVariant::Mhca, FusionVariant::Fc])?;
    print!("{}", render_table(&rows));
    Ok(())
}
