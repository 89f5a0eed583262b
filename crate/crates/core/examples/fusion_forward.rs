//! One forward and backward pass through the attention fusion model, with
//! a finite-difference spot check of a few gradient entries.
//!
//!     cargo run --example fusion_forward

use std::collections::BTreeMap;

use multipcl::fusion::{bce_with_logits, fuse, FusionConfig, FusionModel, Network};
use multipcl::ingest::ModalityBundle;
use multipcl::{Label, Modality, ModalitySet};
use ndarray::Array2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // frames x width per modality
    let shape = [(Modality::Video, (3, 6)), (Modality::Face, (3, 4)), (Modality::Audio, (5, 13)), (Modality::Text, (1, 8))];
    let mut bundle = ModalityBundle::new();
    for (i, &(m, (rows, cols))) in shape.iter().enumerate() {
        let x = Array2::from_shape_fn((rows, cols), |(r, c)| (((r * 7 + c * 3 + i) % 11) as f32 - 5.0) / 5.0);
        bundle.insert(m, x)?;
    }
    let dims: BTreeMap<Modality, usize> = shape.iter().map(|&(m, (_, c))| (m, c)).collect();
    let config = FusionConfig { model_dim: 8, heads: 2, ..FusionConfig::new(ModalitySet::all(), dims) };
    let model = FusionModel::new(config.clone(), 42)?;

    let out = fuse(&bundle, &model, &config)?;
    println!("{} modality pairs, logit {:.5}", out.pairs.len(), out.logit);
    for p in out.pairs.iter().take(4) {
        if let Some(att) = &p.attention {
            println!("  {}>{} head 0, first query row: {:.3}", p.pair.0, p.pair.1, att.weights[0].row(0));
        }
    }
    let label = Label::Pcl;
    println!("loss {:.5}", bce_with_logits(&[out.logit], &[label.as_f64()])?);

    let grads = model.backward(&bundle, label)?;
    let loss = |m: &FusionModel| bce_with_logits(&[m.forward(&bundle).unwrap().logit], &[label.as_f64()]).unwrap();
    let h = 1e-5;
    for (p, (name, g)) in grads.parameters().into_iter().enumerate().step_by(9) {
        let mut up = model.clone();
        up.parameters_mut()[p].1[0] += h;
        let mut down = model.clone();
        down.parameters_mut()[p].1[0] -= h;
        println!("  {name}[0]: analytic {:+.6e} numeric {:+.6e}", g[0], (loss(&up) - loss(&down)) / (2.0 * h));
    }
    Ok(())
}
