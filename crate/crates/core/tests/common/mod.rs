//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use multipcl::fusion::{FusionConfig, FusionModel, Linear, Network};
use multipcl::ingest::ModalityBundle;
use multipcl::{Label, Modality, ModalitySet};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| r.gen_range(-scale..scale))
}

/// Bundle with the given row counts and widths, values in (-1, 1).
pub fn random_bundle(r: &mut impl Rng, shape: &BTreeMap<Modality, (usize, usize)>) -> ModalityBundle {
    let mut b = ModalityBundle::new();
    for (&m, &(rows, cols)) in shape {
        let x = Array2::from_shape_fn((rows, cols), |_| r.gen_range(-1.0f32..1.0));
        b.insert(m, x).unwrap();
    }
    b
}

// ---------------------------------------------------------------------------
// Scalar forward pass, written with plain loops over nested vectors.

type Mat = Vec<Vec<f64>>;

fn to_mat(a: &Array2<f64>) -> Mat {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn affine(x: &Mat, layer: &Linear) -> Mat {
    let w = to_mat(&layer.weight);
    let out_dim = layer.bias.len();
    x.iter()
        .map(|row| {
            (0..out_dim)
                .map(|o| {
                    let mut acc = layer.bias[o];
                    for (i, xi) in row.iter().enumerate() {
                        acc += xi * w[i][o];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn exp_normalise(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}

/// Logit of the attention fusion model, recomputed from its parameters.
pub fn scalar_logit(model: &FusionModel, bundle: &ModalityBundle) -> f64 {
    let cfg = &model.config;
    let d = cfg.model_dim;
    let dk = d / cfg.heads;
    let mut projected: BTreeMap<Modality, Mat> = BTreeMap::new();
    for m in cfg.modalities.iter() {
        let x: Mat = bundle.get(m).unwrap().rows().into_iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        projected.insert(m, affine(&x, &model.projections[&m]));
    }
    let mut z = vec![0.0; d];
    for (index, (qm, km)) in cfg.pair_list().into_iter().enumerate() {
        let block = &model.blocks[if cfg.shared_attention { 0 } else { index }];
        let q = affine(&projected[&qm], &block.query);
        let k = affine(&projected[&km], &block.key);
        let v = affine(&projected[&km], &block.value);
        let mut attended = vec![vec![0.0; d]; q.len()];
        for h in 0..cfg.heads {
            for (a, qa) in q.iter().enumerate() {
                let scores: Vec<f64> = k
                    .iter()
                    .map(|kb| (0..dk).map(|c| qa[h * dk + c] * kb[h * dk + c]).sum::<f64>() / (dk as f64).sqrt())
                    .collect();
                let w = exp_normalise(&scores);
                for c in 0..dk {
                    attended[a][h * dk + c] = w.iter().zip(&v).map(|(wb, vb)| wb * vb[h * dk + c]).sum();
                }
            }
        }
        let out = affine(&attended, &block.output);
        for c in 0..d {
            z[c] += out.iter().map(|row| row[c]).sum::<f64>() / out.len() as f64;
        }
    }
    let w = to_mat(&model.head.weight);
    model.head.bias[0] + (0..d).map(|c| z[c] * w[c][0]).sum::<f64>()
}

// ---------------------------------------------------------------------------
// Finite differences.

pub fn bce(logit: f64, label: Label) -> f64 {
    let y = label.as_f64();
    // log(1 + e^x) - x*y, evaluated piecewise
    let softplus = if logit > 0.0 { logit + (-logit).exp().ln_1p() } else { logit.exp().ln_1p() };
    softplus - logit * y
}

pub struct GradCheck {
    pub checked: usize,
    pub worst: f64,
    pub worst_name: String,
}

/// Compare every analytic parameter gradient with a central difference of
/// step `h`. Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_check<N: Network>(model: &N, bundle: &ModalityBundle, label: Label, h: f64, floor: f64) -> GradCheck {
    let grads = model.backward(bundle, label).expect("backward");
    let loss = |m: &N| bce(m.forward(bundle).unwrap().logit, label);
    let mut work = model.clone();
    let mut out = GradCheck { checked: 0, worst: 0.0, worst_name: String::new() };
    let analytic: Vec<(String, Vec<f64>)> = grads.parameters().into_iter().map(|(n, g)| (n, g.to_vec())).collect();
    for (p, (name, g)) in analytic.iter().enumerate() {
        for j in 0..g.len() {
            let original = work.parameters()[p].1[j];
            work.parameters_mut()[p].1[j] = original + h;
            let up = loss(&work);
            work.parameters_mut()[p].1[j] = original - h;
            let down = loss(&work);
            work.parameters_mut()[p].1[j] = original;
            let numeric = (up - down) / (2.0 * h);
            let err = (g[j] - numeric).abs() / g[j].abs().max(numeric.abs()).max(floor);
            out.checked += 1;
            if err > out.worst {
                out.worst = err;
                out.worst_name = format!("{name}[{j}]");
            }
        }
    }
    out
}

/// A random small configuration over all four modalities plus a matching
/// bundle: width ≤ 8, 1 or 2 heads, sequence lengths 1..=4.
pub fn random_case(r: &mut impl Rng) -> (FusionConfig, ModalityBundle) {
    let heads = r.gen_range(1..=2);
    let model_dim = heads * r.gen_range(1..=8 / heads);
    let mut shape = BTreeMap::new();
    for m in Modality::ALL {
        shape.insert(m, (r.gen_range(1..=4), r.gen_range(1..=4)));
    }
    let dims = shape.iter().map(|(&m, &(_, c))| (m, c)).collect();
    let config = FusionConfig {
        model_dim,
        heads,
        shared_attention: r.gen_bool(0.25),
        ..FusionConfig::new(ModalitySet::all(), dims)
    };
    (config, random_bundle(r, &shape))
}

// ---------------------------------------------------------------------------
// Metrics and agreement.

/// Confusion-matrix reference, computed without the library.
pub fn metric_reference(pred: &[bool], truth: &[bool]) -> [f64; 5] {
    let count = |p: bool, t: bool| pred.iter().zip(truth).filter(|&(&a, &b)| a == p && b == t).count() as f64;
    let (tp, fp, fnn, tn) = (count(true, true), count(true, false), count(false, true), count(false, false));
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { 100.0 * a / b };
    let f1 = |tp: f64, fp: f64, fnn: f64| div(2.0 * tp, 2.0 * tp + fp + fnn);
    [div(tp, tp + fp), div(tp, tp + fnn), f1(tp, fp, fnn), (f1(tp, fp, fnn) + f1(tn, fnn, fp)) / 2.0, div(tp + tn, tp + fp + fnn + tn)]
}

/// Kappa from the definition: mean pairwise agreement over ordered
/// annotator pairs against agreement expected from the pooled marginals.
pub fn kappa_oracle(ratings: &[Vec<usize>], categories: usize) -> f64 {
    let mut agree = 0.0;
    for row in ratings {
        let n = row.len();
        let mut same = 0usize;
        for a in 0..n {
            for b in 0..n {
                if a != b && row[a] == row[b] {
                    same += 1;
                }
            }
        }
        agree += same as f64 / (n * (n - 1)) as f64;
    }
    let p_bar = agree / ratings.len() as f64;
    let total = ratings.iter().map(Vec::len).sum::<usize>() as f64;
    let p_e: f64 = (0..categories)
        .map(|c| {
            let share = ratings.iter().flatten().filter(|&&v| v == c).count() as f64 / total;
            share * share
        })
        .sum();
    (p_bar - p_e) / (1.0 - p_e)
}
