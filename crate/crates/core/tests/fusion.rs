mod common;

use std::collections::BTreeMap;

use common::{gradient_check, random_bundle, random_case, random_matrix, rng, scalar_logit};
use multipcl::fusion::{
    bce_with_logits, fc_fusion_baseline, fuse, mhca, softmax_rows, AttentionBlock, FcModel, FusionConfig, FusionModel,
    FusionNet, FusionVariant, Linear, Network,
};
use multipcl::ingest::ModalityBundle;
use multipcl::{Label, Modality, ModalitySet};
use ndarray::{array, Array1, Array2, Axis};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn gradients_match_central_differences() {
    let mut r = rng(11);
    for case in 0..20 {
        let (config, bundle) = random_case(&mut r);
        let model = FusionModel::new(config.clone(), 100 + case).unwrap();
        let label = Label::from(case % 2 == 0);
        let check = gradient_check(&model, &bundle, label, 1e-4, 1e-6);
        assert!(check.worst <= 1e-3, "case {case} ({config:?}): {} rel err {}", check.worst_name, check.worst);
        assert_eq!(check.checked, model.parameter_count());
    }
}

#[test]
fn fc_gradients_match_central_differences() {
    let mut r = rng(12);
    for case in 0..10 {
        let (config, bundle) = random_case(&mut r);
        let model = FcModel::new(config, case).unwrap();
        let check = gradient_check(&model, &bundle, Label::from(case % 3 == 0), 1e-4, 1e-6);
        assert!(check.worst <= 1e-3, "case {case}: {} rel err {}", check.worst_name, check.worst);
    }
}

#[test]
fn gradients_with_masked_empty_faces() {
    let mut r = rng(13);
    for case in 0..5 {
        let (mut config, mut bundle) = random_case(&mut r);
        config.mask_empty_faces = true;
        let mut face = bundle.face().unwrap().to_owned();
        face.row_mut(0).fill(0.0);
        bundle.insert(Modality::Face, face).unwrap();
        let model = FusionModel::new(config, case).unwrap();
        let check = gradient_check(&model, &bundle, Label::Pcl, 1e-4, 1e-6);
        assert!(check.worst <= 1e-3, "case {case}: {} rel err {}", check.worst_name, check.worst);
    }
}

#[test]
fn forward_matches_scalar_oracle() {
    let mut r = rng(5);
    let shape: BTreeMap<Modality, (usize, usize)> = [
        (Modality::Video, (2, 3)),
        (Modality::Face, (2, 3)),
        (Modality::Audio, (2, 13)),
        (Modality::Text, (1, 4)),
    ]
    .into_iter()
    .collect();
    let bundle = random_bundle(&mut r, &shape);
    for (d, h, shared) in [(8, 2, false), (4, 1, false), (6, 2, true)] {
        let dims = shape.iter().map(|(&m, &(_, c))| (m, c)).collect();
        let config = FusionConfig { model_dim: d, heads: h, shared_attention: shared, ..FusionConfig::new(ModalitySet::all(), dims) };
        let model = FusionModel::new(config.clone(), 77).unwrap();
        let out = fuse(&bundle, &model, &config).unwrap();
        let oracle = scalar_logit(&model, &bundle);
        assert!((out.logit - oracle).abs() <= 1e-6, "{} vs {oracle}", out.logit);
        assert!((out.probability - 1.0 / (1.0 + (-oracle).exp())).abs() <= 1e-9);
        assert_eq!(out.pairs.len(), 16);
    }
}

#[test]
fn representation_is_sum_of_pooled_pairs() {
    let mut r = rng(6);
    let (config, bundle) = random_case(&mut r);
    let model = FusionModel::new(config, 1).unwrap();
    let out = model.forward(&bundle).unwrap();
    let mut sum = Array1::<f64>::zeros(out.representation.len());
    for p in &out.pairs {
        let att = p.attention.as_ref().unwrap();
        assert_eq!(p.pooled, att.output.mean_axis(Axis(0)).unwrap());
        sum += &p.pooled;
    }
    for (a, b) in sum.iter().zip(out.representation.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn fuse_rejects_other_config_and_missing_modality() {
    let mut r = rng(7);
    let (config, bundle) = random_case(&mut r);
    let model = FusionModel::new(config.clone(), 1).unwrap();
    let other = FusionConfig { dropout: 0.1, ..config.clone() };
    assert!(fuse(&bundle, &model, &other).is_err());
    let partial = bundle.restrict(&"V+T".parse().unwrap());
    assert!(fuse(&partial, &model, &config).is_err());
}

#[test]
fn single_modality_run_uses_only_the_self_pair() {
    let mut r = rng(8);
    let (config, bundle) = random_case(&mut r);
    let t_only = FusionConfig { modalities: "T".parse().unwrap(), ..config };
    let t_only = FusionConfig { input_dims: [(Modality::Text, t_only.input_dim(Modality::Text))].into(), ..t_only };
    let model = FusionModel::new(t_only, 3).unwrap();
    let out = model.forward(&bundle).unwrap();
    assert_eq!(out.pairs.len(), 1);
    assert_eq!(out.pairs[0].pair, (Modality::Text, Modality::Text));
}

#[test]
fn fc_baseline_is_linear_in_pooled_features() {
    let dims: BTreeMap<Modality, usize> = Modality::ALL.iter().map(|&m| (m, 2)).collect();
    let config = FusionConfig { model_dim: 4, heads: 1, ..FusionConfig::new(ModalitySet::all(), dims) };
    let model = FcModel::new(config, 4).unwrap();
    let mut r = rng(9);
    let shape: BTreeMap<Modality, (usize, usize)> = Modality::ALL.iter().map(|&m| (m, (3, 2))).collect();
    let a = random_bundle(&mut r, &shape);
    // appending a row equal to the mean keeps every pooled vector unchanged
    let mut b = ModalityBundle::new();
    for m in Modality::ALL {
        let x = a.get(m).unwrap();
        let mean = x.mean_axis(Axis(0)).unwrap();
        let mut y = x.to_owned();
        y.push_row(mean.view()).unwrap();
        b.insert(m, y).unwrap();
    }
    let la = fc_fusion_baseline(&a, &model).unwrap().logit;
    let lb = fc_fusion_baseline(&b, &model).unwrap().logit;
    assert!((la - lb).abs() < 1e-6);
}

#[test]
fn loss_values() {
    assert!((bce_with_logits(&[0.0], &[1.0]).unwrap() - std::f64::consts::LN_2).abs() <= 1e-9);
    for (x, y) in [(50.0, 1.0), (-50.0, 0.0), (50.0, 0.0), (-50.0, 1.0)] {
        let l = bce_with_logits(&[x], &[y]).unwrap();
        assert!(l.is_finite() && l >= 0.0);
    }
    assert!((bce_with_logits(&[50.0], &[0.0]).unwrap() - 50.0).abs() < 1e-12);
    assert!(bce_with_logits(&[50.0], &[1.0]).unwrap() < 1e-20);
}

#[test]
fn checkpoint_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(10);
    let (config, bundle) = random_case(&mut r);
    for variant in [FusionVariant::Mhca, FusionVariant::Fc] {
        let model = FusionNet::new(variant, config.clone(), 5).unwrap();
        let path = dir.path().join(format!("{variant}.pclm"));
        multipcl::fusion::save_checkpoint(&model, &path).unwrap();
        let back = multipcl::fusion::load_checkpoint(&path, Some(&config)).unwrap();
        let (a, b) = (model.forward(&bundle).unwrap().logit, back.forward(&bundle).unwrap().logit);
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

fn block(r: &mut impl Rng, d: usize) -> AttentionBlock {
    AttentionBlock::glorot(d, r)
}

#[test]
fn attention_weights_are_normalised_and_shift_invariant() {
    let mut r = rng(20);
    for _ in 0..100 {
        let (n, m) = (r.gen_range(1..6), r.gen_range(1..6));
        let s = random_matrix(&mut r, n, m, 5.0);
        let w = softmax_rows(s.view(), None);
        for row in w.rows() {
            assert!((row.sum() - 1.0).abs() <= 1e-6);
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        let shifts = Array1::from_shape_fn(n, |_| r.gen_range(-100.0..100.0));
        let shifted = &s + &shifts.insert_axis(Axis(1));
        let w2 = softmax_rows(shifted.view(), None);
        for (a, b) in w.iter().zip(w2.iter()) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn attention_is_key_permutation_equivariant() {
    let mut r = rng(21);
    for _ in 0..100 {
        let heads = r.gen_range(1..=2);
        let d = heads * r.gen_range(1..=4);
        let b = block(&mut r, d);
        let nq = r.gen_range(1..5);
        let q = random_matrix(&mut r, nq, d, 1.0);
        let nk = r.gen_range(1..6);
        let kv = random_matrix(&mut r, nk, d, 1.0);
        let mut perm: Vec<usize> = (0..nk).collect();
        for i in (1..nk).rev() {
            perm.swap(i, r.gen_range(0..=i));
        }
        let kv_p = kv.select(Axis(0), &perm);
        let a = mhca(q.view(), kv.view(), &b, heads, None).unwrap();
        let c = mhca(q.view(), kv_p.view(), &b, heads, None).unwrap();
        for (x, y) in a.output.iter().zip(c.output.iter()) {
            assert!((x - y).abs() <= 1e-9);
        }
        for (wa, wc) in a.weights.iter().zip(&c.weights) {
            assert_eq!(wa.select(Axis(1), &perm).dim(), wc.dim());
            for (x, y) in wa.select(Axis(1), &perm).iter().zip(wc.iter()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn zero_values_give_zero_attention() {
    let mut r = rng(22);
    for _ in 0..100 {
        let d = 2 * r.gen_range(1..=4);
        let mut b = block(&mut r, d);
        b.value = Linear::zeros(d, d);
        b.output.bias = Array1::from_shape_fn(d, |_| r.gen_range(-1.0..1.0));
        let nq = r.gen_range(1..5);
        let q = random_matrix(&mut r, nq, d, 1.0);
        let nk = r.gen_range(1..5);
        let kv = random_matrix(&mut r, nk, d, 1.0);
        let out = mhca(q.view(), kv.view(), &b, 2, None).unwrap();
        assert!(out.attended.iter().all(|&v| v == 0.0));
        for row in out.output.rows() {
            assert_eq!(row, b.output.bias.view());
        }
    }
}

#[test]
fn hand_computed_attention() {
    // identity projections, one head, width 2
    let mut b = AttentionBlock::zeros(2);
    for l in [&mut b.query, &mut b.key, &mut b.value, &mut b.output] {
        l.weight = Array2::eye(2);
    }
    let q = array![[1.0, 0.0]];
    let kv = array![[2.0, 0.0], [0.0, 2.0]];
    let out = mhca(q.view(), kv.view(), &b, 1, None).unwrap();
    // scores 2/sqrt2 and 0
    let e = (2.0f64 / 2f64.sqrt()).exp();
    let w0 = e / (e + 1.0);
    assert!((out.weights[0][[0, 0]] - w0).abs() < 1e-12);
    assert!((out.output[[0, 0]] - 2.0 * w0).abs() < 1e-12);
    assert!((out.output[[0, 1]] - 2.0 * (1.0 - w0)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probability_in_unit_interval(seed in 0u64..1000) {
        let mut r = rng(seed);
        let (config, bundle) = random_case(&mut r);
        let model = FusionModel::new(config, seed).unwrap();
        let out = model.forward(&bundle).unwrap();
        prop_assert!(out.probability > 0.0 && out.probability < 1.0);
        prop_assert!(out.logit.is_finite());
    }

    #[test]
    fn softmax_rows_sum_to_one(values in proptest::collection::vec(-700.0f64..700.0, 1..12)) {
        let s = Array2::from_shape_vec((1, values.len()), values).unwrap();
        let w = softmax_rows(s.view(), None);
        prop_assert!((w.sum() - 1.0).abs() <= 1e-9);
    }
}
