mod common;

use std::io::Cursor;

use multipcl::corpus::{
    compute_stats, fleiss_kappa, load_annotations, load_manifest, parse_manifest, stratified_folds, write_manifest,
    AnnotationMatrix, KappaError, ManifestError,
};
use common::kappa_oracle;
use multipcl::Label;
use proptest::prelude::*;

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Expand per-category counts into one rating per annotator.
fn from_counts(counts: &[Vec<usize>]) -> AnnotationMatrix {
    let ratings = counts
        .iter()
        .map(|row| row.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect())
        .collect();
    AnnotationMatrix::new(ratings, counts[0].len()).unwrap()
}

#[test]
fn kappa_standard_worked_example() {
    // ten subjects, fourteen raters, five categories
    let counts = vec![
        vec![0, 0, 0, 0, 14],
        vec![0, 2, 6, 4, 2],
        vec![0, 0, 3, 5, 6],
        vec![0, 3, 9, 2, 0],
        vec![2, 2, 8, 1, 1],
        vec![7, 7, 0, 0, 0],
        vec![3, 2, 6, 3, 0],
        vec![2, 5, 3, 2, 2],
        vec![6, 5, 2, 1, 0],
        vec![0, 2, 2, 3, 7],
    ];
    let m = from_counts(&counts);
    let k = fleiss_kappa(&m).unwrap();
    assert!((k - 0.210).abs() <= 1e-3, "{k}");
    assert!((k - kappa_oracle(m.ratings(), 5)).abs() < 1e-12);
}

#[test]
fn kappa_hand_two_by_two() {
    // items (A, A) and (A, B): P = 1/2, Pe = (3/4)^2 + (1/4)^2 = 5/8
    let m = AnnotationMatrix::from_labels(vec!["i1".into(), "i2".into()], &[vec!["A", "A"], vec!["A", "B"]]).unwrap();
    assert!((fleiss_kappa(&m).unwrap() + 1.0 / 3.0).abs() <= 1e-12);
    let perfect = AnnotationMatrix::new(vec![vec![0, 0, 0], vec![1, 1, 1], vec![0, 0, 0]], 2).unwrap();
    assert_eq!(fleiss_kappa(&perfect).unwrap(), 1.0);
}

#[test]
fn kappa_errors() {
    let one = AnnotationMatrix::new(vec![vec![0, 0], vec![0, 0]], 2).unwrap();
    assert_eq!(fleiss_kappa(&one), Err(KappaError::DegenerateAgreement));
    assert!(AnnotationMatrix::new(vec![vec![0, 1], vec![0]], 2).is_err());
    assert!(AnnotationMatrix::new(vec![vec![0]], 2).is_err());
    assert!(AnnotationMatrix::new(vec![], 2).is_err());
    assert!(AnnotationMatrix::new(vec![vec![0, 3]], 2).is_err());
}

#[test]
fn kappa_from_fixture_csv() {
    let m = load_annotations(fixture("annotations.csv")).unwrap();
    assert_eq!((m.items(), m.annotators(), m.categories()), (6, 3, 2));
    assert!((fleiss_kappa(&m).unwrap() - 5.0 / 9.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn kappa_matches_pairwise_oracle(
        rows in proptest::collection::vec(proptest::collection::vec(0usize..3, 4), 2..20)
    ) {
        let used: std::collections::HashSet<_> = rows.iter().flatten().collect();
        prop_assume!(used.len() >= 2);
        let m = AnnotationMatrix::new(rows.clone(), 3).unwrap();
        let k = fleiss_kappa(&m).unwrap();
        prop_assert!((k - kappa_oracle(&rows, 3)).abs() < 1e-9);
        prop_assert!(k <= 1.0 + 1e-12);
    }

    #[test]
    fn folds_are_stratified_partitions(pos in 5usize..60, neg in 5usize..120, k in 2usize..6, seed in any::<u64>()) {
        let mut labels = vec![Label::Pcl; pos];
        labels.extend(vec![Label::NonPcl; neg]);
        let folds = stratified_folds(&labels, k, seed).unwrap();
        let mut seen = vec![0; labels.len()];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            prop_assert_eq!(f.train.len() + f.test.len(), labels.len());
            let p = f.test.iter().filter(|&&i| labels[i].is_positive()).count();
            prop_assert!(p == pos / k || p == pos / k + 1);
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }
}

#[test]
fn fixture_stats_match_hand_sums() {
    let entries = load_manifest(fixture("manifest.jsonl")).unwrap();
    let s = compute_stats(&entries).unwrap();
    assert_eq!((s.non_pcl.count, s.pcl.count, s.total.count, s.spans.count), (3, 3, 6, 4));
    // durations 120 + 60 + 180 s and 90 + 150 + 60 s
    assert_eq!(s.non_pcl.duration_hours, 360.0 / 3600.0);
    assert_eq!(s.pcl.duration_hours, 300.0 / 3600.0);
    assert_eq!(s.total.duration_hours, 660.0 / 3600.0);
    // frames 3600 + 1500 + 5400 and 2700 + 3750 + 1800
    assert_eq!((s.non_pcl.frames, s.pcl.frames, s.total.frames), (10500.0, 8250.0, 18750.0));
    assert_eq!(s.non_pcl.mean_video_minutes, 2.0);
    assert_eq!(s.pcl.mean_video_minutes, 300.0 / 60.0 / 3.0);
    // transcripts of 11, 38, 31 and 16, 29, 0 characters
    assert_eq!(s.non_pcl.mean_transcript_chars, 80.0 / 3.0);
    assert_eq!(s.pcl.mean_transcript_chars, 15.0);
    assert_eq!(s.total.mean_transcript_chars, 125.0 / 6.0);
    // spans: 300 + 300 frames at 30 fps, 500 at 25 fps, 600 at 30 fps
    assert_eq!(s.spans.frames, 1700);
    assert_eq!(s.spans.duration_hours, 60.0 / 3600.0);
    assert_eq!(s.spans.mean_span_minutes, 0.25);
    assert_eq!(s.spans.mean_minutes_per_pcl_video, 1.0 / 3.0);
}

#[test]
fn released_manifest_counts() {
    // Only runs when the full corpus manifest is supplied.
    let Ok(path) = std::env::var("PCLMM_MANIFEST") else { return };
    let s = compute_stats(&load_manifest(path).unwrap()).unwrap();
    assert_eq!((s.total.count, s.non_pcl.count, s.pcl.count, s.spans.count), (715, 519, 196, 330));
}

#[test]
fn span_on_negative_entry_names_the_entry() {
    match load_manifest(fixture("bad_span.jsonl")) {
        Err(ManifestError::Validation { id, .. }) => assert_eq!(id, "neg-with-span"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn manifest_round_trip_keeps_unknown_fields() {
    let entries = load_manifest(fixture("manifest.jsonl")).unwrap();
    assert_eq!(entries[1].extra["uploader"], "u_193");
    let mut bytes = Vec::new();
    write_manifest(&mut bytes, &entries).unwrap();
    assert_eq!(parse_manifest(Cursor::new(bytes)).unwrap(), entries);
}
