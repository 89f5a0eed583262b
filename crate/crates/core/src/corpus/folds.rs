use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ManifestEntry;
use crate::{rng, Label};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoldError {
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("class {label:?} has {count} members, fewer than k = {k}")]
    ClassTooSmall { label: Label, count: usize, k: usize },
}

/// One train/test split, both as sorted indices into the input list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Label-stratified k-fold partition.
///
/// Each class is shuffled with a seeded stream and dealt round-robin into
/// the k test folds. The second class continues dealing where the first
/// stopped so fold sizes stay within one of each other overall.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Fold>, FoldError> {
    if k < 2 {
        return Err(FoldError::TooFewFolds(k));
    }
    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut next = 0usize;
    for label in [Label::NonPcl, Label::Pcl] {
        let mut members: Vec<usize> = labels.iter().enumerate().filter(|(_, &l)| l == label).map(|(i, _)| i).collect();
        if members.len() < k {
            return Err(FoldError::ClassTooSmall { label, count: members.len(), k });
        }
        members.shuffle(&mut rng::stream(seed, "folds", label as u64));
        for idx in members {
            tests[next].push(idx);
            next = (next + 1) % k;
        }
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train = (0..labels.len()).filter(|i| test.binary_search(i).is_err()).collect();
            Fold { train, test }
        })
        .collect())
}

pub fn make_folds(entries: &[ManifestEntry], k: usize, seed: u64) -> Result<Vec<Fold>, FoldError> {
    let labels: Vec<Label> = entries.iter().map(|e| e.label).collect();
    stratified_folds(&labels, k, seed)
}
