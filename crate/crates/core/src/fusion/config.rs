use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FusionError;
use crate::{Modality, ModalitySet};

/// Ordered (query modality, key/value modality) pair.
pub type Pair = (Modality, Modality);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionVariant {
    /// Pairwise cross-modality attention.
    #[default]
    Mhca,
    /// Mean-pool, concatenate, one fully connected layer.
    Fc,
}

impl std::fmt::Display for FusionVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FusionVariant::Mhca => "mhca",
            FusionVariant::Fc => "fc",
        })
    }
}

impl std::str::FromStr for FusionVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mhca" => Ok(FusionVariant::Mhca),
            "fc" => Ok(FusionVariant::Fc),
            other => Err(format!("unknown fusion variant {other:?} (expected mhca or fc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub model_dim: usize,
    pub heads: usize,
    pub modalities: ModalitySet,
    /// Explicit pair set; `None` means every ordered pair of `modalities`,
    /// self-pairs included.
    pub pairs: Option<Vec<Pair>>,
    /// Raw feature width of each modality in `modalities`.
    pub input_dims: BTreeMap<Modality, usize>,
    pub dropout: f64,
    /// One attention block for all pairs instead of one per pair.
    pub shared_attention: bool,
    /// Exclude all-zero face rows from the keys.
    pub mask_empty_faces: bool,
}

impl FusionConfig {
    /// Defaults: width 256, 4 heads, all pairs, no dropout.
    pub fn new(modalities: ModalitySet, input_dims: BTreeMap<Modality, usize>) -> Self {
        Self {
            model_dim: 256,
            heads: 4,
            modalities,
            pairs: None,
            input_dims,
            dropout: 0.0,
            shared_attention: false,
            mask_empty_faces: false,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }

    pub fn pair_list(&self) -> Vec<Pair> {
        match &self.pairs {
            Some(p) => p.clone(),
            None => self.modalities.iter().flat_map(|i| self.modalities.iter().map(move |j| (i, j))).collect(),
        }
    }

    pub fn input_dim(&self, m: Modality) -> usize {
        self.input_dims.get(&m).copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        let fail = |m: String| Err(FusionError::Config(m));
        if self.model_dim == 0 || self.heads == 0 {
            return fail("model_dim and heads must be positive".into());
        }
        if !self.model_dim.is_multiple_of(self.heads) {
            return fail(format!("heads ({}) must divide model_dim ({})", self.heads, self.model_dim));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        for m in self.modalities.iter() {
            if self.input_dim(m) == 0 {
                return fail(format!("missing or zero input dimension for {m}"));
            }
        }
        let pairs = self.pair_list();
        if pairs.is_empty() {
            return fail("pair set is empty".into());
        }
        for (i, j) in &pairs {
            for m in [i, j] {
                if !self.modalities.contains(*m) {
                    return fail(format!("pair ({i}, {j}) uses {m}, which is not in the modality set"));
                }
            }
        }
        let mut seen = pairs.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != pairs.len() {
            return fail("pair set lists a pair twice".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> BTreeMap<Modality, usize> {
        Modality::ALL.iter().map(|&m| (m, 3)).collect()
    }

    #[test]
    fn default_pairs_include_self_pairs() {
        let cfg = FusionConfig::new(ModalitySet::all(), dims());
        assert_eq!(cfg.pair_list().len(), 16);
        assert!(cfg.pair_list().contains(&(Modality::Face, Modality::Face)));
        let cfg = FusionConfig::new("V+T".parse().unwrap(), dims());
        assert_eq!(
            cfg.pair_list(),
            vec![
                (Modality::Video, Modality::Video),
                (Modality::Video, Modality::Text),
                (Modality::Text, Modality::Video),
                (Modality::Text, Modality::Text)
            ]
        );
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = FusionConfig::new("V".parse().unwrap(), dims());
        cfg.heads = 3;
        assert!(cfg.validate().is_err());
        cfg.heads = 4;
        cfg.pairs = Some(vec![]);
        assert!(cfg.validate().is_err());
        cfg.pairs = Some(vec![(Modality::Video, Modality::Text)]);
        assert!(cfg.validate().is_err());
        cfg.pairs = None;
        cfg.dropout = 1.0;
        assert!(cfg.validate().is_err());
        cfg.dropout = 0.0;
        cfg.input_dims.clear();
        assert!(cfg.validate().is_err());
    }
}
