use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::fusion::{FusionConfig, FusionVariant, Pair};
use crate::{Modality, ModalitySet};

/// How the `top_m` best epochs are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopMode {
    /// Within each fold, average the `top_m` epochs with the best held-out
    /// F1_p, then average the folds.
    #[default]
    PerFold,
    /// Average the folds epoch by epoch, then average the `top_m` epochs
    /// with the best fold-mean F1_p.
    AcrossFolds,
}

/// Everything one experiment run depends on. Serialized as a flat TOML table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subset: ModalitySet,
    pub variant: FusionVariant,
    pub model_dim: usize,
    pub heads: usize,
    /// Comma-separated ordered pairs such as `"V>T,T>V"`; empty for all pairs.
    pub pairs: String,
    pub dropout: f64,
    pub shared_attention: bool,
    pub mask_empty_faces: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub folds: usize,
    pub seed: u64,
    pub top_m: usize,
    pub top_mode: TopMode,
    /// Probability at or above which a video is called PCL.
    pub threshold: f64,
    /// Worker threads for folds and ingestion; 0 uses all cores.
    pub jobs: usize,

    /// A manifest path, or `synthetic:separable` / `synthetic:agreement`.
    pub corpus: String,
    /// Number of videos drawn for a synthetic corpus.
    pub corpus_size: usize,
    /// Directory holding media files; empty means the manifest's directory.
    pub media_root: String,
    /// Feature cache directory; relative paths resolve against the output
    /// directory.
    pub cache_dir: String,
    pub target_fps: f64,
    pub max_frames: usize,
    pub video_dim: usize,
    pub face_dim: usize,
    pub text_dim: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            subset: ModalitySet::all(),
            variant: FusionVariant::Mhca,
            model_dim: 256,
            heads: 4,
            pairs: String::new(),
            dropout: 0.0,
            shared_attention: false,
            mask_empty_faces: false,
            epochs: 20,
            batch_size: 10,
            learning_rate: 1e-4,
            folds: 5,
            seed: 0,
            top_m: 5,
            top_mode: TopMode::PerFold,
            threshold: 0.5,
            jobs: 1,
            corpus: String::new(),
            corpus_size: 60,
            media_root: String::new(),
            cache_dir: "cache".into(),
            target_fps: 1.0,
            max_frames: 256,
            video_dim: 16,
            face_dim: 16,
            text_dim: 32,
        }
    }
}

/// Parse `"V>T,T>V"` into ordered pairs.
pub fn parse_pairs(list: &str) -> Result<Vec<Pair>, HarnessError> {
    list.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let bad = || HarnessError::Config(format!("bad pair {p:?}, expected e.g. V>T"));
            let (q, k) = p.split_once('>').ok_or_else(bad)?;
            let one = |s: &str| {
                let mut chars = s.trim().chars();
                match (chars.next().and_then(Modality::from_letter), chars.next()) {
                    (Some(m), None) => Ok(m),
                    _ => Err(bad()),
                }
            };
            Ok((one(q)?, one(k)?))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Apply `key=value` overrides. Keys must name existing fields; values
    /// are read with the type of the field they replace.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, HarnessError> {
        let mut table = toml::Table::try_from(self).expect("config serializes to a table");
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("override {item:?} is not key=value")))?;
            let (key, raw) = (key.trim(), raw.trim());
            let current = table
                .get(key)
                .ok_or_else(|| HarnessError::Config(format!("unknown config key {key:?}")))?;
            let bad = |e: String| HarnessError::Config(format!("override {key}: {e}"));
            let value = match current {
                toml::Value::Integer(_) => toml::Value::Integer(raw.parse().map_err(|e| bad(format!("{e}")))?),
                toml::Value::Float(_) => toml::Value::Float(raw.parse().map_err(|e| bad(format!("{e}")))?),
                toml::Value::Boolean(_) => toml::Value::Boolean(raw.parse().map_err(|e| bad(format!("{e}")))?),
                _ => toml::Value::String(raw.to_string()),
            };
            table.insert(key.to_string(), value);
        }
        let config: Self = table.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.top_m == 0 || self.epochs < self.top_m {
            return fail(format!("need epochs >= top_m >= 1, got epochs={} top_m={}", self.epochs, self.top_m));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.folds < 2 {
            return fail(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return fail(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        parse_pairs(&self.pairs)?;
        let probe: BTreeMap<Modality, usize> = Modality::ALL.iter().map(|&m| (m, 1)).collect();
        self.fusion_config(&probe).validate().map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Fusion settings for this run given the raw feature width of each
    /// modality.
    pub fn fusion_config(&self, input_dims: &BTreeMap<Modality, usize>) -> FusionConfig {
        let pairs = parse_pairs(&self.pairs).unwrap_or_default();
        FusionConfig {
            model_dim: self.model_dim,
            heads: self.heads,
            modalities: self.subset.clone(),
            pairs: if pairs.is_empty() { None } else { Some(pairs) },
            input_dims: input_dims.iter().filter(|(m, _)| self.subset.contains(**m)).map(|(&m, &d)| (m, d)).collect(),
            dropout: self.dropout,
            shared_attention: self.shared_attention,
            mask_empty_faces: self.mask_empty_faces,
        }
    }
}
