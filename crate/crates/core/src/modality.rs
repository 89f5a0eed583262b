use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the four input channels of a video sample.
///
/// The declaration order is the canonical order used everywhere a set of
/// modalities is iterated (pair enumeration, cache sections, checkpoints).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Video,
    Face,
    Audio,
    Text,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::Video, Modality::Face, Modality::Audio, Modality::Text];

    /// Single-letter code used in subset keys such as `"V+T"`.
    pub fn letter(self) -> char {
        match self {
            Modality::Video => 'V',
            Modality::Face => 'F',
            Modality::Audio => 'A',
            Modality::Text => 'T',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'V' => Some(Modality::Video),
            'F' => Some(Modality::Face),
            'A' => Some(Modality::Audio),
            'T' => Some(Modality::Text),
            _ => None,
        }
    }

    /// Tag byte used by the feature cache and checkpoint formats.
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Modality::Video => "video",
            Modality::Face => "face",
            Modality::Audio => "audio",
            Modality::Text => "text",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseModalityError {
    #[error("empty modality subset")]
    Empty,
    #[error("unknown modality code {0:?} (expected V, F, A or T)")]
    Unknown(String),
    #[error("modality {0} listed twice")]
    Duplicate(Modality),
}

/// A non-empty subset of modalities, written as letter codes joined by `+`.
///
/// The original spelling is kept so report keys match what the user asked
/// for (`"V+T"` stays `"V+T"`, `"T+V"` stays `"T+V"`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModalitySet {
    key: String,
    members: BTreeSet<Modality>,
}

impl ModalitySet {
    pub fn all() -> Self {
        Self::from_iter_checked(Modality::ALL).expect("four distinct modalities")
    }

    pub fn from_iter_checked(iter: impl IntoIterator<Item = Modality>) -> Result<Self, ParseModalityError> {
        let mut members = BTreeSet::new();
        let mut key = String::new();
        for m in iter {
            if !members.insert(m) {
                return Err(ParseModalityError::Duplicate(m));
            }
            if !key.is_empty() {
                key.push('+');
            }
            key.push(m.letter());
        }
        if members.is_empty() {
            return Err(ParseModalityError::Empty);
        }
        Ok(Self { key, members })
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn contains(&self, m: Modality) -> bool {
        self.members.contains(&m)
    }

    /// Members in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = Modality> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &BTreeSet<Modality> {
        &self.members
    }
}

impl FromStr for ModalitySet {
    type Err = ParseModalityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseModalityError::Empty);
        }
        let mut parsed = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            let mut chars = part.chars();
            let m = match (chars.next(), chars.next()) {
                (Some(c), None) => Modality::from_letter(c),
                _ => None,
            };
            parsed.push(m.ok_or_else(|| ParseModalityError::Unknown(part.to_string()))?);
        }
        let mut set = Self::from_iter_checked(parsed)?;
        // keep the caller's spelling, normalised to upper case and no spaces
        set.key = s.split('+').map(|p| p.trim().to_ascii_uppercase()).collect::<Vec<_>>().join("+");
        Ok(set)
    }
}

impl TryFrom<String> for ModalitySet {
    type Error = ParseModalityError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<ModalitySet> for String {
    fn from(value: ModalitySet) -> Self {
        value.key
    }
}

impl fmt::Display for ModalitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

/// Binary class of a video: non-PCL (0) or PCL (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    NonPcl = 0,
    Pcl = 1,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        self as u8 as f64
    }

    pub fn is_positive(self) -> bool {
        self == Label::Pcl
    }
}

impl From<bool> for Label {
    fn from(positive: bool) -> Self {
        if positive {
            Label::Pcl
        } else {
            Label::NonPcl
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            0 => Ok(Label::NonPcl),
            1 => Ok(Label::Pcl),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(value: Label) -> Self {
        value as u8
    }
}
