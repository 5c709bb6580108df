//! Object-type labels and their static/dynamic kind.
//!
//! A [`Taxonomy`] stores its labels in canonical order: every static label
//! before every dynamic one, each group sorted lexicographically. Label ids
//! are positions in that order, so sorting ids sorts labels canonically.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Label the rasterizer injects at the ego vehicle's own cell.
pub const EGO_LABEL: &str = "ego car";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Map layers: lanes, walkways, crossings, stop areas.
    Static,
    /// Annotated participants and movable objects.
    Dynamic,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Static => "static",
            Kind::Dynamic => "dynamic",
        })
    }
}

impl FromStr for Kind {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(Kind::Static),
            "dynamic" => Ok(Kind::Dynamic),
            other => Err(TaxonomyError::UnknownKind(other.to_string())),
        }
    }
}

/// Index of a label inside its [`Taxonomy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub(crate) u16);

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("invalid label {0:?}: labels are words separated by single spaces without '<', '>' or tabs")]
    InvalidLabel(String),
    #[error("unknown kind {0:?}, expected static or dynamic")]
    UnknownKind(String),
    #[error("line {line}: expected `label<TAB>static|dynamic`")]
    MalformedLine { line: usize },
    #[error("taxonomy is empty")]
    Empty,
    #[error("taxonomy has more than {max} labels", max = u16::MAX)]
    TooLarge,
}

/// Label occurrence counts of the reference corpus, paired with each label's
/// kind. "lane" has no reported count and carries weight zero.
pub const DEFAULT_OCCURRENCES: [(&str, Kind, u32); 29] = [
    ("walkway", Kind::Static, 61879),
    ("intersection", Kind::Static, 51285),
    ("pedestrian crossing", Kind::Static, 22448),
    ("turn stop area", Kind::Static, 16684),
    ("car park area", Kind::Static, 14575),
    ("traffic light stop area", Kind::Static, 13618),
    ("pedestrian crossing stop area", Kind::Static, 9337),
    ("stop sign area", Kind::Static, 3615),
    ("ego car", Kind::Dynamic, 3006),
    ("car", Kind::Dynamic, 2780),
    ("barrier", Kind::Dynamic, 2073),
    ("traffic cone", Kind::Dynamic, 1536),
    ("adult", Kind::Dynamic, 1122),
    ("pushable pullable", Kind::Dynamic, 536),
    ("truck", Kind::Dynamic, 323),
    ("construction worker", Kind::Dynamic, 126),
    ("bicycle", Kind::Dynamic, 102),
    ("motorcycle", Kind::Dynamic, 87),
    ("bus rigid", Kind::Dynamic, 66),
    ("trailer", Kind::Dynamic, 43),
    ("emergency police", Kind::Dynamic, 30),
    ("construction vehicle", Kind::Dynamic, 23),
    ("bicycle rack", Kind::Dynamic, 13),
    ("child", Kind::Dynamic, 9),
    ("debris", Kind::Dynamic, 8),
    ("police officer", Kind::Dynamic, 8),
    ("animal", Kind::Dynamic, 5),
    ("stroller", Kind::Dynamic, 3),
    ("lane", Kind::Static, 0),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    labels: Vec<String>,
    kinds: Vec<Kind>,
    by_name: BTreeMap<String, LabelId>,
    max_words: usize,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::new(
            DEFAULT_OCCURRENCES
                .iter()
                .map(|&(label, kind, _)| (label.to_string(), kind)),
        )
        .expect("built-in taxonomy is valid")
    }
}

fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && !label.contains(['<', '>', '\t'])
        && label.split(' ').all(|w| !w.is_empty() && !w.chars().any(char::is_whitespace))
}

impl Taxonomy {
    pub fn new(entries: impl IntoIterator<Item = (String, Kind)>) -> Result<Self, TaxonomyError> {
        let mut entries: Vec<(String, Kind)> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(TaxonomyError::Empty);
        }
        if entries.len() > u16::MAX as usize {
            return Err(TaxonomyError::TooLarge);
        }
        for (label, _) in &entries {
            if !valid_label(label) {
                return Err(TaxonomyError::InvalidLabel(label.clone()));
            }
        }
        entries.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        let mut by_name = BTreeMap::new();
        for (i, (label, _)) in entries.iter().enumerate() {
            if by_name.insert(label.clone(), LabelId(i as u16)).is_some() {
                return Err(TaxonomyError::DuplicateLabel(label.clone()));
            }
        }
        let max_words = entries.iter().map(|(l, _)| l.split(' ').count()).max().unwrap_or(1);
        let (labels, kinds) = entries.into_iter().unzip();
        Ok(Taxonomy { labels, kinds, by_name, max_words })
    }

    /// Parses the `label<TAB>static|dynamic` line format. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, TaxonomyError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (label, kind) = line
                .split_once('\t')
                .ok_or(TaxonomyError::MalformedLine { line: i + 1 })?;
            entries.push((label.trim().to_string(), kind.trim().parse()?));
        }
        Taxonomy::new(entries)
    }

    /// Renders the line format accepted by [`Taxonomy::parse`], in canonical order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (label, kind) in self.labels.iter().zip(&self.kinds) {
            out.push_str(&format!("{label}\t{kind}\n"));
        }
        out
    }

    /// Hex SHA-256 of [`Taxonomy::render`].
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.render().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<LabelId> {
        self.by_name.get(label).copied()
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.labels[id.index()]
    }

    pub fn kind(&self, id: LabelId) -> Kind {
        self.kinds[id.index()]
    }

    pub fn contains(&self, label: &str) -> bool {
        self.by_name.contains_key(label)
    }

    pub fn ids(&self) -> impl Iterator<Item = LabelId> + '_ {
        (0..self.labels.len()).map(|i| LabelId(i as u16))
    }

    pub fn iter(&self) -> impl Iterator<Item = (LabelId, &str, Kind)> + '_ {
        self.labels
            .iter()
            .zip(&self.kinds)
            .enumerate()
            .map(|(i, (l, &k))| (LabelId(i as u16), l.as_str(), k))
    }

    /// Longest label that is a prefix of `words`, with the number of words it spans.
    pub fn longest_match(&self, words: &[&str]) -> Option<(LabelId, usize)> {
        let mut candidate = String::new();
        let mut best = None;
        for (n, word) in words.iter().take(self.max_words).enumerate() {
            if n > 0 {
                candidate.push(' ');
            }
            candidate.push_str(word);
            if let Some(&id) = self.by_name.get(&candidate) {
                best = Some((id, n + 1));
            }
        }
        best
    }
}
