//! Reading material: text packs and the per-turn target view.
//!
//! A pack file is a single JSON document:
//!
//! ```json
//! {"title": "Cells",
//!  "sentences": ["Cells are small.", "They divide.", "Each half grows."],
//!  "targets": [{"sentence": 1, "strategy": "paraphrasing"},
//!              {"sentence": 2, "strategy": "bridging"}]}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::strategy::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub sentence: usize,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPack {
    pub title: String,
    pub sentences: Vec<String>,
    pub targets: Vec<Target>,
}

/// What the reader sees for one target: the sentence plus everything before it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetView {
    pub target_index: usize,
    pub sentence: String,
    pub context: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assigned_strategy: Option<Strategy>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PackError {
    #[error("malformed pack: {0}")]
    ParseError(String),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("pack has no targets")]
    NoTargets,
    #[error("sentence {0} is empty")]
    EmptySentence(usize),
    #[error("target sentence indices must be strictly increasing (at target {0})")]
    NonMonotonicTargets(usize),
}

impl TextPack {
    pub fn validate(&self) -> Result<(), PackError> {
        if self.sentences.is_empty() {
            return Err(PackError::EmptySentence(0));
        }
        if let Some(i) = self.sentences.iter().position(|s| s.trim().is_empty()) {
            return Err(PackError::EmptySentence(i));
        }
        if self.targets.is_empty() {
            return Err(PackError::NoTargets);
        }
        for (i, t) in self.targets.iter().enumerate() {
            if t.sentence >= self.sentences.len() {
                return Err(PackError::IndexOutOfRange {
                    index: t.sentence,
                    len: self.sentences.len(),
                });
            }
            if i > 0 && t.sentence <= self.targets[i - 1].sentence {
                return Err(PackError::NonMonotonicTargets(i));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pack serializes")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn target_view(&self, target_index: usize) -> Result<TargetView, PackError> {
        let target = self
            .targets
            .get(target_index)
            .ok_or(PackError::IndexOutOfRange {
                index: target_index,
                len: self.targets.len(),
            })?;
        Ok(TargetView {
            target_index,
            sentence: self.sentences[target.sentence].clone(),
            context: self.sentences[..target.sentence].to_vec(),
            assigned_strategy: Some(target.strategy),
        })
    }
}

pub fn load_text_pack(bytes: &[u8]) -> Result<TextPack, PackError> {
    let text = std::str::from_utf8(bytes).map_err(|e| PackError::ParseError(e.to_string()))?;
    let pack: TextPack =
        serde_json::from_str(text).map_err(|e| PackError::ParseError(e.to_string()))?;
    pack.validate()?;
    Ok(pack)
}

/// A small built-in pack so the tools work without a pack directory.
pub fn sample_pack() -> TextPack {
    TextPack {
        title: "How cells divide".into(),
        sentences: vec![
            "Every living thing is built from cells.".into(),
            "A cell grows until it is large enough to split.".into(),
            "Before splitting, the cell copies its genetic material.".into(),
            "The copies are pulled to opposite ends of the cell.".into(),
            "The cell then pinches in the middle and becomes two cells.".into(),
            "Each new cell receives a full set of instructions.".into(),
        ],
        targets: vec![
            Target { sentence: 1, strategy: Strategy::Paraphrasing },
            Target { sentence: 2, strategy: Strategy::Bridging },
            Target { sentence: 3, strategy: Strategy::Elaboration },
            Target { sentence: 4, strategy: Strategy::Prediction },
            Target { sentence: 5, strategy: Strategy::ComprehensionMonitoring },
        ],
    }
}

/// Named packs, keyed by file stem.
#[derive(Debug, Clone, Default)]
pub struct PackLibrary {
    packs: BTreeMap<String, TextPack>,
}

#[derive(Debug, thiserror::Error)]
pub enum LibraryError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("pack {name}: {source}")]
    Pack { name: String, source: PackError },
}

impl PackLibrary {
    pub fn with_sample() -> Self {
        let mut lib = PackLibrary::default();
        lib.insert("sample", sample_pack());
        lib
    }

    /// Loads every `*.json` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, LibraryError> {
        let io_err = |source| LibraryError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut lib = PackLibrary::default();
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let bytes = fs::read(&path).map_err(|source| LibraryError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let pack = load_text_pack(&bytes).map_err(|source| LibraryError::Pack {
                name: name.clone(),
                source,
            })?;
            lib.insert(&name, pack);
        }
        Ok(lib)
    }

    pub fn insert(&mut self, name: &str, pack: TextPack) {
        self.packs.insert(name.to_string(), pack);
    }

    pub fn get(&self, name: &str) -> Option<&TextPack> {
        self.packs.get(name)
    }

    /// The alphabetically first pack.
    pub fn first(&self) -> Option<(&str, &TextPack)> {
        self.packs.iter().next().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.packs.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.packs.is_empty()
    }
}
