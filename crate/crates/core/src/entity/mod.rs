//! Entity indexing and utterance lexicalization.
//!
//! Indexing replaces every recognized entity mention with a typed slot
//! token numbered by order of first appearance in the dialog
//! (`[LOCATION-0]`, `[LOCATION-1]`, ...), and replaces knowledge-base results
//! in system turns with `[kb-search]` followed by the query's argument
//! slots. Lexicalization is the inverse: slots are resolved through the
//! per-dialog [`IndexedEntityTable`] and `[kb-search]` spans are executed.

mod index;
mod lexicalize;
mod recognizer;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use index::{extract_kb_query, EntityIndexer, KbQuerySpan};
pub use lexicalize::{lexicalize, LexError, Lexicalized};
pub use recognizer::{normalize_phrase, Gazetteer, Recognizer};
pub use table::{IndexedEntityTable, RepeatPolicy, TableEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Location,
    Hour,
    Minute,
    Ampm,
    Datetime,
}

impl EntityType {
    pub const ALL: [EntityType; 5] =
        [EntityType::Location, EntityType::Hour, EntityType::Minute, EntityType::Ampm, EntityType::Datetime];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Location => "LOCATION",
            EntityType::Hour => "HOUR",
            EntityType::Minute => "MINUTE",
            EntityType::Ampm => "AMPM",
            EntityType::Datetime => "DATETIME",
        }
    }

    pub(crate) fn ordinal(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = EntityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| EntityError::UnknownType(s.to_string()))
    }
}

/// One recognized entity occurrence; `span` is a half-open token range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub entity_type: EntityType,
    pub surface: String,
    pub normalized: String,
    pub span: (usize, usize),
}

pub const KB_SEARCH: &str = "[kb-search]";

/// A token of the indexed (slot-value independent) representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IndexedToken {
    Word(String),
    Slot { entity_type: EntityType, index: usize },
    KbSearch,
}

impl IndexedToken {
    pub fn slot(entity_type: EntityType, index: usize) -> Self {
        IndexedToken::Slot { entity_type, index }
    }

    pub fn parse(token: &str) -> Self {
        if token == KB_SEARCH {
            return IndexedToken::KbSearch;
        }
        if let Some(inner) = token.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            if let Some((ty, k)) = inner.rsplit_once('-') {
                if let (Ok(entity_type), Ok(index)) = (ty.parse::<EntityType>(), k.parse::<usize>()) {
                    return IndexedToken::Slot { entity_type, index };
                }
            }
        }
        IndexedToken::Word(token.to_string())
    }

    pub fn as_slot(&self) -> Option<(EntityType, usize)> {
        match self {
            IndexedToken::Slot { entity_type, index } => Some((*entity_type, *index)),
            _ => None,
        }
    }
}

impl fmt::Display for IndexedToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexedToken::Word(w) => f.write_str(w),
            IndexedToken::Slot { entity_type, index } => write!(f, "[{entity_type}-{index}]"),
            IndexedToken::KbSearch => f.write_str(KB_SEARCH),
        }
    }
}

pub fn parse_indexed(tokens: &[String]) -> Vec<IndexedToken> {
    tokens.iter().map(|t| IndexedToken::parse(t)).collect()
}

pub fn render_indexed(tokens: &[IndexedToken]) -> Vec<String> {
    tokens.iter().map(ToString::to_string).collect()
}

/// Lowercases and splits on whitespace, detaching sentence punctuation.
/// Bracketed control tokens such as `[LOCATION-0]` are kept intact.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        if raw.starts_with('[') && raw.ends_with(']') {
            out.push(raw.to_string());
            continue;
        }
        let mut word = String::new();
        for ch in raw.chars() {
            if matches!(ch, '.' | ',' | '?' | '!' | ';' | ':' | '"') {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(ch.to_string());
            } else {
                word.extend(ch.to_lowercase());
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

/// Splits already-normalized corpus text on whitespace without altering case.
pub fn split_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum EntityError {
    #[error("unknown entity type `{0}`")]
    UnknownType(String),
    #[error("rule file: {0}")]
    RuleFile(String),
    #[error("system utterance mentions {entity_type} `{value}` that no earlier user turn introduced")]
    UnseenSystemEntity { entity_type: EntityType, value: String },
    #[error("knowledge-base result text not found in system utterance")]
    KbResultNotFound,
    #[error("knowledge-base query argument {entity_type} `{value}` is not in the entity table")]
    KbArgumentMissing { entity_type: EntityType, value: String },
}
