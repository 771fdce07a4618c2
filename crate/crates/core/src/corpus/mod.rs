//! Dialog data: the record types, JSONL storage, splitting, vocabularies,
//! chat-pair augmentation and a seeded synthetic corpus generator.

mod acts;
mod augment;
mod split;
mod substitute;
mod synth;
mod view;
mod vocab;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entity::EntityError;
use crate::kb::{RouteQuery, RouteResult};

pub use acts::DialogAct;
pub use augment::{augment_with_chat, bundled_chat_pairs, load_chat_pairs, parse_chat_pairs, AdjacencyPair, Augmented};
pub use split::{split, Split};
pub use substitute::substitute_locations;
pub use synth::{
    generate_synthetic_corpus, SynthConfig, CANT_HELP, FRESH_PLACES, GOODBYE, INSTRUCTIONS, REPEAT, REQ_ARR, REQ_DEP,
    REQ_TIME, RESTART, WELCOME,
};
pub use view::{index_dialog, raw_dialog, DialogView, TurnTokens};
pub use vocab::{build_vocab, Side, Vocabulary, EOS, PAD, SLOT_CAP, UNK};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KbEvent {
    pub query: RouteQuery,
    pub results: Vec<RouteResult>,
}

/// System prompt `a_i`, the user's reply `u_i` and its recognition
/// confidence `c_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub sys: String,
    pub usr: String,
    pub conf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kb: Option<KbEvent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub acts: Vec<DialogAct>,
}

impl Turn {
    pub fn new(sys: &str, usr: &str, conf: f64) -> Self {
        Self { sys: sys.to_string(), usr: usr.to_string(), conf, kb: None, acts: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Real,
    #[default]
    Synthetic,
    Augmented,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dialog {
    pub id: String,
    #[serde(default)]
    pub src: Provenance,
    pub turns: Vec<Turn>,
}

impl Dialog {
    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub dialogs: Vec<Dialog>,
}

impl Dataset {
    pub fn new(dialogs: Vec<Dialog>) -> Self {
        Self { dialogs }
    }

    pub fn len(&self) -> usize {
        self.dialogs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogs.is_empty()
    }

    pub fn total_turns(&self) -> usize {
        self.dialogs.iter().map(Dialog::len).sum()
    }

    /// Union keeping order: `self` first, then `other`.
    pub fn union(&self, other: &Dataset) -> Dataset {
        Dataset { dialogs: self.dialogs.iter().chain(&other.dialogs).cloned().collect() }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = std::collections::HashSet::new();
        for (n, d) in self.dialogs.iter().enumerate() {
            if !seen.insert(d.id.as_str()) {
                return Err(CorpusError::Schema { line: n + 1, dialog: d.id.clone(), msg: "duplicate dialog id".into() });
            }
            validate_dialog(d).map_err(|msg| CorpusError::Schema { line: n + 1, dialog: d.id.clone(), msg })?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.dialogs {
            out.push_str(&serde_json::to_string(d).expect("dialog serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, CorpusError> {
        let mut dialogs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let d: Dialog = serde_json::from_str(line).map_err(|e| CorpusError::Schema {
                line: n + 1,
                dialog: String::new(),
                msg: e.to_string(),
            })?;
            dialogs.push(d);
        }
        let ds = Dataset { dialogs };
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut f = fs::File::create(path).map_err(|e| CorpusError::Io(format!("{}: {e}", path.display())))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| CorpusError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|e| CorpusError::Io(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }
}

fn validate_dialog(d: &Dialog) -> Result<(), String> {
    if d.turns.is_empty() {
        return Err("dialog has no turns".into());
    }
    for (i, t) in d.turns.iter().enumerate() {
        if !(0.0..=1.0).contains(&t.conf) || t.conf.is_nan() {
            return Err(format!("turn {i}: confidence {} outside [0, 1]", t.conf));
        }
        if let Some(kb) = &t.kb {
            kb.query.validate().map_err(|e| format!("turn {i}: {e}"))?;
        }
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line} (dialog `{dialog}`): {msg}")]
    Schema { line: usize, dialog: String, msg: String },
    #[error("io: {0}")]
    Io(String),
    #[error("dialog `{dialog}` turn {turn}: {source}")]
    Entity { dialog: String, turn: usize, source: EntityError },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty dataset")]
    Empty,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_empty_dataset() {
        assert!(Dataset::from_jsonl("").unwrap().is_empty());
    }

    #[test]
    fn bad_confidence_names_the_turn() {
        let line = r#"{"id":"d1","turns":[{"sys":"hi","usr":"x","conf":1.0},{"sys":"hi","usr":"x","conf":1.5}]}"#;
        let err = Dataset::from_jsonl(line).unwrap_err().to_string();
        assert!(err.contains("turn 1") && err.contains("d1"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let line = r#"{"id":"d1","turns":[{"sys":"hi","usr":"x","conf":1.0}]}"#;
        assert!(Dataset::from_jsonl(&format!("{line}\n{line}\n")).is_err());
    }
}
