use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::DialogView;
use crate::entity::{EntityType, KB_SEARCH};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const EOS: &str = "<eos>";
/// Slot tokens `[TYPE-k]` are always in the vocabulary for `k < SLOT_CAP`.
pub const SLOT_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    System,
    User,
}

/// Dense token ids. Specials come first: PAD, UNK, EOS, `[kb-search]`, then
/// every slot token below the cap, then corpus words by descending frequency
/// with ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

pub fn special_tokens() -> Vec<String> {
    let mut out: Vec<String> = [PAD, UNK, EOS, KB_SEARCH].iter().map(|s| s.to_string()).collect();
    for ty in EntityType::ALL {
        for k in 0..SLOT_CAP {
            out.push(format!("[{ty}-{k}]"));
        }
    }
    out
}

impl Vocabulary {
    pub fn pad(&self) -> usize {
        0
    }

    pub fn unk(&self) -> usize {
        1
    }

    pub fn eos(&self) -> usize {
        2
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(self.unk())
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// Number of tokens that are not specials.
    pub fn num_words(&self) -> usize {
        self.tokens.len() - special_tokens().len()
    }
}

pub fn build_vocab(views: &[DialogView], side: Side, min_count: usize) -> Vocabulary {
    let specials = special_tokens();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for v in views {
        for t in &v.turns {
            let toks = match side {
                Side::System => &t.sys,
                Side::User => &t.usr,
            };
            for tok in toks {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
    }
    let mut words: Vec<(&str, usize)> =
        counts.into_iter().filter(|(t, c)| *c >= min_count.max(1) && !specials.iter().any(|s| s == t)).collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut tokens = specials;
    tokens.extend(words.into_iter().map(|(t, _)| t.to_string()));
    Vocabulary::from(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TurnTokens;
    use crate::entity::{split_tokens, IndexedEntityTable};

    fn view(sys: &str) -> DialogView {
        DialogView {
            id: "x".into(),
            turns: vec![TurnTokens { sys: split_tokens(sys), usr: vec![], conf: 1.0 }],
            table: IndexedEntityTable::new(),
        }
    }

    #[test]
    fn single_utterance_vocab() {
        let v = build_vocab(&[view("go to [LOCATION-0]")], Side::System, 1);
        assert_eq!(v.num_words(), 2);
        assert_eq!(&v.tokens()[v.len() - 2..], ["go", "to"]);
        assert!(v.get("[LOCATION-0]").is_some());
        assert_eq!(v.id("unseen"), v.unk());
    }

    #[test]
    fn frequency_then_lexicographic_and_min_count() {
        let v = build_vocab(&[view("b a b c c")], Side::System, 2);
        assert_eq!(&v.tokens()[v.len() - 2..], ["b", "c"]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocabulary>(&json).unwrap(), v);
    }
}
