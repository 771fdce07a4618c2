use std::ops::Range;

use super::{EntityError, EntityType, IndexedEntityTable, IndexedToken, Recognizer};

/// Recognizer plus the indexing rules built on top of it.
#[derive(Clone, Debug, Default)]
pub struct EntityIndexer {
    recognizer: Recognizer,
}

impl EntityIndexer {
    pub fn new(recognizer: Recognizer) -> Self {
        Self { recognizer }
    }

    pub fn recognizer(&self) -> &Recognizer {
        &self.recognizer
    }

    /// Replaces each recognized mention with its `[TYPE-k]` slot, registering
    /// new values in `table`.
    pub fn index_utterance(&self, tokens: &[String], table: &mut IndexedEntityTable) -> Vec<IndexedToken> {
        let mentions = self.recognizer.recognize(tokens);
        let mut out = Vec::with_capacity(tokens.len());
        let mut pos = 0;
        for m in mentions {
            out.extend(tokens[pos..m.span.0].iter().map(|t| IndexedToken::Word(t.clone())));
            let k = table.index_of(m.entity_type, &m.normalized, &m.surface);
            out.push(IndexedToken::slot(m.entity_type, k));
            pos = m.span.1;
        }
        out.extend(tokens[pos..].iter().map(|t| IndexedToken::Word(t.clone())));
        out
    }

    /// Indexes the plain words of a system utterance against an existing
    /// table. Every mentioned value must already be present.
    pub fn index_system_utterance(
        &self,
        tokens: &[IndexedToken],
        table: &IndexedEntityTable,
    ) -> Result<Vec<IndexedToken>, EntityError> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut run: Vec<String> = Vec::new();
        for tok in tokens {
            match tok {
                IndexedToken::Word(w) => run.push(w.clone()),
                other => {
                    self.flush_system_run(&mut run, table, &mut out)?;
                    out.push(other.clone());
                }
            }
        }
        self.flush_system_run(&mut run, table, &mut out)?;
        Ok(out)
    }

    fn flush_system_run(
        &self,
        run: &mut Vec<String>,
        table: &IndexedEntityTable,
        out: &mut Vec<IndexedToken>,
    ) -> Result<(), EntityError> {
        if run.is_empty() {
            return Ok(());
        }
        let mut pos = 0;
        for m in self.recognizer.recognize(run) {
            out.extend(run[pos..m.span.0].iter().map(|t| IndexedToken::Word(t.clone())));
            let k = table.lookup_latest(m.entity_type, &m.normalized).ok_or(EntityError::UnseenSystemEntity {
                entity_type: m.entity_type,
                value: m.normalized.clone(),
            })?;
            out.push(IndexedToken::slot(m.entity_type, k));
            pos = m.span.1;
        }
        out.extend(run[pos..].iter().map(|t| IndexedToken::Word(t.clone())));
        run.clear();
        Ok(())
    }

    /// Replaces the rendered KB result inside a system utterance by
    /// `[kb-search]` followed by one slot per query argument. Other words are
    /// returned untouched. With no KB event the tokens pass through.
    pub fn index_kb_result(
        &self,
        tokens: &[String],
        kb: Option<(&[String], &[(EntityType, String)])>,
        table: &IndexedEntityTable,
    ) -> Result<Vec<IndexedToken>, EntityError> {
        let words = |ts: &[String]| ts.iter().map(|t| IndexedToken::Word(t.clone())).collect::<Vec<_>>();
        let Some((result, args)) = kb else {
            return Ok(words(tokens));
        };
        let start = find_subsequence(tokens, result).ok_or(EntityError::KbResultNotFound)?;
        let mut out = words(&tokens[..start]);
        out.push(IndexedToken::KbSearch);
        for (ty, value) in args {
            let k = table
                .lookup_latest(*ty, value)
                .ok_or_else(|| EntityError::KbArgumentMissing { entity_type: *ty, value: value.clone() })?;
            out.push(IndexedToken::slot(*ty, k));
        }
        out.extend(words(&tokens[start + result.len()..]));
        Ok(out)
    }

    /// Full system-side indexing: KB span first, then entity mentions.
    pub fn index_system_turn(
        &self,
        tokens: &[String],
        kb: Option<(&[String], &[(EntityType, String)])>,
        table: &IndexedEntityTable,
    ) -> Result<Vec<IndexedToken>, EntityError> {
        let with_kb = self.index_kb_result(tokens, kb, table)?;
        self.index_system_utterance(&with_kb, table)
    }
}

fn find_subsequence(hay: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - needle.len()).find(|&i| hay[i..i + needle.len()] == *needle)
}

/// A `[kb-search]` token and the run of slot tokens that follows it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KbQuerySpan {
    pub slots: Vec<(EntityType, usize)>,
    /// Token range covering `[kb-search]` and its argument slots.
    pub span: Range<usize>,
}

/// First `[kb-search]` with its maximal run of following slots.
pub fn extract_kb_query(tokens: &[IndexedToken]) -> Option<KbQuerySpan> {
    let start = tokens.iter().position(|t| *t == IndexedToken::KbSearch)?;
    let slots: Vec<(EntityType, usize)> = tokens[start + 1..].iter().map_while(IndexedToken::as_slot).collect();
    let end = start + 1 + slots.len();
    Some(KbQuerySpan { slots, span: start..end })
}
