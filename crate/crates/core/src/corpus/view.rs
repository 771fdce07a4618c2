use serde::{Deserialize, Serialize};

use super::{CorpusError, Dialog};
use crate::entity::{render_indexed, split_tokens, EntityIndexer, EntityType, IndexedEntityTable, IndexedToken};
use crate::kb::{render_result, TemplateId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnTokens {
    pub sys: Vec<String>,
    pub usr: Vec<String>,
    pub conf: f64,
}

/// A dialog as token sequences the model consumes, with the entity table
/// built while indexing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialogView {
    pub id: String,
    pub turns: Vec<TurnTokens>,
    pub table: IndexedEntityTable,
}

type KbSpan = (Vec<String>, Vec<(EntityType, String)>);

fn kb_span(d: &Dialog, i: usize) -> Option<KbSpan> {
    d.turns[i].kb.as_ref().map(|kb| {
        (split_tokens(&render_result(TemplateId::BusSchedule, &kb.results)), kb.query.args())
    })
}

fn as_ref(span: &Option<KbSpan>) -> Option<(&[String], &[(EntityType, String)])> {
    span.as_ref().map(|(r, a)| (r.as_slice(), a.as_slice()))
}

/// Entity-indexed view: system turns are indexed against the table built
/// from strictly earlier user turns, and KB results become `[kb-search]`
/// plus argument slots.
pub fn index_dialog(d: &Dialog, indexer: &EntityIndexer) -> Result<DialogView, CorpusError> {
    let mut table = IndexedEntityTable::new();
    let mut turns = Vec::with_capacity(d.len());
    for (i, t) in d.turns.iter().enumerate() {
        let span = kb_span(d, i);
        let sys = indexer
            .index_system_turn(&split_tokens(&t.sys), as_ref(&span), &table)
            .map_err(|source| CorpusError::Entity { dialog: d.id.clone(), turn: i, source })?;
        let usr = indexer.index_utterance(&split_tokens(&t.usr), &mut table);
        turns.push(TurnTokens { sys: render_indexed(&sys), usr: render_indexed(&usr), conf: t.conf });
    }
    Ok(DialogView { id: d.id.clone(), turns, table })
}

/// Unindexed view for the no-indexing baseline: words stay as they are,
/// and a KB result becomes `[kb-search]` followed by the surface words of
/// its arguments.
pub fn raw_dialog(d: &Dialog, indexer: &EntityIndexer) -> Result<DialogView, CorpusError> {
    let mut table = IndexedEntityTable::new();
    let mut turns = Vec::with_capacity(d.len());
    for (i, t) in d.turns.iter().enumerate() {
        let span = kb_span(d, i);
        let sys_toks = split_tokens(&t.sys);
        let with_kb = indexer
            .index_kb_result(&sys_toks, as_ref(&span), &table)
            .map_err(|source| CorpusError::Entity { dialog: d.id.clone(), turn: i, source })?;
        let mut sys = Vec::with_capacity(with_kb.len());
        for tok in with_kb {
            match tok {
                IndexedToken::Slot { entity_type, index } => {
                    let e = table.resolve(entity_type, index).expect("slot from this table");
                    sys.extend(split_tokens(&e.surface));
                }
                other => sys.push(other.to_string()),
            }
        }
        let usr = split_tokens(&t.usr);
        indexer.index_utterance(&usr, &mut table);
        turns.push(TurnTokens { sys, usr, conf: t.conf });
    }
    Ok(DialogView { id: d.id.clone(), turns, table })
}
