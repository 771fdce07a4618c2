use std::collections::HashMap;

use super::Dialog;
use crate::entity::{split_tokens, EntityType, Recognizer};

fn rewrite(text: &str, map: &HashMap<String, String>, recognizer: &Recognizer) -> String {
    let toks = split_tokens(text);
    let mut out = Vec::with_capacity(toks.len());
    let mut pos = 0;
    for m in recognizer.recognize(&toks) {
        let Some(new) = map.get(&m.normalized).filter(|_| m.entity_type == EntityType::Location) else {
            continue;
        };
        out.extend_from_slice(&toks[pos..m.span.0]);
        out.extend(split_tokens(new));
        pos = m.span.1;
    }
    out.extend_from_slice(&toks[pos..]);
    out.join(" ")
}

/// Renames location values throughout a dialog: utterance text on both
/// sides, KB query arguments and result stops. `map` is keyed by
/// normalized location and `recognizer` must know the old names.
pub fn substitute_locations(d: &Dialog, map: &HashMap<String, String>, recognizer: &Recognizer) -> Dialog {
    let rename = |s: &str| map.get(s).cloned().unwrap_or_else(|| s.to_string());
    let mut out = d.clone();
    for t in &mut out.turns {
        t.sys = rewrite(&t.sys, map, recognizer);
        t.usr = rewrite(&t.usr, map, recognizer);
        if let Some(kb) = &mut t.kb {
            kb.query.departure = rename(&kb.query.departure);
            kb.query.arrival = rename(&kb.query.arrival);
            for r in &mut kb.results {
                r.depart_stop = rename(&r.depart_stop);
                r.arrive_stop = rename(&r.arrive_stop);
            }
        }
    }
    out
}
