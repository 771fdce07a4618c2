use crate::kb::{render_result, KbError, KbExecutor, RouteQuery, RouteResult, TemplateId};

use super::{extract_kb_query, EntityType, IndexedEntityTable, IndexedToken};

#[derive(Clone, Debug, PartialEq)]
pub struct Lexicalized {
    pub tokens: Vec<String>,
    pub query: Option<RouteQuery>,
    pub results: Option<Vec<RouteResult>>,
}

impl Lexicalized {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LexError {
    #[error("[{entity_type}-{index}] has no value in the entity table")]
    UnresolvedIndex { entity_type: EntityType, index: usize },
    #[error("malformed knowledge-base query: {0}")]
    MalformedQuery(String),
    #[error(transparent)]
    Kb(#[from] KbError),
}

/// Turns an indexed system utterance back into text: slots become the
/// surface form recorded in `table`, and a `[kb-search]` span is executed
/// against `kb` and replaced by the rendered result.
pub fn lexicalize(
    tokens: &[IndexedToken],
    table: &IndexedEntityTable,
    kb: &dyn KbExecutor,
) -> Result<Lexicalized, LexError> {
    let resolve = |ty: EntityType, k: usize| {
        table.resolve(ty, k).ok_or(LexError::UnresolvedIndex { entity_type: ty, index: k })
    };
    let mut query = None;
    let mut results = None;
    let mut rendered: Vec<String> = Vec::new();
    let kb_span = extract_kb_query(tokens);
    if let Some(span) = &kb_span {
        if tokens[span.span.end..].contains(&IndexedToken::KbSearch) {
            return Err(LexError::MalformedQuery("more than one [kb-search]".into()));
        }
        let args = span
            .slots
            .iter()
            .map(|&(ty, k)| resolve(ty, k).map(|e| (ty, e.normalized.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let q = RouteQuery::from_args(&args).map_err(|e| match e {
            KbError::MalformedQuery(m) => LexError::MalformedQuery(m),
            other => LexError::Kb(other),
        })?;
        let res = kb.query(&q)?;
        rendered = render_result(TemplateId::BusSchedule, &res).split_whitespace().map(str::to_string).collect();
        query = Some(q);
        results = Some(res);
    }
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if let Some(span) = kb_span.as_ref().filter(|s| s.span.start == i) {
            out.append(&mut rendered);
            i = span.span.end;
            continue;
        }
        match &tokens[i] {
            IndexedToken::Word(w) => out.push(w.clone()),
            IndexedToken::Slot { entity_type, index } => out.push(resolve(*entity_type, *index)?.surface.clone()),
            IndexedToken::KbSearch => unreachable!("handled above"),
        }
        i += 1;
    }
    Ok(Lexicalized { tokens: out, query, results })
}
