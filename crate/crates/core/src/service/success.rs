use serde::{Deserialize, Serialize};

use super::{Session, SessionStatus};
use crate::corpus::{REQ_ARR, REQ_DEP};
use crate::entity::{split_tokens, EntityIndexer, EntityType};
use crate::kb::{Meridiem, RouteQuery};

/// The latest departure, arrival and time the user stated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressedSlots {
    pub departure: Option<String>,
    pub arrival: Option<String>,
    pub hour: Option<u8>,
    pub minute: Option<u8>,
    pub meridiem: Option<Meridiem>,
}

impl ExpressedSlots {
    /// All three slots are stated and `q` agrees with each of them. A
    /// stated hour without minutes means minute zero; an unstated meridiem
    /// matches either.
    pub fn matches(&self, q: &RouteQuery) -> bool {
        let (Some(dep), Some(arr), Some(hour)) = (&self.departure, &self.arrival, self.hour) else {
            return false;
        };
        *dep == q.departure
            && *arr == q.arrival
            && hour == q.hour
            && self.minute.unwrap_or(0) == q.minute
            && self.meridiem.is_none_or(|m| m == q.meridiem)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Departure,
    Arrival,
}

/// The role the last system request in `prompt` asks for.
fn requested_role(prompt: &str) -> Option<Role> {
    let p = split_tokens(prompt).join(" ");
    let dep = p.rfind(REQ_DEP);
    let arr = p.rfind(REQ_ARR);
    match (dep, arr) {
        (Some(d), Some(a)) => Some(if d > a { Role::Departure } else { Role::Arrival }),
        (Some(_), None) => Some(Role::Departure),
        (None, Some(_)) => Some(Role::Arrival),
        (None, None) => None,
    }
}

fn is_restart(tokens: &[String]) -> bool {
    let s = tokens.join(" ");
    s.contains("start over") || s.contains("new trip")
}

/// Slots stated across the user turns. A location takes its role from a
/// preceding "from"/"to", else from the request the user is answering,
/// else it fills departure first. Restart requests clear everything.
pub fn expressed_slots(session: &Session, indexer: &EntityIndexer) -> ExpressedSlots {
    let mut s = ExpressedSlots::default();
    let mut prompt = session.greeting.clone();
    for ex in &session.exchanges {
        let toks = split_tokens(&ex.user);
        if is_restart(&toks) {
            s = ExpressedSlots::default();
        }
        let asked = requested_role(&prompt);
        let mut pending_loc: Vec<(Option<Role>, String)> = Vec::new();
        for m in indexer.recognizer().recognize(&toks) {
            match m.entity_type {
                EntityType::Location => {
                    let cue = m.span.0.checked_sub(1).map(|i| toks[i].as_str());
                    let role = match cue {
                        Some("from") => Some(Role::Departure),
                        Some("to") => Some(Role::Arrival),
                        _ => None,
                    };
                    pending_loc.push((role, m.normalized));
                }
                EntityType::Hour => {
                    s.hour = m.normalized.parse().ok();
                    s.minute = None;
                    s.meridiem = None;
                }
                EntityType::Minute => s.minute = m.normalized.parse().ok(),
                EntityType::Ampm => s.meridiem = m.normalized.parse().ok(),
                EntityType::Datetime => {}
            }
        }
        let explicit = pending_loc.iter().filter(|(r, _)| r.is_some()).count();
        for (role, value) in pending_loc {
            let role = role.or(if explicit == 0 { asked } else { None }).unwrap_or(if s.departure.is_none() {
                Role::Departure
            } else {
                Role::Arrival
            });
            match role {
                Role::Departure => s.departure = Some(value),
                Role::Arrival => s.arrival = Some(value),
            }
        }
        prompt = ex.reply.clone();
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessLabel {
    pub success: bool,
    pub matched: Option<RouteQuery>,
}

/// Successful iff some executed query agrees with every slot the user
/// stated. Only ended sessions are labeled.
pub fn label_success(session: &Session, indexer: &EntityIndexer) -> Result<SuccessLabel, super::ServiceError> {
    if session.status != SessionStatus::Ended {
        return Err(super::ServiceError::InvalidState(format!("session {} is still active", session.id)));
    }
    let slots = expressed_slots(session, indexer);
    let matched = session.queries.iter().map(|e| &e.query).find(|q| slots.matches(q)).cloned();
    Ok(SuccessLabel { success: matched.is_some(), matched })
}
