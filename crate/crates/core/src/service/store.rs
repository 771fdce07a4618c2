use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Exchange, Goal, Rating, ServiceError, Session, SessionStatus};
use crate::corpus::TurnTokens;
use crate::entity::EntityIndexer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
enum Event {
    Created { id: String, model: String, goal: Goal },
    Turn { exchange: Exchange },
    Rating { rating: Rating },
    Ended { gave_up: bool },
}

/// One append-only JSONL file per session under a directory.
#[derive(Clone, Debug)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: &Path) -> Result<Self, ServiceError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn append(&self, id: &str, ev: &Event) -> Result<(), ServiceError> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.dir.join(format!("{id}.jsonl")))?;
        let line = serde_json::to_string(ev).map_err(|e| ServiceError::Log(e.to_string()))?;
        writeln!(f, "{line}")?;
        Ok(())
    }

    pub fn record_created(&self, s: &Session) -> Result<(), ServiceError> {
        self.append(&s.id, &Event::Created { id: s.id.clone(), model: s.model_id.clone(), goal: s.goal.clone() })
    }

    pub fn record_turn(&self, id: &str, ex: &Exchange) -> Result<(), ServiceError> {
        self.append(id, &Event::Turn { exchange: ex.clone() })
    }

    pub fn record_rating(&self, id: &str, rating: Rating) -> Result<(), ServiceError> {
        self.append(id, &Event::Rating { rating })
    }

    pub fn record_ended(&self, s: &Session) -> Result<(), ServiceError> {
        self.append(&s.id, &Event::Ended { gave_up: s.gave_up })
    }

    /// Rebuilds every logged session by replaying its events.
    pub fn load_sessions(&self, indexer: &EntityIndexer) -> Result<Vec<Session>, ServiceError> {
        let mut out = BTreeMap::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            let s = replay(&text, indexer).map_err(|e| ServiceError::Log(format!("{}: {e}", path.display())))?;
            out.insert(s.id.clone(), s);
        }
        Ok(out.into_values().collect())
    }
}

fn replay(text: &str, indexer: &EntityIndexer) -> Result<Session, String> {
    let mut session: Option<Session> = None;
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let ev: Event = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", n + 1))?;
        match (ev, session.as_mut()) {
            (Event::Created { id, model, goal }, None) => session = Some(Session::new(&id, &model, goal)),
            (Event::Turn { exchange }, Some(s)) => {
                let last = s.turns.last_mut().expect("welcome turn");
                last.usr = exchange.debug.indexed_user.clone();
                last.conf = exchange.confidence;
                s.turns.push(TurnTokens { sys: exchange.debug.indexed_reply.clone(), usr: vec![], conf: 1.0 });
                if let Some(kb) = &exchange.debug.kb {
                    s.queries.push(kb.clone());
                }
                s.exchanges.push(exchange);
            }
            (Event::Rating { rating }, Some(s)) => s.rating = Some(rating),
            (Event::Ended { gave_up }, Some(s)) => {
                s.status = SessionStatus::Ended;
                s.gave_up = gave_up;
            }
            (_, _) => return Err(format!("line {}: event out of order", n + 1)),
        }
    }
    let mut s = session.ok_or("empty log")?;
    s.table = s.rederive_table(indexer);
    Ok(s)
}
