//! Live dialog sessions: recognize, index, decode, query and lexicalize one
//! user turn at a time, plus success labeling, ratings, an append-only
//! session log, the HTTP API and a terminal REPL.

mod http;
mod repl;
mod report;
mod store;
mod success;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{KbEvent, TurnTokens, GOODBYE, REPEAT, REQ_DEP, WELCOME};
use crate::entity::{
    lexicalize, parse_indexed, render_indexed, split_tokens, EntityIndexer, EntityMention, IndexedEntityTable,
    IndexedToken, LexError, TableEntry,
};
use crate::kb::{ClockTime, KbExecutor, Meridiem, RouteQuery};
use crate::model::{Decoded, ModelError, SiedModel};

pub use http::router;
pub use repl::run_repl;
pub use report::{session_report, ModelReport};
pub use store::SessionStore;
pub use success::{expressed_slots, label_success, ExpressedSlots, SuccessLabel};

/// Anything that proposes the next indexed system utterance.
pub trait ResponseModel: Send + Sync {
    fn respond(&self, history: &[TurnTokens], allow: Option<&dyn Fn(&str) -> bool>) -> Result<Decoded, ModelError>;
}

impl ResponseModel for SiedModel {
    fn respond(&self, history: &[TurnTokens], allow: Option<&dyn Fn(&str) -> bool>) -> Result<Decoded, ModelError> {
        self.decode_with(history, allow)
    }
}

pub const KB_APOLOGY: &str = "sorry , i cannot reach the bus schedule right now . please try again .";
pub const TURN_CAP: usize = 30;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub departure: String,
    pub arrival: String,
    pub hour: u8,
    pub minute: u8,
    pub meridiem: Meridiem,
}

impl Goal {
    /// Two distinct places from `places` and a time on a five-minute mark.
    pub fn sample<R: Rng + ?Sized>(places: &[String], rng: &mut R) -> Self {
        let two: Vec<&String> = places.choose_multiple(rng, 2).collect();
        Self {
            departure: two[0].clone(),
            arrival: two[1].clone(),
            hour: rng.gen_range(1..=12),
            minute: 5 * rng.gen_range(1..=11),
            meridiem: if rng.gen_bool(0.5) { Meridiem::Am } else { Meridiem::Pm },
        }
    }

    pub fn query(&self) -> RouteQuery {
        RouteQuery::new(&self.departure, &self.arrival, self.hour, self.minute, self.meridiem).expect("goal is valid")
    }

    pub fn time(&self) -> ClockTime {
        self.query().departure_time()
    }

    pub fn describe(&self) -> String {
        format!(
            "Find a bus from {} to {} leaving at {}:{:02} {}.",
            self.departure,
            self.arrival,
            self.hour,
            self.minute,
            self.meridiem.as_str()
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Ended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub correctness: u8,
    pub naturalness: u8,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TurnDebug {
    pub mentions: Vec<EntityMention>,
    pub indexed_user: Vec<String>,
    pub raw_output: Vec<String>,
    /// Indexed reply as it entered the history (differs from `raw_output`
    /// after a fallback).
    pub indexed_reply: Vec<String>,
    pub resolved: String,
    pub kb: Option<KbEvent>,
    pub attention: Option<Vec<Vec<f64>>>,
    pub invalid_output: bool,
    pub table: Vec<TableEntry>,
}

/// One user turn and the system reply to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub user: String,
    pub confidence: f64,
    pub reply: String,
    pub debug: TurnDebug,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub model_id: String,
    pub goal: Goal,
    pub greeting: String,
    /// Model-facing history in indexed form; the last turn's user side is
    /// filled by the next user utterance.
    pub turns: Vec<TurnTokens>,
    pub exchanges: Vec<Exchange>,
    pub table: IndexedEntityTable,
    pub status: SessionStatus,
    pub queries: Vec<KbEvent>,
    pub rating: Option<Rating>,
    pub gave_up: bool,
}

impl Session {
    pub fn new(id: &str, model_id: &str, goal: Goal) -> Self {
        let opening = split_tokens(&format!("{WELCOME} {REQ_DEP}"));
        Self {
            id: id.into(),
            model_id: model_id.into(),
            goal,
            greeting: detokenize(&opening),
            turns: vec![TurnTokens { sys: opening, usr: vec![], conf: 1.0 }],
            exchanges: vec![],
            table: IndexedEntityTable::new(),
            status: SessionStatus::Active,
            queries: vec![],
            rating: None,
            gave_up: false,
        }
    }

    pub fn user_turns(&self) -> usize {
        self.exchanges.len()
    }

    pub fn invalid_outputs(&self) -> usize {
        self.exchanges.iter().filter(|e| e.debug.invalid_output).count()
    }

    /// Entity table rebuilt from the user turns.
    pub fn rederive_table(&self, indexer: &EntityIndexer) -> IndexedEntityTable {
        let mut t = IndexedEntityTable::new();
        for e in &self.exchanges {
            indexer.index_utterance(&split_tokens(&e.user), &mut t);
        }
        t
    }
}

/// Joins tokens, attaching punctuation to the preceding word.
pub fn detokenize(tokens: &[String]) -> String {
    let mut out = String::new();
    for t in tokens {
        if !out.is_empty() && !matches!(t.as_str(), "," | "." | "?" | "!") {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

fn is_goodbye(tokens: &[String]) -> bool {
    tokens.iter().any(|t| t == "goodbye" || t == "bye")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// Re-decode with unresolvable slots masked before falling back.
    pub redecode_masked: bool,
    pub turn_cap: usize,
    pub debug: bool,
    pub seed: u64,
    /// Places goals are drawn from.
    pub places: Vec<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            redecode_masked: false,
            turn_cap: TURN_CAP,
            debug: false,
            seed: 0,
            places: crate::entity::Recognizer::bundled().locations(),
        }
    }
}

/// Everything one turn needs besides the session.
pub struct Pipeline<'a> {
    pub model: &'a dyn ResponseModel,
    pub indexer: &'a EntityIndexer,
    pub kb: &'a dyn KbExecutor,
    pub redecode_masked: bool,
    pub turn_cap: usize,
}

fn resolvable(table: &IndexedEntityTable, token: &str) -> bool {
    match IndexedToken::parse(token) {
        IndexedToken::Slot { entity_type, index } => table.resolve(entity_type, index).is_some(),
        _ => true,
    }
}

impl Pipeline<'_> {
    /// Applies one user utterance to `session` and returns the exchange.
    pub fn process_turn(&self, session: &mut Session, text: &str, confidence: Option<f64>) -> Result<Exchange, ServiceError> {
        if session.status == SessionStatus::Ended {
            return Err(ServiceError::SessionEnded(session.id.clone()));
        }
        let conf = confidence.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&conf) {
            return Err(ServiceError::InvalidInput(format!("confidence {conf} outside [0, 1]")));
        }
        let toks = split_tokens(text);
        let mentions = self.indexer.recognizer().recognize(&toks);
        let indexed_user = render_indexed(&self.indexer.index_utterance(&toks, &mut session.table));
        let last = session.turns.last_mut().expect("history starts with the welcome");
        last.usr = indexed_user.clone();
        last.conf = conf;
        let mut debug = TurnDebug { mentions, indexed_user, ..TurnDebug::default() };
        let sys_tokens: Vec<String> = if is_goodbye(&toks) {
            session.status = SessionStatus::Ended;
            let t = split_tokens(GOODBYE);
            debug.raw_output = t.clone();
            debug.resolved = detokenize(&t);
            t
        } else {
            self.respond(session, &mut debug)?
        };
        debug.indexed_reply = sys_tokens.clone();
        session.turns.push(TurnTokens { sys: sys_tokens, usr: vec![], conf: 1.0 });
        if session.status == SessionStatus::Active && session.user_turns() + 1 >= self.turn_cap {
            session.status = SessionStatus::Ended;
            session.gave_up = true;
        }
        debug.table = session.table.entries().to_vec();
        let ex = Exchange { user: text.to_string(), confidence: conf, reply: debug.resolved.clone(), debug };
        session.exchanges.push(ex.clone());
        Ok(ex)
    }

    /// Decodes, lexicalizes and runs any query; returns the indexed tokens
    /// that enter the history.
    fn respond(&self, session: &mut Session, debug: &mut TurnDebug) -> Result<Vec<String>, ServiceError> {
        let decoded = self.model.respond(&session.turns, None)?;
        debug.raw_output = decoded.tokens.clone();
        debug.attention = decoded.attention;
        let mut tokens = decoded.tokens;
        let mut result = lexicalize(&parse_indexed(&tokens), &session.table, self.kb);
        if matches!(result, Err(LexError::UnresolvedIndex { .. } | LexError::MalformedQuery(_))) {
            debug.invalid_output = true;
            if self.redecode_masked {
                let table = session.table.clone();
                let allow = move |t: &str| resolvable(&table, t);
                let again = self.model.respond(&session.turns, Some(&allow))?;
                tokens = again.tokens;
                result = lexicalize(&parse_indexed(&tokens), &session.table, self.kb);
            }
        }
        match result {
            Ok(lex) => {
                if let (Some(query), Some(results)) = (lex.query.clone(), lex.results.clone()) {
                    let ev = KbEvent { query, results };
                    debug.kb = Some(ev.clone());
                    session.queries.push(ev);
                }
                debug.resolved = detokenize(&lex.tokens);
                Ok(tokens)
            }
            Err(LexError::Kb(e)) => {
                log::warn!("session {}: knowledge base failed: {e}", session.id);
                let t = split_tokens(KB_APOLOGY);
                debug.resolved = detokenize(&t);
                Ok(t)
            }
            Err(_) => {
                let t = split_tokens(REPEAT);
                debug.resolved = detokenize(&t);
                Ok(t)
            }
        }
    }
}

/// Registered models, the KB and the live sessions.
pub struct DialogService {
    models: Vec<(String, Arc<dyn ResponseModel>)>,
    indexer: EntityIndexer,
    kb: Arc<dyn KbExecutor>,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    rng: Mutex<ChaCha8Rng>,
    store: Option<SessionStore>,
    counter: Mutex<u64>,
}

impl DialogService {
    pub fn new(kb: Arc<dyn KbExecutor>, indexer: EntityIndexer, config: ServiceConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self {
            models: vec![],
            indexer,
            kb,
            config,
            sessions: Mutex::new(HashMap::new()),
            rng: Mutex::new(rng),
            store: None,
            counter: Mutex::new(0),
        }
    }

    pub fn with_store(mut self, store: SessionStore) -> Self {
        self.store = Some(store);
        self
    }

    pub fn register(&mut self, id: &str, model: Arc<dyn ResponseModel>) {
        self.models.push((id.to_string(), model));
    }

    pub fn model_ids(&self) -> Vec<&str> {
        self.models.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn store(&self) -> Option<&SessionStore> {
        self.store.as_ref()
    }

    pub fn indexer(&self) -> &EntityIndexer {
        &self.indexer
    }

    /// Starts a session on `model_id`, or on a model drawn uniformly from the
    /// registered ones. The goal comes from `seed` when given.
    pub fn create_session(&self, model_id: Option<&str>, seed: Option<u64>) -> Result<Session, ServiceError> {
        if self.models.is_empty() {
            return Err(ServiceError::UnknownModel("no model registered".into()));
        }
        if self.config.places.len() < 2 {
            return Err(ServiceError::InvalidInput("goals need at least two places".into()));
        }
        let model = {
            let mut rng = self.rng.lock().expect("rng lock");
            match model_id {
                Some(id) => {
                    self.models.iter().find(|(m, _)| m == id).ok_or_else(|| ServiceError::UnknownModel(id.into()))?.0.clone()
                }
                None => self.models[rng.gen_range(0..self.models.len())].0.clone(),
            }
        };
        let goal = match seed {
            Some(s) => Goal::sample(&self.config.places, &mut ChaCha8Rng::seed_from_u64(s)),
            None => Goal::sample(&self.config.places, &mut *self.rng.lock().expect("rng lock")),
        };
        let id = {
            let mut c = self.counter.lock().expect("counter lock");
            *c += 1;
            format!("s{:05}-{:08x}", *c, self.rng.lock().expect("rng lock").gen::<u32>())
        };
        let session = Session::new(&id, &model, goal);
        if let Some(store) = &self.store {
            store.record_created(&session)?;
        }
        self.sessions.lock().expect("sessions lock").insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions.lock().expect("sessions lock").get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.into()))
    }

    pub fn session(&self, id: &str) -> Result<Session, ServiceError> {
        Ok(self.handle(id)?.lock().expect("session lock").clone())
    }

    pub fn sessions(&self) -> Vec<Session> {
        let handles: Vec<_> = self.sessions.lock().expect("sessions lock").values().cloned().collect();
        let mut out: Vec<Session> = handles.iter().map(|h| h.lock().expect("session lock").clone()).collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub fn process_turn(&self, id: &str, text: &str, confidence: Option<f64>) -> Result<Exchange, ServiceError> {
        let handle = self.handle(id)?;
        let mut session = handle.lock().expect("session lock");
        let model = self
            .models
            .iter()
            .find(|(m, _)| *m == session.model_id)
            .ok_or_else(|| ServiceError::UnknownModel(session.model_id.clone()))?
            .1
            .clone();
        let pipeline = Pipeline {
            model: model.as_ref(),
            indexer: &self.indexer,
            kb: self.kb.as_ref(),
            redecode_masked: self.config.redecode_masked,
            turn_cap: self.config.turn_cap,
        };
        let ex = pipeline.process_turn(&mut session, text, confidence)?;
        if let Some(store) = &self.store {
            store.record_turn(&session.id, &ex)?;
            if session.status == SessionStatus::Ended {
                store.record_ended(&session)?;
            }
        }
        Ok(ex)
    }

    pub fn rate_session(&self, id: &str, correctness: u8, naturalness: u8) -> Result<Rating, ServiceError> {
        let handle = self.handle(id)?;
        let mut session = handle.lock().expect("session lock");
        let rating = rate_session(&mut session, correctness, naturalness)?;
        if let Some(store) = &self.store {
            store.record_rating(id, rating)?;
        }
        Ok(rating)
    }

    pub fn report(&self) -> Result<Vec<ModelReport>, ServiceError> {
        session_report(&self.sessions(), &self.indexer)
    }
}

/// Stores a 1–5 rating on an ended, unrated session.
pub fn rate_session(session: &mut Session, correctness: u8, naturalness: u8) -> Result<Rating, ServiceError> {
    if session.status != SessionStatus::Ended {
        return Err(ServiceError::InvalidState(format!("session {} is still active", session.id)));
    }
    if session.rating.is_some() {
        return Err(ServiceError::InvalidState(format!("session {} is already rated", session.id)));
    }
    for (name, v) in [("correctness", correctness), ("naturalness", naturalness)] {
        if !(1..=5).contains(&v) {
            return Err(ServiceError::InvalidInput(format!("{name} {v} outside 1..=5")));
        }
    }
    let r = Rating { correctness, naturalness };
    session.rating = Some(r);
    Ok(r)
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown model: {0}")]
    UnknownModel(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` has ended")]
    SessionEnded(String),
    #[error("{0}")]
    InvalidState(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("no ended sessions to report on")]
    EmptyStore,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("session log: {0}")]
    Log(String),
}
