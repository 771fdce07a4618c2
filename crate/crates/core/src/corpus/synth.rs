use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Dataset, Dialog, DialogAct, KbEvent, Provenance, Turn};
use crate::entity::{
    lexicalize, parse_indexed, split_tokens, EntityIndexer, EntityType, IndexedEntityTable, Recognizer,
};
use crate::kb::{Meridiem, MockBackend};

/// Place names absent from the bundled gazetteer, for unseen-value tests.
pub const FRESH_PLACES: &[&str] = &[
    "maple grove",
    "cedar hill",
    "willow creek",
    "harbor point",
    "pine ridge",
    "elm junction",
    "copper falls",
    "silver lake",
    "aspen court",
    "birch landing",
    "quarry road",
    "lantern square",
    "falcon heights",
    "meadow bend",
    "granite park",
    "orchard gate",
    "juniper flats",
    "beacon street",
    "riverbend plaza",
    "stonebridge",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_dialogs: usize,
    /// Normalized place names the simulated users travel between.
    pub places: Vec<String>,
    pub kb_seed: u64,
    pub id_prefix: String,
    /// Probability that the first answer names both departure and arrival.
    pub p_combined: f64,
    /// Probability that the user answers the departure request with the
    /// arrival alone.
    pub p_arrival_first: f64,
    /// Probability that a slot answer is replaced by an off-task request.
    pub p_noise: f64,
    /// Probability that the user starts over after hearing a result (once per dialog).
    pub p_restart: f64,
    /// Probability that a user turn's confidence falls in [0.4, 0.7).
    pub p_conf_mid: f64,
    /// Probability that a user turn's confidence falls below 0.4.
    pub p_conf_low: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_dialogs: 1000,
            places: Recognizer::bundled().locations(),
            kb_seed: 7,
            id_prefix: "syn".into(),
            p_combined: 0.2,
            p_arrival_first: 0.25,
            p_noise: 0.08,
            p_restart: 0.1,
            p_conf_mid: 0.2,
            p_conf_low: 0.12,
        }
    }
}

pub const WELCOME: &str = "welcome to the bus information system .";
pub const REQ_DEP: &str = "where are you leaving from ?";
pub const REQ_ARR: &str = "where do you want to go ?";
pub const REQ_TIME: &str = "when would you like to leave ?";
pub const INSTRUCTIONS: &str = "you can ask about another trip or say goodbye .";
pub const GOODBYE: &str = "thank you for using the bus information system . goodbye .";
pub const CANT_HELP: &str = "i am sorry i can only help with bus schedules .";
pub const REPEAT: &str = "sorry , could you repeat that ?";
pub const RESTART: &str = "okay , let us start over .";

const USR_DEP: &[&str] = &["i am leaving from {0}", "from {0}", "{0}", "i want to leave from {0}", "leaving from {0}"];
const USR_ARR: &[&str] = &["to {0}", "i am going to {0}", "{0}", "i want to go to {0}", "going to {0} please"];
const USR_ARR_CUED: &[&str] = &["to {0}", "i am going to {0}", "i want to go to {0}", "going to {0} please"];
const USR_TIME: &[&str] = &["at {0}", "i want to leave at {0}", "{0}", "around {0}", "i need to leave at {0}"];
const USR_BOTH: &[&str] =
    &["from {0} to {1}", "i want to go from {0} to {1}", "leaving from {0} going to {1}", "i want to go to {1} from {0}"];
const USR_YES: &[&str] = &["yes", "yes that is right", "correct", "yeah"];
const USR_BYE: &[&str] = &["goodbye", "thank you goodbye", "bye", "thanks bye"];
const USR_RESTART: &[&str] = &["start over", "i want to start over", "new trip please"];
const USR_NOISE: &[&str] = &[
    "can you book me a taxi",
    "how much is the fare",
    "can i bring my bike",
    "is there a train",
    "i need a hotel",
    "where can i buy a ticket",
];

const HOUR_WORDS: [&str; 12] =
    ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve"];
const MINUTE_WORDS: [&str; 11] = [
    "oh five",
    "ten",
    "fifteen",
    "twenty",
    "twenty five",
    "thirty",
    "thirty five",
    "forty",
    "forty five",
    "fifty",
    "fifty five",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Dep,
    Arr,
    Time,
}

#[derive(Clone, Debug)]
struct Goal {
    dep: String,
    arr: String,
    hour: u8,
    minute: u8,
    meridiem: Meridiem,
}

enum UserMove {
    Slots(Vec<Slot>),
    /// The arrival, given while the departure is being asked for.
    EarlyArrival,
    Yes,
    Noise,
    Bye,
    Restart,
}

struct Sim<'a> {
    rng: ChaCha8Rng,
    cfg: &'a SynthConfig,
    indexer: &'a EntityIndexer,
    kb: &'a MockBackend,
}

fn fill(template: &str, args: &[&str]) -> String {
    let mut out = template.to_string();
    for (i, a) in args.iter().enumerate() {
        out = out.replace(&format!("{{{i}}}"), a);
    }
    out
}

impl Sim<'_> {
    fn pick<'b>(&mut self, xs: &'b [&'b str]) -> &'b str {
        xs.choose(&mut self.rng).expect("nonempty")
    }

    fn goal(&mut self) -> Goal {
        let places: Vec<&String> = self.cfg.places.choose_multiple(&mut self.rng, 2).collect();
        Goal {
            dep: places[0].clone(),
            arr: places[1].clone(),
            hour: self.rng.gen_range(1..=12),
            minute: 5 * self.rng.gen_range(1..=11),
            meridiem: if self.rng.gen_bool(0.5) { Meridiem::Am } else { Meridiem::Pm },
        }
    }

    fn time_surface(&mut self, g: &Goal) -> String {
        let h = if self.rng.gen_bool(0.5) { HOUR_WORDS[g.hour as usize - 1].to_string() } else { g.hour.to_string() };
        let m = if self.rng.gen_bool(0.5) {
            MINUTE_WORDS[g.minute as usize / 5 - 1].to_string()
        } else {
            format!("{:02}", g.minute)
        };
        let a = match (g.meridiem, self.rng.gen_bool(0.5)) {
            (Meridiem::Am, true) => "a m",
            (Meridiem::Am, false) => "am",
            (Meridiem::Pm, true) => "p m",
            (Meridiem::Pm, false) => "pm",
        };
        format!("{h} {m} {a}")
    }

    fn confidence(&mut self) -> f64 {
        let u: f64 = self.rng.gen();
        let c: f64 = if u < self.cfg.p_conf_low {
            self.rng.gen_range(0.1..0.3)
        } else if u < self.cfg.p_conf_low + self.cfg.p_conf_mid {
            self.rng.gen_range(0.45..0.6)
        } else {
            self.rng.gen_range(0.8..1.0)
        };
        (c * 100.0).floor() / 100.0
    }

    fn user_text(&mut self, mv: &UserMove, g: &Goal) -> String {
        match mv {
            UserMove::Slots(s) if s.len() == 2 => {
                let t = self.pick(USR_BOTH);
                fill(t, &[&g.dep, &g.arr])
            }
            UserMove::Slots(s) => match s[0] {
                Slot::Dep => {
                    let t = self.pick(USR_DEP);
                    fill(t, &[&g.dep])
                }
                Slot::Arr => {
                    let t = self.pick(USR_ARR);
                    fill(t, &[&g.arr])
                }
                Slot::Time => {
                    let t = self.pick(USR_TIME);
                    let ts = self.time_surface(g);
                    fill(t, &[&ts])
                }
            },
            UserMove::EarlyArrival => {
                let t = self.pick(USR_ARR_CUED);
                fill(t, &[&g.arr])
            }
            UserMove::Yes => self.pick(USR_YES).to_string(),
            UserMove::Noise => self.pick(USR_NOISE).to_string(),
            UserMove::Bye => self.pick(USR_BYE).to_string(),
            UserMove::Restart => self.pick(USR_RESTART).to_string(),
        }
    }
}

fn slot_token(table: &IndexedEntityTable, ty: EntityType, value: &str) -> String {
    let k = table.lookup_latest(ty, value).expect("value was mentioned by the user");
    format!("[{ty}-{k}]")
}

fn confirm_phrase(table: &IndexedEntityTable, g: &Goal, slots: &[Slot], explicit: bool) -> String {
    let loc = |v: &str| slot_token(table, EntityType::Location, v);
    let time = || {
        format!(
            "{} {} {}",
            slot_token(table, EntityType::Hour, &g.hour.to_string()),
            slot_token(table, EntityType::Minute, &format!("{:02}", g.minute)),
            slot_token(table, EntityType::Ampm, g.meridiem.as_str())
        )
    };
    if explicit {
        return match slots {
            [Slot::Dep, Slot::Arr] => format!("did you say from {} to {} ?", loc(&g.dep), loc(&g.arr)),
            [Slot::Dep] => format!("did you say you are leaving from {} ?", loc(&g.dep)),
            [Slot::Arr] => format!("did you say you are going to {} ?", loc(&g.arr)),
            _ => format!("did you say at {} ?", time()),
        };
    }
    slots
        .iter()
        .map(|s| match s {
            Slot::Dep => format!("leaving from {} .", loc(&g.dep)),
            Slot::Arr => format!("going to {} .", loc(&g.arr)),
            Slot::Time => format!("at {} .", time()),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn request(slot: Slot) -> (&'static str, DialogAct) {
    match slot {
        Slot::Dep => (REQ_DEP, DialogAct::RequestDeparture),
        Slot::Arr => (REQ_ARR, DialogAct::RequestArrival),
        Slot::Time => (REQ_TIME, DialogAct::RequestTime),
    }
}

fn one_dialog(sim: &mut Sim<'_>, id: String) -> Result<Dialog, CorpusError> {
    let mut table = IndexedEntityTable::new();
    let mut goal = sim.goal();
    let mut have: Vec<Slot> = Vec::new();
    let mut restarted = false;
    let mut turns: Vec<Turn> = Vec::new();
    let mut sys_parts: Vec<String> = vec![WELCOME.into(), REQ_DEP.into()];
    let mut acts = vec![DialogAct::Welcome, DialogAct::RequestDeparture];
    let mut pending_explicit: Option<Vec<Slot>> = None;
    loop {
        let indexed = parse_indexed(&split_tokens(&sys_parts.join(" ")));
        let lex = lexicalize(&indexed, &table, sim.kb).map_err(|e| CorpusError::InvalidArgument(e.to_string()))?;
        let kb = lex.query.clone().map(|query| KbEvent { query, results: lex.results.clone().unwrap_or_default() });
        let is_goodbye = acts.contains(&DialogAct::Goodbye);
        let heard_result = kb.is_some();
        let missing = [Slot::Dep, Slot::Arr, Slot::Time].into_iter().find(|s| !have.contains(s));

        if is_goodbye {
            turns.push(Turn { sys: lex.text(), usr: String::new(), conf: 1.0, kb, acts });
            break;
        }

        let mv = if heard_result {
            if !restarted && sim.rng.gen_bool(sim.cfg.p_restart) {
                UserMove::Restart
            } else {
                UserMove::Bye
            }
        } else if pending_explicit.is_some() {
            UserMove::Yes
        } else if sim.rng.gen_bool(sim.cfg.p_noise) {
            UserMove::Noise
        } else {
            match missing.expect("a slot is missing before the result") {
                Slot::Dep if !have.contains(&Slot::Arr) && sim.rng.gen_bool(sim.cfg.p_combined) => {
                    UserMove::Slots(vec![Slot::Dep, Slot::Arr])
                }
                Slot::Dep if !have.contains(&Slot::Arr) && sim.rng.gen_bool(sim.cfg.p_arrival_first) => {
                    UserMove::EarlyArrival
                }
                s => UserMove::Slots(vec![s]),
            }
        };
        let usr = sim.user_text(&mv, &goal);
        let mv = match mv {
            UserMove::EarlyArrival => UserMove::Slots(vec![Slot::Arr]),
            m => m,
        };
        let conf = match mv {
            UserMove::Slots(_) => sim.confidence(),
            _ => 1.0,
        };
        sim.indexer.index_utterance(&split_tokens(&usr), &mut table);
        turns.push(Turn { sys: lex.text(), usr, conf, kb, acts });

        sys_parts = Vec::new();
        acts = Vec::new();
        let mut proceed = false;
        match mv {
            UserMove::Bye => {
                sys_parts.push(GOODBYE.into());
                acts.push(DialogAct::Goodbye);
            }
            UserMove::Restart => {
                restarted = true;
                goal = sim.goal();
                have.clear();
                sys_parts.extend([RESTART.to_string(), REQ_DEP.to_string()]);
                acts.extend([DialogAct::Restart, DialogAct::RequestDeparture]);
            }
            UserMove::Yes => {
                have.extend(pending_explicit.take().expect("pending confirmation"));
                proceed = true;
            }
            UserMove::Noise => {
                let (text, act) = request(missing.expect("missing slot"));
                sys_parts.extend([CANT_HELP.to_string(), text.to_string()]);
                acts.extend([DialogAct::CantHelp, act]);
            }
            UserMove::EarlyArrival => unreachable!("normalized above"),
            UserMove::Slots(slots) => {
                if conf < 0.4 {
                    let (text, act) = request(missing.expect("missing slot"));
                    sys_parts.extend([REPEAT.to_string(), text.to_string()]);
                    acts.extend([DialogAct::Repeat, act]);
                } else if conf < 0.7 {
                    sys_parts.push(confirm_phrase(&table, &goal, &slots, true));
                    acts.push(DialogAct::ExplicitConfirm);
                    pending_explicit = Some(slots);
                } else {
                    sys_parts.push(confirm_phrase(&table, &goal, &slots, false));
                    acts.push(DialogAct::ImplicitConfirm);
                    have.extend(slots);
                    proceed = true;
                }
            }
        }
        if proceed {
            match [Slot::Dep, Slot::Arr, Slot::Time].into_iter().find(|s| !have.contains(s)) {
                Some(s) => {
                    let (text, act) = request(s);
                    sys_parts.push(text.into());
                    acts.push(act);
                }
                None => {
                    let q = [
                        slot_token(&table, EntityType::Location, &goal.dep),
                        slot_token(&table, EntityType::Location, &goal.arr),
                        slot_token(&table, EntityType::Hour, &goal.hour.to_string()),
                        slot_token(&table, EntityType::Minute, &format!("{:02}", goal.minute)),
                        slot_token(&table, EntityType::Ampm, goal.meridiem.as_str()),
                    ];
                    sys_parts.push(format!("[kb-search] {} .", q.join(" ")));
                    sys_parts.push(INSTRUCTIONS.into());
                    acts.extend([DialogAct::KbQuery, DialogAct::InformResult, DialogAct::Instructions]);
                }
            }
        }
    }
    Ok(Dialog { id, src: Provenance::Synthetic, turns })
}

/// Simulates users talking to a handcrafted finite-state bus-information
/// policy. Every system turn carries its gold dialog acts, and KB results
/// come from a [`MockBackend`] seeded with `config.kb_seed`.
pub fn generate_synthetic_corpus(config: &SynthConfig, seed: u64) -> Result<Dataset, CorpusError> {
    if config.places.len() < 2 {
        return Err(CorpusError::InvalidArgument("at least two places are needed".into()));
    }
    let recognizer = Recognizer::bundled().with_locations(&config.places);
    let indexer = EntityIndexer::new(recognizer);
    let kb = MockBackend::new(config.kb_seed, &config.places);
    let mut sim = Sim { rng: ChaCha8Rng::seed_from_u64(seed), cfg: config, indexer: &indexer, kb: &kb };
    let dialogs = (0..config.n_dialogs)
        .map(|n| one_dialog(&mut sim, format!("{}-{n:05}", config.id_prefix)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(dialogs))
}
