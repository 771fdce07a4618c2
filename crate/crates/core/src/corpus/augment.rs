use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Dataset, Dialog, DialogAct, Provenance, Turn};

const CHAT_PAIRS: &str = include_str!("../../data/chat_pairs.tsv");
const MAX_RETRIES: usize = 10_000;

/// A chit-chat query and its response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyPair {
    pub query: String,
    pub response: String,
}

pub fn parse_chat_pairs(text: &str) -> Result<Vec<AdjacencyPair>, CorpusError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (q, r) = line.split_once('\t').ok_or_else(|| CorpusError::Schema {
            line: n + 1,
            dialog: String::new(),
            msg: "expected query<TAB>response".into(),
        })?;
        let (q, r) = (q.trim(), r.trim());
        if q.is_empty() || r.is_empty() {
            return Err(CorpusError::Schema { line: n + 1, dialog: String::new(), msg: "empty query or response".into() });
        }
        out.push(AdjacencyPair { query: q.to_string(), response: r.to_string() });
    }
    Ok(out)
}

pub fn load_chat_pairs(path: &Path) -> Result<Vec<AdjacencyPair>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io(format!("{}: {e}", path.display())))?;
    parse_chat_pairs(&text)
}

pub fn bundled_chat_pairs() -> Vec<AdjacencyPair> {
    parse_chat_pairs(CHAT_PAIRS).expect("bundled chat pairs parse")
}

/// Result of [`augment_with_chat`]: the modified copies and the number of
/// injected turns.
#[derive(Clone, Debug, PartialEq)]
pub struct Augmented {
    pub copies: Dataset,
    pub injections: usize,
}

impl Augmented {
    /// Original dialogs followed by the augmented copies.
    pub fn training_set(&self, original: &Dataset) -> Dataset {
        original.union(&self.copies)
    }
}

fn eligible(t: &Turn) -> bool {
    !t.usr.trim().is_empty() && t.kb.is_none()
}

/// Injects `round(rate × total turns)` chit-chat exchanges into copies of
/// sampled dialogs. Each injection at turn `t_i = [a_i, u_i]` rewrites it to
/// `[a_i, q]` and inserts `[r + " " + a_i, u_i]` right after it. A dialog
/// sampled more than once accumulates its injections in a single copy, never
/// twice at the same original turn.
pub fn augment_with_chat(
    data: &Dataset,
    pairs: &[AdjacencyPair],
    rate: f64,
    seed: u64,
) -> Result<Augmented, CorpusError> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(CorpusError::InvalidArgument(format!("rate {rate}")));
    }
    let target = (rate * data.total_turns() as f64).round() as usize;
    if target == 0 {
        return Ok(Augmented { copies: Dataset::default(), injections: 0 });
    }
    if data.is_empty() || pairs.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // dialog index -> (original turn index -> pair index)
    let mut plan: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    let mut done = 0;
    let mut retries = 0;
    while done < target {
        let n = rng.gen_range(0..data.len());
        let used = plan.get(&n);
        let free: Vec<usize> = data.dialogs[n]
            .turns
            .iter()
            .enumerate()
            .filter(|(i, t)| eligible(t) && !used.is_some_and(|u| u.contains_key(i)))
            .map(|(i, _)| i)
            .collect();
        if free.is_empty() {
            retries += 1;
            if retries > MAX_RETRIES {
                return Err(CorpusError::InvalidArgument(format!(
                    "rate {rate} needs {target} injections but only {done} eligible turns were found"
                )));
            }
            continue;
        }
        let i = free[rng.gen_range(0..free.len())];
        let m = rng.gen_range(0..pairs.len());
        plan.entry(n).or_default().insert(i, m);
        done += 1;
    }

    let mut ids: BTreeSet<String> = data.dialogs.iter().map(|d| d.id.clone()).collect();
    let mut copies = Vec::with_capacity(plan.len());
    for (n, inj) in plan {
        let orig = &data.dialogs[n];
        let mut turns = Vec::with_capacity(orig.len() + inj.len());
        for (i, t) in orig.turns.iter().enumerate() {
            match inj.get(&i) {
                None => turns.push(t.clone()),
                Some(&m) => {
                    let pair = &pairs[m];
                    turns.push(Turn { usr: pair.query.clone(), ..t.clone() });
                    let mut acts = vec![DialogAct::ChatResponse];
                    acts.extend(t.acts.iter().copied().filter(|a| *a != DialogAct::ChatResponse));
                    turns.push(Turn {
                        sys: format!("{} {}", pair.response, t.sys),
                        usr: t.usr.clone(),
                        conf: t.conf,
                        kb: None,
                        acts: if t.acts.is_empty() { Vec::new() } else { acts },
                    });
                }
            }
        }
        let mut id = format!("{}-aug", orig.id);
        let mut k = 2;
        while ids.contains(&id) {
            id = format!("{}-aug{k}", orig.id);
            k += 1;
        }
        ids.insert(id.clone());
        copies.push(Dialog { id, src: Provenance::Augmented, turns });
    }
    Ok(Augmented { copies: Dataset::new(copies), injections: target })
}
