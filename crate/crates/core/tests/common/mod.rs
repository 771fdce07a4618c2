#![allow(dead_code)]

use sied::corpus::{generate_synthetic_corpus, index_dialog, raw_dialog, Dataset, DialogView, SynthConfig, Vocabulary};
use sied::entity::EntityIndexer;
use sied::model::ModelConfig;

pub fn synth(n: usize, seed: u64) -> Dataset {
    generate_synthetic_corpus(&SynthConfig { n_dialogs: n, ..SynthConfig::default() }, seed).unwrap()
}

pub fn ei_views(data: &Dataset, ix: &EntityIndexer) -> Vec<DialogView> {
    data.dialogs.iter().map(|d| index_dialog(d, ix).unwrap()).collect()
}

pub fn raw_views(data: &Dataset, ix: &EntityIndexer) -> Vec<DialogView> {
    data.dialogs.iter().map(|d| raw_dialog(d, ix).unwrap()).collect()
}

pub fn toks(s: &str) -> Vec<String> {
    sied::entity::split_tokens(s)
}

/// Scaled-down model used for tests that train.
pub fn small_config(attention: bool) -> ModelConfig {
    ModelConfig {
        embed_dim: 32,
        feature_maps: 32,
        hidden: 64,
        attn_ctx: 64,
        attention,
        lr: 2e-3,
        confidence_scale: 10.0,
        ..ModelConfig::default()
    }
}

/// Twelve-token vocabulary for the tiny gradient-check model.
pub fn tiny_vocab() -> Vocabulary {
    ["<pad>", "<unk>", "<eos>", "[kb-search]", "[LOCATION-0]", "[LOCATION-1]", "from", "to", "go", "where", ".", "?"]
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .into()
}

pub fn tiny_config(attention: bool) -> ModelConfig {
    ModelConfig {
        embed_dim: 4,
        feature_maps: 3,
        hidden: 6,
        attn_ctx: 5,
        dropout: 0.0,
        attention,
        max_decode_len: 8,
        ..ModelConfig::default()
    }
}

/// Rule-based stand-in for a trained model: asks for whatever slot the
/// indexed user turns have not mentioned yet, then issues a query over the
/// latest mentions.
pub struct PolicyStub;

fn latest(history: &[sied::corpus::TurnTokens], ty: &str) -> Option<String> {
    history.iter().flat_map(|t| t.usr.iter()).filter(|t| t.starts_with(&format!("[{ty}-"))).last().cloned()
}

impl sied::service::ResponseModel for PolicyStub {
    fn respond(
        &self,
        history: &[sied::corpus::TurnTokens],
        _allow: Option<&dyn Fn(&str) -> bool>,
    ) -> Result<sied::model::Decoded, sied::model::ModelError> {
        let locs: Vec<String> = {
            let mut v: Vec<String> = Vec::new();
            for t in history.iter().flat_map(|t| t.usr.iter()).filter(|t| t.starts_with("[LOCATION-")) {
                v.retain(|x| x != t);
                v.push(t.clone());
            }
            v
        };
        let text = match (locs.len(), latest(history, "HOUR")) {
            (0, _) => sied::corpus::REQ_DEP.to_string(),
            (1, _) => format!("leaving from {} . {}", locs[0], sied::corpus::REQ_ARR),
            (_, None) => sied::corpus::REQ_TIME.to_string(),
            (n, Some(h)) => format!(
                "[kb-search] {} {} {h} {} {} . {}",
                locs[n - 2],
                locs[n - 1],
                latest(history, "MINUTE").unwrap_or_else(|| "[MINUTE-0]".into()),
                latest(history, "AMPM").unwrap_or_else(|| "[AMPM-0]".into()),
                sied::corpus::INSTRUCTIONS
            ),
        };
        Ok(sied::model::Decoded { tokens: toks(&text), attention: None })
    }
}

/// Replies with fixed texts in order, then repeats the last one.
pub struct Script(pub std::sync::Mutex<std::collections::VecDeque<String>>);

impl Script {
    pub fn new(replies: &[&str]) -> Self {
        Self(std::sync::Mutex::new(replies.iter().map(|s| s.to_string()).collect()))
    }
}

impl sied::service::ResponseModel for Script {
    fn respond(
        &self,
        _history: &[sied::corpus::TurnTokens],
        _allow: Option<&dyn Fn(&str) -> bool>,
    ) -> Result<sied::model::Decoded, sied::model::ModelError> {
        let mut q = self.0.lock().unwrap();
        let text = if q.len() > 1 { q.pop_front().unwrap() } else { q.front().cloned().unwrap_or_default() };
        Ok(sied::model::Decoded { tokens: toks(&text), attention: None })
    }
}

/// Indexes every system turn of `d` against the table of earlier user turns
/// and lexicalizes it back; returns the turns whose text did not survive.
pub fn roundtrip_mismatches(d: &sied::corpus::Dialog, ix: &EntityIndexer) -> Vec<usize> {
    use sied::entity::{lexicalize, split_tokens, IndexedEntityTable};
    use sied::kb::{render_result, RecordedKb, TemplateId};
    let mut table = IndexedEntityTable::new();
    let mut bad = Vec::new();
    for (i, t) in d.turns.iter().enumerate() {
        let mut kb = RecordedKb::new();
        let span = t.kb.as_ref().map(|e| {
            kb.insert(e.query.clone(), e.results.clone());
            (split_tokens(&render_result(TemplateId::BusSchedule, &e.results)), e.query.args())
        });
        let sys = split_tokens(&t.sys);
        let ok = ix
            .index_system_turn(&sys, span.as_ref().map(|(r, a)| (r.as_slice(), a.as_slice())), &table)
            .ok()
            .and_then(|indexed| lexicalize(&indexed, &table, &kb).ok())
            .is_some_and(|lex| split_tokens(&lex.text()) == sys);
        if !ok {
            bad.push(i);
        }
        ix.index_utterance(&split_tokens(&t.usr), &mut table);
    }
    bad
}

/// A synthetic corpus cut to exactly 1,000 turns (the last dialog is truncated).
pub fn thousand_turns() -> Dataset {
    let mut data = synth(300, 4);
    let mut total = 0;
    let mut keep = Vec::new();
    for mut d in data.dialogs.drain(..) {
        if total >= 1000 {
            break;
        }
        d.turns.truncate(1000 - total);
        total += d.len();
        keep.push(d);
    }
    Dataset::new(keep)
}

/// Walks a copy against its original and returns the number of inserted
/// turns, asserting the injection structure along the way.
pub fn count_injections(orig: &sied::corpus::Dialog, copy: &sied::corpus::Dialog, pairs: &[sied::corpus::AdjacencyPair]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < orig.turns.len() {
        let (o, c) = (&orig.turns[i], &copy.turns[j]);
        if c.sys == o.sys && c.usr == o.usr {
            i += 1;
            j += 1;
            continue;
        }
        assert_eq!(c.sys, o.sys);
        let pair = pairs.iter().find(|p| p.query == c.usr).expect("user side replaced by a chat query");
        let inserted = &copy.turns[j + 1];
        assert_eq!(inserted.sys, format!("{} {}", pair.response, o.sys));
        assert_eq!(inserted.usr, o.usr);
        n += 1;
        i += 1;
        j += 2;
    }
    assert_eq!(j, copy.turns.len());
    n
}

fn turn(sys: &str, usr: &str, conf: f64) -> sied::corpus::TurnTokens {
    sied::corpus::TurnTokens { sys: toks(sys), usr: toks(usr), conf }
}

/// Three-turn indexed dialog over the tiny vocabulary.
pub fn tiny_view() -> DialogView {
    DialogView {
        id: "tiny".into(),
        turns: vec![
            turn("where ?", "from [LOCATION-0]", 0.9),
            turn("from [LOCATION-0] . go to ?", "to [LOCATION-1]", 0.5),
            turn("[kb-search] [LOCATION-0] [LOCATION-1] .", "", 1.0),
        ],
        table: sied::entity::IndexedEntityTable::new(),
    }
}

/// Largest relative finite-difference error over all parameters of the tiny
/// model for one seed.
pub fn tiny_gradient_error(attention: bool, seed: u64) -> f64 {
    use sied::autodiff::{check_param_gradients, AutodiffError};
    let view = tiny_view();
    let model = sied::model::SiedModel::with_vocabs(tiny_config(attention), tiny_vocab(), tiny_vocab(), seed).unwrap();
    let report = check_param_gradients(model.params(), 1e-5, |tape, store| {
        let mut m = model.clone();
        *m.params_mut() = store.clone();
        m.loss(tape, &view).map_err(|e| AutodiffError::InvalidArgument(e.to_string()))
    })
    .unwrap();
    assert!(report.checked > 1000);
    report.max_rel_error
}

pub fn places() -> Vec<String> {
    sied::entity::Recognizer::bundled().locations()
}

pub fn fixed_session(id: &str, model: &str) -> sied::service::Session {
    use rand::SeedableRng;
    sied::service::Session::new(id, model, sied::service::Goal::sample(&places(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(0)))
}

pub fn stub_pipeline<'a>(
    model: &'a dyn sied::service::ResponseModel,
    ix: &'a EntityIndexer,
    kb: &'a dyn sied::kb::KbExecutor,
) -> sied::service::Pipeline<'a> {
    sied::service::Pipeline { model, indexer: ix, kb, redecode_masked: false, turn_cap: 30 }
}

fn scripted(id: &str, model: &str, users: &[&str], replies: &[&str], ix: &EntityIndexer, kb: &dyn sied::kb::KbExecutor) -> sied::service::Session {
    let stub = Script::new(replies);
    let p = stub_pipeline(&stub, ix, kb);
    let mut s = fixed_session(id, model);
    for u in users {
        p.process_turn(&mut s, u, None).unwrap();
    }
    s
}

/// Twenty ended sessions over two models plus one active session, with
/// known outcomes:
/// model a has 6 successes, 3 swapped queries and 3 invalid outputs (one
/// of them unrated); model b has 2, 2 and 4.
pub fn report_fixture(ix: &EntityIndexer, kb: &dyn sied::kb::KbExecutor) -> Vec<sied::service::Session> {
    let users = ["from downtown to airport", "at ten thirty a m", "bye"];
    let good = [
        "leaving from [LOCATION-0] . going to [LOCATION-1] . when would you like to leave ?",
        "[kb-search] [LOCATION-0] [LOCATION-1] [HOUR-0] [MINUTE-0] [AMPM-0] .",
    ];
    let swapped = [good[0], "[kb-search] [LOCATION-1] [LOCATION-0] [HOUR-0] [MINUTE-0] [AMPM-0] ."];
    let mut sessions = Vec::new();
    for (model, n_ok, n_bad, n_inv) in [("a", 6, 3, 3), ("b", 2, 2, 4)] {
        for i in 0..n_ok + n_bad + n_inv {
            let id = format!("{model}{i:02}");
            let mut s = if i < n_ok {
                scripted(&id, model, &users, &good, ix, kb)
            } else if i < n_ok + n_bad {
                scripted(&id, model, &users, &swapped, ix, kb)
            } else {
                scripted(&id, model, &["from downtown", "goodbye"], &["going to [LOCATION-3] ."], ix, kb)
            };
            let (c, n) = if i < n_ok { (5, 4) } else if i < n_ok + n_bad { (2, 3) } else { (1, 3) };
            let unrated = model == "a" && i == n_ok + n_bad + n_inv - 1;
            if !unrated {
                sied::service::rate_session(&mut s, c, n).unwrap();
            }
            sessions.push(s);
        }
    }
    let mut active = fixed_session("z", "a");
    stub_pipeline(&PolicyStub, ix, kb).process_turn(&mut active, "from oakland", None).unwrap();
    sessions.push(active);
    sessions
}

/// Differences between a computed report and the hand-derived values for
/// `report_fixture`.
pub fn report_fixture_mismatches(r: &[sied::service::ModelReport]) -> Vec<String> {
    let mut bad = Vec::new();
    if r.len() != 2 {
        return vec![format!("expected 2 models, got {}", r.len())];
    }
    let mut check = |name: &str, got: f64, want: f64| {
        if (got - want).abs() >= 1e-12 {
            bad.push(format!("{name}: got {got}, want {want}"));
        }
    };
    let (a, b) = (&r[0], &r[1]);
    check("a.sessions", a.sessions as f64, 12.0);
    check("a.rated", a.rated as f64, 11.0);
    check("a.slot_precision", a.slot_precision, 63.0 / 66.0);
    check("a.kb_precision", a.kb_precision, 6.0 / 9.0);
    check("a.success_rate", a.success_rate, 0.5);
    check("a.avg_turns", a.avg_turns, 33.0 / 12.0);
    check("a.invalid_rate", a.invalid_rate, 3.0 / 33.0);
    check("a.avg_correctness", a.avg_correctness, 38.0 / 11.0);
    check("a.std_correctness", a.std_correctness, 1.8090680674665818);
    check("a.avg_naturalness", a.avg_naturalness, 39.0 / 11.0);
    check("a.std_naturalness", a.std_naturalness, 0.5222329678670935);
    check("b.sessions", b.sessions as f64, 8.0);
    check("b.rated", b.rated as f64, 8.0);
    check("b.slot_precision", b.slot_precision, 28.0 / 32.0);
    check("b.kb_precision", b.kb_precision, 0.5);
    check("b.success_rate", b.success_rate, 0.25);
    check("b.avg_turns", b.avg_turns, 2.5);
    check("b.invalid_rate", b.invalid_rate, 0.2);
    check("b.avg_correctness", b.avg_correctness, 2.25);
    check("b.std_correctness", b.std_correctness, 1.7525491637693282);
    check("b.avg_naturalness", b.avg_naturalness, 3.25);
    check("b.std_naturalness", b.std_naturalness, 0.4629100498862757);
    if (a.model.as_str(), b.model.as_str()) != ("a", "b") {
        bad.push(format!("model order {} {}", a.model, b.model));
    }
    bad
}
