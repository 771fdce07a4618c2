//! The slot-value independent encoder-decoder.
//!
//! Each utterance is embedded by a shared n-gram CNN with max-pooling over
//! time; a turn is `[e(a_i); e(u_i); c_i]` and a turn-level LSTM encodes the
//! dialog history. The decoder LSTM starts from the encoder's final state
//! and either reads its own state directly (plain) or attends over the
//! per-turn encoder outputs:
//!
//! ```text
//! a_ji = softmax_i(h_iᵀ W_a s_j + b_a)
//! c_j  = Σ_i a_ji h_i
//! s̃_j  = tanh(W_s [s_j; c_j])
//! p(w_j | ...) = softmax(W_o s̃_j)
//! s_{j+1} = LSTM(s_j, [e(w_j); s̃_j])
//! ```

mod attention;
mod train;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::nn::{lstm_cell, normal_init, uniform_init, zero_state, LstmParams, LstmState};
use crate::autodiff::{AutodiffError, Checkpoint, ParamId, ParamStore, Tape, Tensor, Var};
use crate::corpus::{build_vocab, DialogView, Side, TurnTokens, Vocabulary, PAD};

pub use attention::{heatmap_csv, heatmap_text, AttentionMatrix};
pub use train::{token_accuracy, train, EpochMetrics, StopReason, TrainOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub attn_ctx: usize,
    pub filter_windows: Vec<usize>,
    pub feature_maps: usize,
    pub dropout: f64,
    pub lr: f64,
    /// Minimum number of training examples (system turns) per update.
    pub batch: usize,
    pub attention: bool,
    pub max_decode_len: usize,
    pub slot_cap: usize,
    pub beam_width: usize,
    pub clip_norm: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_count: usize,
    /// Stop once teacher-forced training accuracy reaches this value
    /// (checked every `accuracy_every` epochs).
    pub target_train_accuracy: Option<f64>,
    pub accuracy_every: usize,
    /// Multiplier on the confidence score in the turn vector.
    pub confidence_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 100,
            hidden: 500,
            layers: 1,
            attn_ctx: 500,
            filter_windows: vec![1, 2, 3],
            feature_maps: 100,
            dropout: 0.4,
            lr: 1e-3,
            batch: 40,
            attention: true,
            max_decode_len: 40,
            slot_cap: crate::corpus::SLOT_CAP,
            beam_width: 1,
            clip_norm: 5.0,
            max_epochs: 50,
            patience: 10,
            min_count: 1,
            target_train_accuracy: None,
            accuracy_every: 5,
            confidence_scale: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("embed_dim", self.embed_dim),
            ("hidden", self.hidden),
            ("attn_ctx", self.attn_ctx),
            ("feature_maps", self.feature_maps),
            ("batch", self.batch),
            ("max_decode_len", self.max_decode_len),
            ("beam_width", self.beam_width),
            ("accuracy_every", self.accuracy_every),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.layers != 1 {
            return Err(ModelError::Config("only single-layer LSTMs are supported".into()));
        }
        if self.filter_windows.is_empty() || self.filter_windows.contains(&0) || self.filter_windows.iter().any(|w| *w > 3)
        {
            return Err(ModelError::Config(format!("filter windows {:?} must be within 1..=3", self.filter_windows)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !self.confidence_scale.is_finite() {
            return Err(ModelError::Config(format!("confidence scale {}", self.confidence_scale)));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(ModelError::Config(format!("learning rate {}", self.lr)));
        }
        Ok(())
    }

    pub fn utterance_dim(&self) -> usize {
        self.filter_windows.len() * self.feature_maps
    }

    pub fn turn_dim(&self) -> usize {
        2 * self.utterance_dim() + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Ids {
    emb_sys: ParamId,
    emb_usr: ParamId,
    conv: Vec<(ParamId, ParamId)>,
    encoder: LstmParams,
    decoder: LstmParams,
    w_a: Option<ParamId>,
    b_a: Option<ParamId>,
    w_s: Option<ParamId>,
    w_o: ParamId,
}

/// Per-turn encoder outputs `h_1..h_k` and the states after each turn.
#[derive(Clone, Debug)]
pub struct HistoryEncoding {
    pub outputs: Vec<Var>,
    pub states: Vec<LstmState>,
}

/// A generated utterance; `attention[j][i]` is the weight on turn `i` when
/// emitting token `j` (the final row belongs to the end-of-utterance step).
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub tokens: Vec<String>,
    pub attention: Option<Vec<Vec<f64>>>,
}

/// Dropout randomness during training; `None` means evaluation mode.
pub type Dropout<'a> = Option<&'a mut ChaCha8Rng>;

#[derive(Clone, Debug)]
pub struct SiedModel {
    config: ModelConfig,
    sys_vocab: Vocabulary,
    usr_vocab: Vocabulary,
    store: ParamStore,
    ids: Ids,
    seed: u64,
}

struct DecoderStep {
    logits: Var,
    attention: Option<Var>,
    feed: Option<Var>,
}

impl SiedModel {
    /// Fresh model with vocabularies built from `train`.
    pub fn new(config: ModelConfig, train: &[DialogView], seed: u64) -> Result<Self, ModelError> {
        let sys = build_vocab(train, Side::System, config.min_count);
        let usr = build_vocab(train, Side::User, config.min_count);
        Self::with_vocabs(config, sys, usr, seed)
    }

    pub fn with_vocabs(
        config: ModelConfig,
        sys_vocab: Vocabulary,
        usr_vocab: Vocabulary,
        seed: u64,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let (d, f, h, a) = (config.embed_dim, config.feature_maps, config.hidden, config.attn_ctx);
        let emb_sys = store.insert("emb.sys", normal_init(&[sys_vocab.len(), d], 0.1, &mut rng))?;
        let emb_usr = store.insert("emb.usr", normal_init(&[usr_vocab.len(), d], 0.1, &mut rng))?;
        let mut conv = Vec::new();
        for &w in &config.filter_windows {
            let wt = store.insert(&format!("cnn.w{w}"), uniform_init(&[f, w * d], 0.08, &mut rng))?;
            let bt = store.insert(&format!("cnn.b{w}"), Tensor::zeros(&[f]))?;
            conv.push((wt, bt));
        }
        let encoder = LstmParams::register(&mut store, "encoder", config.turn_dim(), h, &mut rng)?;
        let dec_in = if config.attention { d + a } else { d };
        let decoder = LstmParams::register(&mut store, "decoder", dec_in, h, &mut rng)?;
        let (w_a, b_a, w_s, out_dim) = if config.attention {
            let w_a = store.insert("attn.w_a", uniform_init(&[h, h], 0.08, &mut rng))?;
            let b_a = store.insert("attn.b_a", Tensor::scalar(0.0))?;
            let w_s = store.insert("attn.w_s", uniform_init(&[a, 2 * h], 0.08, &mut rng))?;
            (Some(w_a), Some(b_a), Some(w_s), a)
        } else {
            (None, None, None, h)
        };
        let w_o = store.insert("out.w_o", uniform_init(&[sys_vocab.len(), out_dim], 0.08, &mut rng))?;
        let ids = Ids { emb_sys, emb_usr, conv, encoder, decoder, w_a, b_a, w_s, w_o };
        Ok(Self { config, sys_vocab, usr_vocab, store, ids, seed })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn sys_vocab(&self) -> &Vocabulary {
        &self.sys_vocab
    }

    pub fn usr_vocab(&self) -> &Vocabulary {
        &self.usr_vocab
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn has_attention(&self) -> bool {
        self.config.attention
    }

    pub fn param_id(&self, name: &str) -> Option<ParamId> {
        self.store.id(name)
    }

    fn dropout(&self, tape: &mut Tape, x: Var, rng: &mut Dropout<'_>) -> Result<Var, AutodiffError> {
        match rng {
            Some(r) if self.config.dropout > 0.0 => tape.dropout(x, self.config.dropout, *r),
            _ => Ok(x),
        }
    }

    /// CNN embedding of one utterance. Tokens are padded with one PAD on each
    /// side; an empty utterance is a single PAD.
    pub fn encode_utterance(
        &self,
        tape: &mut Tape,
        tokens: &[String],
        side: Side,
        rng: &mut Dropout<'_>,
    ) -> Result<Var, AutodiffError> {
        let (vocab, emb) = match side {
            Side::System => (&self.sys_vocab, self.ids.emb_sys),
            Side::User => (&self.usr_vocab, self.ids.emb_usr),
        };
        let pad = vocab.id(PAD);
        let mut ids = vec![pad];
        if tokens.is_empty() {
            ids.push(pad);
        }
        ids.extend(tokens.iter().map(|t| vocab.id(t)));
        ids.push(pad);
        let table = tape.param(&self.store, emb)?;
        let rows = tape.gather_rows(table, &ids)?;
        let filters = self
            .ids
            .conv
            .iter()
            .map(|&(w, b)| Ok((tape.param(&self.store, w)?, tape.param(&self.store, b)?)))
            .collect::<Result<Vec<_>, AutodiffError>>()?;
        let out = tape.conv_ngram_maxpool(rows, &self.config.filter_windows, &filters)?;
        self.dropout(tape, out, rng)
    }

    /// One encoder LSTM step per turn, from a zero state.
    pub fn encode_history(
        &self,
        tape: &mut Tape,
        turns: &[TurnTokens],
        rng: &mut Dropout<'_>,
    ) -> Result<HistoryEncoding, ModelError> {
        if turns.is_empty() {
            return Err(ModelError::EmptyHistory);
        }
        let mut state = zero_state(tape, self.config.hidden)?;
        let mut outputs = Vec::with_capacity(turns.len());
        let mut states = Vec::with_capacity(turns.len());
        for t in turns {
            let es = self.encode_utterance(tape, &t.sys, Side::System, rng)?;
            let eu = self.encode_utterance(tape, &t.usr, Side::User, rng)?;
            let c = tape.constant(Tensor::vector(vec![t.conf * self.config.confidence_scale]))?;
            let x = tape.concat(&[es, eu, c])?;
            state = lstm_cell(tape, &self.store, &self.ids.encoder, x, state)?;
            let out = self.dropout(tape, state.h, rng)?;
            outputs.push(out);
            states.push(state);
        }
        Ok(HistoryEncoding { outputs, states })
    }

    fn decoder_step(
        &self,
        tape: &mut Tape,
        memory: Option<Var>,
        state: LstmState,
        rng: &mut Dropout<'_>,
    ) -> Result<DecoderStep, AutodiffError> {
        let s = self.dropout(tape, state.h, rng)?;
        let w_o = tape.param(&self.store, self.ids.w_o)?;
        let (Some(w_a), Some(b_a), Some(w_s), Some(mem)) = (self.ids.w_a, self.ids.b_a, self.ids.w_s, memory) else {
            let logits = tape.matvec(w_o, s)?;
            return Ok(DecoderStep { logits, attention: None, feed: None });
        };
        let w_a = tape.param(&self.store, w_a)?;
        let b_a = tape.param(&self.store, b_a)?;
        let w_s = tape.param(&self.store, w_s)?;
        let proj = tape.matvec(w_a, s)?;
        let scores = tape.matvec(mem, proj)?;
        let scores = tape.add_scalar(scores, b_a)?;
        let weights = tape.softmax(scores)?;
        let ctx = tape.mat_t_vec(mem, weights)?;
        let sc = tape.concat(&[s, ctx])?;
        let pre = tape.matvec(w_s, sc)?;
        let tilde = tape.tanh(pre)?;
        let logits = tape.matvec(w_o, tilde)?;
        Ok(DecoderStep { logits, attention: Some(weights), feed: Some(tilde) })
    }

    fn decoder_input(&self, tape: &mut Tape, token: usize, feed: Option<Var>) -> Result<Var, AutodiffError> {
        let table = tape.param(&self.store, self.ids.emb_sys)?;
        let e = tape.gather_rows(table, &[token])?;
        let d = self.config.embed_dim;
        let e = tape.slice(e, 0, d)?;
        match feed {
            Some(f) => tape.concat(&[e, f]),
            None => Ok(e),
        }
    }

    fn memory(&self, tape: &mut Tape, enc: &HistoryEncoding, k: usize) -> Result<Option<Var>, AutodiffError> {
        if self.config.attention {
            Ok(Some(tape.stack(&enc.outputs[..k])?))
        } else {
            Ok(None)
        }
    }

    /// Teacher-forced summed cross-entropy of `target` (plus EOS) given the
    /// first `k` encoded turns. Returns the loss and the number of correct
    /// argmax predictions.
    pub(crate) fn target_loss(
        &self,
        tape: &mut Tape,
        enc: &HistoryEncoding,
        k: usize,
        target: &[String],
        rng: &mut Dropout<'_>,
    ) -> Result<(Var, usize, Vec<Vec<f64>>), AutodiffError> {
        let mut ids = self.sys_vocab.encode(target);
        ids.push(self.sys_vocab.eos());
        let memory = self.memory(tape, enc, k)?;
        let mut state = enc.states[k - 1];
        let mut losses = Vec::with_capacity(ids.len());
        let mut correct = 0;
        let mut attn = Vec::new();
        for (j, &y) in ids.iter().enumerate() {
            let step = self.decoder_step(tape, memory, state, rng)?;
            if argmax(tape.value(step.logits).data(), None) == y {
                correct += 1;
            }
            if let Some(a) = step.attention {
                attn.push(tape.value(a).data().to_vec());
            }
            losses.push(tape.softmax_cross_entropy(step.logits, y)?);
            if j + 1 < ids.len() {
                let x = self.decoder_input(tape, y, step.feed)?;
                state = lstm_cell(tape, &self.store, &self.ids.decoder, x, state)?;
            }
        }
        Ok((tape.add_n(&losses)?, correct, attn))
    }

    /// Greedy (or beam, when `beam_width > 1`) decoding of the next system
    /// utterance after `history`. `allow` can veto tokens.
    pub fn decode_with(
        &self,
        history: &[TurnTokens],
        allow: Option<&dyn Fn(&str) -> bool>,
    ) -> Result<Decoded, ModelError> {
        let mut tape = Tape::new();
        let enc = self.encode_history(&mut tape, history, &mut None)?;
        self.decode_encoded(&mut tape, &enc, history.len(), allow)
    }

    pub fn decode(&self, history: &[TurnTokens]) -> Result<Decoded, ModelError> {
        self.decode_with(history, None)
    }

    fn mask(&self, allow: Option<&dyn Fn(&str) -> bool>) -> Vec<bool> {
        let pad = self.sys_vocab.pad();
        (0..self.sys_vocab.len())
            .map(|i| i != pad && allow.is_none_or(|f| i == self.sys_vocab.eos() || f(self.sys_vocab.token(i))))
            .collect()
    }

    fn decode_encoded(
        &self,
        tape: &mut Tape,
        enc: &HistoryEncoding,
        k: usize,
        allow: Option<&dyn Fn(&str) -> bool>,
    ) -> Result<Decoded, ModelError> {
        let mask = self.mask(allow);
        if self.config.beam_width > 1 {
            return self.beam_search(tape, enc, k, &mask);
        }
        let memory = self.memory(tape, enc, k)?;
        let mut state = enc.states[k - 1];
        let mut tokens = Vec::new();
        let mut attention = Vec::new();
        for _ in 0..=self.config.max_decode_len {
            let step = self.decoder_step(tape, memory, state, &mut None)?;
            if let Some(a) = step.attention {
                attention.push(tape.value(a).data().to_vec());
            }
            let y = argmax(tape.value(step.logits).data(), Some(&mask));
            if y == self.sys_vocab.eos() || tokens.len() == self.config.max_decode_len {
                break;
            }
            tokens.push(self.sys_vocab.token(y).to_string());
            let x = self.decoder_input(tape, y, step.feed)?;
            state = lstm_cell(tape, &self.store, &self.ids.decoder, x, state)?;
        }
        let attention = self.config.attention.then_some(attention);
        Ok(Decoded { tokens, attention })
    }

    fn beam_search(
        &self,
        tape: &mut Tape,
        enc: &HistoryEncoding,
        k: usize,
        mask: &[bool],
    ) -> Result<Decoded, ModelError> {
        #[derive(Clone)]
        struct Hyp {
            tokens: Vec<usize>,
            logp: f64,
            state: LstmState,
            feed: Option<Var>,
            attention: Vec<Vec<f64>>,
            done: bool,
        }
        let memory = self.memory(tape, enc, k)?;
        let width = self.config.beam_width;
        let mut beam = vec![Hyp {
            tokens: vec![],
            logp: 0.0,
            state: enc.states[k - 1],
            feed: None,
            attention: vec![],
            done: false,
        }];
        for _ in 0..=self.config.max_decode_len {
            if beam.iter().all(|h| h.done) {
                break;
            }
            let mut next: Vec<Hyp> = Vec::new();
            for h in &beam {
                if h.done {
                    next.push(h.clone());
                    continue;
                }
                let state = match h.tokens.last() {
                    None => h.state,
                    Some(&y) => {
                        let x = self.decoder_input(tape, y, h.feed)?;
                        lstm_cell(tape, &self.store, &self.ids.decoder, x, h.state)?
                    }
                };
                let step = self.decoder_step(tape, memory, state, &mut None)?;
                let logits = tape.value(step.logits).data();
                let logp = log_softmax(logits);
                let mut cand: Vec<usize> = (0..logp.len()).filter(|&i| mask[i]).collect();
                cand.sort_by(|&a, &b| logp[b].total_cmp(&logp[a]));
                let att = step.attention.map(|a| tape.value(a).data().to_vec());
                for &y in cand.iter().take(width) {
                    let mut attention = h.attention.clone();
                    if let Some(a) = &att {
                        attention.push(a.clone());
                    }
                    let eos = y == self.sys_vocab.eos();
                    let mut tokens = h.tokens.clone();
                    if !eos {
                        tokens.push(y);
                    }
                    let done = eos || tokens.len() >= self.config.max_decode_len;
                    next.push(Hyp { tokens, logp: h.logp + logp[y], state, feed: step.feed, attention, done });
                }
            }
            next.sort_by(|a, b| b.logp.total_cmp(&a.logp));
            next.truncate(width);
            beam = next;
        }
        let best = beam.into_iter().max_by(|a, b| a.logp.total_cmp(&b.logp)).expect("nonempty beam");
        let tokens = best.tokens.iter().map(|&y| self.sys_vocab.token(y).to_string()).collect();
        Ok(Decoded { tokens, attention: self.config.attention.then_some(best.attention) })
    }

    /// Predictions for every system turn after the first, each conditioned
    /// on the gold history before it.
    pub fn decode_dialog(&self, view: &DialogView) -> Result<Vec<Decoded>, ModelError> {
        if view.turns.len() < 2 {
            return Ok(Vec::new());
        }
        let mut tape = Tape::new();
        let enc = self.encode_history(&mut tape, &view.turns[..view.turns.len() - 1], &mut None)?;
        (1..view.turns.len()).map(|k| self.decode_encoded(&mut tape, &enc, k, None)).collect()
    }

    /// Attention over `history` while emitting `generated` (teacher-forced).
    /// Rows are turns, columns are generated tokens followed by the
    /// end-of-utterance step.
    pub fn attention_weights(&self, history: &[TurnTokens], generated: &[String]) -> Result<AttentionMatrix, ModelError> {
        if !self.config.attention {
            return Err(ModelError::Unsupported("attention weights need an attention decoder".into()));
        }
        let mut tape = Tape::new();
        let enc = self.encode_history(&mut tape, history, &mut None)?;
        let (_, _, cols) = self.target_loss(&mut tape, &enc, history.len(), generated, &mut None)?;
        let mut labels: Vec<String> = generated.to_vec();
        labels.push(crate::corpus::EOS.to_string());
        Ok(AttentionMatrix::from_columns(cols, labels))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let config = serde_json::to_value(&self.config).expect("config serializes");
        let mut ck = Checkpoint::from_store(&self.store, config, self.seed);
        ck.extra = serde_json::json!({"sys_vocab": self.sys_vocab, "usr_vocab": self.usr_vocab});
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, ModelError> {
        let config: ModelConfig =
            serde_json::from_value(ck.config.clone()).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        let vocab = |key: &str| -> Result<Vocabulary, ModelError> {
            serde_json::from_value(ck.extra.get(key).cloned().unwrap_or_default())
                .map_err(|e| ModelError::Checkpoint(format!("{key}: {e}")))
        };
        let mut model = Self::with_vocabs(config, vocab("sys_vocab")?, vocab("usr_vocab")?, ck.seed)?;
        ck.load_into(&mut model.store)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

pub(crate) fn argmax(xs: &[f64], mask: Option<&[bool]>) -> usize {
    let mut best = usize::MAX;
    for (i, &x) in xs.iter().enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        if best == usize::MAX || x > xs[best] {
            best = i;
        }
    }
    best
}

fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    xs.iter().map(|x| x - lse).collect()
}

/// Random dropout source derived from a seed.
pub fn dropout_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15))
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("history must contain at least one turn")]
    EmptyHistory,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("training set has no targets")]
    NoTargets,
}
