use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{act_counts, kb_counts, slot_counts, BleuStats, Counts, DaTagger, EvalError, PrfScore};
use crate::corpus::DialogView;
use crate::entity::{render_indexed, EntityIndexer, IndexedEntityTable};
use crate::model::SiedModel;

/// Aligned predicted and gold system utterances in indexed-token form.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    /// `(dialog id, turn index)` of each pair.
    pub keys: Vec<(String, usize)>,
    pub pred: Vec<Vec<String>>,
    pub gold: Vec<Vec<String>>,
}

impl Predictions {
    pub fn len(&self) -> usize {
        self.pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pred.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            keys: idx.iter().map(|&i| self.keys[i].clone()).collect(),
            pred: idx.iter().map(|&i| self.pred[i].clone()).collect(),
            gold: idx.iter().map(|&i| self.gold[i].clone()).collect(),
        }
    }
}

/// Indexes surface tokens of turn `k` against the table built from the
/// user turns before it. Unknown values get fresh indices.
pub fn posthoc_index(view: &DialogView, k: usize, tokens: &[String], indexer: &EntityIndexer) -> Vec<String> {
    let mut table = IndexedEntityTable::new();
    for t in &view.turns[..k] {
        indexer.index_utterance(&t.usr, &mut table);
    }
    render_indexed(&indexer.index_utterance(tokens, &mut table))
}

/// Decodes every system turn after the first from its gold history. With
/// `raw` set, the views are unindexed and both sides are indexed after the
/// fact so slots can be compared.
pub fn collect_predictions(
    model: &SiedModel,
    views: &[DialogView],
    raw: Option<&EntityIndexer>,
) -> Result<Predictions, EvalError> {
    let mut out = Predictions::default();
    for v in views {
        for (j, d) in model.decode_dialog(v)?.into_iter().enumerate() {
            let k = j + 1;
            let gold = &v.turns[k].sys;
            let (p, g) = match raw {
                Some(ix) => (posthoc_index(v, k, &d.tokens, ix), posthoc_index(v, k, gold, ix)),
                None => (d.tokens, gold.clone()),
            };
            out.keys.push((v.id.clone(), k));
            out.pred.push(p);
            out.gold.push(g);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Da,
    Slot,
    Kb,
    Bleu,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Da, Metric::Slot, Metric::Kb, Metric::Bleu];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Da => "da",
            Metric::Slot => "slot",
            Metric::Kb => "kb",
            Metric::Bleu => "bleu",
        }
    }
}

impl FromStr for Metric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| EvalError::UnknownMetric(s.into()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub da: Option<PrfScore>,
    pub slot: Option<PrfScore>,
    pub kb: Option<PrfScore>,
    pub bleu: Option<f64>,
}

impl MetricSet {
    /// Headline value of a metric (F1, or the BLEU score).
    pub fn value(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Da => self.da.map(|s| s.f1),
            Metric::Slot => self.slot.map(|s| s.f1),
            Metric::Kb => self.kb.map(|s| s.f1),
            Metric::Bleu => self.bleu,
        }
    }
}

fn sum(counts: impl Iterator<Item = Counts>) -> PrfScore {
    let (tp, p, g) = counts.fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    PrfScore::from_counts(tp, p, g)
}

/// Computes the requested metrics. DA needs a tagger.
pub fn score_all(p: &Predictions, metrics: &[Metric], tagger: Option<&DaTagger>) -> Result<MetricSet, EvalError> {
    if p.is_empty() {
        return Err(EvalError::Empty("no predictions".into()));
    }
    let pairs = || p.pred.iter().zip(&p.gold);
    let mut out = MetricSet::default();
    for m in metrics {
        match m {
            Metric::Da => {
                let t = tagger.ok_or_else(|| EvalError::Empty("dialog-act scoring needs a tagger".into()))?;
                out.da = Some(sum(pairs().map(|(a, b)| act_counts(a, b, t))));
            }
            Metric::Slot => out.slot = Some(sum(pairs().map(|(a, b)| slot_counts(a, b)))),
            Metric::Kb => out.kb = Some(sum(pairs().map(|(a, b)| kb_counts(a, b)))),
            Metric::Bleu => {
                let mut s = BleuStats::default();
                pairs().for_each(|(a, b)| s.add(a, b));
                out.bleu = Some(s.score());
            }
        }
    }
    Ok(out)
}

/// Percentile bootstrap over utterance pairs: returns the 2.5% and 97.5%
/// quantiles of the metric over `samples` resamples.
pub fn bootstrap(
    p: &Predictions,
    metric: Metric,
    tagger: Option<&DaTagger>,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), EvalError> {
    if p.is_empty() || samples == 0 {
        return Err(EvalError::Empty("bootstrap needs predictions and samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let idx: Vec<usize> = (0..p.len()).map(|_| rng.gen_range(0..p.len())).collect();
        let m = score_all(&p.subset(&idx), &[metric], tagger)?;
        values.push(m.value(metric).unwrap_or(0.0));
    }
    values.sort_by(f64::total_cmp);
    let q = |f: f64| values[((f * (samples - 1) as f64).round() as usize).min(samples - 1)];
    Ok((q(0.025), q(0.975)))
}

/// Agreement between attention and the turn that introduced each generated
/// slot. `matched` counts peaks on the first user turn naming the value,
/// `mentioned` peaks on any user turn naming it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Grounding {
    pub matched: usize,
    pub mentioned: usize,
    pub total: usize,
}

impl Grounding {
    pub fn rate(&self) -> f64 {
        ratio(self.matched, self.total)
    }

    pub fn mention_rate(&self) -> f64 {
        ratio(self.mentioned, self.total)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// For every slot token the model generates that refers to a value already
/// in the history, checks whether the most attended turn is the first user
/// turn mentioning it.
pub fn attention_grounding(model: &SiedModel, views: &[DialogView]) -> Result<Grounding, EvalError> {
    let mut g = Grounding::default();
    for v in views {
        for (j, d) in model.decode_dialog(v)?.into_iter().enumerate() {
            let k = j + 1;
            let Some(att) = d.attention else {
                return Err(EvalError::Model(crate::model::ModelError::Unsupported(
                    "grounding needs an attention model".into(),
                )));
            };
            for (step, tok) in d.tokens.iter().enumerate() {
                if crate::entity::IndexedToken::parse(tok).as_slot().is_none() {
                    continue;
                }
                let Some(intro) = v.turns[..k].iter().position(|t| t.usr.contains(tok)) else {
                    continue;
                };
                let row = &att[step];
                let best = (0..row.len()).fold(0, |b, i| if row[i] > row[b] { i } else { b });
                g.total += 1;
                g.matched += usize::from(best == intro);
                g.mentioned += usize::from(best < k && v.turns[best].usr.contains(tok));
            }
        }
    }
    Ok(g)
}

/// One decoded system turn as stored in a prediction file (JSON lines).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub turn: usize,
    pub tokens: Vec<String>,
}

pub fn decode_records(model: &SiedModel, views: &[DialogView]) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut out = Vec::new();
    for v in views {
        for (j, d) in model.decode_dialog(v)?.into_iter().enumerate() {
            out.push(PredictionRecord { id: v.id.clone(), turn: j + 1, tokens: d.tokens });
        }
    }
    Ok(out)
}

/// Pairs prediction records with the gold turns of `views`. Every record
/// must name an existing dialog and turn; with `raw` set both sides are
/// indexed after the fact.
pub fn align_predictions(
    records: &[PredictionRecord],
    views: &[DialogView],
    raw: Option<&EntityIndexer>,
) -> Result<Predictions, EvalError> {
    let by_id: std::collections::HashMap<&str, &DialogView> = views.iter().map(|v| (v.id.as_str(), v)).collect();
    let mut out = Predictions::default();
    for r in records {
        let v = by_id.get(r.id.as_str()).ok_or_else(|| EvalError::Format(format!("no gold dialog `{}`", r.id)))?;
        if r.turn == 0 || r.turn >= v.turns.len() {
            return Err(EvalError::Format(format!("dialog `{}` has no predicted turn {}", r.id, r.turn)));
        }
        let gold = &v.turns[r.turn].sys;
        let (p, g) = match raw {
            Some(ix) => (posthoc_index(v, r.turn, &r.tokens, ix), posthoc_index(v, r.turn, gold, ix)),
            None => (r.tokens.clone(), gold.clone()),
        };
        out.keys.push((r.id.clone(), r.turn));
        out.pred.push(p);
        out.gold.push(g);
    }
    Ok(out)
}
