//! Offline metrics: dialog-act F1 through a bigram tagger, slot and KB-query
//! micro precision/recall/F1 on indexed tokens, and corpus BLEU-4.

mod bleu;
mod report;
mod run;
mod tagger;

use serde::{Deserialize, Serialize};

use crate::corpus::DialogAct;
use crate::entity::{extract_kb_query, parse_indexed, IndexedToken};

pub use bleu::{bleu4, BleuStats, BLEU_EPSILON};
pub use report::{EvalReport, ReportRow};
pub use run::{align_predictions, decode_records, PredictionRecord, 
    attention_grounding, bootstrap, collect_predictions, posthoc_index, score_all, Grounding, Metric, MetricSet, Predictions,
};
pub use tagger::{bigram_features, labeled_system_turns, DaTagger, LabeledUtterance, TaggerConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrfScore {
    /// Micro scores from true positives and predicted and gold totals; an
    /// empty denominator gives 0.
    pub fn from_counts(tp: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (p, r) = (ratio(tp, predicted), ratio(tp, gold));
        let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        Self { precision: p, recall: r, f1 }
    }
}

fn check_aligned<T>(pred: &[T], gold: &[T]) -> Result<(), EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch { predicted: pred.len(), gold: gold.len() });
    }
    Ok(())
}

/// Counts for one aligned pair: (true positives, predicted, gold).
pub type Counts = (usize, usize, usize);

pub fn act_counts(pred: &[String], gold: &[String], tagger: &DaTagger) -> Counts {
    let (p, g) = (tagger.tag(pred), tagger.tag(gold));
    (p.iter().filter(|a| g.contains(a)).count(), p.len(), g.len())
}

/// Tags both sides and micro-averages over (utterance, label) decisions.
pub fn score_dialog_acts(pred: &[Vec<String>], gold: &[Vec<String>], tagger: &DaTagger) -> Result<PrfScore, EvalError> {
    check_aligned(pred, gold)?;
    Ok(sum_counts(pred.iter().zip(gold).map(|(p, g)| act_counts(p, g, tagger))))
}

/// Micro scores for explicit act sets.
pub fn score_act_sets(pred: &[Vec<DialogAct>], gold: &[Vec<DialogAct>]) -> Result<PrfScore, EvalError> {
    check_aligned(pred, gold)?;
    Ok(sum_counts(pred.iter().zip(gold).map(|(p, g)| (p.iter().filter(|a| g.contains(a)).count(), p.len(), g.len()))))
}

fn slots(tokens: &[String]) -> Vec<IndexedToken> {
    parse_indexed(tokens).into_iter().filter(|t| t.as_slot().is_some()).collect()
}

/// Bag-of-slot-token matches. Pairs where neither side has a slot add
/// nothing.
pub fn slot_counts(pred: &[String], gold: &[String]) -> Counts {
    let (p, mut g) = (slots(pred), slots(gold));
    let (np, ng) = (p.len(), g.len());
    let mut tp = 0;
    for s in p {
        if let Some(i) = g.iter().position(|x| *x == s) {
            g.swap_remove(i);
            tp += 1;
        }
    }
    (tp, np, ng)
}

pub fn score_slots(pred: &[Vec<String>], gold: &[Vec<String>]) -> Result<PrfScore, EvalError> {
    check_aligned(pred, gold)?;
    Ok(sum_counts(pred.iter().zip(gold).map(|(p, g)| slot_counts(p, g))))
}

/// A predicted query counts when the gold turn has a query with exactly
/// the same argument slots.
pub fn kb_counts(pred: &[String], gold: &[String]) -> Counts {
    let p = extract_kb_query(&parse_indexed(pred));
    let g = extract_kb_query(&parse_indexed(gold));
    let tp = matches!((&p, &g), (Some(a), Some(b)) if a.slots == b.slots);
    (tp as usize, p.is_some() as usize, g.is_some() as usize)
}

pub fn score_kb(pred: &[Vec<String>], gold: &[Vec<String>]) -> Result<PrfScore, EvalError> {
    check_aligned(pred, gold)?;
    Ok(sum_counts(pred.iter().zip(gold).map(|(p, g)| kb_counts(p, g))))
}

fn sum_counts(it: impl Iterator<Item = Counts>) -> PrfScore {
    let (tp, p, g) = it.fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    PrfScore::from_counts(tp, p, g)
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{predicted} predictions for {gold} references")]
    LengthMismatch { predicted: usize, gold: usize },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("label {label} has {found} examples, {needed} needed")]
    LabelCoverage { label: DialogAct, found: usize, needed: usize },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Format(String),
}
