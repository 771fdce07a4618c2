use serde::{Deserialize, Serialize};

use super::{expressed_slots, label_success, ServiceError, Session, SessionStatus};
use crate::entity::{EntityIndexer, IndexedToken};

/// Aggregates over the ended sessions of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub sessions: usize,
    /// Generated slot tokens that resolved against the session's table.
    pub slot_precision: f64,
    /// Executed queries that agree with the slots stated so far.
    pub kb_precision: f64,
    pub success_rate: f64,
    /// Mean number of user turns.
    pub avg_turns: f64,
    pub rated: usize,
    pub avg_correctness: f64,
    pub std_correctness: f64,
    pub avg_naturalness: f64,
    pub std_naturalness: f64,
    /// Share of system turns whose decoder output was intercepted.
    pub invalid_rate: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// One row per model over ended sessions, in order of first appearance.
/// Standard deviations are sample deviations.
pub fn session_report(sessions: &[Session], indexer: &EntityIndexer) -> Result<Vec<ModelReport>, ServiceError> {
    let ended: Vec<&Session> = sessions.iter().filter(|s| s.status == SessionStatus::Ended).collect();
    if ended.is_empty() {
        return Err(ServiceError::EmptyStore);
    }
    let mut models: Vec<&str> = Vec::new();
    for s in &ended {
        if !models.contains(&s.model_id.as_str()) {
            models.push(&s.model_id);
        }
    }
    let mut out = Vec::new();
    for m in models {
        let group: Vec<&Session> = ended.iter().copied().filter(|s| s.model_id == m).collect();
        let (mut slot_ok, mut slot_all, mut kb_ok, mut kb_all, mut success, mut replies, mut invalid) =
            (0, 0, 0, 0, 0, 0, 0);
        let mut turns = Vec::new();
        let (mut corr, mut nat) = (Vec::new(), Vec::new());
        for s in &group {
            for (i, ex) in s.exchanges.iter().enumerate() {
                replies += 1;
                invalid += usize::from(ex.debug.invalid_output);
                for t in &ex.debug.raw_output {
                    if let IndexedToken::Slot { entity_type, index } = IndexedToken::parse(t) {
                        slot_all += 1;
                        let ok = ex.debug.table.iter().any(|e| e.entity_type == entity_type && e.index == index);
                        slot_ok += usize::from(ok);
                    }
                }
                if let Some(kb) = &ex.debug.kb {
                    kb_all += 1;
                    let mut prefix = (*s).clone();
                    prefix.exchanges.truncate(i + 1);
                    kb_ok += usize::from(expressed_slots(&prefix, indexer).matches(&kb.query));
                }
            }
            success += usize::from(label_success(s, indexer)?.success);
            turns.push(s.user_turns() as f64);
            if let Some(r) = s.rating {
                corr.push(r.correctness as f64);
                nat.push(r.naturalness as f64);
            }
        }
        let (avg_c, std_c) = mean_std(&corr);
        let (avg_n, std_n) = mean_std(&nat);
        out.push(ModelReport {
            model: m.to_string(),
            sessions: group.len(),
            slot_precision: ratio(slot_ok, slot_all),
            kb_precision: ratio(kb_ok, kb_all),
            success_rate: ratio(success, group.len()),
            avg_turns: mean_std(&turns).0,
            rated: corr.len(),
            avg_correctness: avg_c,
            std_correctness: std_c,
            avg_naturalness: avg_n,
            std_naturalness: std_n,
            invalid_rate: ratio(invalid, replies),
        });
    }
    Ok(out)
}

impl ModelReport {
    pub fn table(rows: &[ModelReport]) -> String {
        let mut out = String::from(
            "model\tsessions\tslot_precision\tkb_precision\tsuccess_rate\tavg_turns\tavg_correctness\tavg_naturalness\n",
        );
        for r in rows {
            out.push_str(&format!(
                "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.2}\t{:.2} ({:.2})\t{:.2} ({:.2})\n",
                r.model,
                r.sessions,
                r.slot_precision,
                r.kb_precision,
                r.success_rate,
                r.avg_turns,
                r.avg_correctness,
                r.std_correctness,
                r.avg_naturalness,
                r.std_naturalness
            ));
        }
        out
    }
}
