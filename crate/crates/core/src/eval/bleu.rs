use std::collections::HashMap;

use super::EvalError;

/// Stand-in count for an n-gram order with no matches.
pub const BLEU_EPSILON: f64 = 1e-9;

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// Clipped matches and candidate n-gram totals for orders 1..=4, plus the
/// candidate and reference lengths, summed over the corpus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BleuStats {
    pub matches: [usize; 4],
    pub totals: [usize; 4],
    pub cand_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn add(&mut self, cand: &[String], reference: &[String]) {
        for n in 1..=4 {
            let c = ngrams(cand, n);
            let r = ngrams(reference, n);
            self.matches[n - 1] += c.iter().map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0))).sum::<usize>();
            self.totals[n - 1] += cand.len().saturating_sub(n - 1);
        }
        self.cand_len += cand.len();
        self.ref_len += reference.len();
    }

    /// Geometric mean of the modified precisions times the brevity penalty.
    /// Orders with no candidate n-grams are left out of the mean; an order
    /// with zero matches uses [`BLEU_EPSILON`] as its match count.
    pub fn score(&self) -> f64 {
        if self.cand_len == 0 {
            return 0.0;
        }
        let logs: Vec<f64> = (0..4)
            .filter(|&i| self.totals[i] > 0)
            .map(|i| {
                let m = if self.matches[i] == 0 { BLEU_EPSILON } else { self.matches[i] as f64 };
                (m / self.totals[i] as f64).ln()
            })
            .collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        let bp = if self.cand_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.cand_len as f64).exp()
        };
        bp * mean.exp()
    }
}

/// Corpus-level BLEU-4 with a single reference per candidate.
pub fn bleu4(candidates: &[Vec<String>], references: &[Vec<String>]) -> Result<f64, EvalError> {
    if candidates.len() != references.len() {
        return Err(EvalError::LengthMismatch { predicted: candidates.len(), gold: references.len() });
    }
    if candidates.is_empty() {
        return Err(EvalError::Empty("bleu needs at least one sentence".into()));
    }
    let mut stats = BleuStats::default();
    for (c, r) in candidates.iter().zip(references) {
        stats.add(c, r);
    }
    Ok(stats.score())
}
