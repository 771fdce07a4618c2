use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::DialogAct;

/// A tokenized utterance with its gold act set.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledUtterance {
    pub tokens: Vec<String>,
    pub acts: Vec<DialogAct>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub epochs: usize,
    pub lambda: f64,
    pub min_examples: usize,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        Self { epochs: 15, lambda: 1e-4, min_examples: 5, seed: 0 }
    }
}

/// Bag of bigrams over the utterance padded with boundary markers.
pub fn bigram_features(tokens: &[String]) -> BTreeSet<String> {
    let mut padded = vec!["<s>"];
    padded.extend(tokens.iter().map(String::as_str));
    padded.push("</s>");
    padded.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect()
}

/// One-vs-rest linear classifiers trained with the hinge loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaTagger {
    labels: Vec<DialogAct>,
    features: HashMap<String, usize>,
    /// `weights[l]` has one entry per feature plus a trailing bias.
    weights: Vec<Vec<f64>>,
}

impl DaTagger {
    /// Trains a scorer for every label that occurs in `data`. Each of those
    /// labels needs at least `min_examples` positive utterances.
    pub fn train(data: &[LabeledUtterance], config: &TaggerConfig) -> Result<Self, EvalError> {
        let mut seen: Vec<DialogAct> = data.iter().flat_map(|u| u.acts.iter().copied()).collect();
        seen.sort_by_key(|a| a.index());
        seen.dedup();
        Self::train_labels(data, &seen, config)
    }

    pub fn train_labels(data: &[LabeledUtterance], labels: &[DialogAct], config: &TaggerConfig) -> Result<Self, EvalError> {
        if labels.is_empty() {
            return Err(EvalError::Empty("no labels to train".into()));
        }
        for &l in labels {
            let n = data.iter().filter(|u| u.acts.contains(&l)).count();
            if n < config.min_examples {
                return Err(EvalError::LabelCoverage { label: l, found: n, needed: config.min_examples });
            }
        }
        let mut features = HashMap::new();
        let encoded: Vec<Vec<usize>> = data
            .iter()
            .map(|u| {
                bigram_features(&u.tokens)
                    .into_iter()
                    .map(|f| {
                        let n = features.len();
                        *features.entry(f).or_insert(n)
                    })
                    .collect()
            })
            .collect();
        let dim = features.len() + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut weights = Vec::with_capacity(labels.len());
        for &l in labels {
            // w = scale * v
            let mut v = vec![0.0; dim];
            let mut scale = 1.0;
            let mut t = 0usize;
            for _ in 0..config.epochs {
                order.shuffle(&mut rng);
                for &i in &order {
                    t += 1;
                    let eta = 1.0 / (config.lambda * (t as f64 + 1e4));
                    let y = if data[i].acts.contains(&l) { 1.0 } else { -1.0 };
                    let score = v[dim - 1] + scale * encoded[i].iter().map(|&f| v[f]).sum::<f64>();
                    scale *= 1.0 - eta * config.lambda;
                    if y * score < 1.0 {
                        for &f in &encoded[i] {
                            v[f] += eta * y / scale;
                        }
                        v[dim - 1] += eta * y;
                    }
                }
            }
            let mut w: Vec<f64> = v.iter().map(|x| x * scale).collect();
            w[dim - 1] = v[dim - 1];
            weights.push(w);
        }
        Ok(Self { labels: labels.to_vec(), features, weights })
    }

    pub fn labels(&self) -> &[DialogAct] {
        &self.labels
    }

    pub fn scores(&self, tokens: &[String]) -> Vec<(DialogAct, f64)> {
        let feats: Vec<usize> = bigram_features(tokens).iter().filter_map(|f| self.features.get(f).copied()).collect();
        self.labels
            .iter()
            .zip(&self.weights)
            .map(|(&l, w)| (l, w[w.len() - 1] + feats.iter().map(|&f| w[f]).sum::<f64>()))
            .collect()
    }

    /// Labels with a positive score, or the single best label when none is.
    pub fn tag(&self, tokens: &[String]) -> Vec<DialogAct> {
        let scores = self.scores(tokens);
        let mut out: Vec<DialogAct> = scores.iter().filter(|(_, s)| *s > 0.0).map(|(l, _)| *l).collect();
        if out.is_empty() {
            let best = scores.iter().fold(scores[0], |b, x| if x.1 > b.1 { *x } else { b });
            out.push(best.0);
        }
        out
    }

    /// Fraction of (utterance, label) decisions that agree with the gold
    /// sets, over the tagger's labels.
    pub fn label_accuracy(&self, data: &[LabeledUtterance]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let mut agree = 0;
        for u in data {
            let tags = self.tag(&u.tokens);
            agree += self.labels.iter().filter(|l| tags.contains(l) == u.acts.contains(l)).count();
        }
        agree as f64 / (data.len() * self.labels.len()) as f64
    }
}

/// Indexed system utterances of a corpus with their gold acts.
pub fn labeled_system_turns(
    data: &crate::corpus::Dataset,
    indexer: &crate::entity::EntityIndexer,
) -> Result<Vec<LabeledUtterance>, crate::corpus::CorpusError> {
    let mut out = Vec::new();
    for d in &data.dialogs {
        let view = crate::corpus::index_dialog(d, indexer)?;
        for (t, v) in d.turns.iter().zip(view.turns) {
            if !t.acts.is_empty() {
                out.push(LabeledUtterance { tokens: v.sys, acts: t.acts.clone() });
            }
        }
    }
    Ok(out)
}
