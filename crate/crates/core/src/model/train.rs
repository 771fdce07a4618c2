use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dropout_rng, Dropout, ModelConfig, ModelError, SiedModel};
use crate::autodiff::{adam_step, AdamState, ParamGrads, ParamStore, Tape, Var};
use crate::corpus::DialogView;

#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean per-token cross-entropy over the epoch's updates.
    pub train_loss: f64,
    pub dev_loss: Option<f64>,
    pub dev_accuracy: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub updates: usize,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    Patience,
    TargetAccuracy,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: SiedModel,
    pub history: Vec<EpochMetrics>,
    /// Epoch whose parameters were kept (best dev loss, or the last epoch
    /// without a dev set).
    pub best_epoch: usize,
    pub stop: StopReason,
}

struct DialogLoss {
    loss: Var,
    tokens: usize,
    correct: usize,
}

fn targets(view: &DialogView) -> usize {
    view.turns.len().saturating_sub(1)
}

/// Summed loss for every system turn after the first, each predicted from
/// the turns strictly before it. The dialog is encoded once.
fn dialog_loss(
    model: &SiedModel,
    tape: &mut Tape,
    view: &DialogView,
    rng: &mut Dropout<'_>,
) -> Result<Option<DialogLoss>, ModelError> {
    let n = view.turns.len();
    if n < 2 {
        return Ok(None);
    }
    let enc = model.encode_history(tape, &view.turns[..n - 1], rng)?;
    let mut losses = Vec::with_capacity(n - 1);
    let (mut tokens, mut correct) = (0, 0);
    for k in 1..n {
        let target = &view.turns[k].sys;
        let (l, c, _) = model.target_loss(tape, &enc, k, target, rng)?;
        losses.push(l);
        tokens += target.len() + 1;
        correct += c;
    }
    Ok(Some(DialogLoss { loss: tape.add_n(&losses)?, tokens, correct }))
}

/// Teacher-forced token accuracy and mean per-token loss in evaluation mode.
pub fn token_accuracy(model: &SiedModel, views: &[DialogView]) -> Result<(f64, f64), ModelError> {
    let (mut tokens, mut correct, mut loss) = (0usize, 0usize, 0.0);
    for v in views {
        let mut tape = Tape::new();
        if let Some(d) = dialog_loss(model, &mut tape, v, &mut None)? {
            tokens += d.tokens;
            correct += d.correct;
            loss += tape.value(d.loss).data()[0];
        }
    }
    if tokens == 0 {
        return Err(ModelError::NoTargets);
    }
    Ok((correct as f64 / tokens as f64, loss / tokens as f64))
}

/// Trains a fresh model whose vocabularies come from `train_set`.
pub fn train(
    train_set: &[DialogView],
    dev: &[DialogView],
    config: ModelConfig,
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainOutcome, ModelError> {
    let model = SiedModel::new(config, train_set, seed)?;
    model.fit(train_set, dev, on_epoch)
}

impl SiedModel {
    /// Adam training with global-norm clipping. Each update covers
    /// consecutive shuffled dialogs until at least `batch` target turns are
    /// collected; the loss is averaged over target tokens.
    pub fn fit(
        mut self,
        train_set: &[DialogView],
        dev: &[DialogView],
        on_epoch: &mut dyn FnMut(&EpochMetrics),
    ) -> Result<TrainOutcome, ModelError> {
        let cfg: ModelConfig = self.config.clone();
        if train_set.iter().map(targets).sum::<usize>() == 0 {
            return Err(ModelError::NoTargets);
        }
        let mut shuffle = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(1));
        let mut drop = dropout_rng(self.seed);
        let mut adam = AdamState::new(&self.store);
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        let mut history = Vec::new();
        let mut best: Option<(f64, usize, ParamStore)> = None;
        let mut stop = StopReason::MaxEpochs;
        for epoch in 1..=cfg.max_epochs {
            let start = Instant::now();
            order.shuffle(&mut shuffle);
            let (mut loss_sum, mut token_sum, mut updates) = (0.0, 0usize, 0);
            let mut pos = 0;
            while pos < order.len() {
                let mut grads = ParamGrads::new(self.store.len());
                let (mut examples, mut tokens) = (0, 0);
                while pos < order.len() && examples < cfg.batch {
                    let view = &train_set[order[pos]];
                    pos += 1;
                    let mut tape = Tape::new();
                    let Some(d) = dialog_loss(&self, &mut tape, view, &mut Some(&mut drop))
                        .map_err(|e| diverged(epoch, e))?
                    else {
                        continue;
                    };
                    let g = tape.backward(d.loss).map_err(|e| diverged(epoch, e.into()))?;
                    grads.accumulate(&g.into_param_grads(self.store.len()));
                    loss_sum += tape.value(d.loss).data()[0];
                    token_sum += d.tokens;
                    examples += targets(view);
                    tokens += d.tokens;
                }
                if tokens == 0 {
                    continue;
                }
                grads.scale(1.0 / tokens as f64);
                grads.clip_global_norm(cfg.clip_norm);
                adam_step(&mut self.store, &grads, &mut adam, cfg.lr)?;
                updates += 1;
            }
            let train_loss = loss_sum / token_sum.max(1) as f64;
            if !train_loss.is_finite() {
                return Err(ModelError::Diverged { epoch, detail: format!("training loss {train_loss}") });
            }
            let (dev_accuracy, dev_loss) = if dev.iter().any(|v| targets(v) > 0) {
                let (a, l) = token_accuracy(&self, dev)?;
                (Some(a), Some(l))
            } else {
                (None, None)
            };
            let check_train = cfg.target_train_accuracy.is_some() && epoch % cfg.accuracy_every == 0;
            let train_accuracy = if check_train { Some(token_accuracy(&self, train_set)?.0) } else { None };
            let m = EpochMetrics {
                epoch,
                train_loss,
                dev_loss,
                dev_accuracy,
                train_accuracy,
                updates,
                seconds: start.elapsed().as_secs_f64(),
            };
            log::info!(
                "epoch {epoch}: train loss {train_loss:.4}, dev loss {dev_loss:?}, dev acc {dev_accuracy:?}, train acc {train_accuracy:?}"
            );
            on_epoch(&m);
            history.push(m);
            match dev_loss {
                Some(l) => {
                    if best.as_ref().is_none_or(|(b, _, _)| l < *b) {
                        best = Some((l, epoch, self.store.clone()));
                    }
                }
                None => best = Some((train_loss, epoch, self.store.clone())),
            }
            if let (Some(t), Some(a)) = (cfg.target_train_accuracy, train_accuracy) {
                if a >= t {
                    stop = StopReason::TargetAccuracy;
                    break;
                }
            }
            if best.as_ref().is_some_and(|(_, e, _)| epoch - e >= cfg.patience) {
                stop = StopReason::Patience;
                break;
            }
        }
        let best_epoch = match best {
            Some((_, e, store)) => {
                if stop != StopReason::TargetAccuracy {
                    self.store = store;
                    e
                } else {
                    history.len()
                }
            }
            None => 0,
        };
        Ok(TrainOutcome { model: self, history, best_epoch, stop })
    }
}

fn diverged(epoch: usize, e: ModelError) -> ModelError {
    match e {
        ModelError::Autodiff(a @ crate::autodiff::AutodiffError::NonFinite { .. }) => {
            ModelError::Diverged { epoch, detail: a.to_string() }
        }
        other => other,
    }
}

impl SiedModel {
    /// Summed teacher-forced cross-entropy over a dialog's targets, without
    /// dropout.
    pub fn loss(&self, tape: &mut Tape, view: &DialogView) -> Result<Var, ModelError> {
        dialog_loss(self, tape, view, &mut None)?.map(|d| d.loss).ok_or(ModelError::NoTargets)
    }
}
