//! Trains a small attention model on a synthetic corpus and decodes a
//! few test turns.
//!
//! `cargo run --release --example train_model -- [dialogs] [epochs] [model.ckpt]`

use sied::corpus::{generate_synthetic_corpus, index_dialog, split, DialogView, SynthConfig};
use sied::entity::EntityIndexer;
use sied::model::{train, ModelConfig};

fn main() {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: usize| raw.get(i).map_or(d, |a| a.parse().expect("numeric argument"));
    let (n, epochs) = (num(0, 300), num(1, 5));
    let data = generate_synthetic_corpus(&SynthConfig { n_dialogs: n, ..SynthConfig::default() }, 1).unwrap();
    let parts = split(&data, [0.8, 0.1, 0.1], 1).unwrap();
    let ix = EntityIndexer::default();
    let views = |d: &sied::corpus::Dataset| -> Vec<DialogView> {
        d.dialogs.iter().map(|x| index_dialog(x, &ix).unwrap()).collect()
    };
    let (tr, dev, test) = (views(&parts.train), views(&parts.dev), views(&parts.test));
    let config = ModelConfig {
        embed_dim: 32,
        feature_maps: 32,
        hidden: 64,
        attn_ctx: 64,
        lr: 2e-3,
        confidence_scale: 10.0,
        max_epochs: epochs,
        ..ModelConfig::default()
    };
    let out = train(&tr, &dev, config, 1, &mut |m| {
        println!(
            "epoch {:>2}  train loss {:.3}  dev loss {:.3}  dev acc {:.3}  {:.1}s",
            m.epoch,
            m.train_loss,
            m.dev_loss.unwrap_or(f64::NAN),
            m.dev_accuracy.unwrap_or(f64::NAN),
            m.seconds
        )
    })
    .unwrap();
    println!("kept epoch {} ({:?})", out.best_epoch, out.stop);
    if let Some(path) = raw.get(2) {
        out.model.save(std::path::Path::new(path)).unwrap();
        println!("saved {path}");
    }
    let view = &test[0];
    let preds = out.model.decode_dialog(view).unwrap();
    for (k, p) in preds.iter().enumerate().take(6) {
        println!("gold: {}", view.turns[k + 1].sys.join(" "));
        println!("pred: {}\n", p.tokens.join(" "));
    }
}
