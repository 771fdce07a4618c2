//! Trains a small attention model for a few epochs and prints the attention
//! heatmap of one decoded test turn.
//!
//! `cargo run --release --example attention_heatmap -- [epochs]`

use sied::corpus::{generate_synthetic_corpus, index_dialog, split, DialogView, SynthConfig};
use sied::entity::EntityIndexer;
use sied::model::{heatmap_text, train, ModelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(6);
    let data = generate_synthetic_corpus(&SynthConfig { n_dialogs: 250, ..SynthConfig::default() }, 4)?;
    let parts = split(&data, [0.8, 0.1, 0.1], 1)?;
    let ix = EntityIndexer::default();
    let views = |d: &sied::corpus::Dataset| -> Vec<DialogView> { d.dialogs.iter().map(|x| index_dialog(x, &ix).unwrap()).collect() };
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
    let out = train(&views(&parts.train), &views(&parts.dev), config, 1, &mut |m| eprintln!("epoch {} loss {:.3}", m.epoch, m.train_loss))?;
    let test = views(&parts.test);
    let view = test.iter().find(|v| v.turns.iter().any(|t| t.sys.first().is_some_and(|s| s == "[kb-search]"))).unwrap_or(&test[0]);
    let turn = view.turns.iter().position(|t| t.sys.first().is_some_and(|s| s == "[kb-search]")).unwrap_or(1);
    let history = &view.turns[..turn];
    let generated = out.model.decode(history)?.tokens;
    let att = out.model.attention_weights(history, &generated)?;
    let labels: Vec<String> = history.iter().enumerate().map(|(i, t)| format!("{i}: {}", t.usr.join(" "))).collect();
    println!("{} turn {turn}\ngold: {}\npred: {}\n", view.id, view.turns[turn].sys.join(" "), generated.join(" "));
    print!("{}", heatmap_text(&att, &labels));
    Ok(())
}
