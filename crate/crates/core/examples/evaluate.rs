//! Trains the indexed model with and without attention, the attention model
//! on chat-augmented data, and the unindexed baseline on a synthetic corpus,
//! then prints the metric table.
//!
//! `cargo run --release --example evaluate -- [dialogs] [epochs]`

use sied::corpus::{
    augment_with_chat, bundled_chat_pairs, generate_synthetic_corpus, index_dialog, raw_dialog, split, Dataset,
    DialogView, SynthConfig, FRESH_PLACES,
};
use sied::entity::{EntityIndexer, Recognizer};
use sied::eval::{
    attention_grounding, collect_predictions, labeled_system_turns, score_all, DaTagger, EvalReport, Metric,
    TaggerConfig,
};
use sied::model::{train, ModelConfig};

fn views(d: &Dataset, ix: &EntityIndexer, raw: bool) -> Vec<DialogView> {
    d.dialogs.iter().map(|x| if raw { raw_dialog(x, ix) } else { index_dialog(x, ix) }.unwrap()).collect()
}

fn main() {
    env_logger::init();
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("numeric argument"));
    let n = args.next().unwrap_or(1000);
    let epochs = args.next().unwrap_or(10);
    let data = generate_synthetic_corpus(&SynthConfig { n_dialogs: n, ..SynthConfig::default() }, 1).unwrap();
    let parts = split(&data, [0.8, 0.1, 0.1], 1).unwrap();
    let fresh_cfg = SynthConfig {
        n_dialogs: parts.test.len(),
        places: FRESH_PLACES.iter().map(|s| s.to_string()).collect(),
        id_prefix: "fresh".into(),
        ..SynthConfig::default()
    };
    let fresh = generate_synthetic_corpus(&fresh_cfg, 2).unwrap();
    let ix = EntityIndexer::default();
    let fresh_ix = EntityIndexer::new(Recognizer::bundled().with_locations(FRESH_PLACES));
    let tagger = DaTagger::train(&labeled_system_turns(&parts.train, &ix).unwrap(), &TaggerConfig::default()).unwrap();
    let base = ModelConfig { embed_dim: 32, feature_maps: 32, hidden: 64, attn_ctx: 64, max_epochs: epochs, lr: 2e-3, confidence_scale: 10.0, ..ModelConfig::default() };
    let mut report = EvalReport::default();
    let systems = [("ei+attn+chat", true, false, 0.3), ("ei+attn", true, false, 0.0), ("ei", false, false, 0.0), ("vanilla", false, true, 0.0)];
    for (name, attention, raw, chat) in systems {
        let cfg = ModelConfig { attention, ..base.clone() };
        let train_set = augment_with_chat(&parts.train, &bundled_chat_pairs(), chat, 1).unwrap().training_set(&parts.train);
        let (tr, dev) = (views(&train_set, &ix, raw), views(&parts.dev, &ix, raw));
        let t0 = std::time::Instant::now();
        let out = train(&tr, &dev, cfg, 1, &mut |m| {
            eprintln!("{name} epoch {} loss {:.3} dev {:.3} acc {:.3}", m.epoch, m.train_loss, m.dev_loss.unwrap(), m.dev_accuracy.unwrap())
        })
        .unwrap();
        eprintln!("{name}: {:.0}s, kept epoch {}", t0.elapsed().as_secs_f64(), out.best_epoch);
        let post = raw.then_some(&fresh_ix);
        let test = collect_predictions(&out.model, &views(&parts.test, &fresh_ix, raw), post).unwrap();
        report.push(name, score_all(&test, &Metric::ALL, Some(&tagger)).unwrap());
        let unseen = collect_predictions(&out.model, &views(&fresh, &fresh_ix, raw), post).unwrap();
        report.push(&format!("{name} (unseen places)"), score_all(&unseen, &Metric::ALL, Some(&tagger)).unwrap());
        if attention {
            let g = attention_grounding(&out.model, &views(&parts.test, &ix, false)).unwrap();
            println!(
                "{name} attention grounding over {} slots: first mention {:.3}, any mention {:.3}",
                g.total,
                g.rate(),
                g.mention_rate()
            );
        }
    }
    print!("{}", report.to_table());
}
