//! Chats with a trained checkpoint over stdin, or serves the HTTP API with
//! `--http PORT`. Without a checkpoint a small model is trained first.
//!
//! `cargo run --release --example chat_service -- [model.ckpt] [--http 8080]`

use std::sync::Arc;

use sied::corpus::{generate_synthetic_corpus, index_dialog, DialogView, SynthConfig};
use sied::entity::EntityIndexer;
use sied::kb::MockBackend;
use sied::model::{train, ModelConfig, SiedModel};
use sied::service::{router, run_repl, DialogService, ServiceConfig};

fn quick_model() -> Result<SiedModel, Box<dyn std::error::Error>> {
    let data = generate_synthetic_corpus(&SynthConfig { n_dialogs: 200, ..SynthConfig::default() }, 1)?;
    let ix = EntityIndexer::default();
    let views: Vec<DialogView> = data.dialogs.iter().map(|d| index_dialog(d, &ix)).collect::<Result<_, _>>()?;
    let config = ModelConfig {
        embed_dim: 32,
        feature_maps: 32,
        hidden: 64,
        attn_ctx: 64,
        lr: 2e-3,
        confidence_scale: 10.0,
        max_epochs: 8,
        ..ModelConfig::default()
    };
    let (tr, dev) = views.split_at(180);
    eprintln!("training a small model on 180 dialogs...");
    Ok(train(tr, dev, config, 1, &mut |m| eprintln!("epoch {} dev acc {:.3}", m.epoch, m.dev_accuracy.unwrap_or(0.0)))?.model)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let port = args.iter().position(|a| a == "--http").map(|i| args[i + 1].parse::<u16>()).transpose()?;
    let ckpt = args.first().filter(|a| !a.starts_with("--"));
    let model = match ckpt {
        Some(p) => SiedModel::load(std::path::Path::new(p))?,
        None => quick_model()?,
    };
    let indexer = EntityIndexer::default();
    let kb = Arc::new(MockBackend::new(3, indexer.recognizer().locations()));
    let mut service = DialogService::new(kb, indexer, ServiceConfig { debug: port.is_some(), ..ServiceConfig::default() });
    service.register("sied", Arc::new(model));
    match port {
        Some(port) => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
                eprintln!("listening on http://127.0.0.1:{port}");
                axum::serve(listener, router(service, None)).await
            })?;
        }
        None => {
            let stdin = std::io::stdin();
            run_repl(&service, &mut stdin.lock(), &mut std::io::stdout(), None)?;
        }
    }
    Ok(())
}
