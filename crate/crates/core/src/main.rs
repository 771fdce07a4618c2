use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sied::corpus::{
    augment_with_chat, build_vocab, bundled_chat_pairs, generate_synthetic_corpus, index_dialog, load_chat_pairs,
    raw_dialog, split, Dataset, DialogView, Side, SynthConfig,
};
use sied::entity::{EntityIndexer, Recognizer};
use sied::eval::{
    align_predictions, bootstrap, decode_records, labeled_system_turns, score_all, DaTagger, EvalReport, Metric,
    PredictionRecord, TaggerConfig,
};
use sied::kb::MockBackend;
use sied::model::{heatmap_csv, heatmap_text, train, ModelConfig, SiedModel};
use sied::service::{router, run_repl, DialogService, ServiceConfig, SessionStore};

type Res<T = ()> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "sied", version, about = "Slot-value independent dialog models: data, training, evaluation and serving")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate, split, augment and inspect dialog corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Train, decode and inspect models.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Score predictions against gold dialogs.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Serve the HTTP API (and a static UI directory).
    Serve(ServeArgs),
    /// Chat with a model in the terminal.
    Chat {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        kb_seed: u64,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Generate a synthetic bus-information corpus.
    Gen {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split into train.jsonl, dev.jsonl and test.jsonl.
    Split {
        input: PathBuf,
        #[arg(long, default_value = "0.85,0.05,0.10")]
        ratios: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Insert chat adjacency pairs into copies of the dialogs.
    Augment {
        input: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// query<TAB>response file; the bundled pairs when omitted.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the indexed vocabulary of one side, one token per line.
    Vocab {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SideArg::System)]
        side: SideArg,
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    System,
    User,
}

#[derive(Args)]
struct ViewArgs {
    /// Use unindexed dialogs (the no-indexing baseline).
    #[arg(long)]
    raw: bool,
}

#[derive(Subcommand)]
enum ModelCmd {
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        /// JSON model config; unset fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        ckpt: PathBuf,
        #[command(flatten)]
        view: ViewArgs,
    },
    /// Decode every system turn after the first into a prediction file.
    Decode {
        #[arg(long)]
        ckpt: PathBuf,
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        view: ViewArgs,
    },
    /// Attention heatmap for one decoded turn.
    Attend {
        #[arg(long)]
        ckpt: PathBuf,
        input: PathBuf,
        #[arg(long)]
        dialog: String,
        #[arg(long)]
        turn: usize,
        /// CSV destination; the text heatmap goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    Run {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value = "da,slot,kb,bleu")]
        metrics: String,
        #[arg(long)]
        report: PathBuf,
        /// Corpus with act labels to train the act tagger on; the gold file
        /// when omitted.
        #[arg(long)]
        tagger_corpus: Option<PathBuf>,
        #[arg(long, default_value = "model")]
        name: String,
        /// Bootstrap resamples for 95% intervals (0 to skip).
        #[arg(long, default_value_t = 0)]
        bootstrap: usize,
        #[command(flatten)]
        view: ViewArgs,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Second model for an A/B comparison.
    #[arg(long)]
    ckpt_b: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long)]
    debug: bool,
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Directory for the session log.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    #[arg(long)]
    redecode_masked: bool,
    #[arg(long, default_value_t = 0)]
    kb_seed: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn views(data: &Dataset, raw: bool) -> Res<Vec<DialogView>> {
    let ix = EntityIndexer::default();
    let v = data.dialogs.iter().map(|d| if raw { raw_dialog(d, &ix) } else { index_dialog(d, &ix) });
    Ok(v.collect::<Result<_, _>>()?)
}

fn read_records(path: &Path) -> Res<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        out.push(serde_json::from_str(line).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn corpus(cmd: CorpusCmd) -> Res {
    match cmd {
        CorpusCmd::Gen { n, seed, out } => {
            let data = generate_synthetic_corpus(&SynthConfig { n_dialogs: n, ..SynthConfig::default() }, seed)?;
            data.save(&out)?;
            eprintln!("{} dialogs, {} turns -> {}", data.len(), data.total_turns(), out.display());
        }
        CorpusCmd::Split { input, ratios, seed, out } => {
            let r: Vec<f64> = ratios.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>()?;
            let [a, b, c] = r[..] else {
                return Err("--ratios needs three values".into());
            };
            let s = split(&Dataset::load(&input)?, [a, b, c], seed)?;
            fs::create_dir_all(&out)?;
            for (name, d) in [("train", &s.train), ("dev", &s.dev), ("test", &s.test)] {
                d.save(&out.join(format!("{name}.jsonl")))?;
                eprintln!("{name}: {} dialogs", d.len());
            }
        }
        CorpusCmd::Augment { input, rate, seed, pairs, out } => {
            let data = Dataset::load(&input)?;
            let pairs = match pairs {
                Some(p) => load_chat_pairs(&p)?,
                None => bundled_chat_pairs(),
            };
            let aug = augment_with_chat(&data, &pairs, rate, seed)?;
            aug.training_set(&data).save(&out)?;
            eprintln!("{} injections in {} copies", aug.injections, aug.copies.len());
        }
        CorpusCmd::Vocab { input, side, raw, out } => {
            let side = match side {
                SideArg::System => Side::System,
                SideArg::User => Side::User,
            };
            let vocab = build_vocab(&views(&Dataset::load(&input)?, raw)?, side, 1);
            fs::write(&out, vocab.tokens().join("\n") + "\n")?;
            eprintln!("{} tokens", vocab.len());
        }
    }
    Ok(())
}

fn model(cmd: ModelCmd) -> Res {
    match cmd {
        ModelCmd::Train { train: tr, dev, config, seed, ckpt, view } => {
            let cfg: ModelConfig = match config {
                Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
                None => ModelConfig::default(),
            };
            let (tr, dev) = (views(&Dataset::load(&tr)?, view.raw)?, views(&Dataset::load(&dev)?, view.raw)?);
            let out = train(&tr, &dev, cfg, seed, &mut |m| {
                eprintln!(
                    "epoch {} train {:.4} dev {} acc {} ({:.1}s)",
                    m.epoch,
                    m.train_loss,
                    m.dev_loss.map_or("-".into(), |x| format!("{x:.4}")),
                    m.dev_accuracy.map_or("-".into(), |x| format!("{x:.4}")),
                    m.seconds
                )
            })?;
            out.model.save(&ckpt)?;
            eprintln!("kept epoch {} ({:?}) -> {}", out.best_epoch, out.stop, ckpt.display());
        }
        ModelCmd::Decode { ckpt, input, out, view } => {
            let m = SiedModel::load(&ckpt)?;
            let recs = decode_records(&m, &views(&Dataset::load(&input)?, view.raw)?)?;
            let lines: Vec<String> = recs.iter().map(serde_json::to_string).collect::<Result<_, _>>()?;
            fs::write(&out, lines.join("\n") + "\n")?;
            eprintln!("{} turns -> {}", recs.len(), out.display());
        }
        ModelCmd::Attend { ckpt, input, dialog, turn, out } => {
            let m = SiedModel::load(&ckpt)?;
            let vs = views(&Dataset::load(&input)?, false)?;
            let v = vs.iter().find(|v| v.id == dialog).ok_or_else(|| format!("no dialog `{dialog}`"))?;
            if turn == 0 || turn >= v.turns.len() {
                return Err(format!("turn must be within 1..{}", v.turns.len()).into());
            }
            let history = &v.turns[..turn];
            let generated = m.decode(history)?.tokens;
            let att = m.attention_weights(history, &generated)?;
            let labels: Vec<String> =
                history.iter().enumerate().map(|(i, t)| format!("{i}: {} | {}", t.sys.join(" "), t.usr.join(" "))).collect();
            print!("{}", heatmap_text(&att, &labels));
            if let Some(p) = out {
                fs::write(p, heatmap_csv(&att))?;
            }
        }
    }
    Ok(())
}

fn eval(cmd: EvalCmd) -> Res {
    let EvalCmd::Run { pred, gold, metrics, report, tagger_corpus, name, bootstrap: samples, view } = cmd;
    let metrics: Vec<Metric> = metrics.split(',').map(|m| m.trim().parse()).collect::<Result<_, _>>()?;
    let gold_data = Dataset::load(&gold)?;
    let ix = EntityIndexer::default();
    let p = align_predictions(&read_records(&pred)?, &views(&gold_data, view.raw)?, view.raw.then_some(&ix))?;
    let tagger = if metrics.contains(&Metric::Da) {
        let src = match &tagger_corpus {
            Some(path) => Dataset::load(path)?,
            None => gold_data.clone(),
        };
        Some(DaTagger::train(&labeled_system_turns(&src, &ix)?, &TaggerConfig::default())?)
    } else {
        None
    };
    let scores = score_all(&p, &metrics, tagger.as_ref())?;
    let mut r = EvalReport::default();
    r.push(&name, scores);
    r.write(&report)?;
    print!("{}", r.to_table());
    for &m in &metrics {
        if samples > 0 {
            let (lo, hi) = bootstrap(&p, m, tagger.as_ref(), samples, 0)?;
            println!("{} 95% interval [{lo:.4}, {hi:.4}]", m.as_str());
        }
    }
    Ok(())
}

fn service(ckpt: &Path, ckpt_b: Option<&Path>, config: ServiceConfig, kb_seed: u64) -> Res<DialogService> {
    let places = config.places.clone();
    let mut s = DialogService::new(
        Arc::new(MockBackend::new(kb_seed, &places)),
        EntityIndexer::new(Recognizer::bundled().with_locations(&places)),
        config,
    );
    s.register("a", Arc::new(SiedModel::load(ckpt)?));
    if let Some(b) = ckpt_b {
        s.register("b", Arc::new(SiedModel::load(b)?));
    }
    Ok(s)
}

fn serve(a: ServeArgs) -> Res {
    let config = ServiceConfig { debug: a.debug, redecode_masked: a.redecode_masked, seed: a.seed, ..Default::default() };
    let mut s = service(&a.ckpt, a.ckpt_b.as_deref(), config, a.kb_seed)?;
    if let Some(dir) = &a.log_dir {
        s = s.with_store(SessionStore::open(dir)?);
    }
    let app = router(s, a.static_dir);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", a.port)).await?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, app).await
    })?;
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Corpus(c) => corpus(c),
        Cmd::Model(c) => model(c),
        Cmd::Eval(c) => eval(c),
        Cmd::Serve(a) => serve(a),
        Cmd::Chat { ckpt, seed, kb_seed } => service(&ckpt, None, ServiceConfig::default(), kb_seed).and_then(|s| {
            let stdin = std::io::stdin();
            run_repl(&s, &mut stdin.lock(), &mut std::io::stdout(), seed)?;
            Ok(())
        }),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

