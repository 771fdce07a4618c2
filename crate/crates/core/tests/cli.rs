use std::path::Path;
use std::process::Command;

fn sied(args: &[&str], dir: &Path) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_sied")).args(args).current_dir(dir).output().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "sied {args:?} failed: {stderr}");
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn corpus_model_and_eval_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    sied(&["corpus", "gen", "--n", "40", "--seed", "3", "--out", "all.jsonl"], d);
    sied(&["corpus", "split", "all.jsonl", "--ratios", "0.8,0.1,0.1", "--seed", "1", "--out", "parts"], d);
    for f in ["train", "dev", "test"] {
        assert!(d.join(format!("parts/{f}.jsonl")).exists());
    }
    sied(&["corpus", "augment", "parts/train.jsonl", "--rate", "0.3", "--out", "aug.jsonl"], d);
    sied(&["corpus", "vocab", "parts/train.jsonl", "--side", "system", "--out", "vocab.txt"], d);
    let vocab = std::fs::read_to_string(d.join("vocab.txt")).unwrap();
    assert!(vocab.lines().any(|l| l == "[LOCATION-0]"));

    let cfg = r#"{"embed_dim": 8, "feature_maps": 4, "hidden": 12, "attn_ctx": 8, "max_epochs": 1, "max_decode_len": 12}"#;
    std::fs::write(d.join("cfg.json"), cfg).unwrap();
    sied(&["model", "train", "--train", "parts/train.jsonl", "--dev", "parts/dev.jsonl", "--config", "cfg.json", "--ckpt", "m.ckpt"], d);
    sied(&["model", "decode", "--ckpt", "m.ckpt", "parts/test.jsonl", "--out", "pred.jsonl"], d);
    let preds = std::fs::read_to_string(d.join("pred.jsonl")).unwrap();
    assert!(preds.lines().count() > 0);

    let table = sied(&["eval", "run", "--pred", "pred.jsonl", "--gold", "parts/test.jsonl", "--tagger-corpus", "all.jsonl", "--metrics", "slot,kb,bleu", "--report", "report.txt", "--bootstrap", "20"], d);
    assert!(table.starts_with("model\tda_f1\tslot_f1\tkb_f1\tbleu"), "{table}");
    assert!(table.contains("95% interval"));
    let flat = std::fs::read_to_string(d.join("report.txt")).unwrap();
    assert!(flat.contains("model.slot.f1 = "), "{flat}");

    let first = preds.lines().next().unwrap();
    let rec: serde_json::Value = serde_json::from_str(first).unwrap();
    let id = rec["id"].as_str().unwrap();
    let heat = sied(&["model", "attend", "--ckpt", "m.ckpt", "parts/test.jsonl", "--dialog", id, "--turn", "1", "--out", "att.csv"], d);
    assert!(!heat.is_empty());
    assert!(std::fs::read_to_string(d.join("att.csv")).unwrap().starts_with("turn"));
}

#[test]
fn bad_input_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sied"))
        .args(["corpus", "split", "missing.jsonl", "--out", "x"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn chat_reads_turns_from_stdin() {
    use std::io::Write;
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    sied(&["corpus", "gen", "--n", "10", "--out", "c.jsonl"], d);
    let cfg = r#"{"embed_dim": 4, "feature_maps": 3, "hidden": 6, "attn_ctx": 5, "max_epochs": 1, "max_decode_len": 6}"#;
    std::fs::write(d.join("cfg.json"), cfg).unwrap();
    sied(&["model", "train", "--train", "c.jsonl", "--dev", "c.jsonl", "--config", "cfg.json", "--ckpt", "m.ckpt"], d);
    let mut child = Command::new(env!("CARGO_BIN_EXE_sied"))
        .args(["chat", "--ckpt", "m.ckpt", "--seed", "1"])
        .current_dir(d)
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"from oakland\ngoodbye\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("goal: Find a bus from"), "{text}");
    assert!(text.contains("session ended"), "{text}");
}
