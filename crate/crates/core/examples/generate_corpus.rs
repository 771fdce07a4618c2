//! Generates a small synthetic corpus and prints the first dialogs in both
//! raw and entity-indexed form.

use sied::corpus::{generate_synthetic_corpus, index_dialog, SynthConfig};
use sied::entity::EntityIndexer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let cfg = SynthConfig { n_dialogs: n, ..SynthConfig::default() };
    let data = generate_synthetic_corpus(&cfg, 42)?;
    let indexer = EntityIndexer::default();
    for d in &data.dialogs {
        let view = index_dialog(d, &indexer)?;
        println!("== {}", d.id);
        for (t, v) in d.turns.iter().zip(&view.turns) {
            let acts: Vec<_> = t.acts.iter().map(|a| a.as_str()).collect();
            println!("  S: {}\n     {}   {{{}}}", t.sys, v.sys.join(" "), acts.join(", "));
            if !t.usr.is_empty() {
                println!("  U: {}  ({:.2})\n     {}", t.usr, t.conf, v.usr.join(" "));
            }
        }
    }
    println!("{} dialogs, {} turns", data.len(), data.total_turns());
    Ok(())
}
