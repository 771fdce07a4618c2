//! Injects off-task chat exchanges into a synthetic corpus and shows one
//! augmented copy next to its original.
//!
//! `cargo run --example chat_augmentation -- [rate]`

use sied::corpus::{augment_with_chat, bundled_chat_pairs, generate_synthetic_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rate: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.3);
    let data = generate_synthetic_corpus(&SynthConfig { n_dialogs: 40, ..SynthConfig::default() }, 5)?;
    let pairs = bundled_chat_pairs();
    let aug = augment_with_chat(&data, &pairs, rate, 1)?;
    println!("{} turns, {} chat turns inserted into {} copies", data.total_turns(), aug.injections, aug.copies.len());
    let copy = &aug.copies.dialogs[0];
    let orig_id = copy.id.split("-aug").next().unwrap_or(&copy.id);
    let orig = data.dialogs.iter().find(|d| d.id == orig_id).expect("copy of a known dialog");
    for (name, d) in [("original", orig), ("augmented", copy)] {
        println!("== {name} {}", d.id);
        for t in &d.turns {
            println!("  S: {}", t.sys);
            if !t.usr.is_empty() {
                println!("  U: {}", t.usr);
            }
        }
    }
    Ok(())
}
