//! Trains the bigram dialog-act tagger on synthetic system turns and tags a
//! few indexed utterances.

use sied::corpus::{generate_synthetic_corpus, split, SynthConfig};
use sied::entity::{split_tokens, EntityIndexer};
use sied::eval::{labeled_system_turns, DaTagger, TaggerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic_corpus(&SynthConfig { n_dialogs: 400, ..SynthConfig::default() }, 3)?;
    let parts = split(&data, [0.8, 0.0, 0.2], 1)?;
    let ix = EntityIndexer::default();
    let tagger = DaTagger::train(&labeled_system_turns(&parts.train, &ix)?, &TaggerConfig::default())?;
    let held = labeled_system_turns(&parts.test, &ix)?;
    println!("held-out label accuracy {:.4} over {} utterances", tagger.label_accuracy(&held), held.len());
    for u in [
        "leaving from [LOCATION-0] . where do you want to go ?",
        "sorry , could you repeat that ?",
        "[kb-search] [LOCATION-0] [LOCATION-1] [HOUR-0] [MINUTE-0] [AMPM-0] . you can ask about another trip or say goodbye .",
        "i am sorry i can only help with bus schedules . when would you like to leave ?",
    ] {
        let acts: Vec<&str> = tagger.tag(&split_tokens(u)).iter().map(|a| a.as_str()).collect();
        println!("{u}\n  -> {}", acts.join(", "));
    }
    Ok(())
}
