//! Indexes a short exchange, then lexicalizes a generated reply with a
//! knowledge-base query against the mock backend.

use sied::entity::{lexicalize, parse_indexed, render_indexed, split_tokens, EntityIndexer, IndexedEntityTable};
use sied::kb::MockBackend;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let indexer = EntityIndexer::default();
    let mut table = IndexedEntityTable::new();
    for usr in ["i want to go from oakland to the airport", "actually from downtown", "at ten fifteen p m"] {
        let toks = split_tokens(usr);
        for m in indexer.recognizer().recognize(&toks) {
            println!("  {:?} {:?} -> {}", m.entity_type, m.span, m.normalized);
        }
        let indexed = render_indexed(&indexer.index_utterance(&toks, &mut table));
        println!("U: {usr}\n   {}", indexed.join(" "));
    }
    println!("table:");
    for e in table.entries() {
        println!("  [{}-{}] = {} ({})", e.entity_type, e.index, e.normalized, e.surface);
    }

    let kb = MockBackend::new(3, indexer.recognizer().locations());
    let reply = "[kb-search] [LOCATION-2] [LOCATION-1] [HOUR-0] [MINUTE-0] [AMPM-0] . you can ask about another trip or say goodbye .";
    let lex = lexicalize(&parse_indexed(&split_tokens(reply)), &table, &kb)?;
    println!("S: {reply}\n   {}", lex.text());
    if let Some(q) = lex.query {
        println!("query: {} -> {} at {}", q.departure, q.arrival, q.departure_time());
    }
    Ok(())
}
