use std::collections::HashSet;

mod common;

use common::{count_injections, thousand_turns};
use proptest::prelude::*;
use sied::corpus::{
    augment_with_chat, build_vocab, bundled_chat_pairs, generate_synthetic_corpus, index_dialog, raw_dialog, split,
    Dataset, Dialog, DialogView, Provenance, Side, SynthConfig, Turn,
};
use sied::entity::EntityIndexer;

fn corpus(n: usize, seed: u64) -> Dataset {
    generate_synthetic_corpus(&SynthConfig { n_dialogs: n, ..SynthConfig::default() }, seed).unwrap()
}

fn views(data: &Dataset, raw: bool) -> Vec<DialogView> {
    let ix = EntityIndexer::default();
    data.dialogs.iter().map(|d| if raw { raw_dialog(d, &ix) } else { index_dialog(d, &ix) }.unwrap()).collect()
}

#[test]
fn synthetic_generation_basics() {
    assert!(corpus(0, 1).is_empty());
    assert_eq!(corpus(20, 5), corpus(20, 5));
    assert_ne!(corpus(20, 5), corpus(20, 6));
    let cfg = SynthConfig { places: vec!["cmu".into()], ..SynthConfig::default() };
    assert!(generate_synthetic_corpus(&cfg, 1).is_err());
}

#[test]
fn thousand_dialogs_have_policy_bounded_length_and_grounded_queries() {
    let data = corpus(1000, 11);
    let mean = data.total_turns() as f64 / data.len() as f64;
    assert!((5.0..=12.0).contains(&mean), "mean length {mean}");
    let ix = EntityIndexer::default();
    let mut kb_dialogs = 0;
    for d in &data.dialogs {
        assert!(d.turns.last().unwrap().acts.contains(&sied::corpus::DialogAct::Goodbye));
        // Scan: every query value must occur in some earlier user turn.
        for (i, t) in d.turns.iter().enumerate() {
            if let Some(kb) = &t.kb {
                kb_dialogs += 1;
                let earlier: Vec<&str> = d.turns[..i].iter().map(|u| u.usr.as_str()).collect();
                let earlier = earlier.join(" | ");
                assert!(earlier.contains(&kb.query.departure), "{} turn {i}", d.id);
                assert!(earlier.contains(&kb.query.arrival), "{} turn {i}", d.id);
            }
        }
        index_dialog(d, &ix).unwrap();
    }
    assert!(kb_dialogs >= 1000);
}

#[test]
fn jsonl_roundtrip_is_byte_identical() {
    let data = corpus(30, 2);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.jsonl");
    data.save(&p).unwrap();
    let back = Dataset::load(&p).unwrap();
    assert_eq!(back, data);
    assert_eq!(back.to_jsonl(), std::fs::read_to_string(&p).unwrap());
}

#[test]
fn split_sizes_and_determinism() {
    let data = corpus(100, 3);
    let s = split(&data, [0.85, 0.05, 0.10], 1).unwrap();
    assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (85, 5, 10));
    assert_eq!(s, split(&data, [0.85, 0.05, 0.10], 1).unwrap());
    let all = split(&data, [1.0, 0.0, 0.0], 1).unwrap();
    assert_eq!((all.train.len(), all.dev.len(), all.test.len()), (100, 0, 0));
    assert!(split(&Dataset::default(), [1.0, 0.0, 0.0], 1).is_err());
    assert!(split(&data, [0.5, 0.1, 0.1], 1).is_err());
}

fn tiny_dataset(lens: &[usize]) -> Dataset {
    Dataset::new(
        lens.iter()
            .enumerate()
            .map(|(n, &len)| Dialog {
                id: format!("d{n}"),
                src: Provenance::Synthetic,
                turns: (0..len)
                    .map(|i| {
                        let usr = if i + 1 == len { String::new() } else { format!("user {n} {i}") };
                        Turn::new(&format!("prompt {n} {i} ?"), &usr, 0.9)
                    })
                    .collect(),
            })
            .collect(),
    )
}

#[test]
fn augmentation_inserts_exactly_thirty_percent() {
    let data = thousand_turns();
    let pairs = bundled_chat_pairs();
    let before = data.clone();
    let total = data.total_turns();
    let aug = augment_with_chat(&data, &pairs, 0.30, 9).unwrap();
    assert_eq!(data, before);
    let expected = (0.30 * total as f64).round() as usize;
    assert_eq!(aug.injections, expected);
    let mut inserted = 0;
    for copy in &aug.copies.dialogs {
        assert!(copy.id.contains("-aug"));
        let orig_id = copy.id.split("-aug").next().unwrap();
        let orig = data.dialogs.iter().find(|d| d.id == orig_id).unwrap();
        inserted += count_injections(orig, copy, &pairs);
    }
    assert_eq!(inserted, expected);
    assert_eq!(inserted, 300);
    let plus = aug.training_set(&data);
    assert_eq!(plus.len(), data.len() + aug.copies.len());
    plus.validate().unwrap();
}

#[test]
fn augmented_copies_still_index() {
    let data = corpus(50, 8);
    let aug = augment_with_chat(&data, &bundled_chat_pairs(), 0.3, 1).unwrap();
    let ix = EntityIndexer::default();
    for d in &aug.copies.dialogs {
        index_dialog(d, &ix).unwrap();
    }
}

#[test]
fn chat_pairs_mention_no_entities() {
    let ix = EntityIndexer::default();
    for p in bundled_chat_pairs() {
        for text in [&p.query, &p.response] {
            let toks = sied::entity::split_tokens(text);
            assert!(ix.recognizer().recognize(&toks).is_empty(), "{text}");
        }
    }
}

#[test]
fn indexing_shrinks_system_vocabulary() {
    let data = corpus(300, 12);
    let ei = build_vocab(&views(&data, false), Side::System, 1);
    let raw = build_vocab(&views(&data, true), Side::System, 1);
    assert!(ei.num_words() < raw.num_words(), "{} vs {}", ei.num_words(), raw.num_words());
}

#[test]
fn chat_augmentation_grows_user_vocabulary() {
    let data = corpus(300, 12);
    let aug = augment_with_chat(&data, &bundled_chat_pairs(), 0.3, 2).unwrap();
    let task = build_vocab(&views(&data, false), Side::User, 1);
    let plus = build_vocab(&views(&aug.training_set(&data), false), Side::User, 1);
    assert!(plus.num_words() > task.num_words());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_is_a_partition(n in 1usize..60, seed in 0u64..1000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (a, b) = (a * (1.0 - 1e-9), b * (1.0 - a));
        let data = tiny_dataset(&vec![2; n]);
        let s = split(&data, [a, b, 1.0 - a - b], seed).unwrap();
        let ids: Vec<&str> = s.train.dialogs.iter().chain(&s.dev.dialogs).chain(&s.test.dialogs).map(|d| d.id.as_str()).collect();
        let set: HashSet<&str> = ids.iter().copied().collect();
        prop_assert_eq!(ids.len(), n);
        prop_assert_eq!(set.len(), n);
    }

    #[test]
    fn augmentation_count_is_exact(lens in proptest::collection::vec(2usize..8, 1..12), rate in 0.0f64..0.4, seed in 0u64..100) {
        let data = tiny_dataset(&lens);
        let pairs = bundled_chat_pairs();
        let expected = (rate * data.total_turns() as f64).round() as usize;
        let eligible: usize = lens.iter().map(|l| l - 1).sum();
        prop_assume!(expected <= eligible);
        let aug = augment_with_chat(&data, &pairs, rate, seed).unwrap();
        let mut inserted = 0;
        for copy in &aug.copies.dialogs {
            let orig = data.dialogs.iter().find(|d| copy.id.starts_with(&format!("{}-aug", d.id))).unwrap();
            inserted += count_injections(orig, copy, &pairs);
        }
        prop_assert_eq!(inserted, expected);
        prop_assert_eq!(aug.copies.total_turns(), aug.copies.dialogs.iter().map(|c| {
            data.dialogs.iter().find(|d| c.id.starts_with(&format!("{}-aug", d.id))).unwrap().len()
        }).sum::<usize>() + expected);
    }
}
