use proptest::prelude::*;
use sied::corpus::{generate_synthetic_corpus, split, DialogAct, SynthConfig};
use sied::entity::{split_tokens, EntityIndexer};
use sied::eval::{
    bleu4, labeled_system_turns, score_act_sets, score_all, score_dialog_acts, score_kb, score_slots, DaTagger,
    EvalReport, LabeledUtterance, Metric, Predictions, PrfScore, TaggerConfig, BLEU_EPSILON,
};

fn toks(s: &str) -> Vec<String> {
    split_tokens(s)
}

fn corpus(xs: &[&str]) -> Vec<Vec<String>> {
    xs.iter().map(|s| toks(s)).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

#[test]
fn prf_from_counts() {
    assert_eq!(PrfScore::from_counts(0, 0, 0), PrfScore::default());
    let s = PrfScore::from_counts(3, 4, 6);
    assert!(close(s.precision, 0.75) && close(s.recall, 0.5) && close(s.f1, 0.6));
}

#[test]
fn act_set_fixture_counts_by_hand() {
    use DialogAct::*;
    let gold = vec![
        vec![RequestDeparture, ImplicitConfirm],
        vec![RequestArrival, ImplicitConfirm],
        vec![KbQuery, InformResult],
    ];
    // One false positive (Goodbye) and one false negative (InformResult).
    let pred = vec![vec![RequestDeparture, ImplicitConfirm], vec![RequestArrival, ImplicitConfirm, Goodbye], vec![KbQuery]];
    let s = score_act_sets(&pred, &gold).unwrap();
    assert!(close(s.precision, 5.0 / 6.0) && close(s.recall, 5.0 / 6.0));
    assert_eq!(score_act_sets(&gold, &gold).unwrap(), PrfScore { precision: 1.0, recall: 1.0, f1: 1.0 });
    let disjoint = vec![vec![Welcome], vec![Goodbye], vec![Restart]];
    assert_eq!(score_act_sets(&disjoint, &gold).unwrap().f1, 0.0);
    assert!(score_act_sets(&pred[..2], &gold).is_err());
}

#[test]
fn slot_scoring() {
    let gold = corpus(&["from [LOCATION-0] to [LOCATION-1] ."]);
    let s = score_slots(&corpus(&["from [LOCATION-0] ."]), &gold).unwrap();
    assert_eq!((s.precision, s.recall), (1.0, 0.5));
    assert_eq!(score_slots(&gold, &gold).unwrap().f1, 1.0);
    // Vacuous pairs add nothing.
    let with_empty = corpus(&["from [LOCATION-0] .", "hello ."]);
    let gold2 = corpus(&["from [LOCATION-0] to [LOCATION-1] .", "hi ."]);
    assert_eq!(score_slots(&with_empty, &gold2).unwrap(), s);
    // Bag semantics: a repeated slot matches once per gold occurrence.
    let rep = score_slots(&corpus(&["[LOCATION-0] [LOCATION-0]"]), &corpus(&["[LOCATION-0]"])).unwrap();
    assert_eq!((rep.precision, rep.recall), (0.5, 1.0));
}

#[test]
fn kb_scoring_two_dialog_fixture() {
    let gold = corpus(&[
        "[kb-search] [LOCATION-0] [LOCATION-1] [HOUR-0] [MINUTE-0] [AMPM-0] . bye",
        "where to ?",
        "[kb-search] [LOCATION-1] [LOCATION-0] [HOUR-0] [AMPM-0] .",
    ]);
    let pred = corpus(&[
        "[kb-search] [LOCATION-0] [LOCATION-1] [HOUR-0] [MINUTE-0] [AMPM-0] . bye",
        "where to ?",
        "[kb-search] [LOCATION-0] [LOCATION-0] [HOUR-0] [AMPM-0] .",
    ]);
    let s = score_kb(&pred, &gold).unwrap();
    assert_eq!((s.precision, s.recall), (0.5, 0.5));
    assert_eq!(score_kb(&gold, &gold).unwrap().f1, 1.0);
    let none = corpus(&["a", "b", "c"]);
    let s = score_kb(&none, &gold).unwrap();
    assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
}

#[test]
fn bleu_degenerate_candidate() {
    let b = bleu4(&corpus(&["the the the the"]), &corpus(&["the cat sat"])).unwrap();
    let e = BLEU_EPSILON;
    let oracle = (0.25 * (e / 3.0) * (e / 2.0) * e).powf(0.25);
    assert!((b - oracle).abs() <= 1e-9 * oracle.max(1e-300), "{b} vs {oracle}");
}

#[test]
fn bleu_two_sentence_fixture_by_hand() {
    let cand = corpus(&["the cat sat on the mat", "a dog barks"]);
    let refs = corpus(&["the cat sat on the red mat", "a dog barks loudly today"]);
    // p1 = 9/9, p2 = 6/7, p3 = 4/5, p4 = 2/3; c = 9, r = 12.
    let oracle = (1.0f64 - 12.0 / 9.0).exp() * (1.0f64 * (6.0 / 7.0) * (4.0 / 5.0) * (2.0 / 3.0)).powf(0.25);
    assert!(close(bleu4(&cand, &refs).unwrap(), oracle));
    assert!(close(bleu4(&cand, &cand).unwrap(), 1.0));
    assert!(bleu4(&[], &[]).is_err());
    assert!(bleu4(&cand, &refs[..1]).is_err());
}

fn tagger_data() -> (Vec<LabeledUtterance>, Vec<LabeledUtterance>) {
    let data = generate_synthetic_corpus(&SynthConfig { n_dialogs: 600, ..SynthConfig::default() }, 21).unwrap();
    let s = split(&data, [0.8, 0.0, 0.2], 3).unwrap();
    let ix = EntityIndexer::default();
    (labeled_system_turns(&s.train, &ix).unwrap(), labeled_system_turns(&s.test, &ix).unwrap())
}

#[test]
fn tagger_on_templated_utterances() {
    let (train, test) = tagger_data();
    let tagger = DaTagger::train(&train, &TaggerConfig::default()).unwrap();
    let acc = tagger.label_accuracy(&test);
    assert!(acc >= 0.99, "label accuracy {acc}");
    assert_eq!(tagger.tag(&toks("where do you want to go ?")), vec![DialogAct::RequestArrival]);
    let u = toks("leaving from [LOCATION-0] . where do you want to go ?");
    assert_eq!(tagger.tag(&u), tagger.tag(&u));
    let gold: Vec<Vec<String>> = test.iter().map(|u| u.tokens.clone()).collect();
    assert_eq!(score_dialog_acts(&gold, &gold, &tagger).unwrap().f1, 1.0);
}

#[test]
fn tagger_label_rules() {
    let one: Vec<LabeledUtterance> = (0..6)
        .map(|i| LabeledUtterance { tokens: toks(&format!("goodbye number {i}")), acts: vec![DialogAct::Goodbye] })
        .collect();
    let t = DaTagger::train(&one, &TaggerConfig::default()).unwrap();
    assert_eq!(t.tag(&toks("anything at all")), vec![DialogAct::Goodbye]);
    assert_eq!(t.tag(&[]), vec![DialogAct::Goodbye]);
    assert!(DaTagger::train(&one[..4], &TaggerConfig::default()).is_err());
    assert!(DaTagger::train_labels(&one, &[DialogAct::Goodbye, DialogAct::Welcome], &TaggerConfig::default()).is_err());
}

#[test]
fn report_rows_and_metric_names() {
    let p = Predictions {
        keys: vec![("a".into(), 1)],
        pred: corpus(&["leaving from [LOCATION-0] ."]),
        gold: corpus(&["leaving from [LOCATION-0] ."]),
    };
    let m = score_all(&p, &[Metric::Slot, Metric::Kb, Metric::Bleu], None).unwrap();
    assert_eq!(m.value(Metric::Slot), Some(1.0));
    assert_eq!(m.value(Metric::Kb), Some(0.0));
    assert_eq!(m.da, None);
    assert!(score_all(&p, &[Metric::Da], None).is_err());
    let mut r = EvalReport::default();
    r.push("ei+attn", m);
    assert!(r.to_flat().contains("ei+attn.slot.f1 = 1.000000"));
    assert!(r.to_table().lines().nth(1).unwrap().starts_with("ei+attn\t-\t1.0000\t0.0000\t"));
    assert_eq!("kb".parse::<Metric>().unwrap(), Metric::Kb);
    assert!("rouge".parse::<Metric>().is_err());
}

const WORDS: [&str; 6] = ["the", "bus", "[LOCATION-0]", "[LOCATION-1]", "at", "."];

fn sentence() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(proptest::sample::select(WORDS.to_vec()).prop_map(String::from), 1..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bleu_identity_and_corruption(c in proptest::collection::vec(sentence(), 1..5), at in any::<proptest::sample::Index>()) {
        prop_assert!((bleu4(&c, &c).unwrap() - 1.0).abs() < 1e-12);
        let mut bad = c.clone();
        let s = at.index(bad.len());
        let w = at.index(bad[s].len());
        bad[s][w] = "zzz".into();
        prop_assert!(bleu4(&bad, &c).unwrap() <= 1.0);
    }

    #[test]
    fn scores_bounded_and_permutation_invariant(pairs in proptest::collection::vec((sentence(), sentence()), 1..8), rot in 0usize..8) {
        let (p, g): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let mut rp = p.clone();
        let mut rg = g.clone();
        let k = rot % p.len();
        rp.rotate_left(k);
        rg.rotate_left(k);
        for (a, b) in [(score_slots(&p, &g).unwrap(), score_slots(&rp, &rg).unwrap()), (score_kb(&p, &g).unwrap(), score_kb(&rp, &rg).unwrap())] {
            prop_assert_eq!(a, b);
            for v in [a.precision, a.recall, a.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(a.f1 <= a.precision.max(a.recall) + 1e-12);
            prop_assert!(a.f1 >= a.precision.min(a.recall) - 1e-12);
        }
    }
}
