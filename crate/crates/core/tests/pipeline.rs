use std::collections::BTreeSet;

use proptest::prelude::*;
use recon_core::logic::{canonicalize, parse_sentence, Sentence};
use recon_core::{
    brute_force_theory, decode_theory, encode_sentence, encode_theory, evaluate, extract_theory,
    greedy_invent, parse_definitions, parse_kb, InventionConfig, LanguageBias, ObjectiveParams,
    Theory,
};

const KB: &str = "smokes(john).\ncancer(john).\nfriends(john,jane).\nsmokes(jane).\n";
const DEFS: &str = "\
h1(X) <=> smokes(X), cancer(X).
h2(X,Y) <=> smokes(X), friends(X,Y).
h3(X,Y) <=> cancer(X), friends(X,Y).
h4(X,Y) <=> smokes(Y), friends(X,Y).
";

fn s(text: &str) -> Sentence {
    canonicalize(&parse_sentence(text).unwrap())
}

#[test]
fn mined_theory_survives_the_codec() {
    let kb = parse_kb(KB).unwrap();
    let t = extract_theory(&kb, &LanguageBias::lengths(2, 3), &kb.predicate_names()).unwrap();
    let defs = parse_definitions(DEFS).unwrap();
    let enc = encode_theory(&t, &defs, &LanguageBias::lengths(1, 2));
    assert!(enc.uncovered.is_empty());
    assert_eq!(
        decode_theory(enc.encoded.values(), &defs).unwrap(),
        Theory::from_sentences(t.iter().cloned())
    );
}

#[test]
fn invented_definitions_reconstruct_the_oracle_theory() {
    let kb = parse_kb(KB).unwrap();
    let bias = LanguageBias::lengths(2, 3);
    let t = brute_force_theory(&kb, &bias, &kb.predicate_names(), 1_000_000).unwrap();
    let cfg = InventionConfig {
        def_bias: LanguageBias::lengths(2, 2),
        ..InventionConfig::default()
    };
    let inv = greedy_invent(&kb, &t, &cfg).unwrap();
    let again = evaluate(
        &kb,
        &t,
        &inv.definitions,
        &cfg.hidden_bias,
        &ObjectiveParams::default(),
    )
    .unwrap();
    assert_eq!(again, inv.report);
    assert_eq!(again.loss, 0.0);
}

fn smokers_sentences() -> Vec<Sentence> {
    [
        "smokes(X), cancer(X)",
        "smokes(X), friends(X,Y)",
        "smokes(Y), friends(X,Y)",
        "cancer(X), friends(X,Y)",
        "smokes(X), friends(X,Y), smokes(Y)",
        "cancer(X), friends(X,Y), smokes(Y)",
        "smokes(X), cancer(X), friends(X,Y)",
        "friends(X,Y), friends(Y,X)",
        "smokes(X), friends(X,X)",
    ]
    .iter()
    .map(|t| s(t))
    .collect()
}

proptest! {
    #[test]
    fn encodings_decode_to_their_source(
        pick in prop::sample::subsequence(smokers_sentences(), 1..=9),
        defs_pick in prop::sample::subsequence(vec![0usize, 1, 2, 3], 1..=4),
        max_len in 1usize..=3,
    ) {
        let all = parse_definitions(DEFS).unwrap();
        let text: String = DEFS.lines().enumerate().filter(|(i, _)| defs_pick.contains(i)).map(|(_, l)| format!("{l}\n")).collect();
        let defs = parse_definitions(&text).unwrap();
        prop_assert!(defs.len() <= all.len());
        let bias = LanguageBias::lengths(1, max_len);
        let t = Theory::from_sentences(pick);
        let enc = encode_theory(&t, &defs, &bias);
        let covered: BTreeSet<Sentence> = enc.encoded.keys().cloned().collect();
        prop_assert_eq!(covered.len() + enc.uncovered.len(), t.len());
        for (src, e) in &enc.encoded {
            let again = encode_sentence(src, &defs, &bias);
            prop_assert_eq!(again.as_ref(), Some(e));
            let back = decode_theory([e], &defs).unwrap();
            prop_assert!(back.contains(src));
            prop_assert_eq!(back.len(), 1);
        }
    }
}
