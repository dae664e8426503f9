//! Level-wise extraction of every bias-conforming sentence that is true in a
//! knowledge base.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bias::LanguageBias;
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::logic::{canonicalize, parse_sentence_line, Atom, Sentence, Symbol, Term};

/// A set of canonical sentences together with the predicate vocabulary they
/// are built over.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Theory {
    sentences: BTreeSet<Sentence>,
    vocabulary: BTreeMap<Symbol, usize>,
}

impl Theory {
    pub fn new(vocabulary: BTreeMap<Symbol, usize>) -> Self {
        Theory {
            sentences: BTreeSet::new(),
            vocabulary,
        }
    }

    /// Canonicalizes every sentence; the vocabulary is read off the atoms.
    pub fn from_sentences(sentences: impl IntoIterator<Item = Sentence>) -> Self {
        let sentences: BTreeSet<Sentence> =
            sentences.into_iter().map(|s| canonicalize(&s)).collect();
        let vocabulary = sentences.iter().flat_map(|s| s.predicates()).collect();
        Theory {
            sentences,
            vocabulary,
        }
    }

    pub fn insert(&mut self, s: Sentence) -> bool {
        for (p, a) in s.predicates() {
            self.vocabulary.entry(p).or_insert(a);
        }
        self.sentences.insert(canonicalize(&s))
    }

    pub fn sentences(&self) -> &BTreeSet<Sentence> {
        &self.sentences
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sentence> {
        self.sentences.iter()
    }

    pub fn vocabulary(&self) -> &BTreeMap<Symbol, usize> {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn contains(&self, s: &Sentence) -> bool {
        self.sentences.contains(s)
    }

    /// Total atom count over all sentences.
    pub fn cost(&self) -> usize {
        self.sentences.iter().map(Sentence::cost).sum()
    }

    /// Serialized sentences in lexicographic order.
    pub fn lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self.sentences.iter().map(|s| s.to_string()).collect();
        lines.sort();
        lines
    }

    /// Theory-file text with `#` header lines.
    pub fn to_text(&self, bias: Option<&LanguageBias>) -> String {
        let mut out = String::new();
        let vocab: Vec<String> = self
            .vocabulary
            .iter()
            .map(|(p, a)| format!("{p}/{a}"))
            .collect();
        let _ = writeln!(out, "# vocab: {}", vocab.join(", "));
        if let Some(b) = bias {
            let _ = writeln!(out, "# bias: {}", b.summary());
        }
        for line in self.lines() {
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Reads a theory file: one sentence per line, `#` and `%` lines ignored.
/// Sentences are returned as written (not canonicalized), in file order.
pub fn parse_theory(text: &str) -> Result<Vec<Sentence>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') || content.starts_with('%') {
            continue;
        }
        out.push(parse_sentence_line(content, idx + 1)?);
    }
    Ok(out)
}

pub(crate) fn resolve_vocabulary(
    kb: &KnowledgeBase,
    vocab: &BTreeSet<Symbol>,
) -> Result<BTreeMap<Symbol, usize>> {
    vocab
        .iter()
        .map(|p| {
            kb.arity(p)
                .map(|a| (p.clone(), a))
                .ok_or_else(|| Error::VocabularyMismatch(p.to_string()))
        })
        .collect()
}

pub(crate) fn check_finite(bias: &LanguageBias) -> Result<()> {
    bias.validate()?;
    if bias.max_len > 64 {
        return Err(Error::InvalidBias(format!(
            "max_len {} is too large to enumerate",
            bias.max_len
        )));
    }
    Ok(())
}

/// `{ s canonical : bias.conforms(s) && kb.satisfies(s) }` over `vocab`.
///
/// Sentences grow one atom per level; unsatisfiable extensions are dropped
/// since no superset of them can be satisfied. Connectedness is enforced
/// during growth (every connected sentence has a connected sub-conjunction
/// one atom shorter), while the core condition is only checked at the end
/// because a non-core sentence can grow into a core one.
pub fn extract_theory(
    kb: &KnowledgeBase,
    bias: &LanguageBias,
    vocab: &BTreeSet<Symbol>,
) -> Result<Theory> {
    check_finite(bias)?;
    let vocabulary = resolve_vocabulary(kb, vocab)?;
    let predicates: Vec<(Symbol, usize)> =
        vocabulary.iter().map(|(p, a)| (p.clone(), *a)).collect();
    let constants: Vec<Symbol> = if bias.variables_only {
        Vec::new()
    } else {
        kb.constants().into_iter().collect()
    };

    let mut theory = Theory::new(vocabulary);
    let mut level = vec![Sentence::empty()];
    for _ in 0..bias.max_len {
        let grown: Vec<Sentence> = level
            .par_iter()
            .flat_map_iter(|s| {
                let mut out = Vec::new();
                for (p, arity) in &predicates {
                    for atom in extension_atoms(s, p, *arity, &constants, bias) {
                        if s.contains(&atom) {
                            continue;
                        }
                        let t = s.with_atom(atom);
                        if kb.satisfies(&t) {
                            out.push(canonicalize(&t));
                        }
                    }
                }
                out
            })
            .collect();
        let next: BTreeSet<Sentence> = grown.into_iter().collect();
        if next.is_empty() {
            break;
        }
        for s in &next {
            if bias.conforms(s) {
                theory.sentences.insert(s.clone());
            }
        }
        level = next.into_iter().collect();
    }
    Ok(theory)
}

/// Every atom over `predicate` that may extend canonical `s` under `bias`:
/// arguments are existing variables, new variables numbered in order of
/// appearance, or constants when the bias admits them.
fn extension_atoms(
    s: &Sentence,
    predicate: &Symbol,
    arity: usize,
    constants: &[Symbol],
    bias: &LanguageBias,
) -> Vec<Atom> {
    let existing = s.variable_count() as u32;
    let var_cap = bias.max_vars.map_or(u32::MAX, |m| m as u32);
    let need_shared = bias.connected && !s.is_empty();
    let mut out = Vec::new();
    let mut terms = Vec::with_capacity(arity);
    fill(
        &mut terms,
        arity,
        existing,
        0,
        var_cap,
        constants,
        need_shared,
        predicate,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn fill(
    terms: &mut Vec<Term>,
    arity: usize,
    existing: u32,
    introduced: u32,
    var_cap: u32,
    constants: &[Symbol],
    need_shared: bool,
    predicate: &Symbol,
    out: &mut Vec<Atom>,
) {
    if terms.len() == arity {
        let shares = terms
            .iter()
            .any(|t| matches!(t, Term::Var(v) if *v < existing));
        if !need_shared || shares {
            out.push(Atom::new(predicate.clone(), terms.clone()));
        }
        return;
    }
    for v in 0..existing + introduced {
        terms.push(Term::Var(v));
        fill(
            terms,
            arity,
            existing,
            introduced,
            var_cap,
            constants,
            need_shared,
            predicate,
            out,
        );
        terms.pop();
    }
    if existing + introduced < var_cap {
        terms.push(Term::Var(existing + introduced));
        fill(
            terms,
            arity,
            existing,
            introduced + 1,
            var_cap,
            constants,
            need_shared,
            predicate,
            out,
        );
        terms.pop();
    }
    for c in constants {
        terms.push(Term::Const(c.clone()));
        fill(
            terms,
            arity,
            existing,
            introduced,
            var_cap,
            constants,
            need_shared,
            predicate,
            out,
        );
        terms.pop();
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::kb::parse_kb;
    use crate::logic::parse_sentence;

    pub(crate) const SMOKERS: &str =
        "smokes(john).\ncancer(john).\nfriends(john,jane).\nsmokes(jane).";

    pub(crate) fn example_one_theory_listing() -> Vec<Sentence> {
        [
            "smokes(X), cancer(X)",
            "smokes(X), friends(X,Y)",
            "smokes(Y), friends(X,Y)",
            "cancer(X), friends(X,Y)",
            "smokes(X), friends(X,Y), smokes(Y)",
            "cancer(X), friends(X,Y), smokes(Y)",
            "smokes(X), cancer(X), friends(X,Y)",
        ]
        .iter()
        .map(|t| canonicalize(&parse_sentence(t).unwrap()))
        .collect()
    }

    #[test]
    fn smokers_theory() {
        let kb = parse_kb(SMOKERS).unwrap();
        let t = extract_theory(&kb, &LanguageBias::lengths(2, 3), &kb.predicate_names()).unwrap();
        let expected: BTreeSet<Sentence> = example_one_theory_listing().into_iter().collect();
        assert_eq!(t.sentences(), &expected);
        // identical with a two-variable cap
        let capped = extract_theory(
            &kb,
            &LanguageBias::lengths(2, 3).with_max_vars(2),
            &kb.predicate_names(),
        )
        .unwrap();
        assert_eq!(capped.sentences(), &expected);
        assert_eq!(t.cost(), 17);
    }

    #[test]
    fn empty_kb_gives_empty_theory() {
        let kb = KnowledgeBase::new();
        let t = extract_theory(&kb, &LanguageBias::default(), &BTreeSet::new()).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn unknown_vocabulary() {
        let kb = parse_kb(SMOKERS).unwrap();
        let vocab: BTreeSet<Symbol> = [Symbol::new("likes")].into();
        assert!(matches!(
            extract_theory(&kb, &LanguageBias::default(), &vocab),
            Err(Error::VocabularyMismatch(p)) if p == "likes"
        ));
    }

    #[test]
    fn constants_when_allowed() {
        let kb = parse_kb("p(a).").unwrap();
        let bias = LanguageBias {
            variables_only: false,
            ..LanguageBias::lengths(1, 1)
        };
        let t = extract_theory(&kb, &bias, &kb.predicate_names()).unwrap();
        assert_eq!(t.lines(), vec!["p(X)".to_string(), "p(a)".to_string()]);
    }

    #[test]
    fn core_reached_through_non_core_prefix() {
        // friends(X,Y), friends(X,Z) is not a core but grows into one
        let kb = parse_kb("friends(a,b).\nfriends(a,c).\nsmokes(b).\ncancer(c).").unwrap();
        let t = extract_theory(&kb, &LanguageBias::lengths(4, 4), &kb.predicate_names()).unwrap();
        let target = canonicalize(
            &parse_sentence("friends(X,Y), friends(X,Z), smokes(Y), cancer(Z)").unwrap(),
        );
        assert!(t.contains(&target));
    }

    #[test]
    fn every_sub_conjunction_is_satisfiable() {
        let kb = parse_kb(SMOKERS).unwrap();
        let t = extract_theory(&kb, &LanguageBias::lengths(1, 3), &kb.predicate_names()).unwrap();
        for s in t.iter() {
            for mask in 1..(1u64 << s.len()) {
                assert!(kb.satisfies(&s.select(mask)));
            }
        }
    }

    #[test]
    fn theory_text_round_trip() {
        let kb = parse_kb(SMOKERS).unwrap();
        let bias = LanguageBias::lengths(2, 3);
        let t = extract_theory(&kb, &bias, &kb.predicate_names()).unwrap();
        let text = t.to_text(Some(&bias));
        assert!(text.starts_with("# vocab: cancer/1, friends/2, smokes/1\n"));
        let back = Theory::from_sentences(parse_theory(&text).unwrap());
        assert_eq!(back.sentences(), t.sentences());
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
    }
}
