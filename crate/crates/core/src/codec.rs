//! Hidden vocabularies and the encoder/decoder between sentences over the
//! observed predicates and sentences over invented ones.
//!
//! Decoding replaces each hidden atom by its definition body. Encoding is the
//! inverse search: choose hidden atoms whose unfoldings together give back
//! exactly the input sentence, using as few atoms as possible.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::bias::LanguageBias;
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::logic::{
    canonicalize, for_each_homomorphism, parse_definition_line, reduce_core, unfold_sentence, Atom,
    Definition, Sentence, Substitution, Symbol, Term,
};
use crate::miner::Theory;

/// Hidden predicates and their definitions, one definition per predicate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DefinitionSet {
    definitions: Vec<Definition>,
}

impl DefinitionSet {
    pub fn new(definitions: Vec<Definition>) -> Result<Self> {
        let mut set = DefinitionSet::default();
        for d in definitions {
            set.push(d)?;
        }
        Ok(set)
    }

    /// Skips the distinct-body check; flattening several layers can map two
    /// different definitions onto the same base body.
    pub(crate) fn with_shared_bodies(definitions: Vec<Definition>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for d in &definitions {
            if !names.insert(d.predicate().clone()) {
                return Err(Error::InvalidDefinition(format!(
                    "`{}` is defined twice",
                    d.predicate()
                )));
            }
        }
        Ok(DefinitionSet { definitions })
    }

    pub fn push(&mut self, definition: Definition) -> Result<()> {
        if self.get(definition.predicate()).is_some() {
            return Err(Error::InvalidDefinition(format!(
                "`{}` is defined twice",
                definition.predicate()
            )));
        }
        if let Some(other) = self
            .definitions
            .iter()
            .find(|d| d.body() == definition.body())
        {
            return Err(Error::InvalidDefinition(format!(
                "`{}` and `{}` have the same body",
                other.predicate(),
                definition.predicate()
            )));
        }
        self.definitions.push(definition);
        Ok(())
    }

    pub fn get(&self, predicate: &str) -> Option<&Definition> {
        self.definitions
            .iter()
            .find(|d| d.predicate().as_str() == predicate)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Definition> {
        self.definitions.iter()
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }

    pub fn predicates(&self) -> BTreeMap<Symbol, usize> {
        self.definitions
            .iter()
            .map(|d| (d.predicate().clone(), d.arity()))
            .collect()
    }

    pub fn names(&self) -> BTreeSet<Symbol> {
        self.definitions
            .iter()
            .map(|d| d.predicate().clone())
            .collect()
    }

    /// Total number of body atoms.
    pub fn body_cost(&self) -> usize {
        self.definitions.iter().map(|d| d.body().cost()).sum()
    }

    /// Hidden predicate names must not reuse observed ones.
    pub fn check_disjoint(&self, observed: &BTreeMap<Symbol, usize>) -> Result<()> {
        match self
            .definitions
            .iter()
            .find(|d| observed.contains_key(d.predicate()))
        {
            Some(d) => Err(Error::InvalidDefinition(format!(
                "hidden predicate `{}` clashes with an observed predicate",
                d.predicate()
            ))),
            None => Ok(()),
        }
    }

    pub(crate) fn lookup(&self) -> BTreeMap<Symbol, &Definition> {
        self.definitions
            .iter()
            .map(|d| (d.predicate().clone(), d))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for d in &self.definitions {
            let _ = writeln!(out, "{d}");
        }
        out
    }
}

/// One `h(X,Y) <=> body.` per line; `%` and `#` lines are comments.
pub fn parse_definitions(text: &str) -> Result<DefinitionSet> {
    let mut defs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.trim();
        if content.is_empty() || content.starts_with('%') || content.starts_with('#') {
            continue;
        }
        defs.push(parse_definition_line(content, idx + 1)?);
    }
    DefinitionSet::new(defs)
}

/// Truth assignments of hidden predicates over the source constants.
#[derive(Clone, Debug, Default)]
pub struct HiddenKb(KnowledgeBase);

impl HiddenKb {
    pub fn kb(&self) -> &KnowledgeBase {
        &self.0
    }

    pub fn into_kb(self) -> KnowledgeBase {
        self.0
    }

    pub fn fact_count(&self) -> usize {
        self.0.fact_count()
    }
}

/// `h(c̄)` holds iff the body of `h`, with the head bound to `c̄`, is
/// contained in `kb`.
pub fn materialize_hidden_kb(kb: &KnowledgeBase, defs: &DefinitionSet) -> Result<HiddenKb> {
    let mut hidden = KnowledgeBase::new();
    for c in kb.constants() {
        hidden.declare_constant(c);
    }
    for d in defs.iter() {
        for (p, arity) in d.body().predicates() {
            if kb.arity(&p) != Some(arity) {
                return Err(Error::VocabularyMismatch(p.to_string()));
            }
        }
        hidden.declare_predicate(d.predicate().clone(), d.arity())?;
        for tuple in kb.all_matches(d.body(), d.head()) {
            let fact = Atom::new(
                d.predicate().clone(),
                tuple.into_iter().map(Term::Const).collect(),
            );
            hidden.insert_fact(&fact)?;
        }
    }
    Ok(HiddenKb(hidden))
}

struct Embedding {
    atom: Atom,
    covers: u64,
}

/// Smallest hidden sentence conforming to `hidden_bias` whose unfolding is
/// exactly `s`; among equally small ones the least canonical form wins.
/// `None` when no such sentence exists.
pub fn encode_sentence(
    s: &Sentence,
    defs: &DefinitionSet,
    hidden_bias: &LanguageBias,
) -> Option<Sentence> {
    let s = canonicalize(s);
    let n = s.len();
    if n == 0 || n > 63 {
        return None;
    }
    let full: u64 = (1u64 << n) - 1;

    let mut embeddings: Vec<Embedding> = Vec::new();
    for d in defs.iter() {
        for_each_homomorphism::<()>(d.body().atoms(), &s, &Substitution::new(), |theta| {
            let atom = Atom::new(
                d.predicate().clone(),
                d.head()
                    .iter()
                    .map(|v| theta.apply_term(&Term::Var(*v)))
                    .collect(),
            );
            let covers = d
                .body()
                .atoms()
                .iter()
                .map(|a| {
                    let img = theta.apply_atom(a);
                    let pos = s.atoms().binary_search(&img).expect("image lies in target");
                    1u64 << pos
                })
                .fold(0, |m, b| m | b);
            embeddings.push(Embedding { atom, covers });
            ControlFlow::Continue(())
        });
    }
    embeddings.sort_by(|a, b| (&a.atom, a.covers).cmp(&(&b.atom, b.covers)));
    embeddings.dedup_by(|a, b| a.atom == b.atom && a.covers == b.covers);

    let mut memo: HashMap<u64, usize> = HashMap::new();
    let least = min_cover(full, &embeddings, &mut memo);
    if least == usize::MAX {
        return None;
    }
    let lookup = defs.lookup();
    let most = hidden_bias.max_len.min(embeddings.len());
    for k in least.max(1)..=most {
        let mut best: Option<Sentence> = None;
        let mut chosen = Vec::with_capacity(k);
        choose(
            0,
            full,
            k,
            &embeddings,
            &mut memo,
            &mut chosen,
            &mut |picked| {
                let atoms: Vec<Atom> = picked.iter().map(|i| embeddings[*i].atom.clone()).collect();
                let e = Sentence::new(atoms);
                if e.len() != k {
                    return;
                }
                let e = canonicalize(&e);
                if best.as_ref().is_some_and(|b| *b <= e) || !hidden_bias.conforms(&e) {
                    return;
                }
                let exact = unfold_sentence(&e, &lookup, true)
                    .map(|u| canonicalize(&u) == s)
                    .unwrap_or(false);
                if exact {
                    best = Some(e);
                }
            },
        );
        if best.is_some() {
            return best;
        }
    }
    None
}

/// Fewest embeddings whose coverage includes `uncovered`.
fn min_cover(uncovered: u64, embeddings: &[Embedding], memo: &mut HashMap<u64, usize>) -> usize {
    if uncovered == 0 {
        return 0;
    }
    if let Some(v) = memo.get(&uncovered) {
        return *v;
    }
    let low = uncovered & uncovered.wrapping_neg();
    let mut best = usize::MAX;
    for e in embeddings.iter().filter(|e| e.covers & low != 0) {
        let rest = min_cover(uncovered & !e.covers, embeddings, memo);
        if rest != usize::MAX {
            best = best.min(rest + 1);
        }
    }
    memo.insert(uncovered, best);
    best
}

/// All index-ascending `k`-subsets of embeddings that cover `uncovered`.
fn choose(
    from: usize,
    uncovered: u64,
    k: usize,
    embeddings: &[Embedding],
    memo: &mut HashMap<u64, usize>,
    chosen: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if chosen.len() == k {
        if uncovered == 0 {
            emit(chosen);
        }
        return;
    }
    let left = k - chosen.len();
    if min_cover(uncovered, embeddings, memo) > left {
        return;
    }
    for i in from..embeddings.len() {
        if embeddings.len() - i < left {
            break;
        }
        chosen.push(i);
        choose(
            i + 1,
            uncovered & !embeddings[i].covers,
            k,
            embeddings,
            memo,
            chosen,
            emit,
        );
        chosen.pop();
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TheoryEncoding {
    pub encoded: BTreeMap<Sentence, Sentence>,
    pub uncovered: BTreeSet<Sentence>,
}

impl TheoryEncoding {
    /// Atom count of the hidden sentences only.
    pub fn hidden_cost(&self) -> usize {
        self.encoded.values().map(Sentence::cost).sum()
    }

    /// Hidden sentences plus uncovered sentences stored verbatim.
    pub fn stored_cost(&self) -> usize {
        self.hidden_cost() + self.uncovered.iter().map(Sentence::cost).sum::<usize>()
    }

    pub fn hidden_sentences(&self) -> BTreeSet<Sentence> {
        self.encoded.values().cloned().collect()
    }
}

pub fn encode_theory(
    theory: &Theory,
    defs: &DefinitionSet,
    hidden_bias: &LanguageBias,
) -> TheoryEncoding {
    let results: Vec<(Sentence, Option<Sentence>)> = theory
        .sentences()
        .par_iter()
        .map(|s| (s.clone(), encode_sentence(s, defs, hidden_bias)))
        .collect();
    let mut out = TheoryEncoding::default();
    for (s, e) in results {
        match e {
            Some(e) => {
                out.encoded.insert(s, e);
            }
            None => {
                out.uncovered.insert(s);
            }
        }
    }
    out
}

/// Unfolds every hidden atom, then canonicalizes and reduces to the core.
pub fn decode_sentence(e: &Sentence, defs: &DefinitionSet) -> Result<Sentence> {
    let unfolded = unfold_sentence(e, &defs.lookup(), true)?;
    Ok(reduce_core(&unfolded))
}

pub fn decode_theory<'a>(
    hidden: impl IntoIterator<Item = &'a Sentence>,
    defs: &DefinitionSet,
) -> Result<Theory> {
    let decoded: Vec<Sentence> = hidden
        .into_iter()
        .map(|e| decode_sentence(e, defs))
        .collect::<Result<_>>()?;
    Ok(Theory::from_sentences(decoded))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::kb::parse_kb;
    use crate::logic::parse_sentence;
    use crate::miner::extract_theory;
    use crate::miner::tests::{example_one_theory_listing, SMOKERS};

    pub(crate) const SMOKERS_DEFS: &str = "\
h1(X) <=> smokes(X), cancer(X).
h2(X,Y) <=> smokes(X), friends(X,Y).
h3(X,Y) <=> cancer(X), friends(X,Y).
h4(X,Y) <=> smokes(Y), friends(X,Y).
";

    pub(crate) fn hidden_bias() -> LanguageBias {
        LanguageBias::lengths(1, 2)
    }

    fn s(text: &str) -> Sentence {
        canonicalize(&parse_sentence(text).unwrap())
    }

    fn defs() -> DefinitionSet {
        parse_definitions(SMOKERS_DEFS).unwrap()
    }

    fn smokers_theory() -> Theory {
        Theory::from_sentences(example_one_theory_listing())
    }

    #[test]
    fn definition_file_round_trip() {
        let d = defs();
        assert_eq!(d.len(), 4);
        assert_eq!(d.body_cost(), 8);
        assert_eq!(parse_definitions(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn set_invariants() {
        let mut d = defs();
        let dup_name =
            crate::logic::parse_definition("h1(X) <=> cancer(X), smokes(X), friends(X,Y).")
                .unwrap();
        assert!(d.push(dup_name).is_err());
        let dup_body = crate::logic::parse_definition("g(A) <=> cancer(A), smokes(A).").unwrap();
        assert!(d.push(dup_body).is_err());
        let kb = parse_kb(SMOKERS).unwrap();
        assert!(d.check_disjoint(&kb.predicates()).is_ok());
        let clash = DefinitionSet::new(vec![crate::logic::parse_definition(
            "smokes(X) <=> cancer(X), friends(X,Y).",
        )
        .unwrap()])
        .unwrap();
        assert!(clash.check_disjoint(&kb.predicates()).is_err());
    }

    #[test]
    fn materializes_smokers() {
        let kb = parse_kb(SMOKERS).unwrap();
        let hidden = materialize_hidden_kb(&kb, &defs()).unwrap();
        let facts: Vec<String> = hidden.kb().facts().iter().map(|f| f.to_string()).collect();
        assert_eq!(
            facts,
            vec![
                "h1(john)",
                "h2(john,jane)",
                "h3(john,jane)",
                "h4(john,jane)"
            ]
        );
        assert_eq!(hidden.kb().constants(), kb.constants());
    }

    #[test]
    fn materialize_edge_cases() {
        let empty =
            materialize_hidden_kb(&KnowledgeBase::new(), &DefinitionSet::default()).unwrap();
        assert_eq!(empty.fact_count(), 0);
        let kb = parse_kb("smokes(jane).\ncancer(john).").unwrap();
        let d = parse_definitions("h(X) <=> smokes(X), cancer(X).").unwrap();
        let hidden = materialize_hidden_kb(&kb, &d).unwrap();
        assert_eq!(hidden.fact_count(), 0);
        assert_eq!(hidden.kb().arity("h"), Some(1));
        let missing = parse_kb("smokes(jane).").unwrap();
        assert!(matches!(
            materialize_hidden_kb(&missing, &d),
            Err(Error::VocabularyMismatch(p)) if p == "cancer"
        ));
    }

    #[test]
    fn hidden_theory_of_smokers() {
        let kb = parse_kb(SMOKERS).unwrap();
        let hidden = materialize_hidden_kb(&kb, &defs()).unwrap();
        let bias = hidden_bias().with_max_vars(2);
        let t = extract_theory(hidden.kb(), &bias, &defs().names()).unwrap();
        let expected: BTreeSet<Sentence> = [
            "h1(X)",
            "h2(X,Y)",
            "h3(X,Y)",
            "h4(X,Y)",
            "h1(X), h2(X,Y)",
            "h1(X), h3(X,Y)",
            "h1(X), h4(X,Y)",
            "h2(X,Y), h3(X,Y)",
            "h2(X,Y), h4(X,Y)",
            "h3(X,Y), h4(X,Y)",
        ]
        .iter()
        .map(|t| s(t))
        .collect();
        assert_eq!(t.sentences(), &expected);
    }

    #[test]
    fn encode_examples() {
        let d = defs();
        let b = hidden_bias();
        assert_eq!(
            encode_sentence(&s("smokes(X), cancer(X)"), &d, &b),
            Some(s("h1(X)"))
        );
        assert_eq!(
            encode_sentence(&s("smokes(X), friends(X,Y), smokes(Y)"), &d, &b),
            Some(s("h2(X,Y), h4(X,Y)"))
        );
        assert_eq!(encode_sentence(&s("cancer(X)"), &d, &b), None);
        // three exact covers of size two; the least canonical one is chosen
        assert_eq!(
            encode_sentence(&s("smokes(X), cancer(X), friends(X,Y)"), &d, &b),
            Some(s("h1(X), h2(X,Y)"))
        );
    }

    #[test]
    fn encode_respects_hidden_bias() {
        let d = defs();
        let one = LanguageBias::lengths(1, 1);
        assert_eq!(
            encode_sentence(&s("smokes(X), friends(X,Y), smokes(Y)"), &d, &one),
            None
        );
    }

    #[test]
    fn encode_never_adds_atoms() {
        // h2 would cover smokes(X), friends(X,Y) but needs smokes(X) present
        let d = defs();
        assert_eq!(
            encode_sentence(&s("friends(X,Y), cancer(X)"), &d, &hidden_bias()),
            Some(s("h3(X,Y)"))
        );
        assert_eq!(
            encode_sentence(&s("friends(X,Y)"), &d, &hidden_bias()),
            None
        );
    }

    #[test]
    fn encode_with_projected_definition() {
        let d = parse_definitions("g(X) <=> friends(X,Y), smokes(Y).").unwrap();
        let b = LanguageBias::lengths(1, 2);
        assert_eq!(
            encode_sentence(&s("friends(X,Y), smokes(Y)"), &d, &b),
            Some(s("g(X)"))
        );
        // Y is shared with cancer(Y), so hiding it would lose the link
        assert_eq!(
            encode_sentence(&s("friends(X,Y), smokes(Y), cancer(Y)"), &d, &b),
            None
        );
    }

    #[test]
    fn theory_encoding_smokers() {
        let enc = encode_theory(&smokers_theory(), &defs(), &hidden_bias());
        assert_eq!(enc.encoded.len(), 7);
        assert!(enc.uncovered.is_empty());
        assert_eq!(enc.hidden_cost(), 10);
        let decoded = decode_theory(enc.encoded.values(), &defs()).unwrap();
        assert_eq!(decoded.sentences(), smokers_theory().sentences());
    }

    #[test]
    fn theory_encoding_edges() {
        let enc = encode_theory(&Theory::default(), &defs(), &hidden_bias());
        assert!(enc.encoded.is_empty() && enc.uncovered.is_empty());
        let t =
            Theory::from_sentences([s("cancer(X), cancer(Y)"), s("friends(X,Y), friends(Y,X)")]);
        let enc = encode_theory(&t, &defs(), &hidden_bias());
        assert!(enc.encoded.is_empty());
        assert_eq!(enc.uncovered.len(), 2);
    }

    #[test]
    fn decode_examples() {
        let d = defs();
        assert_eq!(
            decode_sentence(&s("h1(X)"), &d).unwrap(),
            s("smokes(X), cancer(X)")
        );
        assert_eq!(
            decode_sentence(&s("h2(X,Y), h1(X)"), &d).unwrap(),
            s("smokes(X), cancer(X), friends(X,Y)")
        );
        assert_eq!(
            decode_sentence(&s("h3(X,Y), h4(X,Y)"), &d).unwrap(),
            s("cancer(X), friends(X,Y), smokes(Y)")
        );
        assert_eq!(
            decode_sentence(&s("h2(X,X)"), &d).unwrap(),
            s("smokes(X), friends(X,X)")
        );
        assert!(matches!(
            decode_sentence(&s("h9(X)"), &d),
            Err(Error::UnknownHiddenPredicate(p)) if p == "h9"
        ));
    }

    #[test]
    fn decode_theory_edges() {
        let d = defs();
        assert!(decode_theory(std::iter::empty(), &d).unwrap().is_empty());
        let hidden = [s("h1(X)"), parse_sentence("h1(Y)").unwrap()];
        assert_eq!(decode_theory(hidden.iter(), &d).unwrap().len(), 1);
    }
}
