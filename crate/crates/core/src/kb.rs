//! Ground fact store with per-position indices and a backtracking matcher
//! for conjunctive sentences.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::logic::{is_identifier, Atom, Reader, Sentence, Symbol, Term};

#[derive(Clone, Debug, Default)]
struct Relation {
    arity: usize,
    tuples: Vec<Box<[u32]>>,
    present: HashSet<Box<[u32]>>,
    /// position -> constant id -> tuple indices
    by_position: Vec<HashMap<u32, Vec<usize>>>,
}

impl Relation {
    fn new(arity: usize) -> Self {
        Relation {
            arity,
            by_position: vec![HashMap::new(); arity],
            ..Relation::default()
        }
    }

    fn insert(&mut self, tuple: Box<[u32]>) {
        if self.present.contains(&tuple) {
            return;
        }
        let idx = self.tuples.len();
        for (pos, c) in tuple.iter().enumerate() {
            self.by_position[pos].entry(*c).or_default().push(idx);
        }
        self.present.insert(tuple.clone());
        self.tuples.push(tuple);
    }
}

/// A set of ground facts over a predicate and constant vocabulary. Reading a
/// fact that is absent means it is false.
#[derive(Clone, Debug, Default)]
pub struct KnowledgeBase {
    relations: BTreeMap<Symbol, Relation>,
    constant_ids: HashMap<Symbol, u32>,
    constants: Vec<Symbol>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        KnowledgeBase::default()
    }

    pub fn declare_predicate(&mut self, predicate: impl Into<Symbol>, arity: usize) -> Result<()> {
        let predicate = predicate.into();
        match self.relations.get(&predicate) {
            Some(rel) if rel.arity != arity => Err(Error::ArityConflict {
                line: 0,
                predicate: predicate.to_string(),
                declared: rel.arity,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(predicate, Relation::new(arity));
                Ok(())
            }
        }
    }

    pub fn declare_constant(&mut self, constant: impl Into<Symbol>) -> u32 {
        let constant = constant.into();
        if let Some(id) = self.constant_ids.get(&constant) {
            return *id;
        }
        let id = self.constants.len() as u32;
        self.constant_ids.insert(constant.clone(), id);
        self.constants.push(constant);
        id
    }

    pub fn insert_fact(&mut self, fact: &Atom) -> Result<()> {
        if !fact.is_ground() {
            return Err(Error::NonGroundFact {
                line: 0,
                fact: fact.to_string(),
            });
        }
        self.declare_predicate(fact.predicate.clone(), fact.arity())?;
        let tuple: Box<[u32]> = fact
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => self.declare_constant(c.clone()),
                Term::Var(_) => unreachable!("checked ground"),
            })
            .collect();
        self.relations
            .get_mut(&fact.predicate)
            .expect("declared above")
            .insert(tuple);
        Ok(())
    }

    /// Predicate vocabulary with arities.
    pub fn predicates(&self) -> BTreeMap<Symbol, usize> {
        self.relations
            .iter()
            .map(|(p, r)| (p.clone(), r.arity))
            .collect()
    }

    pub fn predicate_names(&self) -> BTreeSet<Symbol> {
        self.relations.keys().cloned().collect()
    }

    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.relations.get(predicate).map(|r| r.arity)
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        self.constants.iter().cloned().collect()
    }

    pub fn fact_count(&self) -> usize {
        self.relations.values().map(|r| r.tuples.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fact_count() == 0
    }

    /// Facts sorted by predicate, then by argument names.
    pub fn facts(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = self
            .relations
            .iter()
            .flat_map(|(p, rel)| {
                rel.tuples.iter().map(move |t| {
                    Atom::new(
                        p.clone(),
                        t.iter()
                            .map(|c| Term::Const(self.constants[*c as usize].clone()))
                            .collect(),
                    )
                })
            })
            .collect();
        out.sort();
        out
    }

    pub fn holds(&self, fact: &Atom) -> bool {
        let Some(rel) = self.relations.get(&fact.predicate) else {
            return false;
        };
        if rel.arity != fact.arity() {
            return false;
        }
        let mut tuple = Vec::with_capacity(fact.arity());
        for t in &fact.terms {
            match t {
                Term::Const(c) => match self.constant_ids.get(c) {
                    Some(id) => tuple.push(*id),
                    None => return false,
                },
                Term::Var(_) => return false,
            }
        }
        rel.present.contains(tuple.as_slice())
    }

    /// True iff some grounding of `s` lies entirely inside the facts.
    pub fn satisfies(&self, s: &Sentence) -> bool {
        let Some(mut m) = Matcher::compile(self, s) else {
            return false;
        };
        m.run(&mut |_| ControlFlow::Break(())).is_some()
    }

    /// Every distinct binding of `projection` over groundings of `s` that lie
    /// inside the facts.
    ///
    /// # Panics
    /// If a projected variable does not occur in `s`.
    pub fn all_matches(&self, s: &Sentence, projection: &[u32]) -> BTreeSet<Vec<Symbol>> {
        let vars = s.variables();
        let slots: Vec<usize> = projection
            .iter()
            .map(|v| {
                vars.iter()
                    .position(|w| w == v)
                    .unwrap_or_else(|| panic!("projected variable {v} not in sentence"))
            })
            .collect();
        let mut out = BTreeSet::new();
        let Some(mut m) = Matcher::compile(self, s) else {
            return out;
        };
        m.run::<()>(&mut |binding| {
            out.insert(
                slots
                    .iter()
                    .map(|i| {
                        self.constants[binding[*i].expect("complete binding") as usize].clone()
                    })
                    .collect(),
            );
            ControlFlow::Continue(())
        });
        out
    }

    /// Fact-file text: `#pred` lines for predicates without facts, `#const`
    /// for constants that occur in no fact, then one sorted fact per line.
    pub fn to_fact_text(&self) -> String {
        let mut out = String::new();
        for (p, rel) in &self.relations {
            if rel.tuples.is_empty() {
                let _ = writeln!(out, "#pred {p}/{}.", rel.arity);
            }
        }
        let used: BTreeSet<u32> = self
            .relations
            .values()
            .flat_map(|r| r.tuples.iter().flat_map(|t| t.iter().copied()))
            .collect();
        let unused: BTreeSet<&Symbol> = (0..self.constants.len() as u32)
            .filter(|c| !used.contains(c))
            .map(|c| &self.constants[c as usize])
            .collect();
        if !unused.is_empty() {
            let names: Vec<&str> = unused.iter().map(|c| c.as_str()).collect();
            let _ = writeln!(out, "#const {}.", names.join(", "));
        }
        for f in self.facts() {
            let _ = writeln!(out, "{f}.");
        }
        out
    }
}

/// Parses a fact file: one `pred(c1,...,cn).` per line, `%` comments, and the
/// optional directives `#const a, b.` and `#pred name/arity.`
pub fn parse_kb(text: &str) -> Result<KnowledgeBase> {
    let mut kb = KnowledgeBase::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('%').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("#const") {
            parse_const_directive(&mut kb, rest, line)?;
        } else if let Some(rest) = content.strip_prefix("#pred") {
            parse_pred_directive(&mut kb, rest, line)?;
        } else {
            let mut r = Reader::new(content);
            let atom = r
                .atom()
                .and_then(|a| r.expect(".").map(|_| a))
                .and_then(|a| {
                    if r.at_end() {
                        Ok(a)
                    } else {
                        Err(r.unexpected("end of line after `.`"))
                    }
                })
                .map_err(|m| Error::syntax(line, m))?;
            kb.insert_fact(&atom).map_err(|e| at_line(e, line))?;
        }
    }
    Ok(kb)
}

fn at_line(e: Error, line: usize) -> Error {
    match e {
        Error::ArityConflict {
            predicate,
            declared,
            found,
            ..
        } => Error::ArityConflict {
            line,
            predicate,
            declared,
            found,
        },
        Error::NonGroundFact { fact, .. } => Error::NonGroundFact { line, fact },
        other => other,
    }
}

fn parse_const_directive(kb: &mut KnowledgeBase, rest: &str, line: usize) -> Result<()> {
    let body = rest.trim().strip_suffix('.').unwrap_or(rest.trim());
    for name in body.split(',').map(str::trim) {
        if !is_identifier(name) {
            return Err(Error::syntax(
                line,
                format!("`{name}` is not a constant name"),
            ));
        }
        kb.declare_constant(name);
    }
    Ok(())
}

fn parse_pred_directive(kb: &mut KnowledgeBase, rest: &str, line: usize) -> Result<()> {
    let body = rest.trim().strip_suffix('.').unwrap_or(rest.trim());
    for decl in body.split(',').map(str::trim) {
        let (name, arity) = decl
            .split_once('/')
            .ok_or_else(|| Error::syntax(line, format!("expected name/arity, found `{decl}`")))?;
        let arity: usize = arity
            .trim()
            .parse()
            .map_err(|_| Error::syntax(line, format!("bad arity in `{decl}`")))?;
        if !is_identifier(name.trim()) {
            return Err(Error::syntax(
                line,
                format!("`{name}` is not a predicate name"),
            ));
        }
        kb.declare_predicate(name.trim(), arity)
            .map_err(|e| at_line(e, line))?;
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Slot {
    Var(usize),
    Const(u32),
}

struct CompiledAtom<'kb> {
    relation: &'kb Relation,
    slots: Vec<Slot>,
}

/// Backtracking join; at each step the remaining atom with the fewest
/// candidate tuples under the current binding is matched next.
struct Matcher<'kb> {
    atoms: Vec<CompiledAtom<'kb>>,
    binding: Vec<Option<u32>>,
    done: Vec<bool>,
}

impl<'kb> Matcher<'kb> {
    /// `None` when some atom can never match (unknown predicate or constant,
    /// or arity mismatch).
    fn compile(kb: &'kb KnowledgeBase, s: &Sentence) -> Option<Self> {
        let vars = s.variables();
        let mut atoms = Vec::with_capacity(s.len());
        for a in s.atoms() {
            let relation = kb.relations.get(&a.predicate)?;
            if relation.arity != a.arity() {
                return None;
            }
            let mut slots = Vec::with_capacity(a.arity());
            for t in &a.terms {
                slots.push(match t {
                    Term::Var(v) => Slot::Var(vars.iter().position(|w| w == v).expect("listed")),
                    Term::Const(c) => Slot::Const(*kb.constant_ids.get(c)?),
                });
            }
            atoms.push(CompiledAtom { relation, slots });
        }
        Some(Matcher {
            done: vec![false; atoms.len()],
            atoms,
            binding: vec![None; vars.len()],
        })
    }

    fn bound_value(&self, slot: Slot) -> Option<u32> {
        match slot {
            Slot::Const(c) => Some(c),
            Slot::Var(v) => self.binding[v],
        }
    }

    /// Candidate tuple indices for `atom`, narrowed by the most selective
    /// bound position. `None` means every tuple.
    fn candidates(&self, atom: &CompiledAtom<'kb>) -> Option<&'kb [usize]> {
        let mut best: Option<&'kb [usize]> = None;
        for (pos, slot) in atom.slots.iter().enumerate() {
            if let Some(c) = self.bound_value(*slot) {
                let list: &'kb [usize] = atom.relation.by_position[pos]
                    .get(&c)
                    .map_or(&[], |v| v.as_slice());
                if best.is_none_or(|b| list.len() < b.len()) {
                    best = Some(list);
                }
            }
        }
        best
    }

    fn run<B>(&mut self, visit: &mut dyn FnMut(&[Option<u32>]) -> ControlFlow<B>) -> Option<B> {
        match self.step(visit) {
            ControlFlow::Break(b) => Some(b),
            ControlFlow::Continue(()) => None,
        }
    }

    fn step<B>(
        &mut self,
        visit: &mut dyn FnMut(&[Option<u32>]) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        let mut pick: Option<(usize, Option<&'kb [usize]>, usize)> = None;
        for (i, atom) in self.atoms.iter().enumerate() {
            if self.done[i] {
                continue;
            }
            let cands = self.candidates(atom);
            let size = cands.map_or(atom.relation.tuples.len(), <[usize]>::len);
            if pick.is_none_or(|(_, _, s)| size < s) {
                pick = Some((i, cands, size));
            }
        }
        let Some((i, cands, _)) = pick else {
            return visit(&self.binding);
        };
        self.done[i] = true;
        let relation = self.atoms[i].relation;
        let iter: Box<dyn Iterator<Item = usize>> = match cands {
            Some(list) => Box::new(list.iter().copied()),
            None => Box::new(0..relation.tuples.len()),
        };
        for idx in iter {
            let tuple = &relation.tuples[idx];
            let mut newly: Vec<usize> = Vec::new();
            let mut ok = true;
            for (pos, slot) in self.atoms[i].slots.iter().enumerate() {
                match *slot {
                    Slot::Const(c) => {
                        if tuple[pos] != c {
                            ok = false;
                            break;
                        }
                    }
                    Slot::Var(v) => match self.binding[v] {
                        Some(b) if b != tuple[pos] => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            self.binding[v] = Some(tuple[pos]);
                            newly.push(v);
                        }
                    },
                }
            }
            let flow = if ok {
                self.step(visit)
            } else {
                ControlFlow::Continue(())
            };
            for v in newly {
                self.binding[v] = None;
            }
            if flow.is_break() {
                self.done[i] = false;
                return flow;
            }
        }
        self.done[i] = false;
        ControlFlow::Continue(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_sentence;
    use proptest::prelude::*;

    pub(crate) const SMOKERS: &str =
        "smokes(john).\ncancer(john).\nfriends(john,jane).\nsmokes(jane).";

    fn s(text: &str) -> Sentence {
        parse_sentence(text).unwrap()
    }

    fn ground(text: &str) -> Atom {
        s(text).atoms()[0].clone()
    }

    /// Tries every assignment of constants to the variables of `s`.
    fn brute_matches(
        kb: &KnowledgeBase,
        s: &Sentence,
        projection: &[u32],
    ) -> BTreeSet<Vec<Symbol>> {
        let vars = s.variables();
        let consts: Vec<Symbol> = kb.constants().into_iter().collect();
        let mut out = BTreeSet::new();
        if consts.is_empty() && !vars.is_empty() {
            return out;
        }
        let total = consts.len().pow(vars.len() as u32);
        for code in 0..total {
            let mut c = code;
            let mut theta = crate::logic::Substitution::new();
            for v in &vars {
                theta.bind(*v, Term::Const(consts[c % consts.len()].clone()));
                c /= consts.len();
            }
            if s.atoms().iter().all(|a| kb.holds(&theta.apply_atom(a))) {
                out.insert(
                    projection
                        .iter()
                        .map(|v| match theta.get(*v) {
                            Some(Term::Const(c)) => c.clone(),
                            _ => unreachable!(),
                        })
                        .collect(),
                );
            }
        }
        out
    }

    #[test]
    fn parses_smokers() {
        let kb = parse_kb(SMOKERS).unwrap();
        assert_eq!(kb.fact_count(), 4);
        let preds: Vec<(String, usize)> = kb
            .predicates()
            .into_iter()
            .map(|(p, a)| (p.to_string(), a))
            .collect();
        assert_eq!(
            preds,
            vec![
                ("cancer".into(), 1),
                ("friends".into(), 2),
                ("smokes".into(), 1)
            ]
        );
        let consts: Vec<String> = kb.constants().iter().map(|c| c.to_string()).collect();
        assert_eq!(consts, vec!["jane", "john"]);
    }

    #[test]
    fn empty_and_comments() {
        assert!(parse_kb("").unwrap().is_empty());
        let kb = parse_kb("% header\n\n  smokes(john). % trailing\n").unwrap();
        assert_eq!(kb.fact_count(), 1);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_kb("smokes(john).\nsmokes(a,b)."),
            Err(Error::ArityConflict {
                line: 2,
                declared: 1,
                found: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_kb("smokes(X)."),
            Err(Error::NonGroundFact { line: 1, .. })
        ));
        assert!(matches!(
            parse_kb("smokes(john).\nsmokes(jane)"),
            Err(Error::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_kb("smokes(john). cancer(john)."),
            Err(Error::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn directives_round_trip() {
        let kb = parse_kb("#pred h/2.\n#const bob, alice.\np(carl).").unwrap();
        assert_eq!(kb.arity("h"), Some(2));
        assert_eq!(kb.constants().len(), 3);
        let again = parse_kb(&kb.to_fact_text()).unwrap();
        assert_eq!(again.to_fact_text(), kb.to_fact_text());
        assert_eq!(again.predicates(), kb.predicates());
    }

    #[test]
    fn holds_examples() {
        let kb = parse_kb(SMOKERS).unwrap();
        assert!(kb.holds(&ground("cancer(john)")));
        assert!(!kb.holds(&ground("cancer(jane)")));
        assert!(!KnowledgeBase::new().holds(&ground("cancer(john)")));
    }

    #[test]
    fn satisfies_examples() {
        let kb = parse_kb(SMOKERS).unwrap();
        assert!(kb.satisfies(&s("smokes(X), cancer(X)")));
        assert!(!kb.satisfies(&s("cancer(Y), friends(X,Y)")));
        assert!(brute_matches(&kb, &s("cancer(Y), friends(X,Y)"), &[0, 1]).is_empty());
        assert!(kb.satisfies(&Sentence::empty()));
        assert!(KnowledgeBase::new().satisfies(&Sentence::empty()));
    }

    #[test]
    fn all_matches_examples() {
        let kb = parse_kb(SMOKERS).unwrap();
        let sym = |x: &str| Symbol::new(x);
        let m = kb.all_matches(&s("smokes(X), cancer(X)"), &[0]);
        assert_eq!(m, BTreeSet::from([vec![sym("john")]]));
        assert_eq!(m, brute_matches(&kb, &s("smokes(X), cancer(X)"), &[0]));

        // parse numbers variables by first appearance: Y -> 0, X -> 1
        let sent = s("smokes(Y), friends(X,Y)");
        let m = kb.all_matches(&sent, &[1, 0]);
        assert_eq!(m, BTreeSet::from([vec![sym("john"), sym("jane")]]));
        assert_eq!(m, brute_matches(&kb, &sent, &[1, 0]));

        let m = kb.all_matches(&s("smokes(X)"), &[]);
        assert_eq!(m, BTreeSet::from([vec![]]));
    }

    #[test]
    fn constants_in_queries() {
        let kb = parse_kb(SMOKERS).unwrap();
        assert!(kb.satisfies(&s("friends(john,X), smokes(X)")));
        assert!(!kb.satisfies(&s("friends(jane,X)")));
        assert!(!kb.satisfies(&s("friends(bob,X)")));
    }

    fn arb_kb() -> impl Strategy<Value = KnowledgeBase> {
        let fact = (0usize..4, 0usize..5, 0usize..5);
        prop::collection::vec(fact, 0..=12).prop_map(|facts| {
            let mut kb = KnowledgeBase::new();
            for i in 0..5 {
                kb.declare_constant(format!("c{i}"));
            }
            for (p, a, b) in facts {
                let (a, b) = (
                    Term::Const(format!("c{a}").into()),
                    Term::Const(format!("c{b}").into()),
                );
                let atom = match p {
                    0 => Atom::new("p", vec![a]),
                    1 => Atom::new("q", vec![a]),
                    2 => Atom::new("r", vec![a, b]),
                    _ => Atom::new("s", vec![a, b]),
                };
                kb.insert_fact(&atom).unwrap();
            }
            kb
        })
    }

    fn arb_query() -> impl Strategy<Value = Sentence> {
        let atom = (0usize..4, 0u32..3, 0u32..3).prop_map(|(p, a, b)| match p {
            0 => Atom::new("p", vec![Term::Var(a)]),
            1 => Atom::new("q", vec![Term::Var(a)]),
            2 => Atom::new("r", vec![Term::Var(a), Term::Var(b)]),
            _ => Atom::new("s", vec![Term::Var(a), Term::Var(b)]),
        });
        prop::collection::vec(atom, 1..=3).prop_map(Sentence::new)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn matcher_agrees_with_enumeration(kb in arb_kb(), q in arb_query()) {
            let vars = q.variables();
            let fast = kb.all_matches(&q, &vars);
            prop_assert_eq!(&fast, &brute_matches(&kb, &q, &vars));
            prop_assert_eq!(kb.satisfies(&q), !fast.is_empty());
            // monotone under sub-conjunctions
            if kb.satisfies(&q) {
                for i in 0..q.len() {
                    prop_assert!(kb.satisfies(&q.without(i)));
                }
            }
        }
    }
}
