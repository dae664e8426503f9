use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::canonical::canonicalize_with_renaming;
use super::sentence::{Sentence, Substitution};
use super::term::{variable_name, Atom, Symbol, Term};
use crate::error::{Error, Result};

/// Hands out variable indices that do not occur in a surrounding context.
#[derive(Clone, Debug)]
pub struct VarSupply {
    next: u32,
}

impl VarSupply {
    pub fn starting_at(next: u32) -> Self {
        VarSupply { next }
    }

    /// A supply whose indices are all above those used in `s`.
    pub fn above(s: &Sentence) -> Self {
        VarSupply {
            next: s.max_variable().map_or(0, |m| m + 1),
        }
    }

    pub fn fresh(&mut self) -> u32 {
        let v = self.next;
        self.next += 1;
        v
    }
}

/// A biconditional `h(X1..Xk) <=> body`.
///
/// The body is stored canonically and `head` lists body variables by their
/// canonical index. Variables of the body not in the head are existentially
/// quantified (projected away).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Definition {
    predicate: Symbol,
    head: Vec<u32>,
    body: Sentence,
}

impl Definition {
    /// Builds a definition from a head variable list and an arbitrary body;
    /// the body is canonicalized and the head renamed along with it.
    pub fn new(predicate: impl Into<Symbol>, head: Vec<u32>, body: Sentence) -> Result<Self> {
        let predicate = predicate.into();
        if body.is_empty() {
            return Err(Error::InvalidDefinition(format!(
                "`{predicate}` has an empty body"
            )));
        }
        let distinct: BTreeSet<u32> = head.iter().copied().collect();
        if distinct.len() != head.len() {
            return Err(Error::InvalidDefinition(format!(
                "`{predicate}` repeats a head variable"
            )));
        }
        let body_vars: BTreeSet<u32> = body.variables().into_iter().collect();
        if let Some(v) = head.iter().find(|v| !body_vars.contains(v)) {
            return Err(Error::InvalidDefinition(format!(
                "head variable {} of `{predicate}` does not occur in the body",
                variable_name(*v)
            )));
        }
        let (body, renaming) = canonicalize_with_renaming(&body);
        let head = head.iter().map(|v| renaming[v]).collect();
        Ok(Definition {
            predicate,
            head,
            body,
        })
    }

    /// Definition whose head exposes every body variable in first-occurrence
    /// order of the canonical body.
    pub fn exposing(predicate: impl Into<Symbol>, body: &Sentence) -> Result<Self> {
        let (body, _) = canonicalize_with_renaming(body);
        let head = body.variables();
        Definition::new(predicate, head, body)
    }

    pub fn predicate(&self) -> &Symbol {
        &self.predicate
    }

    pub fn head(&self) -> &[u32] {
        &self.head
    }

    pub fn body(&self) -> &Sentence {
        &self.body
    }

    pub fn arity(&self) -> usize {
        self.head.len()
    }

    pub fn head_atom(&self) -> Atom {
        Atom::new(
            self.predicate.clone(),
            self.head.iter().map(|v| Term::Var(*v)).collect(),
        )
    }

    /// Body variables that are not exposed by the head.
    pub fn local_variables(&self) -> Vec<u32> {
        self.body
            .variables()
            .into_iter()
            .filter(|v| !self.head.contains(v))
            .collect()
    }

    pub fn exposes_all_variables(&self) -> bool {
        self.local_variables().is_empty()
    }

    pub fn renamed(&self, predicate: impl Into<Symbol>) -> Definition {
        Definition {
            predicate: predicate.into(),
            head: self.head.clone(),
            body: self.body.clone(),
        }
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <=> {}.", self.head_atom(), self.body)
    }
}

impl fmt::Debug for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} <=> {:?}", self.head_atom(), self.body)
    }
}

/// Replaces a defined atom by the definition body, binding head variables to
/// the atom's arguments and giving body-local variables fresh indices from
/// `supply`.
pub fn unfold(atom: &Atom, def: &Definition, supply: &mut VarSupply) -> Result<Sentence> {
    if atom.predicate != def.predicate {
        return Err(Error::UnknownHiddenPredicate(atom.predicate.to_string()));
    }
    if atom.arity() != def.arity() {
        return Err(Error::ArityMismatch {
            atom: atom.to_string(),
            expected: def.arity(),
            found: atom.arity(),
        });
    }
    let mut theta: Substitution = def
        .head
        .iter()
        .copied()
        .zip(atom.terms.iter().cloned())
        .collect();
    for v in def.local_variables() {
        theta.bind(v, Term::Var(supply.fresh()));
    }
    Ok(super::apply_substitution(&def.body, &theta))
}

/// Unfolds every atom of `s` whose predicate is in `defs`, leaving other atoms
/// untouched. Fails on atoms of predicates absent from `defs` when `strict`.
pub(crate) fn unfold_sentence(
    s: &Sentence,
    defs: &BTreeMap<Symbol, &Definition>,
    strict: bool,
) -> Result<Sentence> {
    let mut supply = VarSupply::above(s);
    let mut atoms = Vec::new();
    for atom in s.atoms() {
        match defs.get(&atom.predicate) {
            Some(def) => atoms.extend(unfold(atom, def, &mut supply)?.atoms().iter().cloned()),
            None if strict => {
                return Err(Error::UnknownHiddenPredicate(atom.predicate.to_string()))
            }
            None => atoms.push(atom.clone()),
        }
    }
    Ok(Sentence::new(atoms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{canonicalize, parse_definition, parse_sentence};

    fn s(text: &str) -> Sentence {
        parse_sentence(text).unwrap()
    }

    fn d(text: &str) -> Definition {
        parse_definition(text).unwrap()
    }

    fn v(i: u32) -> Term {
        Term::Var(i)
    }

    #[test]
    fn unfold_unary() {
        let h1 = d("h1(X) <=> smokes(X), cancer(X).");
        let atom = Atom::new("h1", vec![v(0)]);
        let out = unfold(&atom, &h1, &mut VarSupply::starting_at(1)).unwrap();
        assert_eq!(out, s("smokes(X), cancer(X)"));
    }

    #[test]
    fn unfold_binary() {
        let h2 = d("h2(X,Y) <=> smokes(X), friends(X,Y).");
        let atom = Atom::new("h2", vec![v(0), v(1)]);
        let out = unfold(&atom, &h2, &mut VarSupply::starting_at(2)).unwrap();
        assert_eq!(out, s("smokes(X), friends(X,Y)"));
    }

    #[test]
    fn unfold_repeated_argument() {
        let h2 = d("h2(X,Y) <=> smokes(X), friends(X,Y).");
        let atom = Atom::new("h2", vec![v(0), v(0)]);
        let out = unfold(&atom, &h2, &mut VarSupply::starting_at(1)).unwrap();
        assert_eq!(out, s("smokes(X), friends(X,X)"));
    }

    #[test]
    fn unfold_respects_head_order() {
        // head lists Y first
        let h4 = d("h4(Y,X) <=> smokes(Y), friends(X,Y).");
        let atom = Atom::new("h4", vec![Term::constant("jane"), Term::constant("john")]);
        let out = unfold(&atom, &h4, &mut VarSupply::starting_at(0)).unwrap();
        assert_eq!(out, s("smokes(jane), friends(john,jane)"));
    }

    #[test]
    fn unfold_arity_mismatch() {
        let h1 = d("h1(X) <=> smokes(X), cancer(X).");
        let atom = Atom::new("h1", vec![v(0), v(1)]);
        assert!(matches!(
            unfold(&atom, &h1, &mut VarSupply::starting_at(2)),
            Err(Error::ArityMismatch {
                expected: 1,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn local_variables_are_fresh() {
        let g = d("g(X) <=> friends(X,Y), smokes(Y).");
        assert_eq!(g.local_variables(), vec![1]);
        let context = s("g(X), g(Y), cancer(Z)");
        let defs: BTreeMap<Symbol, &Definition> = [(g.predicate().clone(), &g)].into();
        let out = unfold_sentence(&context, &defs, false).unwrap();
        // two fresh witnesses, none colliding with X, Y, Z
        assert_eq!(out.variable_count(), 5);
        assert_eq!(
            canonicalize(&out),
            canonicalize(&s(
                "friends(X,A), smokes(A), friends(Y,B), smokes(B), cancer(Z)"
            ))
        );
    }

    #[test]
    fn rejects_bad_heads() {
        assert!(parse_definition("h(X,X) <=> p(X), q(X).").is_err());
        assert!(parse_definition("h(X,Y) <=> p(X), q(X).").is_err());
    }
}
