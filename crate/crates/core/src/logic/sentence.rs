use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::term::{Atom, Symbol, Term};

/// An existentially closed conjunction of atoms.
///
/// Atoms are kept sorted and deduplicated, so two sentences with the same
/// atom set compare equal regardless of construction order. Equality up to
/// variable renaming requires [`canonicalize`](super::canonicalize) first.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sentence {
    atoms: Vec<Atom>,
}

impl Sentence {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        atoms.sort();
        atoms.dedup();
        Sentence { atoms }
    }

    pub fn empty() -> Self {
        Sentence { atoms: Vec::new() }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.binary_search(atom).is_ok()
    }

    pub fn is_subset_of(&self, other: &Sentence) -> bool {
        self.atoms.iter().all(|a| other.contains(a))
    }

    /// Distinct variables in order of first occurrence.
    pub fn variables(&self) -> Vec<u32> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for v in self.atoms.iter().flat_map(Atom::variables) {
            if seen.insert(v) {
                out.push(v);
            }
        }
        out
    }

    pub fn variable_count(&self) -> usize {
        self.atoms
            .iter()
            .flat_map(Atom::variables)
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn max_variable(&self) -> Option<u32> {
        self.atoms.iter().flat_map(Atom::variables).max()
    }

    pub fn has_constants(&self) -> bool {
        self.atoms
            .iter()
            .any(|a| a.terms.iter().any(|t| !t.is_var()))
    }

    pub fn is_ground(&self) -> bool {
        self.atoms.iter().all(Atom::is_ground)
    }

    pub fn predicates(&self) -> BTreeMap<Symbol, usize> {
        self.atoms
            .iter()
            .map(|a| (a.predicate.clone(), a.arity()))
            .collect()
    }

    pub fn union(&self, other: &Sentence) -> Sentence {
        Sentence::new(self.atoms.iter().chain(other.atoms.iter()).cloned())
    }

    pub fn without(&self, index: usize) -> Sentence {
        let mut atoms = self.atoms.clone();
        atoms.remove(index);
        Sentence { atoms }
    }

    pub fn with_atom(&self, atom: Atom) -> Sentence {
        Sentence::new(self.atoms.iter().cloned().chain(std::iter::once(atom)))
    }

    /// Sub-conjunction made of the atoms whose bit is set in `mask`.
    pub fn select(&self, mask: u64) -> Sentence {
        Sentence {
            atoms: self
                .atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, a)| a.clone())
                .collect(),
        }
    }

    pub fn rename(&self, map: &BTreeMap<u32, u32>) -> Sentence {
        Sentence::new(self.atoms.iter().map(|a| {
            Atom {
                predicate: a.predicate.clone(),
                terms: a
                    .terms
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => Term::Var(*map.get(v).unwrap_or(v)),
                        c => c.clone(),
                    })
                    .collect(),
            }
        }))
    }

    /// Number of atoms; the description-length unit used by the objective.
    pub fn cost(&self) -> usize {
        self.atoms.len()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a:?}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<Atom> for Sentence {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        Sentence::new(iter)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<u32, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn bind(&mut self, var: u32, term: Term) -> Option<Term> {
        self.map.insert(var, term)
    }

    pub fn unbind(&mut self, var: u32) -> Option<Term> {
        self.map.remove(&var)
    }

    pub fn with(mut self, var: u32, term: Term) -> Self {
        self.map.insert(var, term);
        self
    }

    pub fn get(&self, var: u32) -> Option<&Term> {
        self.map.get(&var)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Term)> {
        self.map.iter().map(|(v, t)| (*v, t))
    }

    /// True when every variable of `s` is mapped to a constant.
    pub fn grounds(&self, s: &Sentence) -> bool {
        s.atoms()
            .iter()
            .flat_map(Atom::variables)
            .all(|v| matches!(self.map.get(&v), Some(Term::Const(_))))
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or(Term::Var(*v)),
            c => c.clone(),
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom {
            predicate: a.predicate.clone(),
            terms: a.terms.iter().map(|t| self.apply_term(t)).collect(),
        }
    }
}

impl FromIterator<(u32, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (u32, Term)>>(iter: I) -> Self {
        Substitution {
            map: iter.into_iter().collect(),
        }
    }
}

/// Replaces every mapped variable; atoms that become equal collapse.
pub fn apply_substitution(s: &Sentence, theta: &Substitution) -> Sentence {
    Sentence::new(s.atoms().iter().map(|a| theta.apply_atom(a)))
}

/// Connectivity of the atom graph where two atoms are adjacent when they share
/// a variable. Empty and single-atom sentences are connected.
pub fn is_connected(s: &Sentence) -> bool {
    let atoms = s.atoms();
    if atoms.len() <= 1 {
        return true;
    }
    let mut reached = vec![false; atoms.len()];
    let mut stack = vec![0usize];
    reached[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for (j, other) in atoms.iter().enumerate() {
            if reached[j] {
                continue;
            }
            if atoms[i]
                .variables()
                .any(|v| other.variables().any(|w| w == v))
            {
                reached[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == atoms.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_sentence;

    fn s(text: &str) -> Sentence {
        parse_sentence(text).unwrap()
    }

    #[test]
    fn substitution_grounds_single_atom() {
        let theta = Substitution::new().with(0, Term::constant("john"));
        assert_eq!(
            apply_substitution(&s("smokes(X)"), &theta),
            s("smokes(john)")
        );
    }

    #[test]
    fn substitution_grounds_pair() {
        let theta = Substitution::new()
            .with(0, Term::constant("john"))
            .with(1, Term::constant("jane"));
        let src = s("smokes(X), friends(X,Y)");
        assert!(theta.grounds(&src));
        assert_eq!(
            apply_substitution(&src, &theta),
            s("smokes(john), friends(john,jane)")
        );
    }

    #[test]
    fn identity_substitution_is_noop() {
        let src = s("smokes(X), friends(X,Y)");
        assert_eq!(apply_substitution(&src, &Substitution::new()), src);
        let id: Substitution = src
            .variables()
            .into_iter()
            .map(|v| (v, Term::Var(v)))
            .collect();
        assert_eq!(apply_substitution(&src, &id), src);
    }

    #[test]
    fn substitution_collapses_duplicates() {
        let theta = Substitution::new().with(1, Term::Var(0));
        let out = apply_substitution(&s("friends(X,Y), friends(X,X), friends(Y,X)"), &theta);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn connectivity() {
        assert!(is_connected(&s("smokes(X), cancer(X)")));
        assert!(!is_connected(&s("smokes(X), cancer(Y)")));
        assert!(is_connected(&s("smokes(X)")));
        assert!(is_connected(&Sentence::empty()));
        assert!(is_connected(&s("smokes(X), friends(X,Y), cancer(Y)")));
        // a ground atom never shares a variable
        assert!(!is_connected(&s("smokes(X), cancer(john)")));
        assert!(!is_connected(&s("smokes(john), cancer(john)")));
    }
}
