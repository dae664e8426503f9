//! Canonical labeling of sentences up to variable renaming.
//!
//! The canonical form is the lexicographically smallest sorted atom list over
//! all bijective renamings of the variables onto `0..n`. The minimum always
//! numbers variables by first occurrence, which lets the search build the
//! answer one atom at a time: given the variables numbered so far, the next
//! atom is whichever remaining atom has the smallest image when its unnumbered
//! variables receive the next free indices. Only ties branch.

use std::collections::BTreeMap;

use super::sentence::Sentence;
use super::term::{Atom, Term};

pub fn canonicalize(s: &Sentence) -> Sentence {
    canonicalize_with_renaming(s).0
}

/// Canonical form plus the renaming (original variable -> canonical index)
/// that produces it.
pub fn canonicalize_with_renaming(s: &Sentence) -> (Sentence, BTreeMap<u32, u32>) {
    let mut dense_of = BTreeMap::new();
    for v in s.atoms().iter().flat_map(Atom::variables) {
        let next = dense_of.len() as u32;
        dense_of.entry(v).or_insert(next);
    }
    let atoms: Vec<Atom> = s
        .atoms()
        .iter()
        .map(|a| Atom {
            predicate: a.predicate.clone(),
            terms: a
                .terms
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Term::Var(dense_of[v]),
                    c => c.clone(),
                })
                .collect(),
        })
        .collect();

    let mut search = Search {
        atoms: &atoms,
        used: vec![false; atoms.len()],
        assign: vec![None; dense_of.len()],
        prefix: Vec::with_capacity(atoms.len()),
        best: None,
        best_assign: Vec::new(),
    };
    search.run(0);

    let best = search.best.unwrap_or_default();
    let renaming = dense_of
        .iter()
        .map(|(orig, dense)| (*orig, search.best_assign[*dense as usize]))
        .collect();
    (Sentence::new(best), renaming)
}

pub fn is_canonical(s: &Sentence) -> bool {
    canonicalize(s) == *s
}

struct Search<'a> {
    atoms: &'a [Atom],
    used: Vec<bool>,
    assign: Vec<Option<u32>>,
    prefix: Vec<Atom>,
    best: Option<Vec<Atom>>,
    best_assign: Vec<u32>,
}

impl Search<'_> {
    fn next_index(&self) -> u32 {
        self.assign.iter().filter(|a| a.is_some()).count() as u32
    }

    /// Image of `atom` with unnumbered variables taking `next, next+1, ...`
    /// in order of appearance.
    fn image(&self, atom: &Atom, next: u32) -> Atom {
        let mut fresh: Vec<(u32, u32)> = Vec::new();
        let terms = atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(v) => match self.assign[*v as usize] {
                    Some(n) => Term::Var(n),
                    None => {
                        let n = match fresh.iter().find(|(w, _)| w == v) {
                            Some((_, n)) => *n,
                            None => {
                                let n = next + fresh.len() as u32;
                                fresh.push((*v, n));
                                n
                            }
                        };
                        Term::Var(n)
                    }
                },
                c => c.clone(),
            })
            .collect();
        Atom {
            predicate: atom.predicate.clone(),
            terms,
        }
    }

    fn run(&mut self, step: usize) {
        if step == self.atoms.len() {
            let better = match &self.best {
                None => true,
                Some(best) => self.prefix < *best,
            };
            if better {
                self.best = Some(self.prefix.clone());
                self.best_assign = self.assign.iter().map(|a| a.unwrap_or(0)).collect();
            }
            return;
        }
        let next = self.next_index();
        let mut min: Option<Atom> = None;
        let mut ties: Vec<usize> = Vec::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if self.used[i] {
                continue;
            }
            let img = self.image(atom, next);
            match &min {
                Some(m) if img > *m => {}
                Some(m) if img == *m => ties.push(i),
                _ => {
                    min = Some(img);
                    ties.clear();
                    ties.push(i);
                }
            }
        }
        let min = min.expect("unused atom remains");
        if let Some(best) = &self.best {
            // prefix is never above best's prefix here, so only equality matters
            if self.prefix[..] == best[..step] && min > best[step] {
                return;
            }
        }
        for i in ties {
            let atom = &self.atoms[i];
            let mut newly = Vec::new();
            let mut n = next;
            for v in atom.variables() {
                if self.assign[v as usize].is_none() {
                    self.assign[v as usize] = Some(n);
                    newly.push(v);
                    n += 1;
                }
            }
            self.used[i] = true;
            self.prefix.push(min.clone());
            self.run(step + 1);
            self.prefix.pop();
            self.used[i] = false;
            for v in newly {
                self.assign[v as usize] = None;
            }
        }
    }
}
