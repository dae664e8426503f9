//! Variable homomorphisms between conjunctions and homomorphic cores.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use super::canonical::canonicalize;
use super::sentence::{Sentence, Substitution};
use super::term::{Atom, Term};

/// Calls `visit` with every substitution `θ` extending `seed` such that
/// `θ(src) ⊆ dst`. Constants only map to themselves; variables of `src` may
/// map to any term of `dst`. Stops early when `visit` breaks.
pub fn for_each_homomorphism<B>(
    src: &[Atom],
    dst: &Sentence,
    seed: &Substitution,
    mut visit: impl FnMut(&Substitution) -> ControlFlow<B>,
) -> Option<B> {
    // most constrained source atoms first
    let mut order: Vec<&Atom> = src.iter().collect();
    order.sort_by_key(|a| {
        dst.atoms()
            .iter()
            .filter(|d| d.predicate == a.predicate && d.arity() == a.arity())
            .count()
    });
    let mut theta = seed.clone();
    match extend(&order, dst, &mut theta, &mut visit) {
        ControlFlow::Break(b) => Some(b),
        ControlFlow::Continue(()) => None,
    }
}

fn extend<B>(
    src: &[&Atom],
    dst: &Sentence,
    theta: &mut Substitution,
    visit: &mut impl FnMut(&Substitution) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let Some((first, rest)) = src.split_first() else {
        return visit(theta);
    };
    for cand in dst.atoms() {
        if cand.predicate != first.predicate || cand.arity() != first.arity() {
            continue;
        }
        let mut newly = Vec::new();
        let mut ok = true;
        for (s, d) in first.terms.iter().zip(&cand.terms) {
            match s {
                Term::Const(_) => {
                    if s != d {
                        ok = false;
                        break;
                    }
                }
                Term::Var(v) => match theta.get(*v) {
                    Some(bound) => {
                        if bound != d {
                            ok = false;
                            break;
                        }
                    }
                    None => {
                        theta.bind(*v, d.clone());
                        newly.push(*v);
                    }
                },
            }
        }
        if ok {
            extend(rest, dst, theta, visit)?;
        }
        for v in newly {
            theta.unbind(v);
        }
    }
    ControlFlow::Continue(())
}

pub fn find_homomorphism(
    src: &Sentence,
    dst: &Sentence,
    seed: &Substitution,
) -> Option<Substitution> {
    for_each_homomorphism(src.atoms(), dst, seed, |theta| {
        ControlFlow::Break(theta.clone())
    })
}

/// Removes atoms while the sentence still maps homomorphically into what is
/// left, keeping every variable in `fixed` mapped to itself. The result is
/// a sub-conjunction of `s` that is not canonicalized.
pub fn core_fixing(s: &Sentence, fixed: &BTreeSet<u32>) -> Sentence {
    let seed: Substitution = fixed.iter().map(|v| (*v, Term::Var(*v))).collect();
    let mut current = s.clone();
    'outer: loop {
        for i in 0..current.len() {
            let smaller = current.without(i);
            if find_homomorphism(&current, &smaller, &seed).is_some() {
                current = smaller;
                continue 'outer;
            }
        }
        return current;
    }
}

/// Homomorphic core of `s`, canonicalized.
pub fn reduce_core(s: &Sentence) -> Sentence {
    canonicalize(&core_fixing(s, &BTreeSet::new()))
}

pub fn is_core(s: &Sentence) -> bool {
    let seed = Substitution::new();
    (0..s.len()).all(|i| find_homomorphism(s, &s.without(i), &seed).is_none())
}
