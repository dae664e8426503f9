//! Exhaustive reference implementation of theory extraction.
//!
//! Shares nothing with the level-wise miner except canonicalization and the
//! bias test: candidates are every predicate multiset with every argument
//! pattern, and truth is decided by trying every constant assignment.

use std::collections::{BTreeSet, HashSet};

use crate::bias::LanguageBias;
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::logic::{canonicalize, Atom, Sentence, Symbol, Term};
use crate::miner::{check_finite, resolve_vocabulary, Theory};

pub const DEFAULT_WORK_LIMIT: u64 = 200_000_000;

struct Budget {
    used: u64,
    limit: u64,
}

impl Budget {
    fn spend(&mut self, amount: u64) -> Result<()> {
        self.used = self.used.saturating_add(amount);
        if self.used > self.limit {
            Err(Error::WorkLimitExceeded { limit: self.limit })
        } else {
            Ok(())
        }
    }
}

pub fn brute_force_theory(
    kb: &KnowledgeBase,
    bias: &LanguageBias,
    vocab: &BTreeSet<Symbol>,
    work_limit: u64,
) -> Result<Theory> {
    check_finite(bias)?;
    let vocabulary = resolve_vocabulary(kb, vocab)?;
    let predicates: Vec<(Symbol, usize)> =
        vocabulary.iter().map(|(p, a)| (p.clone(), *a)).collect();
    let constants: Vec<Symbol> = kb.constants().into_iter().collect();
    let facts: HashSet<Atom> = kb.facts().into_iter().collect();
    let term_constants: &[Symbol] = if bias.variables_only { &[] } else { &constants };

    let mut budget = Budget {
        used: 0,
        limit: work_limit,
    };
    let mut seen: HashSet<Sentence> = HashSet::new();
    let mut theory = Theory::new(vocabulary);

    for len in 1..=bias.max_len {
        let mut choice = Vec::with_capacity(len);
        let mut multisets = Vec::new();
        predicate_multisets(predicates.len(), len, 0, &mut choice, &mut multisets);
        for preds in multisets {
            let shape: Vec<(&Symbol, usize)> = preds
                .iter()
                .map(|i| (&predicates[*i].0, predicates[*i].1))
                .collect();
            let positions: usize = shape.iter().map(|(_, a)| a).sum();
            let var_cap = bias.max_vars.unwrap_or(positions) as u32;
            let mut terms = Vec::with_capacity(positions);
            let mut failure = None;
            argument_patterns(
                positions,
                0,
                var_cap,
                term_constants,
                &mut terms,
                &mut |terms| {
                    if failure.is_some() {
                        return;
                    }
                    let mut it = terms.iter().cloned();
                    let atoms = shape
                        .iter()
                        .map(|(p, a)| Atom::new((*p).clone(), it.by_ref().take(*a).collect()));
                    let candidate = canonicalize(&Sentence::new(atoms));
                    if let Err(e) = budget.spend(1) {
                        failure = Some(e);
                        return;
                    }
                    if !seen.insert(candidate.clone()) || !bias.conforms(&candidate) {
                        return;
                    }
                    match true_by_enumeration(&candidate, &constants, &facts, &mut budget) {
                        Ok(true) => {
                            theory.insert(candidate);
                        }
                        Ok(false) => {}
                        Err(e) => failure = Some(e),
                    }
                },
            );
            if let Some(e) = failure {
                return Err(e);
            }
        }
    }
    Ok(theory)
}

fn predicate_multisets(
    n: usize,
    len: usize,
    from: usize,
    choice: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if choice.len() == len {
        out.push(choice.clone());
        return;
    }
    for p in from..n {
        choice.push(p);
        predicate_multisets(n, len, p, choice, out);
        choice.pop();
    }
}

/// Restricted-growth variable strings (variable `k` may appear only after
/// `k-1`), optionally mixed with constants.
fn argument_patterns(
    remaining: usize,
    vars_used: u32,
    var_cap: u32,
    constants: &[Symbol],
    terms: &mut Vec<Term>,
    emit: &mut dyn FnMut(&[Term]),
) {
    if remaining == 0 {
        emit(terms);
        return;
    }
    let choices = if vars_used < var_cap {
        vars_used + 1
    } else {
        vars_used
    };
    for v in 0..choices {
        terms.push(Term::Var(v));
        argument_patterns(
            remaining - 1,
            vars_used.max(v + 1),
            var_cap,
            constants,
            terms,
            emit,
        );
        terms.pop();
    }
    for c in constants {
        terms.push(Term::Const(c.clone()));
        argument_patterns(remaining - 1, vars_used, var_cap, constants, terms, emit);
        terms.pop();
    }
}

fn true_by_enumeration(
    s: &Sentence,
    constants: &[Symbol],
    facts: &HashSet<Atom>,
    budget: &mut Budget,
) -> Result<bool> {
    let vars = s.variables();
    if vars.is_empty() {
        return Ok(s.atoms().iter().all(|a| facts.contains(a)));
    }
    if constants.is_empty() {
        return Ok(false);
    }
    let total = (constants.len() as u64).saturating_pow(vars.len() as u32);
    budget.spend(total)?;
    let mut digits = vec![0usize; vars.len()];
    for _ in 0..total {
        let ground = |t: &Term| match t {
            Term::Var(v) => {
                let slot = vars.iter().position(|w| w == v).expect("listed");
                Term::Const(constants[digits[slot]].clone())
            }
            c => c.clone(),
        };
        if s.atoms().iter().all(|a| {
            facts.contains(&Atom::new(
                a.predicate.clone(),
                a.terms.iter().map(ground).collect(),
            ))
        }) {
            return Ok(true);
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < constants.len() {
                break;
            }
            *d = 0;
        }
    }
    Ok(false)
}
