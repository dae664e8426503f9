//! Seeded random instances and the two property checks run on them: the
//! level-wise miner against the exhaustive oracle, and encode/decode
//! round-trips under random definitions.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bias::LanguageBias;
use crate::codec::{decode_sentence, encode_sentence, materialize_hidden_kb, DefinitionSet};
use crate::error::Result;
use crate::kb::KnowledgeBase;
use crate::logic::{is_connected, Atom, Definition, Sentence, Symbol, Term};
use crate::miner::{extract_theory, Theory};
use crate::oracle::brute_force_theory;

pub const MAX_CONSTANTS: usize = 5;
pub const MAX_PREDICATES: usize = 4;
pub const MAX_FACTS: usize = 12;

/// Signature of a theory extractor under test.
pub type Miner = fn(&KnowledgeBase, &LanguageBias, &BTreeSet<Symbol>) -> Result<Theory>;

#[derive(Clone, Debug)]
pub struct Instance {
    pub kb: KnowledgeBase,
    pub bias: LanguageBias,
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// A KB with at most 5 constants, 4 predicates and 12 facts and a bias with
/// `max_len <= 3`. Arity 3 and constants in sentences only appear when
/// `max_len <= 2`, which keeps the oracle's enumeration small.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let max_len = rng.gen_range(1..=3);
    let min_len = rng.gen_range(1..=max_len);
    let short = max_len <= 2;
    let variables_only = !short || rng.gen_bool(0.6);
    let constant_count = rng.gen_range(1..=MAX_CONSTANTS);
    let predicate_count = rng.gen_range(1..=MAX_PREDICATES);
    let arities: Vec<usize> = (0..predicate_count)
        .map(|_| {
            let top = if short && variables_only { 3 } else { 2 };
            rng.gen_range(1..=top)
        })
        .collect();
    let constants: Vec<Symbol> = (0..constant_count)
        .map(|i| Symbol::from(format!("c{i}")))
        .collect();

    let mut kb = KnowledgeBase::new();
    for c in &constants {
        kb.declare_constant(c.clone());
    }
    for (i, a) in arities.iter().enumerate() {
        kb.declare_predicate(format!("p{i}"), *a)
            .expect("fresh predicate");
    }
    for _ in 0..rng.gen_range(0..=MAX_FACTS) {
        let p = rng.gen_range(0..predicate_count);
        let terms = (0..arities[p])
            .map(|_| Term::Const(constants.choose(rng).expect("non-empty").clone()))
            .collect();
        kb.insert_fact(&Atom::new(format!("p{p}"), terms))
            .expect("ground fact of declared arity");
    }

    let bias = LanguageBias {
        min_len,
        max_len,
        max_vars: if rng.gen_bool(0.3) {
            Some(rng.gen_range(1..=3))
        } else {
            None
        },
        connected: rng.gen_bool(0.7),
        variables_only,
        require_core: rng.gen_bool(0.7),
    };
    Instance { kb, bias }
}

/// Up to four definitions whose bodies are connected sub-conjunctions of
/// mined sentences; a head occasionally hides one body variable.
pub fn random_definitions(t: &Theory, rng: &mut impl Rng) -> DefinitionSet {
    let pool: Vec<&Sentence> = t.iter().filter(|s| s.len() >= 2).collect();
    let mut defs = DefinitionSet::default();
    if pool.is_empty() {
        return defs;
    }
    let wanted = rng.gen_range(1..=4);
    for _ in 0..wanted * 4 {
        if defs.len() == wanted {
            break;
        }
        let s = pool.choose(rng).expect("non-empty");
        let mask = rng.gen_range(1..(1u64 << s.len()));
        let body = s.select(mask);
        if body.len() < 2 || !is_connected(&body) {
            continue;
        }
        let name = format!("h{}", defs.len() + 1);
        let mut def = Definition::exposing(name.clone(), &body).expect("non-empty body");
        if def.arity() > 1 && rng.gen_bool(0.25) {
            let mut head = def.head().to_vec();
            head.remove(rng.gen_range(0..head.len()));
            def = Definition::new(name, head, def.body().clone()).expect("head within body");
        }
        let _ = defs.push(def);
    }
    defs
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckSummary {
    pub instances: usize,
    pub failures: Vec<String>,
}

impl CheckSummary {
    pub fn passed(&self) -> usize {
        self.instances - self.failures.len()
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for CheckSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.ok() { "OK" } else { "FAILED" };
        write!(f, "{}/{} {verdict}", self.passed(), self.instances)
    }
}

/// Runs `miner` and the exhaustive oracle on `instances` random instances.
/// An oracle that exceeds `work_limit` counts as a failure.
pub fn check_miner(seed: u64, instances: usize, miner: Miner, work_limit: u64) -> CheckSummary {
    let mut summary = CheckSummary {
        instances,
        failures: Vec::new(),
    };
    for i in 0..instances {
        let inst = random_instance(&mut instance_rng(seed, i));
        let vocab = inst.kb.predicate_names();
        let outcome = match (
            miner(&inst.kb, &inst.bias, &vocab),
            brute_force_theory(&inst.kb, &inst.bias, &vocab, work_limit),
        ) {
            (Ok(fast), Ok(slow)) if fast.sentences() == slow.sentences() => None,
            (Ok(fast), Ok(slow)) => Some(format!(
                "miner found {} sentences, oracle {}",
                fast.len(),
                slow.len()
            )),
            (Err(e), _) => Some(format!("miner: {e}")),
            (_, Err(e)) => Some(format!("oracle: {e}")),
        };
        if let Some(why) = outcome {
            summary.failures.push(format!("instance {i}: {why}"));
        }
    }
    summary
}

/// On random KBs and definitions: every encodable mined sentence decodes to
/// itself, and its encoding is mined from the hidden KB.
pub fn check_round_trip(seed: u64, instances: usize) -> CheckSummary {
    let mut summary = CheckSummary {
        instances,
        failures: Vec::new(),
    };
    for i in 0..instances {
        if let Err(why) = round_trip_instance(&mut instance_rng(seed.wrapping_add(1), i)) {
            summary.failures.push(format!("instance {i}: {why}"));
        }
    }
    summary
}

fn round_trip_instance(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let Instance { kb, .. } = random_instance(rng);
    // three variables bound the hidden arities and keep hidden mining small
    let bias = LanguageBias {
        connected: rng.gen_bool(0.7),
        ..LanguageBias::lengths(1, rng.gen_range(2..=3)).with_max_vars(3)
    };
    let t = extract_theory(&kb, &bias, &kb.predicate_names()).map_err(|e| e.to_string())?;
    let defs = random_definitions(&t, rng);
    let hidden_bias = LanguageBias {
        connected: rng.gen_bool(0.5),
        ..LanguageBias::lengths(1, rng.gen_range(1..=3)).with_max_vars(3)
    };
    let hidden = materialize_hidden_kb(&kb, &defs).map_err(|e| e.to_string())?;
    let hidden_theory =
        extract_theory(hidden.kb(), &hidden_bias, &defs.names()).map_err(|e| e.to_string())?;
    for s in t.iter() {
        let Some(e) = encode_sentence(s, &defs, &hidden_bias) else {
            continue;
        };
        let back = decode_sentence(&e, &defs).map_err(|err| err.to_string())?;
        if &back != s {
            return Err(format!("`{s}` encoded as `{e}` decodes to `{back}`"));
        }
        if !hidden_theory.contains(&e) {
            return Err(format!(
                "encoding `{e}` of `{s}` is not mined from the hidden KB"
            ));
        }
    }
    Ok(())
}
