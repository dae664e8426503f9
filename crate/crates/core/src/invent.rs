//! Greedy search for hidden predicates, and stacking of invention layers.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;

use crate::bias::LanguageBias;
use crate::codec::{DefinitionSet, HiddenKb};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::logic::{
    core_fixing, is_connected, reduce_core, unfold_sentence, Definition, Sentence, Symbol,
};
use crate::miner::{extract_theory, Theory};
use crate::objective::{assess, Evaluation, ObjectiveParams, ReconstructionReport};

/// Objective differences below this are treated as ties.
const EPSILON: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct InventionConfig {
    pub def_bias: LanguageBias,
    pub hidden_bias: LanguageBias,
    /// Upper bound on the number of invented predicates.
    pub budget: usize,
    pub objective: ObjectiveParams,
    /// Reserved for randomized tie-breaking; greedy search does not read it.
    pub seed: u64,
}

impl Default for InventionConfig {
    fn default() -> Self {
        InventionConfig {
            def_bias: LanguageBias::lengths(2, 3),
            hidden_bias: LanguageBias::lengths(1, 2),
            budget: 4,
            objective: ObjectiveParams::default(),
            seed: 0,
        }
    }
}

impl InventionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be at least 1".into()));
        }
        self.def_bias.validate()?;
        self.hidden_bias.validate()?;
        if self.def_bias.min_len < 2 {
            return Err(Error::InvalidConfig(
                "definition bodies need at least 2 atoms (min_len >= 2)".into(),
            ));
        }
        self.objective.validate()
    }
}

/// Issues `h1, h2, ...`, skipping reserved names.
#[derive(Clone, Debug)]
pub struct NameSupply {
    next: usize,
    reserved: BTreeSet<Symbol>,
}

impl NameSupply {
    pub fn new(reserved: impl IntoIterator<Item = Symbol>) -> Self {
        NameSupply {
            next: 1,
            reserved: reserved.into_iter().collect(),
        }
    }

    pub fn peek(&self) -> Symbol {
        let mut n = self.next;
        loop {
            let name = Symbol::from(format!("h{n}"));
            if !self.reserved.contains(&name) {
                return name;
            }
            n += 1;
        }
    }

    pub fn take(&mut self) -> Symbol {
        let name = self.peek();
        self.reserved.insert(name.clone());
        self.next += 1;
        name
    }
}

/// Connected sub-conjunctions of members of `t`, core-reduced, that conform
/// to `def_bias`; deduplicated and ordered by their printed form.
pub fn generate_candidates(t: &Theory, def_bias: &LanguageBias) -> Vec<Sentence> {
    let mut found: BTreeSet<Sentence> = BTreeSet::new();
    for s in t.iter() {
        for mask in connected_subsets(s, def_bias.max_len) {
            let sub = reduce_core(&s.select(mask));
            if def_bias.conforms(&sub) {
                found.insert(sub);
            }
        }
    }
    let mut out: Vec<(String, Sentence)> = found.into_iter().map(|s| (s.to_string(), s)).collect();
    out.sort();
    out.into_iter().map(|(_, s)| s).collect()
}

/// Masks of atom subsets of `s` with at most `max_len` atoms that are
/// connected through shared variables.
fn connected_subsets(s: &Sentence, max_len: usize) -> Vec<u64> {
    let n = s.len().min(64);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut frontier: Vec<u64> = (0..n).map(|i| 1u64 << i).collect();
    let mut out = Vec::new();
    let mut size = 1;
    while !frontier.is_empty() && size <= max_len {
        let mut next = Vec::new();
        for mask in frontier {
            if !seen.insert(mask) {
                continue;
            }
            out.push(mask);
            if size == max_len {
                continue;
            }
            for j in 0..n {
                let bit = 1u64 << j;
                if mask & bit == 0 && is_connected(&s.select(mask | bit)) {
                    next.push(mask | bit);
                }
            }
        }
        frontier = next;
        size += 1;
    }
    out
}

#[derive(Clone, Debug)]
pub struct Invention {
    pub definitions: DefinitionSet,
    pub hidden_kb: HiddenKb,
    /// Objective with no definitions.
    pub initial: ReconstructionReport,
    pub report: ReconstructionReport,
    /// Report after each accepted definition; objectives strictly decrease.
    pub trace: Vec<ReconstructionReport>,
}

/// Adds one definition per round: the candidate giving the lowest objective,
/// ties going to the earliest candidate. Stops at the budget or when no
/// candidate strictly lowers the objective.
pub fn greedy_invent(kb: &KnowledgeBase, t: &Theory, cfg: &InventionConfig) -> Result<Invention> {
    let mut names = NameSupply::new(reserved_names(kb, t));
    invent_with(kb, t, cfg, &mut names)
}

fn reserved_names(kb: &KnowledgeBase, t: &Theory) -> BTreeSet<Symbol> {
    kb.predicate_names()
        .into_iter()
        .chain(t.vocabulary().keys().cloned())
        .collect()
}

fn invent_with(
    kb: &KnowledgeBase,
    t: &Theory,
    cfg: &InventionConfig,
    names: &mut NameSupply,
) -> Result<Invention> {
    cfg.validate()?;
    let candidates = generate_candidates(t, &cfg.def_bias);
    let mut used = vec![false; candidates.len()];
    let mut defs = DefinitionSet::default();
    let start = assess(kb, t, &defs, &cfg.hidden_bias, &cfg.objective)?;
    let initial = start.report.clone();
    let mut current = start;
    let mut trace = Vec::new();

    while defs.len() < cfg.budget {
        let name = names.peek();
        let open: Vec<usize> = (0..candidates.len()).filter(|i| !used[*i]).collect();
        let scored: Vec<(usize, DefinitionSet, Evaluation)> = open
            .par_iter()
            .map(|&i| {
                let mut trial = defs.clone();
                trial.push(Definition::exposing(name.clone(), &candidates[i])?)?;
                let eval = assess(kb, t, &trial, &cfg.hidden_bias, &cfg.objective)?;
                Ok((i, trial, eval))
            })
            .collect::<Result<_>>()?;
        let best = scored.into_iter().fold(
            None,
            |best: Option<(usize, DefinitionSet, Evaluation)>, cand| match best {
                Some(b) if b.2.report.objective <= cand.2.report.objective + EPSILON => Some(b),
                _ => Some(cand),
            },
        );
        let Some((i, trial, eval)) = best else { break };
        if eval.report.objective >= current.report.objective - EPSILON {
            break;
        }
        names.take();
        used[i] = true;
        defs = trial;
        trace.push(eval.report.clone());
        current = eval;
    }

    Ok(Invention {
        definitions: defs,
        hidden_kb: current.hidden_kb,
        initial,
        report: current.report,
        trace,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerConfig {
    /// Bias for mining this layer's input theory.
    pub mining_bias: LanguageBias,
    pub invention: InventionConfig,
}

#[derive(Clone, Debug)]
pub struct Layer {
    pub theory: Theory,
    pub invention: Invention,
}

/// Layer 1 mines and invents over `kb`; each further layer does the same over
/// the previous hidden KB and hidden vocabulary. Names are unique across
/// layers.
pub fn stack(kb: &KnowledgeBase, layers: &[LayerConfig]) -> Result<Vec<Layer>> {
    if layers.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one layer is required".into(),
        ));
    }
    let mut names = NameSupply::new(kb.predicate_names());
    let mut out: Vec<Layer> = Vec::with_capacity(layers.len());
    for cfg in layers {
        let (input, vocab) = match out.last() {
            None => (kb.clone(), kb.predicate_names()),
            Some(prev) => (
                prev.invention.hidden_kb.kb().clone(),
                prev.invention.definitions.names(),
            ),
        };
        let theory = extract_theory(&input, &cfg.mining_bias, &vocab)?;
        let invention = invent_with(&input, &theory, &cfg.invention, &mut names)?;
        out.push(Layer { theory, invention });
    }
    Ok(out)
}

/// Rewrites `top` so its bodies mention only predicates below all of
/// `lower` (ordered bottom layer first). Each layer's bodies must use only
/// the predicates defined in the layer beneath it.
pub fn unfold_through_layers(
    top: &DefinitionSet,
    lower: &[DefinitionSet],
) -> Result<DefinitionSet> {
    let lookups: Vec<BTreeMap<Symbol, &Definition>> = lower.iter().map(|l| l.lookup()).collect();
    let mut flat = Vec::with_capacity(top.len());
    for d in top.iter() {
        let mut body = d.body().clone();
        for lookup in lookups.iter().rev() {
            body = unfold_sentence(&body, lookup, true)?;
        }
        let head: BTreeSet<u32> = d.head().iter().copied().collect();
        let body = core_fixing(&body, &head);
        flat.push(Definition::new(
            d.predicate().clone(),
            d.head().to_vec(),
            body,
        )?);
    }
    DefinitionSet::with_shared_bodies(flat)
}

/// Every layer's definitions (bottom first) rewritten over the base
/// vocabulary, collected into one set.
pub fn flatten_layers(layers: &[DefinitionSet]) -> Result<DefinitionSet> {
    let mut all = Vec::new();
    for (l, defs) in layers.iter().enumerate() {
        all.extend(unfold_through_layers(defs, &layers[..l])?.iter().cloned());
    }
    DefinitionSet::with_shared_bodies(all)
}
