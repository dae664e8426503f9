//! Reconstruction objective: difference between a theory and its
//! reconstruction, minus a quality score of the hidden vocabulary.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bias::LanguageBias;
use crate::codec::{
    decode_theory, encode_theory, materialize_hidden_kb, DefinitionSet, HiddenKb, TheoryEncoding,
};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::logic::Sentence;
use crate::miner::Theory;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Measure {
    /// Atoms saved by the encoding, less a weighted dictionary cost.
    #[default]
    Mdl,
    /// Fewer definitions score higher.
    Sparsity,
    /// Facts saved by the hidden KB.
    FactCompression,
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mdl" => Ok(Measure::Mdl),
            "sparsity" => Ok(Measure::Sparsity),
            "fact_compression" => Ok(Measure::FactCompression),
            other => Err(Error::UnknownMeasure(other.to_string())),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Mdl => "mdl",
            Measure::Sparsity => "sparsity",
            Measure::FactCompression => "fact_compression",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveParams {
    /// Weight of a spurious sentence relative to a missing one.
    pub lambda: f64,
    /// Weight of definition body atoms under `Mdl`.
    pub gamma: f64,
    /// Weight per definition under `Sparsity`.
    pub alpha: f64,
    pub measure: Measure,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        ObjectiveParams {
            lambda: 1.0,
            gamma: 0.5,
            alpha: 1.0,
            measure: Measure::Mdl,
        }
    }
}

impl ObjectiveParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a non-negative number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TheoryDifference {
    pub missing: BTreeSet<Sentence>,
    pub spurious: BTreeSet<Sentence>,
    pub loss: f64,
}

/// `missing = T \ T2`, `spurious = T2 \ T`, `loss = |missing| + λ|spurious|`.
pub fn theory_difference(t: &Theory, t2: &Theory, lambda: f64) -> TheoryDifference {
    let missing: BTreeSet<Sentence> = t.sentences().difference(t2.sentences()).cloned().collect();
    let spurious: BTreeSet<Sentence> = t2.sentences().difference(t.sentences()).cloned().collect();
    let loss = missing.len() as f64 + lambda * spurious.len() as f64;
    TheoryDifference {
        missing,
        spurious,
        loss,
    }
}

/// Atom counts entering the `Mdl` score. Uncovered sentences are stored
/// verbatim, so they count toward `encoded`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Costs {
    pub theory: usize,
    pub encoded: usize,
    pub definitions: usize,
}

pub fn costs(t: &Theory, encoding: &TheoryEncoding, defs: &DefinitionSet) -> Costs {
    Costs {
        theory: t.cost(),
        encoded: encoding.stored_cost(),
        definitions: defs.body_cost(),
    }
}

pub fn quality(
    defs: &DefinitionSet,
    kb: &KnowledgeBase,
    hidden: &HiddenKb,
    t: &Theory,
    encoding: &TheoryEncoding,
    params: &ObjectiveParams,
) -> f64 {
    match params.measure {
        Measure::Mdl => {
            let c = costs(t, encoding, defs);
            (c.theory as f64 - c.encoded as f64) - params.gamma * c.definitions as f64
        }
        Measure::Sparsity => -params.alpha * defs.len() as f64,
        Measure::FactCompression => kb.fact_count() as f64 - hidden.fact_count() as f64,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub missing: usize,
    pub spurious: usize,
    pub loss: f64,
    pub quality: f64,
    pub objective: f64,
    #[serde(rename = "cost_T")]
    pub cost_t: usize,
    #[serde(rename = "cost_enc")]
    pub cost_enc: usize,
    #[serde(rename = "cost_F")]
    pub cost_f: usize,
    pub kb_size: usize,
    pub hidden_kb_size: usize,
}

/// Every intermediate product of one objective evaluation.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: ReconstructionReport,
    pub encoding: TheoryEncoding,
    pub reconstruction: Theory,
    pub difference: TheoryDifference,
    pub hidden_kb: HiddenKb,
}

pub fn assess(
    kb: &KnowledgeBase,
    t: &Theory,
    defs: &DefinitionSet,
    hidden_bias: &LanguageBias,
    params: &ObjectiveParams,
) -> Result<Evaluation> {
    defs.check_disjoint(&kb.predicates())?;
    let hidden_kb = materialize_hidden_kb(kb, defs)?;
    let encoding = encode_theory(t, defs, hidden_bias);
    let reconstruction = decode_theory(encoding.encoded.values(), defs)?;
    let difference = theory_difference(t, &reconstruction, params.lambda);
    let q = quality(defs, kb, &hidden_kb, t, &encoding, params);
    let c = costs(t, &encoding, defs);
    let report = ReconstructionReport {
        missing: difference.missing.len(),
        spurious: difference.spurious.len(),
        loss: difference.loss,
        quality: q,
        objective: difference.loss - q,
        cost_t: c.theory,
        cost_enc: c.encoded,
        cost_f: c.definitions,
        kb_size: kb.fact_count(),
        hidden_kb_size: hidden_kb.fact_count(),
    };
    Ok(Evaluation {
        report,
        encoding,
        reconstruction,
        difference,
        hidden_kb,
    })
}

pub fn evaluate(
    kb: &KnowledgeBase,
    t: &Theory,
    defs: &DefinitionSet,
    hidden_bias: &LanguageBias,
    params: &ObjectiveParams,
) -> Result<ReconstructionReport> {
    assess(kb, t, defs, hidden_bias, params).map(|e| e.report)
}
