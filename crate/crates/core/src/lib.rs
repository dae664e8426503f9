pub mod bias;
pub mod codec;
pub mod error;
pub mod harness;
pub mod invent;
pub mod kb;
pub mod logic;
pub mod miner;
pub mod objective;
pub mod oracle;

pub use bias::{parse_bias, LanguageBias};
pub use codec::{
    decode_sentence, decode_theory, encode_sentence, encode_theory, materialize_hidden_kb,
    parse_definitions, DefinitionSet, HiddenKb, TheoryEncoding,
};
pub use error::{Error, Result};
pub use harness::{check_miner, check_round_trip, CheckSummary};
pub use invent::{
    flatten_layers, generate_candidates, greedy_invent, stack, unfold_through_layers, Invention,
    InventionConfig, Layer, LayerConfig, NameSupply,
};
pub use kb::{parse_kb, KnowledgeBase};
pub use miner::{extract_theory, parse_theory, Theory};
pub use objective::{
    assess, evaluate, quality, theory_difference, Evaluation, Measure, ObjectiveParams,
    ReconstructionReport, TheoryDifference,
};
pub use oracle::brute_force_theory;
