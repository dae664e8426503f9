//! Terms, atoms and sentences, with the operations every other module builds
//! on: canonical labeling, homomorphic cores and definition unfolding.

mod canonical;
mod definition;
mod homomorphism;
mod sentence;
mod syntax;
mod term;

pub use canonical::{canonicalize, canonicalize_with_renaming, is_canonical};
pub(crate) use definition::unfold_sentence;
pub use definition::{unfold, Definition, VarSupply};
pub use homomorphism::{
    core_fixing, find_homomorphism, for_each_homomorphism, is_core, reduce_core,
};
pub use sentence::{apply_substitution, is_connected, Sentence, Substitution};
pub(crate) use syntax::{is_identifier, parse_definition_line, parse_sentence_line, Reader};
pub use syntax::{parse_definition, parse_sentence};
pub use term::{variable_name, Atom, Symbol, Term};
