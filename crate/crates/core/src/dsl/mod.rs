//! Token alphabet, grammar, validation and grammar-constrained generation.

mod enumerate;
mod generate;
mod grammar;
mod token;

pub use enumerate::{enumerate_variable_sequences, instantiate, StructuredSampler, Variable, VariableSequence};
pub use generate::{complete_random, random_valid_sequence};
pub use grammar::{
    next_tokens, validate_grammar, Cursor, Expect, Grammar, GrammarViolation, PrefixError, State, MAX_COMPONENTS,
    MAX_TOKENS,
};
pub use token::{
    vocabulary_hash, vocabulary_text, weight_coefficients, GearSequence, MeshAxis, SequenceParseError, Token, UnknownToken, LEXICON_SIZE,
    PAD_TOKEN, VOCAB_SIZE,
};
