//! Sequence completers: anything that extends a token prefix to a full
//! grammatical sequence, optionally conditioned on requirements.

use thiserror::Error;

use crate::catalogue::Catalogue;
use crate::datasetgen::{draw_rng, Requirements};
use crate::dsl::{GearSequence, Grammar, PrefixError, Token};

#[derive(Debug, Error)]
pub enum CompleterError {
    #[error("completer unreachable: {0}")]
    Unreachable(String),
    #[error("completer I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("handshake rejected: {0}")]
    Handshake(String),
    #[error("completer reported: {0}")]
    Remote(String),
    #[error("prefix cannot be completed: {0}")]
    Prefix(#[from] PrefixError),
}

pub trait Completer {
    /// One completion per prefix, in order. Outputs are expected to be
    /// grammatical and to begin with their prefix; callers verify this.
    fn complete_batch(&mut self, req: &Requirements, prefixes: &[Vec<Token>]) -> Result<Vec<GearSequence>, CompleterError>;

    fn complete(&mut self, req: &Requirements, prefix: &[Token]) -> Result<GearSequence, CompleterError> {
        let mut out = self.complete_batch(req, &[prefix.to_vec()])?;
        out.pop().ok_or_else(|| CompleterError::Protocol("empty batch response".into()))
    }
}

/// Uniform grammar-constrained completion; ignores the requirements. Each
/// completion draws from its own RNG stream so results depend only on the
/// seed and the request order.
#[derive(Clone, Debug)]
pub struct RandomCompleter<'c> {
    grammar: Grammar<'c>,
    seed: u64,
    issued: u64,
}

impl<'c> RandomCompleter<'c> {
    pub fn new(cat: &'c Catalogue, seed: u64) -> Self {
        RandomCompleter { grammar: Grammar::new(cat), seed, issued: 0 }
    }

    pub fn issued(&self) -> u64 {
        self.issued
    }
}

impl Completer for RandomCompleter<'_> {
    fn complete_batch(&mut self, _req: &Requirements, prefixes: &[Vec<Token>]) -> Result<Vec<GearSequence>, CompleterError> {
        prefixes
            .iter()
            .map(|p| {
                let mut rng = draw_rng(self.seed, self.issued);
                self.issued += 1;
                Ok(self.grammar.complete_with(p, &mut rng)?)
            })
            .collect()
    }
}

/// Checks the completer contract for one output.
pub fn honours_prefix(prefix: &[Token], out: &GearSequence, grammar: &Grammar<'_>) -> bool {
    out.tokens.starts_with(prefix) && grammar.validate(out).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_completer_contract() {
        let cat = Catalogue::builtin();
        let g = Grammar::new(&cat);
        let req: Requirements = "0 0 1 0.1 0 0 0 1".parse().unwrap();
        let mut c = RandomCompleter::new(&cat, 4);
        let prefixes = vec![vec![Token::Start], "<start> tra- SH-200".parse::<GearSequence>().unwrap().tokens];
        let out = c.complete_batch(&req, &prefixes).unwrap();
        assert_eq!(out.len(), 2);
        for (p, s) in prefixes.iter().zip(&out) {
            assert!(honours_prefix(p, s, &g));
        }
        assert_eq!(c.issued(), 2);
        let mut again = RandomCompleter::new(&cat, 4);
        assert_eq!(again.complete_batch(&req, &prefixes).unwrap(), out);
        let dead = vec!["<start> SH-100".parse::<GearSequence>().unwrap().tokens];
        assert!(matches!(c.complete_batch(&req, &dead), Err(CompleterError::Prefix(_))));
    }
}
