use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalogue::Catalogue;
use crate::dsl::grammar::{Grammar, PrefixError, State};
use crate::dsl::token::{GearSequence, Token};

impl Grammar<'_> {
    /// Extends `prefix` to a complete sequence, choosing uniformly among the
    /// allowed tokens at each step. A complete prefix is returned unchanged.
    pub fn complete_with<R: Rng + ?Sized>(&self, prefix: &[Token], rng: &mut R) -> Result<GearSequence, PrefixError> {
        let mut cur = self.parse_prefix(prefix).map_err(PrefixError::DeadEnd)?;
        let mut tokens = prefix.to_vec();
        while cur.state != State::Done {
            let options = self.successors(cur);
            // forced moves leave the RNG untouched
            let t = match options.as_slice() {
                [only] => *only,
                _ => *options.choose(rng).expect("grammar cursors always have a successor"),
            };
            cur = self.step(cur, t).expect("successor is allowed");
            tokens.push(t);
        }
        Ok(GearSequence::new(tokens))
    }

    pub fn random_with<R: Rng + ?Sized>(&self, rng: &mut R) -> GearSequence {
        self.complete_with(&[], rng).expect("empty prefix is extendable")
    }
}

/// Uniform grammar-constrained draw; identical seeds give identical sequences.
pub fn random_valid_sequence(seed: u64, max_components: usize, cat: &Catalogue) -> GearSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Grammar::with_max_components(cat, max_components).random_with(&mut rng)
}

/// Random completion of `prefix` under the ten-component grammar.
pub fn complete_random(prefix: &[Token], seed: u64, cat: &Catalogue) -> Result<GearSequence, PrefixError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Grammar::new(cat).complete_with(prefix, &mut rng)
}
