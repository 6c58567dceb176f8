//! Shared fixtures for the criterion benches.

use gearsyn_core::dsl::random_valid_sequence;
use gearsyn_core::{Catalogue, GearSequence};

/// `n` grammar-valid sequences drawn with seeds `0..n`.
pub fn sample_sequences(cat: &Catalogue, n: u64) -> Vec<GearSequence> {
    (0..n).map(|seed| random_valid_sequence(seed, 10, cat)).collect()
}
