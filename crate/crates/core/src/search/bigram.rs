//! Bi-gram token model for the estimation-of-distribution search.

use std::collections::{HashSet, VecDeque};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::dsl::{Cursor, GearSequence, Grammar, State, Token, VOCAB_SIZE};

/// Which token pairs can ever be adjacent in a grammatical sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct AllowedPairs {
    allowed: Vec<[bool; VOCAB_SIZE]>,
}

impl AllowedPairs {
    /// Explores every reachable (cursor, last token) pair of the grammar.
    pub fn from_grammar(grammar: &Grammar<'_>) -> Self {
        let mut allowed = vec![[false; VOCAB_SIZE]; VOCAB_SIZE];
        let start = grammar.step(grammar.initial(), Token::Start).expect("start is always allowed");
        let mut seen: HashSet<(Cursor, Token)> = HashSet::new();
        let mut queue = VecDeque::from([(start, Token::Start)]);
        seen.insert((start, Token::Start));
        while let Some((cur, last)) = queue.pop_front() {
            for t in grammar.successors(cur) {
                allowed[last.id()][t.id()] = true;
                let next = grammar.step(cur, t).expect("successor steps");
                if next.state != State::Done && seen.insert((next, t)) {
                    queue.push_back((next, t));
                }
            }
        }
        AllowedPairs { allowed }
    }

    pub fn contains(&self, prev: Token, next: Token) -> bool {
        self.allowed[prev.id()][next.id()]
    }

    pub fn successors(&self, prev: Token) -> impl Iterator<Item = Token> + '_ {
        (0..VOCAB_SIZE).filter(move |&j| self.allowed[prev.id()][j]).filter_map(Token::from_id)
    }

    pub fn count(&self) -> usize {
        self.allowed.iter().map(|row| row.iter().filter(|&&a| a).count()).sum()
    }
}

/// `P(next | prev)` restricted to allowed pairs. Rows of tokens with
/// allowed successors sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct BigramModel {
    probs: Vec<[f64; VOCAB_SIZE]>,
    pairs: AllowedPairs,
}

impl BigramModel {
    pub fn uniform(pairs: AllowedPairs) -> Self {
        let mut probs = vec![[0.0; VOCAB_SIZE]; VOCAB_SIZE];
        for (i, row) in probs.iter_mut().enumerate() {
            let n = pairs.allowed[i].iter().filter(|&&a| a).count();
            for (j, p) in row.iter_mut().enumerate() {
                if pairs.allowed[i][j] {
                    *p = 1.0 / n as f64;
                }
            }
        }
        BigramModel { probs, pairs }
    }

    pub fn prob(&self, prev: Token, next: Token) -> f64 {
        self.probs[prev.id()][next.id()]
    }

    pub fn pairs(&self) -> &AllowedPairs {
        &self.pairs
    }

    /// Sum of each row that has allowed successors.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..VOCAB_SIZE)
            .filter(|&i| self.pairs.allowed[i].iter().any(|&a| a))
            .map(|i| self.probs[i].iter().sum())
            .collect()
    }

    /// Re-estimates from bigram counts of `elite` with additive smoothing over
    /// allowed pairs. A row with no counts and zero smoothing keeps its
    /// previous distribution.
    pub fn refit(&mut self, elite: &[&[Token]], smoothing: f64) {
        let mut counts = vec![[0.0f64; VOCAB_SIZE]; VOCAB_SIZE];
        for seq in elite {
            for w in seq.windows(2) {
                if self.pairs.contains(w[0], w[1]) {
                    counts[w[0].id()][w[1].id()] += 1.0;
                }
            }
        }
        for i in 0..VOCAB_SIZE {
            let allowed = &self.pairs.allowed[i];
            let total: f64 = (0..VOCAB_SIZE).filter(|&j| allowed[j]).map(|j| counts[i][j] + smoothing).sum();
            if total <= 0.0 {
                continue;
            }
            for j in 0..VOCAB_SIZE {
                self.probs[i][j] = if allowed[j] { (counts[i][j] + smoothing) / total } else { 0.0 };
            }
        }
    }

    /// Draws tokens from `prefix` onward, masking every step to the grammar's
    /// allowed successors and renormalising. Stops at the end token or once
    /// the sequence holds `max_len` tokens.
    pub fn sample<R: Rng + ?Sized>(&self, grammar: &Grammar<'_>, max_len: usize, rng: &mut R) -> Vec<Token> {
        let mut cur = grammar.initial();
        let mut tokens = Vec::with_capacity(max_len.min(32));
        while cur.state != State::Done && tokens.len() < max_len {
            let options = grammar.successors(cur);
            let t = match (tokens.last(), options.as_slice()) {
                (_, [only]) => *only,
                (None, _) => unreachable!("only <start> opens a sequence"),
                (Some(&prev), _) => {
                    let weights: Vec<f64> = options.iter().map(|&t| self.prob(prev, t)).collect();
                    match WeightedIndex::new(&weights) {
                        Ok(dist) => options[dist.sample(rng)],
                        // all-zero mass after masking: fall back to uniform
                        Err(_) => *options.choose(rng).expect("non-empty successors"),
                    }
                }
            };
            cur = grammar.step(cur, t).expect("sampled successor is allowed");
            tokens.push(t);
        }
        tokens
    }

    /// Log-probability of a complete sequence under the unmasked chain.
    pub fn log_prob(&self, seq: &GearSequence) -> f64 {
        seq.tokens.windows(2).map(|w| self.prob(w[0], w[1]).ln()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue::Catalogue;
    use crate::dsl::{random_valid_sequence, validate_grammar, MAX_TOKENS};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(s: &str) -> Vec<Token> {
        s.parse::<GearSequence>().unwrap().tokens
    }

    #[test]
    fn pairs_cover_random_draws() {
        let cat = Catalogue::builtin();
        let pairs = AllowedPairs::from_grammar(&Grammar::new(&cat));
        assert!(pairs.count() > 100);
        assert!(!pairs.contains(Token::Start, Token::End));
        for seed in 0..300 {
            let s = random_valid_sequence(seed, 10, &cat);
            assert!(s.tokens.windows(2).all(|w| pairs.contains(w[0], w[1])), "{s}");
        }
    }

    #[test]
    fn uniform_rows_normalised() {
        let cat = Catalogue::builtin();
        let m = BigramModel::uniform(AllowedPairs::from_grammar(&Grammar::new(&cat)));
        assert!(m.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-9));
    }

    #[test]
    fn refit_counts_without_smoothing() {
        let cat = Catalogue::builtin();
        let mut m = BigramModel::uniform(AllowedPairs::from_grammar(&Grammar::new(&cat)));
        let a = toks("<start> tra+ SH-100 <end>");
        let b = toks("<start> tra+ SH-200 <end>");
        m.refit(&[&a, &a, &b], 0.0);
        let tra: Token = "tra+".parse().unwrap();
        let sh100: Token = "SH-100".parse().unwrap();
        let sh200: Token = "SH-200".parse().unwrap();
        assert!((m.prob(tra, sh100) - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.prob(tra, sh200) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.prob(Token::Start, tra), 1.0);
        assert!(m.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-9));
    }

    #[test]
    fn smoothing_keeps_allowed_positive() {
        let cat = Catalogue::builtin();
        let pairs = AllowedPairs::from_grammar(&Grammar::new(&cat));
        let mut m = BigramModel::uniform(pairs.clone());
        let a = toks("<start> tra+ SH-100 <end>");
        m.refit(&[&a], 0.1);
        for prev in Token::lexicon() {
            for next in pairs.successors(prev) {
                assert!(m.prob(prev, next) > 0.0);
            }
        }
    }

    #[test]
    fn masked_samples_are_valid() {
        let cat = Catalogue::builtin();
        let g = Grammar::new(&cat);
        let m = BigramModel::uniform(AllowedPairs::from_grammar(&g));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let t = m.sample(&g, MAX_TOKENS, &mut rng);
            assert_eq!(validate_grammar(&GearSequence::new(t), &cat), Ok(()));
        }
        let p = m.sample(&g, 6, &mut rng);
        assert!(p.len() <= 6 && p[0] == Token::Start);
    }
}
