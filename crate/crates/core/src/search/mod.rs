//! Requirement-driven search over gear sequences: bi-gram EDA, Monte Carlo
//! tree search, a random-search baseline, and hybrids that search a short
//! prefix and hand the rest to a [`Completer`].

mod benchmark;
mod bigram;
mod completer;
mod eda;
mod fitness;
mod mcts;
mod random;
pub mod wire;

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::dsl::{GearSequence, Grammar, Token, MAX_COMPONENTS, MAX_TOKENS};

pub use benchmark::{benchmark_problems, run_benchmark, BenchmarkConfig, Method, MethodReport, UnknownMethod};
pub use bigram::{AllowedPairs, BigramModel};
pub use completer::{honours_prefix, Completer, CompleterError, RandomCompleter};
pub use eda::eda_search;
pub use fitness::{
    fitness, fitness_breakdown, Evaluation, FitnessBreakdown, FitnessWeights, Objective, RequirementObjective,
    INVALID_SCORE,
};
pub use mcts::{mcts_search, ucb};
pub use random::random_search;
pub use wire::{serve, ServeStats, StreamCompleter, PROTOCOL_VERSION};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("budget {budget} is smaller than the population {population}")]
    BudgetTooSmall { budget: usize, population: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Completer(#[from] CompleterError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Number of candidate evaluations.
    pub budget: usize,
    /// Tokens (including `<start>`) chosen by the search in hybrid mode.
    pub prefix_len: usize,
    pub population: usize,
    pub elite_frac: f64,
    pub smoothing: f64,
    /// Exploration constant of the tree policy.
    pub c: f64,
    pub max_components: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: 10_000,
            prefix_len: 6,
            population: 100,
            elite_frac: 0.2,
            smoothing: 0.1,
            c: 1.4,
            max_components: MAX_COMPONENTS,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn check(&self) -> Result<(), SearchError> {
        let bad = |m: String| Err(SearchError::InvalidConfig(m));
        if !(2..MAX_TOKENS).contains(&self.prefix_len) {
            return bad(format!("prefix_len must be in 2..{MAX_TOKENS}, got {}", self.prefix_len));
        }
        if self.population == 0 {
            return bad("population must be positive".into());
        }
        if !(self.elite_frac > 0.0 && self.elite_frac <= 1.0) {
            return bad(format!("elite_frac must be in (0, 1], got {}", self.elite_frac));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return bad(format!("smoothing must be non-negative, got {}", self.smoothing));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return bad(format!("exploration constant must be non-negative, got {}", self.c));
        }
        if !(1..=MAX_COMPONENTS).contains(&self.max_components) {
            return bad(format!("max_components must be in 1..={MAX_COMPONENTS}"));
        }
        Ok(())
    }

    pub fn elite_count(&self, population: usize) -> usize {
        ((self.elite_frac * population as f64).round() as usize).clamp(1, population)
    }
}

/// One evaluated sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub sequence: GearSequence,
    pub eval: Evaluation,
    /// Position in evaluation order.
    pub index: usize,
}

/// Feasible beats infeasible, then lower score, then earlier index.
pub fn better(a: &Evaluation, b: &Evaluation) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        _ => a.score < b.score,
    }
}

#[derive(Clone, Debug, Default)]
struct BestTracker {
    best: Option<Candidate>,
}

impl BestTracker {
    fn offer(&mut self, seq: &GearSequence, eval: Evaluation, index: usize) {
        if self.best.as_ref().is_none_or(|b| better(&eval, &b.eval)) {
            self.best = Some(Candidate { sequence: seq.clone(), eval, index });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub evaluated: usize,
    pub best_score: f64,
    pub mean_score: f64,
    pub feasible: usize,
}

/// Visit statistics of a root child of the search tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChildStat {
    pub token: String,
    pub reward: f64,
    pub visits: u64,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// Best candidate under [`better`]; `None` only when nothing was evaluated.
    pub best: Option<Candidate>,
    pub evaluations: usize,
    pub feasible_evaluations: usize,
    /// EDA generations; empty for other methods.
    pub history: Vec<GenerationStats>,
    /// Root children of the tree; empty for other methods.
    pub root_children: Vec<ChildStat>,
    pub elapsed: Duration,
}

impl SearchOutcome {
    pub fn best_sequence(&self) -> Option<&GearSequence> {
        self.best.as_ref().map(|c| &c.sequence)
    }
}

/// Completes hybrid prefixes, demoting outputs that break the completer
/// contract to invalid candidates.
fn complete_prefixes(
    completer: &mut dyn Completer,
    objective: &dyn Objective,
    grammar: &Grammar<'_>,
    prefixes: &[Vec<Token>],
) -> Result<Vec<Option<GearSequence>>, SearchError> {
    let req = objective
        .requirements()
        .ok_or_else(|| SearchError::InvalidConfig("hybrid search needs a requirement objective".into()))?;
    let out = completer.complete_batch(req, prefixes)?;
    if out.len() != prefixes.len() {
        return Err(CompleterError::Protocol(format!("{} prefixes, {} completions", prefixes.len(), out.len())).into());
    }
    Ok(prefixes
        .iter()
        .zip(out)
        .map(|(p, s)| honours_prefix(p, &s, grammar).then_some(s))
        .collect())
}

fn evaluate_all(objective: &dyn Objective, seqs: &[Option<GearSequence>]) -> Vec<Evaluation> {
    use rayon::prelude::*;
    seqs.par_iter()
        .map(|s| s.as_ref().map_or(Evaluation::INVALID, |s| objective.evaluate(s)))
        .collect()
}
