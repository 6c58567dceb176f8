//! Table-style comparison of search methods on shared benchmark problems.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::catalogue::Catalogue;
use crate::datasetgen::{draw_rng, encode_requirements, Requirements};
use crate::dsl::{GearSequence, Grammar, Token};
use crate::feasibility::check_interference;
use crate::metrics::{evaluate_set, EvalReport};
use crate::search::completer::{honours_prefix, Completer};
use crate::search::{
    eda_search, mcts_search, random_search, FitnessWeights, Objective, RequirementObjective, SearchConfig, SearchError,
    SearchOutcome,
};
use crate::simulator::simulate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    Eda,
    Mcts,
    EdaCompleter,
    MctsCompleter,
    Random,
    /// The completer alone, from `<start>`.
    Completer,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown method {0:?} (expected eda, mcts, eda+c, mcts+c, random or completer)")]
pub struct UnknownMethod(pub String);

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Completer,
        Method::EdaCompleter,
        Method::MctsCompleter,
        Method::Eda,
        Method::Mcts,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Eda => "eda",
            Method::Mcts => "mcts",
            Method::EdaCompleter => "eda+c",
            Method::MctsCompleter => "mcts+c",
            Method::Random => "random",
            Method::Completer => "completer",
        }
    }

    pub fn needs_completer(self) -> bool {
        matches!(self, Method::EdaCompleter | Method::MctsCompleter | Method::Completer)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BenchmarkConfig {
    /// Shared hyperparameters; problem `i` runs with seed `search.seed + i`.
    pub search: SearchConfig,
    pub pure_budget: usize,
    pub hybrid_budget: usize,
    pub weights: FitnessWeights,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            search: SearchConfig::default(),
            pure_budget: 10_000,
            hybrid_budget: 1_000,
            weights: FitnessWeights::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn budget(&self, method: Method) -> usize {
        match method {
            Method::Eda | Method::Mcts | Method::Random => self.pure_budget,
            Method::EdaCompleter | Method::MctsCompleter => self.hybrid_budget,
            Method::Completer => 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProblemOutcome {
    pub best: Option<String>,
    pub score: Option<f64>,
    pub feasible: bool,
    pub evaluations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodReport {
    pub method: Method,
    pub candidates_per_problem: usize,
    pub report: EvalReport,
    pub feasible_best: usize,
    pub wall_seconds: f64,
    pub seconds_per_candidate: f64,
    pub problems: Vec<ProblemOutcome>,
}

/// Requirement vectors of distinct feasible sequences with between three and
/// `max_components` components, drawn with the dataset sampler.
pub fn benchmark_problems(n: usize, max_components: usize, seed: u64, cat: &Catalogue) -> Vec<(Requirements, GearSequence)> {
    let grammar = Grammar::with_max_components(cat, max_components);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    let max_draws = (n as u64).saturating_mul(10_000).max(10_000);
    for k in 0..max_draws {
        if out.len() == n {
            break;
        }
        let seq = grammar.random_with(&mut draw_rng(seed, k));
        if seq.component_count() < 3.min(max_components) || !seen.insert(seq.ids()) {
            continue;
        }
        let res = simulate(&seq, cat).expect("grammar draws simulate");
        if check_interference(&res.placements).is_feasible() {
            out.push((encode_requirements(&res), seq));
        }
    }
    out
}

fn completer_only(
    objective: &RequirementObjective<'_>,
    grammar: &Grammar<'_>,
    completer: &mut dyn Completer,
) -> Result<SearchOutcome, SearchError> {
    let started = Instant::now();
    let prefix = [Token::Start];
    let seq = completer.complete(&objective.req, &prefix)?;
    let ok = honours_prefix(&prefix, &seq, grammar);
    let eval = if ok { objective.evaluate(&seq) } else { super::Evaluation::INVALID };
    Ok(SearchOutcome {
        best: ok.then_some(super::Candidate { sequence: seq, eval, index: 0 }),
        evaluations: 1,
        feasible_evaluations: usize::from(eval.feasible),
        history: Vec::new(),
        root_children: Vec::new(),
        elapsed: started.elapsed(),
    })
}

fn reborrow<'a>(c: &'a mut Option<&mut dyn Completer>) -> Option<&'a mut dyn Completer> {
    match c {
        Some(c) => Some(&mut **c),
        None => None,
    }
}

/// Runs every method on every problem with paired seeds and scores the
/// returned sequences with [`evaluate_set`]. A problem whose search returns
/// nothing contributes an empty (invalid) sequence.
pub fn run_benchmark(
    problems: &[Requirements],
    methods: &[Method],
    cfg: &BenchmarkConfig,
    cat: &Catalogue,
    mut completer: Option<&mut dyn Completer>,
) -> Result<Vec<MethodReport>, SearchError> {
    let grammar = Grammar::with_max_components(cat, cfg.search.max_components);
    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        if method.needs_completer() && completer.is_none() {
            return Err(SearchError::InvalidConfig(format!("method {method} needs a completer")));
        }
        let started = Instant::now();
        let mut pairs = Vec::with_capacity(problems.len());
        let mut outcomes = Vec::with_capacity(problems.len());
        let mut evaluations = 0usize;
        for (i, req) in problems.iter().enumerate() {
            let objective = RequirementObjective::new(*req, cfg.weights, cat);
            let sc = SearchConfig { budget: cfg.budget(method), seed: cfg.search.seed.wrapping_add(i as u64), ..cfg.search };
            let out = match method {
                Method::Eda => eda_search(&objective, &sc, cat, None)?,
                Method::Mcts => mcts_search(&objective, &sc, cat, None)?,
                Method::Random => random_search(&objective, &sc, cat)?,
                Method::EdaCompleter => eda_search(&objective, &sc, cat, reborrow(&mut completer))?,
                Method::MctsCompleter => mcts_search(&objective, &sc, cat, reborrow(&mut completer))?,
                Method::Completer => completer_only(&objective, &grammar, reborrow(&mut completer).expect("checked above"))?,
            };
            evaluations += out.evaluations;
            let best = out.best.as_ref();
            pairs.push((*req, best.map_or_else(|| GearSequence::new(Vec::new()), |c| c.sequence.clone())));
            outcomes.push(ProblemOutcome {
                best: best.map(|c| c.sequence.to_string()),
                score: best.map(|c| c.eval.score),
                feasible: best.is_some_and(|c| c.eval.feasible),
                evaluations: out.evaluations,
            });
        }
        let wall = started.elapsed().as_secs_f64();
        reports.push(MethodReport {
            method,
            candidates_per_problem: cfg.budget(method),
            report: evaluate_set(&pairs, cat),
            feasible_best: outcomes.iter().filter(|o| o.feasible).count(),
            wall_seconds: wall,
            seconds_per_candidate: if evaluations == 0 { 0.0 } else { wall / evaluations as f64 },
            problems: outcomes,
        });
    }
    Ok(reports)
}
