use std::time::Instant;

use rayon::prelude::*;

use crate::catalogue::Catalogue;
use crate::datasetgen::draw_rng;
use crate::dsl::{GearSequence, Grammar, Token, MAX_TOKENS};
use crate::search::bigram::{AllowedPairs, BigramModel};
use crate::search::completer::Completer;
use crate::search::{
    complete_prefixes, evaluate_all, BestTracker, GenerationStats, Objective, SearchConfig, SearchError, SearchOutcome,
};

/// Estimation-of-distribution search with a grammar-masked bi-gram model.
///
/// Without a completer every sample is a full sequence. With one, the model
/// samples `prefix_len` tokens, the completer finishes them, and the model
/// is refit on the prefixes of the elite. Exactly `budget` candidates are
/// evaluated: `budget / population` full generations plus one partial
/// generation for any remainder.
pub fn eda_search(
    objective: &dyn Objective,
    cfg: &SearchConfig,
    cat: &Catalogue,
    mut completer: Option<&mut dyn Completer>,
) -> Result<SearchOutcome, SearchError> {
    cfg.check()?;
    if cfg.budget < cfg.population {
        return Err(SearchError::BudgetTooSmall { budget: cfg.budget, population: cfg.population });
    }
    let started = Instant::now();
    let grammar = Grammar::with_max_components(cat, cfg.max_components);
    let mut model = BigramModel::uniform(AllowedPairs::from_grammar(&grammar));
    let sample_len = if completer.is_some() { cfg.prefix_len } else { MAX_TOKENS };

    let mut sizes = vec![cfg.population; cfg.budget / cfg.population];
    if !cfg.budget.is_multiple_of(cfg.population) {
        sizes.push(cfg.budget % cfg.population);
    }

    let mut best = BestTracker::default();
    // elite carried between generations: (score, global index, sampled tokens)
    let mut elite_pool: Vec<(f64, usize, Vec<Token>)> = Vec::new();
    let mut history = Vec::with_capacity(sizes.len());
    let mut evaluated = 0usize;
    let mut feasible_total = 0usize;
    for (generation, &size) in sizes.iter().enumerate() {
        let base = evaluated as u64;
        let samples: Vec<Vec<Token>> = (0..size as u64)
            .into_par_iter()
            .map(|k| model.sample(&grammar, sample_len, &mut draw_rng(cfg.seed, base + k)))
            .collect();
        let seqs: Vec<Option<GearSequence>> = match completer.as_deref_mut() {
            Some(c) => complete_prefixes(c, objective, &grammar, &samples)?,
            None => samples.iter().map(|t| Some(GearSequence::new(t.clone()))).collect(),
        };
        let evals = evaluate_all(objective, &seqs);

        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| evals[a].score.total_cmp(&evals[b].score).then(a.cmp(&b)));
        let n_elite = cfg.elite_count(cfg.population);
        elite_pool.extend(order.iter().take(n_elite).map(|&i| (evals[i].score, evaluated + i, samples[i].clone())));
        elite_pool.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        elite_pool.truncate(n_elite);
        let elite: Vec<&[Token]> = elite_pool.iter().map(|(_, _, t)| t.as_slice()).collect();
        model.refit(&elite, cfg.smoothing);

        for (k, (s, e)) in seqs.iter().zip(&evals).enumerate() {
            if let Some(s) = s {
                best.offer(s, *e, evaluated + k);
            }
        }
        let feasible = evals.iter().filter(|e| e.feasible).count();
        feasible_total += feasible;
        evaluated += size;
        history.push(GenerationStats {
            generation,
            evaluated: size,
            best_score: evals[order[0]].score,
            mean_score: evals.iter().map(|e| e.score).sum::<f64>() / size as f64,
            feasible,
        });
    }

    Ok(SearchOutcome {
        best: best.best,
        evaluations: evaluated,
        feasible_evaluations: feasible_total,
        history,
        root_children: Vec::new(),
        elapsed: started.elapsed(),
    })
}
