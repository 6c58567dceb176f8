use std::time::Instant;

use rayon::prelude::*;

use crate::catalogue::Catalogue;
use crate::datasetgen::draw_rng;
use crate::dsl::{GearSequence, Grammar};
use crate::search::{BestTracker, Objective, SearchConfig, SearchError, SearchOutcome};

/// Baseline: `budget` independent uniform grammar draws, best kept. Draw `k`
/// uses the same RNG stream as candidate `k` of the other searches.
pub fn random_search(objective: &dyn Objective, cfg: &SearchConfig, cat: &Catalogue) -> Result<SearchOutcome, SearchError> {
    cfg.check()?;
    let started = Instant::now();
    let grammar = Grammar::with_max_components(cat, cfg.max_components);
    let scored: Vec<(GearSequence, _)> = (0..cfg.budget as u64)
        .into_par_iter()
        .map(|k| {
            let s = grammar.random_with(&mut draw_rng(cfg.seed, k));
            let e = objective.evaluate(&s);
            (s, e)
        })
        .collect();
    let mut best = BestTracker::default();
    for (k, (s, e)) in scored.iter().enumerate() {
        best.offer(s, *e, k);
    }
    Ok(SearchOutcome {
        best: best.best,
        evaluations: scored.len(),
        feasible_evaluations: scored.iter().filter(|(_, e)| e.feasible).count(),
        history: Vec::new(),
        root_children: Vec::new(),
        elapsed: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{FitnessWeights, RequirementObjective};

    #[test]
    fn counts_and_determinism() {
        let cat = Catalogue::builtin();
        let req = "0 0 1 0.3 0 0 0 1".parse().unwrap();
        let obj = RequirementObjective::new(req, FitnessWeights::default(), &cat);
        let cfg = SearchConfig { budget: 500, seed: 3, ..SearchConfig::default() };
        let a = random_search(&obj, &cfg, &cat).unwrap();
        assert_eq!(a.evaluations, 500);
        assert!(a.feasible_evaluations > 0 && a.feasible_evaluations < 500);
        assert_eq!(a.best, random_search(&obj, &cfg, &cat).unwrap().best);
    }
}
