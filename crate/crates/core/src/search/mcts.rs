use std::time::Instant;

use crate::catalogue::Catalogue;
use crate::datasetgen::draw_rng;
use crate::dsl::{Cursor, Grammar, State, Token};
use crate::search::completer::Completer;
use crate::search::{
    complete_prefixes, BestTracker, ChildStat, Evaluation, Objective, SearchConfig, SearchError, SearchOutcome,
};

/// Upper confidence bound `R/v + c * sqrt(ln V / v)`; unvisited nodes score
/// `+inf` so they are tried before any visited sibling.
pub fn ucb(r: f64, v: u64, parent_visits: u64, c: f64) -> f64 {
    if v == 0 {
        return f64::INFINITY;
    }
    let v = v as f64;
    r / v + c * ((parent_visits as f64).ln() / v).sqrt()
}

struct Node {
    token: Token,
    cursor: Cursor,
    parent: Option<usize>,
    children: Vec<usize>,
    expanded: bool,
    depth: usize,
    reward: f64,
    visits: u64,
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn prefix(&self, mut id: usize) -> Vec<Token> {
        let mut out = Vec::with_capacity(self.nodes[id].depth);
        loop {
            out.push(self.nodes[id].token);
            match self.nodes[id].parent {
                Some(p) => id = p,
                None => break,
            }
        }
        out.reverse();
        out
    }

    fn expand(&mut self, id: usize, grammar: &Grammar<'_>) {
        let cursor = self.nodes[id].cursor;
        let depth = self.nodes[id].depth;
        for t in grammar.successors(cursor) {
            let child = Node {
                token: t,
                cursor: grammar.step(cursor, t).expect("successor steps"),
                parent: Some(id),
                children: Vec::new(),
                expanded: false,
                depth: depth + 1,
                reward: 0.0,
                visits: 0,
            };
            self.nodes.push(child);
            let cid = self.nodes.len() - 1;
            self.nodes[id].children.push(cid);
        }
        self.nodes[id].expanded = true;
    }

    /// Tree policy: descend by UCB, expanding on the way, and stop at the
    /// first unvisited node, a terminal node or the depth cap.
    fn select(&mut self, grammar: &Grammar<'_>, c: f64, depth_cap: Option<usize>) -> Vec<usize> {
        let mut id = 0;
        let mut path = vec![0];
        loop {
            let node = &self.nodes[id];
            if node.cursor.state == State::Done || depth_cap.is_some_and(|d| node.depth >= d) {
                break;
            }
            if !node.expanded {
                self.expand(id, grammar);
            }
            let parent_visits = self.nodes[id].visits;
            let mut pick = None;
            let mut top = f64::NEG_INFINITY;
            for &ch in &self.nodes[id].children {
                let n = &self.nodes[ch];
                let h = ucb(n.reward, n.visits, parent_visits, c);
                if pick.is_none() || h > top {
                    pick = Some(ch);
                    top = h;
                }
            }
            id = pick.expect("non-terminal cursors have successors");
            path.push(id);
            if self.nodes[id].visits == 0 {
                break;
            }
        }
        path
    }

    fn backpropagate(&mut self, path: &[usize], reward: f64) {
        for &id in path {
            self.nodes[id].visits += 1;
            self.nodes[id].reward += reward;
        }
    }
}

/// Monte Carlo tree search over tokens with reward `1 / (1 + score)`.
///
/// Rollouts complete the selected prefix uniformly at random, or through
/// `completer` when one is given. In that hybrid mode the tree stops growing
/// at `prefix_len` tokens. Each rollout is one candidate evaluation.
pub fn mcts_search(
    objective: &dyn Objective,
    cfg: &SearchConfig,
    cat: &Catalogue,
    completer: Option<&mut dyn Completer>,
) -> Result<SearchOutcome, SearchError> {
    run(objective, cfg, cat, completer).map(|(out, _)| out)
}

fn run(
    objective: &dyn Objective,
    cfg: &SearchConfig,
    cat: &Catalogue,
    mut completer: Option<&mut dyn Completer>,
) -> Result<(SearchOutcome, Tree), SearchError> {
    cfg.check()?;
    if cfg.budget == 0 {
        return Err(SearchError::BudgetTooSmall { budget: 0, population: 1 });
    }
    let started = Instant::now();
    let grammar = Grammar::with_max_components(cat, cfg.max_components);
    let depth_cap = completer.is_some().then_some(cfg.prefix_len);
    let root_cursor = grammar.step(grammar.initial(), Token::Start).expect("start is allowed");
    let mut tree = Tree {
        nodes: vec![Node {
            token: Token::Start,
            cursor: root_cursor,
            parent: None,
            children: Vec::new(),
            expanded: false,
            depth: 1,
            reward: 0.0,
            visits: 0,
        }],
    };

    let mut best = BestTracker::default();
    let mut feasible = 0usize;
    for k in 0..cfg.budget {
        let path = tree.select(&grammar, cfg.c, depth_cap);
        let prefix = tree.prefix(*path.last().expect("path holds the root"));
        let seq = match completer.as_deref_mut() {
            Some(c) => complete_prefixes(c, objective, &grammar, &[prefix])?.pop().flatten(),
            None => Some(
                grammar
                    .complete_with(&prefix, &mut draw_rng(cfg.seed, k as u64))
                    .expect("tree prefixes are extendable"),
            ),
        };
        let eval = seq.as_ref().map_or(Evaluation::INVALID, |s| objective.evaluate(s));
        if let Some(s) = &seq {
            best.offer(s, eval, k);
        }
        feasible += usize::from(eval.feasible);
        tree.backpropagate(&path, 1.0 / (1.0 + eval.score));
    }

    let root_children = tree.nodes[0]
        .children
        .iter()
        .map(|&ch| {
            let n = &tree.nodes[ch];
            ChildStat { token: n.token.to_string(), reward: n.reward, visits: n.visits }
        })
        .collect();
    let out = SearchOutcome {
        best: best.best,
        evaluations: cfg.budget,
        feasible_evaluations: feasible,
        history: Vec::new(),
        root_children,
        elapsed: started.elapsed(),
    };
    Ok((out, tree))
}
