//! Evaluation metrics over (requirements, predicted sequence) pairs.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::catalogue::Catalogue;
use crate::datasetgen::Requirements;
use crate::dsl::GearSequence;
use crate::feasibility::check_interference;
use crate::geometry::distance;
use crate::simulator::{simulate, SimResult};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("speed ratios must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("length mismatch: {0} targets vs {1} achieved")]
    LengthMismatch(usize, usize),
    #[error("no values")]
    Empty,
}

/// Root mean squared log error with natural log of the raw ratios.
pub fn rmsle(targets: &[f64], achieved: &[f64]) -> Result<f64, MetricsError> {
    if targets.len() != achieved.len() {
        return Err(MetricsError::LengthMismatch(targets.len(), achieved.len()));
    }
    if targets.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = targets.iter().chain(achieved).find(|&&x| x.is_nan() || x <= 0.0) {
        return Err(MetricsError::NonPositiveRatio(bad));
    }
    let sum: f64 = targets
        .iter()
        .zip(achieved)
        .map(|(t, a)| (t.ln() - a.ln()).powi(2))
        .sum();
    Ok((sum / targets.len() as f64).sqrt())
}

/// Table-3 style report. Metrics other than validity and feasibility are
/// computed over valid sequences only and are `None` when there are none.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_total: usize,
    pub n_valid: usize,
    pub valid_pct: f64,
    pub feas_pct: f64,
    pub pos_m: Option<f64>,
    pub speed_rmsle: Option<f64>,
    pub motvec_pct: Option<f64>,
    pub inmot_pct: Option<f64>,
    pub outmot_pct: Option<f64>,
    pub weight_kg: Option<f64>,
}

/// Per-pair outcome used by [`evaluate_set`].
#[derive(Clone, Debug)]
pub struct PairOutcome {
    pub sim: Option<SimResult>,
    pub feasible: bool,
}

pub fn evaluate_pair(seq: &GearSequence, cat: &Catalogue) -> PairOutcome {
    match simulate(seq, cat) {
        Ok(res) => {
            let feasible = check_interference(&res.placements).is_feasible();
            PairOutcome { sim: Some(res), feasible }
        }
        Err(_) => PairOutcome { sim: None, feasible: false },
    }
}

fn pct(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Scores predictions against their requirement vectors.
pub fn evaluate_set(pairs: &[(Requirements, GearSequence)], cat: &Catalogue) -> EvalReport {
    let outcomes: Vec<PairOutcome> = pairs.par_iter().map(|(_, seq)| evaluate_pair(seq, cat)).collect();

    let n_total = pairs.len();
    let valid: Vec<(&Requirements, &SimResult)> = pairs
        .iter()
        .zip(&outcomes)
        .filter_map(|((req, _), o)| o.sim.as_ref().map(|s| (req, s)))
        .collect();
    let n_valid = valid.len();
    let n_feasible = outcomes.iter().filter(|o| o.feasible).count();

    let (pos_m, speed_rmsle, motvec_pct, inmot_pct, outmot_pct, weight_kg) = if n_valid == 0 {
        (None, None, None, None, None, None)
    } else {
        let n = n_valid as f64;
        let pos = valid.iter().map(|(r, s)| distance(r.p, s.p)).sum::<f64>() / n;
        let targets: Vec<f64> = valid.iter().map(|(r, _)| r.s).collect();
        let achieved: Vec<f64> = valid.iter().map(|(_, s)| s.s).collect();
        let speed = rmsle(&targets, &achieved).expect("simulated and required ratios are positive");
        let count = |f: &dyn Fn(&Requirements, &SimResult) -> bool| valid.iter().filter(|(r, s)| f(r, s)).count();
        let motvec = count(&|r, s| r.m.dot(s.m) == 1.0);
        let inmot = count(&|r, s| r.tau_in == s.tau_in);
        let outmot = count(&|r, s| r.tau_out == s.tau_out);
        let weight = valid.iter().map(|(_, s)| s.weight_kg).sum::<f64>() / n;
        (
            Some(pos),
            Some(speed),
            Some(pct(motvec, n_valid)),
            Some(pct(inmot, n_valid)),
            Some(pct(outmot, n_valid)),
            Some(weight),
        )
    };

    EvalReport {
        n_total,
        n_valid,
        valid_pct: pct(n_valid, n_total),
        feas_pct: pct(n_feasible, n_total),
        pos_m,
        speed_rmsle,
        motvec_pct,
        inmot_pct,
        outmot_pct,
        weight_kg,
    }
}

pub const REPORT_COLUMNS: [&str; 8] = ["Valid%", "Feas%", "Pos(m)", "Speed", "MotVec%", "In-Mot%", "Out-Mot%", "Weight(kg)"];

fn cell(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(x) => format!("{x:.decimals$}"),
        None => "-".to_string(),
    }
}

impl EvalReport {
    /// Cells in column order of [`REPORT_COLUMNS`].
    pub fn cells(&self) -> [String; 8] {
        [
            cell(Some(self.valid_pct), 2),
            cell(Some(self.feas_pct), 2),
            cell(self.pos_m, 3),
            cell(self.speed_rmsle, 4),
            cell(self.motvec_pct, 2),
            cell(self.inmot_pct, 2),
            cell(self.outmot_pct, 2),
            cell(self.weight_kg, 2),
        ]
    }

    pub fn header_line(label_width: usize) -> String {
        let mut s = format!("{:<label_width$}", "");
        for c in REPORT_COLUMNS {
            s.push_str(&format!(" {c:>10}"));
        }
        s
    }

    pub fn row_line(&self, label: &str, label_width: usize) -> String {
        let mut s = format!("{label:<label_width$}");
        for c in self.cells() {
            s.push_str(&format!(" {c:>10}"));
        }
        s
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", EvalReport::header_line(8))?;
        write!(f, "{}", self.row_line(&format!("n={}", self.n_total), 8))
    }
}
