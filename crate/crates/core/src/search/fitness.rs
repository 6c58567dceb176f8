//! Scalar objective that ranks candidates against a requirement vector.

use serde::Serialize;

use crate::catalogue::Catalogue;
use crate::datasetgen::Requirements;
use crate::dsl::GearSequence;
use crate::feasibility::check_interference;
use crate::geometry::distance;
use crate::simulator::simulate;

/// Score given to sequences the simulator rejects.
pub const INVALID_SCORE: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitnessWeights {
    pub w_pos: f64,
    pub w_speed: f64,
    pub w_motvec: f64,
    pub w_inmot: f64,
    pub w_outmot: f64,
    pub w_feas: f64,
    pub w_weight: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights {
            w_pos: 1.0,
            w_speed: 1.0,
            w_motvec: 1.0,
            w_inmot: 1.0,
            w_outmot: 1.0,
            w_feas: 10.0,
            w_weight: 0.01,
        }
    }
}

impl FitnessWeights {
    pub fn to_array(&self) -> [f64; 7] {
        [self.w_pos, self.w_speed, self.w_motvec, self.w_inmot, self.w_outmot, self.w_feas, self.w_weight]
    }

    /// `Err` unless every weight is finite and non-negative and one is positive.
    pub fn check(&self) -> Result<(), String> {
        let w = self.to_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(format!("fitness weights must be finite and non-negative: {w:?}"));
        }
        if w.iter().all(|&x| x == 0.0) {
            return Err("at least one fitness weight must be positive".into());
        }
        Ok(())
    }
}

/// Unweighted residuals of a simulable candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitnessBreakdown {
    pub pos_err: f64,
    pub speed_err: f64,
    /// `(1 - m~ . m) / 2`: 0 aligned, 0.5 perpendicular, 1 opposite.
    pub motvec_err: f64,
    pub inmot_mismatch: bool,
    pub outmot_mismatch: bool,
    pub infeasible: bool,
    pub weight_kg: f64,
}

impl FitnessBreakdown {
    pub fn score(&self, w: &FitnessWeights) -> f64 {
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        w.w_pos * self.pos_err
            + w.w_speed * self.speed_err
            + w.w_motvec * self.motvec_err
            + w.w_inmot * ind(self.inmot_mismatch)
            + w.w_outmot * ind(self.outmot_mismatch)
            + w.w_feas * ind(self.infeasible)
            + w.w_weight * self.weight_kg
    }
}

/// `None` when the sequence cannot be simulated.
pub fn fitness_breakdown(req: &Requirements, seq: &GearSequence, cat: &Catalogue) -> Option<FitnessBreakdown> {
    let res = simulate(seq, cat).ok()?;
    Some(FitnessBreakdown {
        pos_err: distance(req.p, res.p),
        speed_err: (req.s.ln() - res.s.ln()).abs(),
        motvec_err: (1.0 - req.m.dot(res.m)) / 2.0,
        inmot_mismatch: req.tau_in != res.tau_in,
        outmot_mismatch: req.tau_out != res.tau_out,
        infeasible: !check_interference(&res.placements).is_feasible(),
        weight_kg: res.weight_kg,
    })
}

/// Lower is better; invalid sequences score [`INVALID_SCORE`].
pub fn fitness(req: &Requirements, seq: &GearSequence, weights: &FitnessWeights, cat: &Catalogue) -> f64 {
    fitness_breakdown(req, seq, cat).map_or(INVALID_SCORE, |b| b.score(weights))
}

/// Outcome of scoring one candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub score: f64,
    pub valid: bool,
    pub feasible: bool,
}

impl Evaluation {
    pub const INVALID: Evaluation = Evaluation { score: INVALID_SCORE, valid: false, feasible: false };
}

/// Anything the searches can minimise.
pub trait Objective: Sync {
    fn evaluate(&self, seq: &GearSequence) -> Evaluation;

    /// Requirements handed to a completer in hybrid mode.
    fn requirements(&self) -> Option<&Requirements> {
        None
    }
}

/// The weighted requirement residual.
#[derive(Clone, Copy, Debug)]
pub struct RequirementObjective<'c> {
    pub req: Requirements,
    pub weights: FitnessWeights,
    pub cat: &'c Catalogue,
}

impl<'c> RequirementObjective<'c> {
    pub fn new(req: Requirements, weights: FitnessWeights, cat: &'c Catalogue) -> Self {
        RequirementObjective { req, weights, cat }
    }
}

impl Objective for RequirementObjective<'_> {
    fn evaluate(&self, seq: &GearSequence) -> Evaluation {
        match fitness_breakdown(&self.req, seq, self.cat) {
            Some(b) => Evaluation { score: b.score(&self.weights), valid: true, feasible: !b.infeasible },
            None => Evaluation::INVALID,
        }
    }

    fn requirements(&self) -> Option<&Requirements> {
        Some(&self.req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasetgen::encode_requirements;
    use crate::geometry::Axis;

    const HARD: FitnessWeights = FitnessWeights {
        w_pos: 1.0,
        w_speed: 1.0,
        w_motvec: 1.0,
        w_inmot: 1.0,
        w_outmot: 1.0,
        w_feas: 1.0,
        w_weight: 0.0,
    };

    fn own_req(s: &str, cat: &Catalogue) -> (Requirements, GearSequence) {
        let seq: GearSequence = s.parse().unwrap();
        (encode_requirements(&simulate(&seq, cat).unwrap()), seq)
    }

    #[test]
    fn own_requirements_score_zero() {
        let cat = Catalogue::builtin();
        let (req, seq) = own_req("<start> tra+ SH-100 MSGA2-18 mesh_1p MSGA2-60 <end>", &cat);
        assert_eq!(fitness(&req, &seq, &HARD, &cat), 0.0);
        let with_weight = fitness(&req, &seq, &FitnessWeights::default(), &cat);
        let w = simulate(&seq, &cat).unwrap().weight_kg;
        assert!((with_weight - 0.01 * w).abs() < 1e-12);
    }

    #[test]
    fn flipped_motion_vector_costs_w_motvec() {
        let cat = Catalogue::builtin();
        let (mut req, seq) = own_req("<start> tra+ SH-100 <end>", &cat);
        req.m = -req.m;
        assert_eq!(fitness(&req, &seq, &HARD, &cat), 1.0);
        req.m = Axis::Y;
        assert_eq!(fitness(&req, &seq, &HARD, &cat), 0.5);
    }

    #[test]
    fn infeasible_adds_w_feas() {
        let cat = Catalogue::builtin();
        let (req, seq) = own_req("<start> tra+ SH-100 MSGA2-40 mesh_1p MSGA2-40 mesh_1n MSGA2-40 <end>", &cat);
        assert_eq!(fitness(&req, &seq, &HARD, &cat), 1.0);
        let w = FitnessWeights { w_feas: 7.5, ..HARD };
        assert_eq!(fitness(&req, &seq, &w, &cat), 7.5);
    }

    #[test]
    fn invalid_gets_sentinel() {
        let cat = Catalogue::builtin();
        let (req, _) = own_req("<start> tra+ SH-100 <end>", &cat);
        let bad: GearSequence = "<start> SH-100 <end>".parse().unwrap();
        assert_eq!(fitness(&req, &bad, &HARD, &cat), INVALID_SCORE);
        let obj = RequirementObjective::new(req, HARD, &cat);
        assert_eq!(obj.evaluate(&bad), Evaluation::INVALID);
    }

    #[test]
    fn weight_checks() {
        assert!(FitnessWeights::default().check().is_ok());
        let zero = FitnessWeights { w_pos: 0.0, w_speed: 0.0, w_motvec: 0.0, w_inmot: 0.0, w_outmot: 0.0, w_feas: 0.0, w_weight: 0.0 };
        assert!(zero.check().is_err());
        assert!(FitnessWeights { w_pos: -1.0, ..FitnessWeights::default() }.check().is_err());
    }
}
