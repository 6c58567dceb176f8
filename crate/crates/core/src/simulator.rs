//! Steady-state kinematic propagation along a gear-train sequence.
//!
//! Conventions: the input frame sits at the origin with motion axis `+e0`
//! and unit speed. Rotation sense is carried by the sign of the axis; the
//! speed ratio is always a positive magnitude. A mesh token `(k, sign)`
//! places the next part along `sign * e_{(i + k) mod 3}` where `e_i` is the
//! current motion axis.

use serde::Serialize;
use thiserror::Error;

use crate::catalogue::{Catalogue, ComponentType, PartId, PartRecord};
use crate::dsl::{validate_grammar, GearSequence, GrammarViolation, Token};
use crate::feasibility::Aabb;
use crate::geometry::{add, scale, Axis, Sign, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionType {
    Rotation,
    Translation,
}

impl MotionType {
    /// 1 for translation, 0 for rotation.
    pub fn code(self) -> u8 {
        match self {
            MotionType::Rotation => 0,
            MotionType::Translation => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(MotionType::Rotation),
            1 => Some(MotionType::Translation),
            _ => None,
        }
    }
}

/// The kinematic frame carried from one component to the next.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameState {
    pub position: Vec3,
    pub axis: Axis,
    pub motion_type: MotionType,
    pub speed_ratio: f64,
}

impl FrameState {
    pub fn initial() -> Self {
        FrameState {
            position: [0.0; 3],
            axis: Axis::X,
            motion_type: MotionType::Rotation,
            speed_ratio: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    pub part: PartId,
    pub center: Vec3,
    pub axis: Axis,
    /// World-frame box size along x, y, z.
    pub extent: Vec3,
}

impl Placement {
    pub fn aabb(&self) -> Aabb {
        let half = scale(self.extent, 0.5);
        Aabb::new(
            [self.center[0] - half[0], self.center[1] - half[1], self.center[2] - half[2]],
            add(self.center, half),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// Speed ratio s(X).
    pub s: f64,
    /// Output position p(X).
    pub p: Vec3,
    /// Output motion vector m(X).
    pub m: Axis,
    pub tau_in: MotionType,
    pub tau_out: MotionType,
    /// Total weight f_w.
    pub weight_kg: f64,
    pub placements: Vec<Placement>,
    /// Ratio contributed by each mesh, in sequence order.
    pub mesh_factors: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("sequence is not grammatical: {0}")]
    InvalidSequence(#[from] GrammarViolation),
    #[error("cannot translate a translating member")]
    TranslationOnRack,
    #[error("{0} is not a shaft")]
    NotAShaft(PartId),
    #[error("{a} does not mesh with {b}")]
    IncompatibleMesh { a: PartId, b: PartId },
}

/// Result of one mesh step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStep {
    pub frame: FrameState,
    /// Ratio multiplied into the cumulative speed.
    pub factor: f64,
    /// Placement direction of the driven part.
    pub direction: Axis,
}

/// Moves the frame along a shaft: `position += sign * |axis| * length`.
pub fn apply_translate(state: FrameState, sign: Sign, shaft: &PartRecord) -> Result<FrameState, SimError> {
    if state.motion_type != MotionType::Rotation {
        return Err(SimError::TranslationOnRack);
    }
    if shaft.component_type != ComponentType::Shaft {
        return Err(SimError::NotAShaft(shaft.id));
    }
    let dir = Axis::new(state.axis.index, sign);
    Ok(FrameState {
        position: add(state.position, scale(dir.vector(), shaft.length())),
        ..state
    })
}

fn perpendicular_pair(a: ComponentType, b: ComponentType) -> bool {
    use ComponentType::*;
    matches!(
        (a, b),
        (BevelGear, BevelGear)
            | (MiterGear, MiterGear)
            | (Worm, WormWheel)
            | (WormWheel, Worm)
            | (HypoidPinion, HypoidRing)
            | (HypoidRing, HypoidPinion)
    )
}

fn teeth_ratio(cur: &PartRecord, next: &PartRecord) -> f64 {
    let zc = cur.teeth.unwrap_or(1) as f64;
    let zn = next.teeth.unwrap_or(1) as f64;
    zc / zn
}

/// Places `next` relative to `cur` according to a mesh token.
///
/// * spur -> spur: centres `r_cur + r_next` apart along the placement
///   direction `d`, axis sense flips, ratio `N_cur / N_next`;
/// * bevel, miter, worm and hypoid pairs: centre moves by
///   `d * r_cur + |axis| * r_next`, the new axis is `d`, ratio by teeth
///   (a worm counts as one tooth);
/// * rack -> pinion: pinion centre `r` along `d`, rotation axis `d x t`
///   for rack travel `t`, ratio `1 / r`;
/// * pinion -> rack: rack pitch line `r` along `d`, travel `d x axis`,
///   ratio `r`.
pub fn apply_mesh(state: FrameState, token: Token, cur: &PartRecord, next: &PartRecord) -> Result<MeshStep, SimError> {
    let (which, sign) = match token {
        Token::Mesh(which, sign) => (which, sign),
        _ => panic!("apply_mesh called with non-mesh token {token}"),
    };
    if !cur.mesh_partners.contains(&next.id) {
        return Err(SimError::IncompatibleMesh { a: cur.id, b: next.id });
    }
    let d = state.axis.perpendicular(which.step(), sign);
    let dv = d.vector();
    let (ct, nt) = (cur.component_type, next.component_type);
    let (position, axis, motion_type, factor) = match (ct, nt) {
        (ComponentType::SpurGear, ComponentType::SpurGear) => (
            add(state.position, scale(dv, cur.radius() + next.radius())),
            -state.axis,
            MotionType::Rotation,
            teeth_ratio(cur, next),
        ),
        (ComponentType::Rack, ComponentType::SpurGear) => (
            add(state.position, scale(dv, next.radius())),
            d.cross(state.axis).expect("d is perpendicular to the axis"),
            MotionType::Rotation,
            1.0 / next.radius(),
        ),
        (ComponentType::SpurGear, ComponentType::Rack) => (
            add(state.position, scale(dv, cur.radius())),
            d.cross(state.axis).expect("d is perpendicular to the axis"),
            MotionType::Translation,
            cur.radius(),
        ),
        (a, b) if perpendicular_pair(a, b) => (
            add(
                add(state.position, scale(dv, cur.radius())),
                scale(state.axis.unsigned().vector(), next.radius()),
            ),
            d,
            MotionType::Rotation,
            teeth_ratio(cur, next),
        ),
        _ => return Err(SimError::IncompatibleMesh { a: cur.id, b: next.id }),
    };
    Ok(MeshStep {
        frame: FrameState {
            position,
            axis,
            motion_type,
            speed_ratio: state.speed_ratio * factor,
        },
        factor,
        direction: d,
    })
}

/// f_w: sum of component weights; interface tokens weigh nothing.
pub fn weight_of(seq: &GearSequence, cat: &Catalogue) -> f64 {
    seq.parts().map(|p| cat.part(p).weight_kg).sum()
}

/// World extent of a part whose motion axis lies on `axial` and whose first
/// transverse dimension lies on `first`.
fn oriented_extent(bbox: [f64; 3], axial: u8, first: u8) -> Vec3 {
    let third = 3 - axial - first;
    let mut e = [0.0; 3];
    e[axial as usize] = bbox[0];
    e[first as usize] = bbox[1];
    e[third as usize] = bbox[2];
    e
}

fn gear_extent(rec: &PartRecord, axis: Axis) -> Vec3 {
    oriented_extent(rec.bbox_m, axis.index, (axis.index + 1) % 3)
}

/// Runs the kinematic simulation for a grammatical sequence.
pub fn simulate(seq: &GearSequence, cat: &Catalogue) -> Result<SimResult, SimError> {
    validate_grammar(seq, cat)?;

    let mut frame = FrameState::initial();
    let mut placements: Vec<Placement> = Vec::with_capacity(seq.component_count());
    let mut mesh_factors = Vec::new();
    let mut prev: Option<&PartRecord> = None;
    let mut pending: Option<Token> = None;
    // direction of the last shaft and the half width of the gear it left from
    let mut shaft_run: Option<(Axis, Option<f64>)> = None;

    for &token in &seq.tokens[1..seq.tokens.len() - 1] {
        let id = match token {
            Token::Part(id) => id,
            iface => {
                pending = Some(iface);
                continue;
            }
        };
        let rec = cat.part(id);
        match (prev, pending.take()) {
            (_, Some(Token::Tra(sign))) => {
                let dir = Axis::new(frame.axis.index, sign);
                let start = frame.position;
                frame = apply_translate(frame, sign, rec)?;
                placements.push(Placement {
                    part: id,
                    center: add(start, scale(dir.vector(), rec.length() / 2.0)),
                    axis: frame.axis,
                    extent: gear_extent(rec, dir),
                });
                shaft_run = Some((dir, prev.map(|g| g.bbox_m[0] / 2.0)));
            }
            (None, None) => {
                // Rack driving the train: travel along the input axis. Its
                // transverse orientation is fixed once the mesh is known.
                frame.motion_type = MotionType::Translation;
                placements.push(Placement {
                    part: id,
                    center: frame.position,
                    axis: frame.axis,
                    extent: [0.0; 3],
                });
            }
            (Some(_), None) => {
                // Gear mounted on the end of the previous shaft. SH-* puts it
                // face to face with the gear the shaft started from.
                let (dir, from_half) = shaft_run.expect("mounted gear follows a shaft");
                let shaft_len = prev.map(|s| s.length()).unwrap_or(0.0);
                if let (true, Some(h)) = (shaft_len == 0.0, from_half) {
                    frame.position = add(frame.position, scale(dir.vector(), h + rec.bbox_m[0] / 2.0));
                }
                placements.push(Placement {
                    part: id,
                    center: frame.position,
                    axis: frame.axis,
                    extent: gear_extent(rec, frame.axis),
                });
            }
            (Some(cur), Some(mesh @ Token::Mesh(..))) => {
                let step = apply_mesh(frame, mesh, cur, rec)?;
                mesh_factors.push(step.factor);
                if cur.component_type == ComponentType::Rack {
                    let head = placements.last_mut().expect("rack placed");
                    head.extent = oriented_extent(cur.bbox_m, frame.axis.index, step.direction.index);
                }
                frame = step.frame;
                let extent = if rec.component_type == ComponentType::Rack {
                    oriented_extent(rec.bbox_m, frame.axis.index, step.direction.index)
                } else {
                    gear_extent(rec, frame.axis)
                };
                placements.push(Placement {
                    part: id,
                    center: frame.position,
                    axis: frame.axis,
                    extent,
                });
            }
            (_, Some(other)) => unreachable!("validated sequence has no {other} before a part"),
        }
        prev = Some(rec);
    }

    let first = seq.parts().next().expect("valid sequences have a component");
    let last = seq.parts().last().expect("valid sequences have a component");
    let motion = |p: PartId| {
        if cat.component_type(p) == ComponentType::Rack {
            MotionType::Translation
        } else {
            MotionType::Rotation
        }
    };
    Ok(SimResult {
        s: frame.speed_ratio,
        p: frame.position,
        m: frame.axis,
        tau_in: motion(first),
        tau_out: motion(last),
        weight_kg: weight_of(seq, cat),
        placements,
        mesh_factors,
    })
}

/// Machine-readable form of a [`SimResult`]; field order is fixed, SI units.
#[derive(Clone, Debug, Serialize)]
pub struct SimRecord {
    pub s: f64,
    pub p: Vec3,
    pub m_index: u8,
    pub m_sign: i8,
    pub tau_in: MotionType,
    pub tau_out: MotionType,
    pub weight_kg: f64,
    pub placements: Vec<PlacementRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlacementRecord {
    pub part: &'static str,
    pub center: Vec3,
    pub axis: String,
    pub extent: Vec3,
}

impl SimResult {
    pub fn to_record(&self) -> SimRecord {
        SimRecord {
            s: self.s,
            p: self.p,
            m_index: self.m.index,
            m_sign: self.m.sign.value() as i8,
            tau_in: self.tau_in,
            tau_out: self.tau_out,
            weight_kg: self.weight_kg,
            placements: self
                .placements
                .iter()
                .map(|p| PlacementRecord {
                    part: p.part.part_number(),
                    center: p.center,
                    axis: p.axis.to_string(),
                    extent: p.extent,
                })
                .collect(),
        }
    }
}
