//! Part interference check (g_interfere) over axis-aligned bounding boxes.

use crate::geometry::Vec3;
use crate::simulator::Placement;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        debug_assert!((0..3).all(|i| min[i] <= max[i]), "inverted box");
        Aabb { min, max }
    }

    /// Box of side lengths `size` centred on `center`.
    pub fn centered(center: Vec3, size: Vec3) -> Self {
        let mut min = [0.0; 3];
        let mut max = [0.0; 3];
        for i in 0..3 {
            min[i] = center[i] - size[i] / 2.0;
            max[i] = center[i] + size[i] / 2.0;
        }
        Aabb { min, max }
    }
}

/// Open-interval overlap on all three axes; touching faces do not count.
pub fn boxes_intersect(a: &Aabb, b: &Aabb) -> bool {
    (0..3).all(|i| a.min[i].max(b.min[i]) < a.max[i].min(b.max[i]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interference {
    Feasible,
    /// First colliding pair `(i, j)`, `i < j`, in lexicographic order.
    Collision(usize, usize),
}

impl Interference {
    pub fn is_feasible(self) -> bool {
        self == Interference::Feasible
    }
}

/// Checks every pair of placements except directly connected neighbours.
pub fn check_interference(placements: &[Placement]) -> Interference {
    let boxes: Vec<Aabb> = placements.iter().map(Placement::aabb).collect();
    for i in 0..boxes.len() {
        for j in i + 2..boxes.len() {
            if boxes_intersect(&boxes[i], &boxes[j]) {
                return Interference::Collision(i, j);
            }
        }
    }
    Interference::Feasible
}
