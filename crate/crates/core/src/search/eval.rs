use serde::{Deserialize, Serialize};

use crate::asset::{apply_pose_into, Placement, Pose, RoadAsset};
use crate::geometry::{disjoint_raw, point_line_distance, Point2, Space};

/// Smallest contribution of any single violation, in meters. Keeps the
/// merit function strictly positive whenever a constraint fails.
const VIOLATION_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub collision: f64,
    pub containment: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            collision: 1.0,
            containment: 1.0,
        }
    }
}

/// How far the colliding pair `a-b`, `c-d` is from separating: the shortest
/// perpendicular distance of an endpoint to the other segment's line.
fn penetration(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let depth = point_line_distance(a, c, d)
        .min(point_line_distance(b, c, d))
        .min(point_line_distance(c, a, b))
        .min(point_line_distance(d, a, b));
    depth.max(VIOLATION_FLOOR)
}

fn pair_penalty(
    ai: &RoadAsset,
    wi: &[Point2],
    aj: &RoadAsset,
    wj: &[Point2],
    eps: f64,
) -> f64 {
    let mut sum = 0.0;
    for &(pa, pb) in &ai.segments {
        let (a, b) = (wi[pa], wi[pb]);
        for &(qa, qb) in &aj.segments {
            let (c, d) = (wj[qa], wj[qb]);
            if !disjoint_raw(a, b, c, d, eps) {
                sum += penetration(a, b, c, d);
            }
        }
    }
    sum
}

fn containment_penalty(world: &[Point2], space: &Space) -> f64 {
    world
        .iter()
        .filter(|p| !space.contains(**p))
        .map(|p| space.outside_distance(*p).max(VIOLATION_FLOOR))
        .sum()
}

/// Merit function of a placement: weighted penetration over colliding
/// cross-asset segment pairs plus weighted outside distance of stray nodes.
///
/// Zero exactly when the placement has no collision or containment
/// violation; rigidity holds by construction for pose placements.
pub fn penalty(
    assets: &[RoadAsset],
    placement: &Placement,
    space: &Space,
    weights: Weights,
    eps: f64,
) -> f64 {
    placement.debug_check(assets);
    let mut total = 0.0;
    for i in 0..assets.len() {
        total += weights.containment * containment_penalty(placement.world(i), space);
        for j in i + 1..assets.len() {
            total += weights.collision
                * pair_penalty(&assets[i], placement.world(i), &assets[j], placement.world(j), eps);
        }
    }
    total
}

/// Incremental penalty evaluation for annealing: a move touching one or two
/// assets only recomputes their rows.
pub(crate) struct Evaluator<'a> {
    assets: &'a [RoadAsset],
    space: &'a Space,
    weights: Weights,
    eps: f64,
    poses: Vec<Pose>,
    world: Vec<Vec<Point2>>,
    contain: Vec<f64>,
    pair: Vec<f64>,
    total: f64,
    cand_poses: Vec<Pose>,
    cand_world: Vec<Vec<Point2>>,
    cand_contain: Vec<f64>,
    cand_pair: Vec<f64>,
    cand_total: f64,
    cand_changed: Vec<usize>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        assets: &'a [RoadAsset],
        space: &'a Space,
        weights: Weights,
        eps: f64,
        poses: Vec<Pose>,
    ) -> Self {
        let n = assets.len();
        let mut ev = Evaluator {
            assets,
            space,
            weights,
            eps,
            poses: poses.clone(),
            world: vec![Vec::new(); n],
            contain: vec![0.0; n],
            pair: vec![0.0; n * n],
            total: 0.0,
            cand_poses: poses,
            cand_world: vec![Vec::new(); n],
            cand_contain: vec![0.0; n],
            cand_pair: vec![0.0; n * n],
            cand_total: 0.0,
            cand_changed: Vec::new(),
        };
        let all: Vec<usize> = (0..n).collect();
        let cand = ev.poses.clone();
        ev.evaluate(&cand, &all);
        ev.commit();
        ev
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn world(&self) -> &[Vec<Point2>] {
        &self.world
    }

    pub fn candidate_world(&self) -> &[Vec<Point2>] {
        &self.cand_world
    }

    #[cfg(test)]
    pub fn placement(&self) -> Placement {
        Placement::from_poses(self.assets, &self.poses)
    }

    /// Scores `poses`, where only the assets in `changed` differ from the
    /// committed state. The candidate stays pending until [`commit`].
    ///
    /// [`commit`]: Evaluator::commit
    pub fn evaluate(&mut self, poses: &[Pose], changed: &[usize]) -> f64 {
        let n = self.assets.len();
        // Undo rows touched by a previous, uncommitted candidate.
        for &k in &self.cand_changed {
            self.cand_world[k].clone_from(&self.world[k]);
        }
        self.cand_contain.copy_from_slice(&self.contain);
        self.cand_pair.copy_from_slice(&self.pair);
        self.cand_poses.copy_from_slice(poses);
        for &k in changed {
            apply_pose_into(&self.assets[k], &poses[k], &mut self.cand_world[k]);
            self.cand_contain[k] =
                self.weights.containment * containment_penalty(&self.cand_world[k], self.space);
        }
        for &k in changed {
            for j in 0..n {
                if j == k {
                    continue;
                }
                let v = self.weights.collision
                    * pair_penalty(
                        &self.assets[k],
                        &self.cand_world[k],
                        &self.assets[j],
                        &self.cand_world[j],
                        self.eps,
                    );
                self.cand_pair[k * n + j] = v;
                self.cand_pair[j * n + k] = v;
            }
        }
        self.cand_changed.clear();
        self.cand_changed.extend_from_slice(changed);
        let mut total: f64 = self.cand_contain.iter().sum();
        for i in 0..n {
            for j in i + 1..n {
                total += self.cand_pair[i * n + j];
            }
        }
        self.cand_total = total;
        total
    }

    pub fn commit(&mut self) {
        for &k in &self.cand_changed {
            self.world[k].clone_from(&self.cand_world[k]);
        }
        self.cand_changed.clear();
        self.poses.copy_from_slice(&self.cand_poses);
        self.contain.copy_from_slice(&self.cand_contain);
        self.pair.copy_from_slice(&self.cand_pair);
        self.total = self.cand_total;
    }
}
