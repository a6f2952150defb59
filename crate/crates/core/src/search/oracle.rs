//! Exhaustive pose-grid scans for tiny instances. Slow and exact at grid
//! points; used as ground truth for the stochastic searches.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::asset::{apply_pose, check_unique_ids, Placement, Pose, RoadAsset};
use crate::constraints::{feasibility_report, segments_touch, Tolerances};
use crate::geometry::{disjoint_raw, point_segment_distance, Point2, Space};

use super::exec::{find_map_first, map_restarts};
use super::phase2::{betas_of, connectivity_upper_bound, summarize, Phase2Error};
use super::phase1::SolverError;
use super::ExecMode;

pub const MAX_ORACLE_ASSETS: usize = 2;
pub const MAX_ORACLE_NODES: usize = 5;
/// Cap on grid poses per asset.
pub const MAX_GRID_POSES: usize = 2_000_000;

/// Pose grid: centroid positions every `dxy` meters across the space's
/// bounding box, headings every `dtheta` radians over (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dxy: f64,
    pub dtheta: f64,
}

impl Grid {
    pub fn new(dxy: f64, dtheta: f64) -> Self {
        Grid { dxy, dtheta }
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    fn headings(&self) -> Vec<f64> {
        let n = ((2.0 * PI) / self.dtheta - 1e-9).ceil().max(1.0) as usize;
        (0..n).map(|k| PI - k as f64 * self.dtheta).filter(|t| *t > -PI).collect()
    }

    fn size(&self, space: &Space) -> f64 {
        let (lo, hi) = space.bbox();
        let nx = ((hi.x - lo.x) / self.dxy).floor() + 1.0;
        let ny = ((hi.y - lo.y) / self.dxy).floor() + 1.0;
        nx * ny * ((2.0 * PI) / self.dtheta).ceil()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OracleVerdict {
    Feasible { placement: Placement, clearance: f64 },
    Infeasible,
}

impl OracleVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, OracleVerdict::Feasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OracleConnectivity {
    /// No feasible grid placement; `c` is the −1 sentinel.
    Infeasible { c: i64 },
    Max { c: usize, placement: Placement },
}

impl OracleConnectivity {
    pub fn value(&self) -> i64 {
        match self {
            OracleConnectivity::Infeasible { c } => *c,
            OracleConnectivity::Max { c, .. } => *c as i64,
        }
    }
}

fn segment_distance(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    if segments_touch(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// How far a placement is from violating anything: the smallest gap
/// between segments of different assets, or between a node and the
/// space's boundary. Negative when a node is outside.
pub fn clearance(assets: &[RoadAsset], placement: &Placement, space: &Space) -> f64 {
    placement.debug_check(assets);
    let mut m = f64::INFINITY;
    for i in 0..assets.len() {
        for p in placement.world(i) {
            m = m.min(space.inside_margin(*p));
        }
        for j in i + 1..assets.len() {
            let (wi, wj) = (placement.world(i), placement.world(j));
            for &(a, b) in &assets[i].segments {
                for &(c, d) in &assets[j].segments {
                    m = m.min(segment_distance(wi[a], wi[b], wj[c], wj[d]));
                }
            }
        }
    }
    m
}

struct Candidate {
    pose: Pose,
    world: Vec<Point2>,
    margin: f64,
}

fn check_caps(assets: &[RoadAsset], space: &Space, grid: Grid) -> Result<(), String> {
    if !(grid.dxy > 0.0 && grid.dxy.is_finite() && grid.dtheta > 0.0 && grid.dtheta.is_finite()) {
        return Err("grid resolutions must be positive and finite".into());
    }
    if assets.len() > MAX_ORACLE_ASSETS {
        return Err(format!(
            "{} assets exceed the oracle cap of {MAX_ORACLE_ASSETS}",
            assets.len()
        ));
    }
    if let Some(a) = assets.iter().find(|a| a.node_count() > MAX_ORACLE_NODES) {
        return Err(format!(
            "asset `{}` has {} nodes, above the oracle cap of {MAX_ORACLE_NODES}",
            a.id,
            a.node_count()
        ));
    }
    let size = grid.size(space);
    if size > MAX_GRID_POSES as f64 {
        return Err(format!("grid has {size:.0} poses per asset, above {MAX_GRID_POSES}"));
    }
    check_unique_ids(assets).map_err(|e| e.to_string())
}

/// Grid poses of `asset` whose nodes all lie in `space` with margin at
/// least `min_clearance`.
fn contained_poses(
    asset: &RoadAsset,
    space: &Space,
    grid: Grid,
    min_clearance: f64,
    exec: ExecMode,
) -> Vec<Candidate> {
    let (lo, hi) = space.bbox();
    let xs = Grid::axis(lo.x, hi.x, grid.dxy);
    let ys = Grid::axis(lo.y, hi.y, grid.dxy);
    let c = asset.centroid();
    let headings = grid.headings();
    let rows = map_restarts(headings.len(), exec, None, |h| {
        let theta = headings[h];
        let mut out = Vec::new();
        for &y in &ys {
            for &x in &xs {
                let pose = Pose::mapping(c, Point2::new(x, y), theta);
                let world = apply_pose(asset, &pose);
                if !world.iter().all(|p| space.contains(*p)) {
                    continue;
                }
                let margin = world
                    .iter()
                    .map(|p| space.inside_margin(*p))
                    .fold(f64::INFINITY, f64::min);
                if margin >= min_clearance {
                    out.push(Candidate { pose, world, margin });
                }
            }
        }
        out
    });
    rows.into_iter().flatten().collect()
}

fn pair_ok(ai: &RoadAsset, wi: &[Point2], aj: &RoadAsset, wj: &[Point2], eps: f64) -> bool {
    ai.segments.iter().all(|&(a, b)| {
        aj.segments
            .iter()
            .all(|&(c, d)| disjoint_raw(wi[a], wi[b], wj[c], wj[d], eps))
    })
}

fn pair_gap(ai: &RoadAsset, wi: &[Point2], aj: &RoadAsset, wj: &[Point2]) -> f64 {
    let mut m = f64::INFINITY;
    for &(a, b) in &ai.segments {
        for &(c, d) in &aj.segments {
            m = m.min(segment_distance(wi[a], wi[b], wj[c], wj[d]));
        }
    }
    m
}

/// Scans the grid for the first feasible placement (in heading, y, x order
/// of the first asset, then the second) whose clearance is at least
/// `min_clearance`. `accept` filters by the placed world coordinates.
fn scan<T: Send>(
    assets: &[RoadAsset],
    space: &Space,
    grid: Grid,
    tol: Tolerances,
    min_clearance: f64,
    exec: ExecMode,
    accept: impl Fn(&[Vec<Point2>]) -> Option<T> + Sync,
) -> Option<(Vec<Pose>, f64, T)> {
    let cands: Vec<Vec<Candidate>> = assets
        .iter()
        .map(|a| contained_poses(a, space, grid, min_clearance, exec))
        .collect();
    match assets.len() {
        0 => accept(&[]).map(|t| (Vec::new(), f64::INFINITY, t)),
        1 => cands[0].iter().find_map(|c| {
            accept(std::slice::from_ref(&c.world)).map(|t| (vec![c.pose], c.margin, t))
        }),
        _ => {
            let (a0, a1) = (&assets[0], &assets[1]);
            find_map_first(cands[0].len(), exec, |k| {
                let c0 = &cands[0][k];
                cands[1].iter().find_map(|c1| {
                    if !pair_ok(a0, &c0.world, a1, &c1.world, tol.eps) {
                        return None;
                    }
                    let gap = pair_gap(a0, &c0.world, a1, &c1.world);
                    if gap < min_clearance {
                        return None;
                    }
                    let world = [c0.world.clone(), c1.world.clone()];
                    accept(&world).map(|t| (vec![c0.pose, c1.pose], c0.margin.min(c1.margin).min(gap), t))
                })
            })
        }
    }
}

/// Exhaustive placement search over the pose grid. `Infeasible` certifies
/// only that no grid point passes the exact feasibility check.
pub fn oracle_search_placement(
    assets: &[RoadAsset],
    space: &Space,
    grid: Grid,
    tol: Tolerances,
    exec: ExecMode,
) -> Result<OracleVerdict, SolverError> {
    oracle_search_with_clearance(assets, space, grid, tol, 0.0, exec)
}

/// Like [`oracle_search_placement`], but only accepts grid placements
/// whose [`clearance`] is at least `min_clearance`.
pub fn oracle_search_with_clearance(
    assets: &[RoadAsset],
    space: &Space,
    grid: Grid,
    tol: Tolerances,
    min_clearance: f64,
    exec: ExecMode,
) -> Result<OracleVerdict, SolverError> {
    check_caps(assets, space, grid).map_err(SolverError::OracleRefused)?;
    let found = scan(assets, space, grid, tol, min_clearance, exec, |_| Some(()));
    Ok(match found {
        Some((poses, margin, ())) => {
            let placement = Placement::from_poses(assets, &poses);
            debug_assert!(feasibility_report(assets, &placement, space, tol).feasible);
            if !feasibility_report(assets, &placement, space, tol).feasible {
                return Ok(OracleVerdict::Infeasible);
            }
            OracleVerdict::Feasible {
                placement,
                clearance: margin,
            }
        }
        None => OracleVerdict::Infeasible,
    })
}

/// Largest direct connectivity over feasible grid placements with
/// clearance at least `min_clearance`.
pub fn oracle_connectivity_max(
    assets: &[RoadAsset],
    space: &Space,
    grid: Grid,
    tol: Tolerances,
    min_clearance: f64,
    exec: ExecMode,
) -> Result<OracleConnectivity, Phase2Error> {
    check_caps(assets, space, grid).map_err(Phase2Error::OracleRefused)?;
    let betas = betas_of(assets);
    for target in (0..=connectivity_upper_bound(assets)).rev() {
        let found = scan(assets, space, grid, tol, min_clearance, exec, |world| {
            let s = summarize(assets, world, &betas, tol.eps, false);
            (s.c >= target).then_some(s.c)
        });
        if let Some((poses, _, c)) = found {
            return Ok(OracleConnectivity::Max {
                c,
                placement: Placement::from_poses(assets, &poses),
            });
        }
    }
    Ok(OracleConnectivity::Infeasible { c: -1 })
}
