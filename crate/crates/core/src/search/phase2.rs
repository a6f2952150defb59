//! Arrangement of a fixed, feasible asset set to maximize the number of asset
//! pairs joinable by a straight, unobstructed transition road.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::{boundary_nodes, check_unique_ids, AssetError, Placement, Pose, RoadAsset};
use crate::constraints::{feasibility_report, segments_touch, Tolerances};
use crate::geometry::{disjoint_raw, distance_sq, Point2, Space, DEGENERATE_SEGMENT_TOL};

use super::{
    changed_of, map_restarts, propose, restart_rng, step_sizes, ConfigError, Evaluator, SearchConfig,
};

#[derive(Debug, Error)]
pub enum Phase2Error {
    #[error("placement is infeasible ({0}); run the placement search first")]
    InfeasiblePlacement(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error("oracle refused: {0}")]
    OracleRefused(String),
}

mod one_based {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*v as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = u64::deserialize(d)?;
        if v == 0 {
            return Err(serde::de::Error::custom("node indices are 1-based"));
        }
        Ok(v as usize - 1)
    }
}

/// A node of a placed asset. `node` is 0-based in memory, 1-based in JSON.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub asset: String,
    #[serde(with = "one_based")]
    pub node: usize,
}

/// A straight road between boundary nodes of two different assets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransitionCandidate {
    pub from: NodeRef,
    pub to: NodeRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenTransition {
    pub from: NodeRef,
    pub to: NodeRef,
    pub from_point: Point2,
    pub to_point: Point2,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityResult {
    /// Number of directly connectible unordered asset pairs.
    pub c: usize,
    pub connected_pairs: Vec<(String, String)>,
    /// One transition per connected pair, in pair order.
    pub chosen_transitions: Vec<ChosenTransition>,
    pub total_transition_length: f64,
    pub placement: Placement,
    pub warnings: Vec<String>,
}

/// Why a candidate transition is not usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rejection {
    UnknownAsset(String),
    SameAsset,
    NotBoundary(NodeRef),
    /// Endpoints coincide.
    Degenerate,
    Blocked { asset: String, segment: usize },
}

/// Every boundary-node pair across distinct assets, ordered by asset pair,
/// then source node, then target node.
pub fn transition_candidates(assets: &[RoadAsset], placement: &Placement) -> Vec<TransitionCandidate> {
    placement.debug_check(assets);
    let betas: Vec<Vec<usize>> = assets.iter().map(|a| boundary_nodes(a).into_iter().collect()).collect();
    let mut out = Vec::new();
    for i in 0..assets.len() {
        for j in i + 1..assets.len() {
            for &p in &betas[i] {
                for &q in &betas[j] {
                    out.push(TransitionCandidate {
                        from: NodeRef { asset: assets[i].id.clone(), node: p },
                        to: NodeRef { asset: assets[j].id.clone(), node: q },
                    });
                }
            }
        }
    }
    out
}

/// Index-form validity check. Segments incident to either endpoint node are
/// exempt; every other internal segment of every asset must stay clear.
/// Returns the first blocking `(asset, segment)`.
fn first_blocker(
    assets: &[RoadAsset],
    world: &[Vec<Point2>],
    (i, p): (usize, usize),
    (j, q): (usize, usize),
    eps: f64,
) -> Result<(), Option<(usize, usize)>> {
    let (a, b) = (world[i][p], world[j][q]);
    if distance_sq(a, b).sqrt() <= DEGENERATE_SEGMENT_TOL {
        return Err(None);
    }
    for (k, asset) in assets.iter().enumerate() {
        for (s, &(u, v)) in asset.segments.iter().enumerate() {
            if (k == i && (u == p || v == p)) || (k == j && (u == q || v == q)) {
                continue;
            }
            if !disjoint_raw(a, b, world[k][u], world[k][v], eps) {
                return Err(Some((k, s)));
            }
        }
    }
    Ok(())
}

fn count_blockers(
    assets: &[RoadAsset],
    world: &[Vec<Point2>],
    (i, p): (usize, usize),
    (j, q): (usize, usize),
    eps: f64,
    stop_at: usize,
) -> usize {
    let (a, b) = (world[i][p], world[j][q]);
    if distance_sq(a, b).sqrt() <= DEGENERATE_SEGMENT_TOL {
        return usize::MAX;
    }
    let mut n = 0;
    for (k, asset) in assets.iter().enumerate() {
        for &(u, v) in &asset.segments {
            if (k == i && (u == p || v == p)) || (k == j && (u == q || v == q)) {
                continue;
            }
            if !disjoint_raw(a, b, world[k][u], world[k][v], eps) {
                n += 1;
                if n >= stop_at {
                    return n;
                }
            }
        }
    }
    n
}

fn resolve(assets: &[RoadAsset], r: &NodeRef) -> Result<usize, Rejection> {
    let k = assets
        .iter()
        .position(|a| a.id == r.asset)
        .ok_or_else(|| Rejection::UnknownAsset(r.asset.clone()))?;
    if !boundary_nodes(&assets[k]).contains(&r.node) {
        return Err(Rejection::NotBoundary(r.clone()));
    }
    Ok(k)
}

/// Detailed validity check of one candidate.
pub fn check_candidate(
    c: &TransitionCandidate,
    assets: &[RoadAsset],
    placement: &Placement,
    eps: f64,
) -> Result<(), Rejection> {
    placement.debug_check(assets);
    let i = resolve(assets, &c.from)?;
    let j = resolve(assets, &c.to)?;
    if i == j {
        return Err(Rejection::SameAsset);
    }
    let world: Vec<Vec<Point2>> = placement.entries.iter().map(|e| e.world.clone()).collect();
    first_blocker(assets, &world, (i, c.from.node), (j, c.to.node), eps).map_err(|b| match b {
        None => Rejection::Degenerate,
        Some((k, s)) => Rejection::Blocked {
            asset: assets[k].id.clone(),
            segment: s,
        },
    })
}

pub fn candidate_valid(
    c: &TransitionCandidate,
    assets: &[RoadAsset],
    placement: &Placement,
    eps: f64,
) -> bool {
    check_candidate(c, assets, placement, eps).is_ok()
}

/// Connectivity of a world configuration, in index form.
pub(crate) struct Summary {
    pub c: usize,
    /// `(i, j, chosen (p, q))` for connected pairs, in pair order.
    chosen: Vec<(usize, usize, usize, usize)>,
    pub length: f64,
    /// Sum over unconnected pairs of `g / (1 + g)`, `g` the fewest blockers
    /// on any of the pair's candidates.
    shortfall: f64,
    degenerate: usize,
}

pub(crate) fn summarize(
    assets: &[RoadAsset],
    world: &[Vec<Point2>],
    betas: &[Vec<usize>],
    eps: f64,
    with_shortfall: bool,
) -> Summary {
    let mut s = Summary {
        c: 0,
        chosen: Vec::new(),
        length: 0.0,
        shortfall: 0.0,
        degenerate: 0,
    };
    for i in 0..assets.len() {
        for j in i + 1..assets.len() {
            let mut hit = None;
            'scan: for &p in &betas[i] {
                for &q in &betas[j] {
                    match first_blocker(assets, world, (i, p), (j, q), eps) {
                        Ok(()) => {
                            hit = Some((p, q));
                            break 'scan;
                        }
                        Err(None) => s.degenerate += 1,
                        Err(Some(_)) => {}
                    }
                }
            }
            match hit {
                Some((p, q)) => {
                    s.c += 1;
                    s.length += distance_sq(world[i][p], world[j][q]).sqrt();
                    s.chosen.push((i, j, p, q));
                }
                None if with_shortfall && !betas[i].is_empty() && !betas[j].is_empty() => {
                    let mut g = usize::MAX;
                    for &p in &betas[i] {
                        for &q in &betas[j] {
                            g = g.min(count_blockers(assets, world, (i, p), (j, q), eps, g));
                        }
                    }
                    let g = g.min(1_000) as f64;
                    s.shortfall += g / (1.0 + g);
                }
                None => {}
            }
        }
    }
    s
}

fn build_result(
    assets: &[RoadAsset],
    placement: Placement,
    betas: &[Vec<usize>],
    eps: f64,
) -> ConnectivityResult {
    let world: Vec<Vec<Point2>> = placement.entries.iter().map(|e| e.world.clone()).collect();
    let s = summarize(assets, &world, betas, eps, false);
    let mut warnings = Vec::new();
    if s.degenerate > 0 {
        warnings.push(format!(
            "{} candidate transition(s) have coincident endpoints and were skipped",
            s.degenerate
        ));
    }
    let chosen: Vec<ChosenTransition> = s
        .chosen
        .iter()
        .map(|&(i, j, p, q)| {
            let (a, b) = (world[i][p], world[j][q]);
            ChosenTransition {
                from: NodeRef { asset: assets[i].id.clone(), node: p },
                to: NodeRef { asset: assets[j].id.clone(), node: q },
                from_point: a,
                to_point: b,
                length: distance_sq(a, b).sqrt(),
            }
        })
        .collect();
    for (x, t) in chosen.iter().enumerate() {
        for u in &chosen[x + 1..] {
            let shared = [&t.from, &t.to].iter().any(|n| **n == u.from || **n == u.to);
            if !shared && segments_touch(t.from_point, t.to_point, u.from_point, u.to_point) {
                warnings.push(format!(
                    "transition {}:{} -> {}:{} crosses transition {}:{} -> {}:{}",
                    t.from.asset,
                    t.from.node + 1,
                    t.to.asset,
                    t.to.node + 1,
                    u.from.asset,
                    u.from.node + 1,
                    u.to.asset,
                    u.to.node + 1
                ));
            }
        }
    }
    ConnectivityResult {
        c: s.c,
        connected_pairs: s
            .chosen
            .iter()
            .map(|&(i, j, _, _)| (assets[i].id.clone(), assets[j].id.clone()))
            .collect(),
        total_transition_length: s.length,
        chosen_transitions: chosen,
        placement,
        warnings,
    }
}

pub(crate) fn betas_of(assets: &[RoadAsset]) -> Vec<Vec<usize>> {
    assets.iter().map(|a| boundary_nodes(a).into_iter().collect()).collect()
}

/// Largest connectivity any placement could reach: pairs of assets that
/// both have at least one boundary node.
pub fn connectivity_upper_bound(assets: &[RoadAsset]) -> usize {
    let m = assets.iter().filter(|a| !boundary_nodes(a).is_empty()).count();
    m * m.saturating_sub(1) / 2
}

fn require_feasible(
    assets: &[RoadAsset],
    placement: &Placement,
    space: &Space,
    tol: Tolerances,
) -> Result<(), Phase2Error> {
    let r = feasibility_report(assets, placement, space, tol);
    if r.feasible {
        Ok(())
    } else {
        Err(Phase2Error::InfeasiblePlacement(format!(
            "{} crossing pair(s), {} node(s) outside the space",
            r.cacs_violations.len(),
            r.containment_violations.len()
        )))
    }
}

/// Direct connectivity of a feasible placement. Each connected pair reports
/// its first valid candidate in (source node, target node) order.
pub fn direct_connectivity(
    assets: &[RoadAsset],
    placement: &Placement,
    space: &Space,
    tol: Tolerances,
) -> Result<ConnectivityResult, Phase2Error> {
    check_unique_ids(assets)?;
    if !placement.is_coherent(assets) {
        return Err(Phase2Error::Asset(AssetError::PlacementMismatch(
            "placement entries do not match the assets".into(),
        )));
    }
    require_feasible(assets, placement, space, tol)?;
    Ok(build_result(assets, placement.clone(), &betas_of(assets), tol.eps))
}

/// Search configuration tuned for connectivity energies, whose steps are
/// whole pairs rather than meters.
pub fn default_phase2_config() -> SearchConfig {
    SearchConfig {
        restarts: 4,
        iterations: 4_000,
        initial_temperature: 0.5,
        cooling_rate: 0.999,
        ..SearchConfig::default()
    }
}

struct Best {
    c: usize,
    length: f64,
    poses: Vec<Pose>,
}

impl Best {
    fn beats(&self, c: usize, length: f64) -> bool {
        c > self.c || (c == self.c && length < self.length)
    }
}

/// Anneals poses from `initial` to raise connectivity while staying feasible.
///
/// Never returns less connectivity than `initial` has; ties in connectivity
/// go to the smaller total transition length, then the lower restart index.
pub fn optimize_connectivity(
    assets: &[RoadAsset],
    initial: &Placement,
    space: &Space,
    config: &SearchConfig,
    tol: Tolerances,
) -> Result<ConnectivityResult, Phase2Error> {
    config.validate()?;
    check_unique_ids(assets)?;
    let initial = initial.realign(assets)?;
    require_feasible(assets, &initial, space, tol)?;
    let betas = betas_of(assets);
    let upper = connectivity_upper_bound(assets);
    let start = summarize(
        assets,
        &initial.entries.iter().map(|e| e.world.clone()).collect::<Vec<_>>(),
        &betas,
        tol.eps,
        false,
    );
    if assets.len() < 2 || start.c == upper && upper == 0 {
        return Ok(build_result(assets, initial, &betas, tol.eps));
    }

    let deadline = config.deadline();
    let init_poses = initial.poses();
    let outcomes = map_restarts(config.restarts, config.exec, config.threads, |r| {
        anneal_connectivity(assets, space, config, tol, &betas, upper, &init_poses, r, &deadline)
    });
    let mut best = Best {
        c: start.c,
        length: start.length,
        poses: init_poses,
    };
    for out in outcomes {
        if best.beats(out.c, out.length) {
            best = out;
        }
    }
    let placement = Placement::from_poses(assets, &best.poses);
    // Exact re-check of the reported placement.
    require_feasible(assets, &placement, space, tol)?;
    Ok(build_result(assets, placement, &betas, tol.eps))
}

#[allow(clippy::too_many_arguments)]
fn anneal_connectivity(
    assets: &[RoadAsset],
    space: &Space,
    config: &SearchConfig,
    tol: Tolerances,
    betas: &[Vec<usize>],
    upper: usize,
    init: &[Pose],
    restart: usize,
    deadline: &super::Deadline,
) -> Best {
    let mut rng = restart_rng(config.seed, restart);
    let scale = space.diameter();
    let pairs = (assets.len() * (assets.len() - 1) / 2).max(1) as f64;
    let infeasible_floor = upper as f64 + 1.0;
    let energy = |s: &Summary| -(s.c as f64) + 0.5 * s.shortfall / pairs + 1e-3 * s.length / (scale * pairs);

    let mut ev = Evaluator::new(assets, space, config.weights(), tol.eps, init.to_vec());
    let s0 = summarize(assets, ev.world(), betas, tol.eps, true);
    let mut cur_e = energy(&s0);
    let mut best = Best {
        c: s0.c,
        length: s0.length,
        poses: init.to_vec(),
    };
    let t0 = config.initial_temperature;
    let mut temp = t0;
    let mut buf = Vec::with_capacity(assets.len());
    for it in 1..=config.iterations {
        if it % 128 == 0 && deadline.expired() {
            break;
        }
        // Small steps: the start is already feasible.
        let (sxy, sth) = step_sizes(scale, 0.5 * temp / t0);
        let m = propose(&mut rng, ev.poses(), assets, sxy, sth, &mut buf);
        let (idx, len) = changed_of(m);
        let pen = ev.evaluate(&buf, &idx[..len]);
        let (cand_e, summary) = if pen == 0.0 {
            let s = summarize(assets, ev.candidate_world(), betas, tol.eps, true);
            (energy(&s), Some(s))
        } else {
            (infeasible_floor + pen / scale, None)
        };
        let delta = cand_e - cur_e;
        if delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp() {
            ev.commit();
            cur_e = cand_e;
            if let Some(s) = summary {
                if best.beats(s.c, s.length) {
                    best = Best {
                        c: s.c,
                        length: s.length,
                        poses: ev.poses().to_vec(),
                    };
                }
            }
        }
        temp *= config.cooling_rate;
    }
    best
}
