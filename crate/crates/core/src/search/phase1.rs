//! Feasible placement of a fixed asset set, and selection of the most
//! valuable subset that can be placed.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::{check_unique_ids, AssetError, Placement, Pose, RoadAsset};
use crate::constraints::{feasibility_report, FeasibilityReport, Tolerances};
use crate::geometry::Space;

use super::{
    map_restarts, propose, provably_unplaceable, random_poses, restart_rng, step_sizes,
    changed_of, ConfigError, Evaluator, SearchConfig,
};

/// Number of evenly spaced samples kept in an objective trace.
const TRACE_POINTS: usize = 64;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error("no non-empty subset could be placed ({tried} subsets tried)")]
    NoFeasibleSubset { tried: usize, diagnostics: Vec<String> },
    #[error("oracle refused: {0}")]
    OracleRefused(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase1Status {
    Feasible,
    BudgetExhausted,
}

/// Outcome of [`search_placement`]. `placement` is the feasible placement
/// when `status` is `Feasible`, else the lowest-penalty one seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1Result {
    pub status: Phase1Status,
    pub placement: Placement,
    pub penalty: f64,
    /// `(iteration, penalty)` samples of the reported restart.
    pub trace: Vec<(usize, f64)>,
    pub restart: Option<usize>,
    pub report: FeasibilityReport,
    pub diagnostics: Vec<String>,
}

impl Phase1Result {
    pub fn is_feasible(&self) -> bool {
        self.status == Phase1Status::Feasible
    }
}

struct RestartOutcome {
    feasible: bool,
    poses: Vec<Pose>,
    penalty: f64,
    trace: Vec<(usize, f64)>,
    /// Stopped because a lower-indexed restart already succeeded.
    superseded: bool,
}

/// Multi-start simulated annealing over asset poses.
///
/// The reported placement is always re-validated from scratch; `Feasible`
/// is only returned when [`feasibility_report`] agrees. With an unbinding
/// time budget the result is a pure function of `config.seed`.
pub fn search_placement(
    assets: &[RoadAsset],
    space: &Space,
    config: &SearchConfig,
    tol: Tolerances,
) -> Result<Phase1Result, SolverError> {
    config.validate()?;
    check_unique_ids(assets)?;
    let center = space.centroid();
    let parked: Vec<Pose> = assets
        .iter()
        .map(|a| Pose::mapping(a.centroid(), center, 0.0))
        .collect();

    let reasons: Vec<String> = assets
        .iter()
        .filter_map(|a| provably_unplaceable(a, space))
        .collect();
    if !reasons.is_empty() {
        return Ok(exhausted(assets, space, config, tol, parked, Vec::new(), None, reasons));
    }
    if assets.is_empty() {
        let placement = Placement::default();
        let report = feasibility_report(assets, &placement, space, tol);
        return Ok(Phase1Result {
            status: Phase1Status::Feasible,
            placement,
            penalty: 0.0,
            trace: Vec::new(),
            restart: None,
            report,
            diagnostics: Vec::new(),
        });
    }

    let deadline = config.deadline();
    let found = AtomicUsize::new(usize::MAX);
    let outcomes = map_restarts(config.restarts, config.exec, config.threads, |r| {
        if found.load(Ordering::Relaxed) < r {
            return None;
        }
        let out = anneal(assets, space, config, tol, r, &found, &deadline);
        if out.feasible {
            found.fetch_min(r, Ordering::Relaxed);
        }
        Some(out)
    });

    // Lowest feasible restart wins; otherwise lowest penalty, then index.
    let mut best: Option<(usize, RestartOutcome)> = None;
    for (r, out) in outcomes.into_iter().enumerate() {
        let Some(out) = out else { continue };
        if out.superseded && !out.feasible {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, b)) => match (out.feasible, b.feasible) {
                (true, false) => true,
                (false, true) | (true, true) => false,
                (false, false) => out.penalty < b.penalty,
            },
        };
        if better {
            best = Some((r, out));
        }
    }
    let (r, out) = best.expect("restart 0 always runs to completion");
    if out.feasible {
        let placement = Placement::from_poses(assets, &out.poses);
        let report = feasibility_report(assets, &placement, space, tol);
        if report.feasible {
            return Ok(Phase1Result {
                status: Phase1Status::Feasible,
                placement,
                penalty: 0.0,
                trace: out.trace,
                restart: Some(r),
                report,
                diagnostics: Vec::new(),
            });
        }
    }
    let diag = vec![format!(
        "no feasible placement within {} restarts x {} iterations; best penalty {:.6}",
        config.restarts, config.iterations, out.penalty
    )];
    Ok(exhausted(assets, space, config, tol, out.poses, out.trace, Some(r), diag))
}

#[allow(clippy::too_many_arguments)]
fn exhausted(
    assets: &[RoadAsset],
    space: &Space,
    config: &SearchConfig,
    tol: Tolerances,
    poses: Vec<Pose>,
    trace: Vec<(usize, f64)>,
    restart: Option<usize>,
    diagnostics: Vec<String>,
) -> Phase1Result {
    let placement = Placement::from_poses(assets, &poses);
    let report = feasibility_report(assets, &placement, space, tol);
    let penalty = super::penalty(assets, &placement, space, config.weights(), tol.eps);
    Phase1Result {
        status: Phase1Status::BudgetExhausted,
        placement,
        penalty,
        trace,
        restart,
        report,
        diagnostics,
    }
}

fn anneal(
    assets: &[RoadAsset],
    space: &Space,
    config: &SearchConfig,
    tol: Tolerances,
    restart: usize,
    found: &AtomicUsize,
    deadline: &super::Deadline,
) -> RestartOutcome {
    let mut rng = restart_rng(config.seed, restart);
    let scale = space.diameter();
    let init = random_poses(&mut rng, assets, space);
    let mut ev = Evaluator::new(assets, space, config.weights(), tol.eps, init);
    let mut best_poses = ev.poses().to_vec();
    let mut best = ev.total();
    let t0 = config.initial_temperature;
    let mut temp = t0;
    let stride = (config.iterations / TRACE_POINTS).max(1);
    let mut trace = vec![(0, ev.total())];
    let mut buf = Vec::with_capacity(assets.len());
    let mut superseded = false;
    let mut done = 0;

    for it in 1..=config.iterations {
        if best == 0.0 {
            break;
        }
        done = it;
        if it % 256 == 0 {
            if found.load(Ordering::Relaxed) < restart {
                superseded = true;
                break;
            }
            if deadline.expired() {
                break;
            }
        }
        let (sxy, sth) = step_sizes(scale, temp / t0);
        let m = propose(&mut rng, ev.poses(), assets, sxy, sth, &mut buf);
        let (idx, len) = changed_of(m);
        let cur = ev.total();
        let cand = ev.evaluate(&buf, &idx[..len]);
        let delta = (cand - cur) / scale;
        if delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp() {
            ev.commit();
            if ev.total() < best {
                best = ev.total();
                best_poses.copy_from_slice(ev.poses());
            }
        }
        if it % stride == 0 {
            trace.push((it, ev.total()));
        }
        temp *= config.cooling_rate;
    }
    if trace.last().map(|t| t.1) != Some(best) {
        trace.push((done, best));
    }
    RestartOutcome {
        feasible: best == 0.0,
        poses: best_poses,
        penalty: best,
        trace,
        superseded,
    }
}

/// Limits for [`select_subset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubsetBudget {
    /// Wall-clock budget of one inner placement search.
    pub per_subset_secs: f64,
    /// Wall-clock budget of the whole selection.
    pub total_secs: f64,
    /// Largest asset count enumerated exhaustively; beyond it insertion is
    /// greedy by value.
    pub cap: usize,
}

impl Default for SubsetBudget {
    fn default() -> Self {
        SubsetBudget {
            per_subset_secs: 60.0,
            total_secs: 600.0,
            cap: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSelection {
    /// Selected asset ids, in input order.
    pub subset: Vec<String>,
    pub total_value: f64,
    pub result: Phase1Result,
    /// Subsets handed to the inner search before one succeeded.
    pub attempts: usize,
}

/// Non-empty subsets of `values` as index lists, most valuable first; ties
/// go to fewer assets, then to the lexicographically smaller sorted id list.
pub fn subset_order(assets: &[RoadAsset]) -> Vec<Vec<usize>> {
    let n = assets.len();
    let mut subsets: Vec<(f64, Vec<usize>, Vec<&str>)> = (1u64..(1u64 << n))
        .map(|mask| {
            let idx: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            let value = idx.iter().map(|&k| assets[k].value).sum();
            let mut ids: Vec<&str> = idx.iter().map(|&k| assets[k].id.as_str()).collect();
            ids.sort_unstable();
            (value, idx, ids)
        })
        .collect();
    subsets.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.len().cmp(&b.1.len()))
            .then_with(|| a.2.cmp(&b.2))
    });
    subsets.into_iter().map(|s| s.1).collect()
}

/// Most valuable subset that the inner search can place.
///
/// The answer is a certified lower bound on the optimum: every reported
/// subset is feasible, but the heuristic inner search may miss a feasible
/// placement of a more valuable one.
pub fn select_subset(
    assets: &[RoadAsset],
    space: &Space,
    config: &SearchConfig,
    budget: &SubsetBudget,
    tol: Tolerances,
) -> Result<SubsetSelection, SolverError> {
    config.validate()?;
    check_unique_ids(assets)?;
    let deadline = super::Deadline::after(budget.total_secs);
    let mut inner = config.clone();
    inner.time_budget_secs = budget.per_subset_secs.min(config.time_budget_secs);
    let blocked: Vec<bool> = assets
        .iter()
        .map(|a| provably_unplaceable(a, space).is_some())
        .collect();
    let mut diagnostics: Vec<String> = assets
        .iter()
        .filter_map(|a| provably_unplaceable(a, space))
        .collect();

    if assets.len() > budget.cap {
        return greedy_select(assets, space, &inner, tol, &blocked, deadline, diagnostics);
    }

    let mut attempts = 0;
    for idx in subset_order(assets) {
        if idx.iter().any(|&k| blocked[k]) {
            continue;
        }
        if deadline.expired() {
            diagnostics.push("total selection budget exhausted".into());
            break;
        }
        attempts += 1;
        let chosen: Vec<RoadAsset> = idx.iter().map(|&k| assets[k].clone()).collect();
        let result = search_placement(&chosen, space, &inner, tol)?;
        if result.is_feasible() {
            return Ok(SubsetSelection {
                subset: chosen.iter().map(|a| a.id.clone()).collect(),
                total_value: chosen.iter().map(|a| a.value).sum(),
                result,
                attempts,
            });
        }
    }
    Err(SolverError::NoFeasibleSubset {
        tried: attempts,
        diagnostics,
    })
}

fn greedy_select(
    assets: &[RoadAsset],
    space: &Space,
    config: &SearchConfig,
    tol: Tolerances,
    blocked: &[bool],
    deadline: super::Deadline,
    mut diagnostics: Vec<String>,
) -> Result<SubsetSelection, SolverError> {
    let mut order: Vec<usize> = (0..assets.len()).filter(|&k| !blocked[k]).collect();
    order.sort_by(|&a, &b| {
        assets[b]
            .value
            .total_cmp(&assets[a].value)
            .then_with(|| assets[a].id.cmp(&assets[b].id))
    });
    let mut kept: Vec<usize> = Vec::new();
    let mut best: Option<Phase1Result> = None;
    let mut attempts = 0;
    for k in order {
        if deadline.expired() {
            diagnostics.push("total selection budget exhausted".into());
            break;
        }
        let mut trial = kept.clone();
        trial.push(k);
        trial.sort_unstable();
        let chosen: Vec<RoadAsset> = trial.iter().map(|&i| assets[i].clone()).collect();
        attempts += 1;
        let result = search_placement(&chosen, space, config, tol)?;
        if result.is_feasible() {
            kept = trial;
            best = Some(result);
        }
    }
    match best {
        Some(result) => Ok(SubsetSelection {
            subset: kept.iter().map(|&i| assets[i].id.clone()).collect(),
            total_value: kept.iter().map(|&i| assets[i].value).sum(),
            result,
            attempts,
        }),
        None => Err(SolverError::NoFeasibleSubset {
            tried: attempts,
            diagnostics,
        }),
    }
}
