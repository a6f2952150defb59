use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use xcity_core::asset::{apply_pose, Placement, PlacementEntry, RoadAsset};
use xcity_core::constraints::{feasibility_report, FeasibilityReport};
use xcity_core::geometry::Space;
use xcity_core::osm::{extract_asset, parse_osm};
use xcity_core::search::phase1::{search_placement, select_subset, Phase1Result, Phase1Status, SolverError};
use xcity_core::search::phase2::{direct_connectivity, optimize_connectivity, ChosenTransition, ConnectivityResult, Phase2Error};
use xcity_core::svg::render_svg;

use crate::config::{Project, Selection};
use crate::error::{CliError, EXIT_INVALID, EXIT_OK, EXIT_SOLVER};

/// What a command produced: a JSON payload, its exit code, and a short
/// human summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: String,
    pub code: i32,
    pub summary: String,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("result types serialize");
    s.push('\n');
    s
}

/// `NAME[:VALUE]=WAY,WAY,...`
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub name: String,
    pub value: f64,
    pub ways: Vec<i64>,
}

impl FromStr for GroupSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, ways) = s
            .split_once('=')
            .ok_or_else(|| format!("group `{s}` must look like NAME[:VALUE]=WAY,WAY"))?;
        let (name, value) = match head.split_once(':') {
            Some((n, v)) => (n, v.parse().map_err(|_| format!("bad value `{v}` in group `{s}`"))?),
            None => (head, 1.0),
        };
        if name.is_empty() {
            return Err(format!("group `{s}` has an empty name"));
        }
        let ways = ways
            .split(',')
            .map(|w| w.trim().parse::<i64>().map_err(|_| format!("bad way id `{w}` in group `{s}`")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GroupSpec {
            name: name.to_string(),
            value,
            ways,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestedAsset {
    pub id: String,
    pub path: PathBuf,
    pub nodes: usize,
    pub segments: usize,
}

pub fn cmd_ingest(osm: &Path, groups: &[GroupSpec], out_dir: &Path, simplify_tol: f64) -> Result<Outcome, CliError> {
    if groups.is_empty() {
        return Err(CliError::Usage("ingest needs at least one --group".into()));
    }
    if simplify_tol.is_nan() || simplify_tol < 0.0 {
        return Err(CliError::Usage("--simplify must be >= 0".into()));
    }
    let bytes = std::fs::read(osm).map_err(|e| CliError::io(osm, e))?;
    let graph = parse_osm(&bytes).map_err(|e| CliError::schema(osm, e))?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();
    for g in groups {
        let asset = extract_asset(&graph, &g.ways, simplify_tol, &g.name, g.value).map_err(|e| {
            let ways: Vec<String> = g.ways.iter().map(i64::to_string).collect();
            CliError::Schema(format!("{}: group `{}` (ways {}): {e}", osm.display(), g.name, ways.join(",")))
        })?;
        let path = out_dir.join(format!("{}.json", g.name));
        std::fs::write(&path, to_json(&asset)).map_err(|e| CliError::io(&path, e))?;
        written.push(IngestedAsset {
            id: asset.id.clone(),
            path,
            nodes: asset.node_count(),
            segments: asset.segment_count(),
        });
    }
    let summary = written
        .iter()
        .map(|w| format!("{}: {} nodes, {} segments", w.id, w.nodes, w.segments))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Outcome {
        json: to_json(&written),
        code: EXIT_OK,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase1Outcome {
    Feasible,
    BudgetExhausted,
    NoFeasibleSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1Output {
    pub status: Phase1Outcome,
    pub selection: Selection,
    /// Ids of the placed assets.
    pub subset: Vec<String>,
    pub total_value: f64,
    /// Subsets handed to the placement search.
    pub attempts: usize,
    pub space: Space,
    pub assets: Vec<RoadAsset>,
    pub result: Option<Phase1Result>,
    pub diagnostics: Vec<String>,
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::Config(e) => CliError::Schema(e.to_string()),
        SolverError::Asset(e) => CliError::Schema(e.to_string()),
        other => CliError::Solver(other.to_string()),
    }
}

pub fn cmd_phase1(project: &Project) -> Result<Outcome, CliError> {
    let cfg = &project.config;
    let tol = cfg.tolerances();
    let out = match cfg.selection {
        Selection::Subset => {
            match select_subset(&project.assets, &cfg.space, &cfg.solver, &cfg.subset_budget(), tol) {
                Ok(sel) => {
                    let assets = project
                        .assets
                        .iter()
                        .filter(|a| sel.subset.contains(&a.id))
                        .cloned()
                        .collect();
                    Phase1Output {
                        status: Phase1Outcome::Feasible,
                        selection: cfg.selection,
                        subset: sel.subset,
                        total_value: sel.total_value,
                        attempts: sel.attempts,
                        space: cfg.space.clone(),
                        assets,
                        result: Some(sel.result),
                        diagnostics: Vec::new(),
                    }
                }
                Err(SolverError::NoFeasibleSubset { tried, diagnostics }) => Phase1Output {
                    status: Phase1Outcome::NoFeasibleSubset,
                    selection: cfg.selection,
                    subset: Vec::new(),
                    total_value: 0.0,
                    attempts: tried,
                    space: cfg.space.clone(),
                    assets: Vec::new(),
                    result: None,
                    diagnostics,
                },
                Err(e) => return Err(solver_error(e)),
            }
        }
        Selection::All => {
            let r = search_placement(&project.assets, &cfg.space, &cfg.solver, tol).map_err(solver_error)?;
            let feasible = r.status == Phase1Status::Feasible;
            Phase1Output {
                status: if feasible {
                    Phase1Outcome::Feasible
                } else {
                    Phase1Outcome::BudgetExhausted
                },
                selection: cfg.selection,
                subset: if feasible {
                    project.assets.iter().map(|a| a.id.clone()).collect()
                } else {
                    Vec::new()
                },
                total_value: if feasible {
                    project.assets.iter().map(|a| a.value).sum()
                } else {
                    0.0
                },
                attempts: 1,
                space: cfg.space.clone(),
                assets: project.assets.clone(),
                diagnostics: r.diagnostics.clone(),
                result: Some(r),
            }
        }
    };
    let code = if out.status == Phase1Outcome::Feasible {
        EXIT_OK
    } else {
        EXIT_SOLVER
    };
    let mut summary = match out.status {
        Phase1Outcome::Feasible => format!(
            "feasible: {} asset(s) [{}], total value {}",
            out.subset.len(),
            out.subset.join(", "),
            out.total_value
        ),
        Phase1Outcome::BudgetExhausted => "budget exhausted: no feasible placement of all assets".to_string(),
        Phase1Outcome::NoFeasibleSubset => {
            format!("no feasible subset found ({} subset(s) tried)", out.attempts)
        }
    };
    for d in &out.diagnostics {
        let _ = write!(summary, "\n  {d}");
    }
    Ok(Outcome {
        json: to_json(&out),
        code,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase2Output {
    pub space: Space,
    pub assets: Vec<RoadAsset>,
    /// Connectivity of the phase-1 placement the search started from.
    pub initial_c: usize,
    pub connectivity: ConnectivityResult,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::schema(path, e))
}

fn phase2_error(e: Phase2Error) -> CliError {
    match e {
        Phase2Error::Config(e) => CliError::Schema(e.to_string()),
        Phase2Error::Asset(e) => CliError::Schema(e.to_string()),
        other => CliError::Solver(other.to_string()),
    }
}

pub fn cmd_phase2(project: &Project, phase1: &Path) -> Result<Outcome, CliError> {
    let cfg = &project.config;
    let tol = cfg.tolerances();
    let p1: Phase1Output = serde_json::from_value(read_json(phase1)?).map_err(|e| CliError::schema(phase1, e))?;
    if p1.space != cfg.space {
        return Err(CliError::Usage(format!(
            "{}: space differs from the config's space",
            phase1.display()
        )));
    }
    let result = match (&p1.status, &p1.result) {
        (Phase1Outcome::Feasible, Some(r)) => r,
        _ => {
            return Err(CliError::Solver(format!(
                "{}: phase-1 result is not feasible; nothing to connect",
                phase1.display()
            )))
        }
    };
    let initial = result
        .placement
        .realign(&p1.assets)
        .map_err(|e| CliError::schema(phase1, e))?;
    let start = direct_connectivity(&p1.assets, &initial, &cfg.space, tol).map_err(phase2_error)?;
    let best = optimize_connectivity(&p1.assets, &initial, &cfg.space, &cfg.phase2_solver, tol).map_err(phase2_error)?;
    let mut summary = format!(
        "direct connectivity {} (from {}), {} transition(s), total length {:.2} m",
        best.c,
        start.c,
        best.chosen_transitions.len(),
        best.total_transition_length
    );
    for w in &best.warnings {
        let _ = write!(summary, "\n  warning: {w}");
    }
    let out = Phase2Output {
        space: cfg.space.clone(),
        assets: p1.assets,
        initial_c: start.c,
        connectivity: best,
    };
    Ok(Outcome {
        json: to_json(&out),
        code: EXIT_OK,
        summary,
    })
}

/// A design read back from any result file the CLI writes, or from a bare
/// placement plus the config's assets.
struct Design {
    assets: Vec<RoadAsset>,
    placement: Placement,
    transitions: Vec<ChosenTransition>,
    space: Option<Space>,
}

fn load_design(path: &Path, project: Option<&Project>) -> Result<Design, CliError> {
    let v = read_json(path)?;
    let bad = |e: serde_json::Error| CliError::schema(path, e);
    if v.get("connectivity").is_some() {
        let out: Phase2Output = serde_json::from_value(v).map_err(bad)?;
        return Ok(Design {
            assets: out.assets,
            placement: out.connectivity.placement,
            transitions: out.connectivity.chosen_transitions,
            space: Some(out.space),
        });
    }
    if v.get("result").is_some() {
        let out: Phase1Output = serde_json::from_value(v).map_err(bad)?;
        let (assets, placement) = match out.result {
            Some(r) => (out.assets, r.placement),
            None => (Vec::new(), Placement::default()),
        };
        return Ok(Design {
            assets,
            placement,
            transitions: Vec::new(),
            space: Some(out.space),
        });
    }
    let placement: Placement = serde_json::from_value(v).map_err(bad)?;
    let project = project.ok_or_else(|| {
        CliError::Usage(format!("{}: a bare placement needs --config for its assets", path.display()))
    })?;
    let mut assets = Vec::new();
    for e in &placement.entries {
        let a = project
            .assets
            .iter()
            .find(|a| a.id == e.asset_id)
            .ok_or_else(|| CliError::Schema(format!("{}: unknown asset `{}`", path.display(), e.asset_id)))?;
        assets.push(a.clone());
    }
    Ok(Design {
        assets,
        placement,
        transitions: Vec::new(),
        space: None,
    })
}

/// Puts the entries in asset order without touching the stored world
/// coordinates, which are what gets validated.
fn align_entries(assets: &[RoadAsset], placement: &Placement, path: &Path) -> Result<Placement, CliError> {
    if placement.len() != assets.len() {
        return Err(CliError::Schema(format!(
            "{}: {} placement entries for {} assets",
            path.display(),
            placement.len(),
            assets.len()
        )));
    }
    let mut entries: Vec<PlacementEntry> = Vec::with_capacity(assets.len());
    for a in assets {
        let e = placement
            .entries
            .iter()
            .find(|e| e.asset_id == a.id)
            .ok_or_else(|| CliError::Schema(format!("{}: no entry for `{}`", path.display(), a.id)))?;
        if e.world.len() != a.node_count() {
            return Err(CliError::Schema(format!(
                "{}: `{}` has {} world points for {} nodes",
                path.display(),
                a.id,
                e.world.len(),
                a.node_count()
            )));
        }
        entries.push(e.clone());
    }
    Ok(Placement { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseMismatch {
    pub asset: String,
    /// Largest distance between a stored world point and its pose image.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutput {
    pub feasible: bool,
    pub report: FeasibilityReport,
    pub pose_mismatches: Vec<PoseMismatch>,
}

/// Tolerance for stored world points versus their pose images.
const POSE_MATCH_TOL: f64 = 1e-6;

pub fn cmd_validate(project: &Project, placement_path: &Path) -> Result<Outcome, CliError> {
    let cfg = &project.config;
    let design = load_design(placement_path, Some(project))?;
    if let Some(space) = &design.space {
        if *space != cfg.space {
            return Err(CliError::Usage(format!(
                "{}: space differs from the config's space",
                placement_path.display()
            )));
        }
    }
    let placement = align_entries(&design.assets, &design.placement, placement_path)?;
    let report = feasibility_report(&design.assets, &placement, &cfg.space, cfg.tolerances());
    let pose_mismatches: Vec<PoseMismatch> = design
        .assets
        .iter()
        .zip(&placement.entries)
        .filter_map(|(a, e)| {
            let dev = apply_pose(a, &e.pose)
                .iter()
                .zip(&e.world)
                .map(|(p, q)| p.sub(*q).norm())
                .fold(0.0, f64::max);
            (dev > POSE_MATCH_TOL).then(|| PoseMismatch {
                asset: a.id.clone(),
                max_deviation: dev,
            })
        })
        .collect();
    let feasible = report.feasible && pose_mismatches.is_empty();
    let mut summary = if feasible {
        format!("feasible ({} asset(s))", design.assets.len())
    } else {
        "infeasible".to_string()
    };
    for v in &report.cacs_violations {
        let _ = write!(
            summary,
            "\n  crossing: segment {} of `{}` and segment {} of `{}`",
            v.seg_p + 1,
            v.asset_i,
            v.seg_q + 1,
            v.asset_j
        );
    }
    for v in &report.containment_violations {
        let _ = write!(
            summary,
            "\n  outside: node {} of `{}` by {:.4} m",
            v.node + 1,
            v.asset,
            v.outside_by
        );
    }
    if report.max_abs_delta > cfg.delta_tol {
        let _ = write!(summary, "\n  shape distorted: max |delta| {:.3e}", report.max_abs_delta);
    }
    for m in &pose_mismatches {
        let _ = write!(
            summary,
            "\n  pose of `{}` does not produce its stored coordinates (off by {:.4} m)",
            m.asset, m.max_deviation
        );
    }
    for w in &report.warnings {
        let _ = write!(summary, "\n  warning: {w}");
    }
    Ok(Outcome {
        json: to_json(&ValidationOutput {
            feasible,
            report,
            pose_mismatches,
        }),
        code: if feasible { EXIT_OK } else { EXIT_INVALID },
        summary,
    })
}

/// Renders a phase-1 or phase-2 result file to SVG.
pub fn cmd_render(result: &Path) -> Result<String, CliError> {
    let design = load_design(result, None)?;
    let space = design
        .space
        .ok_or_else(|| CliError::Usage(format!("{}: not a phase-1 or phase-2 result", result.display())))?;
    let placement = align_entries(&design.assets, &design.placement, result)?;
    Ok(render_svg(&space, &design.assets, &placement, &design.transitions))
}
