//! Constraint evaluation over a placement: rigidity residuals, cross-asset
//! non-crossing, containment, and constraint counting for the equivalent
//! mixed-integer model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::{boundary_nodes, Placement, RoadAsset};
use crate::geometry::{
    disjoint_raw, distance_sq, orientation, orientation_sign, OrientationSign, Point2, Space,
    COLLINEAR_TOL, DEFAULT_EPS,
};

/// Default bound on `max |delta|` (m^2) for a placement to count as rigid.
pub const DEFAULT_DELTA_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ConstraintError {
    #[error("asset `{id}` has {expected} nodes but {got} coordinates were given")]
    LengthMismatch { id: String, expected: usize, got: usize },
}

/// Tolerances shared by every feasibility decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Offset of the non-crossing products.
    pub eps: f64,
    /// Bound on `max |delta|` and on orientation margins.
    pub delta_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps: DEFAULT_EPS,
            delta_tol: DEFAULT_DELTA_TOL,
        }
    }
}

/// Slack of the distance equalities and signed margins of the orientation
/// inequalities, for anchor triplets `(1, 2, k)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SacsResidual {
    /// `delta_12`, then `delta_1k, delta_2k` for each `k >= 3`.
    pub deltas: Vec<f64>,
    /// `(-1)^b_ccw * orientation(x1, x2, xk)` for each `k >= 3`; must be `<= 0`.
    pub orientation_margins: Vec<f64>,
}

impl SacsResidual {
    pub fn max_abs_delta(&self) -> f64 {
        self.deltas.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn max_margin(&self) -> f64 {
        self.orientation_margins
            .iter()
            .fold(f64::NEG_INFINITY, |m, d| m.max(*d))
    }

    fn extend(&mut self, other: SacsResidual) {
        self.deltas.extend(other.deltas);
        self.orientation_margins.extend(other.orientation_margins);
    }
}

/// Rigidity residuals of `coords` as a placed copy of `asset`.
pub fn sacs_residual(asset: &RoadAsset, coords: &[Point2]) -> Result<SacsResidual, ConstraintError> {
    let n = asset.nodes.len();
    if coords.len() != n {
        return Err(ConstraintError::LengthMismatch {
            id: asset.id.clone(),
            expected: n,
            got: coords.len(),
        });
    }
    let mut out = SacsResidual::default();
    if n < 2 {
        return Ok(out);
    }
    let o = &asset.nodes;
    let delta = |i: usize, j: usize| distance_sq(coords[i], coords[j]) - distance_sq(o[i], o[j]);
    out.deltas.push(delta(0, 1));
    for k in 2..n {
        out.deltas.push(delta(0, k));
        out.deltas.push(delta(1, k));
        let placed = orientation(coords[0], coords[1], coords[k]);
        let margin = match orientation_sign(o[0], o[1], o[k], COLLINEAR_TOL) {
            OrientationSign::Ccw => -placed,
            OrientationSign::Cw => placed,
            // A rigid motion keeps a collinear triple collinear, so the
            // inequality carries no information; count it as satisfied.
            OrientationSign::Lnr => 0.0,
        };
        out.orientation_margins.push(margin);
    }
    Ok(out)
}

/// A pair of internal segments from two different assets that fail the
/// non-crossing test, normalized so that `asset_i` sorts before `asset_j`.
/// Segment indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacsViolation {
    pub asset_i: String,
    pub seg_p: usize,
    pub asset_j: String,
    pub seg_q: usize,
    /// `false` when the segments do not actually touch but the offset
    /// (or collinearity) still rejects them.
    pub touching: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentViolation {
    pub asset: String,
    pub node: usize,
    pub point: Point2,
    pub outside_by: f64,
}

/// Whether two closed segments share at least one point, decided from the
/// orientation signs of their endpoints.
pub(crate) fn segments_touch(pa: Point2, pb: Point2, qa: Point2, qb: Point2) -> bool {
    let s = |a, b, c| orientation_sign(a, b, c, COLLINEAR_TOL);
    let d1 = s(pa, pb, qa);
    let d2 = s(pa, pb, qb);
    let d3 = s(qa, qb, pa);
    let d4 = s(qa, qb, pb);
    use OrientationSign::*;
    let opposite = |x, y| matches!((x, y), (Ccw, Cw) | (Cw, Ccw));
    if opposite(d1, d2) && opposite(d3, d4) {
        return true;
    }
    let within = |a: Point2, b: Point2, c: Point2| {
        c.x >= a.x.min(b.x) - 1e-12
            && c.x <= a.x.max(b.x) + 1e-12
            && c.y >= a.y.min(b.y) - 1e-12
            && c.y <= a.y.max(b.y) + 1e-12
    };
    (d1 == Lnr && within(pa, pb, qa))
        || (d2 == Lnr && within(pa, pb, qb))
        || (d3 == Lnr && within(qa, qb, pa))
        || (d4 == Lnr && within(qa, qb, pb))
}

/// All cross-asset segment pairs failing the non-crossing test. Segments of
/// the same asset are never compared.
pub fn cacs_check(assets: &[RoadAsset], placement: &Placement, eps: f64) -> Vec<CacsViolation> {
    placement.debug_check(assets);
    let mut out = Vec::new();
    for i in 0..assets.len() {
        for j in i + 1..assets.len() {
            let (wi, wj) = (placement.world(i), placement.world(j));
            for (p, &(pa, pb)) in assets[i].segments.iter().enumerate() {
                for (q, &(qa, qb)) in assets[j].segments.iter().enumerate() {
                    let (a, b, c, d) = (wi[pa], wi[pb], wj[qa], wj[qb]);
                    if disjoint_raw(a, b, c, d, eps) {
                        continue;
                    }
                    let touching = segments_touch(a, b, c, d);
                    let v = if assets[i].id <= assets[j].id {
                        CacsViolation {
                            asset_i: assets[i].id.clone(),
                            seg_p: p,
                            asset_j: assets[j].id.clone(),
                            seg_q: q,
                            touching,
                        }
                    } else {
                        CacsViolation {
                            asset_i: assets[j].id.clone(),
                            seg_p: q,
                            asset_j: assets[i].id.clone(),
                            seg_q: p,
                            touching,
                        }
                    };
                    out.push(v);
                }
            }
        }
    }
    out.sort();
    out
}

/// Placed nodes lying outside `space`.
pub fn containment_check(
    assets: &[RoadAsset],
    placement: &Placement,
    space: &Space,
) -> Vec<ContainmentViolation> {
    placement.debug_check(assets);
    let mut out = Vec::new();
    for (k, a) in assets.iter().enumerate() {
        for (node, &p) in placement.world(k).iter().enumerate() {
            if !space.contains(p) {
                out.push(ContainmentViolation {
                    asset: a.id.clone(),
                    node,
                    point: p,
                    outside_by: space.outside_distance(p),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Phase1,
    Phase2,
}

/// Sizes of the constraint and binary sets the two mixed-integer models
/// would contain for a given asset list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstraintCounts {
    pub dist: u64,
    pub orient: u64,
    pub cacs_ineq: u64,
    pub cacs_bin: u64,
    /// Phase 2 only.
    pub conn: Option<ConnectivityCounts>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConnectivityCounts {
    pub transitions: u64,
    pub conn_ineq: u64,
    pub conn_bin: u64,
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Closed-form constraint counts.
pub fn count_constraints(assets: &[RoadAsset], phase: Phase) -> ConstraintCounts {
    let nodes = assets.iter().map(|a| a.nodes.len() as u64);
    let dist = nodes.clone().map(|n| (2 * n).saturating_sub(3)).sum();
    let orient = nodes.map(|n| n.saturating_sub(2)).sum();
    let n_seg: u64 = assets.iter().map(|a| a.segments.len() as u64).sum();
    let same_asset: u64 = assets.iter().map(|a| choose2(a.segments.len() as u64)).sum();
    let cacs = 2 * (choose2(n_seg) - same_asset);
    let conn = (phase == Phase::Phase2).then(|| {
        let betas: Vec<u64> = assets.iter().map(|a| boundary_nodes(a).len() as u64).collect();
        let mut x = 0;
        for i in 0..betas.len() {
            for j in i + 1..betas.len() {
                x += betas[i] * betas[j];
            }
        }
        let ineq = 2 * x * n_seg.saturating_sub(2);
        ConnectivityCounts {
            transitions: x,
            conn_ineq: ineq,
            conn_bin: choose2(assets.len() as u64) + x + ineq,
        }
    });
    ConstraintCounts {
        dist,
        orient,
        cacs_ineq: cacs,
        cacs_bin: cacs,
        conn,
    }
}

/// `(asset index, segment index)`.
pub type SegRef = (usize, usize);
/// `(asset index, node index)`.
pub type NodeRef = (usize, usize);

/// One constraint or auxiliary binary of the mixed-integer models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintObject {
    Distance { asset: usize, i: usize, j: usize },
    Orientation { asset: usize, k: usize },
    CacsInequality { p: SegRef, q: SegRef, disjunct: u8 },
    CacsBinary { p: SegRef, q: SegRef, disjunct: u8 },
    PairConnectBinary { i: usize, j: usize },
    TransitionBinary { from: NodeRef, to: NodeRef },
    ConnInequality { from: NodeRef, to: NodeRef, segment: SegRef, disjunct: u8 },
    ConnBinary { from: NodeRef, to: NodeRef, segment: SegRef, disjunct: u8 },
}

/// Emits every constraint object of the chosen model, one by one.
pub fn enumerate_constraints(assets: &[RoadAsset], phase: Phase) -> Vec<ConstraintObject> {
    use ConstraintObject::*;
    let mut out = Vec::new();
    for (a, asset) in assets.iter().enumerate() {
        let n = asset.nodes.len();
        if n >= 2 {
            out.push(Distance { asset: a, i: 0, j: 1 });
        }
        for k in 2..n {
            out.push(Distance { asset: a, i: 0, j: k });
            out.push(Distance { asset: a, i: 1, j: k });
            out.push(Orientation { asset: a, k });
        }
    }
    let segs: Vec<SegRef> = assets
        .iter()
        .enumerate()
        .flat_map(|(a, asset)| (0..asset.segments.len()).map(move |s| (a, s)))
        .collect();
    for (x, &p) in segs.iter().enumerate() {
        for &q in &segs[x + 1..] {
            if p.0 == q.0 {
                continue;
            }
            for d in 1..=2 {
                out.push(CacsInequality { p, q, disjunct: d });
                out.push(CacsBinary { p, q, disjunct: d });
            }
        }
    }
    if phase == Phase::Phase2 {
        for i in 0..assets.len() {
            for j in i + 1..assets.len() {
                out.push(PairConnectBinary { i, j });
                for bi in boundary_nodes(&assets[i]) {
                    for bj in boundary_nodes(&assets[j]) {
                        let (from, to) = ((i, bi), (j, bj));
                        out.push(TransitionBinary { from, to });
                        for &(sa, sk) in &segs {
                            let (u, v) = assets[sa].segments[sk];
                            let shares = |(na, nk): NodeRef| na == sa && (nk == u || nk == v);
                            if shares(from) || shares(to) {
                                continue;
                            }
                            for d in 1..=2 {
                                out.push(ConnInequality { from, to, segment: (sa, sk), disjunct: d });
                                out.push(ConnBinary { from, to, segment: (sa, sk), disjunct: d });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Tallies enumerated objects into the same shape as [`count_constraints`].
pub fn tally_constraints(objects: &[ConstraintObject], phase: Phase) -> ConstraintCounts {
    use ConstraintObject::*;
    let mut c = ConstraintCounts::default();
    let mut conn = ConnectivityCounts::default();
    for o in objects {
        match o {
            Distance { .. } => c.dist += 1,
            Orientation { .. } => c.orient += 1,
            CacsInequality { .. } => c.cacs_ineq += 1,
            CacsBinary { .. } => c.cacs_bin += 1,
            PairConnectBinary { .. } => conn.conn_bin += 1,
            TransitionBinary { .. } => {
                conn.transitions += 1;
                conn.conn_bin += 1;
            }
            ConnInequality { .. } => conn.conn_ineq += 1,
            ConnBinary { .. } => conn.conn_bin += 1,
        }
    }
    if phase == Phase::Phase2 {
        c.conn = Some(conn);
    }
    c
}

/// Full feasibility verdict for a placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub sacs: SacsResidual,
    pub max_abs_delta: f64,
    pub cacs_violations: Vec<CacsViolation>,
    pub containment_violations: Vec<ContainmentViolation>,
    pub warnings: Vec<String>,
}

pub fn feasibility_report(
    assets: &[RoadAsset],
    placement: &Placement,
    space: &Space,
    tol: Tolerances,
) -> FeasibilityReport {
    placement.debug_check(assets);
    let mut sacs = SacsResidual::default();
    let mut warnings = Vec::new();
    let mut coherent = true;
    for (k, a) in assets.iter().enumerate() {
        match sacs_residual(a, placement.world(k)) {
            Ok(r) => sacs.extend(r),
            Err(e) => {
                coherent = false;
                warnings.push(e.to_string());
            }
        }
    }
    let cacs_violations = cacs_check(assets, placement, tol.eps);
    let containment_violations = containment_check(assets, placement, space);
    for v in cacs_violations.iter().filter(|v| !v.touching) {
        warnings.push(format!(
            "segment {} of `{}` and segment {} of `{}` do not touch but are too close to \
             collinear to pass the non-crossing test; nudge or rotate one of them",
            v.seg_p + 1,
            v.asset_i,
            v.seg_q + 1,
            v.asset_j
        ));
    }
    let max_abs_delta = sacs.max_abs_delta();
    let margins_ok = sacs.orientation_margins.iter().all(|&m| m <= tol.delta_tol);
    let feasible = coherent
        && cacs_violations.is_empty()
        && containment_violations.is_empty()
        && max_abs_delta <= tol.delta_tol
        && margins_ok;
    FeasibilityReport {
        feasible,
        sacs,
        max_abs_delta,
        cacs_violations,
        containment_violations,
        warnings,
    }
}
