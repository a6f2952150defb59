//! Road assets, poses, and placements.
//!
//! A road asset is a small rigid graph: nodes in local meters plus the
//! internal segments joining them. On disk node indices are 1-based; in
//! memory they are 0-based.

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    convex_hull, convex_min_width, distance_sq, point_segment_distance, point_set_diameter,
    Point2,
};

/// Minimum distance between the two endpoints of an internal segment, and
/// between the two anchor nodes.
pub const MIN_NODE_SEPARATION: f64 = 1e-3;

/// A single broken invariant of a [`RoadAsset`]. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooFewNodes { count: usize },
    NoSegments,
    NonFiniteNode { node: usize },
    IndexOutOfRange { segment: usize, index: usize },
    SelfLoop { segment: usize },
    UnorderedSegment { segment: usize },
    DuplicateSegment { first: usize, second: usize },
    ShortSegment { segment: usize, length: f64 },
    AnchorCoincident,
    InvalidValue { value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Human-facing messages use the 1-based file convention.
        match self {
            Violation::TooFewNodes { count } => write!(f, "needs >= 2 nodes, has {count}"),
            Violation::NoSegments => write!(f, "has no segments"),
            Violation::NonFiniteNode { node } => write!(f, "node {} is not finite", node + 1),
            Violation::IndexOutOfRange { segment, index } => {
                write!(f, "segment {} references missing node {}", segment + 1, index + 1)
            }
            Violation::SelfLoop { segment } => write!(f, "segment {} is a self-loop", segment + 1),
            Violation::UnorderedSegment { segment } => {
                write!(f, "segment {} is not stored as (i, j) with i < j", segment + 1)
            }
            Violation::DuplicateSegment { first, second } => write!(
                f,
                "segments {} and {} join the same nodes",
                first + 1,
                second + 1
            ),
            Violation::ShortSegment { segment, length } => {
                write!(f, "segment {} is only {length:.2e} m long", segment + 1)
            }
            Violation::AnchorCoincident => write!(f, "anchor nodes 1 and 2 coincide"),
            Violation::InvalidValue { value } => write!(f, "value {value} is not a finite number >= 0"),
        }
    }
}

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("asset `{id}` is invalid: {}", join_violations(.violations))]
    Invalid { id: String, violations: Vec<Violation> },
    #[error("asset `{id}`: node index 0 in segment {segment} (file indices are 1-based)")]
    ZeroIndex { id: String, segment: usize },
    #[error("duplicate asset id `{0}`")]
    DuplicateId(String),
    #[error("placement does not match the asset list: {0}")]
    PlacementMismatch(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// A rigid road-network fragment with an exogenous value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AssetFile", into = "AssetFile")]
pub struct RoadAsset {
    pub id: String,
    /// Original (local) node coordinates.
    pub nodes: Vec<Point2>,
    /// Internal segments as 0-based `(i, j)` with `i < j`.
    pub segments: Vec<(usize, usize)>,
    pub value: f64,
    pub scenario_tags: Vec<String>,
}

/// On-disk form: 1-based indices, optional value and tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct AssetFile {
    id: String,
    nodes: Vec<Point2>,
    segments: Vec<[usize; 2]>,
    #[serde(default = "default_value")]
    value: f64,
    #[serde(default)]
    scenario_tags: Vec<String>,
}

fn default_value() -> f64 {
    1.0
}

impl TryFrom<AssetFile> for RoadAsset {
    type Error = AssetError;

    fn try_from(f: AssetFile) -> Result<Self, Self::Error> {
        let mut segments = Vec::with_capacity(f.segments.len());
        for (k, [i, j]) in f.segments.into_iter().enumerate() {
            if i == 0 || j == 0 {
                return Err(AssetError::ZeroIndex { id: f.id, segment: k + 1 });
            }
            let (i, j) = (i - 1, j - 1);
            segments.push((i.min(j), i.max(j)));
        }
        RoadAsset::new(f.id, f.nodes, segments, f.value, f.scenario_tags)
    }
}

impl From<RoadAsset> for AssetFile {
    fn from(a: RoadAsset) -> Self {
        AssetFile {
            id: a.id,
            nodes: a.nodes,
            segments: a.segments.iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
            value: a.value,
            scenario_tags: a.scenario_tags,
        }
    }
}

impl RoadAsset {
    /// Validating constructor.
    pub fn new(
        id: impl Into<String>,
        nodes: Vec<Point2>,
        segments: Vec<(usize, usize)>,
        value: f64,
        scenario_tags: Vec<String>,
    ) -> Result<Self, AssetError> {
        let asset = RoadAsset {
            id: id.into(),
            nodes,
            segments,
            value,
            scenario_tags,
        };
        let violations = validate_asset(&asset);
        if violations.is_empty() {
            Ok(asset)
        } else {
            Err(AssetError::Invalid {
                id: asset.id,
                violations,
            })
        }
    }

    /// Builds an asset from a path of points joined in order.
    pub fn polyline(id: impl Into<String>, points: &[(f64, f64)], value: f64) -> Result<Self, AssetError> {
        let nodes = points.iter().map(|&(x, y)| Point2::new(x, y)).collect::<Vec<_>>();
        let segments = (1..nodes.len()).map(|k| (k - 1, k)).collect();
        RoadAsset::new(id, nodes, segments, value, Vec::new())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Mean of the original node coordinates.
    pub fn centroid(&self) -> Point2 {
        let n = self.nodes.len().max(1) as f64;
        let s = self
            .nodes
            .iter()
            .fold(Point2::default(), |acc, p| acc.add(*p));
        s.scale(1.0 / n)
    }

    /// Largest distance between two nodes; rotation-invariant.
    pub fn diameter(&self) -> f64 {
        point_set_diameter(&self.nodes)
    }

    /// Minimum width of the node set's convex hull; rotation-invariant.
    pub fn min_width(&self) -> f64 {
        convex_min_width(&self.nodes)
    }

    /// Largest node distance from [`RoadAsset::centroid`].
    pub fn circumradius(&self) -> f64 {
        let c = self.centroid();
        self.nodes
            .iter()
            .map(|p| p.sub(c).norm())
            .fold(0.0, f64::max)
    }

    pub fn hull(&self) -> Vec<Point2> {
        convex_hull(&self.nodes)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes.len()];
        for &(i, j) in &self.segments {
            if i < deg.len() {
                deg[i] += 1;
            }
            if j < deg.len() {
                deg[j] += 1;
            }
        }
        deg
    }

    /// Segments incident to `node`.
    pub fn incident_segments(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.segments
            .iter()
            .enumerate()
            .filter(move |(_, &(i, j))| i == node || j == node)
            .map(|(k, _)| k)
    }
}

/// Every broken invariant of `asset`; empty when it is well formed.
pub fn validate_asset(asset: &RoadAsset) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = asset.nodes.len();
    if n < 2 {
        out.push(Violation::TooFewNodes { count: n });
    }
    if asset.segments.is_empty() {
        out.push(Violation::NoSegments);
    }
    if !(asset.value.is_finite() && asset.value >= 0.0) {
        out.push(Violation::InvalidValue { value: asset.value });
    }
    for (k, p) in asset.nodes.iter().enumerate() {
        if !p.is_finite() {
            out.push(Violation::NonFiniteNode { node: k });
        }
    }
    let mut first_seen = std::collections::HashMap::new();
    for (k, &(i, j)) in asset.segments.iter().enumerate() {
        let mut ok = true;
        for idx in [i, j] {
            if idx >= n {
                out.push(Violation::IndexOutOfRange { segment: k, index: idx });
                ok = false;
            }
        }
        if i == j {
            out.push(Violation::SelfLoop { segment: k });
            ok = false;
        } else if i > j {
            out.push(Violation::UnorderedSegment { segment: k });
        }
        let key = (i.min(j), i.max(j));
        if let Some(&first) = first_seen.get(&key) {
            out.push(Violation::DuplicateSegment { first, second: k });
        } else {
            first_seen.insert(key, k);
        }
        if ok {
            let length = distance_sq(asset.nodes[i], asset.nodes[j]).sqrt();
            if length < MIN_NODE_SEPARATION {
                out.push(Violation::ShortSegment { segment: k, length });
            }
        }
    }
    if n >= 2 && distance_sq(asset.nodes[0], asset.nodes[1]).sqrt() < MIN_NODE_SEPARATION {
        out.push(Violation::AnchorCoincident);
    }
    out
}

/// Checks that asset ids are unique across a set.
pub fn check_unique_ids(assets: &[RoadAsset]) -> Result<(), AssetError> {
    let mut ids = HashSet::new();
    for a in assets {
        if !ids.insert(a.id.as_str()) {
            return Err(AssetError::DuplicateId(a.id.clone()));
        }
    }
    Ok(())
}

/// Nodes owned by exactly one internal segment.
pub fn boundary_nodes(asset: &RoadAsset) -> BTreeSet<usize> {
    asset
        .degrees()
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d == 1)
        .map(|(k, _)| k)
        .collect()
}

/// A rigid motion: rotate by `theta` about the local origin, then translate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr")]
pub struct Pose {
    pub tx: f64,
    pub ty: f64,
    /// Radians in `(-pi, pi]`.
    pub theta: f64,
}

#[derive(Deserialize)]
struct PoseRepr {
    tx: f64,
    ty: f64,
    theta: f64,
}

impl TryFrom<PoseRepr> for Pose {
    type Error = String;

    fn try_from(r: PoseRepr) -> Result<Self, Self::Error> {
        if r.tx.is_finite() && r.ty.is_finite() && r.theta.is_finite() {
            Ok(Pose::new(r.tx, r.ty, r.theta))
        } else {
            Err("pose components must be finite".into())
        }
    }
}

pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

impl Pose {
    pub fn new(tx: f64, ty: f64, theta: f64) -> Self {
        Pose {
            tx,
            ty,
            theta: wrap_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Pose::default()
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        p.rotate(self.theta).add(Point2::new(self.tx, self.ty))
    }

    /// The pose that rotates by `theta` and carries local point `local` to
    /// world point `world`.
    pub fn mapping(local: Point2, world: Point2, theta: f64) -> Self {
        let r = local.rotate(theta);
        Pose::new(world.x - r.x, world.y - r.y, theta)
    }
}

/// World coordinates of every node of `asset` under `pose`.
pub fn apply_pose(asset: &RoadAsset, pose: &Pose) -> Vec<Point2> {
    let mut out = Vec::with_capacity(asset.nodes.len());
    apply_pose_into(asset, pose, &mut out);
    out
}

pub(crate) fn apply_pose_into(asset: &RoadAsset, pose: &Pose, out: &mut Vec<Point2>) {
    out.clear();
    let (s, c) = pose.theta.sin_cos();
    out.extend(asset.nodes.iter().map(|p| {
        Point2::new(c * p.x - s * p.y + pose.tx, s * p.x + c * p.y + pose.ty)
    }));
}

/// One placed asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementEntry {
    pub asset_id: String,
    pub pose: Pose,
    /// Cached `apply_pose` output.
    pub world: Vec<Point2>,
}

/// Poses for an ordered asset list, with derived world coordinates.
///
/// Entry `k` always belongs to asset `k` of the list the placement was built
/// for.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Placement {
    pub entries: Vec<PlacementEntry>,
}

impl Placement {
    /// # Panics
    /// If `poses` and `assets` differ in length.
    pub fn from_poses(assets: &[RoadAsset], poses: &[Pose]) -> Self {
        assert_eq!(assets.len(), poses.len(), "one pose per asset");
        Placement {
            entries: assets
                .iter()
                .zip(poses)
                .map(|(a, p)| PlacementEntry {
                    asset_id: a.id.clone(),
                    pose: *p,
                    world: apply_pose(a, p),
                })
                .collect(),
        }
    }

    /// Builds a placement for `assets` by looking poses up by asset id.
    /// Stale world coordinates in `self` are discarded and recomputed.
    pub fn realign(&self, assets: &[RoadAsset]) -> Result<Placement, AssetError> {
        if self.entries.len() != assets.len() {
            return Err(AssetError::PlacementMismatch(format!(
                "{} entries for {} assets",
                self.entries.len(),
                assets.len()
            )));
        }
        let mut poses = Vec::with_capacity(assets.len());
        for a in assets {
            let e = self
                .entries
                .iter()
                .find(|e| e.asset_id == a.id)
                .ok_or_else(|| AssetError::PlacementMismatch(format!("no pose for `{}`", a.id)))?;
            poses.push(e.pose);
        }
        Ok(Placement::from_poses(assets, &poses))
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.entries.iter().map(|e| e.pose).collect()
    }

    pub fn world(&self, asset_index: usize) -> &[Point2] {
        &self.entries[asset_index].world
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `true` when the entries line up with `assets` and the cached world
    /// coordinates match the poses.
    pub fn is_coherent(&self, assets: &[RoadAsset]) -> bool {
        self.entries.len() == assets.len()
            && self
                .entries
                .iter()
                .zip(assets)
                .all(|(e, a)| e.asset_id == a.id && e.world == apply_pose(a, &e.pose))
    }

    pub(crate) fn debug_check(&self, assets: &[RoadAsset]) {
        debug_assert_eq!(self.entries.len(), assets.len(), "placement/asset length mismatch");
        debug_assert!(
            self.entries.iter().zip(assets).all(|(e, a)| e.asset_id == a.id),
            "placement entries out of order"
        );
    }
}

/// Douglas-Peucker down-sampling. Endpoints are always kept and every
/// dropped point lies within `tol` of the simplified polyline.
pub fn simplify_nodes(nodes: &[Point2], tol: f64) -> Vec<Point2> {
    simplify_indices(nodes, tol)
        .into_iter()
        .map(|k| nodes[k])
        .collect()
}

/// Indices kept by [`simplify_nodes`], ascending.
pub fn simplify_indices(nodes: &[Point2], tol: f64) -> Vec<usize> {
    let n = nodes.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (a, b) = (nodes[lo], nodes[hi]);
        let mut best = (lo, -1.0f64);
        for (k, p) in nodes.iter().enumerate().take(hi).skip(lo + 1) {
            let d = point_segment_distance(*p, a, b);
            if d > best.1 {
                best = (k, d);
            }
        }
        if best.1 > tol {
            keep[best.0] = true;
            stack.push((lo, best.0));
            stack.push((best.0, hi));
        }
    }
    (0..n).filter(|&k| keep[k]).collect()
}
