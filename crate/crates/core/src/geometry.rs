//! Planar predicates and measures.
//!
//! Everything here is plain `f64` arithmetic. Tolerances are absolute and
//! tuned for coordinates in meters at proving-ground scale (up to a few km).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance below which an orientation determinant is treated as
/// collinear.
pub const COLLINEAR_TOL: f64 = 1e-9;

/// Minimum length of a [`Segment2`].
pub const DEGENERATE_SEGMENT_TOL: f64 = 1e-9;

/// Default offset used by the disjunctive non-crossing encoding, in the
/// product-of-orientations domain (m^4).
pub const DEFAULT_EPS: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("degenerate segment: endpoints closer than {DEGENERATE_SEGMENT_TOL}")]
    DegenerateSegment,
    #[error("degenerate line: the two defining points coincide")]
    DegenerateLine,
    #[error("space needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("space is not a strictly convex counter-clockwise polygon (at vertex {0})")]
    NotConvexCcw(usize),
}

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    /// Unchecked constructor. Use [`Point2::try_new`] for untrusted input.
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Point2 { x, y })
        } else {
            Err(GeometryError::NonFinite(x, y))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotate about the origin by `theta` radians (counter-clockwise).
    pub fn rotate(self, theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }
}

impl TryFrom<[f64; 2]> for Point2 {
    type Error = GeometryError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Point2::try_new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// A closed straight segment with distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub fn new(a: Point2, b: Point2) -> Result<Self, GeometryError> {
        if !a.is_finite() {
            return Err(GeometryError::NonFinite(a.x, a.y));
        }
        if !b.is_finite() {
            return Err(GeometryError::NonFinite(b.x, b.y));
        }
        if distance_sq(a, b).sqrt() <= DEGENERATE_SEGMENT_TOL {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Segment2 { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b.sub(self.a).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrientationSign {
    Ccw,
    Cw,
    /// Collinear within tolerance.
    Lnr,
}

/// Orientation determinant of the triple, `det[[x 1],[y 1],[z 1]]`.
///
/// Positive for a counter-clockwise turn, negative for clockwise, zero when
/// collinear. Equals twice the signed area of the triangle.
#[inline]
pub fn orientation(x: Point2, y: Point2, z: Point2) -> f64 {
    (y.x - x.x) * (z.y - x.y) - (y.y - x.y) * (z.x - x.x)
}

pub fn orientation_sign(x: Point2, y: Point2, z: Point2, tol: f64) -> OrientationSign {
    let o = orientation(x, y, z);
    if o > tol {
        OrientationSign::Ccw
    } else if o < -tol {
        OrientationSign::Cw
    } else {
        OrientationSign::Lnr
    }
}

#[inline]
pub(crate) fn chi(p1: Point2, p2: Point2, a: Point2, b: Point2) -> f64 {
    orientation(p1, p2, a) * orientation(p1, p2, b)
}

/// Product of the orientations of both segment endpoints against the infinite
/// line through `line_p1` and `line_p2`.
///
/// Positive iff the whole segment lies strictly on one side of the line.
pub fn intersection_test(
    line_p1: Point2,
    line_p2: Point2,
    seg: &Segment2,
) -> Result<f64, GeometryError> {
    if line_p1 == line_p2 {
        return Err(GeometryError::DegenerateLine);
    }
    Ok(chi(line_p1, line_p2, seg.a, seg.b))
}

/// Non-crossing test with the `eps` offset applied to both disjuncts.
///
/// Touching segments and collinear pairs yield products below `eps` and are
/// reported as colliding.
pub fn segments_disjoint(p: &Segment2, q: &Segment2, eps: f64) -> bool {
    disjoint_raw(p.a, p.b, q.a, q.b, eps)
}

#[inline]
pub(crate) fn disjoint_raw(pa: Point2, pb: Point2, qa: Point2, qb: Point2, eps: f64) -> bool {
    chi(pa, pb, qa, qb) >= eps || chi(qa, qb, pa, pb) >= eps
}

pub fn distance_sq(p: Point2, q: Point2) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    dx * dx + dy * dy
}

/// Euclidean distance from `p` to the closed segment `a`–`b`. Degenerate
/// segments fall back to point distance.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len_sq = ab.dot(ab);
    if len_sq == 0.0 {
        return p.sub(a).norm();
    }
    let t = (p.sub(a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.sub(a.add(ab.scale(t))).norm()
}

/// Perpendicular distance from `p` to the infinite line through `a` and `b`.
pub fn point_line_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let len = b.sub(a).norm();
    if len == 0.0 {
        return p.sub(a).norm();
    }
    orientation(a, b, p).abs() / len
}

/// The convex construction region every placed node must lie in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Space {
    vertices: Vec<Point2>,
}

impl Space {
    /// Validates `vertices` as a strictly convex, counter-clockwise polygon.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        for v in &vertices {
            if !v.is_finite() {
                return Err(GeometryError::NonFinite(v.x, v.y));
            }
        }
        for i in 0..n {
            let o = orientation(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if o <= COLLINEAR_TOL {
                return Err(GeometryError::NotConvexCcw((i + 1) % n));
            }
        }
        // Local convexity at every vertex still admits star-shaped windings
        // that loop more than once; the signed area rules those out.
        let winding: f64 = (0..n)
            .map(|i| {
                let a = vertices[i].sub(vertices[(i + n - 1) % n]);
                let b = vertices[(i + 1) % n].sub(vertices[i]);
                a.cross(b).atan2(a.dot(b))
            })
            .sum();
        if (winding - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(GeometryError::NotConvexCcw(0));
        }
        Ok(Space { vertices })
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Space::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
    }

    pub fn square(side: f64) -> Result<Self, GeometryError> {
        Space::rectangle(0.0, 0.0, side, side)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point2 {
        let mut area2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (a, b) in self.edges() {
            let w = a.cross(b);
            area2 += w;
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
        }
        Point2::new(cx / (3.0 * area2), cy / (3.0 * area2))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bbox(&self) -> (Point2, Point2) {
        bbox_of(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        point_set_diameter(&self.vertices)
    }

    /// Smallest distance between two parallel supporting lines.
    pub fn min_width(&self) -> f64 {
        convex_min_width(&self.vertices)
    }

    /// Largest vertex distance from the centroid.
    pub fn circumradius(&self) -> f64 {
        let c = self.centroid();
        self.vertices
            .iter()
            .map(|v| v.sub(c).norm())
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, p: Point2) -> bool {
        point_in_space(p, self)
    }

    /// Distance from `p` to the polygon; zero inside.
    pub fn outside_distance(&self, p: Point2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest signed distance from `p` to an edge line; positive inside.
    pub fn inside_margin(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| orientation(a, b, p) / b.sub(a).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Homothety about the centroid.
    pub fn scaled(&self, factor: f64) -> Result<Space, GeometryError> {
        let c = self.centroid();
        Space::new(
            self.vertices
                .iter()
                .map(|v| c.add(v.sub(c).scale(factor)))
                .collect(),
        )
    }
}

impl TryFrom<Vec<Point2>> for Space {
    type Error = GeometryError;

    fn try_from(v: Vec<Point2>) -> Result<Self, Self::Error> {
        Space::new(v)
    }
}

impl From<Space> for Vec<Point2> {
    fn from(s: Space) -> Self {
        s.vertices
    }
}

/// Inside-or-on-boundary test against a convex CCW polygon.
pub fn point_in_space(p: Point2, s: &Space) -> bool {
    s.edges().all(|(a, b)| orientation(a, b, p) >= -COLLINEAR_TOL)
}

pub(crate) fn bbox_of(points: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

pub(crate) fn point_set_diameter(points: &[Point2]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(distance_sq(*a, *b));
        }
    }
    best.sqrt()
}

/// Convex hull by monotone chain, CCW, without collinear points.
pub(crate) fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && orientation(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Minimum width of the convex hull of `points`. Zero for collinear sets.
pub(crate) fn convex_min_width(points: &[Point2]) -> f64 {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return 0.0;
    }
    let n = hull.len();
    // The minimum width is attained perpendicular to some hull edge.
    (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            hull.iter()
                .map(|&p| point_line_distance(p, a, b))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}
