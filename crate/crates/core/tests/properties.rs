use std::collections::BTreeMap;

use proptest::prelude::*;
use xcity_core::asset::{apply_pose, simplify_indices, simplify_nodes, Placement, Pose, RoadAsset};
use xcity_core::constraints::{
    cacs_check, containment_check, count_constraints, enumerate_constraints, feasibility_report,
    sacs_residual, tally_constraints, Phase, Tolerances,
};
use xcity_core::geometry::{
    intersection_test, orientation, point_segment_distance, segments_disjoint, Point2, Segment2,
    Space, DEFAULT_EPS,
};
use xcity_core::osm::{haversine, project_local, LatLon, RawOsmGraph};
use xcity_core::search::{penalty, Weights};

fn coord() -> impl Strategy<Value = f64> {
    -100.0..100.0f64
}

fn point() -> impl Strategy<Value = Point2> {
    (coord(), coord()).prop_map(|(x, y)| Point2::new(x, y))
}

fn pose() -> impl Strategy<Value = Pose> {
    (coord(), coord(), -3.2..3.2f64).prop_map(|(x, y, t)| Pose::new(x, y, t))
}

fn polyline(id: &'static str, max_nodes: usize) -> impl Strategy<Value = RoadAsset> {
    prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64), 2..=max_nodes)
        .prop_filter_map("degenerate polyline", move |pts| RoadAsset::polyline(id, &pts, 1.0).ok())
}

/// Parametric closed-segment intersection, independent of the orientation
/// predicates under test.
fn param_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let r = (b.x - a.x, b.y - a.y);
    let s = (d.x - c.x, d.y - c.y);
    let den = r.0 * s.1 - r.1 * s.0;
    let qp = (c.x - a.x, c.y - a.y);
    if den.abs() < 1e-12 {
        // parallel: intersect only if collinear and overlapping
        if (qp.0 * r.1 - qp.1 * r.0).abs() > 1e-9 {
            return false;
        }
        let rr = r.0 * r.0 + r.1 * r.1;
        let t0 = (qp.0 * r.0 + qp.1 * r.1) / rr;
        let t1 = t0 + (s.0 * r.0 + s.1 * r.1) / rr;
        return t0.min(t1) <= 1.0 && t0.max(t1) >= 0.0;
    }
    let t = (qp.0 * s.1 - qp.1 * s.0) / den;
    let u = (qp.0 * r.1 - qp.1 * r.0) / den;
    (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
}

proptest! {
    #[test]
    fn orientation_is_antisymmetric(x in point(), y in point(), z in point()) {
        let a = orientation(x, y, z);
        let b = orientation(y, x, z);
        prop_assert!((a + b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn orientation_survives_rigid_motion(x in point(), y in point(), z in point(), p in pose()) {
        let a = orientation(x, y, z);
        let b = orientation(p.apply(x), p.apply(y), p.apply(z));
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
        let m = |q: Point2| Point2::new(-q.x, q.y);
        let c = orientation(m(x), m(y), m(z));
        prop_assert!((a + c).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn disjointness_agrees_with_parametric_oracle(a in point(), b in point(), c in point(), d in point()) {
        let (Ok(p), Ok(q)) = (Segment2::new(a, b), Segment2::new(c, d)) else { return Ok(()) };
        let disjoint = segments_disjoint(&p, &q, DEFAULT_EPS);
        let chi_p = intersection_test(a, b, &q).unwrap();
        let chi_q = intersection_test(c, d, &p).unwrap();
        let in_guard_band = chi_p.max(chi_q) >= 0.0 && chi_p.max(chi_q) < DEFAULT_EPS;
        if param_intersect(a, b, c, d) {
            prop_assert!(!disjoint);
        } else if in_guard_band {
            prop_assert!(!disjoint);
        } else {
            prop_assert!(disjoint);
        }
        if chi_p > 0.0 {
            // q lies strictly on one side of p's line
            prop_assert!(!param_intersect(a, b, c, d));
        }
    }

    #[test]
    fn sacs_holds_under_pose_and_breaks_under_mirror(asset in polyline("a", 7), p in pose()) {
        let world = apply_pose(&asset, &p);
        let r = sacs_residual(&asset, &world).unwrap();
        prop_assert!(r.max_abs_delta() <= 1e-6);
        prop_assert!(r.max_margin() <= 1e-6);

        let spread = (2..asset.node_count())
            .map(|k| orientation(asset.nodes[0], asset.nodes[1], asset.nodes[k]).abs())
            .fold(0.0, f64::max);
        prop_assume!(spread > 1e-3);
        let mirrored: Vec<Point2> = world.iter().map(|q| Point2::new(-q.x, q.y)).collect();
        let r = sacs_residual(&asset, &mirrored).unwrap();
        prop_assert!(r.max_margin() > 1e-6);
    }

    #[test]
    fn counts_match_enumeration(
        assets in prop::collection::vec(polyline("x", 6), 1..5),
        phase2 in any::<bool>(),
    ) {
        let assets: Vec<RoadAsset> = assets
            .into_iter()
            .enumerate()
            .map(|(k, mut a)| { a.id = format!("a{k}"); a })
            .collect();
        let phase = if phase2 { Phase::Phase2 } else { Phase::Phase1 };
        prop_assert_eq!(
            count_constraints(&assets, phase),
            tally_constraints(&enumerate_constraints(&assets, phase), phase)
        );
    }

    #[test]
    fn cacs_ignores_asset_order(
        a in polyline("a", 5), b in polyline("b", 5), c in polyline("c", 5),
        pa in pose(), pb in pose(), pc in pose(),
    ) {
        let fwd = vec![a.clone(), b.clone(), c.clone()];
        let rev = vec![c, b, a];
        let v1 = cacs_check(&fwd, &Placement::from_poses(&fwd, &[pa, pb, pc]), DEFAULT_EPS);
        let v2 = cacs_check(&rev, &Placement::from_poses(&rev, &[pc, pb, pa]), DEFAULT_EPS);
        prop_assert_eq!(v1, v2);
    }

    #[test]
    fn shrinking_the_space_only_adds_outside_nodes(a in polyline("a", 6), p in pose(), f in 0.3..0.99f64) {
        let space = Space::square(150.0).unwrap();
        let small = space.scaled(f).unwrap();
        let assets = vec![a];
        let pl = Placement::from_poses(&assets, &[Pose::new(p.tx + 75.0, p.ty + 75.0, p.theta)]);
        let key = |v: Vec<xcity_core::constraints::ContainmentViolation>| {
            v.into_iter().map(|c| c.node).collect::<Vec<_>>()
        };
        let big = key(containment_check(&assets, &pl, &space));
        let tight = key(containment_check(&assets, &pl, &small));
        prop_assert!(big.iter().all(|n| tight.contains(n)));
    }

    #[test]
    fn penalty_zero_iff_feasible(
        a in polyline("a", 5), b in polyline("b", 5),
        pa in pose(), pb in pose(),
    ) {
        let space = Space::square(80.0).unwrap();
        let assets = vec![a, b];
        let shift = |p: Pose| Pose::new(p.tx * 0.4 + 40.0, p.ty * 0.4 + 40.0, p.theta);
        let pl = Placement::from_poses(&assets, &[shift(pa), shift(pb)]);
        let zero = penalty(&assets, &pl, &space, Weights::default(), DEFAULT_EPS) == 0.0;
        prop_assert_eq!(zero, feasibility_report(&assets, &pl, &space, Tolerances::default()).feasible);
    }

    #[test]
    fn simplification_is_idempotent_and_bounded(
        pts in prop::collection::vec(point(), 2..40),
        tol in 0.1..10.0f64,
    ) {
        let once = simplify_nodes(&pts, tol);
        prop_assert_eq!(&simplify_nodes(&once, tol), &once);
        let kept = simplify_indices(&pts, tol);
        prop_assert_eq!(kept[0], 0);
        prop_assert_eq!(*kept.last().unwrap(), pts.len() - 1);
        for w in kept.windows(2) {
            for k in w[0] + 1..w[1] {
                prop_assert!(point_segment_distance(pts[k], pts[w[0]], pts[w[1]]) <= tol);
            }
        }
    }

    #[test]
    fn projection_tracks_haversine(
        lat in -60.0..60.0f64,
        lon in -179.0..179.0f64,
        bearing in 0.0..std::f64::consts::TAU,
        dist in 1.0..2000.0f64,
    ) {
        let dlat = (dist * bearing.cos() / 6_371_000.0).to_degrees();
        let dlon = (dist * bearing.sin() / (6_371_000.0 * lat.to_radians().cos())).to_degrees();
        let a = LatLon { lat, lon };
        let b = LatLon { lat: lat + dlat, lon: lon + dlon };
        let g = RawOsmGraph { nodes: BTreeMap::from([(1, a), (2, b)]), ways: Vec::new() };
        let p = project_local(&g);
        let planar = (p[&1].sub(p[&2])).norm();
        let truth = haversine(a, b);
        prop_assert!((planar - truth).abs() / truth < 1e-3, "{planar} vs {truth}");
    }
}
