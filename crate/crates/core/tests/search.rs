use std::path::PathBuf;

use xcity_core::asset::{Placement, RoadAsset};
use xcity_core::constraints::{feasibility_report, Tolerances};
use xcity_core::geometry::Space;
use xcity_core::search::oracle::{oracle_search_placement, Grid};
use xcity_core::search::phase1::{search_placement, select_subset, subset_order, Phase1Status, SubsetBudget};
use xcity_core::search::phase2::{candidate_valid, default_phase2_config, optimize_connectivity, TransitionCandidate};
use xcity_core::search::{ExecMode, SearchConfig};

fn load(name: &str) -> RoadAsset {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/preliminary").join(name);
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn preliminary() -> Vec<RoadAsset> {
    vec![load("straight.json"), load("corner.json"), load("tee.json")]
}

fn cfg(seed: u64) -> SearchConfig {
    SearchConfig {
        seed,
        restarts: 4,
        iterations: 20_000,
        ..SearchConfig::default()
    }
}

#[test]
fn every_preliminary_subset_is_placeable() {
    let assets = preliminary();
    let space = Space::square(60.0).unwrap();
    for subset in subset_order(&assets) {
        let chosen: Vec<RoadAsset> = subset.iter().map(|&k| assets[k].clone()).collect();
        let r = search_placement(&chosen, &space, &cfg(1), Tolerances::default()).unwrap();
        assert_eq!(r.status, Phase1Status::Feasible, "subset {subset:?}");
        let fresh = Placement::from_poses(&chosen, &r.placement.poses());
        assert!(feasibility_report(&chosen, &fresh, &space, Tolerances::default()).feasible);
    }
}

#[test]
fn placement_is_reproducible_and_schedule_independent() {
    let assets = preliminary();
    let space = Space::square(60.0).unwrap();
    let a = search_placement(&assets, &space, &cfg(42), Tolerances::default()).unwrap();
    let b = search_placement(&assets, &space, &cfg(42), Tolerances::default()).unwrap();
    let seq = SearchConfig {
        exec: ExecMode::Sequential,
        ..cfg(42)
    };
    let c = search_placement(&assets, &space, &seq, Tolerances::default()).unwrap();
    let json = |r| serde_json::to_string(r).unwrap();
    assert_eq!(json(&a), json(&b));
    assert_eq!(json(&a), json(&c));
}

#[test]
fn selection_takes_everything_when_it_fits() {
    let assets = preliminary();
    let space = Space::square(60.0).unwrap();
    let s = select_subset(&assets, &space, &cfg(3), &SubsetBudget::default(), Tolerances::default()).unwrap();
    assert_eq!(s.subset, vec!["straight", "corner", "tee"]);
    assert_eq!(s.total_value, 6.0);
}

#[test]
fn search_agrees_with_oracle_on_a_snug_pair() {
    let assets = vec![
        RoadAsset::polyline("a", &[(0.0, 0.0), (1.2, 0.0)], 1.0).unwrap(),
        RoadAsset::polyline("b", &[(0.0, 0.0), (1.2, 0.0)], 1.0).unwrap(),
    ];
    let space = Space::square(1.0).unwrap();
    let oracle = oracle_search_placement(
        &assets,
        &space,
        Grid::new(0.05, std::f64::consts::PI / 16.0),
        Tolerances::default(),
        ExecMode::Parallel,
    )
    .unwrap();
    let found = search_placement(&assets, &space, &cfg(8), Tolerances::default()).unwrap();
    assert_eq!(oracle.is_feasible(), found.is_feasible());
}

#[test]
fn connectivity_after_placement() {
    let assets = preliminary();
    let space = Space::square(120.0).unwrap();
    let p1 = search_placement(&assets, &space, &cfg(4), Tolerances::default()).unwrap();
    assert!(p1.is_feasible());
    let r = optimize_connectivity(&assets, &p1.placement, &space, &default_phase2_config(), Tolerances::default()).unwrap();
    assert_eq!(r.c, 3);
    for t in &r.chosen_transitions {
        let c = TransitionCandidate { from: t.from.clone(), to: t.to.clone() };
        assert!(candidate_valid(&c, &assets, &r.placement, Tolerances::default().eps));
    }
}
