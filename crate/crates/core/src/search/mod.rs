//! Stochastic pose search shared by both phases.
//!
//! Each restart owns a private RNG stream derived from the configured seed
//! and the restart index, so results do not depend on how restarts are
//! scheduled across threads.

mod eval;
mod exec;

pub mod oracle;
pub mod phase1;
pub mod phase2;

pub use eval::{penalty, Weights};
pub use exec::ExecMode;

pub(crate) use eval::Evaluator;
pub(crate) use exec::map_restarts;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::{Pose, RoadAsset};
use crate::geometry::Space;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("search config: {0}")]
    Invalid(String),
}

/// Annealing schedule, penalty weights and budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub seed: u64,
    pub restarts: usize,
    /// Iterations per restart.
    pub iterations: usize,
    /// Temperature in units of penalty / space diameter.
    pub initial_temperature: f64,
    /// Geometric cooling factor applied every iteration.
    pub cooling_rate: f64,
    pub collision_weight: f64,
    pub containment_weight: f64,
    /// Wall-clock budget for one search call, in seconds.
    pub time_budget_secs: f64,
    pub exec: ExecMode,
    /// Upper bound on worker threads; `None` uses the global pool.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 0,
            restarts: 8,
            iterations: 20_000,
            initial_temperature: 0.05,
            cooling_rate: 0.9995,
            collision_weight: 1.0,
            containment_weight: 1.0,
            time_budget_secs: 60.0,
            exec: ExecMode::default(),
            threads: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.restarts == 0 {
            return bad("restarts must be >= 1");
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1");
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return bad("initial_temperature must be > 0");
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate <= 1.0) {
            return bad("cooling_rate must lie in (0, 1]");
        }
        if !(self.collision_weight > 0.0 && self.containment_weight > 0.0) {
            return bad("penalty weights must be > 0");
        }
        if self.time_budget_secs.is_nan() || self.time_budget_secs <= 0.0 {
            return bad("time_budget_secs must be > 0");
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1");
        }
        Ok(())
    }

    pub fn weights(&self) -> Weights {
        Weights {
            collision: self.collision_weight,
            containment: self.containment_weight,
        }
    }

    pub(crate) fn deadline(&self) -> Deadline {
        Deadline::after(self.time_budget_secs)
    }
}

/// RNG stream for one restart.
pub(crate) fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Deadline(Instant);

impl Deadline {
    pub fn after(secs: f64) -> Self {
        let d = Duration::try_from_secs_f64(secs).unwrap_or(Duration::from_secs(u32::MAX as u64));
        Deadline(Instant::now().checked_add(d).unwrap_or_else(|| Instant::now() + Duration::from_secs(u32::MAX as u64)))
    }

    pub fn expired(&self) -> bool {
        Instant::now() >= self.0
    }
}

/// Uniform poses: each asset's centroid lands uniformly in the space's
/// bounding box, with a uniform heading.
pub(crate) fn random_poses<R: Rng>(rng: &mut R, assets: &[RoadAsset], space: &Space) -> Vec<Pose> {
    let (lo, hi) = space.bbox();
    assets
        .iter()
        .map(|a| {
            let x = lo.x + (hi.x - lo.x) * rng.random::<f64>();
            let y = lo.y + (hi.y - lo.y) * rng.random::<f64>();
            let theta = PI - 2.0 * PI * rng.random::<f64>();
            Pose::mapping(a.centroid(), crate::geometry::Point2::new(x, y), theta)
        })
        .collect()
}

/// Why a single asset can never fit in `space`, if a cheap rigid-motion
/// invariant proves it.
pub fn provably_unplaceable(asset: &RoadAsset, space: &Space) -> Option<String> {
    const SLACK: f64 = 1e-9;
    let (d, sd) = (asset.diameter(), space.diameter());
    if d > sd + SLACK {
        return Some(format!(
            "asset `{}` spans {d:.3} m but the space's diameter is {sd:.3} m",
            asset.id
        ));
    }
    let (w, sw) = (asset.min_width(), space.min_width());
    if w > sw + SLACK {
        return Some(format!(
            "asset `{}` is at least {w:.3} m wide in every direction but the space is {sw:.3} m wide",
            asset.id
        ));
    }
    None
}

/// Annealing moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Move {
    Translate(usize),
    Rotate(usize),
    Swap(usize, usize),
}

/// Samples a move and applies it to a copy of `poses`. Returns the indices
/// that changed.
pub(crate) fn propose<R: Rng>(
    rng: &mut R,
    poses: &[Pose],
    assets: &[RoadAsset],
    sigma_xy: f64,
    sigma_theta: f64,
    out: &mut Vec<Pose>,
) -> Move {
    use rand_distr::{Distribution, StandardNormal};
    out.clear();
    out.extend_from_slice(poses);
    let n = poses.len();
    let u: f64 = rng.random();
    let k = rng.random_range(0..n);
    let normal = |rng: &mut R| -> f64 { StandardNormal.sample(rng) };
    if u < 0.10 && n >= 2 {
        let mut j = rng.random_range(0..n - 1);
        if j >= k {
            j += 1;
        }
        // swap where the two centroids sit, keep headings
        let ck = poses[k].apply(assets[k].centroid());
        let cj = poses[j].apply(assets[j].centroid());
        out[k] = Pose::mapping(assets[k].centroid(), cj, poses[k].theta);
        out[j] = Pose::mapping(assets[j].centroid(), ck, poses[j].theta);
        Move::Swap(k, j)
    } else if u < 0.55 {
        let p = poses[k];
        out[k] = Pose::new(
            p.tx + sigma_xy * normal(rng),
            p.ty + sigma_xy * normal(rng),
            p.theta,
        );
        Move::Translate(k)
    } else {
        // rotate about the asset's centroid so the move is local
        let c = assets[k].centroid();
        let world_c = poses[k].apply(c);
        let theta = poses[k].theta + sigma_theta * normal(rng);
        out[k] = Pose::mapping(c, world_c, theta);
        Move::Rotate(k)
    }
}

/// Asset indices a move touches, as a fixed buffer and its length.
pub(crate) fn changed_of(m: Move) -> ([usize; 2], usize) {
    match m {
        Move::Translate(k) | Move::Rotate(k) => ([k, k], 1),
        Move::Swap(i, j) => ([i, j], 2),
    }
}

/// Move step sizes at temperature ratio `t = T / T0`.
pub(crate) fn step_sizes(scale: f64, t: f64) -> (f64, f64) {
    let sigma_xy = (0.25 * scale * t).max(0.002 * scale);
    let sigma_theta = (0.5 * PI * t).max(0.005);
    (sigma_xy, sigma_theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SearchConfig::default().validate().unwrap();
        for bad in [
            SearchConfig { cooling_rate: 1.5, ..SearchConfig::default() },
            SearchConfig { restarts: 0, ..SearchConfig::default() },
            SearchConfig { time_budget_secs: f64::NAN, ..SearchConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn config_json_fills_defaults() {
        let c: SearchConfig = serde_json::from_str(r#"{"seed": 9}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.restarts, SearchConfig::default().restarts);
    }

    #[test]
    fn restart_streams_differ_and_repeat() {
        let a: u64 = restart_rng(1, 0).random();
        let b: u64 = restart_rng(1, 1).random();
        let a2: u64 = restart_rng(1, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn unplaceable_examples() {
        let long = RoadAsset::polyline("l", &[(0.0, 0.0), (10.0, 0.0)], 1.0).unwrap();
        assert!(provably_unplaceable(&long, &Space::square(1.0).unwrap()).is_some());
        // fits along the diagonal even though it is longer than the side
        let diag = RoadAsset::polyline("d", &[(0.0, 0.0), (1.3, 0.0)], 1.0).unwrap();
        assert!(provably_unplaceable(&diag, &Space::square(1.0).unwrap()).is_none());
        let fat = RoadAsset::polyline("f", &[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)], 1.0).unwrap();
        assert!(provably_unplaceable(&fat, &Space::rectangle(0.0, 0.0, 3.0, 1.5).unwrap()).is_some());
    }

    #[test]
    fn moves_keep_rigidity_and_change_only_targets() {
        let assets = vec![
            RoadAsset::polyline("a", &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)], 1.0).unwrap(),
            RoadAsset::polyline("b", &[(0.0, 0.0), (2.0, 0.0)], 1.0).unwrap(),
        ];
        let space = Space::square(10.0).unwrap();
        let mut rng = restart_rng(3, 0);
        let poses = random_poses(&mut rng, &assets, &space);
        let mut out = Vec::new();
        for _ in 0..200 {
            let m = propose(&mut rng, &poses, &assets, 1.0, 0.3, &mut out);
            let changed: Vec<usize> = (0..2).filter(|&k| out[k] != poses[k]).collect();
            match m {
                Move::Translate(k) | Move::Rotate(k) => assert!(changed.iter().all(|&c| c == k)),
                Move::Swap(..) => {}
            }
        }
    }
}
