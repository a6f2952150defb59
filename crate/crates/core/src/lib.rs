//! Layout synthesis for road assets: rigid placement of small road graphs
//! into a convex construction space, subset selection by value, and
//! arrangement for direct connectivity through straight transition roads.

pub mod asset;
pub mod constraints;
pub mod geometry;
pub mod osm;
pub mod search;
pub mod svg;

pub use asset::{Placement, Pose, RoadAsset};
pub use constraints::{feasibility_report, FeasibilityReport, Tolerances};
pub use geometry::{Point2, Segment2, Space};
pub use search::{ExecMode, SearchConfig};
