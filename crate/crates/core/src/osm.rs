//! Reading a subset of OpenStreetMap XML (nodes, ways, nd refs, tags) and
//! cutting road assets out of it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::{simplify_indices, AssetError, RoadAsset};
use crate::geometry::Point2;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const DEFAULT_SIMPLIFY_TOL: f64 = 1.0;

#[derive(Debug, Error)]
pub enum OsmError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("<{element}> at byte {offset} is missing attribute `{attribute}`")]
    MissingAttribute {
        element: &'static str,
        attribute: &'static str,
        offset: u64,
    },
    #[error("<{element}> at byte {offset}: cannot parse `{attribute}` value `{value}`")]
    BadValue {
        element: &'static str,
        attribute: &'static str,
        value: String,
        offset: u64,
    },
    #[error("node {node} has out-of-range coordinates (lat {lat}, lon {lon})")]
    OutOfRange { node: i64, lat: f64, lon: f64 },
    #[error("way {way} references missing node {node}")]
    DanglingRef { way: i64, node: i64 },
    #[error("way {0} is not in the graph")]
    UnknownWay(i64),
    #[error("no ways selected")]
    EmptySelection,
    #[error(transparent)]
    Asset(#[from] AssetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Way {
    pub id: i64,
    pub refs: Vec<i64>,
    pub tags: BTreeMap<String, String>,
}

impl Way {
    pub fn is_highway(&self) -> bool {
        self.tags.contains_key("highway")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawOsmGraph {
    pub nodes: BTreeMap<i64, LatLon>,
    pub ways: Vec<Way>,
}

impl RawOsmGraph {
    pub fn way(&self, id: i64) -> Option<&Way> {
        self.ways.iter().find(|w| w.id == id)
    }

    /// Ways whose nodes all fall inside the lat/lon box.
    pub fn ways_in_bbox(&self, min: LatLon, max: LatLon) -> Vec<i64> {
        let inside = |n: &i64| {
            self.nodes.get(n).is_some_and(|p| {
                p.lat >= min.lat && p.lat <= max.lat && p.lon >= min.lon && p.lon <= max.lon
            })
        };
        self.ways
            .iter()
            .filter(|w| !w.refs.is_empty() && w.refs.iter().all(inside))
            .map(|w| w.id)
            .collect()
    }

    /// Serializes back to OSM XML covering the parsed subset. Coordinates
    /// use shortest round-trip formatting so re-parsing is exact.
    pub fn to_xml(&self) -> String {
        use quick_xml::escape::escape;
        let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\">\n");
        for (id, p) in &self.nodes {
            let _ = writeln!(s, "  <node id=\"{id}\" lat=\"{}\" lon=\"{}\"/>", p.lat, p.lon);
        }
        for w in &self.ways {
            let _ = writeln!(s, "  <way id=\"{}\">", w.id);
            for r in &w.refs {
                let _ = writeln!(s, "    <nd ref=\"{r}\"/>");
            }
            for (k, v) in &w.tags {
                let _ = writeln!(s, "    <tag k=\"{}\" v=\"{}\"/>", escape(k.as_str()), escape(v.as_str()));
            }
            s.push_str("  </way>\n");
        }
        s.push_str("</osm>\n");
        s
    }
}

fn attr(
    e: &BytesStart<'_>,
    element: &'static str,
    name: &'static str,
    offset: u64,
) -> Result<String, OsmError> {
    for a in e.attributes() {
        let a = a.map_err(|err| OsmError::Xml {
            offset,
            message: err.to_string(),
        })?;
        if a.key.as_ref() == name.as_bytes() {
            return a
                .unescape_value()
                .map(|v| v.into_owned())
                .map_err(|err| OsmError::Xml {
                    offset,
                    message: err.to_string(),
                });
        }
    }
    Err(OsmError::MissingAttribute {
        element,
        attribute: name,
        offset,
    })
}

fn num<T: std::str::FromStr>(
    e: &BytesStart<'_>,
    element: &'static str,
    name: &'static str,
    offset: u64,
) -> Result<T, OsmError> {
    let v = attr(e, element, name, offset)?;
    v.trim().parse().map_err(|_| OsmError::BadValue {
        element,
        attribute: name,
        value: v,
        offset,
    })
}

/// Parses an OSM XML document. Relations and unknown elements are skipped;
/// every way reference must resolve to a parsed node.
pub fn parse_osm(xml: &[u8]) -> Result<RawOsmGraph, OsmError> {
    let mut reader = Reader::from_reader(xml);
    let mut graph = RawOsmGraph::default();
    let mut way: Option<Way> = None;
    loop {
        let offset = reader.buffer_position();
        let ev = reader.read_event().map_err(|e| OsmError::Xml {
            offset: reader.error_position(),
            message: e.to_string(),
        })?;
        match ev {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(ev, Event::Empty(_));
                match e.name().as_ref() {
                    b"node" => {
                        let id: i64 = num(e, "node", "id", offset)?;
                        let lat: f64 = num(e, "node", "lat", offset)?;
                        let lon: f64 = num(e, "node", "lon", offset)?;
                        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                            return Err(OsmError::OutOfRange { node: id, lat, lon });
                        }
                        graph.nodes.insert(id, LatLon { lat, lon });
                    }
                    b"way" => {
                        let w = Way {
                            id: num(e, "way", "id", offset)?,
                            refs: Vec::new(),
                            tags: BTreeMap::new(),
                        };
                        if empty {
                            graph.ways.push(w);
                        } else {
                            way = Some(w);
                        }
                    }
                    b"nd" => {
                        if let Some(w) = way.as_mut() {
                            w.refs.push(num(e, "nd", "ref", offset)?);
                        }
                    }
                    b"tag" => {
                        if let Some(w) = way.as_mut() {
                            let k = attr(e, "tag", "k", offset)?;
                            let v = attr(e, "tag", "v", offset)?;
                            w.tags.insert(k, v);
                        }
                    }
                    _ => {}
                }
            }
            Event::End(ref e) if e.name().as_ref() == b"way" => {
                if let Some(w) = way.take() {
                    graph.ways.push(w);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    for w in &graph.ways {
        if let Some(&missing) = w.refs.iter().find(|r| !graph.nodes.contains_key(r)) {
            return Err(OsmError::DanglingRef {
                way: w.id,
                node: missing,
            });
        }
    }
    Ok(graph)
}

fn project_about(p: LatLon, origin: LatLon) -> Point2 {
    let k = EARTH_RADIUS_M * origin.lat.to_radians().cos();
    Point2::new(
        k * (p.lon - origin.lon).to_radians(),
        EARTH_RADIUS_M * (p.lat - origin.lat).to_radians(),
    )
}

fn mean_latlon<'a>(pts: impl Iterator<Item = &'a LatLon>) -> LatLon {
    let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
    for p in pts {
        lat += p.lat;
        lon += p.lon;
        n += 1;
    }
    let n = n.max(1) as f64;
    LatLon {
        lat: lat / n,
        lon: lon / n,
    }
}

/// Equirectangular projection to local meters about the mean position of
/// all nodes, which lands on the origin.
pub fn project_local(graph: &RawOsmGraph) -> BTreeMap<i64, Point2> {
    let origin = mean_latlon(graph.nodes.values());
    graph
        .nodes
        .iter()
        .map(|(&id, &p)| (id, project_about(p, origin)))
        .collect()
}

/// Great-circle distance in meters.
pub fn haversine(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Builds one asset from the selected ways.
///
/// Nodes shared by osm id become one asset node. Each way is simplified
/// between its pinned nodes (way endpoints and nodes used more than once),
/// so junctions survive down-sampling. The result is recentered on its
/// node centroid.
pub fn extract_asset(
    graph: &RawOsmGraph,
    way_ids: &[i64],
    simplify_tol: f64,
    id: &str,
    value: f64,
) -> Result<RoadAsset, OsmError> {
    if way_ids.is_empty() {
        return Err(OsmError::EmptySelection);
    }
    let mut seen_ways = HashSet::new();
    let mut ways = Vec::new();
    for &w in way_ids {
        let way = graph.way(w).ok_or(OsmError::UnknownWay(w))?;
        if seen_ways.insert(w) {
            ways.push(way);
        }
    }
    for w in &ways {
        if let Some(&missing) = w.refs.iter().find(|r| !graph.nodes.contains_key(r)) {
            return Err(OsmError::DanglingRef { way: w.id, node: missing });
        }
    }

    let origin = mean_latlon(ways.iter().flat_map(|w| w.refs.iter().map(|r| &graph.nodes[r])));
    let mut uses: HashMap<i64, usize> = HashMap::new();
    for w in &ways {
        for r in &w.refs {
            *uses.entry(*r).or_default() += 1;
        }
    }

    let mut index: HashMap<i64, usize> = HashMap::new();
    let mut nodes: Vec<Point2> = Vec::new();
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut seg_seen = HashSet::new();
    for w in &ways {
        let refs: Vec<i64> = {
            let mut r = w.refs.clone();
            r.dedup();
            r
        };
        if refs.len() < 2 {
            continue;
        }
        let pts: Vec<Point2> = refs.iter().map(|r| project_about(graph.nodes[r], origin)).collect();
        let last = refs.len() - 1;
        let mut kept = Vec::new();
        let mut start = 0;
        for k in 1..=last {
            if k == last || uses[&refs[k]] > 1 {
                let run = simplify_indices(&pts[start..=k], simplify_tol);
                kept.extend(run.into_iter().skip(usize::from(start > 0)).map(|i| start + i));
                start = k;
            }
        }
        let mut prev: Option<usize> = None;
        for k in kept {
            let node = *index.entry(refs[k]).or_insert_with(|| {
                nodes.push(pts[k]);
                nodes.len() - 1
            });
            if let Some(p) = prev {
                if p != node && seg_seen.insert((p.min(node), p.max(node))) {
                    segments.push((p.min(node), p.max(node)));
                }
            }
            prev = Some(node);
        }
    }
    let n = nodes.len().max(1) as f64;
    let c = nodes.iter().fold(Point2::default(), |acc, p| acc.add(*p)).scale(1.0 / n);
    let nodes = nodes.into_iter().map(|p| p.sub(c)).collect();
    Ok(RoadAsset::new(id, nodes, segments, value, Vec::new())?)
}
