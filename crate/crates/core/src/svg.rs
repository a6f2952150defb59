//! Deterministic SVG drawings of placements and transitions.

use std::fmt::Write as _;

use quick_xml::escape::escape;

use crate::asset::{Placement, RoadAsset};
use crate::geometry::{Point2, Space};
use crate::search::phase2::ChosenTransition;

const WIDTH_PX: f64 = 800.0;
const MARGIN: f64 = 0.05;
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

struct View {
    lo: Point2,
    hi: Point2,
    scale: f64,
    pad: f64,
}

impl View {
    fn new(space: &Space) -> Self {
        let (lo, hi) = space.bbox();
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
        let scale = WIDTH_PX / ((hi.x - lo.x).max(1e-9) * (1.0 + 2.0 * MARGIN));
        View {
            lo,
            hi,
            scale,
            pad: span * MARGIN,
        }
    }

    fn width(&self) -> f64 {
        (self.hi.x - self.lo.x + 2.0 * self.pad) * self.scale
    }

    fn height(&self) -> f64 {
        (self.hi.y - self.lo.y + 2.0 * self.pad) * self.scale
    }

    // SVG's y axis points down.
    fn map(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.lo.x + self.pad) * self.scale,
            (self.hi.y - p.y + self.pad) * self.scale,
        )
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    // avoid "-0.000"
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0.000".to_string()
    } else {
        s
    }
}

fn pt(view: &View, p: Point2) -> String {
    let (x, y) = view.map(p);
    format!("{},{}", num(x), num(y))
}

/// Draws the space outline, each placed asset (solid segments, node dots,
/// id label at its centroid) and each transition as a dashed line. Only
/// transitions carry a dash pattern.
pub fn render_svg(
    space: &Space,
    assets: &[RoadAsset],
    placement: &Placement,
    transitions: &[ChosenTransition],
) -> String {
    placement.debug_check(assets);
    let view = View::new(space);
    let stroke = (1.5f64).max(view.scale * 0.002 * (view.hi.x - view.lo.x));
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = num(view.width()),
        h = num(view.height())
    );
    let pts: Vec<String> = space.vertices().iter().map(|v| pt(&view, *v)).collect();
    let _ = writeln!(
        s,
        r##"  <polygon class="space" points="{}" fill="#f7f7f7" stroke="#000000" stroke-width="{}"/>"##,
        pts.join(" "),
        num(stroke)
    );

    for (k, asset) in assets.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let world = placement.world(k);
        let id = escape(asset.id.as_str());
        let _ = writeln!(s, r#"  <g class="asset" id="asset-{id}">"#);
        for &(a, b) in &asset.segments {
            let _ = writeln!(
                s,
                r#"    <path d="M {} L {}" stroke="{color}" stroke-width="{}" fill="none"/>"#,
                pt(&view, world[a]).replace(',', " "),
                pt(&view, world[b]).replace(',', " "),
                num(2.0 * stroke)
            );
        }
        for p in world {
            let (x, y) = view.map(*p);
            let _ = writeln!(
                s,
                r#"    <circle cx="{}" cy="{}" r="{}" fill="{color}"/>"#,
                num(x),
                num(y),
                num(2.5 * stroke)
            );
        }
        let n = world.len().max(1) as f64;
        let c = world.iter().fold(Point2::default(), |acc, p| acc.add(*p)).scale(1.0 / n);
        let (x, y) = view.map(c);
        let _ = writeln!(
            s,
            r##"    <text x="{}" y="{}" font-family="sans-serif" font-size="14" fill="#000000">{id}</text>"##,
            num(x),
            num(y)
        );
        s.push_str("  </g>\n");
    }

    for t in transitions {
        let _ = writeln!(
            s,
            r##"  <path class="transition" d="M {} L {}" stroke="#1f5fd6" stroke-width="{}" stroke-dasharray="8 5" fill="none"/>"##,
            pt(&view, t.from_point).replace(',', " "),
            pt(&view, t.to_point).replace(',', " "),
            num(stroke)
        );
    }
    s.push_str("</svg>\n");
    s
}
