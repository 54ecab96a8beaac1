//! SVG pictures of recorded episodes.
//!
//! Each agent's path is a polyline from its start (filled circle) to its
//! end (hollow circle). An agent that never moves is drawn as its start
//! marker alone. Coordinates are printed with a fixed number of decimals,
//! so a trace always renders to the same bytes.

use std::fmt::Write as _;
use std::path::Path;

use gather_core::env::EpisodeTrace;
use gather_core::geometry::Position;

/// Drawing options.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    /// Canvas width in pixels; the height follows the aspect ratio.
    pub width: f64,
    /// Draw each agent's visibility disc around its start position.
    pub visibility_discs: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 600.0,
            visibility_discs: false,
        }
    }
}

const MARGIN_PX: f64 = 20.0;
const MARKER_R: f64 = 4.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Per-agent position sequence: the initial position followed by the
/// position after every recorded step.
pub fn agent_paths(trace: &EpisodeTrace) -> Vec<Vec<Position>> {
    let mut paths: Vec<Vec<Position>> =
        trace.header.initial_positions.iter().map(|&p| vec![p]).collect();
    for r in &trace.records {
        for (path, &p) in paths.iter_mut().zip(&r.positions) {
            path.push(p);
        }
    }
    paths
}

/// Drops consecutive repeats, so a stationary agent has a single point.
fn distinct_points(path: &[Position]) -> Vec<Position> {
    let mut out: Vec<Position> = Vec::with_capacity(path.len());
    for &p in path {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    out
}

/// Maps world coordinates (y up) into the canvas (y down).
struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Position>, pad: f64, width: f64) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min_x = min_x.min(p.x - pad);
            max_x = max_x.max(p.x + pad);
            min_y = min_y.min(p.y - pad);
            max_y = max_y.max(p.y + pad);
        }
        // A single point (or none) still gets a unit-sized world box.
        let span_x = (max_x - min_x).max(1.0);
        let span_y = (max_y - min_y).max(1.0);
        let inner = width - 2.0 * MARGIN_PX;
        let scale = inner / span_x.max(span_y);
        Self {
            min_x: (min_x + max_x) / 2.0 - span_x / 2.0,
            max_y: (min_y + max_y) / 2.0 + span_y / 2.0,
            scale,
            width,
            height: span_y * scale + 2.0 * MARGIN_PX,
        }
    }

    fn map(&self, p: Position) -> (f64, f64) {
        (
            MARGIN_PX + (p.x - self.min_x) * self.scale,
            MARGIN_PX + (self.max_y - p.y) * self.scale,
        )
    }
}

/// Renders `trace` as an SVG 1.1 document.
pub fn render_svg(trace: &EpisodeTrace, opts: &RenderOptions) -> String {
    let mut svg = String::new();
    let header = |svg: &mut String, w: f64, h: f64| {
        svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
        );
    };
    let n = trace.header.initial_positions.len();
    let steps = trace.records.len();
    if steps == 0 {
        header(&mut svg, opts.width, opts.width);
        let _ = writeln!(svg, "<!-- empty trace: agents={n} steps=0 -->");
        svg.push_str("</svg>\n");
        return svg;
    }
    let paths = agent_paths(trace);
    let pad = if opts.visibility_discs {
        trace.header.visibility
    } else {
        0.0
    };
    let frame = Frame::fit(paths.iter().flatten().copied(), pad, opts.width);
    header(&mut svg, frame.width, frame.height);
    let _ = writeln!(
        svg,
        "<!-- agents={n} steps={steps} visibility={} s_max={} conv_radius={} -->",
        trace.header.visibility, trace.header.s_max, trace.header.conv_radius
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{:.0}\" height=\"{:.0}\" fill=\"white\"/>",
        frame.width, frame.height
    );
    if opts.visibility_discs {
        svg.push_str("<g id=\"visibility\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\">\n");
        for path in &paths {
            let (x, y) = frame.map(path[0]);
            let r = trace.header.visibility * frame.scale;
            let _ = writeln!(svg, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r:.3}\"/>");
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("<g id=\"paths\" fill=\"none\" stroke-width=\"1.5\">\n");
    for (i, path) in paths.iter().enumerate() {
        let points = distinct_points(path);
        if points.len() < 2 {
            continue;
        }
        let coords: Vec<String> = points
            .iter()
            .map(|&p| {
                let (x, y) = frame.map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            svg,
            "<polyline id=\"path-{i}\" stroke=\"{}\" points=\"{}\"/>",
            PALETTE[i % PALETTE.len()],
            coords.join(" ")
        );
    }
    svg.push_str("</g>\n<g id=\"markers\" stroke-width=\"1.5\">\n");
    for (i, path) in paths.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let (sx, sy) = frame.map(path[0]);
        let _ = writeln!(
            svg,
            "<circle id=\"start-{i}\" cx=\"{sx:.3}\" cy=\"{sy:.3}\" r=\"{MARKER_R}\" fill=\"{color}\" stroke=\"{color}\"/>"
        );
        let end = *path.last().expect("paths start with the initial position");
        if end != path[0] {
            let (ex, ey) = frame.map(end);
            let _ = writeln!(
                svg,
                "<circle id=\"end-{i}\" cx=\"{ex:.3}\" cy=\"{ey:.3}\" r=\"{MARKER_R}\" fill=\"white\" stroke=\"{color}\"/>"
            );
        }
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}

/// Renders `trace` into the file at `path`.
pub fn render_trace(trace: &EpisodeTrace, path: &Path, opts: &RenderOptions) -> std::io::Result<()> {
    std::fs::write(path, render_svg(trace, opts))
}
