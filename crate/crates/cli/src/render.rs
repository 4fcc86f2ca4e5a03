//! SVG figures. Coordinates are written with four decimals so output is
//! byte-stable for fixed inputs.

use std::fmt::Write as _;

use holonomy_core::{
    advance_section, build_quotient, singularities_in_window, step_decomposition, Gluing, Scene,
    TraceStatus, TreePoint, Window,
};

use crate::commands::{gluing, ray_or_sample};
use crate::{GluingArg, Outcome, Status};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

/// Start values drawn in the blowup figure.
pub const BLOWUP_STARTS: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

/// Affine map from a world box onto the drawing area, north up.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn sx(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn clamp_y(&self, y: f64) -> f64 {
        y.clamp(self.y0, self.y1)
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Self {
        let mut body = String::new();
        writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        )
        .unwrap();
        writeln!(
            body,
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        )
        .unwrap();
        Svg { body }
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64) {
        writeln!(
            self.body,
            "<line x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>",
            a.0, a.1, b.0, b.1
        )
        .unwrap();
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points
            .iter()
            .map(|p| format!("{:.4},{:.4}", p.0, p.1))
            .collect();
        writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        )
        .unwrap();
    }

    fn circle(&mut self, c: (f64, f64), r: f64, fill: &str, stroke: &str) {
        writeln!(
            self.body,
            "<circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"{r}\" fill=\"{fill}\" stroke=\"{stroke}\"/>",
            c.0, c.1
        )
        .unwrap();
    }

    fn text(&mut self, at: (f64, f64), size: f64, anchor: &str, s: &str) {
        writeln!(
            self.body,
            "<text x=\"{:.4}\" y=\"{:.4}\" font-size=\"{size}\" font-family=\"sans-serif\" text-anchor=\"{anchor}\">{s}</text>",
            at.0, at.1
        )
        .unwrap();
    }

    /// Upward triangle marking a blowup.
    fn blowup_glyph(&mut self, tip: (f64, f64), color: &str) {
        writeln!(
            self.body,
            "<polygon points=\"{:.4},{:.4} {:.4},{:.4} {:.4},{:.4}\" fill=\"{color}\"/>",
            tip.0,
            tip.1,
            tip.0 - 5.0,
            tip.1 + 9.0,
            tip.0 + 5.0,
            tip.1 + 9.0
        )
        .unwrap();
    }

    fn axes(&mut self, f: &Frame, x_label: &str, y_label: &str) {
        let (left, right) = (f.sx(f.x0), f.sx(f.x1));
        let (bottom, top) = (f.sy(f.y0), f.sy(f.y1));
        self.line((left, bottom), (right, bottom), "black", 1.0);
        self.line((left, bottom), (left, top), "black", 1.0);
        for i in 0..=5 {
            let x = f.x0 + (f.x1 - f.x0) * i as f64 / 5.0;
            let y = f.y0 + (f.y1 - f.y0) * i as f64 / 5.0;
            self.line((f.sx(x), bottom), (f.sx(x), bottom + 4.0), "black", 1.0);
            self.text((f.sx(x), bottom + 16.0), 10.0, "middle", &format!("{x:.4}"));
            self.line((left - 4.0, f.sy(y)), (left, f.sy(y)), "black", 1.0);
            self.text((left - 6.0, f.sy(y) + 3.0), 10.0, "end", &format!("{y:.4}"));
        }
        self.text(
            ((left + right) / 2.0, HEIGHT - 10.0),
            12.0,
            "middle",
            x_label,
        );
        self.text((12.0, (top + bottom) / 2.0), 12.0, "middle", y_label);
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn svg_outcome(svg: Svg) -> Result<Outcome, String> {
    Ok(Outcome {
        text: svg.finish(),
        status: Status::Pass,
    })
}

/// Sections along one eastward ray, singularities near it, and blowup marks.
pub fn blowup_figure(
    scene: &Scene,
    horizon: f64,
    base: Option<&[f64]>,
    seed: u64,
) -> Result<Outcome, String> {
    let ray = ray_or_sample(scene, base, seed);
    let f = Frame {
        x0: 0.0,
        x1: horizon,
        y0: -3.0,
        y1: 3.0,
    };
    let mut svg = Svg::new();
    let window = Window::new(
        ray.base[0],
        ray.base[0] + horizon,
        ray.base[1] + f.y0,
        ray.base[1] + f.y1,
    );
    let hits = singularities_in_window(scene, &window).map_err(|e| e.to_string())?;
    for h in &hits {
        let c = (
            f.sx(h.position[0] - ray.base[0]),
            f.sy(h.position[1] - ray.base[1]),
        );
        if h.magnifying {
            svg.circle(c, 2.0, "black", "none");
        } else {
            svg.circle(c, 2.0, "none", "gray");
        }
    }
    svg.axes(&f, "distance east", "section value");
    for (i, &x) in BLOWUP_STARTS.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let tr = advance_section(scene, &ray, x, horizon).map_err(|e| e.to_string())?;
        // Sections are locally constant, so each sample holds until the next event.
        let mut pts = Vec::with_capacity(2 * tr.samples.len() + 1);
        for (k, &(t, v)) in tr.samples.iter().enumerate() {
            if k > 0 {
                let prev = tr.samples[k - 1].1;
                pts.push((f.sx(t), f.sy(f.clamp_y(prev))));
            }
            pts.push((f.sx(t), f.sy(f.clamp_y(v))));
        }
        if let TraceStatus::BlownUp { t_max, .. } = tr.status {
            let last = tr.samples.last().map_or(x, |s| s.1);
            pts.push((f.sx(t_max), f.sy(f.clamp_y(last))));
            pts.push((f.sx(t_max), f.sy(f.y1)));
            svg.polyline(&pts, color);
            svg.blowup_glyph((f.sx(t_max), f.sy(f.y1) - 10.0), color);
        } else {
            svg.polyline(&pts, color);
        }
        svg.text(
            (f.sx(0.0) + 4.0, f.sy(f.clamp_y(x)) - 3.0),
            10.0,
            "start",
            &format!("x = {x}"),
        );
    }
    svg_outcome(svg)
}

/// Fibers along a line of negative slope and the pieces of the base fiber they cover.
pub fn stepmap_figure(scene: &Scene, base: Option<&[f64]>, slope: f64) -> Result<Outcome, String> {
    let base = match base {
        Some([e, n]) => [*e, *n],
        _ => [0.2113, 0.1379],
    };
    let d = step_decomposition(scene, base, slope, 5, 0.05).map_err(|e| e.to_string())?;
    let last = d.segments.last().map_or(base, |s| s.position);
    let span = (last[0] - base[0]).max(1.0);
    let f = Frame {
        x0: -0.1 * span,
        x1: 1.1 * span,
        y0: -slope * 1.1 * span - 0.6,
        y1: 0.6,
    };
    let mut svg = Svg::new();
    svg.axes(&f, "east offset", "north offset");
    svg.line(
        (f.sx(0.0), f.sy(0.0)),
        (f.sx(1.05 * span), f.sy(-slope * 1.05 * span)),
        "#999999",
        1.0,
    );
    for (i, s) in d.segments.iter().enumerate() {
        let p = [s.position[0] - base[0], s.position[1] - base[1]];
        let color = PALETTE[i % PALETTE.len()];
        svg.line(
            (f.sx(p[0]), f.sy(p[1] - 0.4)),
            (f.sx(p[0]), f.sy(p[1] + 0.4)),
            color,
            2.0,
        );
        svg.text(
            (f.sx(p[0]) + 4.0, f.sy(p[1] + 0.4)),
            10.0,
            "start",
            &format!("[{}, {})", s.interval.0, s.interval.1),
        );
    }
    svg.text(
        (WIDTH - MARGIN, MARGIN - 10.0),
        11.0,
        "end",
        &format!("disjoint: {}", d.disjoint),
    );
    svg_outcome(svg)
}

/// The truncated tree, each vertex colored by its class in the quotient.
pub fn tree_figure(g: GluingArg, depth: u32) -> Result<Outcome, String> {
    let depth = depth.clamp(1, 6);
    let q = build_quotient(gluing(g), depth, 1).map_err(|e| e.to_string())?;
    let f = Frame {
        x0: 0.0,
        x1: 1.0,
        y0: -(depth as f64),
        y1: 0.0,
    };
    let mut svg = Svg::new();
    // Vertex `v0·word` sits at the center of its dyadic interval.
    let place = |word: &str| -> (f64, f64) {
        let mut lo = 0.0;
        let mut w = 1.0;
        for c in word.chars() {
            w /= 2.0;
            if c == 'R' {
                lo += w;
            }
        }
        (f.sx(lo + w / 2.0), f.sy(-(word.len() as f64)))
    };
    let mut words = vec![String::new()];
    let mut level = vec![String::new()];
    for _ in 0..depth {
        level = level
            .iter()
            .flat_map(|w| [format!("{w}L"), format!("{w}R")])
            .collect();
        words.extend(level.iter().cloned());
    }
    for w in words.iter().filter(|w| !w.is_empty()) {
        svg.line(place(&w[..w.len() - 1]), place(w), "#bbbbbb", 1.0);
    }
    for w in &words {
        let class = q
            .class_of(&TreePoint::vertex(w, 1))
            .map_err(|e| e.to_string())?;
        let color = PALETTE[class % PALETTE.len()];
        svg.circle(place(w), 4.0, color, "black");
    }
    let name = match q.gluing {
        Gluing::A => "A",
        Gluing::B => "B",
    };
    svg.text(
        (WIDTH - MARGIN, MARGIN - 10.0),
        11.0,
        "end",
        &format!("gluing {name}, {} classes", q.class_count()),
    );
    svg_outcome(svg)
}
