//! Plot rendering as plain-text SVG. No external renderer or font metrics:
//! everything is lines, polygons and unstyled text, and the output bytes are
//! a pure function of the input numbers.

use crate::metrics::AggregateRow;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 18.0;
const MARGIN_BOTTOM: f64 = 46.0;

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// SVG coordinate: two decimals, negative zero normalized.
fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Tick label: up to six decimals with trailing zeros trimmed.
fn fmt_tick(v: f64) -> String {
    let mut s = format!("{v:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_ticks(min: f64, max: f64) -> Vec<f64> {
    let range = (max - min).max(1e-12);
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = mag
        * if norm <= 1.0 {
            1.0
        } else if norm <= 2.0 {
            2.0
        } else if norm <= 5.0 {
            5.0
        } else {
            10.0
        };
    let first = (min / step).ceil() * step;
    let mut ticks = Vec::new();
    for i in 0..50 {
        let v = first + i as f64 * step;
        if v > max + 1e-9 * range {
            break;
        }
        ticks.push(v);
    }
    ticks
}

/// Maps data coordinates into the fixed plot rectangle.
struct Frame {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        let (xmin, xmax) = pad_range(xmin, xmax, 0.0);
        let (ymin, ymax) = pad_range(ymin, ymax, 0.05);
        Frame {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    fn plot_w(&self) -> f64 {
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_h(&self) -> f64 {
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.xmin) / (self.xmax - self.xmin) * self.plot_w()
    }

    fn sy(&self, y: f64) -> f64 {
        MARGIN_TOP + self.plot_h() - (y - self.ymin) / (self.ymax - self.ymin) * self.plot_h()
    }
}

fn pad_range(min: f64, max: f64, frac: f64) -> (f64, f64) {
    if min > max {
        return (0.0, 1.0);
    }
    let mut span = max - min;
    if span <= 0.0 {
        span = min.abs().max(1.0);
        return (min - 0.5 * span, max + 0.5 * span);
    }
    (min - frac * span, max + frac * span)
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut body = String::with_capacity(16 * 1024);
        body.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n"
        ));
        body.push_str(&format!(
            "<title>{}</title>\n<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n",
            xml_escape(title)
        ));
        body.push_str(&format!(
            "<clipPath id=\"plot\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath>\n",
            fmt2(MARGIN_LEFT),
            fmt2(MARGIN_TOP),
            fmt2(WIDTH - MARGIN_LEFT - MARGIN_RIGHT),
            fmt2(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
        ));
        Svg { body }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        self.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" style=\"{style}\"/>\n",
            fmt2(x1),
            fmt2(y1),
            fmt2(x2),
            fmt2(y2)
        ));
    }

    fn points_attr(pts: &[(f64, f64)]) -> String {
        let mut s = String::with_capacity(pts.len() * 14);
        for (i, (x, y)) in pts.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&fmt2(*x));
            s.push(',');
            s.push_str(&fmt2(*y));
        }
        s
    }

    fn polyline(&mut self, class: &str, pts: &[(f64, f64)], style: &str) {
        self.body.push_str(&format!(
            "<polyline class=\"{class}\" points=\"{}\" style=\"fill:none;{style}\" \
             clip-path=\"url(#plot)\"/>\n",
            Self::points_attr(pts)
        ));
    }

    fn polygon(&mut self, class: &str, pts: &[(f64, f64)], style: &str) {
        self.body.push_str(&format!(
            "<polygon class=\"{class}\" points=\"{}\" style=\"{style}\" \
             clip-path=\"url(#plot)\"/>\n",
            Self::points_attr(pts)
        ));
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, style: &str) {
        self.body.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" style=\"{style}\"/>\n",
            fmt2(x),
            fmt2(y),
            fmt2(w),
            fmt2(h)
        ));
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, style: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" style=\"{style}\" clip-path=\"url(#plot)\"/>\n",
            fmt2(x),
            fmt2(y),
            fmt2(r)
        ));
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, content: &str) {
        self.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\">{}</text>\n",
            fmt2(x),
            fmt2(y),
            xml_escape(content)
        ));
    }

    fn axes(&mut self, frame: &Frame, x_label: &str, y_label: &str) {
        let x0 = MARGIN_LEFT;
        let y0 = MARGIN_TOP;
        let w = frame.plot_w();
        let h = frame.plot_h();
        self.rect(x0, y0, w, h, "fill:none;stroke:#333;stroke-width:1");
        for t in nice_ticks(frame.xmin, frame.xmax) {
            let sx = frame.sx(t);
            self.line(sx, y0 + h, sx, y0 + h + 4.0, "stroke:#333;stroke-width:1");
            self.text(sx, y0 + h + 16.0, "middle", &fmt_tick(t));
        }
        for t in nice_ticks(frame.ymin, frame.ymax) {
            let sy = frame.sy(t);
            self.line(x0 - 4.0, sy, x0, sy, "stroke:#333;stroke-width:1");
            self.text(x0 - 7.0, sy + 3.5, "end", &fmt_tick(t));
        }
        self.text(x0 + w / 2.0, HEIGHT - 8.0, "middle", x_label);
        self.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>\n",
            fmt2(16.0),
            fmt2(y0 + h / 2.0),
            fmt2(16.0),
            fmt2(y0 + h / 2.0),
            xml_escape(y_label)
        ));
    }

    fn legend(&mut self, entries: &[(String, &'static str)]) {
        let x = WIDTH - MARGIN_RIGHT + 14.0;
        for (i, (label, col)) in entries.iter().enumerate() {
            let y = MARGIN_TOP + 14.0 + 18.0 * i as f64;
            self.line(x, y, x + 20.0, y, &format!("stroke:{col};stroke-width:2.5"));
            self.text(x + 26.0, y + 3.5, "start", label);
        }
    }
}

struct AlgorithmCurves<'a> {
    label: &'a str,
    color: &'static str,
    /// `(t, mean, std)` over all runs.
    overall: Vec<(f64, f64, f64)>,
    /// Per-function mean curves.
    per_function: Vec<Vec<(f64, f64)>>,
}

fn collect_curves<'a>(
    rows: &[AggregateRow],
    algorithm_order: &'a [String],
) -> Vec<AlgorithmCurves<'a>> {
    algorithm_order
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let overall = rows
                .iter()
                .filter(|r| &r.algorithm == label && r.function_id.is_none())
                .map(|r| (r.t as f64, r.mean_simple_regret, r.std_simple_regret))
                .collect();
            let mut fids: Vec<usize> = rows
                .iter()
                .filter(|r| &r.algorithm == label)
                .filter_map(|r| r.function_id)
                .collect();
            fids.sort_unstable();
            fids.dedup();
            let per_function = fids
                .iter()
                .map(|&fid| {
                    rows.iter()
                        .filter(|r| &r.algorithm == label && r.function_id == Some(fid))
                        .map(|r| (r.t as f64, r.mean_simple_regret))
                        .collect()
                })
                .collect();
            AlgorithmCurves {
                label,
                color: color(i),
                overall,
                per_function,
            }
        })
        .collect()
}

/// Regret-versus-iteration figure: per algorithm, a thick overall-mean line,
/// thin per-function mean lines and a one-standard-deviation band.
pub fn render_regret_plot(rows: &[AggregateRow], algorithm_order: &[String]) -> String {
    let curves = collect_curves(rows, algorithm_order);
    let mut xmax: f64 = 1.0;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for c in &curves {
        for &(t, m, s) in &c.overall {
            xmax = xmax.max(t);
            ymin = ymin.min(m - s);
            ymax = ymax.max(m + s);
        }
        for f in &c.per_function {
            for &(t, m) in f {
                xmax = xmax.max(t);
                ymin = ymin.min(m);
                ymax = ymax.max(m);
            }
        }
    }
    if !ymin.is_finite() {
        ymin = 0.0;
        ymax = 1.0;
    }
    let frame = Frame::new(1.0, xmax, ymin, ymax);

    let mut svg = Svg::new("simple regret vs. iteration");
    for c in &curves {
        if c.overall.len() > 1 {
            let mut band: Vec<(f64, f64)> = c
                .overall
                .iter()
                .map(|&(t, m, s)| (frame.sx(t), frame.sy(m + s)))
                .collect();
            band.extend(
                c.overall
                    .iter()
                    .rev()
                    .map(|&(t, m, s)| (frame.sx(t), frame.sy(m - s))),
            );
            svg.polygon(
                &format!("band-{}", c.label),
                &band,
                &format!("fill:{};fill-opacity:0.15;stroke:none", c.color),
            );
        }
    }
    for c in &curves {
        for (fi, f) in c.per_function.iter().enumerate() {
            let pts: Vec<(f64, f64)> = f.iter().map(|&(t, m)| (frame.sx(t), frame.sy(m))).collect();
            svg.polyline(
                &format!("fn-{}-{fi}", c.label),
                &pts,
                &format!("stroke:{};stroke-width:0.8;stroke-opacity:0.45", c.color),
            );
        }
    }
    for c in &curves {
        let pts: Vec<(f64, f64)> = c
            .overall
            .iter()
            .map(|&(t, m, _)| (frame.sx(t), frame.sy(m)))
            .collect();
        svg.polyline(
            &format!("mean-{}", c.label),
            &pts,
            &format!("stroke:{};stroke-width:2.5", c.color),
        );
    }
    svg.axes(&frame, "iteration t", "simple regret");
    let entries: Vec<(String, &'static str)> = curves
        .iter()
        .map(|c| (c.label.to_string(), c.color))
        .collect();
    svg.legend(&entries);
    svg.finish()
}

/// Bar chart of total threshold violations per algorithm over the whole batch.
pub fn render_violation_plot(rows: &[AggregateRow], algorithm_order: &[String]) -> String {
    let totals: Vec<usize> = algorithm_order
        .iter()
        .map(|label| {
            rows.iter()
                .filter(|r| &r.algorithm == label && r.function_id.is_none())
                .map(|r| r.total_violations)
                .sum()
        })
        .collect();
    let max_count = totals.iter().copied().max().unwrap_or(0).max(1);
    let frame = Frame::new(0.0, algorithm_order.len() as f64, 0.0, max_count as f64);

    let mut svg = Svg::new("safety violations per algorithm");
    for (i, (label, &count)) in algorithm_order.iter().zip(&totals).enumerate() {
        let x_lo = frame.sx(i as f64 + 0.2);
        let x_hi = frame.sx(i as f64 + 0.8);
        let y_top = frame.sy(count as f64);
        let y_base = frame.sy(0.0);
        svg.rect(
            x_lo,
            y_top,
            x_hi - x_lo,
            y_base - y_top,
            &format!("fill:{};fill-opacity:0.8", color(i)),
        );
        svg.text(
            (x_lo + x_hi) / 2.0,
            y_top - 5.0,
            "middle",
            &count.to_string(),
        );
        svg.text(
            (x_lo + x_hi) / 2.0,
            frame.sy(frame.ymin) + 16.0,
            "middle",
            label,
        );
    }
    // integer y ticks only
    let step = (max_count as f64 / 5.0).ceil().max(1.0) as usize;
    let y0 = MARGIN_TOP;
    let h = frame.plot_h();
    svg.rect(
        MARGIN_LEFT,
        y0,
        frame.plot_w(),
        h,
        "fill:none;stroke:#333;stroke-width:1",
    );
    let mut v = 0;
    while v as f64 <= frame.ymax {
        let sy = frame.sy(v as f64);
        svg.line(
            MARGIN_LEFT - 4.0,
            sy,
            MARGIN_LEFT,
            sy,
            "stroke:#333;stroke-width:1",
        );
        svg.text(MARGIN_LEFT - 7.0, sy + 3.5, "end", &v.to_string());
        v += step;
    }
    svg.text(
        MARGIN_LEFT + frame.plot_w() / 2.0,
        HEIGHT - 8.0,
        "middle",
        "algorithm",
    );
    svg.body.push_str(&format!(
        "<text x=\"16.00\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16.00 {})\">\
         unsafe queries</text>\n",
        fmt2(y0 + h / 2.0),
        fmt2(y0 + h / 2.0)
    ));
    svg.finish()
}

/// Everything the 1-D diagnostic figure shows, precomputed by the caller.
#[derive(Debug, Clone)]
pub struct DiagnosticData {
    pub algorithm: String,
    pub function_id: usize,
    /// Grid coordinates, ascending.
    pub xs: Vec<f64>,
    pub f_true: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub envelope: Vec<f64>,
    /// Lipschitz-certified safe set on the grid after the final iteration.
    pub safe: Vec<bool>,
    pub h: f64,
    pub observations: Vec<(f64, f64)>,
}

/// Final-state picture of one 1-D run: truth, GP mean and confidence band,
/// the Lipschitz lower envelope, the certified safe set and the observations.
pub fn render_diagnostic_plot(d: &DiagnosticData) -> String {
    let finite = |v: &f64| v.is_finite();
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for series in [&d.f_true, &d.mean, &d.lower, &d.upper] {
        for &v in series.iter().filter(|v| finite(v)) {
            ymin = ymin.min(v);
            ymax = ymax.max(v);
        }
    }
    for &(_, y) in &d.observations {
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    ymin = ymin.min(d.h);
    ymax = ymax.max(d.h);
    // the envelope plunges linearly far below everything else; give it a
    // little room but let the clip path cut the rest
    let slack = 0.2 * (ymax - ymin).max(1.0);
    ymin -= slack;
    let frame = Frame::new(
        d.xs.first().copied().unwrap_or(0.0),
        d.xs.last().copied().unwrap_or(1.0),
        ymin,
        ymax,
    );

    let mut svg = Svg::new(&format!(
        "diagnostic: {} on function {}",
        d.algorithm, d.function_id
    ));

    let band: Vec<(f64, f64)> = d
        .xs
        .iter()
        .zip(&d.upper)
        .map(|(&x, &u)| (frame.sx(x), frame.sy(u)))
        .chain(
            d.xs.iter()
                .zip(&d.lower)
                .rev()
                .map(|(&x, &l)| (frame.sx(x), frame.sy(l))),
        )
        .collect();
    svg.polygon(
        "confidence-band",
        &band,
        "fill:#1f77b4;fill-opacity:0.15;stroke:none",
    );

    let series = |ys: &[f64]| -> Vec<(f64, f64)> {
        d.xs.iter()
            .zip(ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| (frame.sx(x), frame.sy(y)))
            .collect()
    };
    svg.polyline("f-true", &series(&d.f_true), "stroke:#000;stroke-width:1.5");
    svg.polyline("gp-mean", &series(&d.mean), "stroke:#1f77b4;stroke-width:1.5");
    svg.polyline(
        "envelope",
        &series(&d.envelope),
        "stroke:#ff7f0e;stroke-width:1.5",
    );
    let h_y = frame.sy(d.h);
    svg.body.push_str(&format!(
        "<line class=\"threshold\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" \
         style=\"stroke:#666;stroke-width:1;stroke-dasharray:5 3\"/>\n",
        fmt2(MARGIN_LEFT),
        fmt2(h_y),
        fmt2(WIDTH - MARGIN_RIGHT),
        fmt2(h_y)
    ));

    // green strip along the bottom marking the certified safe set
    let strip_y = MARGIN_TOP + frame.plot_h() - 7.0;
    let half = if d.xs.len() > 1 {
        (d.xs[1] - d.xs[0]) / 2.0
    } else {
        0.0
    };
    let mut i = 0;
    while i < d.safe.len() {
        if d.safe[i] {
            let start = i;
            while i + 1 < d.safe.len() && d.safe[i + 1] {
                i += 1;
            }
            let x_lo = frame.sx(d.xs[start] - half);
            let x_hi = frame.sx(d.xs[i] + half);
            svg.rect(
                x_lo,
                strip_y,
                x_hi - x_lo,
                5.0,
                "fill:#2ca02c;fill-opacity:0.7",
            );
        }
        i += 1;
    }

    for &(x, y) in &d.observations {
        svg.circle(frame.sx(x), frame.sy(y), 2.5, "fill:#000");
    }

    svg.axes(&frame, "x", "f(x)");
    svg.legend(&[
        ("true function".to_string(), "#000000"),
        ("GP mean".to_string(), "#1f77b4"),
        ("lower envelope".to_string(), "#ff7f0e"),
        ("safe set".to_string(), "#2ca02c"),
    ]);
    svg.finish()
}
