//! Static SVG rendering of study bubbles and fitted concordance curves.
//!
//! Output is fully deterministic: fixed canvas, fixed palette, fixed
//! number formatting. Bubble areas are proportional to the inverse
//! variances of the study estimates.

use ctau_core::meta::StudySummary;

pub struct CurveSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 640.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 500.0;
const MAX_BUBBLE_RADIUS: f64 = 14.0;
const PALETTE: [&str; 6] = ["#cc3311", "#0077bb", "#009988", "#ee7733", "#aa3377", "#666633"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn grow(&mut self, v: f64) {
        self.lo = self.lo.min(v);
        self.hi = self.hi.max(v);
    }

    fn padded(mut self, fraction: f64) -> Range {
        if !(self.hi > self.lo) {
            let center = self.lo;
            self.lo = center - 0.5;
            self.hi = center + 0.5;
        }
        let pad = (self.hi - self.lo) * fraction;
        Range { lo: self.lo - pad, hi: self.hi + pad }
    }
}

pub fn render(
    studies: &[StudySummary],
    curves: &[CurveSeries],
    oracle: Option<&CurveSeries>,
) -> Result<String, String> {
    if studies.is_empty() && curves.is_empty() {
        return Err("nothing to plot: no studies and no curves".into());
    }
    let mut x_range = Range { lo: f64::INFINITY, hi: f64::NEG_INFINITY };
    let mut y_range = Range { lo: f64::INFINITY, hi: f64::NEG_INFINITY };
    for s in studies {
        x_range.grow(s.tau);
        y_range.grow(s.c_hat);
    }
    for series in curves.iter().chain(oracle) {
        if series.points.is_empty() {
            return Err(format!("curve {:?} has no points", series.label));
        }
        for &(tau, c) in &series.points {
            x_range.grow(tau);
            y_range.grow(c);
        }
    }
    let x_range = x_range.padded(0.05);
    let mut y_range = y_range.padded(0.08);
    y_range.lo = y_range.lo.max(0.0);
    y_range.hi = y_range.hi.min(1.0);

    let x_of = |tau: f64| LEFT + (tau - x_range.lo) / (x_range.hi - x_range.lo) * (RIGHT - LEFT);
    let y_of = |c: f64| BOTTOM - (c - y_range.lo) / (y_range.hi - y_range.lo) * (BOTTOM - TOP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" stroke=\"black\" stroke-width=\"1\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" stroke=\"black\" stroke-width=\"1\"/>\n"
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let tau = x_range.lo + f * (x_range.hi - x_range.lo);
        let x = x_of(tau);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{BOTTOM}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            BOTTOM + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{tau:.2}</text>\n",
            BOTTOM + 20.0
        ));
        let c = y_range.lo + f * (y_range.hi - y_range.lo);
        let y = y_of(c);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            LEFT - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{c:.2}</text>\n",
            LEFT - 9.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">τ</text>\n",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 45.0
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">C(τ)</text>\n",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    ));

    // study bubbles, area proportional to 1/var
    if !studies.is_empty() {
        let max_weight = studies.iter().map(|s| 1.0 / s.var_hat).fold(0.0_f64, f64::max);
        for s in studies {
            let r = MAX_BUBBLE_RADIUS * ((1.0 / s.var_hat) / max_weight).sqrt();
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"#4878a8\" fill-opacity=\"0.45\" stroke=\"#2a4a6a\" stroke-width=\"1\"/>\n",
                x_of(s.tau),
                y_of(s.c_hat),
                r
            ));
        }
    }

    // oracle first so fitted curves draw on top
    if let Some(series) = oracle {
        svg.push_str(&polyline(series, "black", &x_of, &y_of));
    }
    for (i, series) in curves.iter().enumerate() {
        svg.push_str(&polyline(series, PALETTE[i % PALETTE.len()], &x_of, &y_of));
    }

    // legend
    let mut legend_y = TOP + 10.0;
    let legend_x = RIGHT + 12.0;
    for (i, series) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        svg.push_str(&format!(
            "<rect x=\"{legend_x:.2}\" y=\"{:.2}\" width=\"18\" height=\"4\" fill=\"{color}\"/>\n",
            legend_y - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{legend_y:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            legend_x + 24.0,
            escape(&series.label)
        ));
        legend_y += 18.0;
    }
    if let Some(series) = oracle {
        svg.push_str(&format!(
            "<rect x=\"{legend_x:.2}\" y=\"{:.2}\" width=\"18\" height=\"4\" fill=\"black\"/>\n",
            legend_y - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{legend_y:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            legend_x + 24.0,
            escape(&series.label)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn polyline(
    series: &CurveSeries,
    color: &str,
    x_of: &impl Fn(f64) -> f64,
    y_of: &impl Fn(f64) -> f64,
) -> String {
    let points: Vec<String> = series
        .points
        .iter()
        .map(|&(tau, c)| format!("{:.2},{:.2}", x_of(tau), y_of(c)))
        .collect();
    format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
        points.join(" ")
    )
}
