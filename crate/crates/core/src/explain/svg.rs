use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use super::pearson::CorrelationMatrix;
use super::shap::FeatureAttribution;
use crate::evaluate::MetricSummary;

/// Rendering switches shared by all figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvgOptions {
    /// Embed a generation-time comment. Off gives byte-stable output.
    pub timestamp: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { timestamp: true }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(width: f64, height: f64, opts: SvgOptions) -> String {
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if opts.timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let _ = writeln!(s, "<!-- generated at unix time {secs} -->");
    }
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(s, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    s
}

/// Blue for -1, white for 0, red for +1.
fn diverging(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (r, g, b) = if v >= 0.0 {
        (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
    } else {
        (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
    };
    format!("rgb({},{},{})", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Blue for low percentiles, red for high.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    format!(
        "rgb({},{},{})",
        (30.0 + 200.0 * t).round() as u8,
        (60.0 + 40.0 * (1.0 - (2.0 * t - 1.0).abs())).round() as u8,
        (230.0 - 200.0 * t).round() as u8
    )
}

/// Heatmap of Pearson coefficients. Invalid columns are drawn as white
/// bands.
pub fn correlation_heatmap_svg(cm: &CorrelationMatrix, opts: SvgOptions) -> String {
    let n = cm.len();
    let cell = if n > 60 { 4.0 } else { 12.0 };
    let margin = 40.0;
    let side = cell * n as f64;
    let mut s = open(side + 2.0 * margin + 60.0, side + 2.0 * margin, opts);
    let _ = writeln!(
        s,
        "<text x=\"{margin}\" y=\"24\" font-size=\"14\">Feature correlation (Pearson r)</text>"
    );
    for i in 0..n {
        for j in 0..n {
            let v = cm.get(i, j);
            let fill = if v.is_finite() { diverging(v) } else { "white".into() };
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\"><title>{} / {}</title></rect>",
                margin + j as f64 * cell,
                margin + i as f64 * cell,
                escape(&cm.names[i]),
                escape(&cm.names[j])
            );
        }
    }
    let lx = margin + side + 20.0;
    for k in 0..=10 {
        let v = 1.0 - 0.2 * k as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{lx}\" y=\"{}\" width=\"14\" height=\"{}\" fill=\"{}\"/>",
            margin + k as f64 * side / 11.0,
            side / 11.0,
            diverging(v)
        );
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"10\">+1</text>", lx + 18.0, margin + 8.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"10\">-1</text>", lx + 18.0, margin + side);
    s.push_str("</svg>\n");
    s
}

/// One horizontal strip per feature: each dot is a sample's phi, coloured
/// by the feature value's percentile within that feature.
pub fn shap_strip_svg(summary: &[FeatureAttribution], top_n: usize, opts: SvgOptions) -> String {
    let rows: Vec<&FeatureAttribution> = summary.iter().take(top_n).collect();
    let label_w = 200.0;
    let plot_w = 420.0;
    let row_h = 18.0;
    let top = 40.0;
    let height = top + row_h * rows.len() as f64 + 40.0;
    let mut s = open(label_w + plot_w + 40.0, height, opts);
    let _ = writeln!(s, "<text x=\"10\" y=\"24\" font-size=\"14\">Shapley values (colour: feature value percentile)</text>");
    let max_abs = rows
        .iter()
        .flat_map(|f| f.points.iter().map(|p| p.0.abs()))
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let x_of = |phi: f64| label_w + plot_w * (0.5 + 0.5 * phi / max_abs);
    let zero = x_of(0.0);
    let _ = writeln!(
        s,
        "<line x1=\"{zero}\" y1=\"{top}\" x2=\"{zero}\" y2=\"{}\" stroke=\"#888\"/>",
        top + row_h * rows.len() as f64
    );
    for (r, f) in rows.iter().enumerate() {
        let y = top + row_h * (r as f64 + 0.5);
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
            label_w - 6.0,
            y + 3.0,
            escape(&f.feature)
        );
        let mut order: Vec<usize> = (0..f.points.len()).collect();
        order.sort_by(|&a, &b| f.points[a].1.total_cmp(&f.points[b].1));
        let denom = (f.points.len().max(2) - 1) as f64;
        for (rank, &k) in order.iter().enumerate() {
            let (phi, _) = f.points[k];
            // Small deterministic vertical jitter keeps overlapping dots visible.
            let jitter = ((k * 7919) % 11) as f64 - 5.0;
            let _ = writeln!(
                s,
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"2\" fill=\"{}\"/>",
                x_of(phi),
                y + jitter * 0.6,
                ramp(rank as f64 / denom)
            );
        }
    }
    let _ = writeln!(
        s,
        "<text x=\"{zero}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">phi (max |phi| = {:.4})</text>",
        height - 12.0,
        max_abs
    );
    s.push_str("</svg>\n");
    s
}

/// Grouped bars of the five mean metrics for the leading configurations.
pub fn metrics_bar_svg(summaries: &[MetricSummary], top_n: usize, opts: SvgOptions) -> String {
    let rows: Vec<&MetricSummary> = summaries.iter().take(top_n).collect();
    let label_w = 260.0;
    let bar_w = 300.0;
    let group_h = 5.0 * 7.0 + 8.0;
    let top = 50.0;
    let height = top + group_h * rows.len() as f64 + 20.0;
    let colours = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"];
    let labels = ["AUC", "accuracy", "F1", "sensitivity", "specificity"];
    let mut s = open(label_w + bar_w + 40.0, height, opts);
    let _ = writeln!(s, "<text x=\"10\" y=\"24\" font-size=\"14\">Cross-validated metrics</text>");
    for (k, (c, l)) in colours.iter().zip(labels).enumerate() {
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"32\" width=\"10\" height=\"10\" fill=\"{c}\"/><text x=\"{}\" y=\"41\" font-size=\"10\">{l}</text>",
            label_w + 70.0 * k as f64,
            label_w + 70.0 * k as f64 + 13.0
        );
    }
    for (r, m) in rows.iter().enumerate() {
        let y0 = top + group_h * r as f64;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
            label_w - 6.0,
            y0 + 20.0,
            escape(&m.config_id)
        );
        for (k, v) in m.means().iter().enumerate() {
            let w = if v.is_finite() { bar_w * v.clamp(0.0, 1.0) } else { 0.0 };
            let _ = writeln!(
                s,
                "<rect x=\"{label_w}\" y=\"{}\" width=\"{w:.3}\" height=\"6\" fill=\"{}\"/>",
                y0 + 7.0 * k as f64,
                colours[k]
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
