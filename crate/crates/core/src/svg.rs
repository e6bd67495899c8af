//! Standalone SVG charts for campaign curves, aligned variance bands,
//! per-joint bar charts and the 2-D demo.

use std::fmt::Write as _;

use crate::analysis::{InteractionReport, SensitivityReport};
use crate::demo::DemoSnapshot;
use crate::experiment::{peak_records, AlignedVariance, ExplorationCurves};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 70.0;
const TOP: f64 = 56.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Canvas {
    body: String,
}

impl Canvas {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>
"#,
            WIDTH / 2.0,
            escape(title)
        );
        Canvas { body }
    }

    fn plot_w() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    fn frame(&mut self, x_label: &str, y_label: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            Self::plot_w(),
            Self::plot_h()
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + Self::plot_w() / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + Self::plot_h() / 2.0,
            TOP + Self::plot_h() / 2.0,
            escape(y_label)
        );
    }

    fn y_ticks(&mut self, lo: f64, hi: f64, right_side: bool) {
        for k in 0..=4 {
            let v = lo + (hi - lo) * k as f64 / 4.0;
            let y = TOP + Self::plot_h() * (1.0 - k as f64 / 4.0);
            let (x, anchor) = if right_side {
                (WIDTH - RIGHT + 6.0, "start")
            } else {
                (LEFT - 6.0, "end")
            };
            let _ = writeln!(
                self.body,
                r#"<text x="{x}" y="{:.2}" text-anchor="{anchor}" dominant-baseline="middle">{}</text>"#,
                y,
                tick_label(v)
            );
        }
    }

    fn x_ticks(&mut self, first: usize, last: usize) {
        let span = (last - first).max(1);
        let step = [1, 2, 5, 10, 20, 25, 50, 100, 200, 500]
            .into_iter()
            .find(|s| span / s <= 10)
            .unwrap_or(1000);
        let mut v = first.div_ceil(step) * step;
        if v == 0 {
            v = step.min(first.max(1));
        }
        while v <= last {
            let x = LEFT + Self::plot_w() * (v - first) as f64 / span as f64;
            let _ = writeln!(
                self.body,
                r#"<text x="{x:.2}" y="{}" text-anchor="middle">{v}</text>"#,
                TOP + Self::plot_h() + 16.0
            );
            v += step;
        }
    }

    fn legend(&mut self, labels: &[String]) {
        let longest = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
        let step = longest as f64 * 6.5 + 24.0;
        let per_row = ((Self::plot_w() / step) as usize).max(1);
        let rows = labels.len().div_ceil(per_row);
        for (i, label) in labels.iter().enumerate() {
            let x = LEFT + 4.0 + step * (i % per_row) as f64;
            let y = TOP - 10.0 - 14.0 * (rows - 1 - i / per_row) as f64;
            let _ = writeln!(
                self.body,
                r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}" dominant-baseline="middle">{}</text>"#,
                y - 5.0,
                color(i),
                x + 14.0,
                y,
                escape(label)
            );
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e4) {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn polyline(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Stacked relative exploration per joint, total exploration on the right
/// axis, and a vertical bar at each joint's peak (height = peak value).
pub fn exploration_chart(curves: &ExplorationCurves, title: &str) -> String {
    let mut c = Canvas::new(title);
    c.frame("update", "relative exploration");
    let updates = curves.total.len();
    let joints = curves.relative.first().map_or(0, Vec::len);
    if updates == 0 || joints == 0 {
        return c.finish();
    }
    let pw = Canvas::plot_w();
    let ph = Canvas::plot_h();
    let x_of = |u: usize| {
        if updates == 1 {
            LEFT + pw / 2.0
        } else {
            LEFT + pw * u as f64 / (updates - 1) as f64
        }
    };
    let y_rel = |v: f64| TOP + ph * (1.0 - v.clamp(0.0, 1.0));

    let mut lower = vec![0.0; updates];
    for m in 0..joints {
        let upper: Vec<f64> = (0..updates)
            .map(|u| lower[u] + curves.relative[u][m])
            .collect();
        let mut pts: Vec<(f64, f64)> = (0..updates).map(|u| (x_of(u), y_rel(upper[u]))).collect();
        pts.extend((0..updates).rev().map(|u| (x_of(u), y_rel(lower[u]))));
        let _ = writeln!(
            c.body,
            r#"<polygon points="{}" fill="{}" fill-opacity="0.55" stroke="none"/>"#,
            polyline(&pts),
            color(m)
        );
        lower = upper;
    }

    let peaks = peak_records(&curves.relative);
    for p in &peaks {
        let x = x_of(p.peak_update - 1);
        let _ = writeln!(
            c.body,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{}" stroke-width="4"/>"#,
            y_rel(0.0),
            y_rel(p.peak_relative),
            color(p.joint - 1)
        );
    }

    let max_total = curves
        .total
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let total_pts: Vec<(f64, f64)> = curves
        .total
        .iter()
        .enumerate()
        .map(|(u, t)| (x_of(u), TOP + ph * (1.0 - t / max_total)))
        .collect();
    let _ = writeln!(
        c.body,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2.5"/>"#,
        polyline(&total_pts)
    );
    c.y_ticks(0.0, 1.0, false);
    c.y_ticks(0.0, max_total, true);
    c.x_ticks(1, updates);
    let labels: Vec<String> = (1..=joints).map(|m| format!("joint {m}")).collect();
    c.legend(&labels);
    c.finish()
}

/// Mean curve with a ±1 standard deviation band.
pub fn band_chart(stats: &AlignedVariance, title: &str, y_label: &str) -> String {
    let mut c = Canvas::new(title);
    c.frame("update", y_label);
    let n = stats.mean.len();
    if n == 0 {
        return c.finish();
    }
    let hi = stats
        .mean
        .iter()
        .zip(&stats.std)
        .map(|(m, s)| m + s)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let lo = stats
        .mean
        .iter()
        .zip(&stats.std)
        .map(|(m, s)| m - s)
        .fold(0.0, f64::min);
    let pw = Canvas::plot_w();
    let ph = Canvas::plot_h();
    let x_of = |u: usize| {
        if n == 1 {
            LEFT + pw / 2.0
        } else {
            LEFT + pw * u as f64 / (n - 1) as f64
        }
    };
    let y_of = |v: f64| TOP + ph * (1.0 - (v - lo) / (hi - lo));

    let mut band: Vec<(f64, f64)> = (0..n)
        .map(|u| (x_of(u), y_of(stats.mean[u] + stats.std[u])))
        .collect();
    band.extend(
        (0..n)
            .rev()
            .map(|u| (x_of(u), y_of(stats.mean[u] - stats.std[u]))),
    );
    let _ = writeln!(
        c.body,
        r#"<polygon points="{}" fill="{}" fill-opacity="0.3" stroke="none"/>"#,
        polyline(&band),
        color(0)
    );
    let mean: Vec<(f64, f64)> = (0..n).map(|u| (x_of(u), y_of(stats.mean[u]))).collect();
    let _ = writeln!(
        c.body,
        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
        polyline(&mean),
        color(0)
    );
    c.y_ticks(lo, hi, false);
    c.x_ticks(1, n);
    c.finish()
}

/// Grouped bars: one group per row label, one bar per series entry.
fn grouped_bars(
    title: &str,
    y_label: &str,
    groups: &[(String, Vec<f64>)],
    bar_labels: &[String],
    y_max: f64,
) -> String {
    let mut c = Canvas::new(title);
    c.frame("", y_label);
    let pw = Canvas::plot_w();
    let ph = Canvas::plot_h();
    let group_w = pw / groups.len().max(1) as f64;
    for (g, (name, values)) in groups.iter().enumerate() {
        let bar_w = group_w * 0.8 / values.len().max(1) as f64;
        let x0 = LEFT + g as f64 * group_w + group_w * 0.1;
        for (i, v) in values.iter().enumerate() {
            let h = ph * (v / y_max).clamp(0.0, 1.0);
            let _ = writeln!(
                c.body,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{} {}: {}</title></rect>"#,
                x0 + i as f64 * bar_w,
                TOP + ph - h,
                bar_w * 0.9,
                h,
                color(i),
                escape(name),
                escape(&bar_labels[i]),
                v
            );
        }
        let _ = writeln!(
            c.body,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + (g as f64 + 0.5) * group_w,
            TOP + ph + 16.0,
            escape(name)
        );
    }
    c.y_ticks(0.0, y_max, false);
    c.legend(bar_labels);
    c.finish()
}

pub fn sensitivity_chart(report: &SensitivityReport) -> String {
    let joints = report.rows.first().map_or(0, |r| r.per_joint.len());
    let groups: Vec<(String, Vec<f64>)> = report
        .rows
        .iter()
        .map(|r| (r.morphology.to_string(), r.per_joint.clone()))
        .collect();
    let y_max = groups
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let labels: Vec<String> = (1..=joints).map(|m| format!("joint {m}")).collect();
    grouped_bars(
        "Mean distance change per single-joint perturbation",
        "|Δ distance|",
        &groups,
        &labels,
        y_max,
    )
}

pub fn interaction_chart(report: &InteractionReport) -> String {
    let pairs: Vec<(usize, usize)> = report
        .rows
        .first()
        .map(|r| r.pairs.iter().map(|p| (p.proximal, p.distal)).collect())
        .unwrap_or_default();
    let groups: Vec<(String, Vec<f64>)> = pairs
        .iter()
        .map(|&(p, d)| {
            (
                format!("{p}-{d}"),
                report
                    .rows
                    .iter()
                    .map(|r| r.ratio(p, d).unwrap_or(0.0))
                    .collect(),
            )
        })
        .collect();
    let labels: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{} (median {:.2})", r.morphology, r.median))
        .collect();
    grouped_bars(
        "Ratio of unchanged cost rankings per joint pair",
        "ratio",
        &groups,
        &labels,
        1.0,
    )
}

/// Mean path of the 2-D demo with 1-sigma ellipses of the search distribution.
pub fn demo_chart(snapshots: &[DemoSnapshot], title: &str) -> String {
    let mut c = Canvas::new(title);
    c.frame("θ₁", "θ₂");
    let all: Vec<&DemoSnapshot> = snapshots.iter().collect();
    let reach = all
        .iter()
        .map(|s| s.mean_x.abs().max(s.mean_y.abs()) + s.eig1.max(0.0).sqrt())
        .fold(1.0, f64::max);
    let pw = Canvas::plot_w();
    let ph = Canvas::plot_h();
    let scale = pw.min(ph) / (2.0 * reach);
    let cx = LEFT + pw / 2.0;
    let cy = TOP + ph / 2.0;
    let to_px = |x: f64, y: f64| (cx + x * scale, cy - y * scale);

    let (ox, oy) = to_px(0.0, 0.0);
    let _ = writeln!(
        c.body,
        r#"<circle cx="{ox:.2}" cy="{oy:.2}" r="4" fill="black"/><text x="{:.2}" y="{:.2}">optimum</text>"#,
        ox + 6.0,
        oy - 6.0
    );
    for (i, s) in all.iter().enumerate() {
        let (x, y) = to_px(s.mean_x, s.mean_y);
        let stroke = if i == 0 { "#1f3a93" } else { "#d62728" };
        let _ = writeln!(
            c.body,
            r#"<ellipse cx="{x:.2}" cy="{y:.2}" rx="{:.2}" ry="{:.2}" transform="rotate({:.2} {x:.2} {y:.2})" fill="none" stroke="{stroke}" stroke-opacity="0.6"/>"#,
            s.eig1.max(0.0).sqrt() * scale,
            s.eig2.max(0.0).sqrt() * scale,
            -s.eigvec_angle.to_degrees()
        );
    }
    c.y_ticks(-ph / 2.0 / scale, ph / 2.0 / scale, false);
    for k in 0..=4 {
        let v = (k as f64 / 4.0 - 0.5) * pw / scale;
        let _ = writeln!(
            c.body,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            cx + v * scale,
            TOP + ph + 16.0,
            tick_label(v)
        );
    }
    let path: Vec<(f64, f64)> = all.iter().map(|s| to_px(s.mean_x, s.mean_y)).collect();
    let _ = writeln!(
        c.body,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        polyline(&path)
    );
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::SensitivityRow;
    use crate::arm::MorphologyKind;

    fn parses(svg: &str) {
        roxmltree::Document::parse(svg).expect("well-formed SVG");
    }

    #[test]
    fn charts_are_well_formed() {
        let curves = ExplorationCurves {
            relative: vec![
                vec![0.5, 0.3, 0.2],
                vec![0.6, 0.3, 0.1],
                vec![0.4, 0.4, 0.2],
            ],
            total: vec![0.3, 1.2, 0.8],
        };
        parses(&exploration_chart(&curves, "a <b> & c"));
        parses(&exploration_chart(
            &ExplorationCurves {
                relative: vec![],
                total: vec![],
            },
            "empty",
        ));
        let stats = AlignedVariance {
            mean: vec![1.0, 2.0, 1.5],
            std: vec![0.1, 0.5, 0.2],
        };
        parses(&band_chart(&stats, "band", "λ"));
        let report = SensitivityReport {
            rows: vec![SensitivityRow {
                morphology: MorphologyKind::Human,
                per_joint: vec![0.2, 0.1],
            }],
        };
        parses(&sensitivity_chart(&report));
        let snap = DemoSnapshot {
            update: 0,
            mean_x: 10.0,
            mean_y: 10.0,
            eig1: 9.0,
            eig2: 9.0,
            eigvec_angle: 0.0,
            cost: 14.1,
        };
        parses(&demo_chart(&[snap, snap], "demo"));
        parses(&demo_chart(&[], "empty"));
    }
}
