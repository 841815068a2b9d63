//! Standalone SVG line charts: median A/B CTR against train size, one
//! polyline per method with a shaded interquartile band, one panel per
//! logging policy.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use banditfit_core::{LoggingPolicy, Method};

use crate::harness::ResultRow;
use crate::Error;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

struct Style {
    color: &'static str,
    dash: &'static str,
}

fn style(method: Method) -> Style {
    match method {
        Method::Mle => Style {
            color: "#1f77b4",
            dash: "",
        },
        Method::Reweighted => Style {
            color: "#d62728",
            dash: "6,3",
        },
        Method::ContextualBandit => Style {
            color: "#2ca02c",
            dash: "2,3",
        },
        Method::BayesMap => Style {
            color: "#9467bd",
            dash: "10,3,2,3",
        },
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `(size, q25, median, q75)` of A/B CTR per size; failed fits are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub method: Method,
    pub points: Vec<(usize, f64, f64, f64)>,
}

pub fn summarize(rows: &[ResultRow], policy: LoggingPolicy) -> Vec<Series> {
    let mut groups: BTreeMap<Method, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.logging_policy == policy) {
        let sizes = groups.entry(r.method).or_default();
        let ctrs = sizes.entry(r.train_size).or_default();
        ctrs.extend(r.ab_ctr);
    }
    groups
        .into_iter()
        .map(|(method, sizes)| {
            let points = sizes
                .into_iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(size, mut v)| {
                    v.sort_by(f64::total_cmp);
                    (
                        size,
                        quantile(&v, 0.25),
                        quantile(&v, 0.5),
                        quantile(&v, 0.75),
                    )
                })
                .collect();
            Series { method, points }
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// `lo..hi` padded so single points and flat lines still get an extent.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn panel(svg: &mut String, top: f64, policy: LoggingPolicy, series: &[Series]) {
    let all: Vec<_> = series.iter().flat_map(|s| s.points.iter()).collect();
    let (x0, x1) = padded(
        all.iter().map(|p| p.0 as f64).fold(f64::INFINITY, f64::min),
        all.iter()
            .map(|p| p.0 as f64)
            .fold(f64::NEG_INFINITY, f64::max),
    );
    // CTR axis starts at zero.
    let top_ctr = all.iter().map(|p| p.3).fold(0.0, f64::max);
    let (y0, y1) = (0.0, if top_ctr > 0.0 { 1.05 * top_ctr } else { 1.0 });
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| top + MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let _ = writeln!(
        svg,
        r#"<g class="panel"><text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="15">A/B CTR vs train size ({} logging)</text>"#,
        MARGIN_L + plot_w / 2.0,
        top + 24.0,
        escape(policy.name())
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_L:.1}" y="{:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#444"/>"##,
        top + MARGIN_T
    );
    for i in 0..=4 {
        let y = y0 + (y1 - y0) * f64::from(i) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{:.4}</text>"#,
            MARGIN_L - 6.0,
            py(y) + 4.0,
            y
        );
    }
    let mut sizes: Vec<usize> = all.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    for s in &sizes {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{s}</text>"#,
            px(*s as f64),
            top + PANEL_H - MARGIN_B + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">training events</text>"#,
        MARGIN_L + plot_w / 2.0,
        top + PANEL_H - 12.0
    );

    for (i, s) in series.iter().enumerate() {
        let st = style(s.method);
        let name = escape(s.method.name());
        if s.points.is_empty() {
            continue;
        }
        let upper = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.0 as f64), py(p.3)));
        let lower = s
            .points
            .iter()
            .rev()
            .map(|p| format!("{:.2},{:.2}", px(p.0 as f64), py(p.1)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="iqr" data-method="{name}" points="{}" fill="{}" fill-opacity="0.15" stroke="none"/>"#,
            band.join(" "),
            st.color
        );
        let line: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.0 as f64), py(p.2)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="median" data-method="{name}" points="{}" fill="none" stroke="{}" stroke-width="2" stroke-dasharray="{}"/>"#,
            line.join(" "),
            st.color,
            st.dash
        );
        for p in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                px(p.0 as f64),
                py(p.2),
                st.color
            );
        }
        let ly = top + MARGIN_T + 12.0 + 20.0 * i as f64;
        let lx = PANEL_W - MARGIN_R + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2" stroke-dasharray="{}"/><text x="{:.1}" y="{:.1}" font-size="12">{name}</text></g>"#,
            lx + 30.0,
            st.color,
            st.dash,
            lx + 36.0,
            ly + 4.0
        );
    }
    svg.push_str("</g>\n");
}

/// Renders the chart document.
pub fn render_svg(rows: &[ResultRow]) -> Result<String, Error> {
    let mut policies: Vec<LoggingPolicy> = Vec::new();
    for r in rows {
        if !policies.contains(&r.logging_policy) {
            policies.push(r.logging_policy);
        }
    }
    let panels: Vec<_> = policies
        .iter()
        .map(|&p| (p, summarize(rows, p)))
        .filter(|(_, s)| s.iter().any(|s| !s.points.is_empty()))
        .collect();
    if panels.is_empty() {
        return Err(Error::Report("no successful rows to plot".into()));
    }
    let height = PANEL_H * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" viewBox="0 0 {PANEL_W} {height}" font-family="sans-serif">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (i, (policy, series)) in panels.iter().enumerate() {
        panel(&mut svg, PANEL_H * i as f64, *policy, series);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot_svg(rows: &[ResultRow], path: &Path) -> Result<(), Error> {
    let svg = render_svg(rows)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }
}
