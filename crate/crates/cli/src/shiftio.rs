//! CSV and SVG output for the covariate-shift demo.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use banditfit_core::shift::{self, ShiftOutcome};

use crate::report::sig6;
use crate::Error;

pub const HEADER: [&str; 4] = [
    "seed",
    "mse_source_unweighted",
    "mse_target_unweighted",
    "mse_target_weighted",
];

pub fn write_shift<W: Write>(runs: &[(u64, ShiftOutcome)], out: W) -> Result<(), Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(HEADER)?;
    for (seed, o) in runs {
        let r = &o.report;
        w.write_record([
            seed.to_string(),
            sig6(r.mse_source_unweighted),
            sig6(r.mse_target_unweighted),
            sig6(r.mse_target_weighted),
        ])?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
    Ok(())
}

pub fn write_shift_csv(runs: &[(u64, ShiftOutcome)], path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_shift(runs, file)
}

/// Scatter of the samples with the true curve and both linear fits.
pub fn render_shift_svg(outcome: &ShiftOutcome) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 60.0;
    const R: f64 = 170.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    let (y0, y1) = (-0.4, 1.4);
    let px = |x: f64| L + x * (W - L - R);
    let py = |y: f64| T + (1.0 - (y - y0) / (y1 - y0)) * (H - T - B);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">Linear fit under covariate shift</text>"#,
        px(0.5)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{L}" y="{T}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        W - L - R,
        H - T - B
    );
    for i in 0..=4 {
        let x = f64::from(i) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{x}</text>"#,
            px(x),
            H - B + 16.0
        );
    }
    for (x, y) in &outcome.samples {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#888" fill-opacity="0.6"/>"##,
            px(*x),
            py(y.clamp(y0, y1))
        );
    }
    let truth: Vec<String> = (0..=100)
        .map(|i| {
            let x = f64::from(i) / 100.0;
            format!("{:.2},{:.2}", px(x), py(shift::truth(x)))
        })
        .collect();
    let curves = [
        ("truth", "#000000", "", truth.join(" ")),
        (
            "unweighted",
            "#d62728",
            "6,3",
            line(&outcome.unweighted, &px, &py),
        ),
        (
            "ips-weighted",
            "#1f77b4",
            "",
            line(&outcome.weighted, &px, &py),
        ),
    ];
    for (i, (name, color, dash, points)) in curves.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<polyline class="curve" data-name="{name}" points="{points}" fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/>"#
        );
        let ly = T + 12.0 + 20.0 * i as f64;
        let lx = W - R + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/><text x="{:.1}" y="{:.1}" font-size="12">{name}</text></g>"#,
            lx + 30.0,
            lx + 36.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn line(fit: &shift::LinearFit, px: &dyn Fn(f64) -> f64, py: &dyn Fn(f64) -> f64) -> String {
    // Sampled rather than two endpoints so clamping to the y-range is exact.
    (0..=100)
        .map(|i| {
            let x = f64::from(i) / 100.0;
            format!("{:.2},{:.2}", px(x), py(fit.predict(x).clamp(-0.4, 1.4)))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn emit_shift_svg(outcome: &ShiftOutcome, path: &Path) -> Result<(), Error> {
    fs::write(path, render_shift_svg(outcome)).map_err(|e| Error::io(path, e))
}
