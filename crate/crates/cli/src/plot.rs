//! Standalone SVG line chart: samples on x, meters on y.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

pub struct Series {
    pub raw: Vec<f64>,
    pub predicted: Vec<Option<f64>>,
    pub filtered: Vec<Option<f64>>,
    pub truth: Option<Vec<f64>>,
}

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, i: f64) -> f64 {
        LEFT + (WIDTH - LEFT - RIGHT) * i / self.x_max
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (HEIGHT - TOP - BOTTOM) * v / self.y_max
    }
}

/// 1, 2 or 5 times a power of ten, giving at most `max_ticks` intervals.
fn tick_step(span: f64, max_ticks: f64) -> f64 {
    let raw = span / max_ticks;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn polyline(frame: &Frame, points: impl Iterator<Item = (usize, f64)>) -> String {
    let mut d = String::new();
    for (k, (i, v)) in points.enumerate() {
        let cmd = if k == 0 { 'M' } else { 'L' };
        write!(d, "{cmd}{:.2},{:.2}", frame.x(i as f64), frame.y(v)).unwrap();
    }
    d
}

pub fn render(s: &Series) -> String {
    let peak = s
        .raw
        .iter()
        .chain(s.truth.iter().flatten())
        .chain(s.predicted.iter().flatten())
        .fold(0.0f64, |a, &b| a.max(b));
    let frame = Frame {
        x_max: (s.raw.len().max(2) - 1) as f64,
        y_max: ((peak / 5.0).ceil() * 5.0).max(5.0),
    };
    let x0 = frame.x(0.0);
    let x1 = frame.x(frame.x_max);
    let y0 = frame.y(0.0);
    let y1 = frame.y(frame.y_max);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();

    writeln!(svg, r#"<g id="axes" stroke="black">"#).unwrap();
    writeln!(
        svg,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#
    )
    .unwrap();
    let step = tick_step(frame.x_max, 10.0);
    let mut t = 0.0;
    while t <= frame.x_max + 1e-9 {
        let x = frame.x(t);
        writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}"/><text x="{x:.2}" y="{:.2}" stroke="none" text-anchor="middle">{t}</text>"#,
            y0 + 4.0,
            y0 + 16.0
        )
        .unwrap();
        t += step;
    }
    let step = tick_step(frame.y_max, 8.0);
    let mut v = 0.0;
    while v <= frame.y_max + 1e-9 {
        let y = frame.y(v);
        writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}"/><text x="{:.2}" y="{:.2}" stroke="none" text-anchor="end">{v}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0
        )
        .unwrap();
        v += step;
    }
    writeln!(svg, "</g>").unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">sample</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">distance (m)</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    )
    .unwrap();

    if let Some(truth) = &s.truth {
        writeln!(
            svg,
            r##"<path id="truth" d="{}" fill="none" stroke="#2a9d4a" stroke-dasharray="6 4"/>"##,
            polyline(&frame, truth.iter().copied().enumerate())
        )
        .unwrap();
    }
    writeln!(
        svg,
        r##"<path id="raw" d="{}" fill="none" stroke="#888888"/>"##,
        polyline(&frame, s.raw.iter().copied().enumerate())
    )
    .unwrap();

    writeln!(svg, r##"<g id="predicted" fill="none" stroke="#d62728">"##).unwrap();
    for (i, p) in s.predicted.iter().enumerate() {
        if let Some(p) = p {
            writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#,
                frame.x(i as f64),
                frame.y(*p)
            )
            .unwrap();
        }
    }
    writeln!(svg, "</g>").unwrap();
    writeln!(svg, r##"<g id="filtered" fill="#1f77b4">"##).unwrap();
    for (i, f) in s.filtered.iter().enumerate() {
        if let Some(f) = f {
            writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="4" height="4"/>"#,
                frame.x(i as f64) - 2.0,
                frame.y(*f) - 2.0
            )
            .unwrap();
        }
    }
    writeln!(svg, "</g>").unwrap();

    let lx = WIDTH - RIGHT + 15.0;
    let mut entries = vec![
        (
            r##"<line x1="0" y1="0" x2="18" y2="0" stroke="#888888"/>"##,
            "raw",
        ),
        (
            r##"<circle cx="9" cy="0" r="2.5" fill="none" stroke="#d62728"/>"##,
            "predicted",
        ),
        (
            r##"<rect x="7" y="-2" width="4" height="4" fill="#1f77b4"/>"##,
            "filtered",
        ),
    ];
    if s.truth.is_some() {
        entries.push((
            r##"<line x1="0" y1="0" x2="18" y2="0" stroke="#2a9d4a" stroke-dasharray="6 4"/>"##,
            "truth",
        ));
    }
    writeln!(svg, r#"<g id="legend">"#).unwrap();
    for (k, (mark, label)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        writeln!(
            svg,
            r#"<g transform="translate({lx:.2} {y:.2})">{mark}<text x="24" y="4">{label}</text></g>"#
        )
        .unwrap();
    }
    writeln!(svg, "</g>").unwrap();
    svg.push_str("</svg>\n");
    svg
}
