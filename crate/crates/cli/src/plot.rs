//! Error-versus-bound line charts rendered straight to SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;

const SERIES: [(&str, &str); 4] = [
    ("avg_error", "#1f77b4"),
    ("regular_avg_error", "#2ca02c"),
    ("bound_paper", "#d62728"),
    ("bound_geometric", "#9467bd"),
];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_Y: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: &'static str,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

/// Reads the first replication of a run CSV. Series whose cells are all
/// empty are dropped.
pub fn read_series(csv_text: &str, origin: &Path) -> Result<Vec<Series>, CliError> {
    let bad = |msg: String| CliError::validation(origin, msg);
    let mut reader = csv::ReaderBuilder::new().from_reader(csv_text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column '{name}'")))
    };
    let k_col = column("k")?;
    let rep_col = header.iter().position(|h| h == "replication");
    let cols = SERIES
        .iter()
        .map(|(name, _)| column(name))
        .collect::<Result<Vec<_>, _>>()?;

    let mut points: Vec<Vec<(f64, f64)>> = vec![Vec::new(); SERIES.len()];
    let mut first_rep: Option<String> = None;
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let cell = |i: usize| record.get(i).unwrap_or("").trim();
        if let Some(rc) = rep_col {
            let rep = cell(rc).to_string();
            match &first_rep {
                None => first_rep = Some(rep),
                Some(r) if *r != rep => continue,
                _ => {}
            }
        }
        rows += 1;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("line {}: '{s}' is not a number", line + 2)))
        };
        let k = parse(cell(k_col))?;
        for (slot, &c) in cols.iter().enumerate() {
            let raw = cell(c);
            if !raw.is_empty() {
                points[slot].push((k, parse(raw)?));
            }
        }
    }
    if rows == 0 {
        return Err(bad("no data rows".into()));
    }
    Ok(SERIES
        .iter()
        .zip(points)
        .filter(|(_, pts)| !pts.is_empty())
        .map(|(&(name, color), points)| Series { name, color, points })
        .collect())
}

pub fn render_svg(title: &str, series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_max, mut y_max) = (0.0_f64, 0.0_f64);
    for &(x, y) in all {
        x_max = x_max.max(x);
        y_max = y_max.max(y);
    }
    if x_max <= 0.0 {
        x_max = 1.0;
    }
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    y_max *= 1.05;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let sx = |x: f64| MARGIN_LEFT + x / x_max * plot_w;
    let sy = |y: f64| MARGIN_Y + plot_h - y / y_max * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );
    // axes
    let (x0, y0) = (MARGIN_LEFT, MARGIN_Y + plot_h);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.1} {:.1} L{x0:.1} {y0:.1} L{:.1} {y0:.1}" stroke="black" fill="none"/>"#,
        MARGIN_Y,
        MARGIN_LEFT + plot_w
    );
    for i in 0..=5 {
        let fx = x_max * i as f64 / 5.0;
        let fy = y_max * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
            sx(fx),
            y0 + 16.0,
            fx
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            x0 - 6.0,
            sy(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">k</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 6.0
    );
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-series="{}" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            s.name,
            pts.join(" "),
            s.color
        );
        let ly = MARGIN_Y + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/>"#,
            lx + 20.0,
            s.color
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            s.name
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
