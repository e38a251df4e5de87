//! Minimal SVG line charts of the metrics CSV.

use std::fmt::Write;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("metrics file is empty")]
    Empty,
    #[error("column {0:?} not in header")]
    UnknownColumn(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// One named numeric series; rows with an empty cell are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Extracts `columns` from metrics CSV text against the `step` column.
pub fn read_series(csv: &str, columns: &[&str]) -> Result<Vec<Series>, PlotError> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().ok_or(PlotError::Empty)?.split(',').collect();
    let index = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| PlotError::UnknownColumn(name.to_string()))
    };
    let step_col = index("step")?;
    let cols = columns
        .iter()
        .map(|c| index(c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut series: Vec<Series> = columns
        .iter()
        .map(|c| Series {
            name: c.to_string(),
            points: Vec::new(),
        })
        .collect();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(PlotError::Malformed {
                line: i + 2,
                reason: format!("{} cells, expected {}", cells.len(), header.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| PlotError::Malformed {
                line: i + 2,
                reason: format!("not a number: {s:?}"),
            })
        };
        let x = parse(cells[step_col])?;
        for (s, &c) in series.iter_mut().zip(&cols) {
            if !cells[c].is_empty() {
                s.points.push((x, parse(cells[c])?));
            }
        }
    }
    Ok(series)
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Renders the series as an SVG line chart.
pub fn render_svg(series: &[Series], title: &str) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{pad}" y="20">{}</text>"#, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{pad},{} H{} M{pad},{pad} V{}" stroke="black" fill="none"/>"#,
        h - pad,
        w - pad,
        h - pad
    );
    let _ = writeln!(svg, r#"<text x="{pad}" y="{}">{x0}</text>"#, h - pad + 16.0);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{x1}</text>"#,
        w - pad,
        h - pad + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#,
        pad - 4.0,
        h - pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{pad}" text-anchor="end">{y1:.3}</text>"#,
        pad - 4.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !s.points.is_empty() {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        let ly = pad + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#,
            w - pad - 150.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "step,mean_reward,eval_success\n1,0.5,\n2,0.75,0.1\n";

    #[test]
    fn skips_empty_cells() {
        let s = read_series(CSV, &["mean_reward", "eval_success"]).unwrap();
        assert_eq!(s[0].points, vec![(1.0, 0.5), (2.0, 0.75)]);
        assert_eq!(s[1].points, vec![(2.0, 0.1)]);
    }

    #[test]
    fn rejects_unknown_columns_and_bad_rows() {
        assert!(matches!(
            read_series(CSV, &["nope"]),
            Err(PlotError::UnknownColumn(_))
        ));
        assert!(read_series("step,a\n1\n", &["a"]).is_err());
        assert!(matches!(read_series("", &["a"]), Err(PlotError::Empty)));
    }

    #[test]
    fn svg_has_one_line_per_series() {
        let s = read_series(CSV, &["mean_reward", "eval_success"]).unwrap();
        let svg = render_svg(&s, "a < b");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
    }
}
