//! Minimal SVG log-log plotting, one figure per file.

use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dashed: bool,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;

fn decades(lo: f64, hi: f64) -> Vec<i32> {
    let a = lo.log10().floor() as i32;
    let b = hi.log10().ceil() as i32;
    (a..=b).collect()
}

/// Writes a log-log line plot; points with nonpositive coordinates are
/// dropped (they have no place on log axes).
pub fn log_log_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    path: &Path,
) -> Result<()> {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    if !x_min.is_finite() || !y_min.is_finite() {
        x_min = 0.1;
        x_max = 10.0;
        y_min = 0.1;
        y_max = 10.0;
    }
    if x_min == x_max {
        x_max = x_min * 10.0;
    }
    if y_min == y_max {
        y_max = y_min * 10.0;
    }

    let (lx0, lx1) = (x_min.log10(), x_max.log10());
    let (ly0, ly1) = (y_min.log10(), y_max.log10());
    let sx = |x: f64| ML + (x.log10() - lx0) / (lx1 - lx0) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y.log10() - ly0) / (ly1 - ly0) * (H - MT - MB);

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{tx}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>
"#,
        tx = W / 2.0,
        title = escape(title),
    );

    // grid lines and tick labels at decades
    for d in decades(x_min, x_max) {
        let x = 10f64.powi(d);
        if x < x_min / 1.001 || x > x_max * 1.001 {
            continue;
        }
        let px = sx(x);
        let _ = write!(
            svg,
            "<line x1=\"{px:.1}\" y1=\"{MT}\" x2=\"{px:.1}\" y2=\"{y}\" stroke=\"#ddd\"/>\n\
             <text x=\"{px:.1}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">1e{d}</text>\n",
            y = H - MB,
            ty = H - MB + 16.0,
        );
    }
    for d in decades(y_min, y_max) {
        let y = 10f64.powi(d);
        if y < y_min / 1.001 || y > y_max * 1.001 {
            continue;
        }
        let py = sy(y);
        let _ = write!(
            svg,
            "<line x1=\"{ML}\" y1=\"{py:.1}\" x2=\"{x}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{tx}\" y=\"{ty:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">1e{d}</text>\n",
            x = W - MR,
            tx = ML - 6.0,
            ty = py + 4.0,
        );
    }
    let _ = write!(
        svg,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#333\"/>\n\
         <text x=\"{cx}\" y=\"{by}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{xl}</text>\n\
         <text x=\"18\" y=\"{cy}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {cy})\">{yl}</text>\n",
        w = W - ML - MR,
        h = H - MT - MB,
        cx = (ML + W - MR) / 2.0,
        by = H - 14.0,
        cy = (MT + H - MB) / 2.0,
        xl = escape(x_label),
        yl = escape(y_label),
    );

    for s in series {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
            .collect();
        if pts.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if i == 0 { "M" } else { "L" },
                sx(*x),
                sy(*y)
            );
        }
        let dash = if s.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>",
            color = s.color,
        );
    }

    // legend
    for (i, s) in series.iter().enumerate() {
        let y = MT + 16.0 + 18.0 * i as f64;
        let dash = if s.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let _ = write!(
            svg,
            "<line x1=\"{x0}\" y1=\"{y:.1}\" x2=\"{x1}\" y2=\"{y:.1}\" stroke=\"{c}\" \
             stroke-width=\"1.6\"{dash}/>\n\
             <text x=\"{tx}\" y=\"{ty:.1}\" font-family=\"sans-serif\" font-size=\"12\">{l}</text>\n",
            x0 = ML + 10.0,
            x1 = ML + 34.0,
            c = s.color,
            tx = ML + 40.0,
            ty = y + 4.0,
            l = escape(&s.label),
        );
    }

    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_wellformed_svg() {
        let dir = std::env::temp_dir().join("decaylab-plot-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("curve.svg");
        let series = vec![Series {
            label: "E0".to_string(),
            points: (1..100).map(|i| (i as f64, 1.0 / (i * i) as f64)).collect(),
            color: color(0),
            dashed: false,
        }];
        log_log_plot("energy", "t", "E0", &series, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.ends_with("</svg>\n"));
        assert!(text.contains("E0"));
    }
}
