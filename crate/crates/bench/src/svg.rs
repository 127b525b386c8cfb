//! Minimal standalone SVG scatter plots of objective vectors.

use std::fmt::Write as _;
use std::path::Path;

use mofista::metrics::Front;

use crate::BenchError;

const PANEL: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Data bounding box padded by 5% of its extent on each side.
pub fn padded_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    let width = hi - lo;
    let pad = if width > 0.0 { 0.05 * width } else { 0.05 * lo.abs().max(1.0) };
    Some((lo - pad, hi + pad))
}

fn panels(axes: &[usize]) -> Result<Vec<(usize, usize)>, BenchError> {
    match *axes {
        [a, b] => Ok(vec![(a, b)]),
        [a, b, c] => Ok(vec![(a, b), (a, c), (b, c)]),
        _ => Err(BenchError::Config("scatter plots take two or three objective axes".into())),
    }
}

/// Render labelled fronts on pairwise panels of the given objective axes.
pub fn render_svg_scatter(series: &[(&str, &Front)], axes: &[usize]) -> Result<String, BenchError> {
    let panels = panels(axes)?;
    let legend_h = 18.0 * series.len() as f64 + 8.0;
    let width = PANEL * panels.len() as f64;
    let height = PANEL + legend_h;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (pi, &(ax, ay)) in panels.iter().enumerate() {
        let ox = pi as f64 * PANEL;
        let (x0, x1, y0, y1) = (ox + MARGIN, ox + PANEL - 12.0, PANEL - MARGIN, 12.0);
        let _ = writeln!(
            s,
            r##"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            x1 - x0,
            y0 - y1
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">F{}</text>"#, (x0 + x1) / 2.0, PANEL - 14.0, ax + 1);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">F{}</text>"#,
            ox + 16.0,
            (y0 + y1) / 2.0,
            ox + 16.0,
            (y0 + y1) / 2.0,
            ay + 1
        );
        let coords = |i: usize| series.iter().flat_map(move |(_, f)| f.objectives().map(move |o| o[i]));
        let (Some((xl, xh)), Some((yl, yh))) = (padded_range(coords(ax)), padded_range(coords(ay))) else {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">no points</text>"#,
                (x0 + x1) / 2.0,
                (y0 + y1) / 2.0
            );
            continue;
        };
        for (v, x, anchor) in [(xl, x0, "start"), (xh, x1, "end")] {
            let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#, y0 + 14.0);
        }
        for (v, y) in [(yl, y0), (yh, y1 + 10.0)] {
            let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{v:.3}</text>"#, x0 - 4.0);
        }
        for (si, (_, front)) in series.iter().enumerate() {
            let color = COLORS[si % COLORS.len()];
            for o in front.objectives() {
                let px = x0 + (o[ax] - xl) / (xh - xl) * (x1 - x0);
                let py = y0 - (o[ay] - yl) / (yh - yl) * (y0 - y1);
                let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{color}" fill-opacity="0.7"/>"#);
            }
        }
    }
    for (si, (label, front)) in series.iter().enumerate() {
        let y = PANEL + 6.0 + 18.0 * si as f64;
        let color = COLORS[si % COLORS.len()];
        let _ = writeln!(s, r#"<rect x="{MARGIN}" y="{y}" width="10" height="10" fill="{color}"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{label} ({} points)</text>"#, MARGIN + 16.0, y + 9.0, front.len());
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg_scatter(series: &[(&str, &Front)], axes: &[usize], path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, render_svg_scatter(series, axes)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mofista::metrics::nondominated_filter;

    #[test]
    fn two_points_two_circles() {
        let f = nondominated_filter(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let svg = render_svg_scatter(&[("a", &f)], &[0, 1]).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn padding_is_five_percent() {
        assert_eq!(padded_range([0.0, 10.0, 4.0].into_iter()), Some((-0.5, 10.5)));
        assert_eq!(padded_range(std::iter::empty()), None);
        let (lo, hi) = padded_range([2.0].into_iter()).unwrap();
        assert!(lo < 2.0 && hi > 2.0);
    }

    #[test]
    fn empty_and_three_axes() {
        let empty = Front::default();
        let svg = render_svg_scatter(&[("a", &empty)], &[0, 1]).unwrap();
        assert!(svg.contains("no points"));
        assert_eq!(svg.matches("<circle").count(), 0);
        let f = nondominated_filter(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0]]);
        let svg = render_svg_scatter(&[("a", &f)], &[0, 1, 2]).unwrap();
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(render_svg_scatter(&[("a", &f)], &[0]).is_err());
    }
}
