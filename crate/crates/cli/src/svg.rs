//! Minimal SVG charts: cumulative distribution on a log axis and sorted bars.

use std::fmt::Write;

use slameval::cohort::MetricSummary;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2.0, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#
    );
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn plot_x(frac: f64) -> f64 {
    MARGIN + frac * (WIDTH - 1.5 * MARGIN)
}

fn plot_y(frac: f64) -> f64 {
    (HEIGHT - MARGIN) - frac * (HEIGHT - 2.0 * MARGIN)
}

/// Step plot of the CDF over the positive thresholds, x axis logarithmic.
pub fn cdf_chart(m: &MetricSummary) -> anyhow::Result<String> {
    let title = format!("Cumulative distribution of {} ({})", m.metric.name(), m.metric.unit());
    let mut s = header(&title);
    let points: Vec<_> = m.cdf.iter().filter(|p| p.threshold > 0.0).collect();
    if let (Some(first), Some(last)) = (points.first(), points.last()) {
        let (lo, hi) = (first.threshold.log10(), last.threshold.log10());
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut d = String::new();
        for (i, p) in points.iter().enumerate() {
            let x = plot_x((p.threshold.log10() - lo) / span);
            let y = plot_y(p.fraction);
            write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" })?;
        }
        writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            d.trim_end()
        )?;
        if let Some(gap) = m.gap {
            let x = plot_x((gap.threshold.log10() - lo) / span);
            writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="firebrick" stroke-dasharray="4 3"/>"#,
                plot_y(0.0),
                plot_y(1.0)
            )?;
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{:.3e}</text>"#,
            MARGIN,
            HEIGHT - MARGIN + 18.0,
            first.threshold
        )?;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3e}</text>"#,
            WIDTH - MARGIN / 2.0,
            HEIGHT - MARGIN + 18.0,
            last.threshold
        )?;
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">100%</text>"#,
        MARGIN - 6.0,
        plot_y(1.0) + 4.0
    )?;
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">0%</text>"#,
        MARGIN - 6.0,
        plot_y(0.0) + 4.0
    )?;
    s.push_str("</svg>\n");
    Ok(s)
}

/// Sorted per-sequence values as bars on a linear axis.
pub fn bar_chart(m: &MetricSummary) -> String {
    let title = format!("Sorted {} per sequence ({})", m.metric.name(), m.metric.unit());
    let mut s = header(&title);
    let max = m.sorted_bars.iter().copied().fold(0.0, f64::max);
    let n = m.sorted_bars.len();
    if n > 0 && max > 0.0 {
        let slot = (WIDTH - 1.5 * MARGIN) / n as f64;
        for (i, v) in m.sorted_bars.iter().enumerate() {
            let top = plot_y(v / max);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="steelblue"/>"#,
                MARGIN + i as f64 * slot,
                (slot * 0.8).max(0.5),
                plot_y(0.0) - top
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{max:.3e}</text>"#,
            MARGIN - 6.0,
            plot_y(1.0) + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use slameval::cohort::{CdfPoint, Gap, Metric};

    fn summary() -> MetricSummary {
        MetricSummary {
            metric: Metric::Ate,
            included: 3,
            excluded: 0,
            cdf: vec![
                CdfPoint {
                    threshold: 0.0,
                    fraction: 0.0,
                },
                CdfPoint {
                    threshold: 0.01,
                    fraction: 0.5,
                },
                CdfPoint {
                    threshold: 1.0,
                    fraction: 1.0,
                },
            ],
            sorted_bars: vec![0.01, 0.02, 1.0],
            gap: Some(Gap {
                threshold: 0.1,
                ratio: 50.0,
            }),
        }
    }

    #[test]
    fn charts_are_well_formed() {
        let cdf = cdf_chart(&summary()).unwrap();
        assert!(cdf.starts_with("<svg") && cdf.trim_end().ends_with("</svg>"));
        assert!(cdf.contains("stroke-dasharray"));
        let bars = bar_chart(&summary());
        assert_eq!(bars.matches("<rect").count(), 1 + 3);
    }

    #[test]
    fn empty_summary_still_renders() {
        let mut m = summary();
        m.cdf.clear();
        m.sorted_bars.clear();
        assert!(cdf_chart(&m).unwrap().contains("</svg>"));
        assert!(bar_chart(&m).contains("</svg>"));
    }
}
