//! SVG figures drawn from a sweep directory: gain over RWM against `m`, and
//! `Eff(m)/Eff(m₀)` panels. Only the public CSV schema and the manifest's
//! grid are read.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::report::{read_csv, ReportRow};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const GAIN_SVG: &str = "gain_vs_m.svg";
pub const EFF_SVG: &str = "eff_ratio.svg";

const PALETTE: [&str; 6] = ["#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6c4f9c", "#555555"];
const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 60.0;

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    log_y: bool,
    reference: Option<f64>,
    series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
        return (a..=b).map(|e| 10f64.powi(e)).filter(|t| *t >= lo * 0.999 && *t <= hi * 1.001).collect();
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|k| k * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn draw_panel(svg: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let pts: Vec<(f64, f64)> = panel
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|p| p.1.is_finite() && (!panel.log_y || p.1 > 0.0))
        .chain(panel.reference.map(|r| (f64::NAN, r)))
        .collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).filter(|x| x.is_finite()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (mut x0, mut x1) = (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let (mut y0, mut y1) = (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if !y0.is_finite() {
        (y0, y1) = (1.0, 10.0);
    }
    if panel.log_y {
        y0 = 10f64.powf(y0.log10().floor());
        y1 = 10f64.powf(y1.log10().ceil());
        if y1 <= y0 {
            y1 = y0 * 10.0;
        }
    } else {
        y0 = y0.min(0.0);
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        y1 *= 1.05;
    }
    let plot_w = PANEL_W - MARGIN - 20.0;
    let plot_h = PANEL_H - MARGIN - 30.0;
    let left = ox + MARGIN;
    let top = oy + 30.0;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| {
        let f = if panel.log_y {
            (y.log10() - y0.log10()) / (y1.log10() - y0.log10())
        } else {
            (y - y0) / (y1 - y0)
        };
        top + plot_h - f * plot_h
    };

    let _ = writeln!(svg, r#"<g class="panel">"#);
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
        left + plot_w / 2.0,
        oy + 18.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{left:.1}" y="{top:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#333"/>"##
    );
    for t in ticks(x0, x1, false) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r##"<line class="tick" x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"##,
            top + plot_h,
            top + plot_h + 4.0,
            top + plot_h + 16.0,
            fmt_tick(t)
        );
    }
    for t in ticks(y0, y1, panel.log_y) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line class="tick" x1="{:.1}" y1="{y:.1}" x2="{left:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"##,
            left - 4.0,
            left - 6.0,
            y + 3.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        left + plot_w / 2.0,
        top + plot_h + 34.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        ox + 16.0,
        top + plot_h / 2.0,
        ox + 16.0,
        top + plot_h / 2.0,
        escape(&panel.y_label)
    );
    if let Some(r) = panel.reference {
        let y = sy(r);
        let _ = writeln!(
            svg,
            r##"<line class="reference" x1="{left:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#999" stroke-dasharray="4 3"/>"##,
            left + plot_w
        );
    }
    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let shown: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|p| p.1.is_finite() && (!panel.log_y || p.1 > 0.0))
            .collect();
        let path: Vec<String> = shown.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="curve" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(&s.label),
            path.join(" ")
        );
        for &(x, y) in &shown {
            let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = top + 12.0 + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text class="legend" x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            left + 8.0,
            ly - 4.0,
            left + 24.0,
            ly - 4.0,
            left + 28.0,
            ly,
            escape(&s.label)
        );
    }
    let _ = writeln!(svg, "</g>");
}

fn render(panels: &[Panel]) -> String {
    let width = PANEL_W * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut svg, p, PANEL_W * i as f64, 0.0);
    }
    svg.push_str("</svg>\n");
    svg
}

fn kernel_order(rows: &[ReportRow]) -> Vec<String> {
    let mut order: Vec<String> = Vec::new();
    for r in rows {
        if !order.contains(&r.kernel) {
            order.push(r.kernel.clone());
        }
    }
    order
}

/// Gain over RWM against `m` at `m₀ = m`, one curve per kernel.
pub fn gain_figure(rows: &[ReportRow], title: &str) -> String {
    let series = kernel_order(rows)
        .into_iter()
        .map(|k| {
            let mut points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.kernel == k && r.m == r.m0)
                .map(|r| (r.m as f64, r.gain.unwrap_or(f64::NAN)))
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label: k, points }
        })
        .collect();
    render(&[Panel {
        title: title.into(),
        x_label: "m (directions per iteration)".into(),
        y_label: "relative improvement over RWM".into(),
        log_y: true,
        reference: None,
        series,
    }])
}

/// One `Eff(m)/Eff(m₀)` panel per `m₀`.
pub fn efficiency_figure(rows: &[ReportRow], m0_grid: &[usize], title: &str) -> String {
    let panels: Vec<Panel> = m0_grid
        .iter()
        .map(|&m0| {
            let series = kernel_order(rows)
                .into_iter()
                .filter(|k| k != "rwm")
                .filter_map(|k| {
                    let mut points: Vec<(f64, f64)> = rows
                        .iter()
                        .filter(|r| r.kernel == k && r.m0 == m0)
                        .filter_map(|r| Some((r.m as f64, r.eff_ratio?)))
                        .collect();
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    (points.len() > 1).then_some(Series { label: k, points })
                })
                .collect();
            Panel {
                title: format!("{title}, m0 = {m0}"),
                x_label: "m".into(),
                y_label: "Eff(m) / Eff(m0)".into(),
                log_y: false,
                reference: Some(1.0),
                series,
            }
        })
        .collect();
    render(&panels)
}

/// Cells the manifest promised but the table lacks.
fn absent_cells(manifest: &RunManifest, rows: &[ReportRow]) -> Vec<String> {
    let mut absent = Vec::new();
    for k in &manifest.spec.kernels {
        for &m in &manifest.spec.m {
            if !rows.iter().any(|r| r.kernel == k.name() && r.m == m && r.m0 == m) {
                absent.push(format!("{k} m={m}"));
            }
        }
    }
    absent.extend(manifest.failures.iter().map(|f| format!("{} (failed: {})", f.cell.label(), f.error)));
    absent
}

/// Writes the figures for a sweep directory and returns their paths.
pub fn cmd_plot(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let csv_path = dir.join(SWEEP_CSV);
    if !csv_path.exists() {
        return Err(CliError::Failed(format!(
            "no sweep reports in {}: expected {SWEEP_CSV} and {MANIFEST_FILE}",
            dir.display()
        )));
    }
    let rows = read_csv(&csv_path)?;
    if rows.is_empty() {
        return Err(CliError::Failed(format!("{} has no rows", csv_path.display())));
    }
    let manifest = RunManifest::read(dir)?;
    let absent = absent_cells(&manifest, &rows);
    if !absent.is_empty() {
        return Err(CliError::Failed(format!("incomplete sweep, absent cells: {}", absent.join(", "))));
    }
    let title = format!("{} (d = {})", manifest.spec.experiment, manifest.d);
    let mut written = Vec::new();
    let gain = dir.join(GAIN_SVG);
    std::fs::write(&gain, gain_figure(&rows, &title)).map_err(CliError::io(gain.display().to_string()))?;
    written.push(gain);
    if !manifest.spec.m0.is_empty() {
        let eff = dir.join(EFF_SVG);
        std::fs::write(&eff, efficiency_figure(&rows, &manifest.spec.m0, &title))
            .map_err(CliError::io(eff.display().to_string()))?;
        written.push(eff);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(kernel: &str, m: usize, m0: usize, gain: f64, eff: Option<f64>) -> ReportRow {
        ReportRow {
            kernel: kernel.into(),
            d: 200,
            m,
            m0,
            leapfrog_steps: 1,
            esjd: 0.1,
            gain: Some(gain),
            eff_ratio: eff,
            acc_rate: 0.5,
            rounds: 10,
        }
    }

    #[test]
    fn gain_figure_has_one_curve_per_kernel() {
        let mut rows = Vec::new();
        for (k, g) in [("rs-mala", 5.0), ("naive-mala", 0.5), ("rwm", 1.0), ("mtm", 2.0)] {
            for m in [25, 50, 100] {
                rows.push(row(k, m, m, g * m as f64 / 25.0, Some(1.0)));
            }
        }
        let svg = gain_figure(&rows, "logistic200");
        assert_eq!(svg.matches(r#"class="curve""#).count(), 4);
        assert_eq!(svg.matches("<circle").count(), 12);
        assert!(svg.contains("relative improvement over RWM"));
        assert!(svg.contains(r#"data-label="naive-mala""#));
    }

    #[test]
    fn efficiency_figure_has_panel_per_m0() {
        let rows = vec![
            row("rs-hmc", 5, 10, 1.0, Some(0.7)),
            row("rs-hmc", 10, 10, 1.0, Some(1.0)),
            row("rs-hmc", 20, 10, 1.0, Some(0.6)),
            row("rs-hmc", 25, 25, 1.0, Some(1.0)),
            row("rs-hmc", 50, 25, 1.0, Some(0.5)),
        ];
        let svg = efficiency_figure(&rows, &[10, 25], "x");
        assert_eq!(svg.matches(r#"class="panel""#).count(), 2);
        assert_eq!(svg.matches(r#"class="curve""#).count(), 2);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_plot(dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("no sweep reports"));
    }

    #[test]
    fn tick_values() {
        assert_eq!(ticks(1.0, 100.0, true), vec![1.0, 10.0, 100.0]);
        assert_eq!(ticks(0.0, 10.0, false), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
    }
}
