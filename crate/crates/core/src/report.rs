//! Scaling reports: JSON persistence, CSV rows and log-log SVG charts.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::{ExperimentSpec, ScalingRow, ScalingTable, Statistic};
use crate::stats::{fit_exponent, Aggregate, ExponentFit};
use crate::walk::StepLaw;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub statistic: Statistic,
    pub law: StepLaw,
    pub n: u64,
    pub trials: u64,
    pub censored: u64,
    pub mean: Option<f64>,
    pub var: Option<f64>,
    pub stderr: Option<f64>,
    pub q50: Option<u64>,
    pub q90: Option<u64>,
    pub q99: Option<u64>,
    /// Quantiles come from every trial rather than the reservoir.
    pub quantiles_exact: bool,
    pub aggregate: Aggregate,
}

impl From<&ScalingRow> for ReportRow {
    fn from(row: &ScalingRow) -> Self {
        let a = &row.aggregate;
        let some = a.count > 0;
        ReportRow {
            statistic: row.statistic,
            law: row.law,
            n: row.n,
            trials: row.trials,
            censored: row.censored,
            mean: some.then(|| a.mean()),
            var: some.then(|| a.variance()),
            stderr: some.then(|| a.stderr()),
            q50: a.quantile(0.5),
            q90: a.quantile(0.9),
            q99: a.quantile(0.99),
            quantiles_exact: a.quantiles_exact(),
            aggregate: a.clone(),
        }
    }
}

/// Fit of one series, identified by statistic and law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub statistic: Statistic,
    pub law: StepLaw,
    pub fit: ExponentFit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiments: Vec<ExperimentSpec>,
    pub rows: Vec<ReportRow>,
    pub fits: Vec<SeriesFit>,
    pub partial: bool,
}

impl Report {
    /// Collects tables and fits `log₂ mean` on `log₂ n` for each series with
    /// at least three usable sizes inside `window`.
    pub fn from_tables(tables: &[ScalingTable], window: Option<(f64, f64)>) -> Report {
        let mut report = Report::default();
        for table in tables {
            report.experiments.push(table.spec.clone());
            report.rows.extend(table.rows.iter().map(ReportRow::from));
            report.partial |= table.partial;
            if let Ok(fit) = fit_exponent(&table.points(), window) {
                report.fits.push(SeriesFit { statistic: table.spec.statistic, law: table.spec.law, fit });
            }
        }
        report
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Report> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn persist_report(report: &Report, path: &Path) -> Result<()> {
    let mut text = report.to_json()?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<Report> {
    Report::from_json(&fs::read_to_string(path)?)
}

/// One line per row: `statistic, law, n, trials, mean, var, q50, q90, q99, stderr`.
pub fn write_rows_csv<W: Write>(report: &Report, out: W) -> Result<()> {
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["statistic", "law", "n", "trials", "mean", "var", "q50", "q90", "q99", "stderr"])?;
    for r in &report.rows {
        wtr.write_record([
            r.statistic.to_string(),
            r.law.to_string(),
            r.n.to_string(),
            r.trials.to_string(),
            opt(r.mean),
            opt(r.var),
            opt(r.q50),
            opt(r.q90),
            opt(r.q99),
            opt(r.stderr),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log chart with one series per (statistic, law): a circle per size
/// and the fitted line. Data coordinates are repeated in `data-*` attributes.
pub fn render_svg(report: &Report) -> String {
    let mut series: Vec<(Statistic, StepLaw, Vec<(f64, f64)>)> = Vec::new();
    for r in &report.rows {
        let Some(mean) = r.mean.filter(|&m| m > 0.0) else { continue };
        let point = ((r.n as f64).log2(), mean.log2());
        match series.iter_mut().find(|s| s.0 == r.statistic && s.1 == r.law) {
            Some(s) => s.2.push(point),
            None => series.push((r.statistic, r.law, vec![point])),
        }
    }
    let all = series.iter().flat_map(|s| s.2.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black"><line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}"/></g>"#
    );
    let _ = writeln!(
        svg,
        r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle" font-size="14">log₂ n</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="ylabel" x="18" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 18 {})">log₂ mean</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="{}" font-size="11">{x0:.2}</text><text x="{right}" y="{}" font-size="11" text-anchor="end">{x1:.2}</text>"#,
        bottom + 16.0,
        bottom + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{bottom}" font-size="11" text-anchor="end">{y0:.2}</text><text x="{}" y="{}" font-size="11" text-anchor="end">{y1:.2}</text>"#,
        left - 4.0,
        left - 4.0,
        top + 4.0
    );

    for (i, (statistic, law, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let fit = report.fits.iter().find(|f| f.statistic == *statistic && f.law == *law);
        let _ = write!(svg, r#"<g class="series" data-statistic="{statistic}" data-law="{law}""#);
        if let Some(f) = fit {
            let _ = write!(svg, r#" data-slope="{:?}" data-intercept="{:?}""#, f.fit.slope, f.fit.intercept);
        }
        let _ = writeln!(svg, r#" fill="{color}" stroke="{color}">"#);
        let _ = writeln!(svg, r#"<title>{statistic} ({law})</title>"#);
        for &(x, y) in points {
            let _ = writeln!(
                svg,
                r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3.5" data-x="{x:?}" data-y="{y:?}"/>"#,
                px(x),
                py(y)
            );
        }
        if let Some(f) = fit {
            let (a, b) = (f.fit.window.0.log2(), f.fit.window.1.log2());
            let (ya, yb) = (f.fit.intercept + f.fit.slope * a, f.fit.intercept + f.fit.slope * b);
            let _ = writeln!(
                svg,
                r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-width="1.5" data-x1="{a:?}" data-y1="{ya:?}" data-x2="{b:?}" data-y2="{yb:?}"/>"#,
                px(a),
                py(ya),
                px(b),
                py(yb)
            );
            let _ = writeln!(
                svg,
                r#"<text class="annotation" x="{}" y="{}" font-size="11" stroke="none">{statistic}: slope {:.4} ± {:.4}</text>"#,
                left + 8.0,
                top + 14.0 * (i as f64 + 1.0),
                f.fit.slope,
                f.fit.stderr
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn render_plots(report: &Report, path: &Path) -> Result<()> {
    fs::write(path, render_svg(report))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_scaling, ExperimentSpec};

    fn sample_report() -> Report {
        let spec = ExperimentSpec::new(StepLaw::simple(1), (4..10).map(|j| 1u64 << j).collect(), 30, Statistic::ExactLis, 3);
        Report::from_tables(&[run_scaling(&spec).unwrap()], None)
    }

    fn attr(tag: &str, name: &str) -> f64 {
        let key = format!("{name}=\"");
        let start = tag.find(&key).unwrap() + key.len();
        let end = start + tag[start..].find('"').unwrap();
        tag[start..end].parse().unwrap()
    }

    #[test]
    fn json_round_trip() {
        let report = sample_report();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        persist_report(&report, &path).unwrap();
        assert_eq!(load_report(&path).unwrap(), report);
        assert!(persist_report(&report, &dir.path().join("missing/r.json")).is_err());
    }

    #[test]
    fn empty_report_is_valid() {
        let empty = Report::default();
        assert_eq!(Report::from_json(&empty.to_json().unwrap()).unwrap(), empty);
        let svg = render_svg(&empty);
        assert!(svg.contains("log₂ n") && svg.contains("log₂ mean"));
        assert!(!svg.contains("class=\"series\""));
    }

    #[test]
    fn svg_points_and_fitted_slope() {
        let report = sample_report();
        let svg = render_svg(&report);
        assert_eq!(svg.matches("class=\"point\"").count(), 6);
        let line = svg.lines().find(|l| l.contains("class=\"fit\"")).unwrap();
        let slope = (attr(line, "data-y2") - attr(line, "data-y1")) / (attr(line, "data-x2") - attr(line, "data-x1"));
        assert!((slope - report.fits[0].fit.slope).abs() < 1e-9);
        let group = svg.lines().find(|l| l.contains("class=\"series\"")).unwrap();
        assert_eq!(attr(group, "data-slope"), report.fits[0].fit.slope);
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_rows_csv(&sample_report(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "statistic,law,n,trials,mean,var,q50,q90,q99,stderr");
        assert!(lines.next().unwrap().starts_with("exact-lis,simple,16,30,"));
        assert_eq!(text.lines().count(), 7);
    }
}
