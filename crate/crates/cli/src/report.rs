//! Run directories, the JSON run report, CSV and SVG emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub started_at: String,
    pub run_dir: PathBuf,
    /// Echo of every option, sufficient to repeat the run.
    pub config: serde_json::Value,
    pub metrics: BTreeMap<String, f64>,
    pub artifacts: Vec<PathBuf>,
    pub wall_time_s: f64,
}

pub struct Run {
    report: RunReport,
    started: Instant,
    svg: bool,
}

impl Run {
    /// Creates `<out_dir>/<experiment>-<timestamp>` (suffixed if taken).
    pub fn start(out_dir: &Path, experiment: &str, config: serde_json::Value, svg: bool) -> Result<Self> {
        let now = chrono::Local::now();
        let stamp = now.format("%Y%m%dT%H%M%S%.3f").to_string();
        let mut dir = out_dir.join(format!("{experiment}-{stamp}"));
        let mut n = 1;
        while dir.exists() {
            dir = out_dir.join(format!("{experiment}-{stamp}-{n}"));
            n += 1;
        }
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            report: RunReport {
                experiment: experiment.to_string(),
                started_at: now.to_rfc3339(),
                run_dir: dir,
                config,
                metrics: BTreeMap::new(),
                artifacts: Vec::new(),
                wall_time_s: 0.0,
            },
            started: Instant::now(),
            svg,
        })
    }

    pub fn svg_enabled(&self) -> bool {
        self.svg
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.report.metrics.insert(name.into(), value);
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.report.run_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.report.artifacts.push(path);
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, csv: &Csv) -> Result<()> {
        self.write(name, &csv.text)
    }

    pub fn write_svg(&mut self, name: &str, plot: &Plot) -> Result<()> {
        if self.svg {
            self.write(name, &plot.render())?;
        }
        Ok(())
    }

    /// Writes `report.json`, prints it, and fails if any metric is not finite.
    pub fn finish(mut self) -> Result<RunReport> {
        self.report.wall_time_s = self.started.elapsed().as_secs_f64();
        let path = self.report.run_dir.join("report.json");
        self.report.artifacts.push(path.clone());
        let json = serde_json::to_string_pretty(&self.report)?;
        fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
        println!("{json}");
        let bad: Vec<&String> = self
            .report
            .metrics
            .iter()
            .filter(|(_, v)| !v.is_finite())
            .map(|(k, _)| k)
            .collect();
        if !bad.is_empty() {
            bail!("non-finite metrics: {bad:?}");
        }
        Ok(self.report)
    }
}

/// Round-trip exact decimal form (17 significant digits).
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns);
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[macro_export]
macro_rules! cells {
    ($($e:expr),* $(,)?) => { &[$($crate::report::Cell::from($e)),*] };
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub scatter: bool,
}

/// Minimal SVG line/scatter plot.
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn line(mut self, name: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { name: name.into(), points, scatter: false });
        self
    }

    pub fn scatter(mut self, name: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { name: name.into(), points, scatter: true });
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn render(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 50.0);
        let ty = |y: f64| if self.log_y { y.max(1e-300).log10() } else { y };
        let pts = || self.series.iter().flat_map(|s| &s.points).filter(|p| p.0.is_finite() && ty(p.1).is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in pts() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(ty(y));
            y1 = y1.max(ty(y));
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
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (ty(y) - y0) / (y1 - y0) * (h - 2.0 * m);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, esc(&self.title));
        let _ = writeln!(
            s,
            r#"<path d="M{m},{m} L{m},{b} L{r},{b}" stroke="black" fill="none"/>"#,
            b = h - m,
            r = w - m
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 12.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}{}</text>"#,
            h / 2.0,
            h / 2.0,
            esc(&self.y_label),
            if self.log_y { " (log10)" } else { "" }
        );
        let _ = writeln!(s, r#"<text x="{m}" y="{}" text-anchor="middle">{x0:.3}</text>"#, h - m + 15.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x1:.3}</text>"#, w - m, h - m + 15.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#, m - 4.0, h - m);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#, m - 4.0, m + 4.0);
        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let visible: Vec<(f64, f64)> = series
                .points
                .iter()
                .copied()
                .filter(|p| p.0.is_finite() && ty(p.1).is_finite())
                .collect();
            if series.scatter {
                for (x, y) in visible {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
                }
            } else if !visible.is_empty() {
                let path: Vec<String> = visible
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y))| format!("{}{:.2},{:.2}", if i == 0 { "M" } else { "L" }, sx(x), sy(y)))
                    .collect();
                let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, path.join(" "));
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                w - m - 150.0,
                m + 14.0 * k as f64,
                esc(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
