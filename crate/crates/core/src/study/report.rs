//! CSV and SVG artifacts for study results.
//!
//! Every file carries the configuration hash and study seed: CSVs in their
//! `#` preamble, SVGs in a leading XML comment and the chart caption. No
//! timestamps are written, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::config::StudyConfig;
use super::lcd::{LcdResult, LcdRow, LCD_CSV_HEADER};
use super::metric_study::MetricStudyResult;
use crate::denoise::Method;
use crate::error::{Error, Result};
use crate::metrics::{MetricReport, MetricSummary, METRIC_CSV_HEADER};

pub const LCD_CSV_NAME: &str = "lcd_results.csv";
pub const METRIC_CSV_NAME: &str = "metrics.csv";
pub const METRIC_TABLE_NAME: &str = "metrics_table.csv";
pub const METRIC_PLOT_NAME: &str = "metrics_bars.svg";

pub fn auc_plot_name(insert_index: usize) -> String {
    format!("auc_vs_dose_insert{insert_index}.svg")
}

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("plot rendering failed: {e}"))
}

fn stamp_svg(svg: String, hash: &str, seed: u64) -> String {
    let comment = format!("<!-- lcdsim config_sha256={hash} study_seed={seed} -->\n");
    match svg.find("<svg") {
        Some(at) => format!("{}{comment}{}", &svg[..at], &svg[at..]),
        None => comment + &svg,
    }
}

fn short(hash: &str) -> &str {
    &hash[..hash.len().min(12)]
}

/// AUC (± split std) against dose fraction, one series per method.
pub fn render_auc_plot(result: &LcdResult, insert_index: usize) -> Result<String> {
    let rows: Vec<&LcdRow> = result.rows.iter().filter(|r| r.insert_index == insert_index).collect();
    let first = rows
        .first()
        .ok_or_else(|| Error::Empty(format!("no rows for insert {insert_index}")))?;
    let mut methods: Vec<Method> = Vec::new();
    for r in &rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let lo = rows.iter().map(|r| r.auc - r.auc_std).fold(1.0_f64, f64::min).clamp(0.0, 0.5);
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (640, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let title = format!(
            "{} mm / {} HU insert  (config {}, seed {})",
            first.diameter_mm,
            first.contrast_hu,
            short(&result.config_hash),
            result.config.study_seed
        );
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 16))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(0.0..1.05_f64, lo..1.0_f64)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("dose fraction")
            .y_desc("AUC")
            .draw()
            .map_err(plot_err)?;
        for (i, &method) in methods.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut pts: Vec<&LcdRow> = rows.iter().copied().filter(|r| r.method == method).collect();
            pts.sort_by(|a, b| a.dose_fraction.total_cmp(&b.dose_fraction));
            chart
                .draw_series(LineSeries::new(pts.iter().map(|r| (r.dose_fraction, r.auc)), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(method.name())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
            chart
                .draw_series(pts.iter().map(|r| {
                    PathElement::new(
                        vec![(r.dose_fraction, r.auc - r.auc_std), (r.dose_fraction, r.auc + r.auc_std)],
                        color.stroke_width(1),
                    )
                }))
                .map_err(plot_err)?;
            chart
                .draw_series(pts.iter().map(|r| Circle::new((r.dose_fraction, r.auc), 3, color.filled())))
                .map_err(plot_err)?;
        }
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::LowerRight)
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(stamp_svg(svg, &result.config_hash, result.config.study_seed))
}

/// Side-by-side PSNR and SSIM bars with ±std whiskers.
pub fn render_metric_plot(rows: &[MetricSummary], hash: &str, seed: u64) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Empty("no metric rows to plot".into()));
    }
    let n = rows.len();
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 400)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let root = root
            .titled(&format!("PSNR / SSIM  (config {}, seed {seed})", short(hash)), ("sans-serif", 16))
            .map_err(plot_err)?;
        let (left, right) = root.split_horizontally(400);
        type Pick = fn(&MetricSummary) -> (f64, f64);
        let panels: [(&DrawingArea<SVGBackend, plotters::coord::Shift>, &str, Pick); 2] = [
            (&left, "PSNR (dB)", |r| (r.psnr_mean, r.psnr_std)),
            (&right, "SSIM", |r| (r.ssim_mean, r.ssim_std)),
        ];
        for (area, label, pick) in panels {
            let top = rows
                .iter()
                .map(|r| {
                    let (m, s) = pick(r);
                    m + s
                })
                .filter(|v| v.is_finite())
                .fold(0.0_f64, f64::max)
                * 1.1;
            let top = if top > 0.0 { top } else { 1.0 };
            let mut chart = ChartBuilder::on(area)
                .margin(12)
                .x_label_area_size(30)
                .y_label_area_size(50)
                .build_cartesian_2d(0.0..n as f64, 0.0..top)
                .map_err(plot_err)?;
            chart
                .configure_mesh()
                .disable_x_mesh()
                .x_labels(n)
                .x_label_formatter(&|x| {
                    let i = x.floor() as usize;
                    rows.get(i).map(|r| r.method.clone()).unwrap_or_default()
                })
                .y_desc(label)
                .draw()
                .map_err(plot_err)?;
            for (i, r) in rows.iter().enumerate() {
                let (mean, std) = pick(r);
                let mean = if mean.is_finite() { mean } else { top };
                let color = PALETTE[i % PALETTE.len()];
                let x0 = i as f64 + 0.2;
                let x1 = i as f64 + 0.8;
                chart
                    .draw_series(std::iter::once(Rectangle::new([(x0, 0.0), (x1, mean)], color.filled())))
                    .map_err(plot_err)?;
                let xc = i as f64 + 0.5;
                chart
                    .draw_series(std::iter::once(PathElement::new(
                        vec![(xc, (mean - std).max(0.0)), (xc, (mean + std).min(top))],
                        BLACK.stroke_width(1),
                    )))
                    .map_err(plot_err)?;
            }
        }
        root.present().map_err(plot_err)?;
    }
    Ok(stamp_svg(svg, hash, seed))
}

fn write_all(dir: &Path, files: Vec<(String, String)>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(e).context(format!("creating {}", dir.display())))?;
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::Io(e).context(format!("writing {}", path.display())))?;
            Ok(path)
        })
        .collect()
}

/// Writes the LCD CSV and one AUC-vs-dose plot per insert. Everything is
/// rendered before anything is written; an empty result writes nothing.
pub fn emit_lcd_report(result: &LcdResult, dir: &Path) -> Result<Vec<PathBuf>> {
    if result.rows.is_empty() {
        return Err(Error::Empty("LCD result has no rows".into()));
    }
    let mut inserts: Vec<usize> = result.rows.iter().map(|r| r.insert_index).collect();
    inserts.sort_unstable();
    inserts.dedup();
    let mut files = vec![(LCD_CSV_NAME.to_string(), result.to_csv())];
    for j in inserts {
        files.push((auc_plot_name(j), render_auc_plot(result, j)?));
    }
    write_all(dir, files)
}

/// Writes the metric CSV, the `mean (±std)` display table and the bar plot.
pub fn emit_metric_report(result: &MetricStudyResult, dir: &Path) -> Result<Vec<PathBuf>> {
    if result.report.rows.is_empty() {
        return Err(Error::Empty("metric report has no rows".into()));
    }
    let files = vec![
        (METRIC_CSV_NAME.to_string(), result.to_csv()),
        (
            METRIC_TABLE_NAME.to_string(),
            format!("# config_sha256 = {}\n{}", result.config_hash, result.report.to_table()),
        ),
        (
            METRIC_PLOT_NAME.to_string(),
            render_metric_plot(&result.report.rows, &result.config_hash, result.config.study_seed)?,
        ),
    ];
    write_all(dir, files)
}

/// Splits a study CSV into (config, hash, data lines).
fn parse_preamble(text: &str) -> Result<(StudyConfig, String, Vec<&str>)> {
    let mut toml_text = String::new();
    let mut hash = None;
    let mut data = Vec::new();
    for line in text.lines() {
        if let Some(body) = line.strip_prefix("#   ") {
            toml_text.push_str(body);
            toml_text.push('\n');
        } else if let Some(h) = line.strip_prefix("# config_sha256 = ") {
            hash = Some(h.trim().to_string());
        } else if !line.starts_with('#') && !line.trim().is_empty() {
            data.push(line);
        }
    }
    let config = StudyConfig::from_toml_str(&toml_text)?;
    let hash = hash.ok_or_else(|| Error::Config("CSV preamble has no config_sha256".into()))?;
    Ok((config, hash, data))
}

fn field<T: std::str::FromStr>(cells: &[&str], i: usize, line: &str) -> Result<T> {
    cells
        .get(i)
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| Error::Config(format!("malformed CSV row {line:?} (column {i})")))
}

/// Reads a CSV written by [`LcdResult::to_csv`].
pub fn read_lcd_csv(text: &str) -> Result<LcdResult> {
    let (config, config_hash, data) = parse_preamble(text)?;
    let (header, body) = data.split_first().ok_or_else(|| Error::Empty("CSV has no header".into()))?;
    if *header != LCD_CSV_HEADER {
        return Err(Error::Config(format!("unexpected LCD CSV header {header:?}")));
    }
    let rows = body
        .iter()
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            Ok(LcdRow {
                method: field(&c, 0, line)?,
                dose_fraction: field(&c, 1, line)?,
                insert_index: field(&c, 2, line)?,
                diameter_mm: field(&c, 3, line)?,
                contrast_hu: field(&c, 4, line)?,
                auc: field(&c, 5, line)?,
                auc_std: field(&c, 6, line)?,
                dprime: field(&c, 7, line)?,
                n_sp: field(&c, 8, line)?,
                n_sa: field(&c, 9, line)?,
                n_train_pairs: field(&c, 10, line)?,
                n_test_sp: field(&c, 11, line)?,
                n_test_sa: field(&c, 12, line)?,
                n_repeats: field(&c, 13, line)?,
                split_seed: field(&c, 14, line)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LcdResult {
        desk_scale: config.is_desk_scale(),
        config,
        config_hash,
        rows,
    })
}

/// Reads a CSV written by [`MetricStudyResult::to_csv`]; per-slice values
/// are not stored, so `report.per_slice` is empty.
pub fn read_metric_csv(text: &str) -> Result<MetricStudyResult> {
    let (config, config_hash, data) = parse_preamble(text)?;
    let mode = text
        .lines()
        .find_map(|l| l.strip_prefix("# mode = "))
        .unwrap_or("simulated")
        .to_string();
    let (header, body) = data.split_first().ok_or_else(|| Error::Empty("CSV has no header".into()))?;
    if *header != METRIC_CSV_HEADER {
        return Err(Error::Config(format!("unexpected metric CSV header {header:?}")));
    }
    let rows = body
        .iter()
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            Ok(MetricSummary {
                method: c.first().map(|s| s.to_string()).unwrap_or_default(),
                n_slices: field(&c, 1, line)?,
                psnr_mean: field(&c, 2, line)?,
                psnr_std: field(&c, 3, line)?,
                ssim_mean: field(&c, 4, line)?,
                ssim_std: field(&c, 5, line)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricStudyResult {
        config,
        config_hash,
        mode,
        report: MetricReport {
            per_slice: Vec::new(),
            rows,
        },
    })
}
