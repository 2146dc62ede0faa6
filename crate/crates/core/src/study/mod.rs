//! Study orchestration: the dose-sweep detectability study, the paired
//! PSNR/SSIM study, and their CSV/SVG reports.

mod config;
mod lcd;
mod metric_study;
mod report;

pub use config::{
    MetricStudyConfig, ObserverConfig, StudyConfig, PROTOCOL_SP_SCANS, PROTOCOL_TRAIN_PAIRS, PROTOCOL_WATER_SCANS,
};
pub use lcd::{
    insert_bases, provenance_preamble, run_lcd_study, scan_seed, split_seed, LcdResult, LcdRow, LCD_CSV_HEADER,
};
pub use metric_study::{metric_seeds, run_metric_files, run_metric_study, MetricStudyResult};
pub use report::{
    auc_plot_name, emit_lcd_report, emit_metric_report, read_lcd_csv, read_metric_csv, render_auc_plot,
    render_metric_plot, LCD_CSV_NAME, METRIC_CSV_NAME, METRIC_PLOT_NAME, METRIC_TABLE_NAME,
};
