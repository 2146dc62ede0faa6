//! Dose-sweep detectability study.

use rayon::prelude::*;

use super::config::StudyConfig;
use crate::denoise::{denoise_hu, Method};
use crate::error::{Error, Result};
use crate::observer::{
    auc_with_uncertainty_channelized, extract_rois, lg_channels, vicinity_centers, ChannelBasis, RoiLabel, RoiSource,
    SplitProtocol,
};
use crate::phantom::{build_cct189_with, build_uniform_water_with, DiskSpec};
use crate::recon::fbp_fan;
use crate::scanner::{apply_poisson_noise, forward_project, DoseLevel, Sinogram};
use crate::seed::{derive_seed, stream};

/// One (method, dose, insert) detectability estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LcdRow {
    pub method: Method,
    pub dose_fraction: f64,
    pub insert_index: usize,
    pub diameter_mm: f64,
    pub contrast_hu: f64,
    pub auc: f64,
    pub auc_std: f64,
    pub dprime: f64,
    pub n_sp: usize,
    pub n_sa: usize,
    pub n_train_pairs: usize,
    pub n_test_sp: usize,
    pub n_test_sa: usize,
    pub n_repeats: usize,
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcdResult {
    pub config: StudyConfig,
    pub config_hash: String,
    pub desk_scale: bool,
    /// Ordered by method, then dose, then insert, as configured.
    pub rows: Vec<LcdRow>,
}

pub const LCD_CSV_HEADER: &str = "method,dose_fraction,insert_index,diameter_mm,contrast_hu,auc,auc_std,dprime,\
n_sp,n_sa,n_train_pairs,n_test_sp,n_test_sa,n_repeats,split_seed";

impl LcdResult {
    pub fn row(&self, method: Method, dose_fraction: f64, insert_index: usize) -> Option<&LcdRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.dose_fraction == dose_fraction && r.insert_index == insert_index)
    }

    /// CSV with a `#`-commented provenance preamble (config hash, seed
    /// rules, and the full configuration minus `output_dir`).
    pub fn to_csv(&self) -> String {
        let mut out = provenance_preamble(&self.config, &self.config_hash);
        out.push_str(&format!("# desk_scale = {}\n", self.desk_scale));
        out.push_str(LCD_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{},{},{},{}\n",
                r.method,
                r.dose_fraction,
                r.insert_index,
                r.diameter_mm,
                r.contrast_hu,
                r.auc,
                r.auc_std,
                r.dprime,
                r.n_sp,
                r.n_sa,
                r.n_train_pairs,
                r.n_test_sp,
                r.n_test_sa,
                r.n_repeats,
                r.split_seed
            ));
        }
        out
    }
}

/// Comment lines identifying the configuration behind an output file.
pub fn provenance_preamble(cfg: &StudyConfig, hash: &str) -> String {
    let mut canonical = cfg.clone();
    canonical.output_dir = Default::default();
    let mut out = format!(
        "# lcdsim study output\n# config_sha256 = {hash}\n# study_seed = {}\n\
         # scan_seed = derive_seed([study_seed, stream, dose_index, scan]); stream {} = CCT189, {} = water\n\
         # split_seed = derive_seed([study_seed, {}, insert])\n",
        cfg.study_seed,
        stream::CCT189_SCAN,
        stream::WATER_SCAN,
        stream::SPLIT
    );
    for line in canonical.to_toml().lines() {
        out.push_str("#   ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Noise seed of one scan; independent of execution order.
pub fn scan_seed(study_seed: u64, phantom_stream: u64, dose_index: usize, scan: usize) -> u64 {
    derive_seed(&[study_seed, phantom_stream, dose_index as u64, scan as u64])
}

/// Seed of the train/test partitions for one insert, shared by every
/// method and dose so their estimates use identical splits.
pub fn split_seed(study_seed: u64, insert_index: usize) -> u64 {
    derive_seed(&[study_seed, stream::SPLIT, insert_index as u64])
}

/// Channel vectors from one scan: `[method][insert][roi]`.
type ScanChannels = Vec<Vec<Vec<Vec<f64>>>>;

struct ScanPlan<'a> {
    cfg: &'a StudyConfig,
    bases: Vec<ChannelBasis>,
    inserts: Vec<DiskSpec>,
    sa_centers: Vec<Vec<(f64, f64)>>,
}

impl ScanPlan<'_> {
    fn process(&self, clean: &Sinogram, dose: DoseLevel, seed: u64, label: RoiLabel, scan: usize) -> Result<ScanChannels> {
        let cfg = self.cfg;
        let noisy = apply_poisson_noise(clean, dose, seed)?;
        let recon = fbp_fan(&noisy, &cfg.recon)?;
        cfg.methods
            .iter()
            .map(|&method| {
                let img = denoise_hu(&recon, method, &cfg.denoiser, &cfg.normalization)
                    .map_err(|e| e.context(format!("method {method}")))?;
                self.inserts
                    .iter()
                    .enumerate()
                    .map(|(k, insert)| {
                        let centers = match label {
                            RoiLabel::SignalPresent => vec![(insert.center_x_mm, insert.center_y_mm)],
                            RoiLabel::SignalAbsent => self.sa_centers[k].clone(),
                        };
                        let source = RoiSource {
                            label,
                            insert_index: k,
                            scan_id: scan as u64,
                        };
                        extract_rois(&img, &centers, cfg.observer.roi_side, source)?
                            .iter()
                            .map(|roi| self.bases[k].channelize(&roi.patch))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// LG basis per insert: width `width_factor × diameter` in pixels.
pub fn insert_bases(cfg: &StudyConfig, inserts: &[DiskSpec]) -> Result<Vec<ChannelBasis>> {
    let pixel = cfg.recon.pixel_mm();
    inserts
        .iter()
        .map(|d| {
            lg_channels(
                cfg.observer.roi_side,
                cfg.observer.n_channels,
                cfg.observer.width_factor * d.diameter_mm() / pixel,
            )
        })
        .collect()
}

/// Runs the dose sweep on a pool of `workers` threads (0 = rayon default).
/// The result depends only on `cfg`.
pub fn run_lcd_study(cfg: &StudyConfig, workers: usize) -> Result<LcdResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(cfg))
}

fn run_in_pool(cfg: &StudyConfig) -> Result<LcdResult> {
    let cct = build_cct189_with(&cfg.phantom)?;
    let water = build_uniform_water_with(&cfg.phantom)?;
    cfg.geometry.require_covers(cct.support_radius())?;
    let clean_cct = forward_project(&cct, &cfg.geometry)?;
    let clean_water = forward_project(&water, &cfg.geometry)?;

    let inserts = cct.inserts.clone();
    let plan = ScanPlan {
        cfg,
        bases: insert_bases(cfg, &inserts)?,
        sa_centers: inserts
            .iter()
            .map(|d| vicinity_centers(d, &cfg.observer.sa_offsets_deg))
            .collect(),
        inserts,
    };
    let n_inserts = plan.inserts.len();
    let n_methods = cfg.methods.len();
    let n_sa_per_scan = cfg.observer.sa_offsets_deg.len();
    let k = cfg.n_train_pairs();
    if cfg.is_desk_scale() {
        log::info!(
            "desk-scale run: {} SP / {} water scans, {k} training pairs per split",
            cfg.n_sp_scans,
            cfg.n_water_scans
        );
    }

    // collected[method][dose][insert] = (sp, sa)
    let mut collected: Vec<Vec<Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>>> = vec![Vec::new(); n_methods];
    for (dose_index, &fraction) in cfg.dose_fractions.iter().enumerate() {
        let dose = DoseLevel::from_fraction(fraction)?;
        let tasks: Vec<(RoiLabel, usize)> = (0..cfg.n_sp_scans)
            .map(|i| (RoiLabel::SignalPresent, i))
            .chain((0..cfg.n_water_scans).map(|i| (RoiLabel::SignalAbsent, i)))
            .collect();
        let per_scan: Vec<ScanChannels> = tasks
            .par_iter()
            .map(|&(label, scan)| {
                let (clean, phantom_stream, name) = match label {
                    RoiLabel::SignalPresent => (&clean_cct, stream::CCT189_SCAN, "CCT189"),
                    RoiLabel::SignalAbsent => (&clean_water, stream::WATER_SCAN, "water"),
                };
                let seed = scan_seed(cfg.study_seed, phantom_stream, dose_index, scan);
                plan.process(clean, dose, seed, label, scan)
                    .map_err(|e| e.context(format!("dose {fraction}, {name} scan {scan}")))
            })
            .collect::<Result<_>>()?;

        for (m, slot) in collected.iter_mut().enumerate() {
            let mut by_insert = vec![(Vec::new(), Vec::new()); n_inserts];
            for ((label, _), scan) in tasks.iter().zip(&per_scan) {
                for (j, rois) in scan[m].iter().enumerate() {
                    let target = match label {
                        RoiLabel::SignalPresent => &mut by_insert[j].0,
                        RoiLabel::SignalAbsent => &mut by_insert[j].1,
                    };
                    target.extend(rois.iter().cloned());
                }
            }
            for (j, (sp, sa)) in by_insert.iter().enumerate() {
                let (want_sp, want_sa) = (cfg.n_sp_scans, cfg.n_water_scans * n_sa_per_scan);
                if sp.len() != want_sp || sa.len() != want_sa {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{want_sp} SP / {want_sa} SA ROIs for insert {j}"),
                        actual: format!("{} / {}", sp.len(), sa.len()),
                    });
                }
            }
            slot.push(by_insert);
        }
        log::info!(
            "dose {fraction}: {} SP and {} SA ROIs per insert per method ({} CCT189 scans × 1, {} water scans × {n_sa_per_scan})",
            cfg.n_sp_scans,
            cfg.n_water_scans * n_sa_per_scan,
            cfg.n_sp_scans,
            cfg.n_water_scans
        );
    }

    let mut rows = Vec::new();
    for (m, &method) in cfg.methods.iter().enumerate() {
        for (d, &fraction) in cfg.dose_fractions.iter().enumerate() {
            for (j, insert) in plan.inserts.iter().enumerate() {
                let (sp, sa) = &collected[m][d][j];
                let protocol = SplitProtocol {
                    n_train_pairs: k,
                    n_repeats: cfg.observer.n_repeats,
                    seed: split_seed(cfg.study_seed, j),
                };
                let est = auc_with_uncertainty_channelized(sp, sa, &protocol)
                    .map_err(|e| e.context(format!("method {method}, dose {fraction}, insert {j}")))?;
                rows.push(LcdRow {
                    method,
                    dose_fraction: fraction,
                    insert_index: j,
                    diameter_mm: insert.diameter_mm(),
                    contrast_hu: insert.contrast_hu,
                    auc: est.auc,
                    auc_std: est.auc_std,
                    dprime: est.dprime,
                    n_sp: sp.len(),
                    n_sa: sa.len(),
                    n_train_pairs: est.n_train_pairs,
                    n_test_sp: est.n_test_sp,
                    n_test_sa: est.n_test_sa,
                    n_repeats: est.n_repeats,
                    split_seed: protocol.seed,
                });
            }
        }
    }
    Ok(LcdResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        desk_scale: cfg.is_desk_scale(),
        rows,
    })
}
