//! Paired-image PSNR/SSIM study: simulated phantom pairs or user images.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::StudyConfig;
use super::lcd::provenance_preamble;
use crate::denoise::{denoise_normalized, normalize, Method};
use crate::error::{Error, Result};
use crate::image::{ImageGrid, Unit};
use crate::io::read_image;
use crate::metrics::{aggregate, psnr, ssim, MethodMetrics, MetricReport, SsimParams};
use crate::phantom::build_cct189_with;
use crate::recon::fbp_fan;
use crate::scanner::{apply_poisson_noise, forward_project, DoseLevel};
use crate::seed::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricStudyResult {
    pub config: StudyConfig,
    pub config_hash: String,
    /// `simulated` or `files`.
    pub mode: String,
    pub report: MetricReport,
}

impl MetricStudyResult {
    pub fn to_csv(&self) -> String {
        let mut out = provenance_preamble(&self.config, &self.config_hash);
        out.push_str(&format!("# mode = {}\n", self.mode));
        out.push_str(&self.report.to_csv());
        out
    }
}

/// Seeds of the normal- and reduced-dose scans of slice `s`.
pub fn metric_seeds(study_seed: u64, slice: usize) -> (u64, u64) {
    (
        derive_seed(&[study_seed, stream::METRIC_REFERENCE, slice as u64]),
        derive_seed(&[study_seed, stream::METRIC_TEST, slice as u64]),
    )
}

fn score_methods(
    reference: &ImageGrid,
    test: &ImageGrid,
    methods: &[Method],
    cfg: &StudyConfig,
) -> Result<Vec<(f64, f64)>> {
    let ssim_params = SsimParams {
        data_range: cfg.metrics.data_range,
        ..SsimParams::default()
    };
    methods
        .iter()
        .map(|&m| {
            let out = denoise_normalized(test, m, &cfg.denoiser).map_err(|e| e.context(format!("method {m}")))?;
            Ok((
                psnr(reference, &out, cfg.metrics.data_range)?,
                ssim(reference, &out, &ssim_params)?,
            ))
        })
        .collect()
}

fn collect(methods: &[Method], per_slice: Vec<Vec<(f64, f64)>>) -> Result<MetricReport> {
    let per_method = methods
        .iter()
        .enumerate()
        .map(|(i, m)| MethodMetrics {
            method: m.name().to_string(),
            psnr: per_slice.iter().map(|s| s[i].0).collect(),
            ssim: per_slice.iter().map(|s| s[i].1).collect(),
        })
        .collect();
    aggregate(per_method)
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Simulated mode: each slice is an independent normal-dose / reduced-dose
/// scan pair of the CCT189 phantom. The normalized normal-dose FBP image is
/// the reference; every method is applied to the reduced-dose FBP image.
pub fn run_metric_study(cfg: &StudyConfig, workers: usize) -> Result<MetricStudyResult> {
    cfg.validate()?;
    let m = &cfg.metrics;
    let phantom = build_cct189_with(&cfg.phantom)?;
    cfg.geometry.require_covers(phantom.support_radius())?;
    let ref_dose = DoseLevel::from_fraction(m.reference_dose)?;
    let test_dose = DoseLevel::from_fraction(m.test_dose)?;
    let per_slice = build_pool(workers)?.install(|| -> Result<Vec<_>> {
        let clean = forward_project(&phantom, &cfg.geometry)?;
        (0..m.n_slices)
            .into_par_iter()
            .map(|s| {
                let (seed_ref, seed_test) = metric_seeds(cfg.study_seed, s);
                let scan = |dose, seed| -> Result<ImageGrid> {
                    let img = fbp_fan(&apply_poisson_noise(&clean, dose, seed)?, &cfg.recon)?;
                    normalize(&img, &cfg.normalization)
                };
                let reference = scan(ref_dose, seed_ref)?;
                let test = scan(test_dose, seed_test)?;
                score_methods(&reference, &test, &m.methods, cfg).map_err(|e| e.context(format!("slice {s}")))
            })
            .collect()
    })?;
    Ok(MetricStudyResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        mode: "simulated".into(),
        report: collect(&m.methods, per_slice)?,
    })
}

fn list_images(dir: &Path) -> Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::Io(e).context(format!("listing {}", dir.display())))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "f32") {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.insert(name.to_string());
            }
        }
    }
    Ok(names)
}

fn load_normalized(path: &Path, cfg: &StudyConfig) -> Result<ImageGrid> {
    let (img, _) = read_image(path)?;
    match img.unit() {
        Unit::Hu => normalize(&img, &cfg.normalization),
        Unit::Normalized => Ok(img),
        other => Err(Error::UnitMismatch {
            expected: "HU or normalized".into(),
            actual: other.to_string(),
        }
        .context(path.display().to_string())),
    }
}

/// File mode: `reference_dir` holds the reference images; `test_dir` holds
/// the reduced-dose images with the same file names. Each method in
/// `cfg.metrics.methods` is applied to the test images (`fbp` scores them
/// as they are). HU images are normalized through `cfg.normalization`.
pub fn run_metric_files(cfg: &StudyConfig, reference_dir: &Path, test_dir: &Path, workers: usize) -> Result<MetricStudyResult> {
    cfg.validate()?;
    let refs = list_images(reference_dir)?;
    let tests = list_images(test_dir)?;
    if refs.is_empty() {
        return Err(Error::Empty(format!("no .f32 images in {}", reference_dir.display())));
    }
    if refs != tests {
        let unpaired: Vec<&String> = refs.symmetric_difference(&tests).collect();
        return Err(Error::ShapeMismatch {
            expected: format!("the same image names in {} and {}", reference_dir.display(), test_dir.display()),
            actual: format!("unpaired: {unpaired:?}"),
        });
    }
    let names: Vec<String> = refs.into_iter().collect();
    let per_slice = build_pool(workers)?.install(|| {
        names
            .par_iter()
            .map(|name| {
                let (rp, tp): (PathBuf, PathBuf) = (reference_dir.join(name), test_dir.join(name));
                let reference = load_normalized(&rp, cfg)?;
                let test = load_normalized(&tp, cfg)?;
                reference.require_same_shape(&test).map_err(|e| e.context(name.clone()))?;
                score_methods(&reference, &test, &cfg.metrics.methods, cfg).map_err(|e| e.context(name.clone()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(MetricStudyResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        mode: "files".into(),
        report: collect(&cfg.metrics.methods, per_slice)?,
    })
}
