//! Study configuration: a TOML file plus `key=value` overrides.
//!
//! Every key is optional; omitted keys take the defaults below, which
//! reproduce the full evaluation protocol (200 phantom scans and 100 water
//! scans at 25/50/75/100 % dose).
//!
//! ```toml
//! study_seed = 20240101
//! dose_fractions = [0.25, 0.5, 0.75, 1.0]
//! n_sp_scans = 200
//! n_water_scans = 100
//! methods = ["fbp", "bilateral", "tv"]
//! output_dir = "lcd-out"
//!
//! [phantom]        # background_radius_mm, insert_ring_radius_mm, insert_angles_deg,
//!                  # insert_diameters_mm, insert_contrasts_hu, mu_water
//! [geometry]       # src_to_iso_mm, src_to_det_mm, n_views, n_channels, det_pitch_mm
//! [recon]          # n, fov_mm, apodization = "hann" | "ramp", cutoff_fraction, mu_water
//! [normalization]  # lo_hu, hi_hu
//! [denoiser.bilateral]  # window, sigma_color, sigma_spatial
//! [denoiser.tv]         # lambda, max_iters, tol
//! [denoiser.external]   # command = "prog {in} {out}", exchange_dir, timeout_s
//! [observer]       # n_channels, width_factor, roi_side, n_repeats, sa_offsets_deg, n_train_pairs
//! [metrics]        # n_slices, reference_dose, test_dose, methods, data_range
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::denoise::{DenoiserConfig, Method, NormalizationWindow};
use crate::error::{Error, Result};
use crate::phantom::PhantomConfig;
use crate::recon::ReconParams;
use crate::scanner::{DoseLevel, FanBeamGeometry};

/// Protocol counts the default configuration follows.
pub const PROTOCOL_SP_SCANS: usize = 200;
pub const PROTOCOL_WATER_SCANS: usize = 100;
pub const PROTOCOL_TRAIN_PAIRS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverConfig {
    pub n_channels: usize,
    /// LG width as a multiple of the insert diameter.
    pub width_factor: f64,
    pub roi_side: usize,
    pub n_repeats: usize,
    /// Angular offsets (about iso-center) of the signal-absent ROIs.
    pub sa_offsets_deg: Vec<f64>,
    /// Training pairs per split; defaults to half the signal-present scans.
    pub n_train_pairs: Option<usize>,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            n_channels: 5,
            width_factor: 2.0,
            roi_side: 64,
            n_repeats: 10,
            sa_offsets_deg: vec![-20.0, -10.0, 0.0, 10.0, 20.0],
            n_train_pairs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricStudyConfig {
    pub n_slices: usize,
    pub reference_dose: f64,
    pub test_dose: f64,
    pub methods: Vec<Method>,
    pub data_range: f64,
}

impl Default for MetricStudyConfig {
    fn default() -> Self {
        Self {
            n_slices: 10,
            reference_dose: 1.0,
            test_dose: 0.25,
            methods: vec![Method::Fbp, Method::Bilateral, Method::Tv],
            data_range: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub study_seed: u64,
    pub dose_fractions: Vec<f64>,
    pub n_sp_scans: usize,
    pub n_water_scans: usize,
    pub methods: Vec<Method>,
    pub output_dir: PathBuf,
    pub phantom: PhantomConfig,
    pub geometry: FanBeamGeometry,
    pub recon: ReconParams,
    pub normalization: NormalizationWindow,
    pub denoiser: DenoiserConfig,
    pub observer: ObserverConfig,
    pub metrics: MetricStudyConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            study_seed: 20240101,
            dose_fractions: vec![0.25, 0.5, 0.75, 1.0],
            n_sp_scans: PROTOCOL_SP_SCANS,
            n_water_scans: PROTOCOL_WATER_SCANS,
            methods: vec![Method::Fbp, Method::Bilateral, Method::Tv],
            output_dir: PathBuf::from("lcd-out"),
            phantom: PhantomConfig::default(),
            geometry: FanBeamGeometry::default(),
            recon: ReconParams::default(),
            normalization: NormalizationWindow::default(),
            denoiser: DenoiserConfig::default(),
            observer: ObserverConfig::default(),
            metrics: MetricStudyConfig::default(),
        }
    }
}

impl StudyConfig {
    /// Reads a TOML file (or the defaults when `path` is `None`) and applies
    /// dotted `key=value` overrides, e.g. `observer.n_repeats=4`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: StudyConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        if self.dose_fractions.is_empty() {
            return Err(Error::Config("dose_fractions is empty".into()));
        }
        for &d in &self.dose_fractions {
            DoseLevel::from_fraction(d).map_err(cfg_err)?;
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods is empty".into()));
        }
        let uses_external = self.methods.contains(&Method::External) || self.metrics.methods.contains(&Method::External);
        if uses_external && self.denoiser.external.is_none() {
            return Err(Error::Config("method `external` needs a [denoiser.external] section".into()));
        }
        self.geometry.validate().map_err(cfg_err)?;
        self.recon.validate().map_err(cfg_err)?;
        self.normalization.validate().map_err(cfg_err)?;
        self.denoiser.bilateral.validate().map_err(cfg_err)?;
        if !(self.denoiser.tv.lambda >= 0.0) {
            return Err(Error::Config("denoiser.tv.lambda must be non-negative".into()));
        }
        let o = &self.observer;
        if o.n_channels == 0 || o.roi_side == 0 || o.n_repeats == 0 || !(o.width_factor > 0.0) {
            return Err(Error::Config("observer parameters must be positive".into()));
        }
        if o.sa_offsets_deg.is_empty() {
            return Err(Error::Config("observer.sa_offsets_deg is empty".into()));
        }
        let k = self.n_train_pairs();
        let n_sa = self.n_water_scans * o.sa_offsets_deg.len();
        if k < 2 || self.n_sp_scans <= k || n_sa <= k {
            return Err(Error::Config(format!(
                "{} SP and {n_sa} SA ROIs per insert cannot supply {k} training pairs plus a test set",
                self.n_sp_scans
            )));
        }
        let m = &self.metrics;
        DoseLevel::from_fraction(m.reference_dose).map_err(cfg_err)?;
        DoseLevel::from_fraction(m.test_dose).map_err(cfg_err)?;
        if m.methods.is_empty() || !(m.data_range > 0.0) {
            return Err(Error::Config("metrics needs methods and a positive data_range".into()));
        }
        Ok(())
    }

    /// Training pairs per split: explicit, or the protocol's 100-of-200
    /// ratio applied to the configured scan count.
    pub fn n_train_pairs(&self) -> usize {
        self.observer
            .n_train_pairs
            .unwrap_or(self.n_sp_scans * PROTOCOL_TRAIN_PAIRS / PROTOCOL_SP_SCANS)
    }

    /// True when scan counts fall below the full protocol.
    pub fn is_desk_scale(&self) -> bool {
        self.n_sp_scans < PROTOCOL_SP_SCANS || self.n_water_scans < PROTOCOL_WATER_SCANS
    }

    /// SHA-256 of the canonical TOML form, excluding `output_dir`.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let (last, parents) = path.split_last().expect("non-empty");
    let mut cursor = table;
    for part in parents {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path {key:?} crosses a non-table value")))?;
    }
    cursor.insert(last.to_string(), parse_override_value(raw.trim()));
    Ok(())
}
