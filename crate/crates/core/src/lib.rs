//! Low-contrast detectability simulation for CT denoisers.
//!
//! The pipeline runs phantom → fan-beam sinogram with Poisson noise → FBP →
//! optional denoising → task-agnostic metrics (PSNR, SSIM) and a
//! Laguerre-Gauss channelized Hotelling observer (AUC).
//!
//! - [`phantom`]: analytic CCT189-style and uniform water phantoms
//! - [`scanner`]: exact fan-beam line integrals and Poisson noise
//! - [`recon`]: flat-detector fan-beam FBP
//! - [`denoise`]: bilateral, TV (ROF, primal-dual) and an external-command handshake
//! - [`metrics`]: PSNR, SSIM and table aggregation
//! - [`observer`]: LG channels, CHO training/scoring and AUC estimation
//! - [`study`]: dose-sweep LCD and paired-metric studies with CSV/plot reports

pub mod denoise;
pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod observer;
pub mod phantom;
pub mod recon;
pub mod scanner;
pub mod seed;
pub mod study;

pub use error::{Error, Result};
pub use image::{ImageGrid, Unit};
pub use phantom::{build_cct189, build_uniform_water, hu_to_mu, mu_to_hu, DiskSpec, PhantomSpec};
pub use recon::{fbp_fan, ramp_filter_row, Apodization, ReconParams};
pub use scanner::{apply_poisson_noise, forward_project, DoseLevel, FanBeamGeometry, Sinogram, FLUX_NORMAL};
pub use denoise::{DenoiserConfig, Method, NormalizationWindow};
pub use metrics::{psnr, ssim, MetricReport, SsimParams};
pub use study::{run_lcd_study, run_metric_study, LcdResult, StudyConfig};
