//! Flat-detector fan-beam filtered backprojection.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageGrid, Unit};
use crate::phantom::{mu_to_hu, MU_WATER};
use crate::scanner::Sinogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Apodization {
    Ramp,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconParams {
    pub n: usize,
    pub fov_mm: f64,
    pub apodization: Apodization,
    /// Filter cutoff as a fraction of the detector Nyquist frequency.
    pub cutoff_fraction: f64,
    pub mu_water: f64,
}

impl Default for ReconParams {
    fn default() -> Self {
        Self {
            n: 512,
            fov_mm: 260.0,
            apodization: Apodization::Hann,
            cutoff_fraction: 1.0,
            mu_water: MU_WATER,
        }
    }
}

impl ReconParams {
    pub fn pixel_mm(&self) -> f64 {
        self.fov_mm / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("recon size must be positive".into()));
        }
        if !(self.fov_mm > 0.0 && self.fov_mm.is_finite()) {
            return Err(Error::InvalidParameter(format!("fov_mm must be positive, got {}", self.fov_mm)));
        }
        if !(self.cutoff_fraction > 0.0 && self.cutoff_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff_fraction must lie in (0, 1], got {}",
                self.cutoff_fraction
            )));
        }
        if !(self.mu_water > 0.0) {
            return Err(Error::InvalidParameter("mu_water must be positive".into()));
        }
        Ok(())
    }
}

/// Sampled band-limited ramp kernel: `h[0] = 1/(4Δ²)`, zero at even lags,
/// `-1/(kπΔ)²` at odd lags.
pub fn ramp_kernel(lag: i64, pitch: f64) -> f64 {
    if lag == 0 {
        1.0 / (4.0 * pitch * pitch)
    } else if lag % 2 == 0 {
        0.0
    } else {
        let k = lag as f64 * std::f64::consts::PI * pitch;
        -1.0 / (k * k)
    }
}

/// A reusable ramp filter for rows of fixed length. Filtering is a linear
/// (zero-padded) convolution with [`ramp_kernel`] scaled by the pitch,
/// evaluated by FFT so the apodization window can act on the spectrum.
pub struct RampFilter {
    len: usize,
    pitch: f64,
    response: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RampFilter {
    pub fn new(len: usize, pitch: f64, apodization: Apodization, cutoff: f64) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidParameter("row length must be positive".into()));
        }
        if !(pitch > 0.0) {
            return Err(Error::InvalidParameter(format!("pitch must be positive, got {pitch}")));
        }
        if !(cutoff > 0.0 && cutoff <= 1.0) {
            return Err(Error::InvalidParameter(format!("cutoff must lie in (0, 1], got {cutoff}")));
        }
        let padded = (2 * len).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);

        let mut kernel: Vec<Complex<f64>> = (0..padded)
            .map(|i| {
                let lag = if i <= padded / 2 { i as i64 } else { i as i64 - padded as i64 };
                Complex::new(ramp_kernel(lag, pitch), 0.0)
            })
            .collect();
        forward.process(&mut kernel);

        let nyquist_cut = 0.5 * cutoff;
        let response = kernel
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let bin = i.min(padded - i) as f64 / padded as f64;
                let window = if bin > nyquist_cut + 1e-15 {
                    0.0
                } else {
                    match apodization {
                        Apodization::Ramp => 1.0,
                        Apodization::Hann => {
                            0.5 * (1.0 + (std::f64::consts::PI * bin / nyquist_cut).cos())
                        }
                    }
                };
                h.re * window
            })
            .collect();

        Ok(Self {
            len,
            pitch,
            response,
            forward,
            inverse,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Filters `row` into `out` using `scratch` of the padded length.
    pub fn apply_into(&self, row: &[f64], out: &mut [f64], scratch: &mut Vec<Complex<f64>>) {
        assert_eq!(row.len(), self.len);
        assert_eq!(out.len(), self.len);
        let padded = self.response.len();
        scratch.clear();
        scratch.extend(row.iter().map(|&v| Complex::new(v, 0.0)));
        scratch.resize(padded, Complex::new(0.0, 0.0));
        self.forward.process(scratch);
        for (z, h) in scratch.iter_mut().zip(&self.response) {
            *z *= *h;
        }
        self.inverse.process(scratch);
        let scale = self.pitch / padded as f64;
        for (o, z) in out.iter_mut().zip(scratch.iter()) {
            *o = z.re * scale;
        }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        let mut scratch = Vec::with_capacity(self.response.len());
        self.apply_into(row, &mut out, &mut scratch);
        out
    }
}

/// Ramp-filters one detector row.
pub fn ramp_filter_row(row: &[f64], det_pitch_mm: f64, apodization: Apodization, cutoff: f64) -> Result<Vec<f64>> {
    Ok(RampFilter::new(row.len(), det_pitch_mm, apodization, cutoff)?.apply(row))
}

/// Fan-beam FBP returning attenuation in mm⁻¹.
pub fn fbp_fan_mu(sino: &Sinogram, params: &ReconParams) -> Result<ImageGrid> {
    params.validate()?;
    let g = *sino.geometry();
    g.validate()?;
    let covered = g.covered_radius();
    if params.fov_mm / 2.0 > covered {
        return Err(Error::InvalidParameter(format!(
            "field of view radius {:.2} mm exceeds the fan coverage {:.2} mm",
            params.fov_mm / 2.0,
            covered
        )));
    }

    if g.n_channels < 2 {
        return Err(Error::InvalidGeometry("FBP needs at least two detector channels".into()));
    }
    let d = g.src_to_iso_mm;
    let nc = g.n_channels;
    let ds = g.iso_pitch();
    let center_ch = (nc as f64 - 1.0) / 2.0;

    // Cosine pre-weighting on the virtual detector, then ramp filtering.
    let filter = RampFilter::new(nc, ds, params.apodization, params.cutoff_fraction)?;
    let weights: Vec<f64> = (0..nc)
        .map(|i| {
            let s = (i as f64 - center_ch) * ds;
            d / (d * d + s * s).sqrt()
        })
        .collect();
    let mut filtered = vec![0.0; g.n_views * nc];
    filtered
        .par_chunks_mut(nc)
        .enumerate()
        .for_each_init(
            || (vec![0.0; nc], Vec::new()),
            |(weighted, scratch), (view, out)| {
                for ((w, p), c) in weighted.iter_mut().zip(sino.view(view)).zip(&weights) {
                    *w = p * c;
                }
                filter.apply_into(weighted, out, scratch);
            },
        );

    let trig: Vec<(f64, f64)> = (0..g.n_views).map(|v| g.view_angle(v).sin_cos()).collect();
    let n = params.n;
    let pixel = params.pixel_mm();
    let c = (n as f64 - 1.0) / 2.0;
    // ½ for the doubly covered full rotation.
    let scale = 0.5 * g.view_spacing();
    let inv_ds = 1.0 / ds;
    let last = (nc - 1) as f64;

    let xs: Vec<f64> = (0..n).map(|col| (col as f64 - c) * pixel).collect();
    let mut image = vec![0.0; n * n];
    image.par_chunks_mut(n).enumerate().for_each_init(
        || (vec![0.0; n], vec![0.0; n]),
        |(pos, weight), (row, out)| {
            let y = (row as f64 - c) * pixel;
            for (view, &(sb, cb)) in trig.iter().enumerate() {
                let q = &filtered[view * nc..(view + 1) * nc];
                // Geometry pass: branch-free so it vectorizes.
                for ((x, p), w) in xs.iter().zip(pos.iter_mut()).zip(weight.iter_mut()) {
                    let t = x * cb + y * sb;
                    let xi = y * cb - x * sb;
                    let mag = d / (d - t);
                    *p = xi * mag * inv_ds + center_ch;
                    *w = mag * mag;
                }
                // Interpolation pass.
                for ((acc, &p), &w) in out.iter_mut().zip(pos.iter()).zip(weight.iter()) {
                    if !(p >= 0.0 && p <= last) {
                        continue;
                    }
                    let i0 = (p as usize).min(nc - 2);
                    let frac = p - i0 as f64;
                    let (a, b) = (q[i0], q[i0 + 1]);
                    *acc += (a + frac * (b - a)) * w;
                }
            }
            for v in out.iter_mut() {
                *v *= scale;
            }
        },
    );

    ImageGrid::new(n, pixel, Unit::Mu, image)
}

/// Fan-beam FBP returning HU.
pub fn fbp_fan(sino: &Sinogram, params: &ReconParams) -> Result<ImageGrid> {
    let mu = fbp_fan_mu(sino, params)?;
    let mu_water = params.mu_water;
    mu.map(Unit::Hu, |v| mu_to_hu(v, mu_water))
}
