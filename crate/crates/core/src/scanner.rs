//! Fan-beam acquisition: exact line integrals through disk phantoms and
//! dose-dependent Poisson noise.
//!
//! Geometry convention: at view `v` the source sits at angle
//! `β = 2π v / n_views` on a circle of radius `src_to_iso_mm`. With
//! `e_r = (cos β, sin β)` and `e_s = (-sin β, cos β)`, the source is at
//! `D·e_r` and detector cell `i` (a flat, centered array) is at
//! `-(SDD - D)·e_r + u_i·e_s` with `u_i = (i - (n-1)/2)·pitch`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::PhantomSpec;

/// Incident flux at normal dose, photons per detector element per view.
pub const FLUX_NORMAL: f64 = 0.85 * 2.25e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FanBeamGeometry {
    pub src_to_iso_mm: f64,
    pub src_to_det_mm: f64,
    pub n_views: usize,
    pub n_channels: usize,
    pub det_pitch_mm: f64,
}

impl Default for FanBeamGeometry {
    fn default() -> Self {
        Self {
            src_to_iso_mm: 500.0,
            src_to_det_mm: 1000.0,
            n_views: 984,
            n_channels: 880,
            det_pitch_mm: 1.0,
        }
    }
}

impl FanBeamGeometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if !(self.src_to_iso_mm > 0.0 && self.src_to_iso_mm.is_finite()) {
            return bad(format!("src_to_iso_mm must be positive, got {}", self.src_to_iso_mm));
        }
        if !(self.src_to_det_mm > self.src_to_iso_mm && self.src_to_det_mm.is_finite()) {
            return bad(format!(
                "src_to_det_mm ({}) must exceed src_to_iso_mm ({})",
                self.src_to_det_mm, self.src_to_iso_mm
            ));
        }
        if self.n_views == 0 || self.n_channels == 0 {
            return bad("view and channel counts must be positive".into());
        }
        if !(self.det_pitch_mm > 0.0 && self.det_pitch_mm.is_finite()) {
            return bad(format!("det_pitch_mm must be positive, got {}", self.det_pitch_mm));
        }
        Ok(())
    }

    pub fn view_angle(&self, view: usize) -> f64 {
        std::f64::consts::TAU * view as f64 / self.n_views as f64
    }

    pub fn view_spacing(&self) -> f64 {
        std::f64::consts::TAU / self.n_views as f64
    }

    /// Detector coordinate of a channel center, on the physical detector.
    pub fn channel_offset(&self, channel: usize) -> f64 {
        (channel as f64 - (self.n_channels as f64 - 1.0) / 2.0) * self.det_pitch_mm
    }

    /// Channel pitch rescaled to a virtual detector through the iso-center.
    pub fn iso_pitch(&self) -> f64 {
        self.det_pitch_mm * self.src_to_iso_mm / self.src_to_det_mm
    }

    /// Radius of the iso-centered disk seen by every view, i.e. the
    /// distance from iso of the outermost channel-center ray.
    pub fn covered_radius(&self) -> f64 {
        let u_max = self.channel_offset(self.n_channels - 1);
        let gamma = (u_max / self.src_to_det_mm).atan();
        self.src_to_iso_mm * gamma.sin()
    }

    /// Checks that every ray of the fan covers an object of the given
    /// support radius and that the object sits strictly between source and
    /// detector.
    pub fn require_covers(&self, support_radius: f64) -> Result<()> {
        self.validate()?;
        if support_radius >= self.src_to_iso_mm
            || support_radius >= self.src_to_det_mm - self.src_to_iso_mm
        {
            return Err(Error::InvalidGeometry(format!(
                "object of radius {support_radius} mm does not fit between source and detector"
            )));
        }
        let covered = self.covered_radius();
        if covered < support_radius {
            return Err(Error::InvalidGeometry(format!(
                "fan covers radius {covered:.2} mm but the object extends to {support_radius:.2} mm"
            )));
        }
        Ok(())
    }

    /// Source position and unit ray direction for (view, channel).
    pub fn ray(&self, view: usize, channel: usize) -> Ray {
        let beta = self.view_angle(view);
        let (sb, cb) = beta.sin_cos();
        let d = self.src_to_iso_mm;
        let u = self.channel_offset(channel);
        let origin = [d * cb, d * sb];
        // (-SDD)·e_r + u·e_s
        let dir = [-self.src_to_det_mm * cb - u * sb, -self.src_to_det_mm * sb + u * cb];
        let norm = dir[0].hypot(dir[1]);
        Ray {
            origin,
            dir: [dir[0] / norm, dir[1] / norm],
        }
    }
}

/// A ray with unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: [f64; 2],
    pub dir: [f64; 2],
}

/// Length of the intersection of a full line with a disk.
#[inline]
pub fn chord_length(ray: &Ray, center: [f64; 2], radius: f64) -> f64 {
    let rel = [center[0] - ray.origin[0], center[1] - ray.origin[1]];
    let dist = (rel[0] * ray.dir[1] - rel[1] * ray.dir[0]).abs();
    if dist >= radius {
        0.0
    } else {
        2.0 * ((radius - dist) * (radius + dist)).sqrt()
    }
}

/// Line integrals on a fan-beam grid, `n_views × n_channels`, row-major by view.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    geometry: FanBeamGeometry,
    data: Vec<f64>,
}

impl Sinogram {
    pub fn new(geometry: FanBeamGeometry, data: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        let expected = geometry.n_views * geometry.n_channels;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", geometry.n_views, geometry.n_channels),
                actual: format!("{} values", data.len()),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { geometry, data })
    }

    pub fn geometry(&self) -> &FanBeamGeometry {
        &self.geometry
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn view(&self, view: usize) -> &[f64] {
        let n = self.geometry.n_channels;
        &self.data[view * n..(view + 1) * n]
    }

    pub fn get(&self, view: usize, channel: usize) -> f64 {
        self.data[view * self.geometry.n_channels + channel]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.geometry, self.data.iter().map(|v| v * factor).collect())
    }

    /// Circularly shifts views: output view `v` is input view `v - shift`.
    /// For a full scan this rotates the object by `shift` view spacings.
    pub fn rotate_views(&self, shift: usize) -> Self {
        let nv = self.geometry.n_views;
        let mut data = Vec::with_capacity(self.data.len());
        for v in 0..nv {
            data.extend_from_slice(self.view((v + nv - shift % nv) % nv));
        }
        Self {
            geometry: self.geometry,
            data,
        }
    }
}

/// Exact fan-beam line integrals of a disk phantom.
pub fn forward_project(spec: &PhantomSpec, geom: &FanBeamGeometry) -> Result<Sinogram> {
    geom.require_covers(spec.support_radius())?;
    let disks = spec.disk_attenuations();
    let nc = geom.n_channels;
    let mut data = vec![0.0; geom.n_views * nc];
    data.par_chunks_mut(nc).enumerate().for_each(|(view, row)| {
        for (channel, out) in row.iter_mut().enumerate() {
            let ray = geom.ray(view, channel);
            *out = disks
                .iter()
                .map(|(d, mu)| mu * chord_length(&ray, [d.center_x_mm, d.center_y_mm], d.radius_mm))
                .sum();
        }
    });
    Sinogram::new(*geom, data)
}

/// A dose as a fraction of normal and the corresponding incident flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoseLevel {
    pub fraction: f64,
    pub flux_i0: f64,
}

impl DoseLevel {
    pub fn from_fraction(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "dose fraction must lie in (0, 1], got {fraction}"
            )));
        }
        Ok(Self {
            fraction,
            flux_i0: fraction * FLUX_NORMAL,
        })
    }
}

/// `-ln(max(counts, 1) / flux)`.
#[inline]
pub fn noisy_line_integral(counts: f64, flux_i0: f64) -> f64 {
    -(counts.max(1.0) / flux_i0).ln()
}

/// Poisson photon count for one detector entry. The draw depends only on
/// `(seed, index)`: each entry reads its own ChaCha stream.
pub fn poisson_counts(line_integral: f64, flux_i0: f64, seed: u64, index: u64) -> f64 {
    let mean = flux_i0 * (-line_integral).exp();
    if !(mean > 0.0) {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(&mut rng)
}

/// Replaces each line integral with a transmission measurement under
/// Poisson statistics at the given dose.
pub fn apply_poisson_noise(sino: &Sinogram, dose: DoseLevel, seed: u64) -> Result<Sinogram> {
    if !(dose.flux_i0 > 0.0 && dose.flux_i0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "flux must be positive, got {}",
            dose.flux_i0
        )));
    }
    let nc = sino.geometry.n_channels;
    let mut data = sino.data.clone();
    data.par_chunks_mut(nc).enumerate().for_each(|(view, row)| {
        for (channel, p) in row.iter_mut().enumerate() {
            let index = (view * nc + channel) as u64;
            let counts = poisson_counts(*p, dose.flux_i0, seed, index);
            *p = noisy_line_integral(counts, dose.flux_i0);
        }
    });
    Sinogram::new(sino.geometry, data)
}
