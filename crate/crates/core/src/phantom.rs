//! Analytic disk phantoms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageGrid, Unit};

/// Attenuation of water in mm⁻¹ for the monoenergetic model.
pub const MU_WATER: f64 = 0.02;

/// HU of air.
pub const AIR_HU: f64 = -1000.0;

/// μ = μ_water · (1 + HU/1000).
pub fn hu_to_mu(hu: f64, mu_water: f64) -> f64 {
    mu_water * (1.0 + hu / 1000.0)
}

/// Inverse of [`hu_to_mu`].
pub fn mu_to_hu(mu: f64, mu_water: f64) -> f64 {
    1000.0 * (mu / mu_water - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSpec {
    pub center_x_mm: f64,
    pub center_y_mm: f64,
    pub radius_mm: f64,
    /// HU relative to water.
    pub contrast_hu: f64,
}

impl DiskSpec {
    pub fn center_distance(&self) -> f64 {
        self.center_x_mm.hypot(self.center_y_mm)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.center_x_mm).hypot(y - self.center_y_mm) <= self.radius_mm
    }

    pub fn diameter_mm(&self) -> f64 {
        2.0 * self.radius_mm
    }
}

/// Layout of the CCT189-style phantom. The insert list pairs
/// (diameter mm, contrast HU); inserts are placed on a ring at the
/// listed angles, in the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub background_radius_mm: f64,
    pub insert_ring_radius_mm: f64,
    pub insert_angles_deg: Vec<f64>,
    pub insert_diameters_mm: Vec<f64>,
    pub insert_contrasts_hu: Vec<f64>,
    pub mu_water: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            background_radius_mm: 100.0,
            insert_ring_radius_mm: 50.0,
            insert_angles_deg: vec![45.0, 135.0, 225.0, 315.0],
            insert_diameters_mm: vec![3.0, 5.0, 7.0, 10.0],
            insert_contrasts_hu: vec![14.0, 7.0, 5.0, 3.0],
            mu_water: MU_WATER,
        }
    }
}

/// A water background disk in air plus non-overlapping contrast inserts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub background: DiskSpec,
    /// Ordered by radius ascending; index 0 is the smallest insert.
    pub inserts: Vec<DiskSpec>,
    pub mu_water: f64,
}

impl PhantomSpec {
    pub fn new(background: DiskSpec, mut inserts: Vec<DiskSpec>, mu_water: f64) -> Result<Self> {
        if !(mu_water > 0.0) {
            return Err(Error::InvalidParameter(format!("mu_water must be positive, got {mu_water}")));
        }
        for d in std::iter::once(&background).chain(&inserts) {
            if !(d.radius_mm > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "disk radius must be positive, got {}",
                    d.radius_mm
                )));
            }
        }
        for (i, d) in inserts.iter().enumerate() {
            let reach = (d.center_x_mm - background.center_x_mm)
                .hypot(d.center_y_mm - background.center_y_mm)
                + d.radius_mm;
            if reach >= background.radius_mm {
                return Err(Error::InvalidParameter(format!(
                    "insert {i} extends outside the background disk"
                )));
            }
            for (j, e) in inserts.iter().enumerate().skip(i + 1) {
                let gap = (d.center_x_mm - e.center_x_mm).hypot(d.center_y_mm - e.center_y_mm);
                if gap < d.radius_mm + e.radius_mm {
                    return Err(Error::InvalidParameter(format!("inserts {i} and {j} overlap")));
                }
            }
        }
        inserts.sort_by(|a, b| a.radius_mm.total_cmp(&b.radius_mm));
        Ok(Self {
            background,
            inserts,
            mu_water,
        })
    }

    /// Radius of the smallest origin-centered disk containing the phantom.
    pub fn support_radius(&self) -> f64 {
        self.background.center_distance() + self.background.radius_mm
    }

    /// Background attenuation and per-insert attenuation increments, in the
    /// order background, inserts...
    pub fn disk_attenuations(&self) -> Vec<(DiskSpec, f64)> {
        let bg_mu = hu_to_mu(self.background.contrast_hu, self.mu_water);
        std::iter::once((self.background, bg_mu))
            .chain(
                self.inserts
                    .iter()
                    .map(|d| (*d, self.mu_water * d.contrast_hu / 1000.0)),
            )
            .collect()
    }

    /// Ground-truth HU value at a point.
    pub fn hu_at(&self, x: f64, y: f64) -> f64 {
        if !self.background.contains(x, y) {
            return AIR_HU;
        }
        self.background.contrast_hu
            + self
                .inserts
                .iter()
                .filter(|d| d.contains(x, y))
                .map(|d| d.contrast_hu)
                .sum::<f64>()
    }

    /// Rasterizes the phantom in HU, averaging `supersample²` points per pixel.
    pub fn rasterize(&self, n: usize, pixel_mm: f64, supersample: usize) -> Result<ImageGrid> {
        let ss = supersample.max(1);
        let grid = ImageGrid::filled(n, pixel_mm, Unit::Hu, 0.0)?;
        let mut values = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                let (x0, y0) = grid.pixel_center(row, col);
                let mut acc = 0.0;
                for i in 0..ss {
                    for j in 0..ss {
                        let dx = ((j as f64 + 0.5) / ss as f64 - 0.5) * pixel_mm;
                        let dy = ((i as f64 + 0.5) / ss as f64 - 0.5) * pixel_mm;
                        acc += self.hu_at(x0 + dx, y0 + dy);
                    }
                }
                values.push(acc / (ss * ss) as f64);
            }
        }
        grid.with_values(Unit::Hu, values)
    }
}

fn water_background(cfg: &PhantomConfig) -> DiskSpec {
    DiskSpec {
        center_x_mm: 0.0,
        center_y_mm: 0.0,
        radius_mm: cfg.background_radius_mm,
        contrast_hu: 0.0,
    }
}

/// CCT189-style low-contrast phantom from a layout.
pub fn build_cct189_with(cfg: &PhantomConfig) -> Result<PhantomSpec> {
    let n = cfg.insert_diameters_mm.len();
    if cfg.insert_contrasts_hu.len() != n || cfg.insert_angles_deg.len() != n {
        return Err(Error::Config(
            "insert diameters, contrasts and angles must have equal lengths".into(),
        ));
    }
    let inserts = (0..n)
        .map(|i| {
            let theta = cfg.insert_angles_deg[i].to_radians();
            DiskSpec {
                center_x_mm: cfg.insert_ring_radius_mm * theta.cos(),
                center_y_mm: cfg.insert_ring_radius_mm * theta.sin(),
                radius_mm: cfg.insert_diameters_mm[i] / 2.0,
                contrast_hu: cfg.insert_contrasts_hu[i],
            }
        })
        .collect();
    PhantomSpec::new(water_background(cfg), inserts, cfg.mu_water)
}

/// Uniform water disk matching the CCT189 background.
pub fn build_uniform_water_with(cfg: &PhantomConfig) -> Result<PhantomSpec> {
    PhantomSpec::new(water_background(cfg), Vec::new(), cfg.mu_water)
}

/// CCT189-style phantom with the default layout: a 200 mm water disk with
/// 3/5/7/10 mm inserts at 14/7/5/3 HU on a 50 mm ring.
pub fn build_cct189() -> PhantomSpec {
    build_cct189_with(&PhantomConfig::default()).expect("default layout is valid")
}

pub fn build_uniform_water() -> PhantomSpec {
    build_uniform_water_with(&PhantomConfig::default()).expect("default layout is valid")
}
