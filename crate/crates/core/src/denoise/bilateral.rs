use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageGrid, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilateralParams {
    /// Side of the square filtering window (odd).
    pub window: usize,
    /// Gaussian range standard deviation, in normalized intensity.
    pub sigma_color: f64,
    /// Gaussian spatial standard deviation, in pixels.
    pub sigma_spatial: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            window: 7,
            sigma_color: 0.02,
            sigma_spatial: 5.0,
        }
    }
}

impl BilateralParams {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "bilateral window must be odd and positive, got {}",
                self.window
            )));
        }
        if !(self.sigma_color > 0.0) || !(self.sigma_spatial > 0.0) {
            return Err(Error::InvalidParameter("bilateral sigmas must be positive".into()));
        }
        Ok(())
    }
}

/// Edge-preserving bilateral filter. Neighbors outside the image are
/// dropped from both sums.
pub fn bilateral(img: &ImageGrid, params: &BilateralParams) -> Result<ImageGrid> {
    img.require_unit(Unit::Normalized)?;
    params.validate()?;
    let n = img.n();
    let r = (params.window / 2) as isize;
    let side = params.window;
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| {
            (-r..=r).map(move |dx| {
                let d2 = (dx * dx + dy * dy) as f64;
                (-d2 / (2.0 * params.sigma_spatial * params.sigma_spatial)).exp()
            })
        })
        .collect();
    let range_scale = -1.0 / (2.0 * params.sigma_color * params.sigma_color);
    let src = img.values();

    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(row, out_row)| {
        for (col, o) in out_row.iter_mut().enumerate() {
            let center = src[row * n + col];
            let mut num = 0.0;
            let mut den = 0.0;
            for dy in -r..=r {
                let y = row as isize + dy;
                if y < 0 || y >= n as isize {
                    continue;
                }
                let wrow = &spatial[((dy + r) as usize) * side..];
                for dx in -r..=r {
                    let x = col as isize + dx;
                    if x < 0 || x >= n as isize {
                        continue;
                    }
                    let v = src[y as usize * n + x as usize];
                    let diff = v - center;
                    let w = wrow[(dx + r) as usize] * (diff * diff * range_scale).exp();
                    num += w * v;
                    den += w;
                }
            }
            *o = num / den;
        }
    });
    img.with_values(Unit::Normalized, out)
}
