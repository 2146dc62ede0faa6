//! Conventional denoisers and the external-denoiser handshake.
//!
//! Denoisers act on images normalized to [0, 1] through a
//! [`NormalizationWindow`]; the tuned parameters are expressed on that scale.

mod bilateral;
mod external;
mod tv;

pub use bilateral::{bilateral, BilateralParams};
pub use external::{external_denoise, external_denoise_file, ExternalOutcome, ExternalParams, ExternalProvenance};
pub use tv::{rof_energy, tv_denoise, tv_denoise_detailed, tv_solve, TvOutcome, TvParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageGrid, Unit};

/// Affine HU window mapped onto [0, 1]; values outside are clipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationWindow {
    pub lo_hu: f64,
    pub hi_hu: f64,
}

impl Default for NormalizationWindow {
    fn default() -> Self {
        Self {
            lo_hu: -1000.0,
            hi_hu: 1000.0,
        }
    }
}

impl NormalizationWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo_hu < self.hi_hu) || !self.lo_hu.is_finite() || !self.hi_hu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "normalization window [{}, {}] is empty",
                self.lo_hu, self.hi_hu
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.hi_hu - self.lo_hu
    }
}

pub fn normalize(img: &ImageGrid, w: &NormalizationWindow) -> Result<ImageGrid> {
    w.validate()?;
    img.require_unit(Unit::Hu)?;
    let (lo, width) = (w.lo_hu, w.width());
    img.map(Unit::Normalized, |v| ((v - lo) / width).clamp(0.0, 1.0))
}

pub fn denormalize(img: &ImageGrid, w: &NormalizationWindow) -> Result<ImageGrid> {
    w.validate()?;
    img.require_unit(Unit::Normalized)?;
    let (lo, width) = (w.lo_hu, w.width());
    img.map(Unit::Hu, |v| lo + v * width)
}

/// A denoising method as named in configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain FBP, no denoising.
    Fbp,
    Bilateral,
    Tv,
    External,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Fbp => "fbp",
            Method::Bilateral => "bilateral",
            Method::Tv => "tv",
            Method::External => "external",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fbp" | "none" => Ok(Method::Fbp),
            "bilateral" => Ok(Method::Bilateral),
            "tv" => Ok(Method::Tv),
            "external" => Ok(Method::External),
            other => Err(Error::Config(format!("unknown denoising method {other:?}"))),
        }
    }
}

/// Parameters for every denoiser.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiserConfig {
    pub bilateral: BilateralParams,
    pub tv: TvParams,
    pub external: Option<ExternalParams>,
}

/// Applies `method` to a normalized image.
pub fn denoise_normalized(img: &ImageGrid, method: Method, cfg: &DenoiserConfig) -> Result<ImageGrid> {
    match method {
        Method::Fbp => {
            img.require_unit(Unit::Normalized)?;
            Ok(img.clone())
        }
        Method::Bilateral => bilateral(img, &cfg.bilateral),
        Method::Tv => tv_denoise(img, &cfg.tv),
        Method::External => {
            let params = cfg
                .external
                .as_ref()
                .ok_or_else(|| Error::Config("external denoiser selected but not configured".into()))?;
            Ok(external_denoise(img, params)?.image)
        }
    }
}

/// Normalize, denoise, denormalize: HU in, HU out.
pub fn denoise_hu(
    img: &ImageGrid,
    method: Method,
    cfg: &DenoiserConfig,
    window: &NormalizationWindow,
) -> Result<ImageGrid> {
    if method == Method::Fbp {
        img.require_unit(Unit::Hu)?;
        return Ok(img.clone());
    }
    let out = denoise_normalized(&normalize(img, window)?, method, cfg)?;
    denormalize(&out, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_mapping() {
        let w = NormalizationWindow::default();
        let img = ImageGrid::new(2, 1.0, Unit::Hu, vec![0.0, -1000.0, 1000.0, -3000.0]).unwrap();
        let n = normalize(&img, &w).unwrap();
        assert_eq!(n.unit(), Unit::Normalized);
        assert_eq!(n.values(), &[0.5, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn window_roundtrip_in_range() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let w = NormalizationWindow {
            lo_hu: -160.0,
            hi_hu: 240.0,
        };
        let vals: Vec<f64> = (0..256).map(|_| rng.random_range(-160.0..240.0)).collect();
        let img = ImageGrid::new(16, 1.0, Unit::Hu, vals).unwrap();
        let back = denormalize(&normalize(&img, &w).unwrap(), &w).unwrap();
        for (a, b) in img.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn unit_checks() {
        let w = NormalizationWindow::default();
        let hu = ImageGrid::filled(4, 1.0, Unit::Hu, 0.0).unwrap();
        assert!(matches!(denormalize(&hu, &w), Err(Error::UnitMismatch { .. })));
        assert!(bilateral(&hu, &BilateralParams::default()).is_err());
        assert!(tv_denoise(&hu, &TvParams::default()).is_err());
        let bad = NormalizationWindow { lo_hu: 5.0, hi_hu: 5.0 };
        assert!(normalize(&hu, &bad).is_err());
    }

    #[test]
    fn method_names_roundtrip() {
        for m in [Method::Fbp, Method::Bilateral, Method::Tv, Method::External] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bm3d".parse::<Method>().is_err());
    }
}
