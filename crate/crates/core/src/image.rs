use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value unit carried by an [`ImageGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    /// Hounsfield units.
    #[serde(rename = "HU")]
    Hu,
    /// Linear attenuation coefficient in mm⁻¹.
    #[serde(rename = "mm-1")]
    Mu,
    /// Affinely windowed to [0, 1].
    #[serde(rename = "normalized")]
    Normalized,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Hu => "HU",
            Unit::Mu => "mm-1",
            Unit::Normalized => "normalized",
        })
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "HU" => Ok(Unit::Hu),
            "mm-1" => Ok(Unit::Mu),
            "normalized" => Ok(Unit::Normalized),
            other => Err(Error::InvalidParameter(format!("unknown unit tag {other:?}"))),
        }
    }
}

/// Square image on a centered grid, stored row-major.
///
/// Pixel `(row, col)` has its center at
/// `x = (col - (n-1)/2) * pixel_mm`, `y = (row - (n-1)/2) * pixel_mm`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    n: usize,
    pixel_mm: f64,
    unit: Unit,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(n: usize, pixel_mm: f64, unit: Unit, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("image side must be positive".into()));
        }
        if !(pixel_mm > 0.0 && pixel_mm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pixel size must be positive, got {pixel_mm}"
            )));
        }
        if values.len() != n * n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n}"),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            n,
            pixel_mm,
            unit,
            values,
        })
    }

    pub fn filled(n: usize, pixel_mm: f64, unit: Unit, value: f64) -> Result<Self> {
        Self::new(n, pixel_mm, unit, vec![value; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pixel_mm(&self) -> f64 {
        self.pixel_mm
    }

    pub fn fov_mm(&self) -> f64 {
        self.n as f64 * self.pixel_mm
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    /// Same grid, new values and unit. Values are re-validated.
    pub fn with_values(&self, unit: Unit, values: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.pixel_mm, unit, values)
    }

    pub fn map(&self, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(unit, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Physical coordinates (x, y) in mm of a pixel center.
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        let c = (self.n as f64 - 1.0) / 2.0;
        ((col as f64 - c) * self.pixel_mm, (row as f64 - c) * self.pixel_mm)
    }

    /// Nearest pixel (row, col) to a physical point; may lie outside the grid.
    /// Ties round up.
    pub fn nearest_pixel(&self, x_mm: f64, y_mm: f64) -> (i64, i64) {
        let c = (self.n as f64 - 1.0) / 2.0;
        let col = (x_mm / self.pixel_mm + c + 0.5).floor() as i64;
        let row = (y_mm / self.pixel_mm + c + 0.5).floor() as i64;
        (row, col)
    }

    pub fn require_unit(&self, unit: Unit) -> Result<()> {
        if self.unit != unit {
            return Err(Error::UnitMismatch {
                expected: unit.to_string(),
                actual: self.unit.to_string(),
            });
        }
        Ok(())
    }

    pub fn require_same_shape(&self, other: &ImageGrid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", self.n),
                actual: format!("{0}x{0}", other.n),
            });
        }
        Ok(())
    }

    /// Mean over pixels whose centers lie within `radius_mm` of `(x, y)`.
    pub fn disk_mean(&self, x_mm: f64, y_mm: f64, radius_mm: f64) -> Option<f64> {
        self.region_mean(|px, py| (px - x_mm).hypot(py - y_mm) <= radius_mm)
    }

    /// Mean over pixels whose centers lie in the annulus `r_in < r <= r_out` around `(x, y)`.
    pub fn annulus_mean(&self, x_mm: f64, y_mm: f64, r_in: f64, r_out: f64) -> Option<f64> {
        self.region_mean(|px, py| {
            let r = (px - x_mm).hypot(py - y_mm);
            r > r_in && r <= r_out
        })
    }

    fn region_mean(&self, inside: impl Fn(f64, f64) -> bool) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for row in 0..self.n {
            for col in 0..self.n {
                let (x, y) = self.pixel_center(row, col);
                if inside(x, y) {
                    sum += self.get(row, col);
                    count += 1;
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_bad_shape() {
        assert!(matches!(
            ImageGrid::new(2, 1.0, Unit::Hu, vec![0.0, 1.0, f64::NAN, 0.0]),
            Err(Error::NonFinite { index: 2 })
        ));
        assert!(matches!(
            ImageGrid::new(2, 1.0, Unit::Hu, vec![0.0; 3]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn nearest_pixel_roundtrips_centers() {
        let img = ImageGrid::filled(9, 0.5, Unit::Hu, 0.0).unwrap();
        for (r, c) in [(0, 0), (4, 4), (8, 3), (2, 7)] {
            let (x, y) = img.pixel_center(r, c);
            assert_eq!(img.nearest_pixel(x, y), (r as i64, c as i64));
        }
        // Even grid: the physical origin sits on a pixel corner and rounds up.
        let even = ImageGrid::filled(8, 1.0, Unit::Hu, 0.0).unwrap();
        assert_eq!(even.nearest_pixel(0.0, 0.0), (4, 4));
    }
}
