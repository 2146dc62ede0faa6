use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ImageGrid, Unit};
use crate::io::{self, Header};
use crate::phantom::DiskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoiLabel {
    SignalPresent,
    SignalAbsent,
}

impl fmt::Display for RoiLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoiLabel::SignalPresent => "SP",
            RoiLabel::SignalAbsent => "SA",
        })
    }
}

impl std::str::FromStr for RoiLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SP" => Ok(RoiLabel::SignalPresent),
            "SA" => Ok(RoiLabel::SignalAbsent),
            other => Err(Error::InvalidParameter(format!("unknown ROI label {other:?}"))),
        }
    }
}

/// Where a batch of ROIs comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoiSource {
    pub label: RoiLabel,
    pub insert_index: usize,
    pub scan_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Roi {
    pub side: usize,
    /// Row-major `side × side` values, in the source image's unit.
    pub patch: Vec<f64>,
    pub label: RoiLabel,
    pub insert_index: usize,
    pub scan_id: u64,
    /// Anchor pixel (row, col) in the source image.
    pub center: (i64, i64),
}

/// Crops `side × side` patches anchored at the pixels nearest to each
/// center: rows `[r - side/2, r - side/2 + side)`, same for columns.
pub fn extract_rois(image: &ImageGrid, centers_mm: &[(f64, f64)], side: usize, source: RoiSource) -> Result<Vec<Roi>> {
    if side == 0 {
        return Err(Error::InvalidParameter("ROI side must be positive".into()));
    }
    let n = image.n() as i64;
    let half = (side / 2) as i64;
    centers_mm
        .iter()
        .map(|&(x, y)| {
            let (row, col) = image.nearest_pixel(x, y);
            let (r0, c0) = (row - half, col - half);
            if r0 < 0 || c0 < 0 || r0 + side as i64 > n || c0 + side as i64 > n {
                return Err(Error::RoiOutOfBounds {
                    row,
                    col,
                    side,
                    n: image.n(),
                });
            }
            let mut patch = Vec::with_capacity(side * side);
            for r in r0..r0 + side as i64 {
                let start = (r * n + c0) as usize;
                patch.extend_from_slice(&image.values()[start..start + side]);
            }
            Ok(Roi {
                side,
                patch,
                label: source.label,
                insert_index: source.insert_index,
                scan_id: source.scan_id,
                center: (row, col),
            })
        })
        .collect()
}

/// Points at the insert's distance from iso-center, rotated by each angular
/// offset around iso-center.
pub fn vicinity_centers(insert: &DiskSpec, offsets_deg: &[f64]) -> Vec<(f64, f64)> {
    let radius = insert.center_distance();
    let base = insert.center_y_mm.atan2(insert.center_x_mm);
    offsets_deg
        .iter()
        .map(|off| {
            let theta = base + off.to_radians();
            (radius * theta.cos(), radius * theta.sin())
        })
        .collect()
}

const MANIFEST: &str = "manifest.csv";

/// Writes each patch as `roi_NNNNN.f32` (+ sidecar) and a `manifest.csv`
/// with columns `file,label,insert,scan_id,center_row,center_col`.
pub fn write_roi_set(dir: &Path, rois: &[Roi]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::from("file,label,insert,scan_id,center_row,center_col\n");
    for (i, roi) in rois.iter().enumerate() {
        let file = format!("roi_{i:05}.f32");
        let mut h = Header::default();
        h.set("format", io::FORMAT_TAG)
            .set("kind", "roi")
            .set("rows", roi.side)
            .set("cols", roi.side)
            .set("dtype", "f32le")
            .set("unit", Unit::Hu);
        io::write_raw(&dir.join(&file), &h, roi.patch.iter().copied())?;
        manifest.push_str(&format!(
            "{file},{},{},{},{},{}\n",
            roi.label, roi.insert_index, roi.scan_id, roi.center.0, roi.center.1
        ));
    }
    fs::write(dir.join(MANIFEST), manifest)?;
    Ok(())
}

pub fn read_roi_set(dir: &Path) -> Result<Vec<Roi>> {
    let manifest_path = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path)?;
    let bad = |reason: String| Error::Format {
        path: manifest_path.clone(),
        reason,
    };
    let mut rois = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields, got {line:?}")));
        }
        let num = |s: &str| s.trim().parse::<i64>().map_err(|_| bad(format!("bad number {s:?}")));
        let raw = io::read_raw(&dir.join(fields[0]))?;
        if raw.rows != raw.cols {
            return Err(bad(format!("{} is not square", fields[0])));
        }
        rois.push(Roi {
            side: raw.rows,
            patch: raw.data.iter().map(|&v| v as f64).collect(),
            label: fields[1].parse()?,
            insert_index: num(fields[2])? as usize,
            scan_id: num(fields[3])? as u64,
            center: (num(fields[4])?, num(fields[5])?),
        });
    }
    Ok(rois)
}
