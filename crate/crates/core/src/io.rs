//! Raw array files: flat little-endian `f32` data plus a plain-text sidecar.
//!
//! `scan.f32` holds `rows * cols` values in row-major order and
//! `scan.hdr` holds one `key = value` pair per line. Lines starting with
//! `#` are comments. Keys written by this crate:
//!
//! | key              | meaning                                        |
//! |------------------|------------------------------------------------|
//! | `format`         | always `lcdsim-raw-1`                          |
//! | `kind`           | `image` or `sinogram`                          |
//! | `rows`, `cols`   | array dimensions                               |
//! | `dtype`          | always `f32le`                                 |
//! | `unit`           | `HU`, `mm-1`, `normalized` or `line-integral`  |
//! | `pixel_mm`       | image pixel pitch (images only)                |
//! | `src_to_iso_mm`, `src_to_det_mm`, `n_views`, `n_channels`, `det_pitch_mm` | sinogram geometry |
//! | `seed`           | noise seed, when the data is a noisy realization |
//! | `dose_fraction`  | dose as a fraction of normal, for noisy data   |
//!
//! Any other key is carried through as free-form provenance.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{ImageGrid, Unit};
use crate::scanner::{FanBeamGeometry, Sinogram};

pub const FORMAT_TAG: &str = "lcdsim-raw-1";
pub const SINOGRAM_UNIT: &str = "line-integral";

/// Ordered `key = value` sidecar contents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut header = Header::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                reason: format!("expected `key = value`, got {line:?}"),
            })?;
            header.set(k.trim(), v.trim());
        }
        Ok(header)
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    fn require<T: std::str::FromStr>(&self, key: &str, path: &Path) -> Result<T> {
        let raw = self.get(key).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            reason: format!("missing key `{key}`"),
        })?;
        raw.parse().map_err(|_| Error::Format {
            path: path.to_path_buf(),
            reason: format!("bad value {raw:?} for `{key}`"),
        })
    }
}

/// Sidecar path for a data file: `x.f32` -> `x.hdr`.
pub fn header_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("hdr")
}

/// A raw array as stored on disk.
#[derive(Debug, Clone)]
pub struct RawArray {
    pub rows: usize,
    pub cols: usize,
    pub header: Header,
    pub data: Vec<f32>,
}

pub fn encode_f32(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values
        .into_iter()
        .flat_map(|v| (v as f32).to_le_bytes())
        .collect()
}

pub fn decode_f32(bytes: &[u8], path: &Path) -> Result<Vec<f32>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("{} bytes is not a whole number of f32 values", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn write_raw(data_path: &Path, header: &Header, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if let Some(parent) = data_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(data_path, encode_f32(values))?;
    fs::write(header_path(data_path), header.render())?;
    Ok(())
}

/// Reads a data file and its sidecar. Dimensions in the header must match
/// the data length.
pub fn read_raw(data_path: &Path) -> Result<RawArray> {
    let hdr_path = header_path(data_path);
    let header = Header::parse(&fs::read_to_string(&hdr_path)?, &hdr_path)?;
    read_raw_with_header(data_path, header)
}

/// Reads a data file, interpreting it with an already-known header.
pub fn read_raw_with_header(data_path: &Path, header: Header) -> Result<RawArray> {
    let hdr_path = header_path(data_path);
    if let Some(tag) = header.get("format") {
        if tag != FORMAT_TAG {
            return Err(Error::Format {
                path: hdr_path,
                reason: format!("unsupported format tag {tag:?}"),
            });
        }
    }
    if let Some(dtype) = header.get("dtype") {
        if dtype != "f32le" {
            return Err(Error::Format {
                path: hdr_path,
                reason: format!("unsupported dtype {dtype:?}"),
            });
        }
    }
    let rows: usize = header.require("rows", &hdr_path)?;
    let cols: usize = header.require("cols", &hdr_path)?;
    let data = decode_f32(&fs::read(data_path)?, data_path)?;
    if data.len() != rows * cols {
        return Err(Error::ShapeMismatch {
            expected: format!("{rows}x{cols}"),
            actual: format!("{} values in {}", data.len(), data_path.display()),
        });
    }
    Ok(RawArray {
        rows,
        cols,
        header,
        data,
    })
}

pub fn image_header(img: &ImageGrid) -> Header {
    let mut h = Header::default();
    h.set("format", FORMAT_TAG)
        .set("kind", "image")
        .set("rows", img.n())
        .set("cols", img.n())
        .set("dtype", "f32le")
        .set("unit", img.unit())
        .set("pixel_mm", img.pixel_mm());
    h
}

/// Writes an image; `extra` entries are appended as provenance.
pub fn write_image(path: &Path, img: &ImageGrid, extra: &Header) -> Result<()> {
    let mut h = image_header(img);
    for (k, v) in extra.entries() {
        h.set(k, v);
    }
    write_raw(path, &h, img.values().iter().copied())
}

pub fn image_from_raw(raw: RawArray, path: &Path) -> Result<(ImageGrid, Header)> {
    let hdr_path = header_path(path);
    if raw.rows != raw.cols {
        return Err(Error::ShapeMismatch {
            expected: "square image".into(),
            actual: format!("{}x{}", raw.rows, raw.cols),
        });
    }
    let unit: Unit = raw
        .header
        .get("unit")
        .ok_or_else(|| Error::Format {
            path: hdr_path.clone(),
            reason: "missing key `unit`".into(),
        })?
        .parse()?;
    let pixel_mm: f64 = raw.header.require("pixel_mm", &hdr_path)?;
    let img = ImageGrid::new(
        raw.rows,
        pixel_mm,
        unit,
        raw.data.iter().map(|&v| v as f64).collect(),
    )?;
    Ok((img, raw.header))
}

pub fn read_image(path: &Path) -> Result<(ImageGrid, Header)> {
    let raw = read_raw(path)?;
    image_from_raw(raw, path)
}

pub fn write_sinogram(path: &Path, sino: &Sinogram, extra: &Header) -> Result<()> {
    let g = sino.geometry();
    let mut h = Header::default();
    h.set("format", FORMAT_TAG)
        .set("kind", "sinogram")
        .set("rows", g.n_views)
        .set("cols", g.n_channels)
        .set("dtype", "f32le")
        .set("unit", SINOGRAM_UNIT)
        .set("src_to_iso_mm", g.src_to_iso_mm)
        .set("src_to_det_mm", g.src_to_det_mm)
        .set("n_views", g.n_views)
        .set("n_channels", g.n_channels)
        .set("det_pitch_mm", g.det_pitch_mm);
    for (k, v) in extra.entries() {
        h.set(k, v);
    }
    write_raw(path, &h, sino.data().iter().copied())
}

pub fn read_sinogram(path: &Path) -> Result<(Sinogram, Header)> {
    let raw = read_raw(path)?;
    let hdr_path = header_path(path);
    let h = &raw.header;
    let geometry = FanBeamGeometry {
        src_to_iso_mm: h.require("src_to_iso_mm", &hdr_path)?,
        src_to_det_mm: h.require("src_to_det_mm", &hdr_path)?,
        n_views: h.require("n_views", &hdr_path)?,
        n_channels: h.require("n_channels", &hdr_path)?,
        det_pitch_mm: h.require("det_pitch_mm", &hdr_path)?,
    };
    let sino = Sinogram::new(geometry, raw.data.iter().map(|&v| v as f64).collect())?;
    Ok((sino, raw.header))
}
