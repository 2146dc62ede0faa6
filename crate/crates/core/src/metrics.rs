//! PSNR, SSIM and per-method aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageGrid;

fn check_pair(reference: &ImageGrid, test: &ImageGrid) -> Result<()> {
    reference.require_same_shape(test)?;
    test.require_unit(reference.unit())
}

/// Peak signal-to-noise ratio in dB. Identical images give `f64::INFINITY`.
pub fn psnr(reference: &ImageGrid, test: &ImageGrid, data_range: f64) -> Result<f64> {
    check_pair(reference, test)?;
    if !(data_range > 0.0) {
        return Err(Error::InvalidParameter(format!("data_range must be positive, got {data_range}")));
    }
    let mse = reference
        .values()
        .iter()
        .zip(test.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.values().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (data_range * data_range / mse).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 1.0,
        }
    }
}

/// Valid-mode separable filtering of an `n × n` image with a 1-D kernel.
fn filter_valid(values: &[f64], n: usize, kernel: &[f64]) -> Vec<f64> {
    let w = kernel.len();
    let m = n + 1 - w;
    let mut horiz = vec![0.0; n * m];
    for row in 0..n {
        let src = &values[row * n..(row + 1) * n];
        for col in 0..m {
            horiz[row * m + col] = kernel.iter().zip(&src[col..col + w]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; m * m];
    for row in 0..m {
        for col in 0..m {
            out[row * m + col] = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * horiz[(row + k) * m + col])
                .sum();
        }
    }
    out
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Mean structural similarity over all valid window positions, with
/// Gaussian-weighted local statistics.
pub fn ssim(reference: &ImageGrid, test: &ImageGrid, params: &SsimParams) -> Result<f64> {
    check_pair(reference, test)?;
    let n = reference.n();
    if params.window == 0 || params.window > n {
        return Err(Error::InvalidParameter(format!(
            "SSIM window {} does not fit a {n}x{n} image",
            params.window
        )));
    }
    if !(params.sigma > 0.0 && params.data_range > 0.0) {
        return Err(Error::InvalidParameter("SSIM sigma and data_range must be positive".into()));
    }
    let kernel = gaussian_kernel(params.window, params.sigma);
    let x = reference.values();
    let y = test.values();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mx = filter_valid(x, n, &kernel);
    let my = filter_valid(y, n, &kernel);
    let sxx = filter_valid(&xx, n, &kernel);
    let syy = filter_valid(&yy, n, &kernel);
    let sxy = filter_valid(&xy, n, &kernel);

    let c1 = (params.k1 * params.data_range).powi(2);
    let c2 = (params.k2 * params.data_range).powi(2);
    let total: f64 = (0..mx.len())
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mx.len() as f64)
}

/// Sample mean and standard deviation (n − 1 denominator).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Also keeps all-infinite PSNR columns well defined.
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// `"35.2 (±2.5)"`.
pub fn table_cell(mean: f64, std: f64, decimals: usize) -> String {
    format!("{mean:.decimals$} (±{std:.decimals$})")
}

/// Per-slice metrics for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodMetrics {
    pub method: String,
    pub psnr: Vec<f64>,
    pub ssim: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub method: String,
    pub n_slices: usize,
    pub psnr_mean: f64,
    pub psnr_std: f64,
    pub ssim_mean: f64,
    pub ssim_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub per_slice: Vec<MethodMetrics>,
    pub rows: Vec<MetricSummary>,
}

pub const METRIC_CSV_HEADER: &str = "method,n_slices,psnr_mean,psnr_std,ssim_mean,ssim_std";

impl MetricReport {
    pub fn row(&self, method: &str) -> Option<&MetricSummary> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// CSV body, one row per method, in input order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRIC_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6}\n",
                r.method, r.n_slices, r.psnr_mean, r.psnr_std, r.ssim_mean, r.ssim_std
            ));
        }
        out
    }

    /// Display table: `method, PSNR (std), SSIM (std)` with `mean (±std)` cells.
    pub fn to_table(&self) -> String {
        let mut out = String::from("method,PSNR (std),SSIM (std)\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                r.method,
                table_cell(r.psnr_mean, r.psnr_std, 1),
                table_cell(r.ssim_mean, r.ssim_std, 2)
            ));
        }
        out
    }
}

/// Mean ± sample std per method. Every method needs at least two slices.
pub fn aggregate(per_method: Vec<MethodMetrics>) -> Result<MetricReport> {
    if per_method.is_empty() {
        return Err(Error::Empty("no methods to aggregate".into()));
    }
    let mut rows = Vec::with_capacity(per_method.len());
    for m in &per_method {
        if m.psnr.len() != m.ssim.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} SSIM values", m.psnr.len()),
                actual: format!("{}", m.ssim.len()),
            });
        }
        if m.psnr.len() < 2 {
            return Err(Error::InsufficientSamples(format!(
                "method {} has {} slices; at least 2 are needed",
                m.method,
                m.psnr.len()
            )));
        }
        let (psnr_mean, psnr_std) = mean_std(&m.psnr);
        let (ssim_mean, ssim_std) = mean_std(&m.ssim);
        rows.push(MetricSummary {
            method: m.method.clone(),
            n_slices: m.psnr.len(),
            psnr_mean,
            psnr_std,
            ssim_mean,
            ssim_std,
        });
    }
    Ok(MetricReport { per_slice: per_method, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Unit;

    fn img(vals: Vec<f64>) -> ImageGrid {
        let n = (vals.len() as f64).sqrt() as usize;
        ImageGrid::new(n, 1.0, Unit::Normalized, vals).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let base: Vec<f64> = (0..256).map(|i| (i % 13) as f64 / 20.0).collect();
        let r = img(base.clone());
        assert_eq!(psnr(&r, &r, 1.0).unwrap(), f64::INFINITY);
        let t = img(base.iter().map(|v| v + 0.1).collect());
        assert!((psnr(&r, &t, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let t = img(base.iter().map(|v| v + 0.05).collect());
        assert!((psnr(&r, &t, 1.0).unwrap() - 26.0206).abs() < 1e-4);
    }

    #[test]
    fn ssim_identity_and_constants() {
        let base: Vec<f64> = (0..400).map(|i| ((i * 31) % 17) as f64 / 17.0).collect();
        let r = img(base);
        assert!((ssim(&r, &r, &SsimParams::default()).unwrap() - 1.0).abs() < 1e-12);

        let (a, b) = (0.3, 0.7);
        let s = ssim(&img(vec![a; 400]), &img(vec![b; 400]), &SsimParams::default()).unwrap();
        let c1 = (0.01f64).powi(2);
        let expected = (2.0 * a * b + c1) / (a * a + b * b + c1);
        assert!((s - expected).abs() < 1e-9);
    }

    #[test]
    fn ssim_window_too_large() {
        let r = img(vec![0.0; 64]);
        assert!(ssim(&r, &r, &SsimParams::default()).is_err());
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let a = img(vec![0.0; 16]);
        let b = img(vec![0.0; 25]);
        assert!(psnr(&a, &b, 1.0).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let rep = aggregate(vec![
            MethodMetrics {
                method: "fbp".into(),
                psnr: vec![35.0, 36.0, 37.0],
                ssim: vec![0.8, 0.8, 0.8],
            },
        ])
        .unwrap();
        let row = rep.row("fbp").unwrap();
        assert_eq!(row.psnr_mean, 36.0);
        assert_eq!(row.psnr_std, 1.0);
        assert_eq!(row.ssim_std, 0.0);
        assert_eq!(table_cell(35.2, 2.5, 1), "35.2 (±2.5)");
        assert!(rep.to_csv().starts_with(METRIC_CSV_HEADER));

        let single = aggregate(vec![MethodMetrics {
            method: "x".into(),
            psnr: vec![1.0],
            ssim: vec![1.0],
        }]);
        assert!(matches!(single, Err(Error::InsufficientSamples(_))));
    }
}
