//! ROF total-variation denoising by a first-order primal-dual iteration.
//!
//! Solves `min_u ½‖u − f‖² + λ·TV(u)` with isotropic TV on forward
//! differences (zero flux across the border). With `K = ∇`, `‖K‖² ≤ 8`
//! and `τ = σ = 1/√8`:
//!
//! ```text
//! p ← Π_{|p|≤λ}(p + σ ∇ū)
//! u⁺ ← (u + τ div p + τ f) / (1 + τ)
//! ū ← 2u⁺ − u
//! ```
//!
//! The returned iterate is the lowest-energy one seen so far, so the
//! recorded energy sequence is non-increasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageGrid, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvParams {
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop when ‖u⁺ − u‖ / ‖u‖ falls below this.
    pub tol: f64,
}

impl Default for TvParams {
    fn default() -> Self {
        Self {
            lambda: 0.016,
            max_iters: 300,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TvOutcome {
    pub values: Vec<f64>,
    /// Energy of the reported iterate, index 0 being the input itself.
    pub energies: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Relative rise of the raw iterate's energy above the best energy that
/// counts as an increase.
const DIVERGENCE_SLACK: f64 = 1e-3;
/// Consecutive increases tolerated before giving up.
const DIVERGENCE_PATIENCE: usize = 10;

/// Isotropic ROF energy of `u` on a `width × height` grid.
pub fn rof_energy(u: &[f64], f: &[f64], width: usize, height: usize, lambda: f64) -> f64 {
    let mut data = 0.0;
    let mut tv = 0.0;
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let d = u[i] - f[i];
            data += d * d;
            let gx = if x + 1 < width { u[i + 1] - u[i] } else { 0.0 };
            let gy = if y + 1 < height { u[i + width] - u[i] } else { 0.0 };
            tv += (gx * gx + gy * gy).sqrt();
        }
    }
    0.5 * data + lambda * tv
}

/// Solves ROF on a rectangular grid.
pub fn tv_solve(f: &[f64], width: usize, height: usize, params: &TvParams) -> Result<TvOutcome> {
    if f.len() != width * height || f.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: format!("{width}x{height}"),
            actual: format!("{} values", f.len()),
        });
    }
    if !(params.lambda >= 0.0 && params.lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "TV lambda must be non-negative, got {}",
            params.lambda
        )));
    }
    if !(params.tol >= 0.0) {
        return Err(Error::InvalidParameter("TV tol must be non-negative".into()));
    }
    let lambda = params.lambda;
    let start = rof_energy(f, f, width, height, lambda);
    if lambda == 0.0 {
        return Ok(TvOutcome {
            values: f.to_vec(),
            energies: vec![start],
            iterations: 0,
            converged: true,
        });
    }

    let step = 1.0 / 8f64.sqrt();
    let (tau, sigma) = (step, step);
    let n = f.len();
    let mut u = f.to_vec();
    let mut u_bar = u.clone();
    let mut u_next = vec![0.0; n];
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];

    let mut best = u.clone();
    let mut best_energy = start;
    let mut energies = vec![start];
    let mut rising = 0usize;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=params.max_iters {
        iterations = it;
        // Dual ascent and projection onto the λ-ball.
        for y in 0..height {
            for x in 0..width {
                let i = y * width + x;
                let gx = if x + 1 < width { u_bar[i + 1] - u_bar[i] } else { 0.0 };
                let gy = if y + 1 < height { u_bar[i + width] - u_bar[i] } else { 0.0 };
                let qx = px[i] + sigma * gx;
                let qy = py[i] + sigma * gy;
                let norm = (qx * qx + qy * qy).sqrt();
                let shrink = if norm > lambda { lambda / norm } else { 1.0 };
                px[i] = qx * shrink;
                py[i] = qy * shrink;
            }
        }
        // Primal descent: prox of the quadratic data term.
        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for y in 0..height {
            for x in 0..width {
                let i = y * width + x;
                let dx = (if x + 1 < width { px[i] } else { 0.0 }) - (if x > 0 { px[i - 1] } else { 0.0 });
                let dy = (if y + 1 < height { py[i] } else { 0.0 })
                    - (if y > 0 { py[i - width] } else { 0.0 });
                let v = (u[i] + tau * (dx + dy) + tau * f[i]) / (1.0 + tau);
                let d = v - u[i];
                diff2 += d * d;
                norm2 += u[i] * u[i];
                u_next[i] = v;
            }
        }
        for i in 0..n {
            u_bar[i] = 2.0 * u_next[i] - u[i];
        }
        std::mem::swap(&mut u, &mut u_next);

        let energy = rof_energy(&u, f, width, height, lambda);
        if !energy.is_finite() {
            return Err(Error::Diverged { iteration: it });
        }
        if energy < best_energy {
            best_energy = energy;
            best.copy_from_slice(&u);
        }
        if energy > best_energy * (1.0 + DIVERGENCE_SLACK) + f64::MIN_POSITIVE {
            rising += 1;
            if rising > DIVERGENCE_PATIENCE {
                return Err(Error::Diverged { iteration: it });
            }
        } else {
            rising = 0;
        }
        energies.push(best_energy);

        if diff2.sqrt() <= params.tol * norm2.sqrt().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    Ok(TvOutcome {
        values: best,
        energies,
        iterations,
        converged,
    })
}

pub fn tv_denoise_detailed(img: &ImageGrid, params: &TvParams) -> Result<(ImageGrid, TvOutcome)> {
    img.require_unit(Unit::Normalized)?;
    let outcome = tv_solve(img.values(), img.n(), img.n(), params)?;
    let out = img.with_values(Unit::Normalized, outcome.values.clone())?;
    Ok((out, outcome))
}

pub fn tv_denoise(img: &ImageGrid, params: &TvParams) -> Result<ImageGrid> {
    Ok(tv_denoise_detailed(img, params)?.0)
}
