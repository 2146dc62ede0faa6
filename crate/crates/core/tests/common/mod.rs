//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use lcdsim_core::denoise::rof_energy;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn grad(u: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                gx[i] = u[i + 1] - u[i];
            }
            if y + 1 < h {
                gy[i] = u[i + w] - u[i];
            }
        }
    }
    (gx, gy)
}

pub fn div(px: &[f64], py: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut d = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut v = 0.0;
            if x + 1 < w {
                v += px[i];
            }
            if x > 0 {
                v -= px[i - 1];
            }
            if y + 1 < h {
                v += py[i];
            }
            if y > 0 {
                v -= py[i - w];
            }
            d[i] = v;
        }
    }
    d
}

/// Dual projection algorithm for ROF (a different method from the
/// library's primal-dual solver), run to convergence.
pub fn rof_dual_projection(f: &[f64], w: usize, h: usize, lambda: f64) -> Vec<f64> {
    let tau = 0.124;
    let (mut px, mut py) = (vec![0.0; w * h], vec![0.0; w * h]);
    for _ in 0..200_000 {
        let d = div(&px, &py, w, h);
        let arg: Vec<f64> = d.iter().zip(f).map(|(dv, fv)| dv - fv / lambda).collect();
        let (gx, gy) = grad(&arg, w, h);
        for i in 0..w * h {
            let norm = gx[i].hypot(gy[i]);
            px[i] = (px[i] + tau * gx[i]) / (1.0 + tau * norm);
            py[i] = (py[i] + tau * gy[i]) / (1.0 + tau * norm);
        }
    }
    let d = div(&px, &py, w, h);
    f.iter().zip(&d).map(|(fv, dv)| fv - lambda * dv).collect()
}

/// Compass search on the energy: a derivative-free brute-force descent.
pub fn compass_search(f: &[f64], lambda: f64) -> f64 {
    let mut u = f.to_vec();
    let mut best = rof_energy(&u, f, 3, 3, lambda);
    let mut step = 0.5;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..9 {
            for s in [step, -step] {
                u[i] += s;
                let e = rof_energy(&u, f, 3, 3, lambda);
                if e < best {
                    best = e;
                    improved = true;
                } else {
                    u[i] -= s;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

pub fn gaussian_samples(rng: &mut ChaCha8Rng, n: usize, mean: &[f64]) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| mean.iter().map(|m| { let z: f64 = StandardNormal.sample(rng); m + z }).collect::<Vec<f64>>())
        .collect()
}

pub fn brute_force_auc(sp: &[f64], sa: &[f64]) -> f64 {
    let mut half = 0u64;
    for a in sp {
        for b in sa {
            half += if a > b {
                2
            } else if a == b {
                1
            } else {
                0
            };
        }
    }
    half as f64 / (2 * sp.len() * sa.len()) as f64
}

pub fn binormal_auc(dprime: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(dprime / 2f64.sqrt())
}
