use lcdsim_core::denoise::{
    bilateral, denoise_hu, denormalize, normalize, rof_energy, tv_denoise, tv_solve, BilateralParams, DenoiserConfig,
    Method, NormalizationWindow, TvParams,
};
use lcdsim_core::{ImageGrid, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{compass_search, rof_dual_projection};

#[test]
fn tv_matches_brute_force_on_3x3() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let params = |lambda| TvParams {
        lambda,
        max_iters: 50_000,
        tol: 0.0,
    };
    for _ in 0..10 {
        let f: Vec<f64> = (0..9).map(|_| rng.random_range(0.0..1.0)).collect();
        let lambda = rng.random_range(0.02..0.3);
        let out = tv_solve(&f, 3, 3, &params(lambda)).unwrap();
        let oracle = rof_dual_projection(&f, 3, 3, lambda);
        let worst = out.values.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "max pixel difference {worst}");
        let e = rof_energy(&out.values, &f, 3, 3, lambda);
        assert!(e <= rof_energy(&oracle, &f, 3, 3, lambda) + 1e-9);
        assert!(e <= compass_search(&f, lambda) + 1e-12);
    }
}

#[test]
fn tv_energy_monotone_on_noisy_image() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f: Vec<f64> = (0..64 * 64)
        .map(|i| if (i % 64) < 32 { 0.3 } else { 0.7 } + rng.random_range(-0.1..0.1))
        .collect();
    let out = tv_solve(
        &f,
        64,
        64,
        &TvParams {
            lambda: 0.05,
            max_iters: 500,
            tol: 0.0,
        },
    )
    .unwrap();
    for pair in out.energies.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-10);
    }
    assert!(out.energies.last().unwrap() < &out.energies[0]);
}

#[test]
fn normalization_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w = NormalizationWindow::default();
    let img = ImageGrid::new(16, 1.0, Unit::Hu, (0..256).map(|_| rng.random_range(-999.0..999.0)).collect()).unwrap();
    let back = denormalize(&normalize(&img, &w).unwrap(), &w).unwrap();
    let worst = img.values().iter().zip(back.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6);
    let zero = ImageGrid::filled(2, 1.0, Unit::Hu, 0.0).unwrap();
    assert!(normalize(&zero, &w).unwrap().values().iter().all(|&v| v == 0.5));
}

#[test]
fn denoisers_are_deterministic_and_unit_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let img = ImageGrid::new(32, 1.0, Unit::Normalized, (0..1024).map(|_| rng.random_range(0.4..0.6)).collect()).unwrap();
    let p = BilateralParams::default();
    assert_eq!(bilateral(&img, &p).unwrap(), bilateral(&img, &p).unwrap());
    let t = TvParams::default();
    assert_eq!(tv_denoise(&img, &t).unwrap(), tv_denoise(&img, &t).unwrap());
    let hu = ImageGrid::filled(8, 1.0, Unit::Hu, 0.0).unwrap();
    assert!(bilateral(&hu, &p).is_err());
    assert!(tv_denoise(&hu, &t).is_err());
}

#[test]
fn hu_pipeline_smooths_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let img = ImageGrid::new(64, 0.5, Unit::Hu, (0..4096).map(|_| rng.random_range(-40.0..40.0)).collect()).unwrap();
    let std = |g: &ImageGrid| {
        let m = g.values().iter().sum::<f64>() / 4096.0;
        (g.values().iter().map(|v| (v - m).powi(2)).sum::<f64>() / 4095.0).sqrt()
    };
    let cfg = DenoiserConfig::default();
    let w = NormalizationWindow::default();
    for method in [Method::Bilateral, Method::Tv] {
        let out = denoise_hu(&img, method, &cfg, &w).unwrap();
        assert_eq!(out.unit(), Unit::Hu);
        assert!(std(&out) < std(&img), "{method}");
    }
    assert_eq!(denoise_hu(&img, Method::Fbp, &cfg, &w).unwrap(), img);
}
