use std::path::Path;
use std::process::{Command, Output};

use lcdsim_core::io::{read_image, read_sinogram};
use lcdsim_core::Unit;

/// Small grid and few views, so each command finishes quickly.
const TINY: &[&str] = &[
    "geometry.n_views=60",
    "recon.n=64",
    "recon.fov_mm=130.0",
    "observer.roi_side=16",
    "methods=[\"fbp\"]",
];

fn lcdsim(extra_sets: &[&str], args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lcdsim"));
    cmd.env("RUST_LOG", "warn");
    for s in TINY.iter().chain(extra_sets) {
        cmd.args(["--set", s]);
    }
    cmd.args(args).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn phantom_simulate_recon_denoise_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    ok(&lcdsim(&[], &["phantom", "--supersample", "2", "--out", p(&d.join("ph.f32"))]));
    let (ph, h) = read_image(&d.join("ph.f32")).unwrap();
    assert_eq!((ph.n(), ph.unit()), (64, Unit::Hu));
    assert_eq!(h.get("phantom"), Some("cct189"));
    assert!(h.get("config_sha256").is_some());

    ok(&lcdsim(&[], &["simulate", "--dose", "0.5", "--seed", "9", "--out", p(&d.join("s.f32"))]));
    let (sino, h) = read_sinogram(&d.join("s.f32")).unwrap();
    assert_eq!(sino.geometry().n_views, 60);
    assert_eq!(h.get("seed"), Some("9"));
    assert_eq!(h.get("dose_fraction"), Some("0.5"));

    ok(&lcdsim(&[], &["recon", "--in", p(&d.join("s.f32")), "--out", p(&d.join("r.f32"))]));
    let (recon, h) = read_image(&d.join("r.f32")).unwrap();
    assert_eq!(recon.n(), 64);
    assert_eq!(h.get("seed"), Some("9"), "noise provenance carried into the image");

    ok(&lcdsim(&[], &["denoise", "--method", "bilateral", "--in", p(&d.join("r.f32")), "--out", p(&d.join("b.f32"))]));
    let (den, h) = read_image(&d.join("b.f32")).unwrap();
    assert_eq!(den.unit(), Unit::Hu);
    assert_eq!(h.get("denoiser"), Some("bilateral"));
    assert_ne!(den.values(), recon.values());

    // Same seed, same bytes.
    ok(&lcdsim(&[], &["simulate", "--dose", "0.5", "--seed", "9", "--out", p(&d.join("s2.f32"))]));
    assert_eq!(std::fs::read(d.join("s.f32")).unwrap(), std::fs::read(d.join("s2.f32")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(&dir.path().join("x.f32")).to_string();

    let bad_key = lcdsim(&["observer.no_such_key=3"], &["phantom", "--out", &out]);
    assert_eq!(bad_key.status.code(), Some(1));

    let bad_value = lcdsim(&["dose_fractions=[0.0]"], &["phantom", "--out", &out]);
    assert_eq!(bad_value.status.code(), Some(1));

    let unknown_method = lcdsim(&[], &["denoise", "--method", "bm3d", "--in", &out, "--out", &out]);
    assert_eq!(unknown_method.status.code(), Some(1));

    let missing = lcdsim(&[], &["recon", "--in", "/nonexistent/s.f32", "--out", &out]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));

    let usage = lcdsim(&[], &["no-such-command"]);
    assert_eq!(usage.status.code(), Some(1));

    let help = lcdsim(&[], &["--help"]);
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn lcd_then_report_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path().join("study");
    let sets = ["n_sp_scans=12", "n_water_scans=6", "dose_fractions=[0.5, 1.0]"];
    ok(&lcdsim(&sets, &["--workers", "2", "lcd", "--out-dir", p(&study)]));
    let csv = study.join("lcd_results.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# config_sha256 = ")));
    // 2 doses x 4 inserts x 1 method.
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 8);
    for j in 0..4 {
        assert!(study.join(format!("auc_vs_dose_insert{j}.svg")).exists());
    }

    let again = dir.path().join("again");
    ok(&lcdsim(&[], &["report", "--lcd-csv", p(&csv), "--out-dir", p(&again)]));
    assert_eq!(std::fs::read_to_string(again.join("lcd_results.csv")).unwrap(), text);
    assert_eq!(
        std::fs::read(study.join("auc_vs_dose_insert0.svg")).unwrap(),
        std::fs::read(again.join("auc_vs_dose_insert0.svg")).unwrap()
    );

    let report_without_inputs = lcdsim(&[], &["report", "--out-dir", p(&again)]);
    assert_eq!(report_without_inputs.status.code(), Some(1));
}

#[test]
fn simulated_metric_study() {
    let dir = tempfile::tempdir().unwrap();
    let sets = ["metrics.n_slices=2", "metrics.methods=[\"fbp\", \"bilateral\"]"];
    let out = lcdsim(&sets, &["metrics", "--out-dir", p(dir.path())]);
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("method,PSNR (std),SSIM (std)"));
    assert!(stdout.contains("bilateral,"));
    for f in ["metrics.csv", "metrics_table.csv", "metrics_bars.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
