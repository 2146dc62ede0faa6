#![cfg(unix)]

use std::path::Path;

use lcdsim_core::denoise::{denoise_normalized, external_denoise, DenoiserConfig, ExternalParams, Method};
use lcdsim_core::{Error, ImageGrid, Unit};

fn image(seed: usize) -> ImageGrid {
    let values = (0..16 * 16).map(|i| ((i * 7 + seed * 13) % 29) as f64 / 29.0).collect();
    ImageGrid::new(16, 0.5, Unit::Normalized, values).unwrap()
}

fn params(dir: &Path, command: &str, timeout_s: f64) -> ExternalParams {
    ExternalParams {
        command: command.into(),
        exchange_dir: dir.to_path_buf(),
        timeout_s,
    }
}

#[test]
fn copy_command_is_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let img = image(1);
    let out = external_denoise(&img, &params(tmp.path(), "cp {in} {out}", 30.0)).unwrap();
    // Values are exchanged as f32.
    let expected: Vec<f64> = img.values().iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(out.image.values(), expected.as_slice());
    assert_eq!(out.image.unit(), Unit::Normalized);
    assert_eq!(out.provenance.input_sha256, out.provenance.output_sha256);
    assert_eq!(out.provenance.command[0], "cp");
    assert!(out.provenance.command[1].ends_with("in.f32"));
}

#[test]
fn wrong_shape_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let p = params(tmp.path(), "sh -c 'head -c 16 {in} > {out}'", 30.0);
    let err = external_denoise(&image(2), &p).unwrap_err();
    assert!(matches!(err.root(), Error::ShapeMismatch { .. }), "{err}");

    // A self-consistent output with a different size is also rejected.
    let script = "sh -c 'head -c 64 {in} > {out} && printf \"rows = 4\\ncols = 4\\nunit = normalized\\npixel_mm = 0.5\\n\" > $(dirname {out})/out.hdr'";
    let err = external_denoise(&image(2), &params(tmp.path(), script, 30.0)).unwrap_err();
    assert!(matches!(err.root(), Error::ShapeMismatch { .. }), "{err}");
}

#[test]
fn non_finite_output_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let script = r#"sh -c "cp {in} {out} && printf '\000\000\300\177' | dd of={out} conv=notrunc 2>/dev/null""#;
    let err = external_denoise(&image(3), &params(tmp.path(), script, 30.0)).unwrap_err();
    assert!(matches!(err.root(), Error::NonFinite { index: 0 }), "{err}");
}

#[test]
fn timeout_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let err = external_denoise(&image(4), &params(tmp.path(), "sleep 5", 0.3)).unwrap_err();
    assert!(matches!(err.root(), Error::Timeout(_)), "{err}");
}

#[test]
fn failing_or_silent_commands_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let err = external_denoise(&image(5), &params(tmp.path(), "false", 30.0)).unwrap_err();
    assert!(matches!(err.root(), Error::ExternalCommand(_)), "{err}");
    let err = external_denoise(&image(5), &params(tmp.path(), "true", 30.0)).unwrap_err();
    assert!(matches!(err.root(), Error::ExternalCommand(_)), "{err}");
}

#[test]
fn shared_exchange_directory_is_serialized() {
    let tmp = tempfile::tempdir().unwrap();
    let p = params(tmp.path(), "sh -c 'sleep 0.05; cp {in} {out}'", 30.0);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..4)
            .map(|k| {
                let p = p.clone();
                s.spawn(move || {
                    let img = image(10 + k);
                    let out = external_denoise(&img, &p).unwrap();
                    let expected: Vec<f64> = img.values().iter().map(|&v| v as f32 as f64).collect();
                    assert_eq!(out.image.values(), expected.as_slice());
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
    });
}

#[test]
fn external_method_dispatch() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = DenoiserConfig {
        external: Some(params(tmp.path(), "cp {in} {out}", 30.0)),
        ..DenoiserConfig::default()
    };
    let img = image(6);
    let out = denoise_normalized(&img, Method::External, &cfg).unwrap();
    assert_eq!(out.n(), img.n());
    assert!(denoise_normalized(&img, Method::External, &DenoiserConfig::default()).is_err());
}
