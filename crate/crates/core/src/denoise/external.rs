//! File handshake with an external denoiser process.
//!
//! The input image is written to `<exchange_dir>/in.f32` (+ `in.hdr`), the
//! command template is run with `{in}` and `{out}` replaced by the input and
//! output data paths, and `<exchange_dir>/out.f32` is read back. If the
//! command writes no `out.hdr`, the output is interpreted with the input's
//! header. Calls sharing an exchange directory are serialized.

use std::collections::HashMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::io::{self, header_path, Header};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalParams {
    /// Command line with `{in}` and `{out}` placeholders, split with shell quoting rules.
    pub command: String,
    pub exchange_dir: PathBuf,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
}

fn default_timeout_s() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalProvenance {
    /// The command as executed, placeholders substituted.
    pub command: Vec<String>,
    pub input_sha256: String,
    pub output_sha256: String,
}

#[derive(Debug, Clone)]
pub struct ExternalOutcome {
    pub image: ImageGrid,
    pub provenance: ExternalProvenance,
}

fn directory_lock(dir: &Path) -> Arc<Mutex<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>> = OnceLock::new();
    let key = fs::canonicalize(dir).unwrap_or_else(|_| dir.to_path_buf());
    let mut map = LOCKS.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    map.entry(key).or_default().clone()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the external denoiser on an in-memory image.
pub fn external_denoise(img: &ImageGrid, params: &ExternalParams) -> Result<ExternalOutcome> {
    fs::create_dir_all(&params.exchange_dir)?;
    let lock = directory_lock(&params.exchange_dir);
    let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    let input = params.exchange_dir.join("in.f32");
    io::write_image(&input, img, &Header::default())?;
    run_locked(&input, params)
}

/// Runs the external denoiser on an image already on disk.
pub fn external_denoise_file(input: &Path, params: &ExternalParams) -> Result<ExternalOutcome> {
    fs::create_dir_all(&params.exchange_dir)?;
    let lock = directory_lock(&params.exchange_dir);
    let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    run_locked(input, params)
}

fn run_locked(input: &Path, params: &ExternalParams) -> Result<ExternalOutcome> {
    if !(params.timeout_s > 0.0) {
        return Err(Error::InvalidParameter("external timeout must be positive".into()));
    }
    let (in_img, in_header) = io::read_image(input)?;
    let input_bytes = fs::read(input)?;
    let output = params.exchange_dir.join("out.f32");
    for stale in [output.clone(), header_path(&output)] {
        if stale.exists() {
            fs::remove_file(stale)?;
        }
    }

    let in_str = input.to_string_lossy();
    let out_str = output.to_string_lossy();
    let argv: Vec<String> = shlex::split(&params.command)
        .ok_or_else(|| Error::Config(format!("cannot parse command {:?}", params.command)))?
        .into_iter()
        .map(|tok| tok.replace("{in}", &in_str).replace("{out}", &out_str))
        .collect();
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| Error::Config("external command is empty".into()))?;

    let stderr_path = params.exchange_dir.join("stderr.log");
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(File::create(&stderr_path)?)
        .spawn()
        .map_err(|e| Error::ExternalCommand(format!("cannot start {program:?}: {e}")))?;

    let timeout = Duration::from_secs_f64(params.timeout_s);
    let started = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if started.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::Timeout(timeout));
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    if !status.success() {
        let stderr = fs::read_to_string(&stderr_path).unwrap_or_default();
        let tail: String = stderr.lines().rev().take(5).collect::<Vec<_>>().into_iter().rev().collect::<Vec<_>>().join("\n");
        return Err(Error::ExternalCommand(format!("{program:?} exited with {status}: {tail}")));
    }
    if !output.exists() {
        return Err(Error::ExternalCommand(format!("command did not write {}", output.display())));
    }

    let raw = if header_path(&output).exists() {
        io::read_raw(&output)?
    } else {
        io::read_raw_with_header(&output, in_header.clone())?
    };
    if raw.rows != in_img.n() || raw.cols != in_img.n() {
        return Err(Error::ShapeMismatch {
            expected: format!("{0}x{0}", in_img.n()),
            actual: format!("{}x{}", raw.rows, raw.cols),
        });
    }
    if let Some(unit) = raw.header.get("unit") {
        if unit != in_img.unit().to_string() {
            return Err(Error::UnitMismatch {
                expected: in_img.unit().to_string(),
                actual: unit.to_string(),
            });
        }
    }
    if let Some(index) = raw.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let output_bytes = fs::read(&output)?;
    let image = in_img.with_values(in_img.unit(), raw.data.iter().map(|&v| v as f64).collect())?;

    Ok(ExternalOutcome {
        image,
        provenance: ExternalProvenance {
            command: argv,
            input_sha256: sha256_hex(&input_bytes),
            output_sha256: sha256_hex(&output_bytes),
        },
    })
}
