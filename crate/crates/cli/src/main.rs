//! `lcdsim` command-line front end.
//!
//! Every subcommand reads the same study configuration (`--config FILE`
//! plus repeatable `--set key=value` overrides). Exit codes: 0 success,
//! 1 configuration error, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lcdsim_core::denoise::{denoise_hu, denoise_normalized, external_denoise};
use lcdsim_core::io::{read_image, read_sinogram, write_image, write_sinogram, Header};
use lcdsim_core::phantom::{build_cct189_with, build_uniform_water_with, PhantomSpec};
use lcdsim_core::scanner::apply_poisson_noise;
use lcdsim_core::study::{
    emit_lcd_report, emit_metric_report, read_lcd_csv, read_metric_csv, run_lcd_study, run_metric_files,
    run_metric_study, StudyConfig,
};
use lcdsim_core::{fbp_fan, forward_project, DoseLevel, Error, Method, Result, Unit};

#[derive(Parser)]
#[command(name = "lcdsim", version, about = "CT low-contrast detectability simulation")]
struct Cli {
    /// Study configuration file (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set observer.n_repeats=4`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhantomKind {
    Cct189,
    Water,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a phantom (HU) on the reconstruction grid.
    Phantom {
        #[arg(long, value_enum, default_value = "cct189")]
        kind: PhantomKind,
        #[arg(long, default_value_t = 4)]
        supersample: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forward-project a phantom and add Poisson noise.
    Simulate {
        #[arg(long, value_enum, default_value = "cct189")]
        kind: PhantomKind,
        /// Fraction of the normal-dose flux, in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        dose: f64,
        /// Noise seed; defaults to `study_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the exact line integrals without noise.
        #[arg(long)]
        noiseless: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fan-beam FBP of a sinogram into an HU image.
    Recon {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Denoise an HU or normalized image.
    Denoise {
        /// fbp (identity), bilateral, tv or external.
        #[arg(long)]
        method: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// PSNR/SSIM study: simulated pairs, or images from two directories.
    Metrics {
        /// Directory of reference (normal-dose) images.
        #[arg(long, requires = "test_dir")]
        reference_dir: Option<PathBuf>,
        /// Directory of reduced-dose images with matching file names.
        #[arg(long, requires = "reference_dir")]
        test_dir: Option<PathBuf>,
        /// Defaults to the configured `output_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Dose-sweep LG-CHO detectability study.
    Lcd {
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-render plots and tables from study CSVs.
    Report {
        #[arg(long)]
        lcd_csv: Option<PathBuf>,
        #[arg(long)]
        metrics_csv: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn phantom_of(kind: PhantomKind, cfg: &StudyConfig) -> Result<(PhantomSpec, &'static str)> {
    Ok(match kind {
        PhantomKind::Cct189 => (build_cct189_with(&cfg.phantom)?, "cct189"),
        PhantomKind::Water => (build_uniform_water_with(&cfg.phantom)?, "water"),
    })
}

fn provenance(cfg: &StudyConfig) -> Header {
    let mut h = Header::default();
    h.set("config_sha256", cfg.hash());
    h
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = StudyConfig::load(cli.config.as_deref(), &cli.set)?;
    if cli.workers > 0 {
        // Only the first call can succeed; later calls keep the same pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    match cli.command {
        Command::Phantom { kind, supersample, out } => {
            let (spec, name) = phantom_of(kind, &cfg)?;
            let img = spec.rasterize(cfg.recon.n, cfg.recon.pixel_mm(), supersample)?;
            let mut h = provenance(&cfg);
            h.set("phantom", name).set("supersample", supersample);
            write_image(&out, &img, &h)?;
            println!("wrote {}", out.display());
        }
        Command::Simulate {
            kind,
            dose,
            seed,
            noiseless,
            out,
        } => {
            let (spec, name) = phantom_of(kind, &cfg)?;
            let level = DoseLevel::from_fraction(dose).map_err(|e| Error::Config(e.to_string()))?;
            cfg.geometry.require_covers(spec.support_radius())?;
            let clean = forward_project(&spec, &cfg.geometry)?;
            let mut h = provenance(&cfg);
            h.set("phantom", name);
            let sino = if noiseless {
                h.set("noise", "none");
                clean
            } else {
                let seed = seed.unwrap_or(cfg.study_seed);
                h.set("seed", seed)
                    .set("dose_fraction", dose)
                    .set("flux_i0", level.flux_i0);
                apply_poisson_noise(&clean, level, seed)?
            };
            write_sinogram(&out, &sino, &h)?;
            println!("wrote {}", out.display());
        }
        Command::Recon { input, out } => {
            let (sino, src) = read_sinogram(&input)?;
            let img = fbp_fan(&sino, &cfg.recon)?;
            let mut h = carry_provenance(&src);
            h.set("config_sha256", cfg.hash())
                .set("recon_apodization", format!("{:?}", cfg.recon.apodization).to_lowercase())
                .set("recon_cutoff_fraction", cfg.recon.cutoff_fraction)
                .set("source", input.display());
            write_image(&out, &img, &h)?;
            println!("wrote {}", out.display());
        }
        Command::Denoise { method, input, out } => {
            let method: Method = method.parse()?;
            if method == Method::External && cfg.denoiser.external.is_none() {
                return Err(Error::Config("method `external` needs [denoiser.external] in the config".into()));
            }
            let (img, src) = read_image(&input)?;
            let mut h = carry_provenance(&src);
            h.set("config_sha256", cfg.hash())
                .set("denoiser", method)
                .set("source", input.display());
            let result = match (method, img.unit()) {
                (Method::External, _) => {
                    let params = cfg.denoiser.external.as_ref().expect("checked above");
                    let normalized = img.unit() == Unit::Hu;
                    let input_img = if normalized {
                        lcdsim_core::denoise::normalize(&img, &cfg.normalization)?
                    } else {
                        img.clone()
                    };
                    let outcome = external_denoise(&input_img, params)?;
                    h.set("external_command", outcome.provenance.command.join(" "))
                        .set("external_input_sha256", &outcome.provenance.input_sha256)
                        .set("external_output_sha256", &outcome.provenance.output_sha256);
                    if normalized {
                        lcdsim_core::denoise::denormalize(&outcome.image, &cfg.normalization)?
                    } else {
                        outcome.image
                    }
                }
                (_, Unit::Hu) => denoise_hu(&img, method, &cfg.denoiser, &cfg.normalization)?,
                _ => denoise_normalized(&img, method, &cfg.denoiser)?,
            };
            write_image(&out, &result, &h)?;
            println!("wrote {}", out.display());
        }
        Command::Metrics {
            reference_dir,
            test_dir,
            out_dir,
        } => {
            let result = match (reference_dir, test_dir) {
                (Some(r), Some(t)) => run_metric_files(&cfg, &r, &t, cli.workers)?,
                _ => run_metric_study(&cfg, cli.workers)?,
            };
            print!("{}", result.report.to_table());
            report_written(&emit_metric_report(&result, out_dir.as_deref().unwrap_or(&cfg.output_dir))?);
        }
        Command::Lcd { out_dir } => {
            let result = run_lcd_study(&cfg, cli.workers)?;
            report_written(&emit_lcd_report(&result, out_dir.as_deref().unwrap_or(&cfg.output_dir))?);
        }
        Command::Report {
            lcd_csv,
            metrics_csv,
            out_dir,
        } => {
            if lcd_csv.is_none() && metrics_csv.is_none() {
                return Err(Error::Config("report needs --lcd-csv and/or --metrics-csv".into()));
            }
            let dir = out_dir.as_deref().unwrap_or(&cfg.output_dir);
            if let Some(p) = lcd_csv {
                report_written(&emit_lcd_report(&read_lcd_csv(&read_text(&p)?)?, dir)?);
            }
            if let Some(p) = metrics_csv {
                report_written(&emit_metric_report(&read_metric_csv(&read_text(&p)?)?, dir)?);
            }
        }
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(path.display().to_string()))
}

/// Provenance keys of an input file that stay meaningful for a derived one.
fn carry_provenance(src: &Header) -> Header {
    const STRUCTURAL: [&str; 13] = [
        "format",
        "kind",
        "rows",
        "cols",
        "dtype",
        "unit",
        "pixel_mm",
        "src_to_iso_mm",
        "src_to_det_mm",
        "n_views",
        "n_channels",
        "det_pitch_mm",
        "source",
    ];
    let mut h = Header::default();
    for (k, v) in src.entries() {
        if !STRUCTURAL.contains(&k.as_str()) {
            h.set(k, v);
        }
    }
    h
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
