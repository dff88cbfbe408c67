use std::io::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fovea_cli::ops::{self, Foveation, MapFormat, SourceSpec, WarpGeometry};
use fovea_cli::sweep::{self, SweepConfig, DEFAULT_SIGMAS, DEFAULT_STRENGTHS};
use fovea_cli::{corpus, parse_point, parse_size};
use fovea_core::codec::DEFAULT_BASE_QP;
use fovea_core::foveation::DEFAULT_MB_SIZE;
use fovea_core::warp::WarpMode;
use fovea_core::{FoveationParams, GazeSample};
use fovea_stream::SessionConfig;

#[derive(Parser)]
#[command(name = "fovea", version, about = "Gaze-driven foveated video compression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the per-macroblock QP offset mask as PGM or CSV.
    Qpmap {
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        #[command(flatten)]
        fov: FovArgs,
        #[arg(long, value_enum, default_value_t = Format::Pgm)]
        format: Format,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Encode a corpus over a grid of A and sigma and write `sigma,A,mbits`.
    Sweep {
        /// PNG files or directories of PNG files.
        #[arg(long, required = true, num_args = 1..)]
        corpus: Vec<PathBuf>,
        #[arg(long = "a-values", value_delimiter = ',', default_values_t = DEFAULT_STRENGTHS)]
        strengths: Vec<f64>,
        #[arg(long = "sigma-values", value_delimiter = ',', default_values_t = DEFAULT_SIGMAS)]
        sigmas: Vec<f64>,
        #[arg(long, value_parser = parse_point, default_value = "0.5,0.5")]
        gaze: (f64, f64),
        #[arg(long, default_value_t = DEFAULT_BASE_QP)]
        base_qp: i32,
        #[arg(long, default_value_t = DEFAULT_MB_SIZE)]
        mb: u32,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        /// Defaults to stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Encode a PNG to an FVC1 bitstream.
    Encode {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BASE_QP)]
        base_qp: i32,
        #[command(flatten)]
        fov: FovArgs,
    },
    /// Decode an FVC1 bitstream to PNG.
    Decode {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Foveated warp of a fisheye PNG; optionally write the FWM1 map.
    Warp {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Axis)]
        mode: Mode,
        #[arg(long, value_parser = parse_size, default_value = "1100x1100")]
        size: (u32, u32),
        #[arg(long, value_parser = parse_point, default_value = "0.5,0.5")]
        fixation: (f64, f64),
        #[command(flatten)]
        geometry: GeometryArgs,
    },
    /// Reconstruct the source view from a warped PNG and its FWM1 map.
    Dewarp {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_parser = parse_size)]
        source_size: (u32, u32),
        #[command(flatten)]
        geometry: GeometryArgs,
    },
    /// Print global and foveal PSNR between two PNGs.
    Metrics {
        reference: PathBuf,
        test: PathBuf,
        #[arg(long, value_parser = parse_point, default_value = "0.5,0.5")]
        gaze: (f64, f64),
        /// Foveal radius in normalized image units.
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
    },
    /// Run the WebSocket streaming server.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        /// `pattern` or a directory of PNG frames played in a loop.
        #[arg(long, default_value = "pattern")]
        source: String,
        /// Frame size for the pattern; resize target for image directories.
        #[arg(long, value_parser = parse_size)]
        size: Option<(u32, u32)>,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        #[arg(long, default_value_t = DEFAULT_BASE_QP)]
        base_qp: i32,
        #[command(flatten)]
        fov: FovArgs,
    },
    /// Measure gaze-to-frame latency against a running server.
    Probe {
        #[arg(long, default_value = "ws://127.0.0.1:8080")]
        url: String,
        #[arg(long, default_value_t = 10.0)]
        seconds: f64,
        #[arg(long, default_value_t = 60.0)]
        gaze_rate: f64,
    },
}

#[derive(Args)]
struct FovArgs {
    #[arg(short = 'A', long = "strength", default_value_t = 50.0)]
    strength: f64,
    #[arg(long, default_value_t = 0.03)]
    sigma: f64,
    #[arg(long, value_parser = parse_point, default_value = "0.5,0.5")]
    gaze: (f64, f64),
    #[arg(long, default_value_t = DEFAULT_MB_SIZE)]
    mb: u32,
    /// Encode with an all-zero offset map.
    #[arg(long)]
    no_foveation: bool,
}

impl FovArgs {
    fn resolve(&self) -> Result<Foveation> {
        Ok(Foveation {
            params: FoveationParams::new(self.strength, self.sigma)?,
            gaze: GazeSample::new(self.gaze.0, self.gaze.1, 0)?,
            mb_size: self.mb,
            enabled: !self.no_foveation,
        })
    }
}

#[derive(Args)]
struct GeometryArgs {
    /// Field of view of the equidistant fisheye source, in degrees.
    #[arg(long, default_value_t = 190.0)]
    fov: f64,
    /// Sampling-profile scale; fitted to the output size when omitted.
    #[arg(long)]
    scale: Option<f64>,
}

impl GeometryArgs {
    fn resolve(&self) -> WarpGeometry {
        WarpGeometry { fov_deg: self.fov, scale: self.scale }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pgm,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Radial,
    Axis,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Qpmap { width, height, fov, format, output } => {
            let format = match format {
                Format::Pgm => MapFormat::Pgm,
                Format::Csv => MapFormat::Csv,
            };
            let bytes = ops::qpmap(width, height, &fov.resolve()?, format)?;
            std::fs::write(&output, bytes).with_context(|| format!("writing {}", output.display()))?;
        }
        Command::Sweep { corpus: paths, strengths, sigmas, gaze, base_qp, mb, fps, output } => {
            let cfg = SweepConfig { strengths, sigmas, gaze: GazeSample::new(gaze.0, gaze.1, 0)?, base_qp, mb_size: mb, fps };
            let csv = sweep::to_csv(&sweep::run(&cfg, &corpus::load(&paths)?)?);
            match output {
                Some(path) => std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(csv.as_bytes())?,
            }
        }
        Command::Encode { input, output, base_qp, fov } => {
            let enc = ops::encode_file(&input, &output, base_qp, &fov.resolve()?)?;
            log::info!("{} bits, {} macroblocks", enc.total_bits(), enc.mb_bits.len());
        }
        Command::Decode { input, output } => {
            ops::decode_file(&input, &output)?;
        }
        Command::Warp { input, output, map, mode, size, fixation, geometry } => {
            let mode = match mode {
                Mode::Radial => WarpMode::Radial,
                Mode::Axis => WarpMode::AxisAligned,
            };
            let fixation = [fixation.0, fixation.1];
            let m = ops::warp_file(&input, &output, map.as_deref(), &geometry.resolve(), mode, size, fixation)?;
            log::info!("{:.1}% of the output is mapped", 100.0 * m.mapped_fraction());
        }
        Command::Dewarp { input, map, output, source_size, geometry } => {
            ops::dewarp_file(&input, &map, &output, &geometry.resolve(), source_size)?;
        }
        Command::Metrics { reference, test, gaze, radius } => {
            let m = ops::metrics(&reference, &test, gaze, radius)?;
            println!("psnr_db {:.6}", m.psnr);
            println!("foveal_psnr_db {:.6}", m.foveal_psnr);
        }
        Command::Serve { listen, source, size, fps, base_qp, fov } => {
            let source = if source == "pattern" {
                let (width, height) = size.unwrap_or((1280, 720));
                SourceSpec::Pattern { width, height }
            } else {
                SourceSpec::Images { dir: PathBuf::from(source), size }
            };
            let fov = fov.resolve()?;
            let session = SessionConfig {
                mb_size: fov.mb_size,
                params: fov.params,
                foveation_enabled: fov.enabled,
                base_qp,
                ..Default::default()
            };
            tokio::runtime::Runtime::new()?.block_on(ops::serve(&listen, &source, fps, session))?;
        }
        Command::Probe { url, seconds, gaze_rate } => {
            let duration = Duration::try_from_secs_f64(seconds).context("invalid --seconds")?;
            let r = tokio::runtime::Runtime::new()?.block_on(ops::probe(&url, duration, gaze_rate))?;
            println!("frames {}", r.frames);
            println!("p50_ms {:.3}", r.percentile(50.0).unwrap_or(f64::NAN));
            println!("p95_ms {:.3}", r.percentile(95.0).unwrap_or(f64::NAN));
            println!("max_ms {:.3}", r.max().unwrap_or(f64::NAN));
            println!("non_monotone {}", r.non_monotone);
            println!("mismatched {}", r.mismatched);
            println!("decode_failures {}", r.decode_failures);
        }
    }
    Ok(())
}
