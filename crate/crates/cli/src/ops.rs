//! The file-level operations behind each subcommand.

use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use fovea_core::camera::CameraModel;
use fovea_core::codec::{decode, encode_frame, EncodedFrame};
use fovea_core::hvs::HvsParams;
use fovea_core::metrics::{foveal_psnr, psnr};
use fovea_core::warp::{apply_warp, dewarp, WarpMap, WarpMode, Warper};
use fovea_core::{build_qp_map, FoveationParams, Frame, GazeSample, QpDeltaMap};
use fovea_stream::{run_probe, LatencyReport, ProbeConfig, Server, ServerConfig, SessionConfig, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFormat {
    Pgm,
    Csv,
}

/// Foveation settings shared by `qpmap` and `encode`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Foveation {
    pub params: FoveationParams,
    pub gaze: GazeSample,
    pub mb_size: u32,
    pub enabled: bool,
}

impl Foveation {
    pub fn map(&self, width: u32, height: u32) -> Result<QpDeltaMap> {
        Ok(if self.enabled {
            build_qp_map(width, height, self.mb_size, &self.gaze, &self.params)?
        } else {
            QpDeltaMap::zeros(width, height, self.mb_size)?
        })
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_png(path: &Path) -> Result<Frame> {
    Frame::load_png(path).with_context(|| format!("loading {}", path.display()))
}

fn save_png(frame: &Frame, path: &Path) -> Result<()> {
    frame.save_png(path).with_context(|| format!("writing {}", path.display()))
}

pub fn qpmap(width: u32, height: u32, fov: &Foveation, format: MapFormat) -> Result<Vec<u8>> {
    let map = fov.map(width, height)?;
    let strength = if fov.enabled { fov.params.strength() } else { 0.0 };
    Ok(match format {
        MapFormat::Pgm => map.to_pgm(strength),
        MapFormat::Csv => map.to_csv().into_bytes(),
    })
}

pub fn encode_file(input: &Path, output: &Path, base_qp: i32, fov: &Foveation) -> Result<EncodedFrame> {
    let frame = load_png(input)?;
    let map = fov.map(frame.width(), frame.height())?;
    let enc = encode_frame(&frame, base_qp, &map)?;
    write(output, &enc.bitstream)?;
    Ok(enc)
}

pub fn decode_file(input: &Path, output: &Path) -> Result<Frame> {
    let decoded = decode(&read(input)?).with_context(|| format!("decoding {}", input.display()))?;
    save_png(&decoded.frame, output)?;
    Ok(decoded.frame)
}

/// Source camera and warp geometry shared by `warp` and `dewarp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpGeometry {
    pub fov_deg: f64,
    pub scale: Option<f64>,
}

impl WarpGeometry {
    fn warper(&self, src: (u32, u32), mode: WarpMode, out: (u32, u32), fixation: [f64; 2]) -> Result<Warper> {
        let camera = CameraModel::fisheye_filling(src.0, src.1, self.fov_deg)?;
        Ok(Warper::new(camera, HvsParams::default(), mode, out.0, out.1, fixation, self.scale)?)
    }
}

/// Warps a PNG taken to be an equidistant fisheye filling its frame. The
/// fixation is rounded to f32 first, as stored in the map file, so that a
/// later dewarp sees exactly the same geometry.
pub fn warp_file(
    input: &Path,
    output: &Path,
    map_out: Option<&Path>,
    geometry: &WarpGeometry,
    mode: WarpMode,
    out_size: (u32, u32),
    fixation: [f64; 2],
) -> Result<WarpMap> {
    let src = load_png(input)?;
    let fixation = fixation.map(|v| f64::from(v as f32));
    let warper = geometry.warper((src.width(), src.height()), mode, out_size, fixation)?;
    let map = warper.build_map();
    save_png(&apply_warp(&src, &map)?, output)?;
    if let Some(path) = map_out {
        write(path, &map.to_fwm1())?;
    }
    Ok(map)
}

pub fn dewarp_file(
    input: &Path,
    map_path: &Path,
    output: &Path,
    geometry: &WarpGeometry,
    src_size: (u32, u32),
) -> Result<Frame> {
    let warped = load_png(input)?;
    let map = WarpMap::from_fwm1(&read(map_path)?).with_context(|| format!("parsing {}", map_path.display()))?;
    let warper = geometry.warper(src_size, map.mode, (map.out_width, map.out_height), map.fixation)?;
    let out = dewarp(&warped, &warper, src_size.0, src_size.1)?;
    save_png(&out, output)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub psnr: f64,
    pub foveal_psnr: f64,
}

pub fn metrics(reference: &Path, test: &Path, gaze: (f64, f64), radius: f64) -> Result<Metrics> {
    let (a, b) = (load_png(reference)?, load_png(test)?);
    Ok(Metrics { psnr: psnr(&a, &b)?, foveal_psnr: foveal_psnr(&a, &b, gaze, radius)? })
}

#[derive(Debug, Clone)]
pub enum SourceSpec {
    Pattern { width: u32, height: u32 },
    Images { dir: std::path::PathBuf, size: Option<(u32, u32)> },
}

impl SourceSpec {
    pub fn open(&self) -> Result<Source> {
        Ok(match self {
            SourceSpec::Pattern { width, height } => Source::pattern(*width, *height)?,
            SourceSpec::Images { dir, size } => Source::image_dir(dir, *size)?,
        })
    }
}

pub async fn serve(listen: &str, source: &SourceSpec, fps: f64, session: SessionConfig) -> Result<()> {
    let mb = session.mb_size;
    if mb == 0 || !mb.is_multiple_of(16) || mb > fovea_core::codec::MAX_MB_SIZE {
        bail!("macroblock size must be a multiple of 16 up to {}, got {mb}", fovea_core::codec::MAX_MB_SIZE);
    }
    let config = ServerConfig { fps, session, ..Default::default() };
    let server = Server::bind(listen, config, source.open()?).await?;
    log::info!("listening on ws://{}", server.local_addr()?);
    server.run().await?;
    Ok(())
}

pub async fn probe(url: &str, duration: Duration, gaze_rate_hz: f64) -> Result<LatencyReport> {
    let report = run_probe(url, ProbeConfig { duration, gaze_rate_hz, ..Default::default() }).await?;
    if report.latencies_ms.is_empty() {
        bail!("no frame echoed a gaze sample within {duration:?}");
    }
    Ok(report)
}
