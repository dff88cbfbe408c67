//! Bandwidth sweep over strength `A` and spread `sigma`.

use anyhow::{ensure, Result};
use fovea_core::codec::encode_frame;
use fovea_core::{build_qp_map, FoveationParams, GazeSample};

use crate::corpus::Image;

pub const DEFAULT_STRENGTHS: [f64; 11] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 95.0];
pub const DEFAULT_SIGMAS: [f64; 4] = [0.01, 0.02, 0.03, 0.05];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub strengths: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub gaze: GazeSample,
    pub base_qp: i32,
    pub mb_size: u32,
    /// Frames per second used to turn bits per frame into a bitrate.
    pub fps: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            strengths: DEFAULT_STRENGTHS.to_vec(),
            sigmas: DEFAULT_SIGMAS.to_vec(),
            gaze: GazeSample::centered(),
            base_qp: fovea_core::codec::DEFAULT_BASE_QP,
            mb_size: fovea_core::foveation::DEFAULT_MB_SIZE,
            fps: 30.0,
        }
    }
}

/// One image encoded at one `(sigma, A)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageResult {
    pub name: String,
    pub total_bits: u64,
    pub mb_bits: Vec<u32>,
    pub deltas: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub sigma: f64,
    pub strength: f64,
    /// Mean over the corpus of bits per frame times fps, in MBit/s.
    pub mbits: f64,
    pub images: Vec<ImageResult>,
}

/// Cells in `sigma`-major, then `A` order, each image encoded as a still
/// frame.
pub fn run(cfg: &SweepConfig, corpus: &[Image]) -> Result<Vec<SweepCell>> {
    ensure!(!cfg.strengths.is_empty() && !cfg.sigmas.is_empty(), "sweep needs at least one A and one sigma");
    ensure!(!corpus.is_empty(), "sweep corpus is empty");
    ensure!(cfg.fps > 0.0 && cfg.fps.is_finite(), "fps must be > 0");
    let mut cells = Vec::with_capacity(cfg.sigmas.len() * cfg.strengths.len());
    for &sigma in &cfg.sigmas {
        for &strength in &cfg.strengths {
            let params = FoveationParams::new(strength, sigma)?;
            let mut images = Vec::with_capacity(corpus.len());
            for img in corpus {
                let (w, h) = (img.frame.width(), img.frame.height());
                let map = build_qp_map(w, h, cfg.mb_size, &cfg.gaze, &params)?;
                let enc = encode_frame(&img.frame, cfg.base_qp, &map)?;
                images.push(ImageResult {
                    name: img.name.clone(),
                    total_bits: enc.total_bits(),
                    mb_bits: enc.mb_bits,
                    deltas: map.deltas().to_vec(),
                });
            }
            let mean_bits = images.iter().map(|r| r.total_bits as f64).sum::<f64>() / images.len() as f64;
            cells.push(SweepCell { sigma, strength, mbits: mean_bits * cfg.fps / 1e6, images });
        }
    }
    Ok(cells)
}

/// `sigma,A,mbits` with one row per cell.
pub fn to_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("sigma,A,mbits\n");
    for c in cells {
        out.push_str(&format!("{},{},{:.6}\n", c.sigma, c.strength, c.mbits));
    }
    out
}
