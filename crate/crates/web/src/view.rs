use fovea_core::camera::CameraModel;
use fovea_core::codec::{decode_frame, encode_frame};
use fovea_core::hvs::HvsParams;
use fovea_core::metrics::{foveal_psnr, psnr};
use fovea_core::warp::{apply_warp, WarpMode, Warper};
use fovea_core::{build_qp_map, FoveationParams, Frame, GazeSample, QpDeltaMap, Result};

const MB_SIZE: u32 = 32;
const FOVEAL_RADIUS: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct EncodeSummary {
    pub bits: u64,
    pub psnr: f64,
    pub foveal_psnr: f64,
    pub decoded: Frame,
}

pub fn qp_mask_rgba(frame: &Frame, strength: f64, sigma: f64, gaze: (f64, f64), mb_size: u32) -> Result<Vec<u8>> {
    let params = FoveationParams::new(strength, sigma)?;
    let map = build_qp_map(frame.width(), frame.height(), mb_size, &GazeSample::new(gaze.0, gaze.1, 0)?, &params)?;
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let mut out = vec![0u8; w * h * 4];
    for (i, px) in out.chunks_exact_mut(4).enumerate() {
        let (x, y) = ((i % w) as u32, (i / w) as u32);
        let d = map.get(x / mb_size, y / mb_size);
        px.copy_from_slice(&[255, 40, 40, (u32::from(d) * 200 / 51) as u8]);
    }
    Ok(out)
}

pub fn baseline_bits(frame: &Frame, base_qp: i32) -> Result<u64> {
    let map = QpDeltaMap::zeros(frame.width(), frame.height(), MB_SIZE)?;
    Ok(encode_frame(frame, base_qp, &map)?.total_bits())
}

pub fn encode(frame: &Frame, strength: f64, sigma: f64, gaze: (f64, f64), base_qp: i32) -> Result<EncodeSummary> {
    let params = FoveationParams::new(strength, sigma)?;
    let sample = GazeSample::new(gaze.0, gaze.1, 0)?;
    let map = build_qp_map(frame.width(), frame.height(), MB_SIZE, &sample, &params)?;
    let enc = encode_frame(frame, base_qp, &map)?;
    let decoded = decode_frame(&enc.bitstream)?;
    Ok(EncodeSummary {
        bits: enc.total_bits(),
        psnr: psnr(frame, &decoded)?,
        foveal_psnr: foveal_psnr(frame, &decoded, (sample.x, sample.y), FOVEAL_RADIUS)?,
        decoded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpSettings {
    pub fixation: (f64, f64),
    pub out_size: u32,
    pub axis_aligned: bool,
    pub fov_deg: f64,
}

pub fn warp(frame: &Frame, s: &WarpSettings) -> Result<Frame> {
    let camera = CameraModel::fisheye_filling(frame.width(), frame.height(), s.fov_deg)?;
    let mode = if s.axis_aligned { WarpMode::AxisAligned } else { WarpMode::Radial };
    let fixation = [s.fixation.0, s.fixation.1];
    let warper = Warper::new(camera, HvsParams::default(), mode, s.out_size, s.out_size, fixation, None)?;
    apply_warp(frame, &warper.build_map())
}
