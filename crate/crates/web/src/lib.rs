//! Browser bindings for the interactive demo in `www/`.
//!
//! Three operations are exposed on a loaded frame: the QP offset mask for a
//! gaze point, a foveated encode/decode round trip with its bit cost and
//! quality, and the foveated warp. The `view` module holds the plain-Rust
//! versions so they can be tested natively; the exported wrappers only
//! convert errors.

use fovea_core::{synth, Frame};
use wasm_bindgen::prelude::*;

pub mod view;

pub use view::{EncodeSummary, WarpSettings};

fn js(e: fovea_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    frame: Frame,
    baseline: Option<(i32, u64)>,
}

#[wasm_bindgen]
impl Demo {
    /// Starts with the synthetic moving pattern at frame 0.
    #[wasm_bindgen(constructor)]
    pub fn new(width: u32, height: u32) -> Result<Demo, JsError> {
        Ok(Demo { frame: synth::moving_pattern(width, height, 0).map_err(js)?, baseline: None })
    }

    /// Replaces the frame with canvas pixels (RGBA, alpha ignored).
    #[wasm_bindgen(js_name = fromRgba)]
    pub fn from_rgba(width: u32, height: u32, rgba: &[u8]) -> Result<Demo, JsError> {
        Ok(Demo { frame: Frame::from_rgba(width, height, rgba).map_err(js)?, baseline: None })
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.frame.width()
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.frame.height()
    }

    #[wasm_bindgen(js_name = sourceRgba)]
    pub fn source_rgba(&self) -> Vec<u8> {
        self.frame.to_rgba()
    }

    /// Full-frame RGBA overlay of the QP offsets (red, opacity by offset).
    #[wasm_bindgen(js_name = qpMaskRgba)]
    pub fn qp_mask_rgba(&self, strength: f64, sigma: f64, gx: f64, gy: f64, mb_size: u32) -> Result<Vec<u8>, JsError> {
        view::qp_mask_rgba(&self.frame, strength, sigma, (gx, gy), mb_size).map_err(js)
    }

    /// Encodes with the foveated map and decodes again.
    pub fn encode(&mut self, strength: f64, sigma: f64, gx: f64, gy: f64, base_qp: i32) -> Result<EncodeResult, JsError> {
        let baseline = match self.baseline {
            Some((qp, bits)) if qp == base_qp => bits,
            _ => {
                let bits = view::baseline_bits(&self.frame, base_qp).map_err(js)?;
                self.baseline = Some((base_qp, bits));
                bits
            }
        };
        let summary = view::encode(&self.frame, strength, sigma, (gx, gy), base_qp).map_err(js)?;
        Ok(EncodeResult { summary, baseline_bits: baseline })
    }

    /// Foveated warp of the frame treated as a 190-degree fisheye.
    pub fn warp(&self, gx: f64, gy: f64, out_size: u32, axis_aligned: bool) -> Result<Vec<u8>, JsError> {
        let settings = WarpSettings { fixation: (gx, gy), out_size, axis_aligned, fov_deg: 190.0 };
        Ok(view::warp(&self.frame, &settings).map_err(js)?.to_rgba())
    }
}

#[wasm_bindgen]
pub struct EncodeResult {
    summary: EncodeSummary,
    baseline_bits: u64,
}

#[wasm_bindgen]
impl EncodeResult {
    #[wasm_bindgen(getter)]
    pub fn bits(&self) -> f64 {
        self.summary.bits as f64
    }

    /// Bits for the same frame and base QP without foveation.
    #[wasm_bindgen(getter, js_name = baselineBits)]
    pub fn baseline_bits(&self) -> f64 {
        self.baseline_bits as f64
    }

    #[wasm_bindgen(getter)]
    pub fn psnr(&self) -> f64 {
        self.summary.psnr
    }

    #[wasm_bindgen(getter, js_name = fovealPsnr)]
    pub fn foveal_psnr(&self) -> f64 {
        self.summary.foveal_psnr
    }

    /// Decoded frame as RGBA.
    pub fn rgba(&self) -> Vec<u8> {
        self.summary.decoded.to_rgba()
    }
}
