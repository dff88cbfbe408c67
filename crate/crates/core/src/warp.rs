//! Foveated warping and de-warping.
//!
//! Output pixels are laid out around the fixation so that the number of
//! pixels spent per degree of eccentricity follows the acuity model of
//! [`crate::hvs`], uniformly scaled by `scale` and capped at the source
//! camera's own density. Two layouts are supported:
//!
//! - [`WarpMode::Radial`]: the output radius maps to eccentricity. Density
//!   matches the model exactly but corners of a rectangular output fall
//!   outside the covered field.
//! - [`WarpMode::AxisAligned`]: horizontal and vertical output offsets map
//!   independently to longitude and latitude around the fixation ray. Far
//!   more of the rectangle is used and realized density is never below the
//!   radial requirement.
//!
//! De-warping evaluates the analytic inverse for every source pixel and
//! samples the warped image, rather than scattering warped pixels.

use crate::camera::{self, CameraModel, Vec3};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::hvs::{self, HvsParams};
use crate::round;

pub const FWM1_MAGIC: &[u8; 4] = b"FWM1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpMode {
    Radial,
    AxisAligned,
}

impl WarpMode {
    fn to_byte(self) -> u8 {
        match self {
            WarpMode::Radial => 0,
            WarpMode::AxisAligned => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(WarpMode::Radial),
            1 => Some(WarpMode::AxisAligned),
            _ => None,
        }
    }
}

/// Pixels-per-degree schedule: `min(native, scale * g(theta))`.
///
/// Because `g` is decreasing the cap applies on `[0, knee]` and the scaled
/// model beyond it, so both the cumulative budget and its inverse stay in
/// closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingProfile {
    hvs: HvsParams,
    scale: f64,
    native: f64,
    knee: f64,
}

impl SamplingProfile {
    pub fn new(hvs: HvsParams, scale: f64, native: f64) -> Result<Self> {
        hvs.validate()?;
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::invalid(format!("scale must lie in (0, 1], got {scale}")));
        }
        if !(native > 0.0) || !native.is_finite() {
            return Err(Error::invalid(format!("native density must be positive, got {native}")));
        }
        let peak = scale * hvs.density_margin * hvs.peak_cutoff();
        let knee = (hvs.e2 * (peak / native - 1.0)).max(0.0);
        Ok(Self { hvs, scale, native, knee })
    }

    /// Largest scale whose budget over `[0, max_theta]` fits in `extent` pixels.
    pub fn fit(hvs: HvsParams, native: f64, max_theta: f64, extent: f64) -> Result<Self> {
        let full = Self::new(hvs, 1.0, native)?;
        if full.cumulative(max_theta) < extent {
            return Err(Error::invalid(format!(
                "output extent {extent} px exceeds the {:.1} px needed to cover {max_theta} degrees",
                full.cumulative(max_theta)
            )));
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if Self::new(hvs, mid, native)?.cumulative(max_theta) < extent {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self::new(hvs, hi, native)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Eccentricity below which the source density cap is active.
    pub fn knee(&self) -> f64 {
        self.knee
    }

    fn model_budget(&self, theta: f64) -> f64 {
        self.hvs.log_gain() * (theta / self.hvs.e2).ln_1p()
    }

    /// Pixels per degree at `theta`.
    pub fn density(&self, theta: f64) -> f64 {
        let model = self.scale * self.hvs.density_margin * self.hvs.e2 / (theta + self.hvs.e2) * self.hvs.peak_cutoff();
        model.min(self.native)
    }

    /// Pixels needed to reach eccentricity `theta` (degrees).
    pub fn cumulative(&self, theta: f64) -> f64 {
        if theta <= self.knee {
            self.native * theta
        } else {
            self.native * self.knee + self.scale * (self.model_budget(theta) - self.model_budget(self.knee))
        }
    }

    /// Eccentricity reached after `pixels` pixels.
    pub fn inverse(&self, pixels: f64) -> f64 {
        let linear = self.native * self.knee;
        if pixels <= linear {
            pixels / self.native
        } else {
            let budget = (pixels - linear) / self.scale + self.model_budget(self.knee);
            self.hvs.e2 * (budget / self.hvs.log_gain()).exp_m1()
        }
    }
}

/// Analytic warp geometry around one fixation.
#[derive(Debug, Clone)]
pub struct Warper {
    camera: CameraModel,
    mode: WarpMode,
    out_width: u32,
    out_height: u32,
    fixation: [f64; 2],
    right: Vec3,
    down: Vec3,
    forward: Vec3,
    profile: SamplingProfile,
}

impl Warper {
    /// `fixation` is a normalized source point; `scale = None` fits the
    /// profile so that half the shorter output side covers half the field
    /// of view.
    pub fn new(
        camera: CameraModel,
        hvs: HvsParams,
        mode: WarpMode,
        out_width: u32,
        out_height: u32,
        fixation: [f64; 2],
        scale: Option<f64>,
    ) -> Result<Self> {
        if out_width == 0 || out_height == 0 {
            return Err(Error::invalid("output size must be positive"));
        }
        if !(0.0..=1.0).contains(&fixation[0]) || !(0.0..=1.0).contains(&fixation[1]) {
            return Err(Error::invalid(format!("fixation {fixation:?} outside the unit square")));
        }
        let forward = camera
            .unproject(camera.pixel_of(fixation))
            .map_err(|_| Error::invalid(format!("fixation {fixation:?} is outside the camera field of view")))?;
        let mut right = camera::cross([0.0, 1.0, 0.0], forward);
        if camera::dot(right, right) < 1e-12 {
            right = [1.0, 0.0, 0.0];
        }
        let right = camera::normalize(right);
        let down = camera::cross(forward, right);

        let native = camera.native_density();
        let profile = match scale {
            Some(s) => SamplingProfile::new(hvs, s, native)?,
            None => {
                let extent = f64::from(out_width.min(out_height)) / 2.0;
                SamplingProfile::fit(hvs, native, camera.fov / 2.0, extent)?
            }
        };
        Ok(Self { camera, mode, out_width, out_height, fixation, right, down, forward, profile })
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn mode(&self) -> WarpMode {
        self.mode
    }

    pub fn profile(&self) -> &SamplingProfile {
        &self.profile
    }

    pub fn fixation(&self) -> [f64; 2] {
        self.fixation
    }

    pub fn fixation_ray(&self) -> Vec3 {
        self.forward
    }

    pub fn out_size(&self) -> (u32, u32) {
        (self.out_width, self.out_height)
    }

    fn out_center(&self) -> [f64; 2] {
        [(f64::from(self.out_width) - 1.0) / 2.0, (f64::from(self.out_height) - 1.0) / 2.0]
    }

    fn to_world(&self, local: Vec3) -> Vec3 {
        let mut w = [0.0; 3];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = local[0] * self.right[i] + local[1] * self.down[i] + local[2] * self.forward[i];
        }
        w
    }

    /// Ray for an output position given as an offset from the output centre.
    pub fn ray_at_offset(&self, dx: f64, dy: f64) -> Option<Vec3> {
        let local = match self.mode {
            WarpMode::Radial => {
                let r = dx.hypot(dy);
                let theta = self.profile.inverse(r).to_radians();
                if theta >= std::f64::consts::PI {
                    return None;
                }
                let phi = dy.atan2(dx);
                [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
            }
            WarpMode::AxisAligned => {
                let lon = dx.signum() * self.profile.inverse(dx.abs()).to_radians();
                let lat = dy.signum() * self.profile.inverse(dy.abs()).to_radians();
                if lon.abs() > std::f64::consts::PI || lat.abs() > std::f64::consts::FRAC_PI_2 {
                    return None;
                }
                [lon.sin() * lat.cos(), lat.sin(), lon.cos() * lat.cos()]
            }
        };
        Some(self.to_world(local))
    }

    /// Source pixel sampled by output pixel `(x, y)`, if it lands in the image.
    pub fn source_coord(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        let c = self.out_center();
        let ray = self.ray_at_offset(x - c[0], y - c[1])?;
        self.camera.project(ray).ok().filter(|p| self.camera.contains(*p))
    }

    /// Output position of a source pixel (the analytic inverse).
    pub fn output_coord(&self, src: [f64; 2]) -> Option<[f64; 2]> {
        let ray = self.camera.unproject(src).ok()?;
        let lx = camera::dot(ray, self.right);
        let ly = camera::dot(ray, self.down);
        let lz = camera::dot(ray, self.forward);
        let c = self.out_center();
        match self.mode {
            WarpMode::Radial => {
                let lateral = lx.hypot(ly);
                if lateral == 0.0 {
                    return (lz > 0.0).then_some(c);
                }
                let r = self.profile.cumulative(lateral.atan2(lz).to_degrees());
                Some([c[0] + r * lx / lateral, c[1] + r * ly / lateral])
            }
            WarpMode::AxisAligned => {
                let lon = lx.atan2(lz).to_degrees();
                let lat = ly.clamp(-1.0, 1.0).asin().to_degrees();
                Some([
                    c[0] + lon.signum() * self.profile.cumulative(lon.abs()),
                    c[1] + lat.signum() * self.profile.cumulative(lat.abs()),
                ])
            }
        }
    }

    /// Eccentricity of a source pixel relative to the fixation, degrees.
    pub fn eccentricity(&self, src: [f64; 2]) -> Option<f64> {
        let ray = self.camera.unproject(src).ok()?;
        Some(camera::angle_between(ray, self.forward).to_degrees())
    }

    pub fn build_map(&self) -> WarpMap {
        let mut src_coords = Vec::with_capacity(self.out_width as usize * self.out_height as usize);
        for y in 0..self.out_height {
            for x in 0..self.out_width {
                src_coords.push(match self.source_coord(f64::from(x), f64::from(y)) {
                    Some([sx, sy]) => [sx as f32, sy as f32],
                    None => [f32::NAN, f32::NAN],
                });
            }
        }
        WarpMap {
            out_width: self.out_width,
            out_height: self.out_height,
            fixation: self.fixation,
            mode: self.mode,
            src_coords,
        }
    }
}

/// Per-output-pixel source coordinates. Unmapped pixels hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpMap {
    pub out_width: u32,
    pub out_height: u32,
    pub fixation: [f64; 2],
    pub mode: WarpMode,
    pub src_coords: Vec<[f32; 2]>,
}

impl WarpMap {
    pub fn get(&self, x: u32, y: u32) -> Option<[f32; 2]> {
        let c = self.src_coords[(y * self.out_width + x) as usize];
        (!c[0].is_nan()).then_some(c)
    }

    pub fn mapped_fraction(&self) -> f64 {
        let mapped = self.src_coords.iter().filter(|c| !c[0].is_nan()).count();
        mapped as f64 / self.src_coords.len() as f64
    }

    /// `FWM1` little-endian serialization: magic, width u32, height u32,
    /// mode u8, fixation as two f32, then `(x, y)` f32 pairs row-major.
    pub fn to_fwm1(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(21 + self.src_coords.len() * 8);
        out.extend_from_slice(FWM1_MAGIC);
        out.extend_from_slice(&self.out_width.to_le_bytes());
        out.extend_from_slice(&self.out_height.to_le_bytes());
        out.push(self.mode.to_byte());
        out.extend_from_slice(&(self.fixation[0] as f32).to_le_bytes());
        out.extend_from_slice(&(self.fixation[1] as f32).to_le_bytes());
        for c in &self.src_coords {
            out.extend_from_slice(&c[0].to_le_bytes());
            out.extend_from_slice(&c[1].to_le_bytes());
        }
        out
    }

    pub fn from_fwm1(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 21;
        if bytes.len() < HEADER || &bytes[..4] != FWM1_MAGIC {
            return Err(Error::Format("not an FWM1 warp map".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let f32_at = |i: usize| f32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (w, h) = (u32_at(4), u32_at(8));
        let mode = WarpMode::from_byte(bytes[12]).ok_or_else(|| Error::Format(format!("unknown warp mode {}", bytes[12])))?;
        let fixation = [f64::from(f32_at(13)), f64::from(f32_at(17))];
        let n = w as usize * h as usize;
        if w == 0 || h == 0 || bytes.len() != HEADER + n * 8 {
            return Err(Error::Format(format!("FWM1 payload size does not match {w}x{h}")));
        }
        let src_coords = (0..n).map(|i| [f32_at(HEADER + i * 8), f32_at(HEADER + i * 8 + 4)]).collect();
        Ok(Self { out_width: w, out_height: h, fixation, mode, src_coords })
    }
}

pub fn build_warp_map_radial(
    out_size: (u32, u32),
    fixation: [f64; 2],
    camera: &CameraModel,
    hvs: &HvsParams,
    scale: Option<f64>,
) -> Result<WarpMap> {
    Ok(Warper::new(*camera, *hvs, WarpMode::Radial, out_size.0, out_size.1, fixation, scale)?.build_map())
}

pub fn build_warp_map_axis(
    out_size: (u32, u32),
    fixation: [f64; 2],
    camera: &CameraModel,
    hvs: &HvsParams,
    scale: Option<f64>,
) -> Result<WarpMap> {
    Ok(Warper::new(*camera, *hvs, WarpMode::AxisAligned, out_size.0, out_size.1, fixation, scale)?.build_map())
}

fn to_u8(c: [f64; 3]) -> [u8; 3] {
    c.map(round::to_u8)
}

/// Bilinear resampling of `image` through `map`; unmapped pixels are black.
pub fn apply_warp(image: &Frame, map: &WarpMap) -> Result<Frame> {
    let (w, h) = (image.width() as f32, image.height() as f32);
    if map.src_coords.iter().any(|c| !c[0].is_nan() && (c[0] > w - 1.0 || c[1] > h - 1.0 || c[0] < 0.0 || c[1] < 0.0)) {
        return Err(Error::invalid(format!(
            "warp map references pixels outside the {}x{} source",
            image.width(),
            image.height()
        )));
    }
    let mut data = Vec::with_capacity(map.src_coords.len() * 3);
    for c in &map.src_coords {
        let px = if c[0].is_nan() {
            [0; 3]
        } else {
            image.sample_bilinear(f64::from(c[0]), f64::from(c[1])).map(to_u8).unwrap_or([0; 3])
        };
        data.extend_from_slice(&px);
    }
    Frame::new(map.out_width, map.out_height, data)
}

/// Reconstructs a `src_width x src_height` image from a warped one.
pub fn dewarp(warped: &Frame, warper: &Warper, src_width: u32, src_height: u32) -> Result<Frame> {
    let (ow, oh) = warper.out_size();
    if warped.width() != ow || warped.height() != oh {
        return Err(Error::invalid(format!(
            "warped image is {}x{}, warp geometry expects {ow}x{oh}",
            warped.width(),
            warped.height()
        )));
    }
    if src_width != warper.camera.width || src_height != warper.camera.height {
        return Err(Error::invalid(format!(
            "requested {src_width}x{src_height}, camera is {}x{}",
            warper.camera.width, warper.camera.height
        )));
    }
    Frame::from_fn(src_width, src_height, |x, y| {
        warper
            .output_coord([f64::from(x), f64::from(y)])
            .and_then(|o| warped.sample_bilinear(o[0], o[1]))
            .map(to_u8)
            .unwrap_or([0; 3])
    })
}

/// One row of a density profile: eccentricity, model density `g`, and the
/// density realized by a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySample {
    pub theta: f64,
    pub desired: f64,
    pub realized: f64,
}

/// Measures realized pixels-per-degree along the output row through the
/// centre, walking right from the fixation. Density is the inverse of the
/// angle between the rays of neighbouring output pixels.
pub fn density_profile(map: &WarpMap, warper: &Warper) -> Vec<DensitySample> {
    let y = map.out_height / 2;
    let x0 = map.out_width / 2;
    let ray = |x: u32| {
        map.get(x, y).and_then(|c| warper.camera.unproject([f64::from(c[0]), f64::from(c[1])]).ok())
    };
    let hvs = warper.profile.hvs;
    let mut out = Vec::new();
    for x in x0..map.out_width - 1 {
        let (Some(a), Some(b)) = (ray(x), ray(x + 1)) else { break };
        let step = camera::angle_between(a, b).to_degrees();
        if step <= 0.0 {
            continue;
        }
        let mid = camera::normalize([a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
        let theta = camera::angle_between(mid, warper.forward).to_degrees();
        out.push(DensitySample {
            theta,
            desired: hvs::pixel_density(theta, &hvs).unwrap_or(0.0),
            realized: 1.0 / step,
        });
    }
    out
}

pub fn density_profile_csv(samples: &[DensitySample]) -> String {
    let mut out = String::from("theta,g,realized\n");
    for s in samples {
        out.push_str(&format!("{:.6},{:.6},{:.6}\n", s.theta, s.desired, s.realized));
    }
    out
}
