//! Foveated compression building blocks.
//!
//! Two bandwidth-reduction paths are provided around a small deterministic
//! intra codec:
//!
//! - [`foveation`]: a gaze-centred Gaussian QP-delta map evaluated once per
//!   macroblock, fed to the codec as per-macroblock quantizer offsets.
//! - [`warp`]: a human-visual-system driven resampling ([`hvs`]) that keeps
//!   the fixation region at source resolution and shrinks the periphery,
//!   with an analytic de-warp on the receiving side.
//!
//! [`codec`] is the all-intra block-transform codec with the `FVC1`
//! bitstream, and [`metrics`] holds the PSNR tooling used to compare the two
//! paths.

pub mod camera;
pub mod codec;
mod error;
pub mod foveation;
pub mod frame;
pub mod hvs;
pub mod metrics;
mod round;
pub mod synth;
pub mod warp;

pub use error::{Error, Result};
pub use foveation::{build_qp_map, clamp_gaze, grid_dims, qp_delta_at, FoveationParams, GazeSample, QpDeltaMap};
pub use frame::Frame;
