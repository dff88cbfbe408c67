//! Eccentricity-dependent acuity model.
//!
//! The cutoff frequency at eccentricity `theta` (degrees) is
//! `f(theta) = e2 / (theta + e2) * ln(1 / ct0) / alpha` cycles per degree.
//! Sampling at `g = margin * f` pixels per degree keeps above the Nyquist
//! rate; its integral `G(theta) = margin * k * e2 * ln(1 + theta / e2)`
//! (with `k = ln(1 / ct0) / alpha`) is the number of pixels needed to cover
//! eccentricities up to `theta`, and has the closed-form inverse
//! `theta = e2 * (exp(x / (margin * k * e2)) - 1)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HvsParams {
    /// Half-resolution eccentricity in degrees.
    pub e2: f64,
    /// Spatial frequency decay constant.
    pub alpha: f64,
    /// Minimum contrast threshold.
    pub ct0: f64,
    /// Pixels per cycle; 2 is the bare Nyquist rate.
    pub density_margin: f64,
}

impl Default for HvsParams {
    fn default() -> Self {
        Self { e2: 2.3, alpha: 0.106, ct0: 1.0 / 64.0, density_margin: 4.0 }
    }
}

impl HvsParams {
    pub fn new(e2: f64, alpha: f64, ct0: f64, density_margin: f64) -> Result<Self> {
        let params = Self { e2, alpha, ct0, density_margin };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.e2) && positive(self.alpha) && positive(self.ct0) && positive(self.density_margin)) {
            return Err(Error::invalid(format!("HVS parameters must be strictly positive: {self:?}")));
        }
        if self.ct0 >= 1.0 {
            return Err(Error::invalid(format!("ct0 must be below 1, got {}", self.ct0)));
        }
        Ok(())
    }

    /// Foveal cutoff `ln(1 / ct0) / alpha`, cycles per degree at zero eccentricity.
    pub fn peak_cutoff(&self) -> f64 {
        (1.0 / self.ct0).ln() / self.alpha
    }

    /// Pixels per unit of `ln(1 + theta / e2)`.
    pub(crate) fn log_gain(&self) -> f64 {
        self.density_margin * self.peak_cutoff() * self.e2
    }
}

fn check_angle(theta: f64, what: &str) -> Result<()> {
    if theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be >= 0, got {theta}")))
    }
}

/// Highest perceivable spatial frequency at `theta` degrees from the fixation.
pub fn cutoff_frequency(theta: f64, hvs: &HvsParams) -> Result<f64> {
    check_angle(theta, "eccentricity")?;
    Ok(hvs.e2 / (theta + hvs.e2) * hvs.peak_cutoff())
}

/// Desired sampling density in pixels per degree.
pub fn pixel_density(theta: f64, hvs: &HvsParams) -> Result<f64> {
    Ok(hvs.density_margin * cutoff_frequency(theta, hvs)?)
}

/// Pixels required to cover eccentricities `[0, theta]`.
pub fn cumulative_pixels(theta: f64, hvs: &HvsParams) -> Result<f64> {
    check_angle(theta, "eccentricity")?;
    Ok(hvs.log_gain() * (theta / hvs.e2).ln_1p())
}

/// Eccentricity in degrees reached after `pixels` pixels.
pub fn inverse_cumulative(pixels: f64, hvs: &HvsParams) -> Result<f64> {
    check_angle(pixels, "pixel distance")?;
    let gain = hvs.log_gain();
    if !(gain > 0.0) {
        return Err(Error::invalid("density margin must be positive to invert the pixel budget"));
    }
    Ok(hvs.e2 * (pixels / gain).exp_m1())
}
