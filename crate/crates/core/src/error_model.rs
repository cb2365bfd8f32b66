//! Additive depth-bias model and frame compensation.
//!
//! A measured depth is modeled as `z = z* + β` with
//! `β ~ N(μ(z), σ²(z))`. The mean `μ` is a per-pixel quadratic in the
//! measured depth and `σ` is a single quadratic shared by all pixels.
//! Compensation subtracts the mean: `z̄ = z − μ(z)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;

/// Depth value marking a pixel without a valid return.
pub const INVALID_DEPTH: f64 = 0.0;

/// Default lower bound on σ(z), meters.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-4;

/// Row-major raster of metric depths. `0.0` marks missing returns.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    width: u32,
    height: u32,
    depths: Vec<f64>,
}

impl DepthFrame {
    pub fn new(width: u32, height: u32, depths: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame("zero-sized frame".into()));
        }
        if depths.len() != width as usize * height as usize {
            return Err(Error::InvalidFrame(format!(
                "{} depths for a {width}x{height} frame",
                depths.len()
            )));
        }
        if let Some(bad) = depths
            .iter()
            .find(|&&z| z != INVALID_DEPTH && !(z.is_finite() && z > 0.0))
        {
            return Err(Error::InvalidFrame(format!("invalid depth value {bad}")));
        }
        Ok(Self {
            width,
            height,
            depths,
        })
    }

    /// A frame where every pixel is the sentinel.
    pub fn invalid(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            depths: vec![INVALID_DEPTH; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn get(&self, u: u32, v: u32) -> f64 {
        self.depths[v as usize * self.width as usize + u as usize]
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.depths[index] != INVALID_DEPTH
    }

    pub fn valid_count(&self) -> usize {
        self.depths.iter().filter(|&&z| z != INVALID_DEPTH).count()
    }

    pub fn check_intrinsics(&self, intrinsics: &CameraIntrinsics) -> Result<()> {
        let expected = (intrinsics.width, intrinsics.height);
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// Coefficients of the bias mean `μ(z) = a z² + b z + c`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelBias {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PixelBias {
    pub const ZERO: PixelBias = PixelBias {
        a: 0.0,
        b: 0.0,
        c: 0.0,
    };

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn mean(&self, z: f64) -> f64 {
        bias_mean(self, z)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

/// `μ(z) = a z² + b z + c`.
pub fn bias_mean(bias: &PixelBias, z: f64) -> f64 {
    bias.a * z * z + bias.b * z + bias.c
}

/// Per-pixel bias functions. Pixels without enough data carry the zero bias
/// and `valid = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasMap {
    width: u32,
    height: u32,
    coefficients: Vec<PixelBias>,
    valid: Vec<bool>,
}

impl BiasMap {
    pub fn new(
        width: u32,
        height: u32,
        coefficients: Vec<PixelBias>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width as usize * height as usize;
        if n == 0 || coefficients.len() != n || valid.len() != n {
            return Err(Error::InvalidConfig(format!(
                "bias map arrays do not match {width}x{height}"
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("non-finite bias coefficient".into()));
        }
        if coefficients
            .iter()
            .zip(&valid)
            .any(|(c, &ok)| !ok && *c != PixelBias::ZERO)
        {
            return Err(Error::InvalidConfig(
                "invalid pixels must carry the zero bias".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            coefficients,
            valid,
        })
    }

    /// All-zero map, every pixel flagged valid.
    pub fn zeros(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            coefficients: vec![PixelBias::ZERO; n],
            valid: vec![true; n],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn coefficients(&self) -> &[PixelBias] {
        &self.coefficients
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, index: usize) -> PixelBias {
        self.coefficients[index]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Global noise model `σ(z) = max(a z² + b z + c, sigma_floor)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sigma_floor: f64,
}

impl NoiseModel {
    pub fn new(a: f64, b: f64, c: f64, sigma_floor: f64) -> Result<Self> {
        if ![a, b, c, sigma_floor].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite noise coefficient".into()));
        }
        if !(sigma_floor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma floor must be positive, got {sigma_floor}"
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            sigma_floor,
        })
    }

    pub fn sigma(&self, z: f64) -> f64 {
        noise_sigma(self, z)
    }

    /// The raw polynomial, without floor clamping.
    pub fn polynomial(&self, z: f64) -> f64 {
        self.a * z * z + self.b * z + self.c
    }
}

pub fn noise_sigma(model: &NoiseModel, z: f64) -> f64 {
    model.polynomial(z).max(model.sigma_floor)
}

/// Removes the per-pixel bias mean from every valid depth.
///
/// Results that are not strictly positive become the sentinel.
pub fn compensate_frame(frame: &DepthFrame, bias_map: &BiasMap) -> Result<DepthFrame> {
    if frame.dims() != bias_map.dims() {
        return Err(Error::DimensionMismatch {
            expected: bias_map.dims(),
            actual: frame.dims(),
        });
    }
    let depths = frame
        .depths
        .par_iter()
        .zip(bias_map.coefficients.par_iter())
        .map(|(&z, bias)| {
            if z == INVALID_DEPTH {
                return INVALID_DEPTH;
            }
            let corrected = z - bias_mean(bias, z);
            if corrected > 0.0 && corrected.is_finite() {
                corrected
            } else {
                INVALID_DEPTH
            }
        })
        .collect();
    Ok(DepthFrame {
        width: frame.width,
        height: frame.height,
        depths,
    })
}
