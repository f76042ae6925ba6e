//! Gaussian log-likelihood with input-uncertainty propagation.
//!
//! Each pixel's variance is `σ_noise² + (∂PL/∂b · σ_b)² + (∂PL/∂φ · σ_φ)²`,
//! with the derivatives taken by central differences of the model.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{pl_value, FastModel, MeasurementGrid, ModelParams, PLMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// PL noise standard deviation (dimensionless).
    pub sigma_noise: f64,
    /// Bias-field uncertainty, tesla.
    pub sigma_bias: f64,
    /// Rotation-angle uncertainty, radians.
    pub sigma_phi: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            sigma_noise: 0.0018,
            sigma_bias: 1e-6,
            sigma_phi: 1f64.to_radians(),
        }
    }
}

impl NoiseModel {
    pub fn new(sigma_noise: f64, sigma_bias: f64, sigma_phi: f64) -> Result<Self> {
        let n = NoiseModel {
            sigma_noise,
            sigma_bias,
            sigma_phi,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_noise > 0.0 && self.sigma_noise.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_noise must be > 0, got {}",
                self.sigma_noise
            )));
        }
        if !(self.sigma_bias >= 0.0 && self.sigma_bias.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_bias must be >= 0, got {}",
                self.sigma_bias
            )));
        }
        if !(self.sigma_phi >= 0.0 && self.sigma_phi.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_phi must be >= 0, got {}",
                self.sigma_phi
            )));
        }
        Ok(())
    }
}

/// Central-difference derivative of the model at one grid point, in both
/// axes.
pub fn pl_gradient(params: &ModelParams, b: f64, phi: f64, h_b: f64, h_phi: f64) -> (f64, f64) {
    let d_b = (pl_value(b + h_b, phi, params) - pl_value(b - h_b, phi, params)) / (2.0 * h_b);
    let d_phi = (pl_value(b, phi + h_phi, params) - pl_value(b, phi - h_phi, params)) / (2.0 * h_phi);
    (d_b, d_phi)
}

/// Per-point variance with finite-difference steps `(h_b, h_phi)`.
pub fn effective_variance(
    params: &ModelParams,
    grid_point: (f64, f64),
    noise: &NoiseModel,
    steps: (f64, f64),
) -> Result<f64> {
    let (h_b, h_phi) = steps;
    if !(h_b > 0.0 && h_phi > 0.0) {
        return Err(Error::invalid("finite-difference steps must be > 0"));
    }
    let mut var = noise.sigma_noise * noise.sigma_noise;
    if noise.sigma_bias == 0.0 && noise.sigma_phi == 0.0 {
        return Ok(var);
    }
    let (d_b, d_phi) = pl_gradient(params, grid_point.0, grid_point.1, h_b, h_phi);
    var += (d_b * noise.sigma_bias).powi(2) + (d_phi * noise.sigma_phi).powi(2);
    Ok(var)
}

/// Half of the local spacing at each index of an axis, or `fallback` when
/// the axis has a single point.
pub(crate) fn half_local_spacing(axis: &[f64], fallback: f64) -> Vec<f64> {
    let n = axis.len();
    if n < 2 {
        return vec![fallback; n];
    }
    (0..n)
        .map(|i| {
            let s = if i == 0 {
                axis[1] - axis[0]
            } else if i == n - 1 {
                axis[n - 1] - axis[n - 2]
            } else {
                0.5 * (axis[i + 1] - axis[i - 1])
            };
            0.5 * s
        })
        .collect()
}

/// Finite-difference steps for every grid index.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FdSteps {
    pub bias: Vec<f64>,
    pub phi: Vec<f64>,
}

impl FdSteps {
    /// Half the local spacing per axis. Single-point axes fall back to the
    /// corresponding input uncertainty (or 1 μT / 1 mrad when that is zero).
    pub(crate) fn for_grid(grid: &MeasurementGrid, noise: &NoiseModel) -> Self {
        let fb = if noise.sigma_bias > 0.0 { noise.sigma_bias } else { 1e-6 };
        let fp = if noise.sigma_phi > 0.0 { noise.sigma_phi } else { 1e-3 };
        FdSteps {
            bias: half_local_spacing(&grid.bias_values, fb),
            phi: half_local_spacing(&grid.phi_values, fp),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Pixel {
    pub b: f64,
    pub s: f64,
    pub h_b: f64,
    pub h_phi: f64,
    pub cos: f64,
    pub sin: f64,
    pub cos_p: f64,
    pub sin_p: f64,
    pub cos_m: f64,
    pub sin_m: f64,
}

/// Observed pixels prepared for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub(crate) struct DataTerms {
    pub pixels: Vec<Pixel>,
    pub noise: NoiseModel,
}

impl DataTerms {
    /// `phi_mask`, when given, selects which angle columns take part.
    pub(crate) fn new(data: &PLMap, noise: &NoiseModel, phi_mask: Option<&[bool]>) -> Result<Self> {
        noise.validate()?;
        let grid = &data.grid;
        if grid.is_empty() {
            return Err(Error::invalid("data grid is empty"));
        }
        if let Some(m) = phi_mask {
            if m.len() != grid.n_phi() {
                return Err(Error::invalid("phi mask length does not match the grid"));
            }
            if !m.iter().any(|x| *x) {
                return Err(Error::invalid("phi mask selects no traces"));
            }
        }
        let steps = FdSteps::for_grid(grid, noise);
        let mut pixels = Vec::with_capacity(grid.len());
        for (ib, &b) in grid.bias_values.iter().enumerate() {
            for (ip, &phi) in grid.phi_values.iter().enumerate() {
                if phi_mask.is_some_and(|m| !m[ip]) {
                    continue;
                }
                let hp = steps.phi[ip];
                let (sin, cos) = phi.sin_cos();
                let (sin_p, cos_p) = (phi + hp).sin_cos();
                let (sin_m, cos_m) = (phi - hp).sin_cos();
                pixels.push(Pixel {
                    b,
                    s: data.get(ib, ip),
                    h_b: steps.bias[ib],
                    h_phi: hp,
                    cos,
                    sin,
                    cos_p,
                    sin_p,
                    cos_m,
                    sin_m,
                });
            }
        }
        Ok(DataTerms { pixels, noise: *noise })
    }

    /// `-½ Σ [r²/σ² + ln(2πσ²)]` for the given model.
    pub(crate) fn log_likelihood(&self, model: &FastModel) -> f64 {
        let n = &self.noise;
        let var0 = n.sigma_noise * n.sigma_noise;
        let vb = n.sigma_bias * n.sigma_bias;
        let vp = n.sigma_phi * n.sigma_phi;
        let mut acc = 0.0;
        if vb == 0.0 && vp == 0.0 {
            let c = (TAU * var0).ln();
            for p in &self.pixels {
                let r = p.s - model.eval(p.b, p.cos, p.sin);
                acc += r * r / var0 + c;
            }
            return -0.5 * acc;
        }
        for p in &self.pixels {
            let e = model.eval_stencil(p.b, p.h_b, [(p.cos, p.sin), (p.cos_p, p.sin_p), (p.cos_m, p.sin_m)]);
            let db = (e[1] - e[2]) / (2.0 * p.h_b);
            let dp = (e[3] - e[4]) / (2.0 * p.h_phi);
            let var = var0 + db * db * vb + dp * dp * vp;
            let r = p.s - e[0];
            acc += r * r / var + (TAU * var).ln();
        }
        -0.5 * acc
    }
}

/// Gaussian log-likelihood of `data` under `params`, with finite-difference
/// steps of half the local grid spacing.
pub fn log_likelihood(params: &ModelParams, data: &PLMap, noise: &NoiseModel) -> Result<f64> {
    let terms = DataTerms::new(data, noise, None)?;
    let model = FastModel::new(&params.orientation.matrix, &params.field, &params.lineshape);
    Ok(terms.log_likelihood(&model))
}
