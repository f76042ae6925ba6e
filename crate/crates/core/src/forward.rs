//! Analytical cross-relaxation PL model.
//!
//! The sample-frame field is `B_s = O · R_z(-phi) · (B_ext + b_bias·u_z)`.
//! Each of the nine resonance planes contributes a dip
//! `w_i · L(delta_i; gamma)` and the PL is `1 - C · Σ w_i L(delta_i)`.

use std::f64::consts::{LN_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_z, Orientation, RotationMatrix, Vec3};

pub const DEFAULT_GAMMA: f64 = 1e-4;
pub const DEFAULT_CONTRAST: f64 = 0.02;
pub const DEFAULT_WEIGHTS: [f64; 9] = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

/// Rows map a sample-frame field onto the nine resonance deltas, in order
/// `Bx-By, Bx+By, Bx-Bz, Bx+Bz, By-Bz, By+Bz, Bx, By, Bz`.
pub const DELTA_ROWS: [[f64; 3]; 9] = [
    [1.0, -1.0, 0.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, -1.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, -1.0],
    [0.0, 1.0, 1.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

/// Static external field `b_perp (cos phi0, sin phi0, 0) + b_z u_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExternalFieldParams {
    pub b_z: f64,
    pub b_perp: f64,
    pub phi0: f64,
}

impl ExternalFieldParams {
    /// Validates `b_perp >= 0` and folds `phi0` into `[0, 2π)`.
    pub fn new(b_z: f64, b_perp: f64, phi0: f64) -> Result<Self> {
        if !(b_z.is_finite() && b_perp.is_finite() && phi0.is_finite()) {
            return Err(Error::invalid("external field parameters must be finite"));
        }
        if b_perp < 0.0 {
            return Err(Error::invalid(format!("b_perp must be >= 0, got {b_perp}")));
        }
        Ok(ExternalFieldParams {
            b_z,
            b_perp,
            phi0: crate::geometry::wrap_angle(phi0, TAU),
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.b_z, self.b_perp, self.phi0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineshapeKind {
    /// `gamma² / (delta² + gamma²)`
    #[default]
    Lorentzian,
    /// `exp(-ln2 · delta² / gamma²)`, same half width at half maximum.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineshapeConfig {
    /// Half width at half maximum, tesla.
    pub gamma: f64,
    pub contrast: f64,
    pub weights: [f64; 9],
    #[serde(default)]
    pub kind: LineshapeKind,
}

impl Default for LineshapeConfig {
    fn default() -> Self {
        LineshapeConfig {
            gamma: DEFAULT_GAMMA,
            contrast: DEFAULT_CONTRAST,
            weights: DEFAULT_WEIGHTS,
            kind: LineshapeKind::Lorentzian,
        }
    }
}

impl LineshapeConfig {
    pub fn new(gamma: f64, contrast: f64) -> Result<Self> {
        let cfg = LineshapeConfig {
            gamma,
            contrast,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.contrast >= 0.0 && self.contrast < 1.0) {
            return Err(Error::invalid(format!(
                "contrast must lie in [0, 1), got {}",
                self.contrast
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        if self.contrast * self.weight_sum() > 1.0 {
            return Err(Error::invalid(format!(
                "contrast · Σw = {} exceeds 1; PL could go negative",
                self.contrast * self.weight_sum()
            )));
        }
        Ok(())
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Lower bound of the PL range, `1 - C·Σw`.
    pub fn pl_floor(&self) -> f64 {
        1.0 - self.contrast * self.weight_sum()
    }

    #[inline]
    fn shape(&self, delta: f64) -> f64 {
        let g2 = self.gamma * self.gamma;
        match self.kind {
            LineshapeKind::Lorentzian => g2 / (delta * delta + g2),
            LineshapeKind::Gaussian => (-LN_2 * delta * delta / g2).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub orientation: Orientation,
    pub field: ExternalFieldParams,
    pub lineshape: LineshapeConfig,
}

/// Rectangular measurement grid over bias field (tesla) and rotation angle (rad).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementGrid {
    pub bias_values: Vec<f64>,
    pub phi_values: Vec<f64>,
}

fn check_axis(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{name} axis is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{name} axis has non-finite values")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("{name} axis is not strictly increasing")));
    }
    Ok(())
}

impl MeasurementGrid {
    pub fn new(bias_values: Vec<f64>, phi_values: Vec<f64>) -> Result<Self> {
        check_axis("bias", &bias_values)?;
        check_axis("phi", &phi_values)?;
        Ok(MeasurementGrid {
            bias_values,
            phi_values,
        })
    }

    /// `n_bias` evenly spaced bias values including both ends, and `n_phi`
    /// angles `2πk/n_phi` covering the full turn.
    pub fn uniform(bias_min: f64, bias_max: f64, n_bias: usize, n_phi: usize) -> Result<Self> {
        let bias = linspace(bias_min, bias_max, n_bias);
        let phi = (0..n_phi).map(|k| TAU * k as f64 / n_phi as f64).collect();
        MeasurementGrid::new(bias, phi)
    }

    pub fn n_bias(&self) -> usize {
        self.bias_values.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi_values.len()
    }

    pub fn len(&self) -> usize {
        self.n_bias() * self.n_phi()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// PL values on a grid, stored `values[i_bias * n_phi + i_phi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLMap {
    pub grid: MeasurementGrid,
    pub values: Vec<f64>,
    #[serde(default)]
    pub metadata: std::collections::BTreeMap<String, String>,
}

impl PLMap {
    pub fn new(grid: MeasurementGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "PL map has {} values for a {}×{} grid",
                values.len(),
                grid.n_bias(),
                grid.n_phi()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("PL map contains non-finite values"));
        }
        Ok(PLMap {
            grid,
            values,
            metadata: Default::default(),
        })
    }

    #[inline]
    pub fn get(&self, i_bias: usize, i_phi: usize) -> f64 {
        self.values[i_bias * self.grid.n_phi() + i_phi]
    }

    /// Sub-map keeping only the listed angle columns, in the given order
    /// (which must be increasing).
    pub fn select_phi(&self, indices: &[usize]) -> Result<PLMap> {
        let phi: Vec<f64> = indices
            .iter()
            .map(|&i| {
                self.grid
                    .phi_values
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("phi index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        let grid = MeasurementGrid::new(self.grid.bias_values.clone(), phi)?;
        let mut values = Vec::with_capacity(grid.len());
        for ib in 0..self.grid.n_bias() {
            for &ip in indices {
                values.push(self.get(ib, ip));
            }
        }
        let mut m = PLMap::new(grid, values)?;
        m.metadata = self.metadata.clone();
        Ok(m)
    }
}

/// `B_ext + b_bias u_z` in the lab frame.
pub fn total_lab_field(field: &ExternalFieldParams, b_bias: f64) -> Vec3 {
    let (s, c) = field.phi0.sin_cos();
    Vec3::new(field.b_perp * c, field.b_perp * s, field.b_z + b_bias)
}

/// `O · R_z(-phi) · B_lab`.
pub fn field_in_sample_frame(o: &RotationMatrix, phi: f64, b_lab: Vec3) -> Vec3 {
    o.apply(rotation_z(-phi).apply(b_lab))
}

/// The nine `(delta, weight)` pairs with default weights.
pub fn resonance_deltas(b_s: Vec3) -> [(f64, f64); 9] {
    let a = b_s.to_array();
    let mut out = [(0.0, 0.0); 9];
    for (i, row) in DELTA_ROWS.iter().enumerate() {
        out[i] = (row[0] * a[0] + row[1] * a[1] + row[2] * a[2], DEFAULT_WEIGHTS[i]);
    }
    out
}

/// Lorentzian `gamma² / (delta² + gamma²)`.
pub fn lineshape(delta: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be > 0, got {gamma}")));
    }
    let g2 = gamma * gamma;
    Ok(g2 / (delta * delta + g2))
}

/// PL at one grid point, evaluated through the full composed path.
pub fn pl_value(b_bias: f64, phi: f64, params: &ModelParams) -> f64 {
    pl_value_with_matrix(
        b_bias,
        phi,
        &params.orientation.matrix,
        &params.field,
        &params.lineshape,
    )
}

/// Same as [`pl_value`] for an arbitrary rotation matrix.
pub fn pl_value_with_matrix(
    b_bias: f64,
    phi: f64,
    o: &RotationMatrix,
    field: &ExternalFieldParams,
    ls: &LineshapeConfig,
) -> f64 {
    let b_s = field_in_sample_frame(o, phi, total_lab_field(field, b_bias));
    let dip: f64 = resonance_deltas(b_s)
        .iter()
        .zip(ls.weights.iter())
        .map(|((d, _), w)| w * ls.shape(*d))
        .sum();
    1.0 - ls.contrast * dip
}

/// PL over the whole grid. Rows are filled in parallel into fixed slots.
pub fn pl_map(grid: &MeasurementGrid, params: &ModelParams) -> PLMap {
    use rayon::prelude::*;
    let n_phi = grid.n_phi();
    let mut values = vec![0.0; grid.len()];
    values
        .par_chunks_mut(n_phi)
        .zip(grid.bias_values.par_iter())
        .for_each(|(row, &b)| {
            for (v, &phi) in row.iter_mut().zip(grid.phi_values.iter()) {
                *v = pl_value(b, phi, params);
            }
        });
    PLMap {
        grid: grid.clone(),
        values,
        metadata: Default::default(),
    }
}

/// Precomputed form of the model for repeated evaluation with one matrix
/// and field: `delta = K · v` with `K = DELTA_ROWS · O` and
/// `v = (b_perp cos(phi0 - phi), b_perp sin(phi0 - phi), b_z + b)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FastModel {
    k: [[f64; 3]; 9],
    weights: [f64; 9],
    contrast: f64,
    g2: f64,
    kind: LineshapeKind,
    b_perp_cos: f64,
    b_perp_sin: f64,
    b_z: f64,
}

impl FastModel {
    pub(crate) fn new(o: &RotationMatrix, field: &ExternalFieldParams, ls: &LineshapeConfig) -> Self {
        let mut k = [[0.0; 3]; 9];
        for (i, row) in DELTA_ROWS.iter().enumerate() {
            for j in 0..3 {
                k[i][j] = (0..3).map(|l| row[l] * o.0[l][j]).sum();
            }
        }
        let (s0, c0) = field.phi0.sin_cos();
        FastModel {
            k,
            weights: ls.weights,
            contrast: ls.contrast,
            g2: ls.gamma * ls.gamma,
            kind: ls.kind,
            b_perp_cos: field.b_perp * c0,
            b_perp_sin: field.b_perp * s0,
            b_z: field.b_z,
        }
    }

    /// PL at a point given `(cos phi, sin phi)`.
    #[inline]
    pub(crate) fn eval(&self, b: f64, cos_phi: f64, sin_phi: f64) -> f64 {
        // R_z(-phi) applied to the lab field.
        let vx = self.b_perp_cos * cos_phi + self.b_perp_sin * sin_phi;
        let vy = self.b_perp_sin * cos_phi - self.b_perp_cos * sin_phi;
        let vz = self.b_z + b;
        let mut acc = 0.0;
        match self.kind {
            LineshapeKind::Lorentzian => {
                for i in 0..9 {
                    let d = self.k[i][0] * vx + self.k[i][1] * vy + self.k[i][2] * vz;
                    acc += self.weights[i] * self.g2 / (d * d + self.g2);
                }
            }
            LineshapeKind::Gaussian => {
                for i in 0..9 {
                    let d = self.k[i][0] * vx + self.k[i][1] * vy + self.k[i][2] * vz;
                    acc += self.weights[i] * (-LN_2 * d * d / self.g2).exp();
                }
            }
        }
        1.0 - self.contrast * acc
    }

    /// PL at a point and at its four finite-difference neighbours:
    /// `[centre, b + h_b, b - h_b, phi + h_phi, phi - h_phi]`, where the
    /// angle neighbours are given by their `(cos, sin)`.
    #[inline]
    pub(crate) fn eval_stencil(&self, b: f64, h_b: f64, cs: [(f64, f64); 3]) -> [f64; 5] {
        let v = cs.map(|(c, s)| {
            (
                self.b_perp_cos * c + self.b_perp_sin * s,
                self.b_perp_sin * c - self.b_perp_cos * s,
            )
        });
        let vz = self.b_z + b;
        let mut acc = [0.0; 5];
        for i in 0..9 {
            let k = &self.k[i];
            let d0 = k[0] * v[0].0 + k[1] * v[0].1 + k[2] * vz;
            let dz = k[2] * h_b;
            let d = [
                d0,
                d0 + dz,
                d0 - dz,
                k[0] * v[1].0 + k[1] * v[1].1 + k[2] * vz,
                k[0] * v[2].0 + k[1] * v[2].1 + k[2] * vz,
            ];
            let w = self.weights[i];
            match self.kind {
                LineshapeKind::Lorentzian => {
                    for l in 0..5 {
                        acc[l] += w * self.g2 / (d[l] * d[l] + self.g2);
                    }
                }
                LineshapeKind::Gaussian => {
                    for l in 0..5 {
                        acc[l] += w * (-LN_2 * d[l] * d[l] / self.g2).exp();
                    }
                }
            }
        }
        acc.map(|a| 1.0 - self.contrast * a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{orientation_matrix, symmetry_group};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn params(alpha: f64, beta: f64, zeta: f64, field: ExternalFieldParams) -> ModelParams {
        ModelParams {
            orientation: Orientation::new(alpha, beta, zeta).unwrap(),
            field,
            lineshape: LineshapeConfig::default(),
        }
    }

    #[test]
    fn total_field_examples() {
        let f = ExternalFieldParams::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(total_lab_field(&f, 1e-3), Vec3::new(0.0, 0.0, 1e-3));
        let f = ExternalFieldParams::new(1e-3, 2e-3, 0.0).unwrap();
        assert_eq!(total_lab_field(&f, 0.0), Vec3::new(2e-3, 0.0, 1e-3));
        let f = ExternalFieldParams::new(1e-3, 2e-3, PI / 2.0).unwrap();
        let b = total_lab_field(&f, 0.0);
        assert_abs_diff_eq!(b.x, 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(b.y, 2e-3, epsilon = 1e-18);
        assert_abs_diff_eq!(b.z, 1e-3, epsilon = 1e-18);
    }

    #[test]
    fn external_field_validation() {
        assert!(ExternalFieldParams::new(0.0, -1e-6, 0.0).is_err());
        let f = ExternalFieldParams::new(0.0, 1e-3, -PI / 2.0).unwrap();
        assert_abs_diff_eq!(f.phi0, 1.5 * PI, epsilon = 1e-15);
    }

    #[test]
    fn sample_frame_examples() {
        let b = Vec3::new(1e-3, -2e-3, 3e-3);
        assert_eq!(field_in_sample_frame(&RotationMatrix::IDENTITY, 0.0, b), b);
        let r = field_in_sample_frame(&RotationMatrix::IDENTITY, PI / 2.0, Vec3::new(1e-3, 0.0, 0.0));
        assert!((r - Vec3::new(0.0, -1e-3, 0.0)).norm() < 1e-18);
        for phi in [0.3, 1.7, 4.0] {
            let r = field_in_sample_frame(&RotationMatrix::IDENTITY, phi, Vec3::new(0.0, 0.0, 2e-3));
            assert_eq!(r, Vec3::new(0.0, 0.0, 2e-3));
        }
    }

    #[test]
    fn deltas_axial_field() {
        let b = 1e-3;
        let d = resonance_deltas(Vec3::new(0.0, 0.0, b));
        let want = [0.0, 0.0, -b, b, -b, b, 0.0, 0.0, b];
        for i in 0..9 {
            assert_eq!(d[i].0, want[i]);
            assert_eq!(d[i].1, if i < 6 { 1.0 } else { 2.0 });
        }
        let d = resonance_deltas(Vec3::new(0.4, 0.4, 0.0));
        assert_eq!(d[0].0, 0.0);
    }

    #[test]
    fn lineshape_values() {
        let g = 1e-4;
        assert_eq!(lineshape(0.0, g).unwrap(), 1.0);
        assert_abs_diff_eq!(lineshape(g, g).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(lineshape(3.0 * g, g).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(lineshape(-2.0 * g, g).unwrap(), lineshape(2.0 * g, g).unwrap());
        assert!(lineshape(0.0, 0.0).is_err());
        assert!(lineshape(0.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_has_same_hwhm() {
        let ls = LineshapeConfig {
            kind: LineshapeKind::Gaussian,
            ..Default::default()
        };
        assert_abs_diff_eq!(ls.shape(ls.gamma), 0.5, epsilon = 1e-15);
        assert_eq!(ls.shape(0.0), 1.0);
    }

    #[test]
    fn lineshape_config_validation() {
        assert!(LineshapeConfig::new(0.0, 0.02).is_err());
        assert!(LineshapeConfig::new(1e-4, 0.2).is_err()); // 0.2 · 12 > 1
        assert!(LineshapeConfig::new(1e-4, 0.0).is_ok());
    }

    #[test]
    fn axial_degenerate_case() {
        let p = params(0.0, 0.0, 0.0, ExternalFieldParams::new(0.0, 0.0, 0.0).unwrap());
        let c = p.lineshape.contrast;
        for phi in [0.0, 1.0, 2.5] {
            let v = pl_value(5e-3, phi, &p);
            assert!(v <= 1.0 - 4.0 * c);
        }
    }

    #[test]
    fn far_off_resonance_baseline() {
        // Field far from every plane: deltas are all of order 10 mT.
        let f = ExternalFieldParams::new(0.0, 0.0, 0.0).unwrap();
        let ls = LineshapeConfig::default();
        let b_s = Vec3::new(0.011, 0.029, 0.047);
        let min_delta = resonance_deltas(b_s)
            .iter()
            .map(|(d, _)| d.abs())
            .fold(f64::INFINITY, f64::min);
        // Put the whole field in the bias so that B_s = b_s via an aligning
        // rotation.
        let m = RotationMatrix::from_lab_axes(Vec3::X.cross(b_s), b_s).unwrap();
        let v = pl_value_with_matrix(b_s.norm(), 0.0, &m, &f, &ls);
        let bound = ls.contrast * ls.weight_sum() * (ls.gamma / min_delta).powi(2);
        assert!(1.0 - v <= bound && v < 1.0);
    }

    #[test]
    fn bias_offset_identity() {
        let p = params(1.1, 0.3, 0.7, ExternalFieldParams::new(0.4e-3, 1e-3, 0.2).unwrap());
        let mut q = p;
        q.field.b_z = 0.0;
        for (b, phi) in [(-1e-3, 0.1), (0.5e-3, 2.0), (2e-3, 5.0)] {
            let a = pl_value(b, phi, &p);
            let c = pl_value(b + 0.4e-3, phi, &q);
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_model_matches_reference() {
        let o = orientation_matrix(2.3, 0.5, 1.1);
        let f = ExternalFieldParams::new(0.7e-3, 1.3e-3, 4.1).unwrap();
        for kind in [LineshapeKind::Lorentzian, LineshapeKind::Gaussian] {
            let ls = LineshapeConfig {
                kind,
                ..Default::default()
            };
            let fm = FastModel::new(&o, &f, &ls);
            for i in 0..50 {
                let b = -3e-3 + 1.2e-4 * i as f64;
                let phi = 0.13 * i as f64;
                let (s, c) = phi.sin_cos();
                let r = pl_value_with_matrix(b, phi, &o, &f, &ls);
                assert!((fm.eval(b, c, s) - r).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn group_invariance_of_map() {
        let grid = MeasurementGrid::uniform(-3e-3, 3e-3, 31, 24).unwrap();
        let o = orientation_matrix(0.9, 0.4, 0.3);
        let f = ExternalFieldParams::new(0.3e-3, 1e-3, 1.0).unwrap();
        let ls = LineshapeConfig::default();
        for g in symmetry_group().iter() {
            let go = *g * o;
            for &b in &grid.bias_values {
                for &phi in &grid.phi_values {
                    let a = pl_value_with_matrix(b, phi, &o, &f, &ls);
                    let c = pl_value_with_matrix(b, phi, &go, &f, &ls);
                    assert!((a - c).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_point_grid() {
        let grid = MeasurementGrid::new(vec![1e-3], vec![0.5]).unwrap();
        let p = params(0.2, 0.1, 0.3, ExternalFieldParams::new(0.0, 1e-3, 0.0).unwrap());
        let m = pl_map(&grid, &p);
        assert_eq!(m.values, vec![pl_value(1e-3, 0.5, &p)]);
    }

    #[test]
    fn grid_validation() {
        assert!(MeasurementGrid::new(vec![], vec![0.0]).is_err());
        assert!(MeasurementGrid::new(vec![1.0, 1.0], vec![0.0]).is_err());
        assert!(MeasurementGrid::new(vec![2.0, 1.0], vec![0.0]).is_err());
        let g = MeasurementGrid::uniform(-1.0, 1.0, 5, 4).unwrap();
        assert_eq!(g.bias_values, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.phi_values[2], PI);
    }

    #[test]
    fn select_phi_columns() {
        let grid = MeasurementGrid::uniform(-1e-3, 1e-3, 3, 4).unwrap();
        let values: Vec<f64> = (0..12).map(|i| i as f64 / 20.0).collect();
        let m = PLMap::new(grid, values).unwrap();
        let s = m.select_phi(&[1, 3]).unwrap();
        assert_eq!(s.grid.n_phi(), 2);
        assert_eq!(s.get(2, 1), m.get(2, 3));
        assert!(m.select_phi(&[4]).is_err());
    }
}
