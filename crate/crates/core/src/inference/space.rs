use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{linspace, ExternalFieldParams, FastModel, LineshapeConfig};
use crate::geometry::{orientation_matrix, wrap_angle, Orientation, RotationMatrix, THETA_C, ZETA_PERIOD};

/// Which set of three parameters is inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferenceMode {
    /// `(alpha, beta, zeta)` with the external field known.
    Orientation,
    /// `(b_z, b_perp, phi0)` with the orientation known.
    Field,
}

/// One axis of the coarse parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamAxis {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub resolution: usize,
    /// Periodic axes cover `[lower, upper)` and wrap.
    pub periodic: bool,
}

impl ParamAxis {
    pub fn new(name: &str, lower: f64, upper: f64, resolution: usize, periodic: bool) -> Result<Self> {
        let a = ParamAxis {
            name: name.to_string(),
            lower,
            upper,
            resolution,
            periodic,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) || self.upper <= self.lower {
            return Err(Error::invalid(format!(
                "axis `{}`: need finite lower < upper, got [{}, {}]",
                self.name, self.lower, self.upper
            )));
        }
        let min = if self.periodic { 1 } else { 2 };
        if self.resolution < min {
            return Err(Error::invalid(format!(
                "axis `{}`: resolution must be at least {min}",
                self.name
            )));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn values(&self) -> Vec<f64> {
        if self.periodic {
            let n = self.resolution as f64;
            (0..self.resolution)
                .map(|k| self.lower + self.span() * k as f64 / n)
                .collect()
        } else {
            linspace(self.lower, self.upper, self.resolution)
        }
    }

    pub fn spacing(&self) -> f64 {
        if self.periodic {
            self.span() / self.resolution as f64
        } else {
            self.span() / (self.resolution - 1) as f64
        }
    }

    /// Signed difference `a - b`, taking the shortest way round on periodic
    /// axes.
    pub fn diff(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        if self.periodic {
            let p = self.span();
            d - p * (d / p).round()
        } else {
            d
        }
    }

    /// Maps a value into the axis domain (wrapping periodic axes).
    pub fn wrap(&self, x: f64) -> f64 {
        if self.periodic {
            self.lower + wrap_angle(x - self.lower, self.span())
        } else {
            x
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.periodic || (x >= self.lower - 1e-12 * self.span() && x <= self.upper + 1e-12 * self.span())
    }
}

/// Coarse grid over the three inferred parameters, with a uniform prior on
/// its box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub mode: InferenceMode,
    pub axes: [ParamAxis; 3],
}

impl ParamSpace {
    /// Full orientation domain at the given resolutions.
    pub fn orientation(n_alpha: usize, n_beta: usize, n_zeta: usize) -> Result<Self> {
        Ok(ParamSpace {
            mode: InferenceMode::Orientation,
            axes: [
                ParamAxis::new("alpha", 0.0, TAU, n_alpha, true)?,
                ParamAxis::new("beta", 0.0, THETA_C, n_beta, false)?,
                ParamAxis::new("zeta", 0.0, ZETA_PERIOD, n_zeta, true)?,
            ],
        })
    }

    pub fn orientation_default() -> Self {
        Self::orientation(72, 24, 24).expect("default orientation grid")
    }

    /// Field box `b_z ∈ [b_z_min, b_z_max]`, `b_perp ∈ [0, b_perp_max]`,
    /// `phi0 ∈ [0, 2π)`.
    pub fn field(
        b_z_min: f64,
        b_z_max: f64,
        n_b_z: usize,
        b_perp_max: f64,
        n_b_perp: usize,
        n_phi0: usize,
    ) -> Result<Self> {
        Ok(ParamSpace {
            mode: InferenceMode::Field,
            axes: [
                ParamAxis::new("b_z", b_z_min, b_z_max, n_b_z, false)?,
                ParamAxis::new("b_perp", 0.0, b_perp_max, n_b_perp, false)?,
                ParamAxis::new("phi0", 0.0, TAU, n_phi0, true)?,
            ],
        })
    }

    pub fn field_default() -> Self {
        Self::field(-3e-3, 3e-3, 81, 3e-3, 61, 72).expect("default field grid")
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.axes {
            a.validate()?;
        }
        let expect: [(&str, bool); 3] = match self.mode {
            InferenceMode::Orientation => [("alpha", true), ("beta", false), ("zeta", true)],
            InferenceMode::Field => [("b_z", false), ("b_perp", false), ("phi0", true)],
        };
        for (a, (name, periodic)) in self.axes.iter().zip(expect) {
            if a.name != name || a.periodic != periodic {
                return Err(Error::invalid(format!(
                    "axis `{}` does not match the {:?} parameter layout",
                    a.name, self.mode
                )));
            }
        }
        match self.mode {
            InferenceMode::Orientation => {
                let b = &self.axes[1];
                if b.lower < -1e-12 || b.upper > THETA_C + 1e-12 {
                    return Err(Error::invalid("beta axis must lie within [0, theta_c]"));
                }
            }
            InferenceMode::Field => {
                if self.axes[1].lower < 0.0 {
                    return Err(Error::invalid("b_perp axis must be non-negative"));
                }
            }
        }
        Ok(())
    }

    pub fn names(&self) -> [&str; 3] {
        [&self.axes[0].name, &self.axes[1].name, &self.axes[2].name]
    }

    pub fn contains(&self, p: &[f64; 3]) -> bool {
        self.axes.iter().zip(p).all(|(a, x)| a.contains(*x))
    }

    pub fn wrap(&self, p: [f64; 3]) -> [f64; 3] {
        [
            self.axes[0].wrap(p[0]),
            self.axes[1].wrap(p[1]),
            self.axes[2].wrap(p[2]),
        ]
    }

    /// Prior box volume.
    pub fn volume(&self) -> f64 {
        self.axes.iter().map(|a| a.span()).product()
    }
}

/// The known half of the model, held fixed during inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnownParams {
    Field(ExternalFieldParams),
    Orientation(RotationMatrix),
}

/// Builds the fast model for a parameter vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModelFactory {
    pub mode: InferenceMode,
    pub known: KnownParams,
    pub lineshape: LineshapeConfig,
}

impl ModelFactory {
    pub(crate) fn new(mode: InferenceMode, known: KnownParams, lineshape: LineshapeConfig) -> Result<Self> {
        lineshape.validate()?;
        match (mode, &known) {
            (InferenceMode::Orientation, KnownParams::Field(_))
            | (InferenceMode::Field, KnownParams::Orientation(_)) => {}
            _ => return Err(Error::invalid("known parameters do not match the inference mode")),
        }
        Ok(ModelFactory { mode, known, lineshape })
    }

    pub(crate) fn model(&self, p: &[f64; 3]) -> FastModel {
        match (self.mode, &self.known) {
            (InferenceMode::Orientation, KnownParams::Field(f)) => {
                FastModel::new(&orientation_matrix(p[0], p[1], p[2]), f, &self.lineshape)
            }
            (_, KnownParams::Orientation(o)) => {
                let f = ExternalFieldParams {
                    b_z: p[0],
                    b_perp: p[1],
                    phi0: p[2],
                };
                FastModel::new(o, &f, &self.lineshape)
            }
            _ => unreachable!("checked in ModelFactory::new"),
        }
    }
}

/// Orientation from a parameter vector in orientation mode.
pub(crate) fn orientation_of(p: &[f64; 3]) -> Result<Orientation> {
    Orientation::new(
        wrap_angle(p[0], TAU),
        p[1].clamp(0.0, THETA_C),
        wrap_angle(p[2], ZETA_PERIOD),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values() {
        let a = ParamAxis::new("alpha", 0.0, TAU, 4, true).unwrap();
        assert_eq!(a.values().len(), 4);
        assert!((a.spacing() - TAU / 4.0).abs() < 1e-15);
        let b = ParamAxis::new("beta", 0.0, 1.0, 5, false).unwrap();
        assert_eq!(b.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!((a.diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!(ParamAxis::new("x", 1.0, 1.0, 3, false).is_err());
        assert!(ParamAxis::new("x", 0.0, 1.0, 1, false).is_err());
    }

    #[test]
    fn space_validation() {
        ParamSpace::orientation_default().validate().unwrap();
        ParamSpace::field_default().validate().unwrap();
        let mut s = ParamSpace::field_default();
        s.axes[1].lower = -1e-3;
        assert!(s.validate().is_err());
        let mut s = ParamSpace::orientation_default();
        s.axes.swap(0, 2);
        assert!(s.validate().is_err());
    }
}
