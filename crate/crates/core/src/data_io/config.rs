//! TOML run configuration.
//!
//! Physical quantities are either bare numbers in SI units (tesla, radians)
//! or strings carrying a unit, e.g. `"1.5 mT"`, `"10 uT"`, `"5 deg"`. Every
//! value is converted to SI on load. Unknown keys are rejected.
//!
//! ```toml
//! [grid]
//! bias_min = "-4 mT"
//! bias_max = "4 mT"
//! n_bias = 154
//! n_phi = 72
//!
//! [orientation]          # or: z_dir = [1, 1, 1], x_dir = [-1, -1, 2]
//! alpha = 4.7587
//! beta = 0.2342
//! zeta = 0.4775
//!
//! [field]
//! b_z = "1 mT"
//! b_perp = "2 mT"
//! phi0 = 0.0
//!
//! [lineshape]            # optional
//! gamma = "0.1 mT"
//! contrast = 0.02
//!
//! [noise]                # optional
//! sigma_noise = 0.0018
//! sigma_bias = "1 uT"
//! sigma_phi = "1 deg"
//! ```
//!
//! Further optional sections: `[simulate]`, `[inference]`, `[scaling]`,
//! `[data]`, `[output]`; see [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::forward::{ExternalFieldParams, LineshapeConfig, LineshapeKind, MeasurementGrid};
use crate::geometry::{Orientation, RotationMatrix, Vec3};
use crate::inference::{InferenceOptions, NoiseModel, ParamSpace};

/// Physical dimension of a configuration value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Tesla,
    Radian,
    Dimensionless,
}

impl UnitKind {
    fn describe(self) -> &'static str {
        match self {
            UnitKind::Tesla => "a magnetic field (T, mT, uT, nT)",
            UnitKind::Radian => "an angle (rad, mrad, deg)",
            UnitKind::Dimensionless => "a plain number",
        }
    }
}

fn unit_scale(unit: &str) -> Option<(UnitKind, f64)> {
    Some(match unit {
        "T" => (UnitKind::Tesla, 1.0),
        "mT" => (UnitKind::Tesla, 1e-3),
        "uT" | "µT" | "μT" => (UnitKind::Tesla, 1e-6),
        "nT" => (UnitKind::Tesla, 1e-9),
        "G" => (UnitKind::Tesla, 1e-4),
        "rad" => (UnitKind::Radian, 1.0),
        "mrad" => (UnitKind::Radian, 1e-3),
        "deg" | "°" => (UnitKind::Radian, std::f64::consts::PI / 180.0),
        _ => return None,
    })
}

/// Parses `"<number> <unit>"` (the space is optional) into SI.
pub fn parse_quantity(key: &str, text: &str, kind: UnitKind) -> Result<f64> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let num = num.trim();
    let unit = unit.trim();
    let value: f64 = num.parse().map_err(|_| Error::InvalidValue {
        key: key.to_string(),
        message: format!("cannot parse `{text}` as a quantity"),
    })?;
    if unit.is_empty() {
        return Ok(value);
    }
    match unit_scale(unit) {
        Some((k, s)) if k == kind => Ok(value * s),
        Some(_) | None if kind == UnitKind::Dimensionless => Err(Error::UnitViolation {
            key: key.to_string(),
            message: format!("expected a dimensionless number, got `{text}`"),
        }),
        Some(_) => Err(Error::UnitViolation {
            key: key.to_string(),
            message: format!("expected {}, got `{text}`", kind.describe()),
        }),
        None => Err(Error::UnitViolation {
            key: key.to_string(),
            message: format!("unknown unit `{unit}` in `{text}`"),
        }),
    }
}

/// A TOML table being consumed key by key; leftovers are unknown keys.
struct Section {
    prefix: String,
    table: Table,
}

impl Section {
    fn new(prefix: &str, table: Table) -> Self {
        Section {
            prefix: prefix.to_string(),
            table,
        }
    }

    fn key(&self, k: &str) -> String {
        if self.prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{}", self.prefix, k)
        }
    }

    fn type_error(&self, k: &str, what: &str) -> Error {
        Error::InvalidValue {
            key: self.key(k),
            message: format!("expected {what}"),
        }
    }

    fn quantity(&mut self, k: &str, kind: UnitKind) -> Result<Option<f64>> {
        let v = match self.table.remove(k) {
            None => return Ok(None),
            Some(Value::Float(f)) => f,
            Some(Value::Integer(i)) => i as f64,
            Some(Value::String(s)) => parse_quantity(&self.key(k), &s, kind)?,
            Some(_) => return Err(self.type_error(k, "a number or a quantity string")),
        };
        if !v.is_finite() {
            return Err(self.type_error(k, "a finite number"));
        }
        Ok(Some(v))
    }

    fn required_quantity(&mut self, k: &str, kind: UnitKind) -> Result<f64> {
        self.quantity(k, kind)?.ok_or_else(|| Error::MissingKey(self.key(k)))
    }

    fn count(&mut self, k: &str) -> Result<Option<usize>> {
        match self.table.remove(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as usize)),
            Some(_) => Err(self.type_error(k, "a non-negative integer")),
        }
    }

    fn required_count(&mut self, k: &str) -> Result<usize> {
        self.count(k)?.ok_or_else(|| Error::MissingKey(self.key(k)))
    }

    fn uint(&mut self, k: &str) -> Result<Option<u64>> {
        match self.table.remove(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(_) => Err(self.type_error(k, "a non-negative integer")),
        }
    }

    fn boolean(&mut self, k: &str) -> Result<Option<bool>> {
        match self.table.remove(k) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(b)),
            Some(_) => Err(self.type_error(k, "true or false")),
        }
    }

    fn string(&mut self, k: &str) -> Result<Option<String>> {
        match self.table.remove(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.type_error(k, "a string")),
        }
    }

    fn numbers(&mut self, k: &str) -> Result<Option<Vec<f64>>> {
        match self.table.remove(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Float(f) => Ok(*f),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(self.type_error(k, "an array of numbers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(self.type_error(k, "an array of numbers")),
        }
    }

    fn counts(&mut self, k: &str) -> Result<Option<Vec<usize>>> {
        match self.table.remove(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    _ => Err(self.type_error(k, "an array of non-negative integers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(self.type_error(k, "an array of non-negative integers")),
        }
    }

    fn subsection(&mut self, k: &str) -> Result<Option<Section>> {
        match self.table.remove(k) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section::new(&self.key(k), t))),
            Some(_) => Err(self.type_error(k, "a table")),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            Some(k) => Err(Error::UnknownKey(self.key(k))),
            None => Ok(()),
        }
    }
}

fn invalid_value(key: &str, e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::InvalidValue {
            key: key.to_string(),
            message: m,
        },
        other => other,
    }
}

/// Uniform measurement grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Tesla.
    pub bias_min: f64,
    /// Tesla.
    pub bias_max: f64,
    pub n_bias: usize,
    /// Angles `2πk/n_phi`, `k = 0..n_phi`.
    pub n_phi: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<MeasurementGrid> {
        MeasurementGrid::uniform(self.bias_min, self.bias_max, self.n_bias, self.n_phi)
    }
}

/// Orientation, given either as angles or as the crystal directions of the
/// lab x and z axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationSpec {
    Angles(Orientation),
    LabAxes { x_dir: [f64; 3], z_dir: [f64; 3] },
}

impl OrientationSpec {
    pub fn matrix(&self) -> Result<RotationMatrix> {
        match self {
            OrientationSpec::Angles(o) => Ok(o.matrix),
            OrientationSpec::LabAxes { x_dir, z_dir } => {
                RotationMatrix::from_lab_axes(Vec3::from_array(*x_dir), Vec3::from_array(*z_dir))
            }
        }
    }

    /// Canonical orientation (angles in the fundamental domain).
    pub fn orientation(&self) -> Result<Orientation> {
        match self {
            OrientationSpec::Angles(o) => Ok(*o),
            OrientationSpec::LabAxes { .. } => Orientation::from_matrix(&self.matrix()?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSpec {
    /// Standard deviation of added Gaussian PL noise; 0 for a clean map.
    pub sigma_noise: f64,
    pub seed: u64,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            sigma_noise: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceSpec {
    pub orientation_space: ParamSpace,
    pub field_space: ParamSpace,
    pub options: InferenceOptions,
}

impl Default for InferenceSpec {
    fn default() -> Self {
        InferenceSpec {
            orientation_space: ParamSpace::orientation_default(),
            field_space: ParamSpace::field_default(),
            options: InferenceOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub n_traces: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    /// Parameter whose marginal width is tracked.
    pub parameter: String,
    /// Box nodes per axis for each subset inference.
    pub box_points: usize,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        ScalingSpec {
            n_traces: vec![1, 2, 4, 8, 16, 32, 64],
            repetitions: 50,
            seed: 0,
            parameter: "b_perp".into(),
            box_points: 9,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub path: Option<PathBuf>,
    pub renormalize_percentile: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
        }
    }
}

/// A full run description, in SI units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: Option<GridSpec>,
    pub orientation: Option<OrientationSpec>,
    pub field: Option<ExternalFieldParams>,
    pub lineshape: LineshapeConfig,
    pub noise: NoiseModel,
    pub simulate: SimulateSpec,
    pub inference: InferenceSpec,
    pub scaling: ScalingSpec,
    pub data: DataSpec,
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn require_grid(&self) -> Result<&GridSpec> {
        self.grid.as_ref().ok_or_else(|| Error::MissingKey("grid".into()))
    }

    pub fn require_orientation(&self) -> Result<&OrientationSpec> {
        self.orientation
            .as_ref()
            .ok_or_else(|| Error::MissingKey("orientation".into()))
    }

    pub fn require_field(&self) -> Result<&ExternalFieldParams> {
        self.field.as_ref().ok_or_else(|| Error::MissingKey("field".into()))
    }

    /// Re-checks every invariant; used after command-line overrides.
    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.grid {
            g.build().map_err(|e| invalid_value("grid", e))?;
        }
        if let Some(o) = &self.orientation {
            o.matrix().map_err(|e| invalid_value("orientation", e))?;
        }
        if let Some(f) = &self.field {
            ExternalFieldParams::new(f.b_z, f.b_perp, f.phi0).map_err(|e| invalid_value("field", e))?;
        }
        self.lineshape.validate().map_err(|e| invalid_value("lineshape", e))?;
        self.noise.validate().map_err(|e| invalid_value("noise", e))?;
        if !(self.simulate.sigma_noise >= 0.0) {
            return Err(Error::InvalidValue {
                key: "simulate.sigma_noise".into(),
                message: "must be >= 0".into(),
            });
        }
        self.inference
            .orientation_space
            .validate()
            .map_err(|e| invalid_value("inference", e))?;
        self.inference
            .field_space
            .validate()
            .map_err(|e| invalid_value("inference", e))?;
        self.inference
            .options
            .validate()
            .map_err(|e| invalid_value("inference", e))?;
        if self.scaling.repetitions < 2 {
            return Err(Error::InvalidValue {
                key: "scaling.repetitions".into(),
                message: "must be >= 2".into(),
            });
        }
        if self.scaling.n_traces.is_empty() || self.scaling.n_traces.contains(&0) {
            return Err(Error::InvalidValue {
                key: "scaling.n_traces".into(),
                message: "must be a non-empty list of positive integers".into(),
            });
        }
        if self.scaling.box_points < 3 {
            return Err(Error::InvalidValue {
                key: "scaling.box_points".into(),
                message: "must be >= 3".into(),
            });
        }
        if let Some(p) = self.data.renormalize_percentile {
            if !(0.0..=100.0).contains(&p) || p == 0.0 {
                return Err(Error::InvalidValue {
                    key: "data.renormalize_percentile".into(),
                    message: "must be in (0, 100]".into(),
                });
            }
        }
        Ok(())
    }
}

pub fn read_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })?;
    // Relative data paths are taken relative to the config file.
    if let (Some(p), Some(dir)) = (&cfg.data.path, path.parent()) {
        if p.is_relative() {
            cfg.data.path = Some(dir.join(p));
        }
    }
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
            .unwrap_or(0);
        Error::Parse {
            path: PathBuf::from("<config>"),
            line,
            message: e.message().to_string(),
        }
    })?;
    let mut root = Section::new("", table);
    let mut cfg = RunConfig::default();

    if let Some(mut s) = root.subsection("grid")? {
        cfg.grid = Some(GridSpec {
            bias_min: s.required_quantity("bias_min", UnitKind::Tesla)?,
            bias_max: s.required_quantity("bias_max", UnitKind::Tesla)?,
            n_bias: s.required_count("n_bias")?,
            n_phi: s.required_count("n_phi")?,
        });
        s.finish()?;
    }

    if let Some(mut s) = root.subsection("orientation")? {
        let x = s.numbers("x_dir")?;
        let z = s.numbers("z_dir")?;
        let a = s.quantity("alpha", UnitKind::Radian)?;
        let b = s.quantity("beta", UnitKind::Radian)?;
        let c = s.quantity("zeta", UnitKind::Radian)?;
        let key = s.key("");
        let spec = match (x, z, a, b, c) {
            (None, None, Some(a), Some(b), Some(c)) => {
                OrientationSpec::Angles(Orientation::new(a, b, c).map_err(|e| invalid_value(&key, e))?)
            }
            (Some(x), Some(z), None, None, None) => {
                let arr = |v: Vec<f64>, k: &str| -> Result<[f64; 3]> {
                    v.try_into().map_err(|_| Error::InvalidValue {
                        key: format!("orientation.{k}"),
                        message: "expected 3 components".into(),
                    })
                };
                OrientationSpec::LabAxes {
                    x_dir: arr(x, "x_dir")?,
                    z_dir: arr(z, "z_dir")?,
                }
            }
            (None, None, None, None, None) => return Err(Error::MissingKey("orientation.alpha".into())),
            (Some(_), None, _, _, _) => return Err(Error::MissingKey("orientation.z_dir".into())),
            (None, Some(_), _, _, _) => return Err(Error::MissingKey("orientation.x_dir".into())),
            (None, None, None, _, _) => return Err(Error::MissingKey("orientation.alpha".into())),
            (None, None, _, None, _) => return Err(Error::MissingKey("orientation.beta".into())),
            (None, None, _, _, None) => return Err(Error::MissingKey("orientation.zeta".into())),
            _ => {
                return Err(Error::InvalidValue {
                    key: "orientation".into(),
                    message: "give either alpha/beta/zeta or x_dir/z_dir, not both".into(),
                })
            }
        };
        spec.matrix().map_err(|e| invalid_value("orientation", e))?;
        cfg.orientation = Some(spec);
        s.finish()?;
    }

    if let Some(mut s) = root.subsection("field")? {
        let b_z = s.quantity("b_z", UnitKind::Tesla)?.unwrap_or(0.0);
        let b_perp = s.required_quantity("b_perp", UnitKind::Tesla)?;
        let phi0 = s.quantity("phi0", UnitKind::Radian)?.unwrap_or(0.0);
        cfg.field = Some(ExternalFieldParams::new(b_z, b_perp, phi0).map_err(|e| invalid_value("field", e))?);
        s.finish()?;
    }

    if let Some(mut s) = root.subsection("lineshape")? {
        let ls = &mut cfg.lineshape;
        if let Some(g) = s.quantity("gamma", UnitKind::Tesla)? {
            ls.gamma = g;
        }
        if let Some(c) = s.quantity("contrast", UnitKind::Dimensionless)? {
            ls.contrast = c;
        }
        if let Some(w) = s.numbers("weights")? {
            ls.weights = w.try_into().map_err(|_| Error::InvalidValue {
                key: "lineshape.weights".into(),
                message: "expected 9 weights".into(),
            })?;
        }
        if let Some(k) = s.string("kind")? {
            ls.kind = match k.as_str() {
                "lorentzian" => LineshapeKind::Lorentzian,
                "gaussian" => LineshapeKind::Gaussian,
                _ => {
                    return Err(Error::InvalidValue {
                        key: "lineshape.kind".into(),
                        message: format!("expected `lorentzian` or `gaussian`, got `{k}`"),
                    })
                }
            };
        }
        s.finish()?;
    }

    if let Some(mut s) = root.subsection("noise")? {
        let n = &mut cfg.noise;
        if let Some(v) = s.quantity("sigma_noise", UnitKind::Dimensionless)? {
            n.sigma_noise = v;
        }
        if let Some(v) = s.quantity("sigma_bias", UnitKind::Tesla)? {
            n.sigma_bias = v;
        }
        if let Some(v) = s.quantity("sigma_phi", UnitKind::Radian)? {
            n.sigma_phi = v;
        }
        s.finish()?;
    }

    if let Some(mut s) = root.subsection("simulate")? {
        if let Some(v) = s.quantity("sigma_noise", UnitKind::Dimensionless)? {
            cfg.simulate.sigma_noise = v;
        }
        if let Some(v) = s.uint("seed")? {
            cfg.simulate.seed = v;
        }
        s.finish()?;
    }

    if let Some(mut s) = root.subsection("inference")? {
        let inf = &mut cfg.inference;
        let os = &mut inf.orientation_space;
        if let Some(n) = s.count("n_alpha")? {
            os.axes[0].resolution = n;
        }
        if let Some(n) = s.count("n_beta")? {
            os.axes[1].resolution = n;
        }
        if let Some(n) = s.count("n_zeta")? {
            os.axes[2].resolution = n;
        }
        let fs = &mut inf.field_space;
        if let Some(v) = s.quantity("b_z_min", UnitKind::Tesla)? {
            fs.axes[0].lower = v;
        }
        if let Some(v) = s.quantity("b_z_max", UnitKind::Tesla)? {
            fs.axes[0].upper = v;
        }
        if let Some(n) = s.count("n_b_z")? {
            fs.axes[0].resolution = n;
        }
        if let Some(v) = s.quantity("b_perp_max", UnitKind::Tesla)? {
            fs.axes[1].upper = v;
        }
        if let Some(n) = s.count("n_b_perp")? {
            fs.axes[1].resolution = n;
        }
        if let Some(n) = s.count("n_phi0")? {
            fs.axes[2].resolution = n;
        }
        let o = &mut inf.options;
        if let Some(v) = s.boolean("use_fft")? {
            o.use_fft = v;
        }
        if let Some(v) = s.count("max_candidates")? {
            o.max_candidates = v;
        }
        if let Some(v) = s.count("nms_radius")? {
            o.nms_radius = v;
        }
        if let Some(v) = s.quantity("mode_log_threshold", UnitKind::Dimensionless)? {
            o.mode_log_threshold = v;
        }
        if let Some(v) = s.quantity("box_sigmas", UnitKind::Dimensionless)? {
            o.box_sigmas = v;
        }
        if let Some(v) = s.count("box_points")? {
            o.box_points = v;
        }
        if let Some(v) = s.quantity("credible_level", UnitKind::Dimensionless)? {
            o.credible_level = v;
        }
        if let Some(v) = s.boolean("symmetry_seeding")? {
            o.symmetry_seeding = v;
        }
        s.finish()?;
    }

    if let Some(mut s) = root.subsection("scaling")? {
        let sc = &mut cfg.scaling;
        if let Some(v) = s.counts("n_traces")? {
            sc.n_traces = v;
        }
        if let Some(v) = s.count("repetitions")? {
            sc.repetitions = v;
        }
        if let Some(v) = s.uint("seed")? {
            sc.seed = v;
        }
        if let Some(v) = s.string("parameter")? {
            sc.parameter = v;
        }
        if let Some(v) = s.count("box_points")? {
            sc.box_points = v;
        }
        s.finish()?;
    }

    if let Some(mut s) = root.subsection("data")? {
        cfg.data.path = s.string("path")?.map(PathBuf::from);
        cfg.data.renormalize_percentile = s.quantity("renormalize_percentile", UnitKind::Dimensionless)?;
        s.finish()?;
    }

    if let Some(mut s) = root.subsection("output")? {
        if let Some(d) = s.string("dir")? {
            cfg.output.dir = PathBuf::from(d);
        }
        s.finish()?;
    }

    root.finish()?;
    cfg.validate()?;
    Ok(cfg)
}
