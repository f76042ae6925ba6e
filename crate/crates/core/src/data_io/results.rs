//! JSON results documents and plot-ready tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::forward::PLMap;
use crate::inference::{Marginal, Posterior, ScalingStudy};

pub const RESULTS_FORMAT: &str = "nvmag-results v1";

/// The likelihood used, recorded in every results document.
pub const LIKELIHOOD_NOTE: &str =
    "Gaussian log-density -1/2 sum[r^2/s^2 + ln(2 pi s^2)] with per-point variance from propagated bias and angle uncertainty";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub format: String,
    pub software_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub likelihood: String,
    pub config: RunConfig,
    pub posterior: Option<Posterior>,
    pub scaling: Option<ScalingStudy>,
}

impl ResultsDocument {
    pub fn new(command: &str, config: RunConfig, seed: Option<u64>) -> Self {
        ResultsDocument {
            format: RESULTS_FORMAT.into(),
            software_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            likelihood: LIKELIHOOD_NOTE.into(),
            config,
            posterior: None,
            scaling: None,
        }
    }
}

/// Wall-clock information, kept out of the primary document so reruns
/// produce byte-identical results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSidecar {
    pub command: String,
    pub started_unix_s: f64,
    pub elapsed_s: f64,
    pub threads: usize,
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Serde(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_results(path: impl AsRef<Path>, doc: &ResultsDocument) -> Result<()> {
    write_text(path.as_ref(), &to_json(doc)?)
}

pub fn read_results(path: impl AsRef<Path>) -> Result<ResultsDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ResultsDocument = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if doc.format != RESULTS_FORMAT {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("unsupported results format `{}`", doc.format),
        });
    }
    Ok(doc)
}

pub fn write_timing(path: impl AsRef<Path>, timing: &TimingSidecar) -> Result<()> {
    write_text(path.as_ref(), &to_json(timing)?)
}

/// Two-column table `value,density` with a comment header naming the
/// parameter and its unit.
pub fn format_marginal(m: &Marginal, unit: &str) -> String {
    let mut out = format!(
        "# marginal: {}\n# unit: {}\n{}_{},density\n",
        m.name, unit, m.name, unit
    );
    for (x, p) in m.x.iter().zip(&m.density) {
        let _ = writeln!(out, "{x:.16e},{p:.16e}");
    }
    out
}

pub fn write_marginal(path: impl AsRef<Path>, m: &Marginal, unit: &str) -> Result<()> {
    write_text(path.as_ref(), &format_marginal(m, unit))
}

/// Unit of a named parameter.
pub fn parameter_unit(name: &str) -> &'static str {
    match name {
        "b_z" | "b_perp" => "T",
        _ => "rad",
    }
}

/// Annotated mode table: one row per mode with MAP, 1σ widths and
/// credible bounds.
pub fn format_modes(post: &Posterior) -> String {
    let n = &post.names;
    let mut out = format!(
        "# modes: {}\n# credible_level: {}\nmode,log_likelihood,mass_fraction",
        post.modes.len(),
        post.credible_level
    );
    for name in n {
        let _ = write!(out, ",{name},{name}_std,{name}_lo,{name}_hi");
    }
    out.push('\n');
    for (i, m) in post.modes.iter().enumerate() {
        let _ = write!(out, "{},{:.16e},{:.16e}", i, m.log_likelihood, m.mass_fraction);
        for k in 0..3 {
            let (lo, hi) = m.credible_intervals[k];
            let _ = write!(out, ",{:.16e},{:.16e},{:.16e},{:.16e}", m.point[k], m.std[k], lo, hi);
        }
        out.push('\n');
    }
    out
}

/// `N,mean_width,std_width` table.
pub fn format_scaling(s: &ScalingStudy) -> String {
    let mut out = format!(
        "# parameter: {}\n# repetitions: {}\n# seed: {}\n",
        s.parameter, s.repetitions, s.seed
    );
    if let Some(slope) = s.slope {
        let _ = writeln!(out, "# log_log_slope: {slope:.6}");
    }
    out.push_str("N,mean_width,std_width\n");
    for r in &s.rows {
        let _ = writeln!(out, "{},{:.16e},{:.16e}", r.n_traces, r.mean_width, r.std_width);
    }
    out
}

/// Gnuplot `matrix nonuniform` layout: the first row holds the bias count
/// then the bias values, each following row an angle then its PL values.
pub fn format_map_matrix(map: &PLMap) -> String {
    let g = &map.grid;
    let mut out = String::new();
    let _ = write!(out, "{}", g.n_bias());
    for b in &g.bias_values {
        let _ = write!(out, " {b:.16e}");
    }
    out.push('\n');
    for (ip, phi) in g.phi_values.iter().enumerate() {
        let _ = write!(out, "{phi:.16e}");
        for ib in 0..g.n_bias() {
            let _ = write!(out, " {:.16e}", map.get(ib, ip));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::MeasurementGrid;

    #[test]
    fn marginal_table_layout() {
        let m = Marginal::from_weights("b_perp", vec![0.0, 1.0], vec![1.0, 1.0]);
        let t = format_marginal(&m, "T");
        assert_eq!(t.lines().count(), 5);
        assert!(t.contains("b_perp_T,density"));
    }

    #[test]
    fn matrix_layout() {
        let g = MeasurementGrid::uniform(0.0, 1.0, 3, 2).unwrap();
        let map = PLMap::new(g, vec![1.0; 6]).unwrap();
        let t = format_map_matrix(&map);
        let rows: Vec<&str> = t.lines().collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].split(' ').count(), 4);
        assert!(rows[0].starts_with("3 "));
    }
}
