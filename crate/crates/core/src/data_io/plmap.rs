//! The `nv-plmap v1` long-format text file.
//!
//! ```text
//! # nv-plmap v1
//! # key: value
//! phi_rad,b_bias_T,pl
//! 0.0000000000000000e0,-4.0000000000000001e-3,9.9912345678901234e-1
//! ...
//! ```
//!
//! Rows are phi-major: all bias values for the first angle, then the next
//! angle, with both axes strictly increasing.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::forward::{pl_map, MeasurementGrid, ModelParams, PLMap};

pub const PLMAP_MAGIC: &str = "# nv-plmap v1";
pub const PLMAP_HEADER: &str = "phi_rad,b_bias_T,pl";

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReadOptions {
    /// Divide every PL value by this percentile (0 to 100) of the map.
    pub renormalize_percentile: Option<f64>,
}

fn check_metadata(key: &str, value: &str) -> Result<()> {
    let bad = |s: &str| s.contains('\n') || s.contains('\r');
    if key.is_empty() || key.contains(':') || bad(key) || key.trim() != key || bad(value) {
        return Err(Error::invalid(format!("metadata entry `{key}` cannot be written")));
    }
    Ok(())
}

/// Serialises a map; floats use 17 significant digits so the text
/// round-trips exactly.
pub fn format_pl_map(map: &PLMap) -> Result<String> {
    let mut out = String::with_capacity(64 * map.values.len() + 256);
    out.push_str(PLMAP_MAGIC);
    out.push('\n');
    for (k, v) in &map.metadata {
        check_metadata(k, v)?;
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(PLMAP_HEADER);
    out.push('\n');
    for (ip, phi) in map.grid.phi_values.iter().enumerate() {
        for (ib, b) in map.grid.bias_values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", phi, b, map.get(ib, ip));
        }
    }
    Ok(out)
}

pub fn write_pl_map(path: impl AsRef<Path>, map: &PLMap) -> Result<()> {
    let path = path.as_ref();
    let text = format_pl_map(map)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_pl_map(path: impl AsRef<Path>) -> Result<PLMap> {
    read_pl_map_with(path, &ReadOptions::default())
}

pub fn read_pl_map_with(path: impl AsRef<Path>, options: &ReadOptions) -> Result<PLMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = parse_pl_map(&text, path)?;
    if let Some(p) = options.renormalize_percentile {
        renormalize(&mut map, p)?;
    }
    Ok(map)
}

/// Parses the text of a map file; `path` is only used in error messages.
pub fn parse_pl_map(text: &str, path: &Path) -> Result<PLMap> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    match lines.next() {
        Some((_, l)) if l.trim_end() == PLMAP_MAGIC => {}
        Some((n, l)) if l.starts_with("# nv-plmap") => {
            return Err(err(n, format!("unsupported format version `{}`", l.trim())));
        }
        Some((n, _)) => return Err(err(n, format!("expected `{PLMAP_MAGIC}`"))),
        None => return Err(err(1, "empty file".into())),
    }

    let mut metadata = BTreeMap::new();
    let mut header_seen = false;
    for (n, l) in lines.by_ref() {
        if let Some(rest) = l.strip_prefix('#') {
            let rest = rest.trim();
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| err(n, "metadata line must be `# key: value`".into()))?;
            metadata.insert(k.trim().to_string(), v.trim().to_string());
        } else if l.trim() == PLMAP_HEADER {
            header_seen = true;
            break;
        } else {
            return Err(err(n, format!("expected header `{PLMAP_HEADER}`")));
        }
    }
    if !header_seen {
        return Err(err(text.lines().count().max(1), "missing header line".into()));
    }

    let mut rows: Vec<(usize, f64, f64, f64)> = Vec::new();
    let mut trailing_blank: Option<usize> = None;
    for (n, l) in lines {
        if l.trim().is_empty() {
            trailing_blank.get_or_insert(n);
            continue;
        }
        if let Some(b) = trailing_blank {
            return Err(err(b, "blank line inside data block".into()));
        }
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(
                n,
                format!("expected 3 comma-separated fields, found {}", fields.len()),
            ));
        }
        let mut vals = [0.0; 3];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f
                .parse::<f64>()
                .map_err(|_| err(n, format!("cannot parse `{f}` as a number")))?;
            if !v.is_finite() {
                return Err(err(n, format!("non-finite value `{f}`")));
            }
        }
        rows.push((n, vals[0], vals[1], vals[2]));
    }
    if rows.is_empty() {
        return Err(err(text.lines().count().max(1), "no data rows".into()));
    }

    // Duplicates first, then completeness, then ordering.
    let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(rows.len());
    for &(n, phi, b, _) in &rows {
        if let Some(first) = seen.insert((phi.to_bits(), b.to_bits()), n) {
            return Err(err(
                n,
                format!("duplicate grid point (phi = {phi:e}, b_bias = {b:e}); first seen on line {first}"),
            ));
        }
    }
    let mut phis: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mut biases: Vec<f64> = rows.iter().map(|r| r.2).collect();
    for v in [&mut phis, &mut biases] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    if phis.len() * biases.len() != rows.len() {
        for phi in &phis {
            for b in &biases {
                if !seen.contains_key(&(phi.to_bits(), b.to_bits())) {
                    return Err(Error::MissingGridPoint {
                        path: path.to_path_buf(),
                        phi: *phi,
                        bias: *b,
                    });
                }
            }
        }
    }
    let nb = biases.len();
    let mut values = vec![0.0; rows.len()];
    for (k, &(n, phi, b, pl)) in rows.iter().enumerate() {
        let (ip, ib) = (k / nb, k % nb);
        if phi != phis[ip] || b != biases[ib] {
            return Err(err(
                n,
                "rows must be phi-major with strictly increasing phi and b_bias (non-monotone axis)".into(),
            ));
        }
        values[ib * phis.len() + ip] = pl;
    }
    let grid = MeasurementGrid::new(biases, phis)?;
    let mut map = PLMap::new(grid, values)?;
    map.metadata = metadata;
    Ok(map)
}

/// Linear-interpolated percentile of the values, `p` in `[0, 100]`.
fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let (i, f) = (pos.floor() as usize, pos.fract());
    if i + 1 < v.len() {
        v[i] * (1.0 - f) + v[i + 1] * f
    } else {
        v[i]
    }
}

/// Divides the map by its `p`-th percentile, so that the off-resonance
/// baseline sits near one.
pub fn renormalize(map: &mut PLMap, p: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::invalid(format!("percentile must be in [0, 100], got {p}")));
    }
    let scale = percentile(&map.values, p);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!(
            "percentile {p} of the map is {scale}; cannot renormalize"
        )));
    }
    for v in map.values.iter_mut() {
        *v /= scale;
    }
    map.metadata.insert("renormalized_by_percentile".into(), format!("{p}"));
    Ok(())
}

/// Noiseless map plus i.i.d. Gaussian noise from a seeded ChaCha8 stream.
pub fn synthesize_pl_map(params: &ModelParams, grid: &MeasurementGrid, sigma_noise: f64, seed: u64) -> Result<PLMap> {
    if !(sigma_noise >= 0.0 && sigma_noise.is_finite()) {
        return Err(Error::invalid(format!("sigma_noise must be >= 0, got {sigma_noise}")));
    }
    params.lineshape.validate()?;
    let mut map = pl_map(grid, params);
    if sigma_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma_noise).map_err(|e| Error::invalid(e.to_string()))?;
        for v in map.values.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    map.metadata.insert("noise_sigma".into(), format!("{sigma_noise:e}"));
    map.metadata.insert("noise_seed".into(), seed.to_string());
    map.metadata.insert("noise_rng".into(), "chacha8".into());
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{ExternalFieldParams, LineshapeConfig};
    use crate::geometry::Orientation;

    fn params() -> ModelParams {
        ModelParams {
            orientation: Orientation::new(4.7587, 0.2342, 0.4775).unwrap(),
            field: ExternalFieldParams::new(1e-3, 2e-3, 0.0).unwrap(),
            lineshape: LineshapeConfig::default(),
        }
    }

    fn small_map() -> PLMap {
        let grid = MeasurementGrid::uniform(-1e-3, 1e-3, 4, 3).unwrap();
        synthesize_pl_map(&params(), &grid, 0.01, 3).unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let map = small_map();
        let text = format_pl_map(&map).unwrap();
        let back = parse_pl_map(&text, Path::new("m.csv")).unwrap();
        assert_eq!(back, map);
        assert_eq!(text.lines().count(), 1 + map.metadata.len() + 1 + 12);
    }

    #[test]
    fn missing_point_names_pair() {
        let map = small_map();
        let text = format_pl_map(&map).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let removed = lines.remove(lines.len() - 5);
        let e = parse_pl_map(&lines.join("\n"), Path::new("m.csv")).unwrap_err();
        let fields: Vec<f64> = removed.split(',').map(|f| f.parse().unwrap()).collect();
        match e {
            Error::MissingGridPoint { phi, bias, .. } => {
                assert_eq!(phi, fields[0]);
                assert_eq!(bias, fields[1]);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_and_order_errors() {
        let text = "# nv-plmap v1\nphi_rad,b_bias_T,pl\n0,0,1\n0,1,1\n0,0,1\n";
        match parse_pl_map(text, Path::new("d")).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 5),
            e => panic!("{e}"),
        }
        let text = "# nv-plmap v1\nphi_rad,b_bias_T,pl\n0,1,1\n0,0,1\n";
        match parse_pl_map(text, Path::new("d")).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("non-monotone"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn version_and_header_errors() {
        let e = parse_pl_map("# nv-plmap v2\n", Path::new("v")).unwrap_err();
        assert!(e.to_string().contains("version"));
        let e = parse_pl_map("# nv-plmap v1\nphi,b,pl\n", Path::new("v")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_pl_map("# nv-plmap v1\nphi_rad,b_bias_T,pl\n0,x,1\n", Path::new("v")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn synth_noise_properties() {
        let grid = MeasurementGrid::uniform(-4e-3, 4e-3, 154, 72).unwrap();
        let clean = pl_map(&grid, &params());
        let a = synthesize_pl_map(&params(), &grid, 0.0018, 9).unwrap();
        let b = synthesize_pl_map(&params(), &grid, 0.0018, 9).unwrap();
        assert_eq!(a.values, b.values);
        let n = a.values.len() as f64;
        let d: Vec<f64> = a.values.iter().zip(&clean.values).map(|(x, y)| x - y).collect();
        let m = d.iter().sum::<f64>() / n;
        let s = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((s / 0.0018 - 1.0).abs() < 0.03);
        let z = synthesize_pl_map(&params(), &grid, 0.0, 9).unwrap();
        assert_eq!(z.values, clean.values);
    }

    #[test]
    fn renormalize_percentile() {
        let mut m = small_map();
        for v in m.values.iter_mut() {
            *v *= 250.0;
        }
        renormalize(&mut m, 100.0).unwrap();
        let max = m.values.iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - 1.0).abs() < 1e-15);
        assert!(renormalize(&mut m, 101.0).is_err());
    }
}
