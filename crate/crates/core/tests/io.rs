use std::path::Path;

use nvmag::data_io::{
    format_pl_map, parse_config, parse_pl_map, read_config, read_pl_map, read_results, synthesize_pl_map, write_pl_map,
    write_results, ResultsDocument, RunConfig,
};
use nvmag::forward::{ExternalFieldParams, LineshapeConfig, MeasurementGrid, ModelParams};
use nvmag::geometry::Orientation;
use nvmag::Error;

fn params() -> ModelParams {
    ModelParams {
        orientation: Orientation::new(1.0, 0.4, 0.3).unwrap(),
        field: ExternalFieldParams::new(0.5e-3, 1e-3, 0.2).unwrap(),
        lineshape: LineshapeConfig::default(),
    }
}

#[test]
fn noisy_map_round_trips_bit_exactly() {
    let grid = MeasurementGrid::uniform(-3e-3, 3e-3, 41, 12).unwrap();
    let map = synthesize_pl_map(&params(), &grid, 0.0018, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.csv");
    write_pl_map(&p, &map).unwrap();
    let back = read_pl_map(&p).unwrap();
    assert_eq!(back.values, map.values);
    assert_eq!(back.grid, map.grid);
    assert_eq!(back.metadata.get("noise_seed").map(String::as_str), Some("9"));
}

#[test]
fn same_seed_same_noise() {
    let grid = MeasurementGrid::uniform(-3e-3, 3e-3, 11, 4).unwrap();
    let a = synthesize_pl_map(&params(), &grid, 0.01, 5).unwrap();
    let b = synthesize_pl_map(&params(), &grid, 0.01, 5).unwrap();
    let c = synthesize_pl_map(&params(), &grid, 0.01, 6).unwrap();
    assert_eq!(a.values, b.values);
    assert_ne!(a.values, c.values);
}

fn small_text() -> String {
    let grid = MeasurementGrid::uniform(0.0, 1e-3, 3, 2).unwrap();
    let map = synthesize_pl_map(&params(), &grid, 0.0, 0).unwrap();
    format_pl_map(&map).unwrap()
}

fn data_lines(text: &str) -> (Vec<String>, Vec<String>) {
    let (head, body): (Vec<_>, Vec<_>) = text
        .lines()
        .map(String::from)
        .partition(|l| l.starts_with('#') || l.starts_with("phi"));
    (head, body)
}

#[test]
fn malformed_maps_are_rejected() {
    let text = small_text();
    let (head, body) = data_lines(&text);
    let p = Path::new("t.csv");

    let mut dup = body.clone();
    dup[1] = dup[0].clone();
    let t = [head.clone(), dup].concat().join("\n");
    assert!(matches!(
        parse_pl_map(&t, p),
        Err(Error::Parse { .. }) | Err(Error::MissingGridPoint { .. })
    ));

    let mut missing = body.clone();
    missing.remove(4);
    let t = [head.clone(), missing].concat().join("\n");
    assert!(matches!(parse_pl_map(&t, p), Err(Error::MissingGridPoint { .. })));

    let mut swapped = body.clone();
    swapped.swap(0, 3);
    let t = [head.clone(), swapped].concat().join("\n");
    assert!(parse_pl_map(&t, p).is_err());

    let mut bad = body.clone();
    bad[2] = bad[2].replace(',', ";");
    let t = [head.clone(), bad].concat().join("\n");
    assert!(matches!(parse_pl_map(&t, p), Err(Error::Parse { .. })));

    assert!(parse_pl_map(&text.replacen("v1", "v9", 1), p).is_err());
}

#[test]
fn config_errors_name_the_key() {
    let unknown = parse_config("[grid]\nbias_min = \"-1 mT\"\nbias_max = \"1 mT\"\nn_bias = 5\nn_phi = 4\nspeed = 3\n");
    assert!(matches!(unknown, Err(Error::UnknownKey(k)) if k.contains("speed")));

    let unit = parse_config("[field]\nb_perp = \"2 rad\"\n");
    assert!(matches!(unit, Err(Error::UnitViolation { key, .. }) if key == "field.b_perp"));

    let missing = parse_config("[grid]\nbias_min = \"-1 mT\"\nn_bias = 5\nn_phi = 4\n");
    assert!(matches!(missing, Err(Error::MissingKey(k)) if k.contains("bias_max")));

    let bad = parse_config("[lineshape]\ncontrast = 1.5\n");
    assert!(bad.is_err());
    assert!(bad.unwrap_err().is_validation());
}

#[test]
fn config_units_convert_to_si() {
    let cfg = parse_config(
        "[field]\nb_z = \"10 G\"\nb_perp = \"800 uT\"\nphi0 = \"90 deg\"\n[noise]\nsigma_phi = \"1 deg\"\n",
    )
    .unwrap();
    let f = cfg.field.unwrap();
    assert!((f.b_z - 1e-3).abs() < 1e-15);
    assert!((f.b_perp - 0.8e-3).abs() < 1e-15);
    assert!((f.phi0 - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    assert!((cfg.noise.sigma_phi - 1f64.to_radians()).abs() < 1e-15);
}

#[test]
fn data_path_resolves_against_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.toml");
    std::fs::write(&p, "[data]\npath = \"map.csv\"\n").unwrap();
    let cfg = read_config(&p).unwrap();
    assert_eq!(cfg.data.path.unwrap(), dir.path().join("map.csv"));
}

#[test]
fn results_document_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let doc = ResultsDocument::new("test", RunConfig::default(), Some(3));
    write_results(&p, &doc).unwrap();
    assert_eq!(read_results(&p).unwrap(), doc);
    std::fs::write(
        &p,
        std::fs::read_to_string(&p)
            .unwrap()
            .replace("nvmag-results v1", "other"),
    )
    .unwrap();
    assert!(read_results(&p).is_err());
}
