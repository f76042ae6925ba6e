use std::f64::consts::TAU;

use nvmag::forward::{pl_map, ExternalFieldParams, LineshapeConfig, MeasurementGrid, ModelParams, PLMap};
use nvmag::geometry::{Orientation, RotationMatrix, Vec3};
use nvmag::inference::{angular_distance, infer_field, InferenceOptions, NoiseModel, ParamSpace, Posterior};

fn run(o: RotationMatrix, f: ExternalFieldParams, grid: &MeasurementGrid) -> (PLMap, Posterior) {
    let params = ModelParams {
        orientation: Orientation::from_matrix(&o).unwrap(),
        field: f,
        lineshape: LineshapeConfig::default(),
    };
    let mut p = params;
    p.orientation.matrix = o;
    let map = pl_map(grid, &p);
    let post = infer_field(
        &map,
        &o,
        &LineshapeConfig::default(),
        &NoiseModel::default(),
        &ParamSpace::field(-2e-3, 2e-3, 41, 2e-3, 31, 36).unwrap(),
        &InferenceOptions::default(),
    )
    .unwrap();
    (map, post)
}

#[test]
fn threefold_axis_gives_three_azimuth_modes_and_a_warning() {
    let o = RotationMatrix::from_lab_axes(Vec3::new(-1.0, -1.0, 2.0), Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let grid = MeasurementGrid::uniform(-4e-3, 4e-3, 121, 36).unwrap();
    let f = ExternalFieldParams::new(0.5e-3, 1e-3, 0.4).unwrap();
    let (_, post) = run(o, f, &grid);
    assert_eq!(
        post.modes.len(),
        3,
        "{:?}",
        post.modes.iter().map(|m| m.point).collect::<Vec<_>>()
    );
    let mut phis: Vec<f64> = post.modes.iter().map(|m| m.point[2]).collect();
    phis.sort_by(f64::total_cmp);
    for k in 0..3 {
        let target = (0.4 + k as f64 * TAU / 3.0).rem_euclid(TAU);
        assert!(
            phis.iter().any(|p| angular_distance(*p, target, TAU) < 1e-3),
            "{phis:?}"
        );
    }
    for m in &post.modes {
        assert!((m.mass_fraction - 1.0 / 3.0).abs() < 0.05);
    }
    assert!(
        post.warnings.iter().any(|w| w.contains("[1 1 1]")),
        "{:?}",
        post.warnings
    );
}

#[test]
fn axial_shift_translates_the_posterior() {
    let o = Orientation::new(4.7587, 0.2342, 0.4775).unwrap().matrix;
    let grid = MeasurementGrid::uniform(-4e-3, 4e-3, 161, 24).unwrap();
    let (_, a) = run(o, ExternalFieldParams::new(0.3e-3, 1e-3, 1.0).unwrap(), &grid);
    let (_, b) = run(o, ExternalFieldParams::new(0.8e-3, 1e-3, 1.0).unwrap(), &grid);
    assert!((b.map_estimate[0] - a.map_estimate[0] - 0.5e-3).abs() < 1e-6);
    assert!((b.map_estimate[1] - a.map_estimate[1]).abs() < 1e-6);
    assert!((b.std[0] / a.std[0] - 1.0).abs() < 0.1);
}

#[test]
fn azimuth_shift_rotates_the_posterior() {
    let o = Orientation::new(4.7587, 0.2342, 0.4775).unwrap().matrix;
    let grid = MeasurementGrid::uniform(-4e-3, 4e-3, 121, 36).unwrap();
    let (_, a) = run(o, ExternalFieldParams::new(0.5e-3, 1e-3, 0.5).unwrap(), &grid);
    let (_, b) = run(
        o,
        ExternalFieldParams::new(0.5e-3, 1e-3, 0.5 + TAU / 36.0 * 5.0).unwrap(),
        &grid,
    );
    let d = angular_distance(b.map_estimate[2], a.map_estimate[2] + TAU / 36.0 * 5.0, TAU);
    assert!(d < 1e-5, "{d}");
    assert!((b.map_estimate[1] - a.map_estimate[1]).abs() < 1e-6);
}
