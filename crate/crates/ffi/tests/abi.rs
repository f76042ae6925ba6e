use std::ffi::{c_char, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use nvmag_ffi::*;

const ORIENT: NvmagOrientation = NvmagOrientation {
    alpha: 0.3,
    beta: 0.7,
    zeta: 0.2,
};
const FIELD: NvmagField = NvmagField {
    b_z: 1e-3,
    b_perp: 2e-3,
    phi0: 0.4,
};
const LINE: NvmagLineshape = NvmagLineshape {
    gamma: 1e-4,
    contrast: 0.02,
};

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = unsafe { nvmag_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(n.min(511));
    String::from_utf8(buf).unwrap()
}

fn simulate(n_bias: usize, n_phi: usize) -> *mut NvmagPlMap {
    let mut map = ptr::null_mut();
    let s = unsafe { nvmag_simulate(-6e-3, 6e-3, n_bias, n_phi, &ORIENT, &FIELD, &LINE, &mut map) };
    assert_eq!(s, NvmagStatus::Ok, "{}", last_error());
    map
}

#[test]
fn pl_value_matches_rust_model() {
    let mut v = 0.0;
    let s = unsafe { nvmag_pl_value(1e-4, 0.5, &ORIENT, &FIELD, &LINE, &mut v) };
    assert_eq!(s, NvmagStatus::Ok);
    let params = nvmag::forward::ModelParams {
        orientation: nvmag::geometry::Orientation::new(0.3, 0.7, 0.2).unwrap(),
        field: nvmag::forward::ExternalFieldParams::new(1e-3, 2e-3, 0.4).unwrap(),
        lineshape: nvmag::forward::LineshapeConfig::new(1e-4, 0.02).unwrap(),
    };
    assert_eq!(v, nvmag::forward::pl_value(1e-4, 0.5, &params));
}

#[test]
fn null_and_invalid_arguments_report_status() {
    let mut v = 0.0;
    let s = unsafe { nvmag_pl_value(0.0, 0.0, ptr::null(), &FIELD, &LINE, &mut v) };
    assert_eq!(s, NvmagStatus::NullPointer);
    assert!(last_error().contains("orientation"));

    let bad = NvmagLineshape {
        gamma: -1.0,
        contrast: 0.02,
    };
    let s = unsafe { nvmag_pl_value(0.0, 0.0, &ORIENT, &FIELD, &bad, &mut v) };
    assert_eq!(s, NvmagStatus::InvalidInput);
    assert!(last_error().contains("gamma"));

    let mut map = ptr::null_mut();
    let s = unsafe { nvmag_simulate(1.0, -1.0, 0, 4, &ORIENT, &FIELD, &LINE, &mut map) };
    assert_eq!(s, NvmagStatus::InvalidInput);
    assert!(map.is_null());
}

#[test]
fn error_message_truncates_and_reports_length() {
    let mut v = 0.0;
    unsafe { nvmag_pl_value(0.0, 0.0, ptr::null(), &FIELD, &LINE, &mut v) };
    let full = unsafe { nvmag_last_error_message(ptr::null_mut(), 0) };
    let mut small = [1 as c_char; 4];
    let n = unsafe { nvmag_last_error_message(small.as_mut_ptr(), small.len()) };
    assert_eq!(n, full);
    assert_eq!(small[3], 0);
}

#[test]
fn map_round_trip_through_file() {
    let map = simulate(31, 8);
    let (mut nb, mut np) = (0, 0);
    unsafe { nvmag_plmap_dims(map, &mut nb, &mut np) };
    assert_eq!((nb, np), (31, 8));
    let mut a = vec![0.0; nb * np];
    assert_eq!(
        unsafe { nvmag_plmap_values(map, a.as_mut_ptr(), a.len()) },
        NvmagStatus::Ok
    );
    assert_eq!(
        unsafe { nvmag_plmap_values(map, a.as_mut_ptr(), a.len() - 1) },
        NvmagStatus::OutOfRange
    );

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { nvmag_plmap_write(map, path.as_ptr()) }, NvmagStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { nvmag_plmap_read(path.as_ptr(), &mut back) }, NvmagStatus::Ok);
    let mut b = vec![0.0; nb * np];
    unsafe { nvmag_plmap_values(back, b.as_mut_ptr(), b.len()) };
    assert_eq!(a, b);
    unsafe {
        nvmag_plmap_free(map);
        nvmag_plmap_free(back);
        nvmag_plmap_free(ptr::null_mut());
    }

    let missing = CString::new(dir.path().join("none.csv").to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { nvmag_plmap_read(missing.as_ptr(), &mut m) }, NvmagStatus::Io);
}

#[test]
fn field_inference_recovers_truth() {
    let map = simulate(121, 36);
    let noise = NvmagNoise {
        sigma_noise: 0.0018,
        sigma_bias: 1e-6,
        sigma_phi: 1f64.to_radians(),
    };
    let mut post = ptr::null_mut();
    let s = unsafe { nvmag_infer_field(map, &ORIENT, &LINE, &noise, &mut post) };
    assert_eq!(s, NvmagStatus::Ok, "{}", last_error());
    let mut n = 0;
    unsafe { nvmag_posterior_n_modes(post, &mut n) };
    assert!(n >= 1);
    let (mut map_est, mut std, mut ev) = ([0.0; 3], [0.0; 3], 0.0);
    unsafe { nvmag_posterior_summary(post, map_est.as_mut_ptr(), std.as_mut_ptr(), &mut ev) };
    assert!((map_est[0] - 1e-3).abs() < 5.0 * std[0] + 1e-6);
    assert!((map_est[1] - 2e-3).abs() < 5.0 * std[1] + 1e-6);
    assert!(ev.is_finite());
    let mut mass = 0.0;
    assert_eq!(
        unsafe { nvmag_posterior_mode(post, 0, ptr::null_mut(), ptr::null_mut(), &mut mass) },
        NvmagStatus::Ok
    );
    assert!(mass > 0.0 && mass <= 1.0);
    assert_eq!(
        unsafe { nvmag_posterior_mode(post, n, ptr::null_mut(), ptr::null_mut(), &mut mass) },
        NvmagStatus::OutOfRange
    );
    unsafe {
        nvmag_posterior_free(post);
        nvmag_plmap_free(map);
    }
}

#[test]
fn header_declares_every_entry_point_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/nvmag.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    for line in src.lines() {
        if let Some(rest) = line
            .strip_prefix("pub unsafe extern \"C\" fn ")
            .or(line.strip_prefix("pub extern \"C\" fn "))
        {
            let name = rest.split('(').next().unwrap();
            assert!(header.contains(&format!("{name}(")), "{name} missing from header");
        }
    }
    // A C compiler is optional in the build environment.
    let probe = Command::new("cc").arg("--version").output();
    if probe.is_err() {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("t.c");
    std::fs::write(
        &c,
        "#include \"nvmag.h\"\nint main(void){NvmagField f={0,1e-3,0};(void)f;return NVMAG_STATUS_OK;}\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&c)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
