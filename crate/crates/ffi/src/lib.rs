//! C ABI for `nvmag`.
//!
//! Maps and posteriors are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every entry point returns an
//! [`NvmagStatus`]; on failure the message is available from
//! [`nvmag_last_error_message`] on the same thread. Panics are caught and
//! reported as [`NvmagStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nvmag::data_io::{read_pl_map, write_pl_map};
use nvmag::forward::{pl_map, pl_value, ExternalFieldParams, LineshapeConfig, MeasurementGrid, ModelParams, PLMap};
use nvmag::geometry::{Orientation, RotationMatrix};
use nvmag::inference::{infer_field, infer_orientation, InferenceOptions, NoiseModel, ParamSpace, Posterior};
use nvmag::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvmagStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Io = 4,
    Numerical = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// External field: axial component and in-plane magnitude in tesla, in-plane
/// azimuth in radians.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NvmagField {
    pub b_z: f64,
    pub b_perp: f64,
    pub phi0: f64,
}

/// Crystal orientation angles in radians.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NvmagOrientation {
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,
}

/// Lorentzian half width (tesla) and contrast; default weights.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NvmagLineshape {
    pub gamma: f64,
    pub contrast: f64,
}

/// PL noise (dimensionless), bias uncertainty (tesla), angle uncertainty (radians).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NvmagNoise {
    pub sigma_noise: f64,
    pub sigma_bias: f64,
    pub sigma_phi: f64,
}

/// Opaque PL map.
pub struct NvmagPlMap(PLMap);

/// Opaque posterior.
pub struct NvmagPosterior(Posterior);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> NvmagStatus {
    match e {
        Error::Parse { .. } | Error::MissingGridPoint { .. } | Error::Serde(_) => NvmagStatus::Parse,
        Error::Io { .. } => NvmagStatus::Io,
        Error::Numerical(_) => NvmagStatus::Numerical,
        _ => NvmagStatus::InvalidInput,
    }
}

struct Fail(NvmagStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NvmagStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NvmagStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NvmagStatus::Ok
        }
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {m}"));
            NvmagStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(NvmagStatus::InvalidInput, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn field_of(f: &NvmagField) -> Result<ExternalFieldParams, Fail> {
    Ok(ExternalFieldParams::new(f.b_z, f.b_perp, f.phi0)?)
}

fn orientation_of(o: &NvmagOrientation) -> Result<Orientation, Fail> {
    Ok(Orientation::new(o.alpha, o.beta, o.zeta)?)
}

fn lineshape_of(l: &NvmagLineshape) -> Result<LineshapeConfig, Fail> {
    Ok(LineshapeConfig::new(l.gamma, l.contrast)?)
}

fn noise_of(n: &NvmagNoise) -> Result<NoiseModel, Fail> {
    Ok(NoiseModel::new(n.sigma_noise, n.sigma_bias, n.sigma_phi)?)
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length in bytes excluding
/// the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nvmag_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nvmag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Normalized PL at one bias field and rotation angle.
///
/// # Safety
/// Pointer arguments must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn nvmag_pl_value(
    b_bias: f64,
    phi: f64,
    orientation: *const NvmagOrientation,
    field: *const NvmagField,
    lineshape: *const NvmagLineshape,
    out: *mut f64,
) -> NvmagStatus {
    guard(|| {
        let params = ModelParams {
            orientation: orientation_of(deref(orientation, "orientation")?)?,
            field: field_of(deref(field, "field")?)?,
            lineshape: lineshape_of(deref(lineshape, "lineshape")?)?,
        };
        if out.is_null() {
            return Err(null("out"));
        }
        *out = pl_value(b_bias, phi, &params);
        Ok(())
    })
}

/// Noise-free PL map on a uniform grid: `n_bias` points spanning
/// `[bias_min, bias_max]` tesla and `n_phi` angles over one turn.
///
/// # Safety
/// Pointer arguments must be null or valid; `*out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn nvmag_simulate(
    bias_min: f64,
    bias_max: f64,
    n_bias: usize,
    n_phi: usize,
    orientation: *const NvmagOrientation,
    field: *const NvmagField,
    lineshape: *const NvmagLineshape,
    out: *mut *mut NvmagPlMap,
) -> NvmagStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = ModelParams {
            orientation: orientation_of(deref(orientation, "orientation")?)?,
            field: field_of(deref(field, "field")?)?,
            lineshape: lineshape_of(deref(lineshape, "lineshape")?)?,
        };
        let grid = MeasurementGrid::uniform(bias_min, bias_max, n_bias, n_phi)?;
        *out = Box::into_raw(Box::new(NvmagPlMap(pl_map(&grid, &params))));
        Ok(())
    })
}

/// Reads a map file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `*out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn nvmag_plmap_read(path: *const c_char, out: *mut *mut NvmagPlMap) -> NvmagStatus {
    guard(|| {
        let p = path_arg(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(NvmagPlMap(read_pl_map(&p)?)));
        Ok(())
    })
}

/// # Safety
/// `map` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nvmag_plmap_write(map: *const NvmagPlMap, path: *const c_char) -> NvmagStatus {
    guard(|| {
        let m = deref(map, "map")?;
        let p = path_arg(path)?;
        write_pl_map(&p, &m.0)?;
        Ok(())
    })
}

/// # Safety
/// `map` must be a live handle; the outputs must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn nvmag_plmap_dims(
    map: *const NvmagPlMap,
    n_bias: *mut usize,
    n_phi: *mut usize,
) -> NvmagStatus {
    guard(|| {
        let m = deref(map, "map")?;
        if n_bias.is_null() || n_phi.is_null() {
            return Err(null("output"));
        }
        *n_bias = m.0.grid.n_bias();
        *n_phi = m.0.grid.n_phi();
        Ok(())
    })
}

/// Copies the PL values, angle-major (`values[i_phi * n_bias + i_bias]`),
/// into `buf`, which must hold `n_bias * n_phi` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nvmag_plmap_values(map: *const NvmagPlMap, buf: *mut f64, len: usize) -> NvmagStatus {
    guard(|| {
        let m = deref(map, "map")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let g = &m.0.grid;
        if len < g.len() {
            return Err(Fail(
                NvmagStatus::OutOfRange,
                format!("buffer holds {len} values, map has {}", g.len()),
            ));
        }
        for ip in 0..g.n_phi() {
            for ib in 0..g.n_bias() {
                *buf.add(ip * g.n_bias() + ib) = m.0.get(ib, ip);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nvmag_plmap_free(map: *mut NvmagPlMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Orientation posterior over the default angle grid for a known field.
///
/// # Safety
/// Pointer arguments must be null or valid; `*out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn nvmag_infer_orientation(
    map: *const NvmagPlMap,
    field: *const NvmagField,
    lineshape: *const NvmagLineshape,
    noise: *const NvmagNoise,
    out: *mut *mut NvmagPosterior,
) -> NvmagStatus {
    guard(|| {
        let m = deref(map, "map")?;
        let f = field_of(deref(field, "field")?)?;
        let l = lineshape_of(deref(lineshape, "lineshape")?)?;
        let n = noise_of(deref(noise, "noise")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let post = infer_orientation(
            &m.0,
            &f,
            &l,
            &n,
            &ParamSpace::orientation_default(),
            &InferenceOptions::default(),
        )?;
        *out = Box::into_raw(Box::new(NvmagPosterior(post)));
        Ok(())
    })
}

/// Field posterior over the default field grid for a known orientation.
///
/// # Safety
/// Pointer arguments must be null or valid; `*out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn nvmag_infer_field(
    map: *const NvmagPlMap,
    orientation: *const NvmagOrientation,
    lineshape: *const NvmagLineshape,
    noise: *const NvmagNoise,
    out: *mut *mut NvmagPosterior,
) -> NvmagStatus {
    guard(|| {
        let m = deref(map, "map")?;
        let o: RotationMatrix = orientation_of(deref(orientation, "orientation")?)?.matrix;
        let l = lineshape_of(deref(lineshape, "lineshape")?)?;
        let n = noise_of(deref(noise, "noise")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let post = infer_field(
            &m.0,
            &o,
            &l,
            &n,
            &ParamSpace::field_default(),
            &InferenceOptions::default(),
        )?;
        *out = Box::into_raw(Box::new(NvmagPosterior(post)));
        Ok(())
    })
}

/// Number of posterior modes.
///
/// # Safety
/// `post` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nvmag_posterior_n_modes(post: *const NvmagPosterior, out: *mut usize) -> NvmagStatus {
    guard(|| {
        let p = deref(post, "posterior")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p.0.modes.len();
        Ok(())
    })
}

/// MAP point, marginal standard deviations and log evidence. Any output
/// pointer may be null; arrays hold three values in parameter order.
///
/// # Safety
/// `post` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvmag_posterior_summary(
    post: *const NvmagPosterior,
    map_estimate: *mut f64,
    std: *mut f64,
    log_evidence: *mut f64,
) -> NvmagStatus {
    guard(|| {
        let p = &deref(post, "posterior")?.0;
        if !map_estimate.is_null() {
            ptr::copy_nonoverlapping(p.map_estimate.as_ptr(), map_estimate, 3);
        }
        if !std.is_null() {
            ptr::copy_nonoverlapping(p.std.as_ptr(), std, 3);
        }
        if !log_evidence.is_null() {
            *log_evidence = p.log_evidence;
        }
        Ok(())
    })
}

/// Location, width and probability mass of mode `index`.
///
/// # Safety
/// `post` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvmag_posterior_mode(
    post: *const NvmagPosterior,
    index: usize,
    point: *mut f64,
    std: *mut f64,
    mass_fraction: *mut f64,
) -> NvmagStatus {
    guard(|| {
        let p = &deref(post, "posterior")?.0;
        let m = p.modes.get(index).ok_or_else(|| {
            Fail(
                NvmagStatus::OutOfRange,
                format!("mode {index} requested, posterior has {}", p.modes.len()),
            )
        })?;
        if !point.is_null() {
            ptr::copy_nonoverlapping(m.point.as_ptr(), point, 3);
        }
        if !std.is_null() {
            ptr::copy_nonoverlapping(m.std.as_ptr(), std, 3);
        }
        if !mass_fraction.is_null() {
            *mass_fraction = m.mass_fraction;
        }
        Ok(())
    })
}

/// # Safety
/// `post` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nvmag_posterior_free(post: *mut NvmagPosterior) {
    if !post.is_null() {
        drop(Box::from_raw(post));
    }
}
