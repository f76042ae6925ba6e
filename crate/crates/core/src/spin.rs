//! Ground-state spin-1 Hamiltonian of a single NV orientation.
//!
//! Used only to check the geometric resonance planes against exact
//! transition-energy degeneracies; the inference path never diagonalizes.
//! Energies are linear frequencies in Hz.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{nv_axes, Vec3};

pub type Hermitian3 = [[Complex64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinConstants {
    /// Zero-field splitting, Hz.
    pub d: f64,
    /// Electron gyromagnetic ratio, Hz/T.
    pub gamma_e: f64,
}

impl Default for SpinConstants {
    fn default() -> Self {
        SpinConstants {
            d: 2.87e9,
            gamma_e: 28.0e9,
        }
    }
}

/// `0 → -1`-like and `0 → +1`-like transition energies, sorted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionPair {
    pub e_minus: f64,
    pub e_plus: f64,
}

/// `H = D Sz² + γ (b_par Sz + b_perp Sx)` in the basis `{|+1>, |0>, |-1>}`.
pub fn hamiltonian_in_nv_frame(b_parallel: f64, b_perp: f64, c: &SpinConstants) -> Hermitian3 {
    let z = Complex64::new(0.0, 0.0);
    let r = |x: f64| Complex64::new(x, 0.0);
    let zeeman = c.gamma_e * b_parallel;
    let off = c.gamma_e * b_perp / 2f64.sqrt();
    [
        [r(c.d + zeeman), r(off), z],
        [r(off), z, r(off)],
        [z, r(off), r(c.d - zeeman)],
    ]
}

/// Eigenvalues of a Hermitian 3×3 matrix by cyclic complex Jacobi sweeps,
/// sorted ascending.
pub fn hermitian_eigenvalues(h: &Hermitian3) -> [f64; 3] {
    let mut a = *h;
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let off: f64 = a[0][1].norm() + a[0][2].norm() + a[1][2].norm();
        if off <= 1e-17 * scale {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            let mag = apq.norm();
            if mag <= 1e-300 {
                continue;
            }
            let app = a[p][p].re;
            let aqq = a[q][q].re;
            // Unitary J = diag-phase ∘ Givens chosen to zero a[p][q].
            let phase = apq / mag;
            let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
            let (s, c) = theta.sin_cos();
            // Columns: a <- a J, rows: a <- J^H a, where
            // J[p][p] = c, J[p][q] = s·phase, J[q][p] = -s·conj(phase), J[q][q] = c.
            let jpq = phase * s;
            let jqp = -phase.conj() * s;
            for row in a.iter_mut() {
                let xp = row[p];
                let xq = row[q];
                row[p] = xp * c + xq * jqp;
                row[q] = xp * jpq + xq * c;
            }
            for k in 0..3 {
                let xp = a[p][k];
                let xq = a[q][k];
                a[p][k] = xp * c + xq * jqp.conj();
                a[q][k] = xp * jpq.conj() + xq * c;
            }
            a[p][q] = Complex64::new(0.0, 0.0);
            a[q][p] = Complex64::new(0.0, 0.0);
            a[p][p].im = 0.0;
            a[q][q].im = 0.0;
        }
    }
    let mut ev = [a[0][0].re, a[1][1].re, a[2][2].re];
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Transition energies of the NV orientation along `nv_axis` in field `b`.
pub fn transition_energies(b: Vec3, nv_axis: Vec3, c: &SpinConstants) -> Result<TransitionPair> {
    if c.gamma_e * b.norm() >= 0.3 * c.d {
        return Err(Error::OutOfRegime(format!(
            "γ_e·|B| = {:.3e} Hz is not below 0.3·D",
            c.gamma_e * b.norm()
        )));
    }
    let b_par = b.dot(nv_axis);
    let b_perp = (b - nv_axis * b_par).norm();
    let ev = hermitian_eigenvalues(&hamiltonian_in_nv_frame(b_par, b_perp, c));
    Ok(TransitionPair {
        e_minus: ev[1] - ev[0],
        e_plus: ev[2] - ev[0],
    })
}

/// True when orientations `i` and `j` (0-based into [`nv_axes`]) share both
/// transition energies within `tol` Hz.
pub fn verify_resonance(b: Vec3, i: usize, j: usize, tol: f64, c: &SpinConstants) -> Result<bool> {
    if i == j || i > 3 || j > 3 {
        return Err(Error::invalid(format!("invalid orientation pair ({i}, {j})")));
    }
    let axes = nv_axes();
    let a = transition_energies(b, axes[i], c)?;
    let bb = transition_energies(b, axes[j], c)?;
    Ok((a.e_minus - bb.e_minus).abs() <= tol && (a.e_plus - bb.e_plus).abs() <= tol)
}

/// Orientation pairs made degenerate by each resonance plane, in the order of
/// [`crate::forward::DELTA_ROWS`].
pub const PLANE_PAIRS: [&[(usize, usize)]; 9] = [
    &[(1, 2)],         // Bx = By
    &[(0, 3)],         // Bx = -By
    &[(1, 3)],         // Bx = Bz
    &[(0, 2)],         // Bx = -Bz
    &[(2, 3)],         // By = Bz
    &[(0, 1)],         // By = -Bz
    &[(0, 1), (2, 3)], // Bx = 0
    &[(0, 2), (1, 3)], // By = 0
    &[(0, 3), (1, 2)], // Bz = 0
];

pub const ALL_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Unit normal of resonance plane `k`.
pub fn plane_normal(k: usize) -> Vec3 {
    Vec3::from_array(crate::forward::DELTA_ROWS[k]).normalized()
}

/// Smallest distance from `b` to any of the nine planes, tesla.
pub fn distance_to_planes(b: Vec3) -> f64 {
    (0..9)
        .map(|k| b.dot(plane_normal(k)).abs())
        .fold(f64::INFINITY, f64::min)
}

fn random_in_ball(rng: &mut impl Rng, radius: f64) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if v.norm() <= 1.0 {
            return v * radius;
        }
    }
}

/// Field in plane `k`, exactly satisfying its linear relation.
fn project_to_plane(v: Vec3, k: usize) -> Vec3 {
    let (x, y, z) = (v.x, v.y, v.z);
    match k {
        0 => {
            let m = 0.5 * (x + y);
            Vec3::new(m, m, z)
        }
        1 => {
            let m = 0.5 * (x - y);
            Vec3::new(m, -m, z)
        }
        2 => {
            let m = 0.5 * (x + z);
            Vec3::new(m, y, m)
        }
        3 => {
            let m = 0.5 * (x - z);
            Vec3::new(m, y, -m)
        }
        4 => {
            let m = 0.5 * (y + z);
            Vec3::new(x, m, m)
        }
        5 => {
            let m = 0.5 * (y - z);
            Vec3::new(x, m, -m)
        }
        6 => Vec3::new(0.0, y, z),
        7 => Vec3::new(x, 0.0, z),
        _ => Vec3::new(x, y, 0.0),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaneSweep {
    pub plane: usize,
    pub trials: usize,
    pub passed: usize,
    pub max_mismatch_hz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub planes: Vec<PlaneSweep>,
    pub generic_trials: usize,
    pub generic_passed: usize,
    pub min_generic_gap_hz: f64,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.planes.iter().all(|p| p.passed == p.trials) && self.generic_passed == self.generic_trials
    }

    pub fn total_trials(&self) -> usize {
        self.planes.iter().map(|p| p.trials).sum::<usize>() + self.generic_trials
    }

    pub fn total_passed(&self) -> usize {
        self.planes.iter().map(|p| p.passed).sum::<usize>() + self.generic_passed
    }
}

fn pair_mismatch(b: Vec3, i: usize, j: usize, c: &SpinConstants) -> Result<f64> {
    let axes = nv_axes();
    let a = transition_energies(b, axes[i], c)?;
    let d = transition_energies(b, axes[j], c)?;
    Ok((a.e_minus - d.e_minus).abs().max((a.e_plus - d.e_plus).abs()))
}

/// Plane ↔ degeneracy sweep.
///
/// For every plane, `trials` random fields with `|B| <= max_field` are
/// forced onto the plane; the predicted pairs must agree within
/// `plane_tol_hz`. Then `trials` generic fields at least `min_plane_distance`
/// from every plane must show no pair agreeing within `generic_tol_hz`.
pub fn sweep_planes(
    seed: u64,
    trials: usize,
    max_field: f64,
    min_plane_distance: f64,
    plane_tol_hz: f64,
    generic_tol_hz: f64,
    c: &SpinConstants,
) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planes = Vec::with_capacity(9);
    for (k, pairs) in PLANE_PAIRS.iter().enumerate() {
        let mut passed = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let b = project_to_plane(random_in_ball(&mut rng, max_field), k);
            let mut ok = true;
            for &(i, j) in pairs.iter() {
                let m = pair_mismatch(b, i, j, c)?;
                worst = worst.max(m);
                ok &= m <= plane_tol_hz;
            }
            passed += ok as usize;
        }
        planes.push(PlaneSweep {
            plane: k,
            trials,
            passed,
            max_mismatch_hz: worst,
        });
    }
    let mut generic_passed = 0;
    let mut min_gap = f64::INFINITY;
    let mut drawn = 0;
    while drawn < trials {
        let b = random_in_ball(&mut rng, max_field);
        if distance_to_planes(b) < min_plane_distance {
            continue;
        }
        drawn += 1;
        let mut ok = true;
        for &(i, j) in ALL_PAIRS.iter() {
            let m = pair_mismatch(b, i, j, c)?;
            min_gap = min_gap.min(m);
            ok &= m > generic_tol_hz;
        }
        generic_passed += ok as usize;
    }
    Ok(OracleReport {
        seed,
        planes,
        generic_trials: trials,
        generic_passed,
        min_generic_gap_hz: min_gap,
    })
}

/// Sweep at the standard settings: `|B| <= 5 mT`, 1 Hz on planes, generic
/// fields at least 10 μT away and separated by more than `γ_e·1 μT`.
pub fn default_sweep(seed: u64, trials: usize) -> Result<OracleReport> {
    let c = SpinConstants::default();
    sweep_planes(seed, trials, 5e-3, 10e-6, 1.0, c.gamma_e * 1e-6, &c)
}
