//! Rotations, NV crystal axes and the 24-element proper octahedral group.
//!
//! Orientations of the diamond relative to the laboratory are written as
//!
//! ```text
//! O = R_[111](-zeta) · R_[1-10](-beta) · R_z(-alpha)
//! ```
//!
//! with the three rotation axes taken as fixed vectors, `(1,1,1)/√3`,
//! `(1,-1,0)/√2` and the lab `z` axis, multiplied in the printed order. `O`
//! maps lab-frame vectors to the sample (crystal) frame.
//!
//! Any `g·O` with `g` in [`symmetry_group`] produces the same PL map, so
//! inference runs over the fundamental domain `alpha ∈ [0, 2π)`,
//! `beta ∈ [0, θc]`, `zeta ∈ [0, 2π/3)`, and [`canonicalize`] lists every
//! representative of an orientation inside it.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angle between `[111]` and a Cartesian axis, `arccos(1/√3)`.
pub const THETA_C: f64 = 0.955_316_618_124_509_3;

/// Upper (exclusive) bound of the `zeta` domain.
pub const ZETA_PERIOD: f64 = TAU / 3.0;

/// Below this polar angle of the lab-frame `[111]` direction the
/// decomposition is gimbal-degenerate; `zeta` is then set to zero.
const GIMBAL_EPS: f64 = 1e-9;

/// Snap tolerance used when folding angles into half-open intervals.
const WRAP_EPS: f64 = 1e-12;

/// Representatives closer than this (per angle) are merged.
const DEDUP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Angle between two vectors, robust near 0 and π.
    pub fn angle_to(self, o: Vec3) -> f64 {
        self.cross(o).norm().atan2(self.dot(o))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// 3×3 rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    /// Builds a matrix from its three columns.
    pub fn from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        RotationMatrix([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    /// Orientation whose lab `x` and `z` axes point along the given crystal
    /// directions. `x_dir` is orthogonalized against `z_dir`.
    pub fn from_lab_axes(x_dir: Vec3, z_dir: Vec3) -> Result<Self> {
        let z = z_dir.normalized();
        let x_raw = x_dir - z * x_dir.dot(z);
        if !z.is_finite() || x_raw.norm() < 1e-9 {
            return Err(Error::invalid(
                "lab x and z directions must be non-zero and non-parallel",
            ));
        }
        let x = x_raw.normalized();
        let y = z.cross(x);
        Ok(RotationMatrix::from_columns(x, y, z))
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        RotationMatrix([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Orthogonal with determinant +1, both to `tol` elementwise.
    pub fn is_rotation(&self, tol: f64) -> bool {
        let p = self.transpose() * *self;
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                if !(p.0[i][j] - e).abs().le(&tol) {
                    return false;
                }
            }
        }
        (self.determinant() - 1.0).abs() <= tol
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let m = &self.0;
        let w = Vec3::new(m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]);
        (0.5 * w.norm()).atan2(0.5 * (self.trace() - 1.0))
    }

    pub fn max_abs_diff(&self, other: &RotationMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        d
    }

    pub fn to_flat(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    pub fn from_flat(a: [f64; 9]) -> Self {
        RotationMatrix([[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]])
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, o: RotationMatrix) -> RotationMatrix {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        RotationMatrix(r)
    }
}

impl Mul<Vec3> for RotationMatrix {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        self.apply(v)
    }
}

/// The four NV axes, `(1,1,1)`, `(1,-1,-1)`, `(-1,1,-1)`, `(-1,-1,1)`, over √3.
pub fn nv_axes() -> [Vec3; 4] {
    let s = 1.0 / 3f64.sqrt();
    [
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ]
}

/// Right-handed rotation by `angle` about a unit `axis` (Rodrigues).
pub fn rotation_about_axis(axis: Vec3, angle: f64) -> Result<RotationMatrix> {
    let n = axis.norm();
    if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "rotation axis must be unit length, got |axis| = {n}"
        )));
    }
    Ok(rodrigues(axis, angle))
}

fn rodrigues(a: Vec3, angle: f64) -> RotationMatrix {
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    RotationMatrix([
        [c + a.x * a.x * t, a.x * a.y * t - a.z * s, a.x * a.z * t + a.y * s],
        [a.y * a.x * t + a.z * s, c + a.y * a.y * t, a.y * a.z * t - a.x * s],
        [a.z * a.x * t - a.y * s, a.z * a.y * t + a.x * s, c + a.z * a.z * t],
    ])
}

/// Rotation about the lab `z` axis.
pub fn rotation_z(angle: f64) -> RotationMatrix {
    let (s, c) = angle.sin_cos();
    RotationMatrix([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
}

fn axis_111() -> Vec3 {
    let s = 1.0 / 3f64.sqrt();
    Vec3::new(s, s, s)
}

fn axis_1m10() -> Vec3 {
    let s = 1.0 / 2f64.sqrt();
    Vec3::new(s, -s, 0.0)
}

/// `R_[111](-zeta) · R_[1-10](-beta) · R_z(-alpha)`.
pub fn orientation_matrix(alpha: f64, beta: f64, zeta: f64) -> RotationMatrix {
    rodrigues(axis_111(), -zeta) * rodrigues(axis_1m10(), -beta) * rotation_z(-alpha)
}

/// Raw Euler triple of a rotation matrix under the orientation
/// parameterization. `beta` lies in `[θc - π, θc]`; `alpha` and `zeta` are
/// not wrapped. When `beta` is within 1e-9 of `θc` the first and last
/// rotations share an axis and `zeta` is set to 0.
pub fn decompose(m: &RotationMatrix) -> (f64, f64, f64) {
    // Lab-frame direction of the crystal [111] axis.
    let v = m.transpose().apply(axis_111());
    let polar = v.x.hypot(v.y).atan2(v.z);
    let beta = THETA_C - polar;
    if polar < GIMBAL_EPS {
        let a = rodrigues(axis_1m10(), beta) * *m;
        let alpha = a.0[0][1].atan2(a.0[0][0]);
        return (alpha, beta, 0.0);
    }
    let alpha = v.y.atan2(v.x) - FRAC_PI_4;
    let q = *m * rotation_z(alpha) * rodrigues(axis_1m10(), beta);
    let w = Vec3::new(q.0[2][1] - q.0[1][2], q.0[0][2] - q.0[2][0], q.0[1][0] - q.0[0][1]) * 0.5;
    let zeta = -(w.dot(axis_111())).atan2(0.5 * (q.trace() - 1.0));
    (alpha, beta, zeta)
}

/// Folds an angle into `[0, period)`, snapping values within 1e-12 of the
/// upper end to zero.
pub fn wrap_angle(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period - WRAP_EPS {
        0.0
    } else {
        r
    }
}

fn circular_diff(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// A crystal orientation inside the fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OrientationAngles", into = "OrientationAngles")]
pub struct Orientation {
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,
    pub matrix: RotationMatrix,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct OrientationAngles {
    alpha: f64,
    beta: f64,
    zeta: f64,
}

impl TryFrom<OrientationAngles> for Orientation {
    type Error = Error;
    fn try_from(a: OrientationAngles) -> Result<Self> {
        Orientation::new(a.alpha, a.beta, a.zeta)
    }
}

impl From<Orientation> for OrientationAngles {
    fn from(o: Orientation) -> Self {
        OrientationAngles {
            alpha: o.alpha,
            beta: o.beta,
            zeta: o.zeta,
        }
    }
}

impl Orientation {
    /// Validates the angles against the fundamental domain.
    pub fn new(alpha: f64, beta: f64, zeta: f64) -> Result<Self> {
        if !(0.0..TAU).contains(&alpha) {
            return Err(Error::invalid(format!("alpha = {alpha} outside [0, 2π)")));
        }
        if !(0.0..=THETA_C).contains(&beta) {
            return Err(Error::invalid(format!("beta = {beta} outside [0, θc]")));
        }
        if !(0.0..ZETA_PERIOD).contains(&zeta) {
            return Err(Error::invalid(format!("zeta = {zeta} outside [0, 2π/3)")));
        }
        Ok(Orientation {
            alpha,
            beta,
            zeta,
            matrix: orientation_matrix(alpha, beta, zeta),
        })
    }

    /// First canonical representative of an arbitrary rotation. The
    /// returned matrix is `g·m` for some symmetry element `g`, which gives
    /// the same PL map as `m`.
    pub fn from_matrix(m: &RotationMatrix) -> Result<Self> {
        if !m.is_rotation(1e-9) {
            return Err(Error::invalid("orientation matrix is not a proper rotation"));
        }
        canonicalize(m)
            .into_iter()
            .next()
            .ok_or_else(|| Error::Numerical("no canonical representative found".into()))
    }

    pub fn angles(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.zeta]
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(alpha = {:.6}, beta = {:.6}, zeta = {:.6}) rad",
            self.alpha, self.beta, self.zeta
        )
    }
}

/// The 24 proper rotations of the cube as signed permutation matrices.
#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    pub elements: Vec<RotationMatrix>,
}

impl SymmetryGroup {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RotationMatrix> {
        self.elements.iter()
    }

    /// Index of an element equal to `m` (entries are exact integers).
    pub fn position(&self, m: &RotationMatrix) -> Option<usize> {
        self.elements.iter().position(|g| g.max_abs_diff(m) < 1e-12)
    }
}

/// Closure of a 4-fold `z` rotation and a 3-fold `[111]` rotation, identity
/// first, breadth-first order.
pub fn symmetry_group() -> SymmetryGroup {
    let c4z = RotationMatrix([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
    let c3 = RotationMatrix([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
    let generators = [c4z, c3];
    let mut elements = vec![RotationMatrix::IDENTITY];
    let mut i = 0;
    while i < elements.len() {
        for g in &generators {
            let p = *g * elements[i];
            if !elements.iter().any(|e| e.max_abs_diff(&p) < 1e-12) {
                elements.push(p);
            }
        }
        i += 1;
    }
    debug_assert_eq!(elements.len(), 24);
    SymmetryGroup { elements }
}

/// Smallest rotation angle between `o1` and any `g·o2`.
pub fn symmetry_distance(o1: &RotationMatrix, o2: &RotationMatrix) -> f64 {
    symmetry_group()
        .iter()
        .map(|g| (*o1 * (*g * *o2).transpose()).angle())
        .fold(f64::INFINITY, f64::min)
}

/// True if some `g·o2` lies within `tol` radians of `o1`.
pub fn orientations_equivalent(o1: &RotationMatrix, o2: &RotationMatrix, tol: f64) -> bool {
    symmetry_distance(o1, o2) < tol
}

/// Every representative of `m` inside the fundamental domain.
pub fn canonicalize(m: &RotationMatrix) -> Vec<Orientation> {
    let mut out: Vec<Orientation> = Vec::new();
    for g in symmetry_group().iter() {
        let (a, b, z) = decompose(&(*g * *m));
        if !(-WRAP_EPS..=THETA_C + WRAP_EPS).contains(&b) {
            continue;
        }
        let beta = b.clamp(0.0, THETA_C);
        let alpha = wrap_angle(a, TAU);
        let zeta = wrap_angle(z, TAU);
        if zeta >= ZETA_PERIOD - WRAP_EPS {
            continue;
        }
        let dup = out.iter().any(|o| {
            circular_diff(o.alpha, alpha, TAU) < DEDUP_EPS
                && (o.beta - beta).abs() < DEDUP_EPS
                && circular_diff(o.zeta, zeta, ZETA_PERIOD) < DEDUP_EPS
        });
        if !dup {
            out.push(Orientation {
                alpha,
                beta,
                zeta,
                matrix: orientation_matrix(alpha, beta, zeta),
            });
        }
    }
    out
}

/// Angle between `v` and the nearest crystal direction of the `<100>`,
/// `<110>` or `<111>` families (sign ignored).
pub fn angle_to_high_symmetry_direction(v: Vec3) -> (f64, [i32; 3]) {
    let mut best = (f64::INFINITY, [0, 0, 0]);
    // Descending order so that, of a direction and its negative, the one
    // with positive leading components is reported.
    for x in (-1i32..=1).rev() {
        for y in (-1i32..=1).rev() {
            for z in (-1i32..=1).rev() {
                if (x, y, z) == (0, 0, 0) {
                    continue;
                }
                let d = Vec3::new(x as f64, y as f64, z as f64);
                let a = v.angle_to(d);
                let a = a.min(PI - a);
                if a < best.0 - 1e-12 {
                    best = (a, [x, y, z]);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut impl Rng) -> RotationMatrix {
        // Uniform unit quaternion.
        let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        let q = [
            (1.0 - u1).sqrt() * (TAU * u2).sin(),
            (1.0 - u1).sqrt() * (TAU * u2).cos(),
            u1.sqrt() * (TAU * u3).sin(),
            u1.sqrt() * (TAU * u3).cos(),
        ];
        let (w, x, y, z) = (q[3], q[0], q[1], q[2]);
        RotationMatrix([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - z * w),
                2.0 * (x * z + y * w),
            ],
            [
                2.0 * (x * y + z * w),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - x * w),
            ],
            [
                2.0 * (x * z - y * w),
                2.0 * (y * z + x * w),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    #[test]
    fn theta_c_constant() {
        assert!((THETA_C - (1.0 / 3f64.sqrt()).acos()).abs() < 1e-15);
        assert!((THETA_C - 2f64.sqrt().atan()).abs() < 1e-15);
    }

    #[test]
    fn nv_axes_tetrahedral() {
        let n = nv_axes();
        let mut sum = Vec3::ZERO;
        for (i, a) in n.iter().enumerate() {
            assert_abs_diff_eq!(a.norm(), 1.0, epsilon = 1e-15);
            sum = sum + *a;
            for b in n.iter().skip(i + 1) {
                assert_abs_diff_eq!(a.dot(*b), -1.0 / 3.0, epsilon = 1e-15);
            }
        }
        assert!(sum.norm() < 1e-15);
    }

    #[test]
    fn rodrigues_examples() {
        let r = rotation_about_axis(Vec3::Z, PI / 2.0).unwrap();
        let v = r * Vec3::X;
        assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y, 1.0, epsilon = 1e-15);
        assert_eq!(rotation_about_axis(Vec3::Z, 0.0).unwrap(), RotationMatrix::IDENTITY);

        let r = rotation_about_axis(axis_111(), TAU / 3.0).unwrap();
        for (from, to) in [(Vec3::X, Vec3::Y), (Vec3::Y, Vec3::Z), (Vec3::Z, Vec3::X)] {
            assert!((r * from - to).norm() < 1e-15);
        }
        let axis = Vec3::new(0.3, -0.5, 0.8).normalized();
        let r = rotation_about_axis(axis, 1.234).unwrap();
        assert!((r * axis - axis).norm() < 1e-15);
        assert!(r.is_rotation(1e-12));
    }

    #[test]
    fn rodrigues_rejects_non_unit_axis() {
        assert!(matches!(
            rotation_about_axis(Vec3::new(1.0, 1.0, 0.0), 0.1),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn orientation_matrix_examples() {
        assert!(orientation_matrix(0.0, 0.0, 0.0).max_abs_diff(&RotationMatrix::IDENTITY) < 1e-15);
        let v = orientation_matrix(1.3, 0.0, 0.0) * Vec3::Z;
        assert!((v - Vec3::Z).norm() < 1e-15);
        let v = orientation_matrix(0.0, THETA_C, 0.0) * Vec3::Z;
        assert_abs_diff_eq!(v.angle_to(Vec3::Z), THETA_C, epsilon = 1e-12);
    }

    #[test]
    fn group_structure() {
        let g = symmetry_group();
        assert_eq!(g.len(), 24);
        assert_eq!(g.elements[0], RotationMatrix::IDENTITY);
        for a in g.iter() {
            assert!((a.determinant() - 1.0).abs() < 1e-15);
            for row in a.0 {
                assert_eq!(row.iter().filter(|x| **x != 0.0).count(), 1);
                assert!(row.iter().all(|x| [-1.0, 0.0, 1.0].contains(x)));
            }
            assert!(g.position(&a.transpose()).is_some());
            for b in g.iter() {
                assert!(g.position(&(*a * *b)).is_some());
            }
        }
    }

    #[test]
    fn group_inventory_by_rotation_angle() {
        // identity, 8 three-fold, 6 quarter turns, 3 Cartesian half turns,
        // 6 half turns about [110]-type axes
        let g = symmetry_group();
        let count = |a: f64| g.iter().filter(|m| (m.angle() - a).abs() < 1e-12).count();
        assert_eq!(count(0.0), 1);
        assert_eq!(count(TAU / 3.0), 8);
        assert_eq!(count(PI / 2.0), 6);
        assert_eq!(count(PI), 9);
    }

    #[test]
    fn group_permutes_nv_axes_up_to_sign() {
        let axes = nv_axes();
        for g in symmetry_group().iter() {
            for n in axes {
                let m = *g * n;
                assert!(axes.iter().any(|a| (m - *a).norm() < 1e-14 || (m + *a).norm() < 1e-14));
            }
        }
    }

    #[test]
    fn equivalence_examples() {
        let o = orientation_matrix(1.0, 0.4, 0.2);
        assert!(orientations_equivalent(&o, &o, 1e-12));
        let o1 = orientation_matrix(4.7587, 0.2342, 0.4775);
        let o2 = orientation_matrix(0.6832, 0.2705, 1.6452);
        assert!(orientations_equivalent(&o1, &o2, 5e-3));
        let rz = rotation_about_axis(Vec3::Z, 0.3).unwrap();
        assert!(!orientations_equivalent(&RotationMatrix::IDENTITY, &rz, 1e-6));
    }

    #[test]
    fn canonicalize_identity_contains_origin() {
        let reps = canonicalize(&RotationMatrix::IDENTITY);
        assert!(reps
            .iter()
            .any(|o| o.alpha == 0.0 && o.beta.abs() < 1e-12 && o.zeta == 0.0));
    }

    #[test]
    fn canonicalize_reported_pair() {
        let reps = canonicalize(&orientation_matrix(4.7587, 0.2342, 0.4775));
        for target in [[4.7587, 0.2342, 0.4775], [0.6832, 0.2705, 1.6452]] {
            assert!(
                reps.iter().any(|o| {
                    (o.alpha - target[0]).abs() < 5e-3
                        && (o.beta - target[1]).abs() < 5e-3
                        && (o.zeta - target[2]).abs() < 5e-3
                }),
                "{target:?} missing from {reps:?}"
            );
        }
    }

    #[test]
    fn canonicalize_random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let group = symmetry_group();
        for _ in 0..1000 {
            let m = random_rotation(&mut rng);
            let reps = canonicalize(&m);
            assert!(!reps.is_empty());
            for o in &reps {
                assert!((0.0..TAU).contains(&o.alpha));
                assert!((0.0..=THETA_C).contains(&o.beta));
                assert!((0.0..ZETA_PERIOD).contains(&o.zeta));
                let rec = orientation_matrix(o.alpha, o.beta, o.zeta);
                let best = group
                    .iter()
                    .map(|g| rec.max_abs_diff(&(*g * m)))
                    .fold(f64::INFINITY, f64::min);
                assert!(best < 1e-9, "recomposition off by {best}");
            }
        }
    }

    #[test]
    fn canonicalize_is_idempotent_on_representatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let reps = canonicalize(&random_rotation(&mut rng));
            for o in &reps {
                let again = canonicalize(&o.matrix);
                assert_eq!(again.len(), reps.len());
                for a in &again {
                    assert!(reps.iter().any(|r| {
                        circular_diff(r.alpha, a.alpha, TAU) < 1e-9
                            && (r.beta - a.beta).abs() < 1e-9
                            && circular_diff(r.zeta, a.zeta, ZETA_PERIOD) < 1e-9
                    }));
                }
            }
        }
    }

    #[test]
    fn gimbal_pole_folds_zeta() {
        let m = orientation_matrix(0.7, THETA_C, 0.4);
        let (a, b, z) = decompose(&m);
        assert_eq!(z, 0.0);
        assert_abs_diff_eq!(b, THETA_C, epsilon = 1e-9);
        assert!(orientation_matrix(a, b, z).max_abs_diff(&m) < 1e-9);
    }

    #[test]
    fn decompose_round_trip_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let alpha = rng.gen_range(1e-3..TAU - 1e-3);
            let beta = rng.gen_range(1e-3..THETA_C - 1e-3);
            let zeta = rng.gen_range(1e-3..ZETA_PERIOD - 1e-3);
            let (a, b, z) = decompose(&orientation_matrix(alpha, beta, zeta));
            assert!(circular_diff(a, alpha, TAU) < 1e-9);
            assert_abs_diff_eq!(b, beta, epsilon = 1e-9);
            assert!(circular_diff(z, zeta, TAU) < 1e-9);
        }
    }

    #[test]
    fn from_lab_axes_maps_z() {
        let m = RotationMatrix::from_lab_axes(Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 1.0, 0.0)).unwrap();
        assert!(m.is_rotation(1e-12));
        assert!((m * Vec3::Z - Vec3::new(1.0, 1.0, 0.0).normalized()).norm() < 1e-15);
        assert!(RotationMatrix::from_lab_axes(Vec3::Z, Vec3::Z).is_err());
    }

    #[test]
    fn orientation_domain_validation() {
        assert!(Orientation::new(TAU, 0.1, 0.1).is_err());
        assert!(Orientation::new(0.1, THETA_C + 1e-6, 0.1).is_err());
        assert!(Orientation::new(0.1, 0.1, ZETA_PERIOD).is_err());
        let o = Orientation::new(0.1, THETA_C, 0.0).unwrap();
        assert!(o.matrix.max_abs_diff(&orientation_matrix(0.1, THETA_C, 0.0)) < 1e-15);
    }
}
