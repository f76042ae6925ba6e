//! Coarse grid evaluation of the log-likelihood.
//!
//! Two of the three parameters in each mode act on the data as pure shifts:
//! in orientation mode `alpha` shifts the rotation angle, in field mode `b_z`
//! shifts the bias and `phi0` shifts the angle. When the data and those axes
//! sit on a common lattice, every shift is evaluated at once by FFT
//! cross-correlation of the data against per-base-parameter model tables.
//! Otherwise each grid node is evaluated directly.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::space::InferenceMode;
use super::Problem;

/// Log-likelihood on the coarse grid, flattened as `(i0 * n1 + i1) * n2 + i2`.
#[derive(Debug, Clone)]
pub(crate) struct CoarseScan {
    pub axes: [Vec<f64>; 3],
    pub ll: Vec<f64>,
    pub used_fft: bool,
}

impl CoarseScan {
    pub(crate) fn dims(&self) -> [usize; 3] {
        [self.axes[0].len(), self.axes[1].len(), self.axes[2].len()]
    }

    pub(crate) fn flat(&self, i: [usize; 3]) -> usize {
        let d = self.dims();
        (i[0] * d[1] + i[1]) * d[2] + i[2]
    }

    pub(crate) fn unflat(&self, f: usize) -> [usize; 3] {
        let d = self.dims();
        [f / (d[1] * d[2]), (f / d[2]) % d[1], f % d[2]]
    }

    pub(crate) fn point(&self, i: [usize; 3]) -> [f64; 3] {
        [self.axes[0][i[0]], self.axes[1][i[1]], self.axes[2][i[2]]]
    }

    pub(crate) fn max_ll(&self) -> f64 {
        self.ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn coarse_scan(pr: &Problem<'_>, allow_fft: bool) -> CoarseScan {
    if allow_fft {
        if let Some(s) = fft_scan(pr) {
            return s;
        }
    }
    direct_scan(pr)
}

pub(crate) fn direct_scan(pr: &Problem<'_>) -> CoarseScan {
    let axes = [
        pr.space.axes[0].values(),
        pr.space.axes[1].values(),
        pr.space.axes[2].values(),
    ];
    let (n1, n2) = (axes[1].len(), axes[2].len());
    let total = axes[0].len() * n1 * n2;
    let ll = (0..total)
        .into_par_iter()
        .map(|f| {
            let p = [axes[0][f / (n1 * n2)], axes[1][(f / n2) % n1], axes[2][f % n2]];
            pr.ll(&p)
        })
        .collect();
    CoarseScan {
        axes,
        ll,
        used_fft: false,
    }
}

fn near_integer(x: f64, tol: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() <= tol).then_some(r as i64)
}

struct PhiLattice {
    start: f64,
    dphi: f64,
    l: usize,
    /// Lattice index of each data column (before reduction mod `l`).
    column: Vec<i64>,
    /// Lattice index of the shift axis lower bound.
    k0: i64,
    /// Lattice stride between adjacent shift-axis nodes.
    stride: usize,
}

fn phi_lattice(pr: &Problem<'_>, axis: usize) -> Option<PhiLattice> {
    let ax = &pr.space.axes[axis];
    if (ax.span() - TAU).abs() > 1e-12 {
        return None;
    }
    let phis = &pr.data.grid.phi_values;
    let cols: Vec<usize> = (0..phis.len()).filter(|&c| pr.mask.is_none_or(|m| m[c])).collect();
    let start = phis[cols[0]];
    let n = ax.resolution;
    for r in 1..=16usize {
        let l = n * r;
        if l > 8192 {
            break;
        }
        let dphi = TAU / l as f64;
        let column: Option<Vec<i64>> = phis.iter().map(|p| near_integer((p - start) / dphi, 1e-7)).collect();
        let k0 = near_integer(ax.lower / dphi, 1e-7);
        if let (Some(column), Some(k0)) = (column, k0) {
            return Some(PhiLattice {
                start,
                dphi,
                l,
                column,
                k0,
                stride: r,
            });
        }
    }
    None
}

/// 2D FFT over a row-major `rows x cols` buffer.
struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(rows: usize, cols: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: p.plan_fft_forward(cols),
            row_inv: p.plan_fft_inverse(cols),
            col_fwd: p.plan_fft_forward(rows),
            col_inv: p.plan_fft_inverse(rows),
        }
    }

    fn run(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>, forward: bool) {
        let (row, col) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        row.process(buf);
        scratch.resize(buf.len(), Complex64::default());
        transpose(buf, scratch, self.rows, self.cols);
        col.process(scratch);
        transpose(scratch, buf, self.cols, self.rows);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

fn fft_scan(pr: &Problem<'_>) -> Option<CoarseScan> {
    let pixels = &pr.terms.pixels;
    let (h_b, h_phi) = (pixels[0].h_b, pixels[0].h_phi);
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
    if !pixels.iter().all(|p| same(p.h_b, h_b) && same(p.h_phi, h_phi)) {
        return None;
    }
    let mode = pr.factory.mode;
    let (phi_axis, phi_sign) = match mode {
        InferenceMode::Orientation => (0, 1i64),
        InferenceMode::Field => (2, -1i64),
    };
    let lat = phi_lattice(pr, phi_axis)?;
    let grid = &pr.data.grid;
    let nb = grid.n_bias();

    // Bias axis of the model tables and the list of bias shifts.
    let (table_x, shifts, bz_values): (Vec<f64>, Vec<usize>, Vec<f64>) = match mode {
        InferenceMode::Orientation => (grid.bias_values.clone(), vec![0], Vec::new()),
        InferenceMode::Field => {
            let ax = &pr.space.axes[0];
            let db = if nb >= 2 {
                let db = (grid.bias_values[nb - 1] - grid.bias_values[0]) / (nb - 1) as f64;
                let uniform = grid
                    .bias_values
                    .iter()
                    .enumerate()
                    .all(|(i, b)| (b - (grid.bias_values[0] + i as f64 * db)).abs() <= 1e-7 * db);
                if !uniform {
                    return None;
                }
                db
            } else {
                ax.spacing()
            };
            let stride = ((ax.spacing() / db).round() as i64).max(1);
            let k_lo = (ax.lower / db / stride as f64 - 1e-9).ceil() as i64;
            let k_hi = (ax.upper / db / stride as f64 + 1e-9).floor() as i64;
            if k_hi - k_lo < 1 {
                return None;
            }
            let ms: Vec<i64> = (k_lo..=k_hi).map(|k| k * stride).collect();
            let m_lo = ms[0];
            let m_span = (ms[ms.len() - 1] - m_lo) as usize;
            let b0 = grid.bias_values[0];
            let x = (0..nb + m_span).map(|j| b0 + (j as i64 + m_lo) as f64 * db).collect();
            let shifts = ms.iter().map(|m| (m - m_lo) as usize).collect();
            let bz = ms.iter().map(|m| *m as f64 * db).collect();
            (x, shifts, bz)
        }
    };
    let pb = table_x.len();
    let l = lat.l;
    let size = pb * l;
    let fft = Fft2::new(pb, l);

    // Data arrays: Σ s'², Σ s', count per lattice cell, with s' = s - 1.
    let mut d = [
        vec![Complex64::default(); size],
        vec![Complex64::default(); size],
        vec![Complex64::default(); size],
    ];
    for ib in 0..nb {
        for (c, col) in lat.column.iter().enumerate() {
            if pr.mask.is_some_and(|m| !m[c]) {
                continue;
            }
            let j = col.rem_euclid(l as i64) as usize;
            let s = pr.data.get(ib, c) - 1.0;
            let idx = ib * l + j;
            d[0][idx].re += s * s;
            d[1][idx].re += s;
            d[2][idx].re += 1.0;
        }
    }
    let mut scratch = Vec::new();
    for a in d.iter_mut() {
        fft.run(a, &mut scratch, true);
    }

    let space = &pr.space;
    let base: Vec<[f64; 3]> = match mode {
        InferenceMode::Orientation => {
            let (bs, zs) = (space.axes[1].values(), space.axes[2].values());
            bs.iter().flat_map(|b| zs.iter().map(move |z| [0.0, *b, *z])).collect()
        }
        InferenceMode::Field => space.axes[1].values().iter().map(|bp| [0.0, *bp, 0.0]).collect(),
    };
    let psi: Vec<(f64, f64)> = (0..l).map(|j| (lat.start + j as f64 * lat.dphi).sin_cos()).collect();
    let psi_p: Vec<(f64, f64)> = (0..l)
        .map(|j| (lat.start + j as f64 * lat.dphi + h_phi).sin_cos())
        .collect();
    let psi_m: Vec<(f64, f64)> = (0..l)
        .map(|j| (lat.start + j as f64 * lat.dphi - h_phi).sin_cos())
        .collect();
    let noise = pr.terms.noise;
    let var0 = noise.sigma_noise.powi(2);
    let (vb, vp) = (noise.sigma_bias.powi(2), noise.sigma_phi.powi(2));
    let n_phi_shift = space.axes[phi_axis].resolution;
    let norm = 1.0 / size as f64;

    let blocks: Vec<Vec<f64>> = base
        .par_iter()
        .map(|bp| {
            let model = pr.factory.model(bp);
            let mut t = [
                vec![Complex64::default(); size],
                vec![Complex64::default(); size],
                vec![Complex64::default(); size],
            ];
            for (jb, &x) in table_x.iter().enumerate() {
                for j in 0..l {
                    let (s, c) = psi[j];
                    let m = model.eval(x, c, s);
                    let mut var = var0;
                    if vb > 0.0 {
                        let g = (model.eval(x + h_b, c, s) - model.eval(x - h_b, c, s)) / (2.0 * h_b);
                        var += g * g * vb;
                    }
                    if vp > 0.0 {
                        let (sp, cp) = psi_p[j];
                        let (sm, cm) = psi_m[j];
                        let g = (model.eval(x, cp, sp) - model.eval(x, cm, sm)) / (2.0 * h_phi);
                        var += g * g * vp;
                    }
                    let m1 = m - 1.0;
                    let idx = jb * l + j;
                    t[0][idx].re = 1.0 / var;
                    t[1][idx].re = m1 / var;
                    t[2][idx].re = m1 * m1 / var + (TAU * var).ln();
                }
            }
            let mut scratch = Vec::new();
            for a in t.iter_mut() {
                fft.run(a, &mut scratch, true);
            }
            let mut x: Vec<Complex64> = (0..size)
                .map(|i| d[0][i].conj() * t[0][i] - 2.0 * d[1][i].conj() * t[1][i] + d[2][i].conj() * t[2][i])
                .collect();
            fft.run(&mut x, &mut scratch, false);
            let mut out = Vec::with_capacity(shifts.len() * n_phi_shift);
            for &mp in &shifts {
                for n in 0..n_phi_shift {
                    let k = (phi_sign * (lat.k0 + (n * lat.stride) as i64)).rem_euclid(l as i64) as usize;
                    out.push(-0.5 * x[mp * l + k].re * norm);
                }
            }
            out
        })
        .collect();

    let axes = match mode {
        InferenceMode::Orientation => [space.axes[0].values(), space.axes[1].values(), space.axes[2].values()],
        InferenceMode::Field => [bz_values, space.axes[1].values(), space.axes[2].values()],
    };
    let [n0, n1, n2] = [axes[0].len(), axes[1].len(), axes[2].len()];
    let mut ll = vec![0.0; n0 * n1 * n2];
    match mode {
        InferenceMode::Orientation => {
            // blocks indexed by (i1, i2), each holding the alpha shifts.
            for (bi, blk) in blocks.iter().enumerate() {
                for (i0, v) in blk.iter().enumerate() {
                    ll[i0 * n1 * n2 + bi] = *v;
                }
            }
        }
        InferenceMode::Field => {
            // blocks indexed by i1, each holding (b_z, phi0) shifts.
            for (i1, blk) in blocks.iter().enumerate() {
                for i0 in 0..n0 {
                    for i2 in 0..n2 {
                        ll[(i0 * n1 + i1) * n2 + i2] = blk[i0 * n2 + i2];
                    }
                }
            }
        }
    }
    Some(CoarseScan {
        axes,
        ll,
        used_fft: true,
    })
}
