use rayon::prelude::*;

use super::scan::CoarseScan;
use super::Problem;

/// Flat indices of coarse nodes that are at least as high as all 26
/// neighbours (ties go to the lower index).
pub(crate) fn local_maxima(scan: &CoarseScan, periodic: [bool; 3]) -> Vec<usize> {
    let dims = scan.dims();
    (0..scan.ll.len())
        .into_par_iter()
        .filter(|&f| {
            let v = scan.ll[f];
            if !v.is_finite() {
                return false;
            }
            let i = scan.unflat(f);
            for d0 in -1i64..=1 {
                for d1 in -1i64..=1 {
                    for d2 in -1i64..=1 {
                        if d0 == 0 && d1 == 0 && d2 == 0 {
                            continue;
                        }
                        let Some(j) = neighbour(i, [d0, d1, d2], dims, periodic) else {
                            continue;
                        };
                        let g = scan.flat(j);
                        if g == f {
                            continue;
                        }
                        let w = scan.ll[g];
                        if w > v || (w == v && g < f) {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .collect()
}

fn neighbour(i: [usize; 3], d: [i64; 3], dims: [usize; 3], periodic: [bool; 3]) -> Option<[usize; 3]> {
    let mut out = [0usize; 3];
    for k in 0..3 {
        let n = dims[k] as i64;
        let x = i[k] as i64 + d[k];
        out[k] = if periodic[k] {
            x.rem_euclid(n) as usize
        } else if x < 0 || x >= n {
            return None;
        } else {
            x as usize
        };
    }
    Some(out)
}

/// Chebyshev distance in grid cells, wrapping periodic axes.
fn cell_distance(a: [usize; 3], b: [usize; 3], dims: [usize; 3], periodic: [bool; 3]) -> usize {
    (0..3)
        .map(|k| {
            let d = a[k].abs_diff(b[k]);
            if periodic[k] {
                d.min(dims[k] - d)
            } else {
                d
            }
        })
        .max()
        .unwrap_or(0)
}

/// Non-maximum suppression: highest first, dropping maxima within `radius`
/// cells of one already kept.
pub(crate) fn suppress(
    scan: &CoarseScan,
    mut maxima: Vec<usize>,
    periodic: [bool; 3],
    radius: usize,
    max_keep: usize,
) -> Vec<usize> {
    maxima.sort_by(|a, b| scan.ll[*b].total_cmp(&scan.ll[*a]).then(a.cmp(b)));
    let dims = scan.dims();
    let mut kept: Vec<usize> = Vec::new();
    for f in maxima {
        if kept.len() >= max_keep {
            break;
        }
        let i = scan.unflat(f);
        if kept
            .iter()
            .all(|k| cell_distance(scan.unflat(*k), i, dims, periodic) > radius)
        {
            kept.push(f);
        }
    }
    kept
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Refined {
    pub point: [f64; 3],
    pub ll: f64,
    /// The final stencil's centre beat every in-domain neighbour.
    pub strict_max: bool,
}

/// Shrinking-stencil hill climb: a 3x3x3 stencil at spacing `h` is
/// re-centred on its best node until the centre wins, then `h` shrinks by 4
/// until every component is at or below `tol`.
pub(crate) fn refine(pr: &Problem<'_>, start: [f64; 3], step0: [f64; 3], tol: [f64; 3]) -> Refined {
    let mut h = step0;
    let mut best = start;
    let mut best_ll = pr.ll_prior(&best);
    let mut strict = false;
    loop {
        for _ in 0..16 {
            let cand: Vec<([f64; 3], f64)> = (0..27)
                .into_par_iter()
                .filter(|&k| k != 13)
                .map(|k| {
                    let d = [(k / 9) as f64 - 1.0, ((k / 3) % 3) as f64 - 1.0, (k % 3) as f64 - 1.0];
                    let p = [best[0] + d[0] * h[0], best[1] + d[1] * h[1], best[2] + d[2] * h[2]];
                    (p, pr.ll_prior(&p))
                })
                .collect();
            let (bp, bl) = cand
                .iter()
                .fold((best, best_ll), |acc, c| if c.1 > acc.1 { *c } else { acc });
            strict = cand.iter().all(|c| c.1 < best_ll || c.1 == f64::NEG_INFINITY);
            if bl > best_ll {
                best = bp;
                best_ll = bl;
            } else {
                break;
            }
        }
        if (0..3).all(|k| h[k] <= tol[k]) {
            break;
        }
        for x in h.iter_mut() {
            *x /= 4.0;
        }
    }
    Refined {
        point: pr.space.wrap(best),
        ll: best_ll,
        strict_max: strict,
    }
}

pub(crate) type Mat3 = [[f64; 3]; 3];

/// Finite-difference Hessian of the log-likelihood at `p`. Each axis step
/// is adapted so that the one-sided drop is of order one.
pub(crate) fn hessian(pr: &Problem<'_>, p: [f64; 3], h0: [f64; 3]) -> (Mat3, [f64; 3]) {
    let f0 = pr.ll(&p);
    let at = |d: [f64; 3]| pr.ll(&[p[0] + d[0], p[1] + d[1], p[2] + d[2]]);
    let mut h = h0;
    for k in 0..3 {
        for _ in 0..40 {
            let mut e = [0.0; 3];
            e[k] = h[k];
            let up = at(e);
            e[k] = -h[k];
            let dn = at(e);
            let drop = f0 - 0.5 * (up + dn);
            if drop > 4.0 {
                h[k] *= 0.5;
            } else if drop < 0.1 {
                h[k] *= 2.0;
                if h[k] > 1e3 * h0[k] {
                    break;
                }
            } else {
                break;
            }
        }
    }
    let mut m = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = h[k];
        let up = at(e);
        e[k] = -h[k];
        let dn = at(e);
        m[k][k] = (up + dn - 2.0 * f0) / (h[k] * h[k]);
    }
    for a in 0..3 {
        for b in (a + 1)..3 {
            let mut s = 0.0;
            for (sa, sb, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut e = [0.0; 3];
                e[a] = sa * h[a];
                e[b] = sb * h[b];
                s += w * at(e);
            }
            let v = s / (4.0 * h[a] * h[b]);
            m[a][b] = v;
            m[b][a] = v;
        }
    }
    (m, h)
}

/// Inverse of a symmetric positive-definite matrix, or `None` if it is not
/// positive definite.
pub(crate) fn spd_inverse(a: &Mat3) -> Option<Mat3> {
    let d1 = a[0][0];
    let d2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if !(d1 > 0.0 && d2 > 0.0 && det > 0.0) || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_inverse_roundtrip() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let inv = spd_inverse(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(spd_inverse(&[[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]).is_none());
    }

    #[test]
    fn periodic_cell_distance() {
        assert_eq!(cell_distance([0, 0, 0], [9, 2, 0], [10, 5, 5], [true, false, true]), 2);
        assert_eq!(cell_distance([0, 0, 0], [9, 0, 0], [10, 5, 5], [false, false, true]), 9);
    }

    #[test]
    fn maxima_on_synthetic_grid() {
        let axes = [
            (0..10).map(|i| i as f64).collect::<Vec<_>>(),
            (0..8).map(|i| i as f64).collect(),
            (0..6).map(|i| i as f64).collect(),
        ];
        let mut ll = Vec::new();
        for a in &axes[0] {
            for b in &axes[1] {
                for c in &axes[2] {
                    let p1 = -((a - 2.0).powi(2) + (b - 3.0).powi(2) + (c - 1.0).powi(2));
                    let p2 = -((a - 8.0).powi(2) + (b - 5.0).powi(2) + (c - 4.0).powi(2)) - 1.0;
                    ll.push(p1.max(p2));
                }
            }
        }
        let scan = CoarseScan {
            axes,
            ll,
            used_fft: false,
        };
        let m = local_maxima(&scan, [false; 3]);
        let kept = suppress(&scan, m, [false; 3], 3, 8);
        let pts: Vec<_> = kept.iter().map(|f| scan.unflat(*f)).collect();
        assert_eq!(pts, vec![[2, 3, 1], [8, 5, 4]]);
        let kept = suppress(&scan, local_maxima(&scan, [false; 3]), [false; 3], 3, 1);
        assert_eq!(kept.len(), 1);
    }
}
