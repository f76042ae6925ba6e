//! Posterior evaluation over orientation or external-field parameters.
//!
//! The pipeline is: coarse grid scan, local maxima with non-maximum
//! suppression, shrinking-stencil refinement, symmetry seeding of twin
//! modes, Laplace covariance per mode, fine box integration around each
//! mode, and global 1D marginals that combine the boxes with the coarse
//! grid elsewhere.

mod likelihood;
mod marginal;
mod modes;
mod scaling;
mod scan;
mod space;

use serde::{Deserialize, Serialize};

pub use likelihood::{effective_variance, log_likelihood, pl_gradient, NoiseModel};
pub use marginal::Marginal;
pub use scaling::{scaling_study, ScalingRow, ScalingStudy};
pub use space::{InferenceMode, KnownParams, ParamAxis, ParamSpace};

use crate::error::{Error, Result};
use crate::forward::{ExternalFieldParams, LineshapeConfig, PLMap};
use crate::geometry::{
    angle_to_high_symmetry_direction, canonicalize, orientation_matrix, symmetry_group, Orientation, RotationMatrix,
    Vec3,
};
use likelihood::DataTerms;
use marginal::interp;
use modes::{hessian, local_maxima, refine, spd_inverse, suppress, Refined};
use scan::{coarse_scan, CoarseScan};
use space::{orientation_of, ModelFactory};

/// Tuning knobs for [`evaluate_posterior`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceOptions {
    /// Use FFT shift-correlation for the coarse scan when the grids allow.
    pub use_fft: bool,
    /// Coarse maxima refined per run.
    pub max_candidates: usize,
    /// Non-maximum suppression radius in coarse cells.
    pub nms_radius: usize,
    /// Modes more than this many log units below the best are dropped.
    pub mode_log_threshold: f64,
    /// Half-width of each mode's integration box in posterior standard
    /// deviations.
    pub box_sigmas: f64,
    /// Box nodes per axis.
    pub box_points: usize,
    pub credible_level: f64,
    /// Seed refinement from the symmetry images of the best mode.
    pub symmetry_seeding: bool,
    /// Final refinement stencil spacing per axis; defaults depend on mode.
    pub refine_tolerance: Option<[f64; 3]>,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            use_fft: true,
            max_candidates: 8,
            nms_radius: 3,
            mode_log_threshold: 1000f64.ln(),
            box_sigmas: 5.0,
            box_points: 13,
            credible_level: 0.95,
            symmetry_seeding: true,
            refine_tolerance: None,
        }
    }
}

impl InferenceOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_candidates == 0 {
            return Err(Error::invalid("max_candidates must be >= 1"));
        }
        if !(self.mode_log_threshold > 0.0) {
            return Err(Error::invalid("mode_log_threshold must be > 0"));
        }
        if !(self.box_sigmas > 0.0) || self.box_points < 3 {
            return Err(Error::invalid("box needs box_sigmas > 0 and at least 3 points"));
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return Err(Error::invalid("credible_level must be in (0, 1)"));
        }
        if let Some(t) = self.refine_tolerance {
            if t.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::invalid("refine_tolerance entries must be > 0"));
            }
        }
        Ok(())
    }
}

/// One posterior mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Parameter vector at the refined maximum.
    pub point: [f64; 3],
    pub log_likelihood: f64,
    /// Log of the integrated likelihood over the mode's box.
    pub log_mass: f64,
    /// Share of the total box mass over all modes.
    pub mass_fraction: f64,
    /// Laplace covariance, if the Hessian was negative definite.
    pub covariance: Option<[[f64; 3]; 3]>,
    /// Standard deviations from the box marginals.
    pub std: [f64; 3],
    pub credible_intervals: [(f64, f64); 3],
    pub marginals: Vec<Marginal>,
    /// The refinement ended on a strict local maximum.
    pub strict_max: bool,
    /// Canonical orientation for orientation-mode runs.
    pub orientation: Option<Orientation>,
}

/// Result of a posterior evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mode: InferenceMode,
    pub names: [String; 3],
    pub space: ParamSpace,
    /// Modes sorted by decreasing log-likelihood.
    pub modes: Vec<Mode>,
    /// Global marginals, one per parameter.
    pub marginals: Vec<Marginal>,
    pub credible_level: f64,
    pub credible_intervals: [(f64, f64); 3],
    pub std: [f64; 3],
    pub map_estimate: [f64; 3],
    pub max_log_likelihood: f64,
    /// Log of the prior-averaged likelihood.
    pub log_evidence: f64,
    pub coarse_max_log_likelihood: f64,
    pub used_fft: bool,
    pub warnings: Vec<String>,
}

impl Posterior {
    pub fn best(&self) -> &Mode {
        &self.modes[0]
    }

    pub fn marginal(&self, name: &str) -> Option<&Marginal> {
        self.marginals.iter().find(|m| m.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Everything the likelihood needs, bound to one dataset.
pub(crate) struct Problem<'a> {
    pub data: &'a PLMap,
    pub mask: Option<&'a [bool]>,
    pub terms: DataTerms,
    pub factory: ModelFactory,
    pub space: ParamSpace,
}

impl<'a> Problem<'a> {
    pub(crate) fn new(
        data: &'a PLMap,
        mask: Option<&'a [bool]>,
        known: KnownParams,
        lineshape: &LineshapeConfig,
        noise: &NoiseModel,
        space: &ParamSpace,
    ) -> Result<Self> {
        space.validate()?;
        let terms = DataTerms::new(data, noise, mask)?;
        let factory = ModelFactory::new(space.mode, known, *lineshape)?;
        Ok(Problem {
            data,
            mask,
            terms,
            factory,
            space: space.clone(),
        })
    }

    pub(crate) fn ll(&self, p: &[f64; 3]) -> f64 {
        self.terms.log_likelihood(&self.factory.model(p))
    }

    /// Log-likelihood inside the prior box, `-inf` outside.
    pub(crate) fn ll_prior(&self, p: &[f64; 3]) -> f64 {
        if self.space.contains(p) {
            self.ll(p)
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Posterior for orientation `(alpha, beta, zeta)` with a known field.
pub fn infer_orientation(
    data: &PLMap,
    field: &ExternalFieldParams,
    lineshape: &LineshapeConfig,
    noise: &NoiseModel,
    space: &ParamSpace,
    options: &InferenceOptions,
) -> Result<Posterior> {
    if space.mode != InferenceMode::Orientation {
        return Err(Error::invalid("infer_orientation needs an orientation parameter space"));
    }
    evaluate_posterior(data, KnownParams::Field(*field), lineshape, noise, space, options)
}

/// Posterior for the external field `(b_z, b_perp, phi0)` with a known
/// orientation.
pub fn infer_field(
    data: &PLMap,
    orientation: &RotationMatrix,
    lineshape: &LineshapeConfig,
    noise: &NoiseModel,
    space: &ParamSpace,
    options: &InferenceOptions,
) -> Result<Posterior> {
    if space.mode != InferenceMode::Field {
        return Err(Error::invalid("infer_field needs a field parameter space"));
    }
    if !orientation.is_rotation(1e-9) {
        return Err(Error::invalid("orientation matrix is not a proper rotation"));
    }
    evaluate_posterior(
        data,
        KnownParams::Orientation(*orientation),
        lineshape,
        noise,
        space,
        options,
    )
}

pub fn evaluate_posterior(
    data: &PLMap,
    known: KnownParams,
    lineshape: &LineshapeConfig,
    noise: &NoiseModel,
    space: &ParamSpace,
    options: &InferenceOptions,
) -> Result<Posterior> {
    evaluate_masked(data, None, known, lineshape, noise, space, options)
}

pub(crate) fn evaluate_masked(
    data: &PLMap,
    mask: Option<&[bool]>,
    known: KnownParams,
    lineshape: &LineshapeConfig,
    noise: &NoiseModel,
    space: &ParamSpace,
    options: &InferenceOptions,
) -> Result<Posterior> {
    options.validate()?;
    let pr = Problem::new(data, mask, known, lineshape, noise, space)?;
    let t0 = std::time::Instant::now();
    let scan = coarse_scan(&pr, options.use_fft);
    log::debug!("coarse scan: {:?} (fft: {})", t0.elapsed(), scan.used_fft);
    if !scan.ll.iter().any(|v| v.is_finite()) {
        return Err(Error::Numerical(
            "log-likelihood is not finite anywhere on the coarse grid".into(),
        ));
    }
    run_pipeline(&pr, &scan, options)
}

fn scan_spacing(scan: &CoarseScan, space: &ParamSpace) -> [f64; 3] {
    let mut s = [0.0; 3];
    for k in 0..3 {
        s[k] = if scan.axes[k].len() >= 2 {
            scan.axes[k][1] - scan.axes[k][0]
        } else {
            space.axes[k].spacing()
        };
    }
    s
}

fn same_point(space: &ParamSpace, a: &[f64; 3], b: &[f64; 3], tol: &[f64; 3]) -> bool {
    (0..3).all(|k| space.axes[k].diff(a[k], b[k]).abs() <= tol[k])
}

/// Symmetry images of the best mode that lie inside the parameter space.
fn symmetry_seeds(pr: &Problem<'_>, best: &[f64; 3]) -> Vec<[f64; 3]> {
    match pr.factory.known {
        KnownParams::Field(_) => canonicalize(&orientation_matrix(best[0], best[1], best[2]))
            .iter()
            .map(|o| o.angles())
            .collect(),
        KnownParams::Orientation(o) => {
            let ot = o.transpose();
            let mut out = Vec::new();
            for g in symmetry_group().iter() {
                let q = ot * *g * o;
                if (q.0[2][2] - 1.0).abs() < 1e-6 {
                    let theta = q.0[1][0].atan2(q.0[0][0]);
                    if theta.abs() > 1e-9 {
                        out.push(pr.space.wrap([best[0], best[1], best[2] + theta]));
                    }
                }
            }
            out
        }
    }
    .into_iter()
    .filter(|p| pr.space.contains(p))
    .collect()
}

/// Trapezoid weights of an axis; uniform for periodic axes.
fn cell_weights(x: &[f64], periodic: bool, period: f64) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![if periodic { period } else { 1.0 }];
    }
    if periodic {
        return vec![period / n as f64; n];
    }
    (0..n)
        .map(|i| {
            let l = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

fn log_sum_exp(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.filter(|x| x.is_finite()).collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return f64::NEG_INFINITY;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Fine grid around one mode.
struct ModeBox {
    axes: [Vec<f64>; 3],
    weights: [Vec<f64>; 3],
    half_width: [f64; 3],
    center: [f64; 3],
    ll: Vec<f64>,
}

fn box_axis(pr: &Problem<'_>, k: usize, c: f64, w: f64, n: usize) -> Vec<f64> {
    let ax = &pr.space.axes[k];
    let (mut lo, mut hi) = (c - w, c + w);
    if !ax.periodic {
        lo = lo.max(ax.lower);
        hi = hi.min(ax.upper);
    }
    if hi <= lo {
        return vec![c];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn integrate_box(pr: &Problem<'_>, center: [f64; 3], half_width: [f64; 3], n: usize) -> ModeBox {
    use rayon::prelude::*;
    let axes = [
        box_axis(pr, 0, center[0], half_width[0], n),
        box_axis(pr, 1, center[1], half_width[1], n),
        box_axis(pr, 2, center[2], half_width[2], n),
    ];
    let (n1, n2) = (axes[1].len(), axes[2].len());
    let total = axes[0].len() * n1 * n2;
    let ll = (0..total)
        .into_par_iter()
        .map(|f| pr.ll_prior(&[axes[0][f / (n1 * n2)], axes[1][(f / n2) % n1], axes[2][f % n2]]))
        .collect();
    let weights = [
        cell_weights(&axes[0], false, 0.0),
        cell_weights(&axes[1], false, 0.0),
        cell_weights(&axes[2], false, 0.0),
    ];
    ModeBox {
        axes,
        weights,
        half_width,
        center,
        ll,
    }
}

impl ModeBox {
    fn log_mass(&self) -> f64 {
        let (n1, n2) = (self.axes[1].len(), self.axes[2].len());
        log_sum_exp(self.ll.iter().enumerate().map(|(f, l)| {
            l + (self.weights[0][f / (n1 * n2)] * self.weights[1][(f / n2) % n1] * self.weights[2][f % n2]).ln()
        }))
    }

    /// Unnormalised 1D marginal along axis `a`, relative to `reference`.
    fn marginal_weights(&self, a: usize, reference: f64) -> Vec<f64> {
        let (n1, n2) = (self.axes[1].len(), self.axes[2].len());
        let mut out = vec![0.0; self.axes[a].len()];
        for (f, l) in self.ll.iter().enumerate() {
            let i = [f / (n1 * n2), (f / n2) % n1, f % n2];
            let w: f64 = (0..3).filter(|k| *k != a).map(|k| self.weights[k][i[k]]).product();
            out[i[a]] += (l - reference).exp() * w;
        }
        out
    }

    fn contains(&self, space: &ParamSpace, p: &[f64; 3]) -> bool {
        (0..3).all(|k| space.axes[k].diff(p[k], self.center[k]).abs() <= self.half_width[k])
    }
}

fn run_pipeline(pr: &Problem<'_>, scan: &CoarseScan, options: &InferenceOptions) -> Result<Posterior> {
    let t0 = std::time::Instant::now();
    let space = &pr.space;
    let periodic = [space.axes[0].periodic, space.axes[1].periodic, space.axes[2].periodic];
    let spacing = scan_spacing(scan, space);
    let tol = options.refine_tolerance.unwrap_or(match space.mode {
        InferenceMode::Orientation => [1e-5; 3],
        InferenceMode::Field => [1e-8, 1e-8, 1e-5],
    });
    let mut warnings = Vec::new();

    let maxima = local_maxima(scan, periodic);
    let candidates = suppress(scan, maxima, periodic, options.nms_radius, options.max_candidates);
    if candidates.is_empty() {
        return Err(Error::Numerical("no local maximum on the coarse grid".into()));
    }
    // Candidates arrive in decreasing coarse order. One whose coarse value
    // sits further below the best refined value than a few times the
    // largest refinement gain seen so far cannot plausibly reach the mode
    // threshold and is skipped.
    let mut refined: Vec<Refined> = Vec::new();
    let mut max_gain = 0.0f64;
    for f in &candidates {
        let coarse = scan.ll[*f];
        if let Some(best) = refined.first() {
            if coarse + 4.0 * max_gain + options.mode_log_threshold < best.ll {
                log::trace!("candidate coarse {coarse:.1} skipped");
                continue;
            }
        }
        let r = refine(pr, scan.point(scan.unflat(*f)), spacing, tol);
        log::trace!("candidate coarse {coarse:.1} -> refined {:.1}", r.ll);
        max_gain = max_gain.max(r.ll - coarse);
        refined.push(r);
        refined.sort_by(|a, b| b.ll.total_cmp(&a.ll));
    }
    log::debug!("refined {} candidates: {:?}", candidates.len(), t0.elapsed());

    let merge_tol = spacing.map(|s| 0.5 * s);
    if options.symmetry_seeding {
        let best = refined[0].point;
        let fine = spacing.map(|s| s / 16.0);
        for seed in symmetry_seeds(pr, &best) {
            if refined.iter().any(|r| same_point(space, &r.point, &seed, &merge_tol)) {
                continue;
            }
            refined.push(refine(pr, seed, fine, tol));
        }
        refined.sort_by(|a, b| b.ll.total_cmp(&a.ll));
    }

    let best_ll = refined[0].ll;
    let mut kept: Vec<Refined> = Vec::new();
    for r in refined {
        if !r.ll.is_finite() || r.ll < best_ll - options.mode_log_threshold {
            continue;
        }
        if kept.iter().any(|k| same_point(space, &k.point, &r.point, &merge_tol)) {
            continue;
        }
        kept.push(r);
    }

    // Laplace covariance and box integration per mode.
    let mut boxes = Vec::with_capacity(kept.len());
    let mut covs = Vec::with_capacity(kept.len());
    for r in &kept {
        if !r.strict_max {
            warnings.push(format!(
                "refinement of mode at {:?} did not end on a strict local maximum",
                r.point
            ));
        }
        let (h, _) = hessian(pr, r.point, spacing.map(|s| s / 8.0));
        let neg = h.map(|row| row.map(|v| -v));
        let cov = spd_inverse(&neg);
        let sigma = match &cov {
            Some(c) => [c[0][0].sqrt(), c[1][1].sqrt(), c[2][2].sqrt()],
            None => {
                warnings.push(format!(
                    "Hessian at {:?} is not negative definite; box sized from the coarse spacing",
                    r.point
                ));
                spacing
            }
        };
        let half_width: [f64; 3] = std::array::from_fn(|k| {
            (options.box_sigmas * sigma[k])
                .min(0.5 * space.axes[k].span())
                .max(tol[k])
        });
        boxes.push(integrate_box(pr, r.point, half_width, options.box_points));
        covs.push(cov);
    }

    log::debug!("boxes for {} modes: {:?}", boxes.len(), t0.elapsed());
    let reference = best_ll.max(scan.max_ll());
    let log_masses: Vec<f64> = boxes.iter().map(|b| b.log_mass()).collect();
    let total_mass = log_sum_exp(log_masses.iter().cloned());
    let names = space.names().map(|s| s.to_string());

    let mut modes = Vec::with_capacity(kept.len());
    for ((r, b), (cov, lm)) in kept.iter().zip(&boxes).zip(covs.iter().zip(&log_masses)) {
        let marginals: Vec<Marginal> = (0..3)
            .map(|a| Marginal::from_weights(&names[a], b.axes[a].clone(), b.marginal_weights(a, r.ll)))
            .collect();
        let std = std::array::from_fn(|a| marginals[a].std());
        let credible_intervals = std::array::from_fn(|a| marginals[a].credible_interval(options.credible_level));
        let orientation = match space.mode {
            InferenceMode::Orientation => Some(orientation_of(&r.point)?),
            InferenceMode::Field => None,
        };
        modes.push(Mode {
            point: r.point,
            log_likelihood: r.ll,
            log_mass: *lm,
            mass_fraction: (lm - total_mass).exp(),
            covariance: *cov,
            std,
            credible_intervals,
            marginals,
            strict_max: r.strict_max,
            orientation,
        });
    }

    // Global marginals: boxes plus coarse nodes outside every box.
    let coarse_w: Vec<Vec<f64>> = (0..3)
        .map(|k| cell_weights(&scan.axes[k], periodic[k], space.axes[k].span()))
        .collect();
    let dims = scan.dims();
    let mut coarse_marg = [vec![0.0; dims[0]], vec![0.0; dims[1]], vec![0.0; dims[2]]];
    let mut outside_terms = Vec::new();
    for (f, l) in scan.ll.iter().enumerate() {
        let i = scan.unflat(f);
        let p = scan.point(i);
        if !l.is_finite() || boxes.iter().any(|b| b.contains(space, &p)) {
            continue;
        }
        let w = [coarse_w[0][i[0]], coarse_w[1][i[1]], coarse_w[2][i[2]]];
        outside_terms.push(l + (w[0] * w[1] * w[2]).ln());
        let e = (l - reference).exp();
        for a in 0..3 {
            coarse_marg[a][i[a]] += e * (0..3).filter(|k| *k != a).map(|k| w[k]).product::<f64>();
        }
    }
    let box_marg: Vec<[Vec<f64>; 3]> = boxes
        .iter()
        .map(|b| std::array::from_fn(|a| b.marginal_weights(a, reference)))
        .collect();

    let mut marginals = Vec::with_capacity(3);
    for a in 0..3 {
        let ax = &space.axes[a];
        let mut xs: Vec<f64> = scan.axes[a].clone();
        for b in &boxes {
            xs.extend(b.axes[a].iter().map(|x| ax.wrap(*x)));
        }
        if ax.periodic {
            xs.push(ax.lower + ax.span());
        } else {
            xs.push(ax.lower);
            xs.push(ax.upper);
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * ax.span());
        let (cx, cy) = if ax.periodic {
            let mut cx = scan.axes[a].clone();
            let mut cy = coarse_marg[a].clone();
            cx.insert(0, scan.axes[a][dims[a] - 1] - ax.span());
            cy.insert(0, coarse_marg[a][dims[a] - 1]);
            cx.push(scan.axes[a][0] + ax.span());
            cy.push(coarse_marg[a][0]);
            (cx, cy)
        } else {
            (scan.axes[a].clone(), coarse_marg[a].clone())
        };
        let ws: Vec<f64> = xs
            .iter()
            .map(|&u| {
                let mut v = interp(&cx, &cy, u);
                for (b, bm) in boxes.iter().zip(&box_marg) {
                    let shifts: &[f64] = if ax.periodic { &[0.0, -1.0, 1.0] } else { &[0.0] };
                    for s in shifts {
                        let uu = u + s * ax.span();
                        let (lo, hi) = (b.axes[a][0], b.axes[a][b.axes[a].len() - 1]);
                        if uu >= lo && uu <= hi {
                            v += interp(&b.axes[a], bm[a].as_slice(), uu);
                            break;
                        }
                    }
                }
                v
            })
            .collect();
        marginals.push(Marginal::from_weights(&names[a], xs, ws));
    }
    let credible_intervals = std::array::from_fn(|a| marginals[a].credible_interval(options.credible_level));
    let std = std::array::from_fn(|a| marginals[a].std());

    let log_evidence =
        log_sum_exp(log_masses.iter().cloned().chain(outside_terms.iter().cloned())) - space.volume().ln();

    if let KnownParams::Orientation(o) = pr.factory.known {
        let z_crystal = o.apply(Vec3::Z);
        let (angle, dir) = angle_to_high_symmetry_direction(z_crystal);
        if angle < 1e-3 {
            warnings.push(format!(
                "lab z lies {:.1e} rad from crystal [{} {} {}]; the field posterior has symmetry-related twins",
                angle, dir[0], dir[1], dir[2]
            ));
        }
    }
    if modes.len() > 1 {
        log::info!("{} posterior modes retained", modes.len());
    }

    Ok(Posterior {
        mode: space.mode,
        names,
        space: space.clone(),
        map_estimate: modes[0].point,
        max_log_likelihood: modes[0].log_likelihood,
        modes,
        marginals,
        credible_level: options.credible_level,
        credible_intervals,
        std,
        log_evidence,
        coarse_max_log_likelihood: scan.max_ll(),
        used_fft: scan.used_fft,
        warnings,
    })
}

/// Periodic distance helper used by tests and callers comparing angles.
pub fn angular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

#[cfg(test)]
mod tests {
    use super::scan::direct_scan;
    use super::*;
    use crate::forward::{pl_map, MeasurementGrid, ModelParams};

    fn noisy(map: &mut PLMap) {
        for (i, v) in map.values.iter_mut().enumerate() {
            *v += 2e-3 * ((i as f64 * 12.9898).sin() * 43758.5453).fract();
        }
    }

    fn check_scan_agreement(pr: &Problem<'_>) {
        let fast = coarse_scan(pr, true);
        assert!(fast.used_fft);
        let slow = {
            let mut s = direct_scan(pr);
            if fast.axes != s.axes {
                // Field mode snaps b_z to the bias lattice; evaluate there.
                let axes = fast.axes.clone();
                let mut ll = Vec::with_capacity(fast.ll.len());
                for a in &axes[0] {
                    for b in &axes[1] {
                        for c in &axes[2] {
                            ll.push(pr.ll(&[*a, *b, *c]));
                        }
                    }
                }
                s = CoarseScan {
                    axes,
                    ll,
                    used_fft: false,
                };
            }
            s
        };
        let scale = slow.ll.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in fast.ll.iter().zip(&slow.ll) {
            assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn fft_scan_matches_direct_orientation() {
        let grid = MeasurementGrid::uniform(-3e-3, 3e-3, 20, 12).unwrap();
        let field = ExternalFieldParams::new(0.0, 1e-3, 0.3).unwrap();
        let p = ModelParams {
            orientation: Orientation::new(1.0, 0.4, 0.5).unwrap(),
            field,
            lineshape: LineshapeConfig::default(),
        };
        let mut map = pl_map(&grid, &p);
        noisy(&mut map);
        let space = ParamSpace::orientation(12, 5, 6).unwrap();
        let pr = Problem::new(
            &map,
            None,
            KnownParams::Field(field),
            &p.lineshape,
            &NoiseModel::default(),
            &space,
        )
        .unwrap();
        check_scan_agreement(&pr);
        let mask: Vec<bool> = (0..12).map(|i| i % 3 != 1).collect();
        let pr = Problem::new(
            &map,
            Some(&mask),
            KnownParams::Field(field),
            &p.lineshape,
            &NoiseModel::default(),
            &space,
        )
        .unwrap();
        check_scan_agreement(&pr);
    }

    #[test]
    fn fft_scan_matches_direct_field() {
        let grid = MeasurementGrid::uniform(-3e-3, 3e-3, 25, 12).unwrap();
        let o = Orientation::new(1.0, 0.4, 0.5).unwrap();
        let p = ModelParams {
            orientation: o,
            field: ExternalFieldParams::new(0.5e-3, 1e-3, 0.3).unwrap(),
            lineshape: LineshapeConfig::default(),
        };
        let mut map = pl_map(&grid, &p);
        noisy(&mut map);
        let space = ParamSpace::field(-1e-3, 1e-3, 9, 2e-3, 5, 6).unwrap();
        let known = KnownParams::Orientation(o.matrix);
        let pr = Problem::new(&map, None, known, &p.lineshape, &NoiseModel::default(), &space).unwrap();
        check_scan_agreement(&pr);
        let noise = NoiseModel::new(2e-3, 0.0, 0.0).unwrap();
        let pr = Problem::new(&map, None, known, &p.lineshape, &noise, &space).unwrap();
        check_scan_agreement(&pr);
    }

    #[test]
    fn non_uniform_data_falls_back_to_direct() {
        let grid = MeasurementGrid::new(vec![-2e-3, -1e-3, 0.5e-3, 2e-3], vec![0.0, 1.0, 2.5]).unwrap();
        let field = ExternalFieldParams::new(0.0, 1e-3, 0.0).unwrap();
        let p = ModelParams {
            orientation: Orientation::new(1.0, 0.4, 0.5).unwrap(),
            field,
            lineshape: LineshapeConfig::default(),
        };
        let map = pl_map(&grid, &p);
        let space = ParamSpace::orientation(8, 3, 4).unwrap();
        let pr = Problem::new(
            &map,
            None,
            KnownParams::Field(field),
            &p.lineshape,
            &NoiseModel::default(),
            &space,
        )
        .unwrap();
        assert!(!coarse_scan(&pr, true).used_fft);
    }

    #[test]
    fn mismatched_space_rejected() {
        let grid = MeasurementGrid::uniform(-3e-3, 3e-3, 5, 4).unwrap();
        let map = PLMap::new(grid, vec![1.0; 20]).unwrap();
        let f = ExternalFieldParams::new(0.0, 1e-3, 0.0).unwrap();
        let r = infer_orientation(
            &map,
            &f,
            &LineshapeConfig::default(),
            &NoiseModel::default(),
            &ParamSpace::field_default(),
            &InferenceOptions::default(),
        );
        assert!(r.is_err());
    }
}
