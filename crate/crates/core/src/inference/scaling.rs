//! Posterior width versus the number of rotation-angle traces.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_masked, InferenceOptions, KnownParams, NoiseModel, ParamSpace};
use crate::error::{Error, Result};
use crate::forward::{LineshapeConfig, PLMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_traces: usize,
    /// Mean over repetitions of the marginal standard deviation.
    pub mean_width: f64,
    /// Sample standard deviation of the widths across repetitions.
    pub std_width: f64,
    pub widths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub parameter: String,
    pub repetitions: usize,
    pub seed: u64,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln(mean_width)` against `ln(n_traces)`;
    /// absent with fewer than two distinct `N`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

/// Fits `ln y = intercept + slope ln x`.
pub(crate) fn log_log_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// For each `N` in `n_traces`, draws `repetitions` random subsets of `N`
/// rotation angles (seeded), infers the posterior from those traces alone
/// and records the marginal standard deviation of `parameter`.
#[allow(clippy::too_many_arguments)]
pub fn scaling_study(
    data: &PLMap,
    known: KnownParams,
    lineshape: &LineshapeConfig,
    noise: &NoiseModel,
    space: &ParamSpace,
    options: &InferenceOptions,
    parameter: &str,
    n_traces: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<ScalingStudy> {
    let n_phi = data.grid.n_phi();
    let axis = space
        .names()
        .iter()
        .position(|n| *n == parameter)
        .ok_or_else(|| Error::invalid(format!("unknown parameter `{parameter}`")))?;
    if repetitions < 2 || n_traces.is_empty() {
        return Err(Error::invalid("scaling study needs at least one N and two repetitions"));
    }
    if let Some(n) = n_traces.iter().find(|n| **n == 0 || **n > n_phi) {
        return Err(Error::invalid(format!("N = {n} is outside 1..={n_phi}")));
    }

    // Draw every subset up front so the result does not depend on thread
    // scheduling.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs: Vec<(usize, Vec<bool>)> = Vec::new();
    for (row, &n) in n_traces.iter().enumerate() {
        let reps = if n == n_phi { 1 } else { repetitions };
        for _ in 0..reps {
            let mut mask = vec![false; n_phi];
            for i in sample(&mut rng, n_phi, n).iter() {
                mask[i] = true;
            }
            jobs.push((row, mask));
        }
    }

    let widths: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|(_, mask)| {
            let post = evaluate_masked(data, Some(mask), known, lineshape, noise, space, options)?;
            Ok(post.std[axis])
        })
        .collect();

    let mut per_row: Vec<Vec<f64>> = vec![Vec::new(); n_traces.len()];
    for ((row, _), w) in jobs.iter().zip(widths) {
        per_row[*row].push(w?);
    }
    let rows: Vec<ScalingRow> = n_traces
        .iter()
        .zip(per_row)
        .map(|(&n, mut w)| {
            if w.len() == 1 {
                w = vec![w[0]; repetitions];
            }
            let m = w.iter().sum::<f64>() / w.len() as f64;
            let s = if w.len() > 1 {
                (w.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (w.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            ScalingRow {
                n_traces: n,
                mean_width: m,
                std_width: s,
                widths: w,
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.n_traces as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_width).collect();
    let distinct = xs.windows(2).any(|w| w[0] != w[1]);
    let (slope, intercept) = if distinct {
        let (s, i) = log_log_fit(&xs, &ys);
        (Some(s), Some(i))
    } else {
        (None, None)
    };
    Ok(ScalingStudy {
        parameter: parameter.to_string(),
        repetitions,
        seed,
        rows,
        slope,
        intercept,
    })
}
