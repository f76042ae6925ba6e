use serde::{Deserialize, Serialize};

/// Tabulated 1D posterior density, normalised by the trapezoid rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub name: String,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

fn trapz(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

impl Marginal {
    /// Normalises `weights` over `x` (strictly increasing). Falls back to a
    /// uniform density if the weights integrate to zero.
    pub fn from_weights(name: &str, x: Vec<f64>, weights: Vec<f64>) -> Self {
        let z = trapz(&x, &weights);
        let density = if z > 0.0 && z.is_finite() {
            weights.iter().map(|w| w / z).collect()
        } else {
            let span = x.last().copied().unwrap_or(1.0) - x.first().copied().unwrap_or(0.0);
            vec![if span > 0.0 { 1.0 / span } else { 0.0 }; x.len()]
        };
        Marginal {
            name: name.to_string(),
            x,
            density,
        }
    }

    pub fn integral(&self) -> f64 {
        trapz(&self.x, &self.density)
    }

    pub fn mean(&self) -> f64 {
        let xy: Vec<f64> = self.x.iter().zip(&self.density).map(|(x, p)| x * p).collect();
        trapz(&self.x, &xy)
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        let v: Vec<f64> = self
            .x
            .iter()
            .zip(&self.density)
            .map(|(x, p)| (x - m).powi(2) * p)
            .collect();
        trapz(&self.x, &v).max(0.0).sqrt()
    }

    /// Cumulative distribution at each node.
    pub fn cdf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.x.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..self.x.len() {
            acc += 0.5 * (self.x[i] - self.x[i - 1]) * (self.density[i] + self.density[i - 1]);
            out.push(acc);
        }
        out
    }

    /// Inverse CDF with the density linear between nodes.
    pub fn quantile(&self, q: f64) -> f64 {
        let cdf = self.cdf();
        let total = *cdf.last().unwrap_or(&0.0);
        let n = self.x.len();
        if n == 0 {
            return f64::NAN;
        }
        if n == 1 || total <= 0.0 {
            return self.x[0];
        }
        let target = q.clamp(0.0, 1.0) * total;
        let i = match cdf.iter().position(|c| *c >= target) {
            Some(0) => return self.x[0],
            Some(i) => i,
            None => return self.x[n - 1],
        };
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        let (p0, p1) = (self.density[i - 1], self.density[i]);
        let dx = x1 - x0;
        let r = target - cdf[i - 1];
        // Solve p0 t + (p1 - p0) t² / (2 dx) = r for t in [0, dx].
        let a = (p1 - p0) / (2.0 * dx);
        let t = if a.abs() < 1e-300 || a.abs() * dx < 1e-12 * (p0.abs() + p1.abs()) {
            if p0 > 0.0 {
                r / p0
            } else {
                dx
            }
        } else {
            let disc = (p0 * p0 + 4.0 * a * r).max(0.0);
            (-p0 + disc.sqrt()) / (2.0 * a)
        };
        x0 + t.clamp(0.0, dx)
    }

    /// Equal-tailed credible interval at `level` (e.g. 0.95).
    pub fn credible_interval(&self, level: f64) -> (f64, f64) {
        let tail = 0.5 * (1.0 - level);
        (self.quantile(tail), self.quantile(1.0 - tail))
    }

    /// Linear interpolation, zero outside the support.
    pub fn density_at(&self, x: f64) -> f64 {
        interp(&self.x, &self.density, x)
    }
}

pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return 0.0;
    }
    if n == 1 {
        return ys[0];
    }
    let i = xs.partition_point(|v| *v <= x).clamp(1, n - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    if x1 == x0 {
        return ys[i];
    }
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] * (1.0 - t) + ys[i] * t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(mu: f64, s: f64) -> Marginal {
        let x: Vec<f64> = (0..=2000)
            .map(|i| mu - 8.0 * s + 16.0 * s * i as f64 / 2000.0)
            .collect();
        let w = x.iter().map(|v| (-0.5 * ((v - mu) / s).powi(2)).exp()).collect();
        Marginal::from_weights("g", x, w)
    }

    #[test]
    fn gaussian_moments_and_interval() {
        let m = gaussian(1.5, 0.2);
        assert!((m.integral() - 1.0).abs() < 1e-12);
        assert!((m.mean() - 1.5).abs() < 1e-9);
        assert!((m.std() - 0.2).abs() < 1e-5);
        let (lo, hi) = m.credible_interval(0.95);
        assert!((lo - (1.5 - 1.959964 * 0.2)).abs() < 1e-4, "{lo}");
        assert!((hi - (1.5 + 1.959964 * 0.2)).abs() < 1e-4, "{hi}");
    }

    #[test]
    fn uniform_quantiles_exact() {
        let m = Marginal::from_weights("u", vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]);
        assert!((m.quantile(0.25) - 0.5).abs() < 1e-12);
        assert!((m.quantile(0.5) - 1.0).abs() < 1e-12);
        let tri = Marginal::from_weights("t", vec![0.0, 1.0], vec![0.0, 2.0]);
        // CDF x², median at 1/√2.
        assert!((tri.quantile(0.5) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_weights() {
        let m = Marginal::from_weights("z", vec![0.0, 2.0], vec![0.0, 0.0]);
        assert!((m.integral() - 1.0).abs() < 1e-12);
        assert_eq!(interp(&[0.0, 1.0], &[0.0, 2.0], 0.25), 0.5);
        assert_eq!(interp(&[0.0, 1.0], &[0.0, 2.0], 1.5), 0.0);
    }
}
