//! Small statistics toolkit: moments, quantiles, Kolmogorov-Smirnov tests
//! and least-squares lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Linear-interpolation quantile of unsorted data (`p ∈ [0,1]`).
pub fn quantile(v: &[f64], p: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, p)
}

pub fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    if s.is_empty() {
        return f64::NAN;
    }
    let h = p.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn median(v: &[f64]) -> f64 {
    quantile(v, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

impl Quartiles {
    pub fn of(v: &[f64]) -> Self {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        Self { q25: quantile_sorted(&s, 0.25), median: quantile_sorted(&s, 0.5), q75: quantile_sorted(&s, 0.75) }
    }
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let t = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += sign * t;
        if t < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// KS p-value with the Stephens small-sample correction.
fn ks_p(d: f64, n_eff: f64) -> f64 {
    let r = n_eff.sqrt();
    kolmogorov_q((r + 0.12 + 0.11 / r) * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> Result<KsResult> {
    if data.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    let mut s = data.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in s.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult { d, p: ks_p(d, n) })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult { d, p: ks_p(d, ne) })
}

/// Difference of means in units of its standard error; zero when both
/// samples are constant and equal.
pub fn z_score(a: &[f64], b: &[f64]) -> f64 {
    let diff = mean(a) - mean(b);
    let se = (variance(a) / a.len() as f64 + variance(b) / b.len() as f64).sqrt();
    if se == 0.0 {
        if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY }
    } else {
        diff / se
    }
}

/// Least-squares line `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain("line fit needs at least two paired points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("line fit needs distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
