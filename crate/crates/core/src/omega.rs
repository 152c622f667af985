//! Parameter space of Laguerre-Pólya functions and the embedding of Weyl chambers.
//!
//! An [`OmegaPoint`] stores the two zero-reciprocal sequences as finite
//! truncations together with `tail_eps`, an upper bound on the squared mass
//! `Σ α²` of every omitted term. `delta` always carries the full quadratic
//! mass, so `gamma2()` computed over the stored truncation absorbs the
//! omitted tail at second order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum in a fixed left-to-right order. All identities that must hold
/// exactly (γ₂ = 0 after embedding) are computed through these helpers.
pub(crate) fn ordered_sum(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |acc, &x| acc + x)
}

pub(crate) fn ordered_sum_sq(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |acc, &x| acc + x * x)
}

fn check_nonincreasing(xs: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("{what}: non-finite entry at index {bad}")));
    }
    if let Some(i) = xs.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::Domain(format!(
            "{what}: not nonincreasing at index {} ({} < {})",
            i,
            xs[i],
            xs[i + 1]
        )));
    }
    Ok(())
}

/// A point of the Weyl chamber: a finite nonincreasing real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeylVector(Vec<f64>);

impl WeylVector {
    /// Monotonicity is checked with exact `>=`.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_nonincreasing(&entries, "WeylVector")?;
        Ok(Self(entries))
    }

    /// Sorts into nonincreasing order. Intended for sampler output only.
    pub fn from_unsorted(mut entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|x| x.is_nan()) {
            return Err(Error::Domain("WeylVector: NaN entry".into()));
        }
        entries.sort_by(|a, b| b.partial_cmp(a).expect("NaN filtered above"));
        Self::new(entries)
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Multiplies every entry by a positive factor; ordering is preserved.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::Domain(format!("scale factor must be positive, got {factor}")));
        }
        Ok(Self(self.0.iter().map(|x| x * factor).collect()))
    }
}

impl TryFrom<Vec<f64>> for WeylVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeylVector> for Vec<f64> {
    fn from(w: WeylVector) -> Self {
        w.0
    }
}

#[derive(Serialize, Deserialize)]
struct OmegaRaw {
    alpha_plus: Vec<f64>,
    alpha_minus: Vec<f64>,
    gamma1: f64,
    delta: f64,
    #[serde(default)]
    tail_eps: f64,
}

/// A point `(α⁺, α⁻, γ₁, δ)` of the parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OmegaRaw", into = "OmegaRaw")]
pub struct OmegaPoint {
    alpha_plus: Vec<f64>,
    alpha_minus: Vec<f64>,
    gamma1: f64,
    delta: f64,
    tail_eps: f64,
}

impl OmegaPoint {
    pub fn new(alpha_plus: Vec<f64>, alpha_minus: Vec<f64>, gamma1: f64, delta: f64) -> Result<Self> {
        Self::with_tail(alpha_plus, alpha_minus, gamma1, delta, 0.0)
    }

    /// `tail_eps` bounds `Σ α²` over all terms beyond the stored truncation.
    pub fn with_tail(
        mut alpha_plus: Vec<f64>,
        mut alpha_minus: Vec<f64>,
        gamma1: f64,
        delta: f64,
        tail_eps: f64,
    ) -> Result<Self> {
        check_nonincreasing(&alpha_plus, "alpha_plus")?;
        check_nonincreasing(&alpha_minus, "alpha_minus")?;
        if alpha_plus.last().is_some_and(|&a| a < 0.0) || alpha_minus.last().is_some_and(|&a| a < 0.0) {
            return Err(Error::Domain("alpha sequences must be nonnegative".into()));
        }
        if !gamma1.is_finite() || !delta.is_finite() || !(delta >= 0.0) {
            return Err(Error::Domain(format!("invalid gamma1 = {gamma1} or delta = {delta}")));
        }
        if !(tail_eps >= 0.0) || !tail_eps.is_finite() {
            return Err(Error::Domain(format!("tail_eps must be finite and >= 0, got {tail_eps}")));
        }
        let sq = ordered_sum_sq(&alpha_plus) + ordered_sum_sq(&alpha_minus);
        if sq > delta + 8.0 * f64::EPSILON * delta.max(1.0) {
            return Err(Error::Domain(format!("sum of squares {sq} exceeds delta {delta}")));
        }
        // trailing zeros carry no information
        while alpha_plus.last() == Some(&0.0) {
            alpha_plus.pop();
        }
        while alpha_minus.last() == Some(&0.0) {
            alpha_minus.pop();
        }
        Ok(Self { alpha_plus, alpha_minus, gamma1, delta, tail_eps })
    }

    /// Builds a point from `γ₂` instead of `δ`.
    pub fn from_gamma2(alpha_plus: Vec<f64>, alpha_minus: Vec<f64>, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma2 >= 0.0) {
            return Err(Error::Domain(format!("gamma2 must be >= 0, got {gamma2}")));
        }
        let delta = gamma2 + ordered_sum_sq(&alpha_plus) + ordered_sum_sq(&alpha_minus);
        Self::new(alpha_plus, alpha_minus, gamma1, delta)
    }

    /// The canonical identity point, `E ≡ 1`.
    pub fn identity() -> Self {
        Self { alpha_plus: vec![], alpha_minus: vec![], gamma1: 0.0, delta: 0.0, tail_eps: 0.0 }
    }

    pub fn alpha_plus(&self) -> &[f64] {
        &self.alpha_plus
    }

    pub fn alpha_minus(&self) -> &[f64] {
        &self.alpha_minus
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn tail_eps(&self) -> f64 {
        self.tail_eps
    }

    pub fn sum_sq_alpha(&self) -> f64 {
        ordered_sum_sq(&self.alpha_plus) + ordered_sum_sq(&self.alpha_minus)
    }

    /// `δ − Σ(α⁺)² − Σ(α⁻)²` over the stored truncation.
    pub fn gamma2(&self) -> f64 {
        (self.delta - self.sum_sq_alpha()).max(0.0)
    }

    /// `Σα⁺ − Σα⁻` over the stored truncation.
    pub fn alpha_sum_diff(&self) -> f64 {
        ordered_sum(&self.alpha_plus) - ordered_sum(&self.alpha_minus)
    }

    /// Signed eigenvalues `α⁺ ∪ (−α⁻)` of the diagonal operator built from the point.
    pub fn signed_spectrum(&self) -> Vec<f64> {
        self.alpha_plus
            .iter()
            .copied()
            .chain(self.alpha_minus.iter().map(|a| -a))
            .collect()
    }

    /// Largest possible magnitude of an omitted tail term.
    pub fn tail_alpha_max(&self) -> f64 {
        if self.tail_eps == 0.0 {
            return 0.0;
        }
        let last = match (self.alpha_plus.last(), self.alpha_minus.last()) {
            (Some(&p), Some(&m)) => p.max(m),
            (Some(&p), None) => p.max(self.tail_eps.sqrt()),
            (None, Some(&m)) => m.max(self.tail_eps.sqrt()),
            (None, None) => f64::INFINITY,
        };
        last.min(self.tail_eps.sqrt())
    }

    pub fn is_identity(&self) -> bool {
        self.alpha_plus.is_empty() && self.alpha_minus.is_empty() && self.gamma1 == 0.0 && self.delta == 0.0
    }

    /// Swaps `α⁺ ↔ α⁻` and negates `γ₁`; `E` of the result at `z` equals `E` of `self` at `−z`.
    pub fn reflected(&self) -> Self {
        Self {
            alpha_plus: self.alpha_minus.clone(),
            alpha_minus: self.alpha_plus.clone(),
            gamma1: -self.gamma1,
            delta: self.delta,
            tail_eps: self.tail_eps,
        }
    }
}

impl TryFrom<OmegaRaw> for OmegaPoint {
    type Error = Error;
    fn try_from(r: OmegaRaw) -> Result<Self> {
        Self::with_tail(r.alpha_plus, r.alpha_minus, r.gamma1, r.delta, r.tail_eps)
    }
}

impl From<OmegaPoint> for OmegaRaw {
    fn from(w: OmegaPoint) -> Self {
        OmegaRaw {
            alpha_plus: w.alpha_plus,
            alpha_minus: w.alpha_minus,
            gamma1: w.gamma1,
            delta: w.delta,
            tail_eps: w.tail_eps,
        }
    }
}

/// Embeds a point of the Weyl chamber into the parameter space.
///
/// `γ₁` and `δ` are computed from the embedded sequences with the same
/// ordered sums used by [`OmegaPoint::alpha_sum_diff`] and
/// [`OmegaPoint::gamma2`], so `γ₂ = 0` and `Σα⁺ − Σα⁻ = γ₁` hold bit-exactly.
pub fn embed_weyl(x: &WeylVector) -> OmegaPoint {
    let xs = x.entries();
    let alpha_plus: Vec<f64> = xs.iter().take_while(|&&v| v > 0.0).copied().collect();
    let alpha_minus: Vec<f64> = xs.iter().rev().take_while(|&&v| v < 0.0).map(|v| -v).collect();
    let gamma1 = ordered_sum(&alpha_plus) - ordered_sum(&alpha_minus);
    let delta = ordered_sum_sq(&alpha_plus) + ordered_sum_sq(&alpha_minus);
    OmegaPoint { alpha_plus, alpha_minus, gamma1, delta, tail_eps: 0.0 }
}

/// Convenience wrapper validating the slice first.
pub fn embed_slice(xs: &[f64]) -> Result<OmegaPoint> {
    Ok(embed_weyl(&WeylVector::new(xs.to_vec())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvConfig {
    /// Number of trailing rows whose successive differences form the residual.
    pub window: usize,
    /// Largest α index examined.
    pub index_cap: usize,
    pub tol: f64,
}

impl Default for OvConfig {
    fn default() -> Self {
        Self { window: 5, index_cap: 8, tol: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvResiduals {
    pub alpha_plus: Vec<f64>,
    pub alpha_minus: Vec<f64>,
    pub gamma1: f64,
    pub delta: f64,
}

impl OvResiduals {
    pub fn max(&self) -> f64 {
        self.alpha_plus
            .iter()
            .chain(&self.alpha_minus)
            .copied()
            .chain([self.gamma1, self.delta])
            .fold(0.0, f64::max)
    }
}

/// Desk-scale diagnostic for the Olshanski-Vershik conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvReport {
    pub alpha_plus: Vec<f64>,
    pub alpha_minus: Vec<f64>,
    pub gamma1: f64,
    pub delta: f64,
    pub residuals: OvResiduals,
    pub tol: f64,
    pub converged: bool,
}

fn tail_residual(values: &[f64], window: usize) -> f64 {
    if values.len() < 2 {
        return f64::INFINITY;
    }
    let start = values.len().saturating_sub(window.max(2));
    values[start..]
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
}

/// Embeds every rescaled row and reports Cauchy residuals over the last
/// `config.window` rows. The last embedded values serve as limit estimates.
pub fn ov_diagnose<F>(seq: &[WeylVector], rescale: F, config: OvConfig) -> Result<OvReport>
where
    F: Fn(usize) -> f64,
{
    if seq.is_empty() {
        return Err(Error::Empty("ov_diagnose needs at least one row"));
    }
    let min_len = seq.iter().map(WeylVector::len).min().unwrap_or(0);
    let cap = config.index_cap.min(min_len);
    let embedded: Vec<OmegaPoint> = seq
        .iter()
        .map(|row| row.scaled(rescale(row.len())).map(|r| embed_weyl(&r)))
        .collect::<Result<_>>()?;

    let coord = |pick: &dyn Fn(&OmegaPoint) -> f64| -> Vec<f64> { embedded.iter().map(pick).collect() };
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);

    let mut alpha_plus = Vec::with_capacity(cap);
    let mut alpha_minus = Vec::with_capacity(cap);
    let mut res_plus = Vec::with_capacity(cap);
    let mut res_minus = Vec::with_capacity(cap);
    for i in 0..cap {
        let p = coord(&|w| at(w.alpha_plus(), i));
        let m = coord(&|w| at(w.alpha_minus(), i));
        res_plus.push(tail_residual(&p, config.window));
        res_minus.push(tail_residual(&m, config.window));
        alpha_plus.push(*p.last().unwrap());
        alpha_minus.push(*m.last().unwrap());
    }
    let g = coord(&|w| w.gamma1());
    let d = coord(&|w| w.delta());
    let residuals = OvResiduals {
        alpha_plus: res_plus,
        alpha_minus: res_minus,
        gamma1: tail_residual(&g, config.window),
        delta: tail_residual(&d, config.window),
    };
    let converged = seq.len() >= 2 && residuals.max() <= config.tol;
    Ok(OvReport {
        alpha_plus,
        alpha_minus,
        gamma1: *g.last().unwrap(),
        delta: *d.last().unwrap(),
        residuals,
        tol: config.tol,
        converged,
    })
}

/// `(Σ |aᵢ − bᵢ|³)^{1/3}` with the shorter sequence zero-padded.
pub fn l3_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.iter().chain(b).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Domain("l3_distance expects finite nonnegative sequences".into()));
    }
    let n = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let s: f64 = (0..n).map(|i| (at(a, i) - at(b, i)).abs().powi(3)).sum();
    Ok(s.cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(v: &[f64]) -> WeylVector {
        WeylVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn embed_two_points() {
        let w = embed_weyl(&wv(&[3.0, -2.0]));
        assert_eq!(w.alpha_plus(), &[3.0]);
        assert_eq!(w.alpha_minus(), &[2.0]);
        assert_eq!(w.gamma1(), 1.0);
        assert_eq!(w.delta(), 13.0);
        assert_eq!(w.gamma2(), 0.0);
    }

    #[test]
    fn embed_zero_vector_is_identity() {
        let w = embed_weyl(&wv(&[0.0, 0.0, 0.0]));
        assert!(w.is_identity());
        assert_eq!(w, OmegaPoint::identity());
    }

    #[test]
    fn embed_single_point() {
        let w = embed_weyl(&wv(&[2.5]));
        assert_eq!(w.alpha_plus(), &[2.5]);
        assert!(w.alpha_minus().is_empty());
        assert_eq!(w.gamma1(), 2.5);
        assert_eq!(w.delta(), 6.25);
        assert_eq!(w.gamma2(), 0.0);
    }

    #[test]
    fn reversed_vector_rejected() {
        assert!(WeylVector::new(vec![-1.0, 0.5, 2.0]).is_err());
        assert!(WeylVector::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn omega_rejects_mass_violation() {
        assert!(OmegaPoint::new(vec![1.0], vec![], 0.0, 0.5).is_err());
        assert!(OmegaPoint::new(vec![0.5, 1.0], vec![], 0.0, 5.0).is_err());
        assert!(OmegaPoint::new(vec![-0.5], vec![], 0.0, 5.0).is_err());
        assert!(OmegaPoint::new(vec![0.5], vec![], 0.0, 0.25).is_ok());
    }

    #[test]
    fn omega_json_shape() {
        let w = OmegaPoint::new(vec![0.5], vec![0.25], 1.0, 1.0).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"alpha_plus":[0.5],"alpha_minus":[0.25],"gamma1":1.0,"delta":1.0,"tail_eps":0.0}"#);
        let back: OmegaPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        let bad = r#"{"alpha_plus":[2.0],"alpha_minus":[],"gamma1":0,"delta":1}"#;
        assert!(serde_json::from_str::<OmegaPoint>(bad).is_err());
    }

    #[test]
    fn ov_constant_rows_converge() {
        let seq: Vec<WeylVector> = (1..=10)
            .map(|n| {
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                wv(&v)
            })
            .collect();
        let r = ov_diagnose(&seq, |_| 1.0, OvConfig { tol: 1e-12, ..Default::default() }).unwrap();
        assert!(r.converged);
        assert_eq!(r.alpha_plus, vec![1.0]);
        assert_eq!(r.alpha_minus, vec![0.0]);
        assert_eq!(r.gamma1, 1.0);
        assert_eq!(r.delta, 1.0);
    }

    #[test]
    fn ov_flat_rows_spread_out() {
        let seq: Vec<WeylVector> = (200..=400).map(|n| wv(&vec![1.0 / n as f64; n])).collect();
        let r = ov_diagnose(&seq, |_| 1.0, OvConfig { tol: 1e-3, index_cap: 3, window: 5 }).unwrap();
        assert!((r.gamma1 - 1.0).abs() < 1e-12);
        assert!(r.delta < 3e-3);
        assert!(r.alpha_plus.iter().all(|a| *a < 3e-3));
        assert!(r.converged);
    }

    #[test]
    fn ov_single_row_not_converged() {
        let r = ov_diagnose(&[wv(&[1.0])], |_| 1.0, OvConfig::default()).unwrap();
        assert!(!r.converged);
        assert!(r.residuals.gamma1.is_infinite());
        assert!(r.residuals.delta.is_infinite());
        assert!(ov_diagnose(&[], |_| 1.0, OvConfig::default()).is_err());
    }

    #[test]
    fn ov_cap_is_clamped() {
        let seq = vec![wv(&[1.0, 0.0]), wv(&[1.0, 0.0, 0.0])];
        let r = ov_diagnose(&seq, |_| 1.0, OvConfig { index_cap: 50, ..Default::default() }).unwrap();
        assert_eq!(r.alpha_plus.len(), 2);
    }

    #[test]
    fn l3_examples() {
        assert_eq!(l3_distance(&[0.3, 0.2], &[0.3, 0.2]).unwrap(), 0.0);
        assert_eq!(l3_distance(&[1.0, 0.0], &[]).unwrap(), 1.0);
        assert!((l3_distance(&[0.5, 0.5], &[0.5, 0.1]).unwrap() - 0.4).abs() < 1e-15);
        assert!(l3_distance(&[-1.0], &[0.0]).is_err());
    }

    #[test]
    fn reflection_swaps_sides() {
        let w = OmegaPoint::new(vec![0.5], vec![0.25, 0.1], 0.3, 1.0).unwrap();
        let r = w.reflected();
        assert_eq!(r.alpha_plus(), w.alpha_minus());
        assert_eq!(r.gamma1(), -0.3);
    }
}
