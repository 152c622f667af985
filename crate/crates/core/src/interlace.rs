//! Dixon-Anderson corners kernel, interlacing arrays and consistency tests.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::RngStream;
use crate::omega::WeylVector;
use crate::stats::{ks_two_sample, mean, z_score};

/// Relative gap below which neighbouring points count as tied.
pub const TIE_GAP: f64 = 1e-13;
const MAX_BISECT: usize = 200;
const WEIGHT_FLOOR: f64 = 1e-300;

/// `y₁ ≥ x₁ ≥ y₂ ≥ … ≥ x_N ≥ y_{N+1}` up to `tol`.
pub fn interlaces(x: &WeylVector, y: &WeylVector, tol: f64) -> bool {
    let (x, y) = (x.entries(), y.entries());
    x.len() + 1 == y.len() && x.iter().enumerate().all(|(m, v)| *v <= y[m] + tol && *v >= y[m + 1] - tol)
}

/// Rows of lengths `1, 2, …, M`, each interlacing the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<WeylVector>", into = "Vec<WeylVector>")]
pub struct InterlacingArray {
    rows: Vec<WeylVector>,
}

impl InterlacingArray {
    /// Validates lengths and interlacing with tolerance `1e-12·span` of the larger row.
    pub fn new(rows: Vec<WeylVector>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("interlacing array"));
        }
        for (k, r) in rows.iter().enumerate() {
            if r.len() != k + 1 {
                return Err(Error::Domain(format!("row {k} has length {}, expected {}", r.len(), k + 1)));
            }
        }
        for k in 0..rows.len() - 1 {
            let tol = 1e-12 * span(rows[k + 1].entries());
            if !interlaces(&rows[k], &rows[k + 1], tol) {
                return Err(Error::Domain(format!("row {} does not interlace row {}", k + 1, k + 2)));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[WeylVector] {
        &self.rows
    }

    /// Row of length `n`.
    pub fn row(&self, n: usize) -> Option<&WeylVector> {
        n.checked_sub(1).and_then(|i| self.rows.get(i))
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }
}

impl TryFrom<Vec<WeylVector>> for InterlacingArray {
    type Error = Error;
    fn try_from(rows: Vec<WeylVector>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<InterlacingArray> for Vec<WeylVector> {
    fn from(a: InterlacingArray) -> Self {
        a.rows
    }
}

fn span(y: &[f64]) -> f64 {
    match (y.first(), y.last()) {
        (Some(a), Some(b)) => a - b,
        _ => 0.0,
    }
}

/// Log of a Gamma(shape, 1) variate; shapes below 1 are boosted through
/// `G(a) = G(a+1)·U^{1/a}` so small weights do not underflow.
fn log_gamma_variate(shape: f64, r: &mut ChaCha12Rng) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("valid shape").sample(r).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid shape").sample(r).ln();
        let u: f64 = 1.0 - r.random::<f64>();
        g + u.ln() / shape
    }
}

/// Dirichlet(β/2, …, β/2) weights scaled so the largest is 1.
fn dirichlet_weights(n: usize, beta: f64, r: &mut ChaCha12Rng) -> Vec<f64> {
    let lg: Vec<f64> = (0..n).map(|_| log_gamma_variate(beta / 2.0, r)).collect();
    let top = lg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lg.iter().map(|v| (v - top).exp().max(WEIGHT_FLOOR)).collect()
}

/// Roots of `Σ_j d_j ∏_{k≠j}(z − y_k)` for fixed weights `d`.
///
/// Tied values of multiplicity `m` give that value `m − 1` times; the
/// remaining roots solve `Σ_g D_g/(z − v_g) = 0` over distinct values `v_g`
/// with pooled weights, one per gap, by bisection.
pub fn kernel_roots(y: &WeylVector, d: &[f64]) -> Result<WeylVector> {
    let ys = y.entries();
    if ys.len() < 2 {
        return Err(Error::Domain("kernel needs at least two points".into()));
    }
    if d.len() != ys.len() {
        return Err(Error::Domain("weight count must match the point count".into()));
    }
    if ys.iter().chain(d).any(|v| !v.is_finite()) || d.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Domain("points must be finite and weights positive".into()));
    }
    let sp = span(ys);
    let mut vals: Vec<f64> = Vec::new();
    let mut wts: Vec<f64> = Vec::new();
    let mut roots: Vec<f64> = Vec::with_capacity(ys.len() - 1);
    for (i, (&v, &w)) in ys.iter().zip(d).enumerate() {
        if i > 0 && vals.last().is_some_and(|last| last - v <= TIE_GAP * sp) {
            *wts.last_mut().expect("nonempty") += w;
            roots.push(*vals.last().expect("nonempty"));
        } else {
            vals.push(v);
            wts.push(w);
        }
    }
    let secular = |z: f64| vals.iter().zip(&wts).map(|(v, w)| w / (z - v)).sum::<f64>();
    for g in 0..vals.len().saturating_sub(1) {
        let (mut lo, mut hi) = (vals[g + 1], vals[g]);
        let (a, b) = (lo, hi);
        for _ in 0..MAX_BISECT {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            // decreasing from +∞ to −∞ on the gap
            if secular(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        if !(root >= a && root <= b) || !root.is_finite() {
            return Err(Error::Bracketing { lo: a, hi: b });
        }
        roots.push(root);
    }
    if roots.len() + 1 != ys.len() {
        return Err(Error::Numerical(format!("found {} roots for {} points", roots.len(), ys.len())));
    }
    WeylVector::from_unsorted(roots)
}

/// One step of the corners kernel from `N+1` points to `N`.
pub fn apply_kernel(y: &WeylVector, beta: f64, rng: RngStream) -> Result<WeylVector> {
    apply_kernel_with(y, beta, &mut rng.rng())
}

fn apply_kernel_with(y: &WeylVector, beta: f64, r: &mut ChaCha12Rng) -> Result<WeylVector> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if y.len() < 2 {
        return Err(Error::Domain("kernel needs at least two points".into()));
    }
    if y.entries().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite point".into()));
    }
    let d = dirichlet_weights(y.len(), beta, r);
    kernel_roots(y, &d)
}

/// Projects `top` down to a single point, one kernel step per row.
pub fn sample_array(top: &WeylVector, beta: f64, rng: RngStream) -> Result<InterlacingArray> {
    if top.is_empty() {
        return Err(Error::Empty("top row"));
    }
    let mut r = rng.rng();
    let mut rows = vec![top.clone()];
    while rows.last().expect("nonempty").len() > 1 {
        let next = apply_kernel_with(rows.last().expect("nonempty"), beta, &mut r)?;
        rows.push(next);
    }
    rows.reverse();
    InterlacingArray::new(rows)
}

/// Scalar summary of a configuration compared by the consistency test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Sum,
    Max,
    Min,
    ReciprocalSum,
    Coordinate(usize),
}

impl Statistic {
    pub fn eval(&self, x: &WeylVector) -> f64 {
        let e = x.entries();
        match self {
            Self::Sum => e.iter().sum(),
            Self::Max => e[0],
            Self::Min => e[e.len() - 1],
            Self::ReciprocalSum => e.iter().map(|v| 1.0 / v).sum(),
            Self::Coordinate(i) => e.get(*i).copied().unwrap_or(f64::NAN),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Sum => "sum".into(),
            Self::Max => "max".into(),
            Self::Min => "min".into(),
            Self::ReciprocalSum => "reciprocal_sum".into(),
            Self::Coordinate(i) => format!("coordinate_{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub statistic: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub z: f64,
    pub ks: f64,
    pub p: f64,
}

impl ConsistencyReport {
    pub const Z_LIMIT: f64 = 3.0;
    pub const ALPHA: f64 = 0.01;

    /// Mean outside the 3σ band or KS rejection at the 1% level.
    pub fn rejects(&self) -> bool {
        !(self.z.abs() <= Self::Z_LIMIT) || self.p < Self::ALPHA
    }
}

pub const MIN_TRIALS: usize = 100;

/// Statistic values of `trials` direct samples at size `N` (`a`) and of
/// `trials` kernel projections of samples at size `N+1` (`b`).
pub fn consistency_samples<F>(family: F, beta: f64, n: usize, trials: usize, statistic: Statistic, rng: RngStream) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(usize, RngStream) -> Result<WeylVector> + Sync,
{
    if n == 0 {
        return Err(Error::Domain("consistency test needs N ≥ 1".into()));
    }
    let (sa, sb, sk) = (rng.substream(0), rng.substream(1), rng.substream(2));
    let a: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| family(n, sa.substream(t)).map(|x| statistic.eval(&x)))
        .collect::<Result<_>>()?;
    let b: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let y = family(n + 1, sb.substream(t))?;
            apply_kernel(&y, beta, sk.substream(t)).map(|x| statistic.eval(&x))
        })
        .collect::<Result<_>>()?;
    Ok((a, b))
}

/// Two-sample comparison (z-score of means, KS) of [`consistency_samples`].
pub fn consistency_test<F>(family: F, beta: f64, n: usize, trials: usize, statistic: Statistic, rng: RngStream) -> Result<ConsistencyReport>
where
    F: Fn(usize, RngStream) -> Result<WeylVector> + Sync,
{
    if trials < MIN_TRIALS {
        return Err(Error::InsufficientTrials { min: MIN_TRIALS, got: trials });
    }
    let (a, b) = consistency_samples(family, beta, n, trials, statistic, rng)?;
    let ks = ks_two_sample(&a, &b)?;
    Ok(ConsistencyReport { statistic: statistic.name(), mean_a: mean(&a), mean_b: mean(&b), z: z_score(&a, &b), ks: ks.d, p: ks.p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_one_sample, variance};

    fn wv(v: &[f64]) -> WeylVector {
        WeylVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn linear_case_is_weighted_average() {
        let y = wv(&[3.0, -1.0]);
        let x = kernel_roots(&y, &[0.25, 0.75]).unwrap();
        // root of d₁(z − y₂) + d₂(z − y₁) is d₁y₂ + d₂y₁ for normalized weights
        assert!((x.entries()[0] - (0.25 * -1.0 + 0.75 * 3.0)).abs() < 1e-14);
    }

    #[test]
    fn roots_match_polynomial() {
        let y = wv(&[4.0, 2.5, 1.0, -0.5, -3.0]);
        let d = [0.1, 0.4, 0.2, 0.15, 0.15];
        let x = kernel_roots(&y, &d).unwrap();
        assert_eq!(x.len(), 4);
        let p = |z: f64| {
            (0..5).map(|j| d[j] * (0..5).filter(|k| *k != j).map(|k| z - y.entries()[k]).product::<f64>()).sum::<f64>()
        };
        let scale = (0..5).map(|j| d[j] * 4f64.powi(4)).sum::<f64>();
        for r in x.entries() {
            assert!(p(*r).abs() < 1e-12 * scale);
        }
        assert!(interlaces(&x, &y, 0.0));
    }

    #[test]
    fn ties_are_roots() {
        let x = apply_kernel(&wv(&[2.0, 2.0]), 1.0, RngStream::new(0)).unwrap();
        assert_eq!(x.entries(), &[2.0]);
        let x = apply_kernel(&wv(&[5.0, 1.0, 1.0, 1.0, -2.0]), 2.0, RngStream::new(1)).unwrap();
        assert_eq!(x.entries()[1], 1.0);
        assert_eq!(x.entries()[2], 1.0);
        assert!(x.entries()[0] > 1.0 && x.entries()[3] < 1.0);
    }

    #[test]
    fn near_ties_collapse() {
        let y = wv(&[1.0 + 1e-15, 1.0, 0.0]);
        let x = kernel_roots(&y, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(x.entries()[0], 1.0 + 1e-15);
    }

    #[test]
    fn beta_two_uniform_pushforward() {
        let s = RngStream::new(2);
        let y = wv(&[1.0, 0.0]);
        let v: Vec<f64> = (0..5000).map(|t| apply_kernel(&y, 2.0, s.substream(t)).unwrap().entries()[0]).collect();
        assert!(ks_one_sample(&v, |x| x.clamp(0.0, 1.0)).unwrap().p > 0.01);
    }

    #[test]
    fn small_beta_still_interlaces() {
        let s = RngStream::new(3);
        let y = wv(&[3.0, 2.9, 0.0, -0.1, -5.0]);
        for t in 0..2000 {
            let x = apply_kernel(&y, 0.1, s.substream(t)).unwrap();
            assert_eq!(x.len(), 4);
            assert!(interlaces(&x, &y, 1e-12 * 8.0));
        }
    }

    #[test]
    fn conditional_mean_of_sum() {
        let y = wv(&[2.0, 1.5, -0.5, -4.0]);
        let sy: f64 = y.entries().iter().sum();
        for beta in [0.5, 4.0] {
            let s = RngStream::new(4);
            let v: Vec<f64> = (0..20_000).map(|t| apply_kernel(&y, beta, s.substream(t)).unwrap().entries().iter().sum()).collect();
            let m = mean(&v);
            let se = (variance(&v) / v.len() as f64).sqrt();
            assert!((m - 0.75 * sy).abs() < 3.0 * se, "β={beta}: {m}");
        }
    }

    #[test]
    fn arrays() {
        let top = wv(&[1.5]);
        let a = sample_array(&top, 2.0, RngStream::new(5)).unwrap();
        assert_eq!(a.depth(), 1);
        let c = sample_array(&wv(&[0.7; 6]), 1.0, RngStream::new(5)).unwrap();
        assert!(c.rows().iter().all(|r| r.entries().iter().all(|v| *v == 0.7)));
        let top = wv(&[9.0, 4.0, 3.5, 0.0, -2.0, -8.0]);
        let a = sample_array(&top, 0.5, RngStream::new(6)).unwrap();
        assert_eq!(a.depth(), 6);
        assert_eq!(a.row(6).unwrap(), &top);
        let j = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<InterlacingArray>(&j).unwrap(), a);
        assert!(serde_json::from_str::<InterlacingArray>("[[1.0],[0.0,-1.0]]").is_err());
    }

    #[test]
    fn consistency_point_mass() {
        let fam = |n: usize, _r: RngStream| Ok(WeylVector::new(vec![1.0; n]).unwrap());
        let r = consistency_test(fam, 2.0, 3, 100, Statistic::Sum, RngStream::new(7)).unwrap();
        assert_eq!(r.z, 0.0);
        assert!(!r.rejects());
        assert!(matches!(
            consistency_test(fam, 2.0, 3, 99, Statistic::Sum, RngStream::new(7)),
            Err(Error::InsufficientTrials { min: 100, got: 99 })
        ));
    }
}
