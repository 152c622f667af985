//! Samplers for the matrix and β-ensemble measures.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::hermitian::{eigenvalues, HermitianMatrix};
use super::loggas::{log_density_hp, log_density_il, mcmc_loggas, McmcConfig};
use super::rng::RngStream;
use super::tridiag::tridiag_eigenvalues;
use crate::error::{Error, Result};
use crate::omega::{OmegaPoint, WeylVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn normal(rng: &mut ChaCha12Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard complex Gaussian, `E|ξ|² = 1`.
fn complex_normal(rng: &mut ChaCha12Rng) -> Complex64 {
    let a = normal(rng);
    let b = normal(rng);
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

fn chi(k: f64, rng: &mut ChaCha12Rng) -> f64 {
    ChiSquared::new(k).expect("positive degrees of freedom").sample(rng).sqrt()
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("matrix size must be at least 1".into()));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > -1.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("eta must exceed -1, got {eta}")));
    }
    Ok(())
}

/// GUE matrix with `E[G_ii²] = 1` and `E|G_ij|² = 1`.
///
/// Entries are drawn shell by shell (column `n`, rows `0..=n`), so the
/// `N`-corner of a larger sample with the same stream is the size-`N` sample.
pub fn sample_gue(n: usize, rng: RngStream) -> Result<HermitianMatrix> {
    check_size(n)?;
    let mut r = rng.rng();
    let mut m = DMatrix::from_element(n, n, ZERO);
    for j in 0..n {
        fill_gue_shell(&mut m, j, 1.0, &mut r);
    }
    Ok(HermitianMatrix::hermitize(m))
}

fn fill_gue_shell(m: &mut DMatrix<Complex64>, j: usize, scale: f64, r: &mut ChaCha12Rng) {
    for i in 0..j {
        let g = complex_normal(r) * scale;
        m[(i, j)] = g;
        m[(j, i)] = g.conj();
    }
    m[(j, j)] = Complex64::new(normal(r) * scale, 0.0);
}

/// `N×N` corner of the ergodic matrix model with the rank-one sums cut at `K`.
///
/// `H_ij = γ₁δ_ij + √γ₂ G_ij + Σ_k α⁺_k(ξ⁺_i ξ̄⁺_j − δ_ij) − Σ_k α⁻_k(ξ⁻_i ξ̄⁻_j − δ_ij)`.
/// Draws are ordered by shell, so corners are exact prefixes.
pub fn sample_ergodic(w: &OmegaPoint, n: usize, k: usize, rng: RngStream) -> Result<HermitianMatrix> {
    check_size(n)?;
    let support = w.alpha_plus().len().max(w.alpha_minus().len());
    if k < support {
        return Err(Error::TruncationTooSmall { k, support });
    }
    let coef = |a: &[f64], i: usize| a.get(i).copied().unwrap_or(0.0);
    let g2 = w.gamma2().sqrt();
    let mut r = rng.rng();
    let mut m = DMatrix::from_element(n, n, ZERO);
    let mut xp = vec![vec![ZERO; n]; k];
    let mut xm = vec![vec![ZERO; n]; k];
    for j in 0..n {
        fill_gue_shell(&mut m, j, g2, &mut r);
        for row in xp.iter_mut() {
            row[j] = complex_normal(&mut r);
        }
        for row in xm.iter_mut() {
            row[j] = complex_normal(&mut r);
        }
    }
    for kk in 0..k {
        let (ap, am) = (coef(w.alpha_plus(), kk), coef(w.alpha_minus(), kk));
        for j in 0..n {
            for i in 0..=j {
                let mut v = xp[kk][i] * xp[kk][j].conj() * ap - xm[kk][i] * xm[kk][j].conj() * am;
                if i == j {
                    v = Complex64::new(v.re - ap + am, 0.0);
                }
                m[(i, j)] += v;
                if i != j {
                    m[(j, i)] += v.conj();
                }
            }
        }
    }
    for i in 0..n {
        m[(i, i)] += w.gamma1();
    }
    Ok(HermitianMatrix::hermitize(m))
}

/// Draws `ω ~ ν` and then the ergodic matrix at `ω`.
pub fn sample_mixture<F>(nu: F, n: usize, k: usize, rng: RngStream) -> Result<(OmegaPoint, HermitianMatrix)>
where
    F: FnOnce(&mut ChaCha12Rng) -> OmegaPoint,
{
    let mut r = rng.substream(0).rng();
    let w = nu(&mut r);
    let h = sample_ergodic(&w, n, k, rng.substream(1))?;
    Ok((w, h))
}

/// Tridiagonal model of the Gaussian β-ensemble: the points are
/// `scale · eig(T)` for `T` with diagonal `d` and off-diagonal `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbeTridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub scale: f64,
}

impl GbeTridiagonal {
    /// Diagonal `N(0,2)/√2`, off-diagonal `χ_{β(N−k)}/√2`, scale `1/√(2βN)`.
    pub fn sample(n: usize, beta: f64, rng: RngStream) -> Result<Self> {
        check_size(n)?;
        check_beta(beta)?;
        let mut r = rng.rng();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d: Vec<f64> = (0..n).map(|_| normal(&mut r) * 2f64.sqrt() * s).collect();
        let e: Vec<f64> = (1..n).map(|i| chi(beta * (n - i) as f64, &mut r) * s).collect();
        Ok(Self { d, e, scale: 1.0 / (2.0 * beta * n as f64).sqrt() })
    }

    pub fn points(&self) -> Result<WeylVector> {
        let ev = tridiag_eigenvalues(&self.d, &self.e)?;
        WeylVector::new(ev.into_iter().map(|v| v * self.scale).collect())
    }
}

/// Gaussian β-ensemble with density `∝ exp(−βN Σx²) ∏|xᵢ − xⱼ|^β`,
/// so the spectrum fills `[−1, 1]`.
pub fn sample_gbe(n: usize, beta: f64, rng: RngStream) -> Result<WeylVector> {
    GbeTridiagonal::sample(n, beta, rng)?.points()
}

/// Laguerre β-ensemble with density `∝ ∏ xⱼ^η e^{−xⱼ} ∏|xᵢ − xⱼ|^β`.
pub fn sample_laguerre(n: usize, beta: f64, eta: f64, rng: RngStream) -> Result<WeylVector> {
    check_size(n)?;
    check_beta(beta)?;
    check_eta(eta)?;
    let mut r = rng.rng();
    let a = eta + 1.0 + beta * (n as f64 - 1.0) / 2.0;
    let b: Vec<f64> = (0..n).map(|i| chi(2.0 * a - beta * i as f64, &mut r)).collect();
    let c: Vec<f64> = (1..n).map(|i| chi(beta * (n - i) as f64, &mut r)).collect();
    // B lower bidiagonal; B Bᵀ is tridiagonal
    let d: Vec<f64> = (0..n)
        .map(|i| b[i] * b[i] + if i > 0 { c[i - 1] * c[i - 1] } else { 0.0 })
        .collect();
    let e: Vec<f64> = (0..n.saturating_sub(1)).map(|i| b[i] * c[i]).collect();
    let ev = tridiag_eigenvalues(&d, &e)?;
    // clamp tiny negative rounding of a positive-definite spectrum
    WeylVector::new(ev.into_iter().map(|v| (v / 2.0).max(f64::MIN_POSITIVE)).collect())
}

/// `x ↦ sorted(2/xᵢ)`.
pub fn invert_laguerre(x: &WeylVector) -> Result<WeylVector> {
    if let Some(v) = x.entries().iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("inversion needs positive points, got {v}")));
    }
    WeylVector::from_unsorted(x.entries().iter().map(|v| 2.0 / v).collect())
}

/// Eigenvalues of the Cayley image `i(I+U)(I−U)^{-1}` of a Haar unitary.
pub fn sample_hp_cayley(n: usize, rng: RngStream) -> Result<WeylVector> {
    check_size(n)?;
    for attempt in 0..8u64 {
        let mut r = rng.substream(attempt).rng();
        let g = DMatrix::from_fn(n, n, |_, _| complex_normal(&mut r));
        let qr = g.qr();
        let (mut q, rr) = qr.unpack();
        for j in 0..n {
            let d = rr[(j, j)];
            let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
            for i in 0..n {
                q[(i, j)] *= ph;
            }
        }
        let id = DMatrix::<Complex64>::identity(n, n);
        let Some(inv) = (&id - &q).try_inverse() else { continue };
        let h = (&id + &q) * inv * Complex64::new(0.0, 1.0);
        if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            continue;
        }
        return eigenvalues(&HermitianMatrix::hermitize(h));
    }
    Err(Error::Numerical("Haar unitary repeatedly had eigenvalue 1".into()))
}

/// Log-gas target for the MCMC route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "density", rename_all = "snake_case")]
pub enum LogGasDensity {
    Hp { s_re: f64, s_im: f64 },
    Il { eta: f64 },
}

/// Measure family tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Gue,
    Ergodic { omega: OmegaPoint, k: usize },
    Gbe { beta: f64 },
    Laguerre { beta: f64, eta: f64 },
    InvLaguerre { beta: f64, eta: f64 },
    HpCayley,
    Loggas { target: LogGasDensity, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    #[serde(flatten)]
    pub model: Model,
    pub n: usize,
}

impl EnsembleSpec {
    pub fn new(model: Model, n: usize) -> Result<Self> {
        let s = Self { model, n };
        s.validate()?;
        Ok(s)
    }

    pub fn with_size(&self, n: usize) -> Result<Self> {
        Self::new(self.model.clone(), n)
    }

    pub fn validate(&self) -> Result<()> {
        check_size(self.n)?;
        match &self.model {
            Model::Gue | Model::HpCayley => Ok(()),
            Model::Ergodic { omega, k } => {
                let support = omega.alpha_plus().len().max(omega.alpha_minus().len());
                if *k < support {
                    return Err(Error::TruncationTooSmall { k: *k, support });
                }
                Ok(())
            }
            Model::Gbe { beta } => check_beta(*beta),
            Model::Laguerre { beta, eta } | Model::InvLaguerre { beta, eta } => {
                check_beta(*beta)?;
                check_eta(*eta)
            }
            Model::Loggas { target, beta } => {
                check_beta(*beta)?;
                match target {
                    LogGasDensity::Hp { s_re, .. } if !(*s_re > -0.5) => {
                        Err(Error::Domain(format!("Re(s) must exceed -1/2, got {s_re}")))
                    }
                    LogGasDensity::Il { eta } => check_eta(*eta),
                    _ => Ok(()),
                }
            }
        }
    }

    /// Ordered points of one draw.
    pub fn sample(&self, rng: RngStream) -> Result<WeylVector> {
        self.validate()?;
        let n = self.n;
        match &self.model {
            Model::Gue => eigenvalues(&sample_gue(n, rng)?),
            Model::Ergodic { omega, k } => eigenvalues(&sample_ergodic(omega, n, *k, rng)?),
            Model::Gbe { beta } => sample_gbe(n, *beta, rng),
            Model::Laguerre { beta, eta } => sample_laguerre(n, *beta, *eta, rng),
            Model::InvLaguerre { beta, eta } => invert_laguerre(&sample_laguerre(n, *beta, *eta, rng)?),
            Model::HpCayley => sample_hp_cayley(n, rng),
            Model::Loggas { target, beta } => {
                let beta = *beta;
                let (start, f): (Vec<f64>, Box<dyn Fn(&[f64]) -> f64>) = match *target {
                    LogGasDensity::Hp { s_re, s_im } => (
                        (0..n).map(|i| i as f64 - (n as f64 - 1.0) / 2.0).collect(),
                        Box::new(move |x: &[f64]| log_density_hp(x, Complex64::new(s_re, s_im), beta)),
                    ),
                    LogGasDensity::Il { eta } => (
                        (0..n).map(|i| 2.0 / (i as f64 + 1.0)).collect(),
                        Box::new(move |x: &[f64]| log_density_il(x, eta, beta)),
                    ),
                };
                let cfg = McmcConfig::default();
                Ok(mcmc_loggas(&*f, &start, cfg.burn_in + n * 10, &cfg, rng)?.sample)
            }
        }
    }
}
