//! Unnormalized log-densities of the consistent β-families and a
//! random-walk Metropolis sampler for them.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use crate::error::{Error, Result};
use crate::omega::WeylVector;

fn vandermonde_log(x: &[f64], beta: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = (x[i] - x[j]).abs();
            if d == 0.0 {
                return f64::NEG_INFINITY;
            }
            s += d.ln();
        }
    }
    beta * s
}

/// Hua-Pickrell log-density: site weight
/// `−(Re s + β(N−1)/2 + 1) ln(1+x²) + 2 Im(s) arctan x` plus `β Σ ln|xᵢ − xⱼ|`.
pub fn log_density_hp(x: &[f64], s: Complex64, beta: f64) -> f64 {
    if x.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let n = x.len() as f64;
    let p = s.re + beta * (n - 1.0) / 2.0 + 1.0;
    let site: f64 = x.iter().map(|v| -p * v.mul_add(*v, 1.0).ln() + 2.0 * s.im * v.atan()).sum();
    site + vandermonde_log(x, beta)
}

/// Inverse-Laguerre log-density: `(−η − (N−1)β − 2) ln x − 2/x` per site plus
/// `β Σ ln|xᵢ − xⱼ|`; `−∞` off the positive half-line.
pub fn log_density_il(x: &[f64], eta: f64, beta: f64) -> f64 {
    if x.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let n = x.len() as f64;
    let p = -eta - (n - 1.0) * beta - 2.0;
    let site: f64 = x.iter().map(|v| p * v.ln() - 2.0 / v).sum();
    site + vandermonde_log(x, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Sweeps discarded before sampling; the step size adapts during these.
    pub burn_in: usize,
    /// Sweeps between retained samples; `None` means `N`.
    pub thin: Option<usize>,
    pub step_scale: f64,
    /// Sweeps with zero acceptance that trigger a step-size error.
    pub window: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { burn_in: 10_000, thin: None, step_scale: 0.5, window: 500 }
    }
}

const ADAPT_EVERY: usize = 100;
const TARGET_LO: f64 = 0.25;
const TARGET_HI: f64 = 0.40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcResult {
    pub sample: WeylVector,
    pub acceptance: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcChain {
    pub samples: Vec<WeylVector>,
    pub acceptance: f64,
    pub step: f64,
}

struct Walker<'a, F: Fn(&[f64]) -> f64 + ?Sized> {
    f: &'a F,
    x: Vec<f64>,
    lp: f64,
    step: f64,
    idle: usize,
    window: usize,
}

impl<F: Fn(&[f64]) -> f64 + ?Sized> Walker<'_, F> {
    /// One sweep of single-site updates; returns accepted moves.
    fn sweep<R: Rng>(&mut self, r: &mut R) -> Result<usize> {
        let mut acc = 0;
        for i in 0..self.x.len() {
            let old = self.x[i];
            let dz: f64 = StandardNormal.sample(r);
            self.x[i] = old + self.step * dz;
            let lp = (self.f)(&self.x);
            let u: f64 = r.random();
            if lp.is_finite() && u.ln() < lp - self.lp {
                self.lp = lp;
                acc += 1;
            } else {
                self.x[i] = old;
            }
        }
        if acc == 0 {
            self.idle += 1;
            if self.idle >= self.window {
                return Err(Error::StepSize { window: self.window });
            }
        } else {
            self.idle = 0;
        }
        Ok(acc)
    }
}

fn start_walker<'a, F>(f: &'a F, start: &[f64], cfg: &McmcConfig) -> Result<Walker<'a, F>>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    if start.is_empty() {
        return Err(Error::Empty("MCMC start point"));
    }
    if !(cfg.step_scale > 0.0) || cfg.window == 0 {
        return Err(Error::Domain("step scale must be positive and window nonzero".into()));
    }
    let lp = f(start);
    if !lp.is_finite() {
        return Err(Error::Domain("log-density is not finite at the start point".into()));
    }
    Ok(Walker { f, x: start.to_vec(), lp, step: cfg.step_scale, idle: 0, window: cfg.window })
}

/// Burn-in with step adaptation towards 25–40% acceptance.
fn burn<F, R>(w: &mut Walker<'_, F>, sweeps: usize, r: &mut R) -> Result<()>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
    R: Rng,
{
    let n = w.x.len();
    let mut acc = 0;
    for s in 1..=sweeps {
        acc += w.sweep(r)?;
        if s % ADAPT_EVERY == 0 {
            let rate = acc as f64 / (ADAPT_EVERY * n) as f64;
            if rate < TARGET_LO {
                w.step *= 0.8;
            } else if rate > TARGET_HI {
                w.step *= 1.25;
            }
            acc = 0;
        }
    }
    Ok(())
}

/// Runs `steps` sweeps (the first `cfg.burn_in` adapt the step) and returns
/// the final state sorted, with the post-burn-in acceptance rate.
pub fn mcmc_loggas<F>(logdensity: &F, start: &[f64], steps: usize, cfg: &McmcConfig, rng: RngStream) -> Result<McmcResult>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    if steps < cfg.burn_in {
        return Err(Error::Domain(format!("steps {steps} below burn-in {}", cfg.burn_in)));
    }
    let mut r = rng.rng();
    let mut w = start_walker(logdensity, start, cfg)?;
    burn(&mut w, cfg.burn_in, &mut r)?;
    let mut acc = 0;
    for _ in cfg.burn_in..steps {
        acc += w.sweep(&mut r)?;
    }
    let kept = (steps - cfg.burn_in) * w.x.len();
    let acceptance = if kept == 0 { f64::NAN } else { acc as f64 / kept as f64 };
    Ok(McmcResult { sample: WeylVector::from_unsorted(w.x)?, acceptance, step: w.step })
}

/// One chain: burn-in, then `count` samples thinned by `cfg.thin` (default `N`).
pub fn mcmc_chain<F>(logdensity: &F, start: &[f64], count: usize, cfg: &McmcConfig, rng: RngStream) -> Result<McmcChain>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut r = rng.rng();
    let mut w = start_walker(logdensity, start, cfg)?;
    burn(&mut w, cfg.burn_in, &mut r)?;
    let thin = cfg.thin.unwrap_or(w.x.len()).max(1);
    let mut samples = Vec::with_capacity(count);
    let mut acc = 0;
    for _ in 0..count {
        for _ in 0..thin {
            acc += w.sweep(&mut r)?;
        }
        samples.push(WeylVector::from_unsorted(w.x.clone())?);
    }
    let moves = count * thin * w.x.len();
    let acceptance = if moves == 0 { f64::NAN } else { acc as f64 / moves as f64 };
    Ok(McmcChain { samples, acceptance, step: w.step })
}
