//! Seeded Monte Carlo experiments: convergence of rescaled characteristic
//! polynomials, edge heuristics for the Gaussian β-ensemble, sweeps of the
//! quantitative bound and consistency checks for β-families.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charpoly::{rescaled_charpoly, DiskGrid};
use crate::error::{Error, Result};
use crate::interlace::{consistency_test, sample_array, ConsistencyReport, Statistic};
use crate::lpfun::{eval_lp_default, eval_lp_with_bound, quantitative_bound, DEFAULT_L};
use crate::models::{
    det_ratio, eigenvalues, resolvent_sums, sample_ergodic, EnsembleSpec, GbeTridiagonal, Model, RngStream,
};
use crate::omega::{embed_weyl, OmegaPoint, WeylVector};
use crate::stats::{ks_two_sample, linear_fit, median, Quartiles};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Thm32,
    Thm44,
    Airy,
    Bound,
    Consistency,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Thm32 => "thm32",
            Self::Thm44 => "thm44",
            Self::Airy => "airy",
            Self::Bound => "bound",
            Self::Consistency => "consistency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Fraction of trials whose coupled trajectory must decrease.
    pub per_trial_fraction: f64,
    /// Relative drift of the median of `Σ1/y²` over the last doubling.
    pub drift: f64,
    pub exponent_lo: f64,
    pub exponent_hi: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { per_trial_fraction: 0.8, drift: 0.10, exponent_lo: 0.23, exponent_hi: 0.43 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub omega: Option<OmegaPoint>,
    /// Ensemble family; the size is taken from `schedule`.
    #[serde(default)]
    pub ensemble: Option<Model>,
    /// Negative-control family for the consistency experiment.
    #[serde(default)]
    pub control: Option<Model>,
    pub schedule: Vec<usize>,
    pub trials: usize,
    pub radius: f64,
    pub seed: u64,
    /// Number of rank-one terms kept in the ergodic model; defaults to the stored support.
    #[serde(default)]
    pub truncation: Option<usize>,
    /// Fixed evaluation point `[re, im]`.
    #[serde(default)]
    pub z: Option<[f64; 2]>,
    #[serde(default = "default_statistic")]
    pub statistic: Statistic,
    #[serde(default = "default_control_statistic")]
    pub control_statistic: Statistic,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_statistic() -> Statistic {
    Statistic::ReciprocalSum
}

fn default_control_statistic() -> Statistic {
    Statistic::Sum
}

pub const DEFAULT_SEED: u64 = 2024;

impl ExperimentConfig {
    /// Default configuration of each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            omega: None,
            ensemble: None,
            control: None,
            schedule: vec![50, 100, 200, 400],
            trials: 50,
            radius: 2.0,
            seed: DEFAULT_SEED,
            truncation: None,
            z: None,
            statistic: default_statistic(),
            control_statistic: default_control_statistic(),
            tolerances: Tolerances::default(),
            out: None,
        };
        match experiment {
            Experiment::Thm32 => Self {
                omega: Some(OmegaPoint::new(vec![0.5], vec![], 0.5, 0.25).expect("valid point")),
                ..base
            },
            Experiment::Thm44 => Self {
                ensemble: Some(Model::InvLaguerre { beta: 2.0, eta: 0.0 }),
                schedule: vec![5, 10, 20, 40],
                radius: 1.0,
                ..base
            },
            Experiment::Airy => Self {
                ensemble: Some(Model::Gbe { beta: 2.0 }),
                schedule: vec![250, 500, 1000, 2000],
                trials: 1000,
                z: Some([1.0, 0.0]),
                ..base
            },
            Experiment::Bound => Self { schedule: vec![], trials: 1000, ..base },
            Experiment::Consistency => Self {
                ensemble: Some(Model::InvLaguerre { beta: 2.0, eta: 0.0 }),
                control: Some(Model::Gbe { beta: 2.0 }),
                schedule: vec![1],
                trials: 10_000,
                ..base
            },
        }
    }

    /// Parses a JSON config; absent fields fall back to the defaults of the
    /// named experiment.
    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| Error::Domain(format!("config: {e}")))?;
        let tag: Experiment = serde_json::from_value(v.get("experiment").cloned().unwrap_or_default())
            .map_err(|e| Error::Domain(format!("config experiment tag: {e}")))?;
        let mut merged = serde_json::to_value(Self::defaults(tag)).expect("config serializes");
        if let (Some(dst), Some(src)) = (merged.as_object_mut(), v.as_object()) {
            for (k, val) in src {
                dst.insert(k.clone(), val.clone());
            }
        }
        let cfg: Self = serde_json::from_value(merged).map_err(|e| Error::Domain(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::Domain(format!("radius must be positive, got {}", self.radius)));
        }
        if self.experiment != Experiment::Bound {
            if self.schedule.is_empty() || self.schedule[0] == 0 {
                return Err(Error::Domain("schedule must be nonempty with positive sizes".into()));
            }
            if self.schedule.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Domain("schedule must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    fn z_point(&self) -> Complex64 {
        let [re, im] = self.z.unwrap_or([1.0, 0.0]);
        Complex64::new(re, im)
    }

    fn require_omega(&self) -> Result<&OmegaPoint> {
        self.omega.as_ref().ok_or_else(|| Error::Domain("experiment needs an omega point".into()))
    }

    fn require_ensemble(&self) -> Result<&Model> {
        self.ensemble.as_ref().ok_or_else(|| Error::Domain("experiment needs an ensemble".into()))
    }
}

/// Kernel parameter matching a family.
pub fn model_beta(m: &Model) -> f64 {
    match m {
        Model::Gue | Model::Ergodic { .. } | Model::HpCayley => 2.0,
        Model::Gbe { beta }
        | Model::Laguerre { beta, .. }
        | Model::InvLaguerre { beta, .. }
        | Model::Loggas { beta, .. } => *beta,
    }
}

/// Quartiles of the leading coordinates of estimated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSummary {
    pub n: usize,
    pub alpha_plus_1: Quartiles,
    pub alpha_minus_1: Quartiles,
    pub gamma1: Quartiles,
    pub delta: Quartiles,
}

impl OmegaSummary {
    fn of(n: usize, pts: &[OmegaPoint]) -> Self {
        let col = |f: &dyn Fn(&OmegaPoint) -> f64| Quartiles::of(&pts.iter().map(f).collect::<Vec<_>>());
        Self {
            n,
            alpha_plus_1: col(&|w| w.alpha_plus().first().copied().unwrap_or(0.0)),
            alpha_minus_1: col(&|w| w.alpha_minus().first().copied().unwrap_or(0.0)),
            gamma1: col(&|w| w.gamma1()),
            delta: col(&|w| w.delta()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub seed: u64,
    pub radius: f64,
    /// Size attached to each reported distance.
    pub points: Vec<usize>,
    pub quartiles: Vec<Quartiles>,
    /// `trials[t][i]` is the distance of trial `t` at `points[i]`.
    pub trials: Vec<Vec<f64>>,
    pub estimate: OmegaSummary,
    pub median_decreasing: bool,
    /// Fraction of trials whose last distance is below their first.
    pub per_trial_fraction: f64,
    pub required_fraction: Option<f64>,
    pub converged: bool,
}

#[derive(Serialize)]
struct DistanceRow {
    trial: usize,
    n: usize,
    distance: f64,
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl ConvergenceReport {
    fn assemble(
        cfg: &ExperimentConfig,
        points: Vec<usize>,
        trials: Vec<Vec<f64>>,
        estimates: Vec<OmegaPoint>,
        estimate_n: usize,
        required_fraction: Option<f64>,
    ) -> Self {
        let quartiles: Vec<Quartiles> =
            (0..points.len()).map(|i| Quartiles::of(&trials.iter().map(|t| t[i]).collect::<Vec<_>>())).collect();
        let median_decreasing = quartiles.windows(2).all(|w| w[1].median < w[0].median);
        let down = trials.iter().filter(|t| t.last() < t.first()).count();
        let per_trial_fraction = down as f64 / trials.len() as f64;
        let converged = median_decreasing && required_fraction.is_none_or(|f| per_trial_fraction >= f);
        Self {
            experiment: cfg.experiment.name().into(),
            seed: cfg.seed,
            radius: cfg.radius,
            points,
            quartiles,
            trials,
            estimate: OmegaSummary::of(estimate_n, &estimates),
            median_decreasing,
            per_trial_fraction,
            required_fraction,
            converged,
        }
    }

    /// Raw per-trial distances as `trial,n,distance`.
    pub fn to_csv(&self) -> Result<String> {
        csv_string(self.trials.iter().enumerate().flat_map(|(t, row)| {
            row.iter().zip(&self.points).map(move |(d, n)| DistanceRow { trial: t, n: *n, distance: *d })
        }))
    }
}

fn sup_to_target(x: &WeylVector, grid: &DiskGrid, target: &[Complex64]) -> f64 {
    grid.points().iter().zip(target).map(|(z, e)| (rescaled_charpoly(x, *z) - e).norm()).fold(0.0, f64::max)
}

/// Ergodic-model convergence: per trial one matrix at the largest size,
/// whose corners give the coupled trajectory over the schedule.
pub fn run_theorem32(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let w = cfg.require_omega()?;
    let k = cfg.truncation.unwrap_or(w.alpha_plus().len().max(w.alpha_minus().len()));
    let grid = DiskGrid::new(cfg.radius)?;
    let target: Vec<Complex64> = grid.points().iter().map(|z| eval_lp_default(w, *z)).collect::<Result<_>>()?;
    let nmax = *cfg.schedule.last().expect("validated");
    let stream = RngStream::new(cfg.seed);
    let out: Vec<(Vec<f64>, OmegaPoint)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let h = sample_ergodic(w, nmax, k, stream.substream(t))?;
            let mut dist = Vec::with_capacity(cfg.schedule.len());
            let mut last = None;
            for &n in &cfg.schedule {
                let x = eigenvalues(&h.corner(n)?)?;
                dist.push(sup_to_target(&x, &grid, &target));
                last = Some(x);
            }
            let x = last.expect("nonempty schedule");
            Ok((dist, embed_weyl(&x.scaled(1.0 / nmax as f64)?)))
        })
        .collect::<Result<_>>()?;
    let (trials, est): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    Ok(ConvergenceReport::assemble(
        cfg,
        cfg.schedule.clone(),
        trials,
        est,
        nmax,
        Some(cfg.tolerances.per_trial_fraction),
    ))
}

/// Array stabilization: per trial a top row from a consistent family,
/// projected down with the corners kernel; reports the sup-distance between
/// rescaled polynomials of consecutive scheduled rows.
pub fn run_theorem44(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let model = cfg.require_ensemble()?;
    if !matches!(model, Model::InvLaguerre { .. } | Model::HpCayley | Model::Loggas { .. }) {
        return Err(Error::Domain("array stabilization needs a consistent family (inverse Laguerre or Hua-Pickrell)".into()));
    }
    if cfg.schedule.len() < 2 {
        return Err(Error::Domain("array stabilization needs at least two rows".into()));
    }
    let beta = model_beta(model);
    let nmax = *cfg.schedule.last().expect("validated");
    let spec = EnsembleSpec::new(model.clone(), nmax)?;
    let grid = DiskGrid::new(cfg.radius)?;
    let stream = RngStream::new(cfg.seed);
    let out: Vec<(Vec<f64>, OmegaPoint)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = stream.substream(t);
            let top = spec.sample(s.substream(0))?;
            let arr = sample_array(&top, beta, s.substream(1))?;
            let vals: Vec<Vec<Complex64>> = cfg
                .schedule
                .iter()
                .map(|&n| {
                    let row = arr.row(n).expect("row exists");
                    grid.points().iter().map(|z| rescaled_charpoly(row, *z)).collect()
                })
                .collect();
            let diffs = vals
                .windows(2)
                .map(|p| p[0].iter().zip(&p[1]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
                .collect();
            Ok((diffs, embed_weyl(&top.scaled(1.0 / nmax as f64)?)))
        })
        .collect::<Result<_>>()?;
    let (trials, est): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    Ok(ConvergenceReport::assemble(cfg, cfg.schedule[1..].to_vec(), trials, est, nmax, None))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiryTrial {
    pub trial: usize,
    pub n: usize,
    pub gamma1: f64,
    pub delta: f64,
    pub p_re: f64,
    pub p_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiryReport {
    pub seed: u64,
    pub beta: f64,
    pub schedule: Vec<usize>,
    pub z: [f64; 2],
    /// Median of `−Σ1/yᵢ` per size.
    pub neg_gamma1_median: Vec<f64>,
    /// Slope of `ln median(−Σ1/yᵢ)` against `ln N`.
    pub exponent: f64,
    pub exponent_range: [f64; 2],
    pub delta_quartiles: Vec<Quartiles>,
    /// `|m_last − m_prev| / m_prev` for the medians of `Σ1/yᵢ²`.
    pub drift: f64,
    pub drift_limit: f64,
    /// KS distance between samples of `Re 𝔓_N(z)` at consecutive sizes.
    pub ks_successive: Vec<f64>,
    pub unit_at_zero: bool,
    pub resamples: usize,
    pub pass: bool,
    pub trials: Vec<AiryTrial>,
}

impl AiryReport {
    pub fn to_csv(&self) -> Result<String> {
        csv_string(self.trials.iter())
    }
}

const AIRY_ATTEMPTS: u64 = 16;

/// Edge data of one tridiagonal sample for `yᵢ = 2N^{2/3}(xᵢ − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeStatistics {
    /// `Σ 1/yᵢ`
    pub gamma1: f64,
    /// `Σ 1/yᵢ²`
    pub delta: f64,
    /// `𝔓_N(z) = ∏(1 − z/yᵢ) e^{−N^{1/3}z}`
    pub p: Complex64,
}

/// Computes the edge data from the matrix directly: with `c = 2N^{2/3}`
/// and `s = 1/scale`, `1/yᵢ = 1/(c·scale·(λᵢ − s))` and
/// `∏(1 − z/yᵢ) = det(T − s − z/(c·scale)) / det(T − s)`.
/// `None` when some `yᵢ` is zero.
pub fn edge_statistics(tri: &GbeTridiagonal, z: Complex64) -> Option<EdgeStatistics> {
    let n = tri.d.len() as f64;
    let k = 2.0 * n.powf(2.0 / 3.0) * tri.scale;
    let s = 1.0 / tri.scale;
    let (a, b) = resolvent_sums(&tri.d, &tri.e, s)?;
    let ratio = det_ratio(&tri.d, &tri.e, z / k + s, s)?;
    Some(EdgeStatistics { gamma1: a / k, delta: b / (k * k), p: ratio * (-z * n.cbrt()).exp() })
}

/// Edge statistics of the Gaussian β-ensemble under `yᵢ = 2N^{2/3}(xᵢ − 1)`.
pub fn run_airy(cfg: &ExperimentConfig) -> Result<AiryReport> {
    cfg.validate()?;
    let beta = match cfg.require_ensemble()? {
        Model::Gbe { beta } => *beta,
        _ => return Err(Error::Domain("edge experiment needs a Gaussian beta ensemble".into())),
    };
    if cfg.schedule.len() < 2 {
        return Err(Error::Domain("edge experiment needs at least two sizes".into()));
    }
    let z = cfg.z_point();
    let stream = RngStream::new(cfg.seed);
    let ns = cfg.schedule.clone();
    let jobs: Vec<(usize, usize)> = (0..cfg.trials).flat_map(|t| ns.iter().map(move |&n| (t, n))).collect();
    let out: Vec<(AiryTrial, bool, usize)> = jobs
        .par_iter()
        .map(|&(t, n)| {
            let s = stream.substream(t as u64).substream(n as u64);
            for attempt in 0..AIRY_ATTEMPTS {
                let tri = GbeTridiagonal::sample(n, beta, s.substream(attempt))?;
                let Some(e) = edge_statistics(&tri, z) else { continue };
                let unit = edge_statistics(&tri, Complex64::new(0.0, 0.0)).is_some_and(|u| u.p == Complex64::new(1.0, 0.0));
                let row = AiryTrial { trial: t, n, gamma1: e.gamma1, delta: e.delta, p_re: e.p.re, p_im: e.p.im };
                return Ok((row, unit, attempt as usize));
            }
            Err(Error::Numerical("edge-rescaled sample kept hitting zero".into()))
        })
        .collect::<Result<_>>()?;
    let unit_at_zero = out.iter().all(|o| o.1);
    let resamples = out.iter().map(|o| o.2).sum();
    let trials: Vec<AiryTrial> = out.into_iter().map(|o| o.0).collect();
    let column = |n: usize, f: &dyn Fn(&AiryTrial) -> f64| -> Vec<f64> {
        trials.iter().filter(|a| a.n == n).map(f).collect()
    };
    let neg_gamma1_median: Vec<f64> = ns.iter().map(|&n| median(&column(n, &|a| -a.gamma1))).collect();
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = neg_gamma1_median.iter().map(|v| v.ln()).collect();
    let exponent = if ly.iter().all(|v| v.is_finite()) { linear_fit(&lx, &ly)?.0 } else { f64::NAN };
    let delta_quartiles: Vec<Quartiles> = ns.iter().map(|&n| Quartiles::of(&column(n, &|a| a.delta))).collect();
    let k = delta_quartiles.len();
    let (prev, last) = (delta_quartiles[k - 2].median, delta_quartiles[k - 1].median);
    let drift = (last - prev).abs() / prev;
    let ks_successive = ns
        .windows(2)
        .map(|p| ks_two_sample(&column(p[0], &|a| a.p_re), &column(p[1], &|a| a.p_re)).map(|r| r.d))
        .collect::<Result<_>>()?;
    let tol = cfg.tolerances;
    let pass = exponent >= tol.exponent_lo && exponent <= tol.exponent_hi && drift < tol.drift && unit_at_zero;
    Ok(AiryReport {
        seed: cfg.seed,
        beta,
        schedule: ns,
        z: [z.re, z.im],
        neg_gamma1_median,
        exponent,
        exponent_range: [tol.exponent_lo, tol.exponent_hi],
        delta_quartiles,
        drift,
        drift_limit: tol.drift,
        ks_successive,
        unit_at_zero,
        resamples,
        pass,
        trials,
    })
}

/// A random finite point: up to four α's on each side in `[0, 1.5)`,
/// `γ₁ ∈ [−2, 2)`, `γ₂ ∈ [0, 1)`.
pub fn random_omega<R: Rng>(r: &mut R) -> OmegaPoint {
    let side = |r: &mut R| {
        let k = r.random_range(0..=4);
        let mut v: Vec<f64> = (0..k).map(|_| 1.5 * r.random::<f64>()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let ap = side(r);
    let am = side(r);
    let g1 = 4.0 * r.random::<f64>() - 2.0;
    let g2 = r.random::<f64>();
    OmegaPoint::from_gamma2(ap, am, g1, g2).expect("generated point is valid")
}

/// Small multiplicative perturbation of every coordinate, occasionally
/// dropping the last α on a side.
pub fn perturb_omega<R: Rng>(w: &OmegaPoint, scale: f64, r: &mut R) -> OmegaPoint {
    let jitter = |v: &[f64], r: &mut R| {
        let mut out: Vec<f64> = v.iter().map(|a| a * (1.0 + scale * (2.0 * r.random::<f64>() - 1.0))).collect();
        if !out.is_empty() && r.random::<f64>() < 0.2 {
            out.pop();
        }
        out.sort_by(|a, b| b.total_cmp(a));
        out
    };
    let ap = jitter(w.alpha_plus(), r);
    let am = jitter(w.alpha_minus(), r);
    let g1 = w.gamma1() * (1.0 + scale * (2.0 * r.random::<f64>() - 1.0));
    let g2 = w.gamma2() * (1.0 + scale * r.random::<f64>());
    OmegaPoint::from_gamma2(ap, am, g1, g2).expect("perturbed point is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolationRecord {
    pub omega: OmegaPoint,
    pub omega_t: OmegaPoint,
    pub z: [f64; 2],
    pub lhs: f64,
    pub rhs: f64,
    pub swapped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub seed: u64,
    pub trials: usize,
    pub radius: f64,
    pub l: f64,
    /// Largest `|E_ω − E_ω̃| / bound(ω, ω̃)` over pairs and grid points.
    pub max_ratio: f64,
    /// Same with the roles of the two points exchanged in the bound.
    pub max_ratio_swapped: f64,
    pub violations: Vec<BoundViolationRecord>,
    pub pass: bool,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 { 0.0 } else { lhs / rhs }
}

/// Checks the bound in both orders on `trials` random pairs: half are
/// independent draws, half small perturbations of each other.
pub fn run_bound_sweep(cfg: &ExperimentConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let grid = DiskGrid::new(cfg.radius)?;
    let stream = RngStream::new(cfg.seed);
    let per_pair: Vec<(f64, f64, Vec<BoundViolationRecord>)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r: ChaCha12Rng = stream.substream(t).rng();
            let w = random_omega(&mut r);
            let wt = if t % 2 == 0 { random_omega(&mut r) } else { perturb_omega(&w, 0.05, &mut r) };
            check_pair(&w, &wt, &grid)
        })
        .collect();
    let max_ratio = per_pair.iter().map(|p| p.0).fold(0.0, f64::max);
    let max_ratio_swapped = per_pair.iter().map(|p| p.1).fold(0.0, f64::max);
    let violations: Vec<_> = per_pair.into_iter().flat_map(|p| p.2).collect();
    Ok(BoundReport {
        seed: cfg.seed,
        trials: cfg.trials,
        radius: cfg.radius,
        l: DEFAULT_L,
        max_ratio,
        max_ratio_swapped,
        pass: violations.is_empty(),
        violations,
    })
}

/// Returns the largest ratios in both orders and any violations. The left
/// side carries the evaluation error bounds of both functions.
pub fn check_pair(w: &OmegaPoint, wt: &OmegaPoint, grid: &DiskGrid) -> (f64, f64, Vec<BoundViolationRecord>) {
    let (mut best, mut best_sw, mut bad) = (0.0f64, 0.0f64, Vec::new());
    for &z in grid.points() {
        let (a, ea) = eval_lp_with_bound(w, z);
        let (b, eb) = eval_lp_with_bound(wt, z);
        let lhs = (a - b).norm();
        let slack = ea + eb + 1e-13 * (a.norm() + b.norm());
        for swapped in [false, true] {
            let rhs = if swapped {
                quantitative_bound(wt, w, z, DEFAULT_L)
            } else {
                quantitative_bound(w, wt, z, DEFAULT_L)
            };
            let q = ratio(lhs, rhs);
            if swapped {
                best_sw = best_sw.max(q);
            } else {
                best = best.max(q);
            }
            if lhs > rhs + slack {
                bad.push(BoundViolationRecord {
                    omega: w.clone(),
                    omega_t: wt.clone(),
                    z: [z.re, z.im],
                    lhs,
                    rhs,
                    swapped,
                });
            }
        }
    }
    (best, best_sw, bad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyExperimentReport {
    pub n: usize,
    pub trials: usize,
    pub family: ConsistencyReport,
    pub control: Option<ConsistencyReport>,
    /// The family passes and the control, if any, is rejected.
    pub pass: bool,
}

fn family_sampler(model: &Model) -> impl Fn(usize, RngStream) -> Result<WeylVector> + Sync + '_ {
    move |n, s| EnsembleSpec::new(model.clone(), n)?.sample(s)
}

/// Two-sample consistency test of the configured family, plus the negative control.
pub fn run_consistency(cfg: &ExperimentConfig) -> Result<ConsistencyExperimentReport> {
    cfg.validate()?;
    let model = cfg.require_ensemble()?;
    let n = cfg.schedule[0];
    let stream = RngStream::new(cfg.seed);
    let family = consistency_test(family_sampler(model), model_beta(model), n, cfg.trials, cfg.statistic, stream.substream(0))?;
    let control = match &cfg.control {
        Some(c) => Some(consistency_test(family_sampler(c), model_beta(c), n, cfg.trials, cfg.control_statistic, stream.substream(1))?),
        None => None,
    };
    let pass = !family.rejects() && control.as_ref().is_none_or(|c| c.rejects());
    Ok(ConsistencyExperimentReport { n, trials: cfg.trials, family, control, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(exp: Experiment) -> ExperimentConfig {
        ExperimentConfig { trials: 4, ..ExperimentConfig::defaults(exp) }
    }

    #[test]
    fn config_defaults_and_merge() {
        let c = ExperimentConfig::from_json(r#"{"experiment":"thm32","trials":7}"#).unwrap();
        assert_eq!(c.trials, 7);
        assert_eq!(c.schedule, vec![50, 100, 200, 400]);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert!(ExperimentConfig::from_json(r#"{"experiment":"thm32","schedule":[100,50]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"thm32","trials":0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"nope"}"#).is_err());
        let s = serde_json::to_string(&ExperimentConfig::defaults(Experiment::Airy)).unwrap();
        assert_eq!(ExperimentConfig::from_json(&s).unwrap(), ExperimentConfig::defaults(Experiment::Airy));
    }

    #[test]
    fn identity_point_gives_zero_distance() {
        let cfg = ExperimentConfig { omega: Some(OmegaPoint::identity()), schedule: vec![5, 10], ..small(Experiment::Thm32) };
        let r = run_theorem32(&cfg).unwrap();
        assert!(r.trials.iter().flatten().all(|d| *d == 0.0));
    }

    #[test]
    fn scalar_point_decays_like_one_over_n() {
        // H = cI, so Ψ_N(z/N) = (1 − cz/N)^N and the distance to e^{−cz} is O(1/N)
        let w = OmegaPoint::new(vec![], vec![], 0.7, 0.0).unwrap();
        let cfg = ExperimentConfig { omega: Some(w), schedule: vec![20, 40, 80, 160], ..small(Experiment::Thm32) };
        let r = run_theorem32(&cfg).unwrap();
        let m: Vec<f64> = r.quartiles.iter().map(|q| q.median).collect();
        for p in m.windows(2) {
            assert!((p[0] / p[1] - 2.0).abs() < 0.1, "{m:?}");
        }
        assert!(r.converged);
    }

    #[test]
    fn quartiles_ordered_and_deterministic() {
        let cfg = ExperimentConfig { schedule: vec![10, 20], ..small(Experiment::Thm32) };
        let a = run_theorem32(&cfg).unwrap();
        assert!(a.quartiles.iter().all(|q| q.q25 <= q.median && q.median <= q.q75));
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&run_theorem32(&cfg).unwrap()).unwrap());
        assert_eq!(a.to_csv().unwrap().lines().count(), 1 + 4 * 2);
    }

    #[test]
    fn array_stabilization_smoke() {
        let cfg = ExperimentConfig { schedule: vec![2, 4, 8], ..small(Experiment::Thm44) };
        let r = run_theorem44(&cfg).unwrap();
        assert_eq!(r.points, vec![4, 8]);
        assert_eq!(r.trials.len(), 4);
        let bad = ExperimentConfig { ensemble: Some(Model::Gbe { beta: 2.0 }), ..cfg };
        assert!(run_theorem44(&bad).is_err());
    }

    #[test]
    fn airy_smoke() {
        let cfg = ExperimentConfig { schedule: vec![20, 40], trials: 8, ..ExperimentConfig::defaults(Experiment::Airy) };
        let r = run_airy(&cfg).unwrap();
        assert!(r.unit_at_zero);
        assert_eq!(r.trials.len(), 16);
        assert_eq!(r.ks_successive.len(), 1);
    }

    #[test]
    fn identical_pairs_have_zero_bound() {
        let w = OmegaPoint::new(vec![0.9, 0.2], vec![0.4], 0.3, 1.2).unwrap();
        let (a, b, bad) = check_pair(&w, &w, &DiskGrid::new(2.0).unwrap());
        assert_eq!((a, b), (0.0, 0.0));
        assert!(bad.is_empty());
    }

    #[test]
    fn bound_sweep_small() {
        let cfg = ExperimentConfig { trials: 20, ..ExperimentConfig::defaults(Experiment::Bound) };
        let r = run_bound_sweep(&cfg).unwrap();
        assert!(r.pass && r.max_ratio < 1.0 && r.max_ratio_swapped < 1.0);
    }

    #[test]
    fn consistency_smoke() {
        let cfg = ExperimentConfig { trials: 200, ..ExperimentConfig::defaults(Experiment::Consistency) };
        let r = run_consistency(&cfg).unwrap();
        assert_eq!(r.family.statistic, "reciprocal_sum");
        assert!(r.control.is_some());
        let few = ExperimentConfig { trials: 50, ..cfg };
        assert!(matches!(run_consistency(&few), Err(Error::InsufficientTrials { .. })));
    }
    #[test]
    fn edge_statistics_match_eigenvalue_route() {
        use crate::charpoly::{airy_renorm, edge_rescale};
        for (t, n) in [(0u64, 30usize), (1, 200), (2, 500)] {
            let tri = GbeTridiagonal::sample(n, 2.0, RngStream::new(31).substream(t)).unwrap();
            let y = edge_rescale(&tri.points().unwrap());
            let z = Complex64::new(1.0, -0.5);
            let e = edge_statistics(&tri, z).unwrap();
            let g: f64 = y.entries().iter().map(|v| 1.0 / v).sum();
            let d: f64 = y.entries().iter().map(|v| 1.0 / (v * v)).sum();
            let p = airy_renorm(&y, n, z).unwrap();
            assert!((e.gamma1 - g).abs() < 1e-8 * d.sqrt().max(1.0), "{} {g}", e.gamma1);
            assert!((e.delta - d).abs() < 1e-8 * d, "{} {d}", e.delta);
            assert!((e.p - p).norm() < 1e-8 * p.norm(), "{} {p}", e.p);
            assert_eq!(edge_statistics(&tri, Complex64::new(0.0, 0.0)).unwrap().p, Complex64::new(1.0, 0.0));
        }
    }
}
