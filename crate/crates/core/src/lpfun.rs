//! Evaluation of Laguerre-Pólya functions
//! `E_ω(z) = e^{−γ₁z − γ₂z²/2} ∏ e^{zαᵢ⁺}(1 − zαᵢ⁺) ∏ e^{−zαᵢ⁻}(1 + zαᵢ⁻)`
//! and the related regularized determinants, Taylor data and bounds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::omega::OmegaPoint;

/// Factors with `|zλ|` at or above this are multiplied directly.
const HEAD_THRESHOLD: f64 = 0.5;

/// Default absolute tolerance on the unit disk.
pub const DEFAULT_EPS: f64 = 1e-10;

/// Default absolute constant in the quantitative bound, `e(2 + ln 3)`.
pub const DEFAULT_L: f64 = std::f64::consts::E * (2.0 + 1.098_612_288_668_109_8);

/// Running product `mantissa · exp(log_sum)`; the mantissa is renormalized so
/// long products neither overflow nor underflow.
struct Accumulator {
    mantissa: Complex64,
    log_sum: Complex64,
}

impl Accumulator {
    fn new() -> Self {
        Self { mantissa: Complex64::new(1.0, 0.0), log_sum: Complex64::new(0.0, 0.0) }
    }

    fn mul(&mut self, f: Complex64) {
        self.mantissa *= f;
        let m = self.mantissa.norm();
        if m != 0.0 && !(1e-150..=1e150).contains(&m) {
            self.mantissa /= m;
            self.log_sum += m.ln();
        }
    }

    /// Adds the order-`r` regularized factor `(1 − u)·exp(Σ_{j<r} u^j / j)`.
    fn push_regularized(&mut self, u: Complex64, r: usize) {
        if u.norm() >= HEAD_THRESHOLD {
            self.mul(Complex64::new(1.0, 0.0) - u);
            let mut pow = Complex64::new(1.0, 0.0);
            for j in 1..r {
                pow *= u;
                self.log_sum += pow / j as f64;
            }
        } else {
            // ln((1 − u) e^{u + … + u^{r−1}/(r−1)}) = −Σ_{k≥r} u^k / k
            let mut pow = u.powi(r as i32);
            let mut k = r;
            loop {
                let term = pow / k as f64;
                self.log_sum -= term;
                if term.norm() < 1e-20 || k > 200 {
                    break;
                }
                pow *= u;
                k += 1;
            }
        }
    }

    fn finish(self, extra: Complex64) -> Complex64 {
        if self.mantissa == Complex64::new(0.0, 0.0) {
            return self.mantissa;
        }
        self.mantissa * (self.log_sum + extra).exp()
    }
}

/// `exp(K(|z| + 4|z|²))` with `K = max(|γ₁|, δ)`.
pub fn growth_bound(w: &OmegaPoint, z_abs: f64) -> f64 {
    let k = w.gamma1().abs().max(w.delta());
    (k * (z_abs + 4.0 * z_abs * z_abs)).exp()
}

/// Evaluates `E_ω(z)` and returns it with a bound on the error caused by the
/// terms omitted from the stored truncation.
pub fn eval_lp_with_bound(w: &OmegaPoint, z: Complex64) -> (Complex64, f64) {
    let mut acc = Accumulator::new();
    for &lam in w.alpha_plus() {
        acc.push_regularized(z * lam, 2);
    }
    for &a in w.alpha_minus() {
        acc.push_regularized(-z * a, 2);
    }
    let extra = -z * w.gamma1() - z * z * (w.gamma2() / 2.0);
    let value = acc.finish(extra);

    // gamma2() absorbs the omitted mass at second order; the rest is cubic.
    let bound = if w.tail_eps() == 0.0 {
        0.0
    } else {
        let za = z.norm() * w.tail_alpha_max();
        if za >= 1.0 {
            f64::INFINITY
        } else {
            let b = z.norm().powi(3) * w.tail_alpha_max() * w.tail_eps() / (3.0 * (1.0 - za));
            value.norm() * b.exp_m1()
        }
    };
    (value, bound)
}

/// `E_ω(z)`, failing when the stored truncation cannot certify `eps`.
pub fn eval_lp(w: &OmegaPoint, z: Complex64, eps: f64) -> Result<Complex64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let (value, bound) = eval_lp_with_bound(w, z);
    if bound > eps {
        return Err(Error::Unattainable { requested: eps, achievable: bound });
    }
    Ok(value)
}

/// `E_ω(z)` at the default tolerance, `1e−10` scaled by the growth bound off the unit disk.
pub fn eval_lp_default(w: &OmegaPoint, z: Complex64) -> Result<Complex64> {
    eval_lp(w, z, DEFAULT_EPS * growth_bound(w, z.norm()).max(1.0))
}

/// Modified power sums `p̃₁ … p̃_K` with truncation error bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSums {
    /// `p_tilde[k-1]` holds `p̃_k`.
    pub p_tilde: Vec<f64>,
    pub trunc_err: Vec<f64>,
}

impl PowerSums {
    pub fn get(&self, k: usize) -> f64 {
        self.p_tilde[k - 1]
    }
}

pub fn power_sums(w: &OmegaPoint, k_max: usize) -> PowerSums {
    let a_t = w.tail_alpha_max();
    let p_tilde = power_sums_dd(w, k_max).into_iter().map(f64::from).collect();
    let trunc_err = (1..=k_max)
        .map(|k| if k <= 2 { 0.0 } else { a_t.powi(k as i32 - 2) * w.tail_eps() })
        .collect();
    PowerSums { p_tilde, trunc_err }
}

/// `p̃₁ … p̃_K` in double-double, so that coefficients cancelling to far
/// below their terms keep full double precision.
fn power_sums_dd(w: &OmegaPoint, k_max: usize) -> Vec<TwoFloat> {
    let lam = w.signed_spectrum();
    (1..=k_max)
        .map(|k| match k {
            1 => TwoFloat::from(w.gamma1()),
            2 => TwoFloat::from(w.delta()),
            _ => lam.iter().fold(TwoFloat::from(0.0), |acc, l| acc + TwoFloat::from(*l).powi(k as i32)),
        })
        .collect()
}

/// Taylor coefficients `c₀ … c_J` from `j·c_j = −Σ_{i=1}^{j} p̃_i c_{j−i}`.
pub fn taylor_coeffs(w: &OmegaPoint, j_max: usize) -> Vec<f64> {
    let p = power_sums_dd(w, j_max.max(1));
    let mut c = vec![TwoFloat::from(0.0); j_max + 1];
    c[0] = TwoFloat::from(1.0);
    for j in 1..=j_max {
        let s = (1..=j).fold(TwoFloat::from(0.0), |acc, i| acc + p[i - 1] * c[j - i]);
        c[j] = -s / j as f64;
    }
    c.into_iter().map(f64::from).collect()
}

pub const PARTITION_MAX_ORDER: usize = 20;

/// Taylor coefficients by literal enumeration of `m₁ + 2m₂ + ⋯ + jm_j = j`.
pub fn taylor_coeffs_partition(w: &OmegaPoint, j_max: usize) -> Result<Vec<f64>> {
    if j_max > PARTITION_MAX_ORDER {
        return Err(Error::OrderTooLarge { requested: j_max, max: PARTITION_MAX_ORDER });
    }
    let neg_p: Vec<TwoFloat> = power_sums_dd(w, j_max.max(1)).into_iter().map(|p| -p).collect();
    let mut c = vec![1.0; j_max + 1];
    for (j, cj) in c.iter_mut().enumerate().skip(1) {
        *cj = f64::from(partition_sum(j, j, &neg_p));
    }
    Ok(c)
}

/// Sum over multiplicities of parts `≤ largest` that total `remaining`.
fn partition_sum(remaining: usize, largest: usize, neg_p: &[TwoFloat]) -> TwoFloat {
    if remaining == 0 {
        return TwoFloat::from(1.0);
    }
    if largest == 0 {
        return TwoFloat::from(0.0);
    }
    let i = largest;
    let base = neg_p[i - 1] / i as f64;
    let mut total = TwoFloat::from(0.0);
    let mut weight = TwoFloat::from(1.0); // base^m / m!
    for m in 0..=remaining / i {
        if m > 0 {
            weight = weight * base / m as f64;
        }
        total += weight * partition_sum(remaining - m * i, i - 1, neg_p);
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvPartial {
    pub radius: f64,
    pub threshold: f64,
    pub included: usize,
    pub product: Complex64,
    pub pv_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvResult {
    pub partials: Vec<PvPartial>,
    /// Final partial product with the excluded quadratic mass compensated.
    pub value: Complex64,
    pub gamma1: f64,
    /// `γ₁` minus the last principal-value sum.
    pub pv_mismatch: f64,
    pub pv_condition_holds: bool,
}

/// Tolerance on `γ₂` for the principal-value representation.
pub fn gamma2_zero_tol(w: &OmegaPoint) -> f64 {
    1e-12 * w.delta().max(1.0)
}

/// Principal-value partial products `∏_{|α| > R⁻²} (1 − αᵢ⁺z)(1 + αᵢ⁻z)` along a schedule of `R`.
pub fn pv_eval(w: &OmegaPoint, z: Complex64, radii: &[f64]) -> Result<PvResult> {
    if radii.is_empty() {
        return Err(Error::Empty("pv_eval needs a radius schedule"));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Domain("radius schedule must be positive and strictly increasing".into()));
    }
    let tol = gamma2_zero_tol(w);
    if w.gamma2() > w.tail_eps() + tol {
        return Err(Error::RepresentationInvalid { gamma2: w.gamma2(), tol: w.tail_eps() + tol });
    }

    let (ap, am) = (w.alpha_plus(), w.alpha_minus());
    let (mut ip, mut im) = (0usize, 0usize);
    let mut acc = Accumulator::new();
    let (mut sum_p, mut sum_m) = (0.0f64, 0.0f64);
    let (mut sq_p, mut sq_m) = (0.0f64, 0.0f64);
    let mut partials = Vec::with_capacity(radii.len());
    for &r in radii {
        let threshold = r.powi(-2);
        while ip < ap.len() && ap[ip] > threshold {
            acc.mul(Complex64::new(1.0, 0.0) - z * ap[ip]);
            sum_p += ap[ip];
            sq_p += ap[ip] * ap[ip];
            ip += 1;
        }
        while im < am.len() && am[im] > threshold {
            acc.mul(Complex64::new(1.0, 0.0) + z * am[im]);
            sum_m += am[im];
            sq_m += am[im] * am[im];
            im += 1;
        }
        let product = acc.mantissa * acc.log_sum.exp();
        partials.push(PvPartial { radius: r, threshold, included: ip + im, product, pv_sum: sum_p - sum_m });
    }
    let last = partials.last().expect("non-empty schedule");
    let excluded_mass = (w.delta() - (sq_p + sq_m)).max(0.0);
    let value = last.product * (-z * z * (excluded_mass / 2.0)).exp();
    let pv_mismatch = w.gamma1() - last.pv_sum;
    let pv_tol = 1e-9 * (ap.iter().sum::<f64>() + am.iter().sum::<f64>()).max(1.0);
    Ok(PvResult {
        value,
        gamma1: w.gamma1(),
        pv_mismatch,
        pv_condition_holds: pv_mismatch.abs() <= pv_tol,
        partials,
    })
}

/// Order-`r` regularized determinant `∏ (1 − zλ) exp(Σ_{j=1}^{r−1} (zλ)^j / j)` of a diagonal operator.
pub fn det_reg(spectrum: &[f64], r: usize, z: Complex64) -> Result<Complex64> {
    if r < 2 {
        return Err(Error::Domain(format!("regularization order must be >= 2, got {r}")));
    }
    let mass: f64 = spectrum.iter().map(|l| l.abs().powi(r as i32)).sum();
    if !mass.is_finite() {
        return Err(Error::Domain(format!("spectrum is not {r}-power summable")));
    }
    let mut acc = Accumulator::new();
    for &lam in spectrum {
        acc.push_regularized(z * lam, r);
    }
    Ok(acc.finish(Complex64::new(0.0, 0.0)))
}

/// Point of the order-`r` parameter space: `(α⁺, α⁻, δ₁, …, δ_r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherOmegaPoint {
    alpha_plus: Vec<f64>,
    alpha_minus: Vec<f64>,
    deltas: Vec<f64>,
}

impl HigherOmegaPoint {
    pub fn new(alpha_plus: Vec<f64>, alpha_minus: Vec<f64>, deltas: Vec<f64>) -> Result<Self> {
        let r = deltas.len();
        if r < 2 {
            return Err(Error::Domain(format!("order must be >= 2, got {r}")));
        }
        // validates monotonicity and sign through OmegaPoint's checks
        OmegaPoint::new(alpha_plus.clone(), alpha_minus.clone(), 0.0, f64::MAX)?;
        if deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::Domain("non-finite delta".into()));
        }
        let dom: f64 = alpha_plus.iter().chain(&alpha_minus).map(|a| a.powi(r as i32)).sum();
        let top = deltas[r - 1];
        if dom > top + 8.0 * f64::EPSILON * top.abs().max(1.0) {
            return Err(Error::Domain(format!("delta_{r} = {top} below power sum {dom}")));
        }
        Ok(Self { alpha_plus, alpha_minus, deltas })
    }

    /// The order-2 point `δ₁ = γ₁, δ₂ = δ`.
    pub fn from_omega(w: &OmegaPoint) -> Self {
        Self {
            alpha_plus: w.alpha_plus().to_vec(),
            alpha_minus: w.alpha_minus().to_vec(),
            deltas: vec![w.gamma1(), w.delta()],
        }
    }

    pub fn order(&self) -> usize {
        self.deltas.len()
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn signed_spectrum(&self) -> Vec<f64> {
        self.alpha_plus
            .iter()
            .copied()
            .chain(self.alpha_minus.iter().map(|a| -a))
            .collect()
    }
}

/// `𝔈_ω(z) = det_{r+1}(I − z𝔄) · exp(−Σ_{j=1}^r δ_j z^j / j)`.
pub fn eval_higher(w: &HigherOmegaPoint, z: Complex64) -> Result<Complex64> {
    let r = w.order();
    let f = det_reg(&w.signed_spectrum(), r + 1, z)?;
    let mut pow = Complex64::new(1.0, 0.0);
    let mut expo = Complex64::new(0.0, 0.0);
    for (j, d) in w.deltas().iter().enumerate() {
        pow *= z;
        expo -= pow * (*d / (j + 1) as f64);
    }
    Ok(f * expo.exp())
}

/// Right-hand side of the quantitative distance bound between `E_ω` and `E_ω̃`.
///
/// Stored truncations contribute their omitted tails through
/// `Σ_tail |a − b|³ ≤ 4(ε_a^{3/2} + ε_b^{3/2})`.
pub fn quantitative_bound(w: &OmegaPoint, wt: &OmegaPoint, z: Complex64, l: f64) -> f64 {
    let r = z.norm();
    let (g, gt) = (w.gamma1(), wt.gamma1());
    let (d, dt) = (w.delta(), wt.delta());
    let first = (g.abs() * r + 5.0 * d * r * r).exp()
        * ((g - gt).abs() * r + (d - dt).abs() / 2.0 * r * r).exp_m1();
    let cube = |a: &[f64], b: &[f64]| -> f64 {
        let n = a.len().max(b.len());
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        (0..n).map(|i| (at(a, i) - at(b, i)).abs().powi(3)).sum()
    };
    let tails = 4.0 * (w.tail_eps().powf(1.5) + wt.tail_eps().powf(1.5));
    let l3 = (cube(w.alpha_plus(), wt.alpha_plus()) + cube(w.alpha_minus(), wt.alpha_minus()) + tails).cbrt();
    let second = r
        * l3
        * (gt.abs() * r + dt / 2.0 * r * r + l * (r * (d.sqrt() + dt.sqrt()) + 1.0).powi(3)).exp();
    first + second
}
