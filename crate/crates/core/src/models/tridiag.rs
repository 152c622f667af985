//! Real symmetric tridiagonal matrices: eigenvalues by implicit QL, and
//! resolvent traces and determinant ratios by the minor recurrence.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e.len() == d.len() - 1`), sorted nonincreasing.
pub fn tridiag_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Err(Error::Empty("tridiagonal diagonal"));
    }
    if e.len() + 1 != n {
        return Err(Error::Domain(format!("off-diagonal length {} for size {n}", e.len())));
    }
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::Numerical("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// `Σ 1/(λᵢ − s)` and `Σ 1/(λᵢ − s)²` over the eigenvalues of the symmetric
/// tridiagonal matrix `(d, e)`, from the minor recurrence
/// `D_k = (d_k − s)D_{k−1} − e²_{k−1}D_{k−2}` and its first two derivatives,
/// carried as ratios. `None` when `s` hits a pivot exactly.
pub fn resolvent_sums(d: &[f64], e: &[f64], s: f64) -> Option<(f64, f64)> {
    let n = d.len();
    if n == 0 || e.len() + 1 != n {
        return None;
    }
    // q = D_k/D_{k−1}, u = D'_k/D_k, v = D''_k/D_k
    let (mut q_prev, mut u_prev, mut v_prev) = (1.0, 0.0, 0.0);
    let (mut u_prev2, mut v_prev2) = (0.0, 0.0);
    for k in 0..n {
        let a = d[k] - s;
        let b2 = if k > 0 { e[k - 1] * e[k - 1] } else { 0.0 };
        let q = if k > 0 { a - b2 / q_prev } else { a };
        if q == 0.0 || !q.is_finite() {
            return None;
        }
        let (u, v) = if k > 0 {
            (
                (-1.0 + a * u_prev - b2 * u_prev2 / q_prev) / q,
                (-2.0 * u_prev + a * v_prev - b2 * v_prev2 / q_prev) / q,
            )
        } else {
            (-1.0 / q, 0.0)
        };
        u_prev2 = u_prev;
        v_prev2 = v_prev;
        u_prev = u;
        v_prev = v;
        q_prev = q;
    }
    Some((-u_prev, u_prev * u_prev - v_prev))
}

/// `det(T − t)/det(T − s)` for the symmetric tridiagonal `T = (d, e)`.
pub fn det_ratio(d: &[f64], e: &[f64], t: Complex64, s: f64) -> Option<Complex64> {
    let n = d.len();
    if n == 0 || e.len() + 1 != n {
        return None;
    }
    if t == Complex64::new(s, 0.0) {
        return Some(Complex64::new(1.0, 0.0));
    }
    let (mut qt, mut qs) = (Complex64::new(1.0, 0.0), 1.0);
    let mut log = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let b2 = if k > 0 { e[k - 1] * e[k - 1] } else { 0.0 };
        let nt = Complex64::new(d[k], 0.0) - t - if k > 0 { b2 / qt } else { Complex64::new(0.0, 0.0) };
        let ns = d[k] - s - if k > 0 { b2 / qs } else { 0.0 };
        if ns == 0.0 || nt == Complex64::new(0.0, 0.0) {
            return None;
        }
        if nt != Complex64::new(ns, 0.0) {
            log += (nt / ns).ln();
        }
        qt = nt;
        qs = ns;
    }
    Some(log.exp())
}
