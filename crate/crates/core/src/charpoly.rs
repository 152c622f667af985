//! Characteristic polynomials `∏(1 − z xᵢ)` and their rescaled and
//! renormalized variants, plus sup-distances on a sampled disk.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::omega::WeylVector;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Finite sample of the closed disk of a given radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskGrid {
    radius: f64,
    points: Vec<Complex64>,
}

impl DiskGrid {
    pub const BOUNDARY_POINTS: usize = 64;
    pub const LATTICE_SIDE: usize = 17;

    /// 64 equally spaced boundary points plus a 17×17 lattice clipped to the disk.
    pub fn new(radius: f64) -> Result<Self> {
        Self::with_resolution(radius, Self::BOUNDARY_POINTS, Self::LATTICE_SIDE)
    }

    /// `boundary` must be even and `side` odd so that `±radius` and `0` are sampled.
    pub fn with_resolution(radius: f64, boundary: usize, side: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("grid radius must be positive, got {radius}")));
        }
        if boundary < 2 || !boundary.is_multiple_of(2) || side < 3 || side.is_multiple_of(2) {
            return Err(Error::Domain("grid needs an even boundary count and an odd lattice side".into()));
        }
        let mut points = Vec::with_capacity(boundary + side * side);
        for k in 0..boundary {
            let t = 2.0 * std::f64::consts::PI * k as f64 / boundary as f64;
            points.push(Complex64::from_polar(radius, t));
        }
        // exact axis points; from_polar leaves ~1e-16 imaginary residue at angle π
        points[0] = Complex64::new(radius, 0.0);
        points[boundary / 2] = Complex64::new(-radius, 0.0);
        let h = 2.0 * radius / (side - 1) as f64;
        let mid = (side / 2) as i64;
        for i in 0..side as i64 {
            for j in 0..side as i64 {
                let p = Complex64::new((i - mid) as f64 * h, (j - mid) as f64 * h);
                if p.norm() <= radius {
                    points.push(p);
                }
            }
        }
        Ok(Self { radius, points })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }
}

/// Pairwise (tree) product of `1 − z xᵢ`.
fn tree_product(xs: &[f64], z: Complex64) -> Complex64 {
    match xs.len() {
        0 => ONE,
        1 => ONE - z * xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            tree_product(a, z) * tree_product(b, z)
        }
    }
}

/// `Ψ(z) = ∏ (1 − z xᵢ)`.
pub fn charpoly_eval(x: &WeylVector, z: Complex64) -> Complex64 {
    tree_product(x.entries(), z)
}

/// `Ψ_N(z/N)` with `N = len(x)`.
pub fn rescaled_charpoly(x: &WeylVector, z: Complex64) -> Complex64 {
    if x.is_empty() {
        return ONE;
    }
    charpoly_eval(x, z / x.len() as f64)
}

/// `∏(1 − z xᵢ) · exp(−c₁z − c₂z²/2)`.
pub fn renormalized_charpoly(x: &WeylVector, c1: f64, c2: f64, z: Complex64) -> Complex64 {
    charpoly_eval(x, z) * (-z * c1 - z * z * (c2 / 2.0)).exp()
}

/// Reciprocals `1/yᵢ` as a Weyl vector; fails on a zero point.
pub fn reciprocals(y: &WeylVector) -> Result<WeylVector> {
    if let Some(i) = y.entries().iter().position(|v| *v == 0.0) {
        return Err(Error::Domain(format!("zero point at index {i}")));
    }
    WeylVector::from_unsorted(y.entries().iter().map(|v| 1.0 / v).collect())
}

/// Edge-renormalized polynomial `∏(1 − z/yᵢ) e^{−N^{1/3} z}` for edge-rescaled points `yᵢ`.
pub fn airy_renorm(y: &WeylVector, n: usize, z: Complex64) -> Result<Complex64> {
    let inv = reciprocals(y)?;
    Ok(renormalized_charpoly(&inv, (n as f64).cbrt(), 0.0, z))
}

/// Edge rescaling `yᵢ = 2N^{2/3}(xᵢ − 1)`.
pub fn edge_rescale(x: &WeylVector) -> WeylVector {
    let n = x.len() as f64;
    let s = 2.0 * n.powf(2.0 / 3.0);
    WeylVector::new(x.entries().iter().map(|v| s * (v - 1.0)).collect())
        .expect("affine map with positive slope preserves order")
}

/// `max_{z ∈ grid} |f(z) − g(z)|`.
pub fn sup_distance<F, G>(f: F, g: G, grid: &DiskGrid) -> f64
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    grid.points().iter().map(|&z| (f(z) - g(z)).norm()).fold(0.0, f64::max)
}

/// `max_{z ∈ grid} |f(z)|`.
pub fn sup_norm<F>(f: F, grid: &DiskGrid) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    grid.points().iter().map(|&z| f(z).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpfun::{det_reg, eval_lp};
    use crate::omega::embed_slice;

    fn wv(v: &[f64]) -> WeylVector {
        WeylVector::new(v.to_vec()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_contains_required_points() {
        let g = DiskGrid::new(2.0).unwrap();
        let has = |p: Complex64| g.points().contains(&p);
        assert!(has(c(0.0, 0.0)));
        assert!(has(c(2.0, 0.0)));
        assert!(has(c(-2.0, 0.0)));
        assert!(g.points().iter().all(|p| p.norm() <= 2.0 + 1e-15));
        assert!(DiskGrid::new(0.0).is_err());
    }

    #[test]
    fn charpoly_examples() {
        assert_eq!(charpoly_eval(&wv(&[1.0, -1.0]), c(2.0, 0.0)), c(-3.0, 0.0));
        assert_eq!(charpoly_eval(&wv(&[5.0, 1.0, -3.0]), c(0.0, 0.0)), c(1.0, 0.0));
        assert_eq!(charpoly_eval(&wv(&[2.0]), c(0.5, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn rescaled_examples() {
        let n = 7;
        let mut v = vec![0.0; n];
        v[0] = n as f64;
        assert_eq!(rescaled_charpoly(&wv(&v), c(1.0, 0.0)), c(0.0, 0.0));
        assert_eq!(rescaled_charpoly(&wv(&v), c(0.0, 0.0)), c(1.0, 0.0));

        // all-ones: (1 − 1/N)^N, equal to E for ω = (γ₁ = 1) only in the limit
        let ones = wv(&vec![1.0; 1000]);
        let v = rescaled_charpoly(&ones, c(1.0, 0.0));
        assert!((v.re - (1.0 - 1e-3f64).powi(1000)).abs() < 1e-12);
        let w = crate::omega::OmegaPoint::new(vec![], vec![], 1.0, 0.0).unwrap();
        let e = eval_lp(&w, c(1.0, 0.0), 1e-12).unwrap();
        assert!((v - e).norm() < 1e-3);
    }

    #[test]
    fn renormalized_examples() {
        let x = wv(&[0.7, -0.3]);
        let z = c(0.4, -1.2);
        assert_eq!(renormalized_charpoly(&x, 0.0, 0.0, z), charpoly_eval(&x, z));
        let (a, g) = (1.3, 0.45);
        let r = renormalized_charpoly(&wv(&[a]), -a + g, 0.0, z);
        let want = (ONE - z * a) * (z * (a - g)).exp();
        assert!((r - want).norm() < 1e-14);
        assert_eq!(renormalized_charpoly(&x, 2.0, 5.0, c(0.0, 0.0)), ONE);
    }

    #[test]
    fn renormalized_is_order_two_determinant() {
        let xs = [1.1, 0.4, -0.2, -0.9];
        let x = wv(&xs);
        let s: f64 = xs.iter().sum();
        for z in [c(0.3, 0.2), c(-1.5, 0.8), c(2.0, -2.0)] {
            let a = renormalized_charpoly(&x, -s, 0.0, z);
            let b = det_reg(&xs, 2, z).unwrap();
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn airy_examples() {
        let y = wv(&[-1.0]);
        let v = airy_renorm(&y, 1, c(1.0, 0.0)).unwrap();
        assert!((v.re - 2.0 / std::f64::consts::E).abs() < 1e-15);
        let y = wv(&[-0.5, -2.0, -7.0]);
        assert_eq!(airy_renorm(&y, 3, c(0.0, 0.0)).unwrap(), ONE);
        assert!(airy_renorm(&wv(&[0.0, -1.0]), 2, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn airy_linear_coefficient() {
        // c₁(𝔓_N) = −(Σ1/yᵢ + N^{1/3}); check by a central difference at 0
        let y = wv(&[-0.8, -2.5, -4.0, -6.5]);
        let n = 4;
        let h = 1e-5;
        let d = (airy_renorm(&y, n, c(h, 0.0)).unwrap() - airy_renorm(&y, n, c(-h, 0.0)).unwrap()) / (2.0 * h);
        let s: f64 = y.entries().iter().map(|v| 1.0 / v).sum();
        assert!((d.re + (s + (n as f64).cbrt())).abs() < 1e-8);
    }

    #[test]
    fn sup_distance_examples() {
        let g = DiskGrid::new(2.0).unwrap();
        assert_eq!(sup_distance(|z| z * z, |z| z * z, &g), 0.0);
        assert_eq!(sup_distance(|_| c(0.0, 0.0), |_| ONE, &g), 1.0);
        assert_eq!(sup_distance(|z| z, |_| c(0.0, 0.0), &g), 2.0);
    }

    #[test]
    fn rescaled_matches_embedding() {
        let x = [4.0, 1.5, 0.3, -2.0, -4.9];
        let n = x.len() as f64;
        let w = embed_slice(&x.iter().map(|v| v / n).collect::<Vec<_>>()).unwrap();
        let g = DiskGrid::new(5.0).unwrap();
        let xv = wv(&x);
        let d = sup_distance(|z| rescaled_charpoly(&xv, z), |z| eval_lp(&w, z, 1e-10).unwrap(), &g);
        let s = sup_norm(|z| rescaled_charpoly(&xv, z), &g);
        assert!(d <= 1e-10 * s);
    }
}
