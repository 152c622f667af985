use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::omega::WeylVector;

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Relative asymmetry accepted by [`HermitianMatrix::new`].
    pub const TOL: f64 = 1e-12;

    /// Checks conjugate symmetry up to `TOL · max|entry|`, then stores the
    /// exact Hermitian part.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Domain(format!("matrix is {}×{}", m.nrows(), m.ncols())));
        }
        if m.nrows() == 0 {
            return Err(Error::Empty("matrix"));
        }
        if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let n = m.nrows();
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if asym > Self::TOL * scale {
            return Err(Error::NotHermitian(asym / scale));
        }
        Ok(Self::hermitize(m))
    }

    /// `(M + M*)/2` without any check; used by samplers that build the
    /// matrix entrywise.
    pub(crate) fn hermitize(m: DMatrix<Complex64>) -> Self {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Self { m: h }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Result<Self> {
        let n = d.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j { Complex64::new(d[i], 0.0) } else { Complex64::new(0.0, 0.0) }
        }))
    }

    pub fn size(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.size()).map(|i| self.m[(i, i)].re).sum()
    }

    /// Top-left `n×n` corner.
    pub fn corner(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.size() {
            return Err(Error::Domain(format!("corner {n} of a size-{} matrix", self.size())));
        }
        Ok(Self { m: self.m.view((0, 0), (n, n)).into_owned() })
    }
}

/// Ordered eigenvalues with multiplicity.
pub fn eigenvalues(h: &HermitianMatrix) -> Result<WeylVector> {
    let ev = h.m.clone().symmetric_eigenvalues();
    let v: Vec<f64> = ev.iter().copied().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    WeylVector::from_unsorted(v)
}
