//! Eigenpairs of the graph Laplacian in the `L²(μ_n)` inner product, and the
//! fractional energies and operators they induce.
//!
//! Eigenvectors are stored as the columns of an `n × n` matrix scaled so that
//! `(1/n) Σ_i ψ_k(x_i)² = 1`, i.e. Euclidean unit vectors times `√n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues at or below this (relative to `max(1, λ_max)`) are the kernel
/// of the operator: `λ^s := 0` for every `s > 0`.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;
const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from raw parts (used by the eigen cache).
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 || eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::invalid("eigenvector matrix must be n × n"));
        }
        if eigenvalues.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::invalid("eigenvalues must be finite and ascending"));
        }
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `k` is `ψ_{k+1}`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let n = self.len();
        &self.eigenvectors.as_slice()[k * n..(k + 1) * n]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty")
    }

    pub(crate) fn zero_threshold(&self) -> f64 {
        ZERO_EIGENVALUE * self.max_eigenvalue().max(1.0)
    }

    /// `λ^s` with the kernel convention `0^s = 0` for `s > 0`.
    pub fn eigenvalue_power(&self, k: usize, s: f64) -> f64 {
        let lambda = self.eigenvalues[k];
        if s == 0.0 {
            1.0
        } else if lambda <= self.zero_threshold() {
            0.0
        } else {
            lambda.powf(s)
        }
    }

    /// Number of eigenvalues in the numerical kernel.
    pub fn zero_multiplicity(&self) -> usize {
        let thr = self.zero_threshold();
        self.eigenvalues.iter().take_while(|&&l| l <= thr).count()
    }

    /// Coefficients `⟨u, ψ_k⟩_{L²(μ_n)}` for every `k`.
    pub fn coefficients(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if u.len() != n {
            return Err(Error::LengthMismatch {
                left: u.len(),
                right: n,
            });
        }
        let u = DVector::from_column_slice(u);
        let c = self.eigenvectors.tr_mul(&u) / n as f64;
        Ok(c.as_slice().to_vec())
    }

    /// `Σ_k c_k ψ_k` at every node.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let c = DVector::from_column_slice(coeffs);
        (&self.eigenvectors * c).as_slice().to_vec()
    }
}

/// Full dense eigendecomposition with ascending eigenvalues, `L²(μ_n)`-scaled
/// eigenvectors and a deterministic sign (first entry above 1e-12 in
/// magnitude is positive).
pub fn eigendecompose(laplacian: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = laplacian.nrows();
    if n == 0 || laplacian.ncols() != n {
        return Err(Error::invalid("matrix must be square and nonempty"));
    }
    let scale = laplacian.amax().max(f64::MIN_POSITIVE);
    let mut asym: f64 = 0.0;
    for j in 0..n {
        for i in 0..j {
            asym = asym.max((laplacian[(i, j)] - laplacian[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym / scale));
    }
    if laplacian.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }

    let max_sweeps = 64 * n + 1000;
    let eig = SymmetricEigen::try_new(laplacian.clone(), f64::EPSILON, max_sweeps)
        .ok_or(Error::EigenNotConverged)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let root_n = (n as f64).sqrt();
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let sign = col
            .iter()
            .find(|v| v.abs() > SIGN_TOL / root_n)
            .map_or(1.0, |v| v.signum());
        eigenvectors.set_column(dst, &(col * (sign * root_n)));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `(1/n) Σ_i u_i v_i`.
pub fn inner_product(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::invalid("empty node function"));
    }
    Ok(u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / u.len() as f64)
}

/// `E^(s)(u) = Σ_k λ_k^s ⟨u, ψ_k⟩²`.
pub fn fractional_energy(spec: &SpectralDecomposition, u: &[f64], s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!("exponent must be positive, got {s}")));
    }
    let c = spec.coefficients(u)?;
    Ok(c
        .iter()
        .enumerate()
        .map(|(k, ck)| spec.eigenvalue_power(k, s) * ck * ck)
        .sum())
}

/// `Δ^s u = Σ_k λ_k^s ⟨u, ψ_k⟩ ψ_k`.
pub fn apply_fractional(spec: &SpectralDecomposition, u: &[f64], s: f64) -> Result<Vec<f64>> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!("exponent must be nonnegative, got {s}")));
    }
    let mut c = spec.coefficients(u)?;
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= spec.eigenvalue_power(k, s);
    }
    Ok(spec.synthesize(&c))
}
