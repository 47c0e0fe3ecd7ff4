//! Exact constrained minimization of the fractional graph energy under
//! pointwise label constraints.
//!
//! The minimizer of `Σ_k λ_k^s a_k²` subject to `u(x_i) = ℓ_i` satisfies
//! `a_k = λ_k^{-s} Σ_i μ_i ψ_k(x_i)` for the nonconstant modes, with the
//! constant-mode coefficient `c₁` and the multipliers `μ` solving the saddle
//! system `[G b; bᵀ 0] (μ, c₁) = (ℓ, 0)`.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{fractional_energy, SpectralDecomposition};

/// Smallest admissible `λ₂ / max(1, λ_max)` for a connected graph.
const CONNECTED_GAP: f64 = 1e-10;
const CONSTRAINT_TOL: f64 = 1e-7;

/// Labeled nodes `(index, ℓ)`. Indices are zero-based node positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    entries: Vec<(usize, f64)>,
}

impl ConstraintSet {
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("at least one constraint is required"));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for &(i, l) in &entries {
            if !seen.insert(i) {
                return Err(Error::DuplicateConstraint(i));
            }
            if !l.is_finite() {
                return Err(Error::invalid(format!("label at node {i} is not finite")));
            }
        }
        Ok(ConstraintSet { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn labels(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    pub fn max_abs_label(&self) -> f64 {
        self.labels().fold(0.0, |m, l| m.max(l.abs()))
    }

    /// Same nodes with every label mapped through `f`.
    pub fn map_labels(&self, f: impl Fn(f64) -> f64) -> ConstraintSet {
        ConstraintSet {
            entries: self.entries.iter().map(|&(i, l)| (i, f(l))).collect(),
        }
    }

    pub(crate) fn check_bounds(&self, n: usize) -> Result<()> {
        match self.indices().find(|&i| i >= n) {
            Some(i) => Err(Error::invalid(format!("constraint index {i} outside 0..{n}"))),
            None => Ok(()),
        }
    }
}

/// A constrained minimizer with its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelFunction {
    pub values: Vec<f64>,
    pub energy: f64,
    pub s: f64,
}

/// Solves `[G b; bᵀ 0] (μ, c) = (rhs, 0)`.
pub(crate) fn solve_saddle(green: &DMatrix<f64>, b: &[f64], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = b.len();
    let mut a = DMatrix::zeros(m + 1, m + 1);
    a.view_mut((0, 0), (m, m)).copy_from(green);
    for i in 0..m {
        a[(i, m)] = b[i];
        a[(m, i)] = b[i];
    }
    let mut r = DVector::zeros(m + 1);
    r.as_mut_slice()[..m].copy_from_slice(rhs);
    let sol = a
        .lu()
        .solve(&r)
        .ok_or(Error::Singular("saddle system"))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("saddle system"));
    }
    Ok((sol.as_slice()[..m].to_vec(), sol[m]))
}

/// The unique minimizer of `E^(s)` over node functions matching `constraints`.
pub fn solve_constrained(
    spec: &SpectralDecomposition,
    constraints: &ConstraintSet,
    s: f64,
) -> Result<LabelFunction> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!("exponent must be positive, got {s}")));
    }
    let n = spec.len();
    constraints.check_bounds(n)?;
    let lambdas = spec.eigenvalues();
    if n >= 2 && lambdas[1] <= CONNECTED_GAP * spec.max_eigenvalue().max(1.0) {
        let gap = CONNECTED_GAP * spec.max_eigenvalue().max(1.0);
        let mult = lambdas.iter().take_while(|&&l| l <= gap).count();
        return Err(Error::Disconnected(mult));
    }

    if constraints.len() == n {
        let mut values = vec![0.0; n];
        for &(i, l) in constraints.entries() {
            values[i] = l;
        }
        let energy = fractional_energy(spec, &values, s)?;
        return Ok(LabelFunction { values, energy, s });
    }

    // Mode weights (λ₂/λ_k)^s; the common factor λ₂^{-s} only rescales μ.
    let lambda2 = lambdas.get(1).copied().unwrap_or(1.0);
    let weights: Vec<f64> = std::iter::once(0.0)
        .chain(lambdas[1..].iter().map(|&l| (lambda2 / l).powf(s)))
        .collect();

    let idx: Vec<usize> = constraints.indices().collect();
    let labels: Vec<f64> = constraints.labels().collect();
    let m = idx.len();
    // rows: constrained nodes, columns: modes
    let phi = DMatrix::from_fn(m, n, |r, k| spec.eigenvectors()[(idx[r], k)]);
    let weighted = DMatrix::from_fn(m, n, |r, k| phi[(r, k)] * weights[k]);
    let green = &weighted * phi.transpose();
    let b: Vec<f64> = (0..m).map(|r| phi[(r, 0)]).collect();

    let evaluate = |mu: &[f64], c1: f64| -> Vec<f64> {
        let mut coeffs = (weighted.transpose() * DVector::from_column_slice(mu))
            .as_slice()
            .to_vec();
        coeffs[0] = c1;
        coeffs
    };

    let (mu, c1) = solve_saddle(&green, &b, &labels)?;
    let mut coeffs = evaluate(&mu, c1);
    let mut values = spec.synthesize(&coeffs);

    // one step of iterative refinement on the constraint residual
    let residual: Vec<f64> = idx.iter().zip(&labels).map(|(&i, l)| l - values[i]).collect();
    if residual.iter().any(|r| *r != 0.0) {
        let (dmu, dc1) = solve_saddle(&green, &b, &residual)?;
        let correction = evaluate(&dmu, dc1);
        for (c, d) in coeffs.iter_mut().zip(&correction) {
            *c += d;
        }
        values = spec.synthesize(&coeffs);
    }

    let tol = CONSTRAINT_TOL * (1.0 + constraints.max_abs_label());
    if idx.iter().zip(&labels).any(|(&i, l)| (values[i] - l).abs() > tol) {
        return Err(Error::Singular("saddle system too ill-conditioned to meet constraints"));
    }
    let energy = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| spec.eigenvalue_power(k, s) * c * c)
        .sum();
    Ok(LabelFunction { values, energy, s })
}

/// Independent check for integer `s`: forms `M = Δ^s` by repeated
/// multiplication and solves `M_FF u_F = −M_FC ℓ`.
pub fn brute_force_oracle(
    laplacian: &DMatrix<f64>,
    constraints: &ConstraintSet,
    s: u32,
) -> Result<Vec<f64>> {
    if s == 0 {
        return Err(Error::invalid("oracle exponent must be a positive integer"));
    }
    let n = laplacian.nrows();
    if laplacian.ncols() != n {
        return Err(Error::invalid("laplacian must be square"));
    }
    constraints.check_bounds(n)?;
    let mut power = laplacian.clone();
    for _ in 1..s {
        power = &power * laplacian;
    }

    let mut values = vec![0.0; n];
    let mut constrained = vec![false; n];
    for &(i, l) in constraints.entries() {
        values[i] = l;
        constrained[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !constrained[i]).collect();
    if free.is_empty() {
        return Ok(values);
    }
    let fixed: Vec<(usize, f64)> = constraints.entries().to_vec();
    let mff = DMatrix::from_fn(free.len(), free.len(), |a, b| power[(free[a], free[b])]);
    let rhs = DVector::from_fn(free.len(), |a, _| {
        -fixed.iter().map(|&(c, l)| power[(free[a], c)] * l).sum::<f64>()
    });
    let sol = mff
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("free-node block (graph disconnected?)"))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("free-node block (graph disconnected?)"));
    }
    for (a, &i) in free.iter().enumerate() {
        values[i] = sol[a];
    }
    Ok(values)
}

/// `0` where `u < threshold`, else `1`.
pub fn classify(u: &[f64], threshold: f64) -> Vec<u8> {
    u.iter().map(|&v| if v < threshold { 0 } else { 1 }).collect()
}
