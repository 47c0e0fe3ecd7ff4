//! Reference continuum minimizer on the unit torus with uniform density.
//!
//! With a constant density the weighted Laplacian is `−div ∇`, which the
//! periodic grid diagonalizes in the Fourier basis. The constrained minimizer
//! is then `c₁ + Σ_i μ_i g(· − z_i)` where `g` is the Green function of
//! `Δ^{-s}` off the constant mode.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::ssl::solve_saddle;
use crate::torus::{SampleSet, TorusPoint};

const CONSTRAINT_TOL: f64 = 1e-7;

/// `m^d` nodes at `(p₁h, …, p_dh)`, `h = 1/m`, flattened row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicGrid {
    pub m: usize,
    pub d: usize,
}

impl PeriodicGrid {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("grid needs at least 2 nodes per axis"));
        }
        if !(1..=3).contains(&d) {
            return Err(Error::invalid("continuum grid supports d in 1..=3"));
        }
        Ok(PeriodicGrid { m, d })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of a flat node index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for a in (0..self.d).rev() {
            idx[a] = flat % self.m;
            flat /= self.m;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &p| acc * self.m + p % self.m)
    }

    /// Signed frequency of grid index `p` in `(−m/2, m/2]`.
    pub fn frequency(&self, p: usize) -> i64 {
        if 2 * p <= self.m {
            p as i64
        } else {
            p as i64 - self.m as i64
        }
    }

    /// Nearest node to `x`; exact half-way ties go to the lower index.
    pub fn snap(&self, x: &TorusPoint) -> Result<usize> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.dim(),
            });
        }
        let m = self.m as f64;
        let idx: Vec<usize> = x
            .coords()
            .iter()
            .map(|&c| ((c * m - 0.5).ceil() as i64).rem_euclid(self.m as i64) as usize)
            .collect();
        Ok(self.flatten(&idx))
    }

    pub fn node_position(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        self.unflatten(flat).into_iter().map(|p| p as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumVariant {
    /// Symbol of the `2d+1`-point periodic stencil.
    FiniteDifference,
    /// `4π²|k|²`.
    Analytic,
}

/// Per-mode eigenvalues indexed like the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumSpectrum {
    pub grid: PeriodicGrid,
    pub variant: SpectrumVariant,
    eigenvalues: Vec<f64>,
}

impl ContinuumSpectrum {
    pub fn mode_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Ascending sequence `λ_1 = 0 ≤ λ_2 ≤ …`.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn smallest_nonzero(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|&l| l > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn continuum_spectrum(grid: PeriodicGrid, variant: SpectrumVariant) -> ContinuumSpectrum {
    let h = grid.spacing();
    let m = grid.m as f64;
    let eigenvalues = (0..grid.len())
        .map(|flat| {
            grid.unflatten(flat)
                .into_iter()
                .map(|p| match variant {
                    SpectrumVariant::FiniteDifference => {
                        let s = (PI * p as f64 / m).sin();
                        4.0 / (h * h) * s * s
                    }
                    SpectrumVariant::Analytic => {
                        let k = grid.frequency(p) as f64;
                        4.0 * PI * PI * k * k
                    }
                })
                .sum()
        })
        .collect();
    ContinuumSpectrum {
        grid,
        variant,
        eigenvalues,
    }
}

/// First `count` eigenvalues `4π²|k|²`, `k ∈ Z^d`, in ascending order
/// (rank 1 is the zero mode).
pub fn analytic_torus_eigenvalues(d: usize, count: usize) -> Vec<f64> {
    assert!(d >= 1, "dimension must be positive");
    if count == 0 {
        return Vec::new();
    }
    let mut radius = ((count as f64).powf(1.0 / d as f64).ceil() as i64).max(1);
    loop {
        let side = 2 * radius + 1;
        let total = (side as usize).pow(d as u32);
        let mut sq: Vec<i64> = (0..total)
            .map(|mut flat| {
                let mut acc = 0;
                for _ in 0..d {
                    let k = (flat % side as usize) as i64 - radius;
                    flat /= side as usize;
                    acc += k * k;
                }
                acc
            })
            .collect();
        sq.sort_unstable();
        if sq.len() >= count && sq[count - 1] <= radius * radius {
            return sq[..count]
                .iter()
                .map(|&k2| 4.0 * PI * PI * k2 as f64)
                .collect();
        }
        radius *= 2;
    }
}

/// Real values on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.grid.flatten(idx)]
    }

    /// Value at `z − shift` with indices taken modulo `m`.
    fn shifted(&self, z: usize, shift: usize) -> f64 {
        let zi = self.grid.unflatten(z);
        let si = self.grid.unflatten(shift);
        let m = self.grid.m;
        let idx: Vec<usize> = zi.iter().zip(&si).map(|(a, b)| (a + m - b) % m).collect();
        self.at(&idx)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Writes a 2-D grid as `m` rows of `m` comma-separated values.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if self.grid.d != 2 {
            return Err(Error::invalid("grid CSV output is two-dimensional only"));
        }
        let mut out = String::new();
        for row in self.values.chunks_exact(self.grid.m) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// In-place multidimensional DFT without normalization.
fn fft_nd(data: &mut [Complex<f64>], grid: PeriodicGrid, direction: FftDirection) {
    let m = grid.m;
    let fft = FftPlanner::new().plan_fft(m, direction);
    let mut line = vec![Complex::new(0.0, 0.0); m];
    for axis in 0..grid.d {
        let stride = m.pow((grid.d - 1 - axis) as u32);
        let block = stride * m;
        for base in 0..data.len() {
            // base enumerates the lines: offset inside a block below `stride`
            if base % block >= stride {
                continue;
            }
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[base + k * stride];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                data[base + k * stride] = *v;
            }
        }
    }
}

/// `g(z) = Σ_{k≠0} λ_k^{-s} cos(2π k·z)` at every grid node.
pub fn fractional_green(spec: &ContinuumSpectrum, s: f64) -> Result<GridFunction> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!("exponent must be positive, got {s}")));
    }
    let mut data: Vec<Complex<f64>> = spec
        .eigenvalues
        .iter()
        .map(|&l| {
            let mult = if l > 0.0 { l.powf(-s) } else { 0.0 };
            Complex::new(mult, 0.0)
        })
        .collect();
    fft_nd(&mut data, spec.grid, FftDirection::Inverse);
    // multipliers are even, so the transform is real up to rounding
    let mut values: Vec<f64> = data.iter().map(|c| c.re).collect();
    symmetrize(&mut values, spec.grid);
    Ok(GridFunction {
        grid: spec.grid,
        values,
    })
}

/// Averages `g(z)` with `g(−z)` so evenness holds exactly.
fn symmetrize(values: &mut [f64], grid: PeriodicGrid) {
    let m = grid.m;
    for flat in 0..values.len() {
        let neg: Vec<usize> = grid.unflatten(flat).iter().map(|&p| (m - p) % m).collect();
        let other = grid.flatten(&neg);
        if other > flat {
            let avg = 0.5 * (values[flat] + values[other]);
            values[flat] = avg;
            values[other] = avg;
        }
    }
}

/// `E^(s)_∞(u) = Σ_k λ_k^s |û_k|²` with `û` the normalized DFT.
pub fn continuum_energy(spec: &ContinuumSpectrum, u: &GridFunction, s: f64) -> Result<f64> {
    if u.grid != spec.grid {
        return Err(Error::invalid("grid function and spectrum use different grids"));
    }
    let mut data: Vec<Complex<f64>> = u.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_nd(&mut data, spec.grid, FftDirection::Forward);
    let norm = spec.grid.len() as f64;
    Ok(data
        .iter()
        .zip(&spec.eigenvalues)
        .map(|(c, &l)| if l > 0.0 { l.powf(s) * c.norm_sqr() / (norm * norm) } else { 0.0 })
        .sum())
}

/// Constrained continuum minimizer on the grid.
#[derive(Debug, Clone)]
pub struct ContinuumSolution {
    pub u: GridFunction,
    /// Snapped node of each constraint, in input order.
    pub nodes: Vec<usize>,
    pub energy: f64,
}

pub fn solve_continuum_constrained(
    spec: &ContinuumSpectrum,
    constraints: &[(TorusPoint, f64)],
    s: f64,
) -> Result<ContinuumSolution> {
    if constraints.is_empty() {
        return Err(Error::invalid("at least one constraint is required"));
    }
    let grid = spec.grid;
    let mut nodes = Vec::with_capacity(constraints.len());
    for (i, (x, l)) in constraints.iter().enumerate() {
        if !l.is_finite() {
            return Err(Error::invalid("labels must be finite"));
        }
        let node = grid.snap(x)?;
        if let Some(first) = nodes.iter().position(|&z| z == node) {
            return Err(Error::SnapCollision { first, second: i });
        }
        nodes.push(node);
    }
    let mut green = fractional_green(spec, s)?;
    // g(0) is the maximum of a positive-definite kernel; rescaling only changes μ
    let peak = green.values[0];
    if !(peak > 0.0) {
        return Err(Error::Singular("degenerate Green function"));
    }
    for v in green.values.iter_mut() {
        *v /= peak;
    }

    let n = nodes.len();
    let gmat = DMatrix::from_fn(n, n, |i, j| green.shifted(nodes[i], nodes[j]));
    let ones = vec![1.0; n];
    let labels: Vec<f64> = constraints.iter().map(|c| c.1).collect();

    let synthesize = |mu: &[f64], c1: f64| -> Vec<f64> {
        (0..grid.len())
            .map(|z| c1 + nodes.iter().zip(mu).map(|(&zi, m)| m * green.shifted(z, zi)).sum::<f64>())
            .collect()
    };
    let (mu, c1) = solve_saddle(&gmat, &ones, &labels)?;
    let mut values = synthesize(&mu, c1);
    let residual: Vec<f64> = nodes.iter().zip(&labels).map(|(&z, l)| l - values[z]).collect();
    if residual.iter().any(|r| *r != 0.0) {
        let (dmu, dc1) = solve_saddle(&gmat, &ones, &residual)?;
        for (v, dv) in values.iter_mut().zip(synthesize(&dmu, dc1)) {
            *v += dv;
        }
    }
    let max_label = labels.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if nodes
        .iter()
        .zip(&labels)
        .any(|(&z, l)| (values[z] - l).abs() > CONSTRAINT_TOL * (1.0 + max_label))
    {
        return Err(Error::Singular("continuum saddle system too ill-conditioned"));
    }
    let u = GridFunction { grid, values };
    let energy = continuum_energy(spec, &u, s)?;
    Ok(ContinuumSolution { u, nodes, energy })
}

/// Dense `m^d × m^d` matrix of the periodic FD Laplacian (positive sign).
pub fn fd_laplacian_matrix(grid: PeriodicGrid) -> DMatrix<f64> {
    let n = grid.len();
    let h2 = grid.spacing().powi(2);
    let m = grid.m;
    let mut a = DMatrix::zeros(n, n);
    for z in 0..n {
        let idx = grid.unflatten(z);
        a[(z, z)] += 2.0 * grid.d as f64 / h2;
        for axis in 0..grid.d {
            for step in [1, m - 1] {
                let mut nb = idx.clone();
                nb[axis] = (nb[axis] + step) % m;
                a[(z, grid.flatten(&nb))] -= 1.0 / h2;
            }
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Bilinear,
    /// Tensor-product Catmull-Rom.
    Bicubic,
}

fn stencil(scheme: Interpolation, f: f64) -> ([f64; 4], i64) {
    match scheme {
        Interpolation::Bilinear => ([1.0 - f, f, 0.0, 0.0], 0),
        Interpolation::Bicubic => {
            let (f2, f3) = (f * f, f * f * f);
            (
                [
                    0.5 * (-f3 + 2.0 * f2 - f),
                    0.5 * (3.0 * f3 - 5.0 * f2 + 2.0),
                    0.5 * (-3.0 * f3 + 4.0 * f2 + f),
                    0.5 * (f3 - f2),
                ],
                -1,
            )
        }
    }
}

/// Periodic interpolation of `grid_fn` at every query point.
pub fn interpolate(grid_fn: &GridFunction, queries: &SampleSet, scheme: Interpolation) -> Result<Vec<f64>> {
    let grid = grid_fn.grid;
    if queries.dim() != grid.d {
        return Err(Error::DimensionMismatch {
            expected: grid.d,
            found: queries.dim(),
        });
    }
    if grid_fn.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("grid function has non-finite values"));
    }
    let m = grid.m as i64;
    let d = grid.d;
    let taps: usize = match scheme {
        Interpolation::Bilinear => 2,
        Interpolation::Bicubic => 4,
    };
    let combos = taps.pow(d as u32);
    let mut out = Vec::with_capacity(queries.len());
    let mut weights = vec![[0.0; 4]; d];
    let mut bases = vec![0i64; d];
    let mut idx = vec![0usize; d];
    for x in queries.points() {
        for a in 0..d {
            let mut t = x[a] * m as f64;
            let r = t.round();
            if (t - r).abs() <= 1e-12 * r.abs().max(1.0) {
                t = r;
            }
            let base = t.floor();
            let (w, offset) = stencil(scheme, t - base);
            weights[a] = w;
            bases[a] = base as i64 + offset;
        }
        let mut acc = 0.0;
        for combo in 0..combos {
            let mut c = combo;
            let mut w = 1.0;
            for a in (0..d).rev() {
                let tap = c % taps;
                c /= taps;
                w *= weights[a][tap];
                idx[a] = (bases[a] + tap as i64).rem_euclid(m) as usize;
            }
            if w != 0.0 {
                acc += w * grid_fn.at(&idx);
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// `‖u_n − u‖_{L²(μ_n)}`.
pub fn l2_mu_n_error(u_n: &[f64], u_at_nodes: &[f64]) -> Result<f64> {
    if u_n.len() != u_at_nodes.len() {
        return Err(Error::LengthMismatch {
            left: u_n.len(),
            right: u_at_nodes.len(),
        });
    }
    if u_n.is_empty() {
        return Err(Error::invalid("empty node function"));
    }
    let sq: f64 = u_n.iter().zip(u_at_nodes).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sq / u_n.len() as f64).sqrt())
}
