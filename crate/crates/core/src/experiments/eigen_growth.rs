//! Sup-norm growth of graph Laplacian eigenvectors at the connectivity radius.

use std::collections::BTreeMap;
use std::fmt;

use log::warn;
use rayon::prelude::*;

use super::transition::linear_fit;
use crate::continuum::analytic_torus_eigenvalues;
use crate::error::{Error, Result};
use crate::graph::{build_weight_matrix, connectivity_radius, graph_laplacian, Kernel};
use crate::spectral::eigendecompose;
use crate::torus::{derive_seed, sample_uniform};

/// Number of largest `n` used in the per-regime fits.
pub const DEFAULT_GROWTH_FIT_WINDOW: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenGrowthConfig {
    pub n_values: Vec<usize>,
    pub alpha: f64,
    pub reps: usize,
    pub base_seed: u64,
    pub d: usize,
    pub fit_window: usize,
}

impl EigenGrowthConfig {
    pub fn new(n_values: Vec<usize>, reps: usize, base_seed: u64) -> Self {
        EigenGrowthConfig {
            n_values,
            alpha: 4.0,
            reps,
            base_seed,
            d: 2,
            fit_window: DEFAULT_GROWTH_FIT_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::invalid("n_values must be nonempty with every n ≥ 2"));
        }
        let mut sorted = self.n_values.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("n_values contains duplicates"));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid("alpha must be positive"));
        }
        if self.d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if self.fit_window < 2 {
            return Err(Error::invalid("fit window must be at least 2"));
        }
        Ok(())
    }
}

/// The four rank cutoffs `α ε^{-d/4}`, `α ε^{-d/2}`, `α ε^{-d}` and `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    K1,
    K2,
    K3,
    K4,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::K1, Regime::K2, Regime::K3, Regime::K4];

    pub fn index(self) -> usize {
        match self {
            Regime::K1 => 1,
            Regime::K2 => 2,
            Regime::K3 => 3,
            Regime::K4 => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Regime> {
        Regime::ALL.get(i.wrapping_sub(1)).copied()
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Unclamped cutoff value for one regime.
pub fn raw_threshold(regime: Regime, eps: f64, alpha: f64, d: usize, n: usize) -> f64 {
    let d = d as f64;
    match regime {
        Regime::K1 => alpha * eps.powf(-d / 4.0),
        Regime::K2 => alpha * eps.powf(-d / 2.0),
        Regime::K3 => alpha * eps.powf(-d),
        Regime::K4 => n as f64,
    }
}

/// Cutoffs floored to integers and clamped to `[1, n]`.
pub fn thresholds(eps: f64, alpha: f64, d: usize, n: usize) -> [usize; 4] {
    Regime::ALL.map(|r| {
        let raw = raw_threshold(r, eps, alpha, d, n);
        if raw > n as f64 {
            warn!("k^({r}) = {raw} exceeds n = {n}; clamped");
            n
        } else {
            (raw.floor() as usize).max(1)
        }
    })
}

/// 1-based rank of the largest value among the first `k` (lowest rank on ties).
pub fn k_star(sup_norms: &[f64], k: usize) -> usize {
    let k = k.clamp(1, sup_norms.len());
    let mut best = 0;
    for i in 1..k {
        if sup_norms[i] > sup_norms[best] {
            best = i;
        }
    }
    best + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenGrowthRow {
    pub n: usize,
    pub rep: usize,
    pub eps_conn: f64,
    pub regime: Regime,
    /// Shared by all reps at this `n`.
    pub k_star: usize,
    /// Continuum eigenvalue at rank `k_star`.
    pub lambda_kstar: f64,
    pub lambda_discrete: f64,
    /// Sup norm of the unit-Euclidean eigenvector at rank `k_star`.
    pub psi_inf_norm: f64,
}

struct Instance {
    eps: f64,
    sup: Vec<f64>,
    eigenvalues: Vec<f64>,
}

fn growth_instance(cfg: &EigenGrowthConfig, n: usize, rep: usize) -> Result<Instance> {
    let seed = derive_seed(cfg.base_seed, &[n as u64, rep as u64]);
    let points = sample_uniform(n, cfg.d, seed)?;
    let kernel = Kernel::indicator();
    let eps = connectivity_radius(&points, &kernel, 1e-12)?;
    let graph = build_weight_matrix(&points, eps, &kernel)?;
    let spec = eigendecompose(&graph_laplacian(&graph))?;
    // columns are unit in L²(μ_n); rescale to unit Euclidean length
    let scale = (n as f64).sqrt().recip();
    let sup = (0..n)
        .map(|k| scale * spec.eigenvector(k).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    Ok(Instance {
        eps,
        sup,
        eigenvalues: spec.eigenvalues().to_vec(),
    })
}

/// Rows for every `(n, rep, regime)`, sorted in that order.
///
/// Per `n`, `ln ‖ψ_k‖_∞` is averaged over reps for every rank and `k*` is the
/// argmax of that averaged curve below each cutoff; cutoffs use the mean
/// connectivity radius.
pub fn eigen_growth_experiment(cfg: &EigenGrowthConfig) -> Result<Vec<EigenGrowthRow>> {
    cfg.validate()?;
    let max_n = *cfg.n_values.iter().max().expect("nonempty");
    let analytic = analytic_torus_eigenvalues(cfg.d, max_n);
    let jobs: Vec<(usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |rep| (n, rep)))
        .collect();
    let instances = jobs
        .par_iter()
        .map(|&(n, rep)| growth_instance(cfg, n, rep))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (chunk, n) in instances.chunks(cfg.reps).zip(&cfg.n_values) {
        let n = *n;
        let reps = chunk.len() as f64;
        let mean_eps = chunk.iter().map(|i| i.eps).sum::<f64>() / reps;
        let mean_log_sup: Vec<f64> = (0..n)
            .map(|k| chunk.iter().map(|i| i.sup[k].ln()).sum::<f64>() / reps)
            .collect();
        let cut = thresholds(mean_eps, cfg.alpha, cfg.d, n);
        for (&regime, k) in Regime::ALL.iter().zip(cut) {
            let ks = k_star(&mean_log_sup, k);
            for (rep, inst) in chunk.iter().enumerate() {
                rows.push(EigenGrowthRow {
                    n,
                    rep,
                    eps_conn: inst.eps,
                    regime,
                    k_star: ks,
                    lambda_kstar: analytic[ks - 1],
                    lambda_discrete: inst.eigenvalues[ks - 1],
                    psi_inf_norm: inst.sup[ks - 1],
                });
            }
        }
    }
    rows.sort_by_key(|r| (r.n, r.rep, r.regime));
    Ok(rows)
}

/// `mean ln ‖ψ‖_∞ ≈ intercept + slope · mean ln λ` for one regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub regime: Regime,
    pub intercept: f64,
    pub slope: f64,
    pub points: usize,
}

/// Per-regime fits over the largest `fit_window` sizes. Rows whose `k*` is
/// the constant mode (λ = 0) carry no log information and are skipped, and
/// so is a regime whose `λ_{k*}` does not vary with `n`. Errors only when no
/// regime can be fitted.
pub fn fit_growth(rows: &[EigenGrowthRow], fit_window: usize) -> Result<Vec<GrowthFit>> {
    let mut fits = Vec::new();
    for regime in Regime::ALL {
        let mut by_n: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.regime == regime) {
            if !(r.lambda_kstar > 0.0) {
                warn!("n={} rep={} regime {regime}: k* is the constant mode; skipped", r.n, r.rep);
                continue;
            }
            let e = by_n.entry(r.n).or_insert((0.0, 0.0, 0));
            e.0 += r.lambda_kstar.ln();
            e.1 += r.psi_inf_norm.ln();
            e.2 += 1;
        }
        let means: Vec<(f64, f64)> = by_n
            .values()
            .map(|&(l, p, c)| (l / c as f64, p / c as f64))
            .collect();
        let start = means.len().saturating_sub(fit_window);
        let window = &means[start..];
        let xs: Vec<f64> = window.iter().map(|m| m.0).collect();
        let ys: Vec<f64> = window.iter().map(|m| m.1).collect();
        let (intercept, slope) = match linear_fit(&xs, &ys) {
            Ok(f) => f,
            Err(e) => {
                warn!("regime {regime}: no fit ({e})");
                continue;
            }
        };
        fits.push(GrowthFit {
            regime,
            intercept,
            slope,
            points: window.len(),
        });
    }
    if fits.is_empty() {
        return Err(Error::invalid("no regime could be fitted"));
    }
    Ok(fits)
}
