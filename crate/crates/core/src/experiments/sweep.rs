//! `(n, ε)` error sweeps against the continuum reference.

use log::{debug, warn};
use rayon::prelude::*;

use crate::continuum::{
    continuum_spectrum, interpolate, l2_mu_n_error, solve_continuum_constrained, ContinuumSolution,
    Interpolation, PeriodicGrid, SpectrumVariant,
};
use crate::error::{Error, Result};
use crate::graph::{build_weight_matrix, connectivity_radius, graph_laplacian, is_connected, Kernel};
use crate::spectral::eigendecompose;
use crate::ssl::{solve_constrained, ConstraintSet};
use crate::torus::{derive_seed, sample_uniform, SampleSet, TorusPoint};

/// How the ε values for each `n` are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsRule {
    Explicit(Vec<f64>),
    /// `count` log-spaced values from `c_lo · r̄_n` to `c_hi · n^{-1/(2s)}`,
    /// `r̄_n` being the mean connectivity radius over the reps at that `n`.
    Geometric { c_lo: f64, c_hi: f64, count: usize },
}

impl Default for EpsRule {
    fn default() -> Self {
        EpsRule::Geometric {
            c_lo: 1.05,
            c_hi: 3.0,
            count: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub d: usize,
    pub s: f64,
    pub eps_rule: EpsRule,
    pub reps: usize,
    pub base_seed: u64,
    /// Fixed labeled locations, placed as the first nodes of every sample.
    pub labels: Vec<(TorusPoint, f64)>,
    pub grid_m: usize,
    pub interpolation: Interpolation,
    pub kernel: Kernel,
}

impl SweepConfig {
    /// Two labels at (0.1,0.1)→0 and (0.9,0.9)→1, s = 16, m = 100.
    pub fn reference(n_values: Vec<usize>, reps: usize, base_seed: u64) -> Self {
        SweepConfig {
            n_values,
            d: 2,
            s: 16.0,
            eps_rule: EpsRule::default(),
            reps,
            base_seed,
            labels: reference_labels(),
            grid_m: 100,
            interpolation: Interpolation::Bicubic,
            kernel: Kernel::indicator(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::invalid("n_values is empty"));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::invalid("s must be positive"));
        }
        if self.labels.is_empty() {
            return Err(Error::invalid("at least one label is required"));
        }
        if self.labels.iter().any(|(p, l)| p.dim() != self.d || !l.is_finite()) {
            return Err(Error::invalid("labels must match the dimension and be finite"));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n <= self.labels.len()) {
            return Err(Error::invalid(format!("n = {n} leaves no unlabeled nodes")));
        }
        match &self.eps_rule {
            EpsRule::Explicit(v) => {
                if v.is_empty() || v.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
                    return Err(Error::invalid("explicit eps values must be positive"));
                }
            }
            EpsRule::Geometric { c_lo, c_hi, count } => {
                if !(*c_lo > 0.0) || !(*c_hi > 0.0) || *count < 2 {
                    return Err(Error::invalid("geometric eps rule needs c_lo, c_hi > 0 and count ≥ 2"));
                }
            }
        }
        PeriodicGrid::new(self.grid_m, self.d)?;
        Ok(())
    }

    fn label_set(&self) -> Result<SampleSet> {
        SampleSet::from_points(&self.labels.iter().map(|l| l.0.clone()).collect::<Vec<_>>())
    }

    fn constraints(&self) -> Result<ConstraintSet> {
        ConstraintSet::new(self.labels.iter().enumerate().map(|(i, l)| (i, l.1)).collect())
    }
}

pub fn reference_labels() -> Vec<(TorusPoint, f64)> {
    vec![
        (TorusPoint::new(vec![0.1, 0.1]).expect("valid point"), 0.0),
        (TorusPoint::new(vec![0.9, 0.9]).expect("valid point"), 1.0),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub n: usize,
    pub eps: f64,
    pub rep: usize,
    pub seed: u64,
    pub connected: bool,
    /// `None` when disconnected or when the solve failed.
    pub err: Option<f64>,
    pub energy: Option<f64>,
}

/// Deterministic `(n, eps, rep)` ordering; `eps` compares by value.
pub fn sort_records(records: &mut [SweepRecord]) {
    records.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.eps.total_cmp(&b.eps))
            .then(a.rep.cmp(&b.rep))
    });
}

/// Seed of repetition `rep` at sample size `n`.
pub fn job_seed(base_seed: u64, n: usize, rep: usize) -> u64 {
    derive_seed(base_seed, &[n as u64, rep as u64])
}

/// Labeled points followed by `n − N` uniform samples.
pub fn sample_with_labels(cfg: &SweepConfig, n: usize, rep: usize) -> Result<SampleSet> {
    let seed = job_seed(cfg.base_seed, n, rep);
    let labels = cfg.label_set()?;
    let random = sample_uniform(n - labels.len(), cfg.d, seed)?;
    labels.concat(&random)
}

/// `count` log-spaced values from `lo` to `hi`, endpoints included.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || count < 2 {
        return Err(Error::invalid(format!(
            "geometric grid needs 0 < lo < hi and count ≥ 2 (lo={lo}, hi={hi})"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect())
}

/// The ε values used for sample size `n`.
pub fn eps_grid(cfg: &SweepConfig, n: usize) -> Result<Vec<f64>> {
    match &cfg.eps_rule {
        EpsRule::Explicit(v) => {
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            v.dedup();
            Ok(v)
        }
        EpsRule::Geometric { c_lo, c_hi, count } => {
            let radii = (0..cfg.reps)
                .into_par_iter()
                .map(|rep| {
                    let pts = sample_with_labels(cfg, n, rep)?;
                    connectivity_radius(&pts, &cfg.kernel, 1e-12)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = radii.iter().sum::<f64>() / radii.len() as f64;
            let hi = c_hi * (n as f64).powf(-1.0 / (2.0 * cfg.s));
            geometric_grid(c_lo * mean, hi, *count)
        }
    }
}

/// Continuum minimizer for the configured labels on the FD grid.
pub fn continuum_reference(cfg: &SweepConfig) -> Result<ContinuumSolution> {
    let grid = PeriodicGrid::new(cfg.grid_m, cfg.d)?;
    let spec = continuum_spectrum(grid, SpectrumVariant::FiniteDifference);
    solve_continuum_constrained(&spec, &cfg.labels, cfg.s)
}

fn run_job(
    cfg: &SweepConfig,
    reference: &ContinuumSolution,
    constraints: &ConstraintSet,
    n: usize,
    rep: usize,
    eps_values: &[f64],
) -> Result<Vec<SweepRecord>> {
    let seed = job_seed(cfg.base_seed, n, rep);
    let points = sample_with_labels(cfg, n, rep)?;
    let target = interpolate(&reference.u, &points, cfg.interpolation)?;
    let mut out = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        let mut rec = SweepRecord {
            n,
            eps,
            rep,
            seed,
            connected: false,
            err: None,
            energy: None,
        };
        let graph = build_weight_matrix(&points, eps, &cfg.kernel)?;
        if is_connected(&graph) {
            rec.connected = true;
            let solved = eigendecompose(&graph_laplacian(&graph))
                .and_then(|spec| solve_constrained(&spec, constraints, cfg.s))
                .and_then(|u| Ok((l2_mu_n_error(&u.values, &target)?, u.energy)));
            match solved {
                Ok((err, energy)) => {
                    rec.err = Some(err);
                    rec.energy = Some(energy);
                }
                Err(e) => warn!("n={n} rep={rep} eps={eps}: {e}"),
            }
        }
        out.push(rec);
    }
    debug!("finished n={n} rep={rep}");
    Ok(out)
}

/// Runs every `(n, rep, ε)` combination. Output is sorted by `(n, ε, rep)`
/// and independent of thread scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let reference = continuum_reference(cfg)?;
    let constraints = cfg.constraints()?;
    let grids = cfg
        .n_values
        .iter()
        .map(|&n| eps_grid(cfg, n).map(|g| (n, g)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize, &[f64])> = grids
        .iter()
        .flat_map(|(n, g)| (0..cfg.reps).map(move |rep| (*n, rep, g.as_slice())))
        .collect();
    let chunks = jobs
        .par_iter()
        .map(|&(n, rep, eps)| run_job(cfg, &reference, &constraints, n, rep, eps))
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<SweepRecord> = chunks.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(0.1, 1.0, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[4] - 1.0).abs() < 1e-15);
        assert!((g[2] - 0.1f64.sqrt()).abs() < 1e-14);
        assert!(geometric_grid(1.0, 0.5, 5).is_err());
    }

    #[test]
    fn labels_come_first() {
        let cfg = SweepConfig::reference(vec![20], 1, 3);
        let pts = sample_with_labels(&cfg, 20, 0).unwrap();
        assert_eq!(pts.len(), 20);
        assert_eq!(pts.point(0), &[0.1, 0.1]);
        assert_eq!(pts.point(1), &[0.9, 0.9]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SweepConfig::reference(vec![2], 1, 0);
        assert!(cfg.validate().is_err());
        cfg.n_values = vec![10];
        cfg.reps = 0;
        assert!(cfg.validate().is_err());
        cfg.reps = 1;
        cfg.eps_rule = EpsRule::Explicit(vec![0.1, -0.2]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn small_sweep_is_deterministic_and_flags_disconnection() {
        let mut cfg = SweepConfig::reference(vec![50], 2, 11);
        cfg.s = 2.0;
        cfg.grid_m = 32;
        cfg.eps_rule = EpsRule::Explicit(vec![0.01, 0.4]);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert!(a[..2].iter().all(|r| !r.connected && r.err.is_none()));
        assert!(a[2..].iter().all(|r| r.connected && r.err.unwrap() >= 0.0));
        assert_eq!((a[2].rep, a[3].rep), (0, 1));
    }
}
