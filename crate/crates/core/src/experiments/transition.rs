//! Transition detection on averaged error curves and log-log power-law fits.

use std::collections::BTreeMap;

use log::{info, warn};

use super::sweep::{run_sweep, SweepConfig, SweepRecord};
use crate::error::{Error, Result};

/// Default smoothing bandwidth as a multiple of the median grid spacing.
pub const DEFAULT_BANDWIDTH_FACTOR: f64 = 3.0;
/// Number of largest `n` used in the transition fits.
pub const DEFAULT_FIT_WINDOW: usize = 5;

fn check_grid(xs: &[f64], ys: &[f64], min_len: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < min_len {
        return Err(Error::invalid(format!("need at least {min_len} points, got {}", xs.len())));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("abscissae must be strictly increasing"));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("ordinates must be finite"));
    }
    Ok(())
}

/// Median of consecutive differences of a strictly increasing grid.
pub fn median_spacing(xs: &[f64]) -> f64 {
    let mut gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let m = gaps.len();
    if m % 2 == 1 {
        gaps[m / 2]
    } else {
        0.5 * (gaps[m / 2 - 1] + gaps[m / 2])
    }
}

/// Nadaraya–Watson smoother with a Gaussian kernel of the given bandwidth.
pub fn smooth_curve(xs: &[f64], ys: &[f64], bandwidth: f64) -> Result<Vec<f64>> {
    check_grid(xs, ys, 5)?;
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    Ok(xs
        .iter()
        .map(|&x0| {
            let (mut num, mut den) = (0.0, 0.0);
            for (&x, &y) in xs.iter().zip(ys) {
                let t = (x - x0) / bandwidth;
                let w = (-0.5 * t * t).exp();
                num += w * y;
                den += w;
            }
            num / den
        })
        .collect())
}

/// Location of the well-posed → ill-posed crossover on one curve, in ε units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub eps_argmin: f64,
    /// Maximizer of the first derivative above the minimizer.
    pub eps_hat: f64,
    /// Minimizer of the second derivative above the minimizer.
    pub eps_star: f64,
}

/// Finds `(ε̂, ε*, argmin)` on a smoothed curve over `xs = log ε`.
///
/// Derivatives are central differences; the two boundary points never
/// qualify as `ε̂` or `ε*`.
pub fn detect_transition(xs: &[f64], smoothed: &[f64]) -> Result<Transition> {
    check_grid(xs, smoothed, 7)?;
    let len = xs.len();
    let argmin = (0..len)
        .min_by(|&a, &b| smoothed[a].total_cmp(&smoothed[b]).then(a.cmp(&b)))
        .expect("nonempty");
    let first = |i: usize| (smoothed[i + 1] - smoothed[i - 1]) / (xs[i + 1] - xs[i - 1]);
    let second = |i: usize| {
        let right = (smoothed[i + 1] - smoothed[i]) / (xs[i + 1] - xs[i]);
        let left = (smoothed[i] - smoothed[i - 1]) / (xs[i] - xs[i - 1]);
        2.0 * (right - left) / (xs[i + 1] - xs[i - 1])
    };
    let window = (argmin + 1).max(1)..len - 1;
    if window.is_empty() {
        return Err(Error::NoShoulder);
    }
    let hat = window
        .clone()
        .max_by(|&a, &b| first(a).total_cmp(&first(b)).then(b.cmp(&a)))
        .expect("nonempty window");
    let star = window
        .min_by(|&a, &b| second(a).total_cmp(&second(b)).then(a.cmp(&b)))
        .expect("nonempty window");
    Ok(Transition {
        eps_argmin: xs[argmin].exp(),
        eps_hat: xs[hat].exp(),
        eps_star: xs[star].exp(),
    })
}

/// Ordinary least squares `y = intercept + slope · x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let m = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::invalid("need at least two points to fit"));
    }
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("degenerate design: all abscissae equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// `ε ≈ coefficient / n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Least squares on `(log n, log ε)`.
pub fn loglog_fit(ns: &[f64], eps_values: &[f64]) -> Result<PowerLawFit> {
    if ns.iter().chain(eps_values).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ly: Vec<f64> = eps_values.iter().map(|e| e.ln()).collect();
    let (intercept, slope) = linear_fit(&lx, &ly)?;
    Ok(PowerLawFit {
        coefficient: intercept.exp(),
        exponent: -slope,
    })
}

/// Mean error per ε for one `n`, over the reps where it is available.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedCurve {
    pub n: usize,
    pub eps: Vec<f64>,
    pub mean_err: Vec<f64>,
    pub used: Vec<usize>,
}

/// Groups records by `n`, averaging `err` over reps at each ε. ε values with
/// no usable rep are dropped.
pub fn average_curves(records: &[SweepRecord]) -> Vec<AveragedCurve> {
    let mut by_n: BTreeMap<usize, BTreeMap<u64, (f64, f64, usize, usize)>> = BTreeMap::new();
    for r in records {
        // positive floats order like their bit patterns
        let slot = by_n
            .entry(r.n)
            .or_default()
            .entry(r.eps.to_bits())
            .or_insert((r.eps, 0.0, 0, 0));
        match r.err {
            Some(e) => {
                slot.1 += e;
                slot.2 += 1;
            }
            None => slot.3 += 1,
        }
    }
    by_n.into_iter()
        .map(|(n, cells)| {
            let mut curve = AveragedCurve {
                n,
                eps: Vec::new(),
                mean_err: Vec::new(),
                used: Vec::new(),
            };
            for (eps, sum, used, skipped) in cells.into_values() {
                if skipped > 0 {
                    info!("n={n} eps={eps}: {skipped} rep(s) excluded from the average");
                }
                if used > 0 {
                    curve.eps.push(eps);
                    curve.mean_err.push(sum / used as f64);
                    curve.used.push(used);
                }
            }
            curve
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionResult {
    pub n: usize,
    pub eps_argmin: f64,
    pub eps_hat: f64,
    pub eps_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub bandwidth_factor: f64,
    pub fit_window: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            bandwidth_factor: DEFAULT_BANDWIDTH_FACTOR,
            fit_window: DEFAULT_FIT_WINDOW,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransitionStudy {
    pub transitions: Vec<TransitionResult>,
    /// `(n, reason)` for curves whose detection failed.
    pub failures: Vec<(usize, String)>,
    pub hat_fit: PowerLawFit,
    pub star_fit: PowerLawFit,
    /// The `n` values entering the fits.
    pub fit_ns: Vec<usize>,
}

/// Smoothed curve over `log ε` for one averaged curve.
pub fn smooth_averaged(curve: &AveragedCurve, bandwidth_factor: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let xs: Vec<f64> = curve.eps.iter().map(|e| e.ln()).collect();
    if xs.len() < 5 {
        return Err(Error::invalid(format!(
            "n={}: only {} usable eps values",
            curve.n,
            xs.len()
        )));
    }
    let bw = bandwidth_factor * median_spacing(&xs);
    let ys = smooth_curve(&xs, &curve.mean_err, bw)?;
    Ok((xs, ys))
}

/// Average → smooth → detect per `n`, then fit `ε̂_n` and `ε*_n` against `n`
/// over the largest `fit_window` usable sizes.
pub fn analyze_sweep(records: &[SweepRecord], opts: &AnalysisOptions) -> Result<TransitionStudy> {
    let (transitions, failures) = detect_transitions(records, opts.bandwidth_factor);
    let (hat_fit, star_fit, fit_ns) = fit_transitions(&transitions, opts.fit_window)?;
    Ok(TransitionStudy {
        transitions,
        failures,
        hat_fit,
        star_fit,
        fit_ns,
    })
}

/// Per-`n` detection; failures are logged and returned alongside.
pub fn detect_transitions(
    records: &[SweepRecord],
    bandwidth_factor: f64,
) -> (Vec<TransitionResult>, Vec<(usize, String)>) {
    let mut transitions = Vec::new();
    let mut failures = Vec::new();
    for curve in average_curves(records) {
        let detected = smooth_averaged(&curve, bandwidth_factor).and_then(|(xs, ys)| detect_transition(&xs, &ys));
        match detected {
            Ok(t) => transitions.push(TransitionResult {
                n: curve.n,
                eps_argmin: t.eps_argmin,
                eps_hat: t.eps_hat,
                eps_star: t.eps_star,
            }),
            Err(e) => {
                warn!("n={}: transition detection failed: {e}; excluded from fit", curve.n);
                failures.push((curve.n, e.to_string()));
            }
        }
    }
    (transitions, failures)
}

/// Fits `ε̂_n` and `ε*_n` over the largest `fit_window` sizes. Returns the
/// two fits and the `n` values used.
pub fn fit_transitions(
    transitions: &[TransitionResult],
    fit_window: usize,
) -> Result<(PowerLawFit, PowerLawFit, Vec<usize>)> {
    if transitions.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 usable n for the fit, got {}",
            transitions.len()
        )));
    }
    if transitions.len() < fit_window {
        warn!(
            "only {} usable n (< {fit_window}); fitting over all of them",
            transitions.len()
        );
    }
    let start = transitions.len().saturating_sub(fit_window.max(2));
    let window = &transitions[start..];
    let ns: Vec<f64> = window.iter().map(|t| t.n as f64).collect();
    let hat: Vec<f64> = window.iter().map(|t| t.eps_hat).collect();
    let star: Vec<f64> = window.iter().map(|t| t.eps_star).collect();
    Ok((
        loglog_fit(&ns, &hat)?,
        loglog_fit(&ns, &star)?,
        window.iter().map(|t| t.n).collect(),
    ))
}

/// Full pipeline: sweep, then analysis with default options.
pub fn transition_study(cfg: &SweepConfig) -> Result<(Vec<SweepRecord>, TransitionStudy)> {
    let records = run_sweep(cfg)?;
    let study = analyze_sweep(&records, &AnalysisOptions::default())?;
    Ok((records, study))
}
