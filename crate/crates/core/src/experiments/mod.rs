//! Experiment drivers: transition sweeps and eigenvector growth.

pub mod eigen_growth;
pub mod sweep;
pub mod transition;

pub use eigen_growth::{
    eigen_growth_experiment, fit_growth, k_star, raw_threshold, thresholds, EigenGrowthConfig, EigenGrowthRow,
    GrowthFit, Regime,
};
pub use sweep::{
    continuum_reference, eps_grid, geometric_grid, job_seed, reference_labels, run_sweep, sample_with_labels,
    sort_records, EpsRule, SweepConfig, SweepRecord,
};
pub use transition::{
    analyze_sweep, average_curves, detect_transition, detect_transitions, fit_transitions, linear_fit, loglog_fit, median_spacing, smooth_curve,
    transition_study, AnalysisOptions, AveragedCurve, PowerLawFit, Transition, TransitionResult, TransitionStudy,
};
