//! Command-line entry point.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand};
use log::{info, warn};

use super::cache::{read_cache, write_cache, CacheHeader};
use super::config::{
    sibling_manifest, ContinuumParams, EigensParams, ManifestInfo, RunConfig, SolveParams, SweepParams, TlpParams,
};
use super::records::{
    read_labeled_points, write_growth_fits, write_growth_rows, write_node_values, write_records,
    write_transition_fits, write_transitions,
};
use crate::continuum::{continuum_spectrum, solve_continuum_constrained, PeriodicGrid};
use crate::error::{Error, Result};
use crate::experiments::{detect_transitions, eigen_growth_experiment, fit_growth, fit_transitions, run_sweep};
use crate::graph::{build_weight_matrix, component_count, graph_laplacian, is_connected, Kernel};
use crate::spectral::{eigendecompose, SpectralDecomposition};
use crate::ssl::{solve_constrained, ConstraintSet};
use crate::tlp::{tl2_distance, EmpiricalPair};
use crate::torus::{load_points, sample_uniform, SampleSet, TorusPoint};

pub const THREADS_ENV: &str = "FRACLAP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fraclap", version, about = "Fractional graph Laplacian regression on the flat torus")]
struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One graph, one constrained solve; writes node values
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: SolveParams,
    },
    /// Grid reference solve; writes the grid as CSV
    Continuum {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: ContinuumParams,
    },
    /// Error sweep over (n, ε) with transition detection and fits
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: SweepParams,
    },
    /// Eigenvector sup-norm growth at the connectivity radius
    Eigens {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: EigensParams,
    },
    /// TL² distance between two point/value CSVs
    Tlp {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: TlpParams,
    },
}

fn load_config(path: Option<&Path>, command: &str) -> Result<RunConfig> {
    match path {
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            cfg.check_command(command)?;
            Ok(cfg)
        }
        None => Ok(RunConfig::default()),
    }
}

fn manifest_header(command: &str, seed: Option<u64>) -> Option<ManifestInfo> {
    Some(ManifestInfo {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
    })
}

fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        // 0 lets rayon pick the machine parallelism
        Err(_) => Ok(0),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 success, 1 usage or input error, 2 numerical failure.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let result = thread_count().and_then(|threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| dispatch(cli.command))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Solve { config, params } => cmd_solve(config.as_deref(), params),
        Command::Continuum { config, params } => cmd_continuum(config.as_deref(), params),
        Command::Sweep { config, params } => cmd_sweep(config.as_deref(), params),
        Command::Eigens { config, params } => cmd_eigens(config.as_deref(), params),
        Command::Tlp { config, params } => cmd_tlp(config.as_deref(), params),
    }
}

fn label_nodes(labels: &[(TorusPoint, f64)]) -> Result<(SampleSet, ConstraintSet)> {
    let pts = SampleSet::from_points(&labels.iter().map(|l| l.0.clone()).collect::<Vec<_>>())?;
    let cons = ConstraintSet::new(labels.iter().enumerate().map(|(i, l)| (i, l.1)).collect())?;
    Ok((pts, cons))
}

fn cmd_solve(config: Option<&Path>, mut params: SolveParams) -> Result<()> {
    if let Some(file) = load_config(config, "solve")?.solve {
        params.overlay(file);
    }
    let st = params.resolve()?;
    RunConfig {
        manifest: manifest_header("solve", Some(st.seed)),
        solve: Some(params),
        ..Default::default()
    }
    .save(sibling_manifest(&st.out))?;

    let (label_pts, constraints) = label_nodes(&st.labels)?;
    let free = match (&st.points, st.n) {
        (Some(p), _) => load_points(p, st.d)?,
        (None, Some(n)) => sample_uniform(n - st.labels.len(), st.d, st.seed)?,
        (None, None) => unreachable!("resolve requires n or points"),
    };
    let points = label_pts.concat(&free)?;
    let kernel = Kernel::indicator();
    let graph = build_weight_matrix(&points, st.eps, &kernel)?;
    if !is_connected(&graph) {
        return Err(Error::Disconnected(component_count(&graph)));
    }
    let header = CacheHeader {
        n: points.len() as u32,
        d: st.d as u32,
        eps: st.eps,
        kernel_tag: kernel.kind().tag(),
        seed: st.seed,
    };
    let spec = cached_decomposition(st.cache.as_deref(), &header, || eigendecompose(&graph_laplacian(&graph)))?;
    let u = solve_constrained(&spec, &constraints, st.s)?;
    info!("energy {}", u.energy);
    write_node_values(&points, &u.values, "u", &st.out)
}

fn cached_decomposition(
    path: Option<&Path>,
    header: &CacheHeader,
    compute: impl FnOnce() -> Result<SpectralDecomposition>,
) -> Result<SpectralDecomposition> {
    let Some(path) = path else {
        return compute();
    };
    if path.exists() {
        let (found, spec) = read_cache(path)?;
        if !found.matches(header) {
            return Err(Error::Cache(format!(
                "{} was written for {found:?}, this run needs {header:?}",
                path.display()
            )));
        }
        info!("loaded eigendecomposition from {}", path.display());
        return Ok(spec);
    }
    let spec = compute()?;
    write_cache(path, header, &spec)?;
    Ok(spec)
}

fn cmd_continuum(config: Option<&Path>, mut params: ContinuumParams) -> Result<()> {
    if let Some(file) = load_config(config, "continuum")?.continuum {
        params.overlay(file);
    }
    let st = params.resolve()?;
    RunConfig {
        manifest: manifest_header("continuum", None),
        continuum: Some(params),
        ..Default::default()
    }
    .save(sibling_manifest(&st.out))?;
    let grid = PeriodicGrid::new(st.m, 2)?;
    let spec = continuum_spectrum(grid, st.variant);
    let sol = solve_continuum_constrained(&spec, &st.labels, st.s)?;
    info!("energy {}", sol.energy);
    sol.u.write_csv(&st.out)
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cmd_sweep(config: Option<&Path>, mut params: SweepParams) -> Result<()> {
    if let Some(file) = load_config(config, "sweep")?.sweep {
        params.overlay(file);
    }
    let st = params.resolve()?;
    prepare_out_dir(&st.out_dir)?;
    RunConfig {
        manifest: manifest_header("sweep", Some(st.sweep.base_seed)),
        sweep: Some(params),
        ..Default::default()
    }
    .save(st.out_dir.join("manifest.toml"))?;

    let records = run_sweep(&st.sweep)?;
    write_records(&records, st.out_dir.join("records.csv"))?;
    if !records.iter().any(|r| r.connected) {
        return Err(Error::NoConnectedInstances);
    }
    let (transitions, _) = detect_transitions(&records, st.bandwidth_factor);
    write_transitions(&transitions, st.out_dir.join("transitions.csv"))?;
    let fits = match fit_transitions(&transitions, st.fit_window) {
        Ok((hat, star, ns)) => {
            println!("eps_hat  ~ {:.4} / n^{:.4}", hat.coefficient, hat.exponent);
            println!("eps_star ~ {:.4} / n^{:.4}", star.coefficient, star.exponent);
            (vec![("eps_hat", hat), ("eps_star", star)], ns)
        }
        Err(e) => {
            warn!("no transition fit: {e}");
            (Vec::new(), Vec::new())
        }
    };
    write_transition_fits(&fits.0, &fits.1, st.out_dir.join("fits.csv"))
}

fn cmd_eigens(config: Option<&Path>, mut params: EigensParams) -> Result<()> {
    if let Some(file) = load_config(config, "eigens")?.eigens {
        params.overlay(file);
    }
    let st = params.resolve()?;
    prepare_out_dir(&st.out_dir)?;
    RunConfig {
        manifest: manifest_header("eigens", Some(st.growth.base_seed)),
        eigens: Some(params),
        ..Default::default()
    }
    .save(st.out_dir.join("manifest.toml"))?;

    let rows = eigen_growth_experiment(&st.growth)?;
    write_growth_rows(&rows, st.out_dir.join("eigen_growth.csv"))?;
    let fits = match fit_growth(&rows, st.growth.fit_window) {
        Ok(f) => {
            for g in &f {
                println!("regime {}: ln psi ~ {:.4} + {:.4} ln lambda", g.regime, g.intercept, g.slope);
            }
            f
        }
        Err(e) => {
            warn!("no growth fit: {e}");
            Vec::new()
        }
    };
    write_growth_fits(&fits, st.out_dir.join("growth_fits.csv"))
}

fn cmd_tlp(config: Option<&Path>, mut params: TlpParams) -> Result<()> {
    if let Some(file) = load_config(config, "tlp")?.tlp {
        params.overlay(file);
    }
    let (a, b, out) = params.resolve()?;
    if let Some(o) = &out {
        RunConfig {
            manifest: manifest_header("tlp", None),
            tlp: Some(params.clone()),
            ..Default::default()
        }
        .save(sibling_manifest(o))?;
    }
    let (pa, va) = read_labeled_points(&a)?;
    let (pb, vb) = read_labeled_points(&b)?;
    let dist = tl2_distance(&EmpiricalPair::new(pa, va)?, &EmpiricalPair::new(pb, vb)?)?;
    println!("{dist}");
    if let Some(o) = out {
        std::fs::write(&o, format!("tl2\n{dist}\n")).map_err(|e| Error::io(&o, e))?;
    }
    Ok(())
}
