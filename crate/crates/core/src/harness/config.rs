//! Run configuration: one TOML file with a table per subcommand, plus flag
//! overrides. Resolved configurations double as run manifests.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::continuum::{Interpolation, SpectrumVariant};
use crate::error::{Error, Result};
use crate::experiments::{reference_labels, EigenGrowthConfig, EpsRule, SweepConfig};
use crate::graph::Kernel;
use crate::torus::TorusPoint;

use super::records::read_labeled_points;

/// Provenance table written at the top of every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub command: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuum: Option<ContinuumParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigens: Option<EigensParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tlp: Option<TlpParams>,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    /// Rejects manifests written by a different subcommand.
    pub fn check_command(&self, command: &str) -> Result<()> {
        match &self.manifest {
            Some(m) if m.command != command => Err(Error::Config(format!(
                "manifest was written by `{}`, not `{command}`",
                m.command
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Fd,
    Analytic,
}

impl From<VariantArg> for SpectrumVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Fd => SpectrumVariant::FiniteDifference,
            VariantArg::Analytic => SpectrumVariant::Analytic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationArg {
    Bilinear,
    Bicubic,
}

impl From<InterpolationArg> for Interpolation {
    fn from(v: InterpolationArg) -> Self {
        match v {
            InterpolationArg::Bilinear => Interpolation::Bilinear,
            InterpolationArg::Bicubic => Interpolation::Bicubic,
        }
    }
}

// Flags win over file values.
macro_rules! overlay {
    ($flags:expr, $file:expr; $($field:ident),+ $(,)?) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field.take(); } )+
    };
}

/// Labels as inline rows `[x1, …, xd, value]`, or from a CSV file.
fn resolve_labels(
    inline: &mut Option<Vec<Vec<f64>>>,
    file: &mut Option<PathBuf>,
    fallback: Option<Vec<(TorusPoint, f64)>>,
) -> Result<Vec<(TorusPoint, f64)>> {
    if let Some(path) = file.take() {
        if inline.is_some() {
            return Err(Error::Config("give labels inline or as a file, not both".into()));
        }
        let (pts, vals) = read_labeled_points(&path)?;
        let rows = pts
            .points()
            .zip(&vals)
            .map(|(p, &v)| p.iter().copied().chain([v]).collect())
            .collect();
        *inline = Some(rows);
    }
    let labels = match inline.as_ref() {
        Some(rows) => rows
            .iter()
            .map(|row| {
                if row.len() < 2 {
                    return Err(Error::Config("label rows need coordinates and a value".into()));
                }
                let (x, v) = row.split_at(row.len() - 1);
                Ok((TorusPoint::new(x.to_vec())?, v[0]))
            })
            .collect::<Result<Vec<_>>>()?,
        None => fallback.ok_or_else(|| Error::Config("labels are required".into()))?,
    };
    if labels.is_empty() {
        return Err(Error::Config("labels are empty".into()));
    }
    let d = labels[0].0.dim();
    if labels.iter().any(|(p, _)| p.dim() != d) {
        return Err(Error::Config("labels have inconsistent dimensions".into()));
    }
    // store what was used so the manifest is self-contained
    *inline = Some(
        labels
            .iter()
            .map(|(p, v)| p.coords().iter().copied().chain([*v]).collect())
            .collect(),
    );
    Ok(labels)
}

fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::Config(format!("missing required parameter `{name}`")))
}

fn check_output_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Error::Config(format!(
            "output directory {} does not exist",
            p.display()
        ))),
        _ => Ok(()),
    }
}

/// `u.csv` → `u.manifest.toml`.
pub fn sibling_manifest(out: &Path) -> PathBuf {
    out.with_extension("manifest.toml")
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveParams {
    /// Total node count, labeled nodes included
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Headerless CSV of unlabeled node coordinates (instead of sampling)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<PathBuf>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// CSV with header x1,...,xd,label
    #[arg(long = "labels")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<PathBuf>,
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<f64>>>,
    /// Eigendecomposition cache, read if present and written otherwise
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Fully resolved `solve` inputs.
#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub n: Option<usize>,
    pub points: Option<PathBuf>,
    pub d: usize,
    pub eps: f64,
    pub s: f64,
    pub seed: u64,
    pub labels: Vec<(TorusPoint, f64)>,
    pub cache: Option<PathBuf>,
    pub out: PathBuf,
}

impl SolveParams {
    pub fn overlay(&mut self, mut file: SolveParams) {
        overlay!(self, file; n, points, d, eps, s, seed, labels_file, labels, cache, out);
    }

    /// Fills defaults in place and returns the typed settings.
    pub fn resolve(&mut self) -> Result<SolveSettings> {
        let labels = resolve_labels(&mut self.labels, &mut self.labels_file, None)?;
        let d = *self.d.get_or_insert(labels[0].0.dim());
        if labels[0].0.dim() != d {
            return Err(Error::Config(format!("labels are {}-dimensional, d = {d}", labels[0].0.dim())));
        }
        let seed = *self.seed.get_or_insert(0);
        if self.n.is_none() && self.points.is_none() {
            return Err(Error::Config("give either `n` or `points`".into()));
        }
        if let Some(p) = &self.points {
            if self.n.is_some() {
                return Err(Error::Config("`n` and `points` are mutually exclusive".into()));
            }
            if !p.is_file() {
                return Err(Error::Config(format!("points file {} not found", p.display())));
            }
        }
        if let Some(n) = self.n {
            if n <= labels.len() {
                return Err(Error::Config(format!("n = {n} leaves no unlabeled nodes")));
            }
        }
        let out = required(&self.out, "out")?;
        check_output_parent(&out)?;
        if let Some(c) = &self.cache {
            check_output_parent(c)?;
        }
        Ok(SolveSettings {
            n: self.n,
            points: self.points.clone(),
            d,
            eps: required(&self.eps, "eps")?,
            s: required(&self.s, "s")?,
            seed,
            labels,
            cache: self.cache.clone(),
            out,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuumParams {
    /// Grid nodes per axis
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantArg>,
    #[arg(long = "labels")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<PathBuf>,
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<f64>>>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ContinuumSettings {
    pub m: usize,
    pub s: f64,
    pub variant: SpectrumVariant,
    pub labels: Vec<(TorusPoint, f64)>,
    pub out: PathBuf,
}

impl ContinuumParams {
    pub fn overlay(&mut self, mut file: ContinuumParams) {
        overlay!(self, file; m, s, variant, labels_file, labels, out);
    }

    pub fn resolve(&mut self) -> Result<ContinuumSettings> {
        let labels = resolve_labels(&mut self.labels, &mut self.labels_file, Some(reference_labels()))?;
        if labels[0].0.dim() != 2 {
            return Err(Error::Config("continuum output supports d = 2 only".into()));
        }
        let out = required(&self.out, "out")?;
        check_output_parent(&out)?;
        Ok(ContinuumSettings {
            m: *self.m.get_or_insert(100),
            s: required(&self.s, "s")?,
            variant: (*self.variant.get_or_insert(VariantArg::Fd)).into(),
            labels,
            out,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Explicit ε values, shared by every n (overrides the geometric rule)
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_lo: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_hi: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_count: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_m: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<InterpolationArg>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_factor: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<usize>,
    #[arg(long = "labels")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<PathBuf>,
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<f64>>>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub sweep: SweepConfig,
    pub bandwidth_factor: f64,
    pub fit_window: usize,
    pub out_dir: PathBuf,
}

impl SweepParams {
    pub fn overlay(&mut self, mut file: SweepParams) {
        overlay!(self, file; n_values, s, reps, seed, eps, c_lo, c_hi, eps_count, grid_m,
            interpolation, bandwidth_factor, fit_window, labels_file, labels, out_dir);
    }

    pub fn resolve(&mut self) -> Result<SweepSettings> {
        let labels = resolve_labels(&mut self.labels, &mut self.labels_file, Some(reference_labels()))?;
        let eps_rule = match &self.eps {
            Some(list) => {
                if self.c_lo.is_some() || self.c_hi.is_some() || self.eps_count.is_some() {
                    return Err(Error::Config("explicit `eps` excludes c_lo, c_hi and eps_count".into()));
                }
                EpsRule::Explicit(list.clone())
            }
            None => EpsRule::Geometric {
                c_lo: *self.c_lo.get_or_insert(1.05),
                c_hi: *self.c_hi.get_or_insert(3.0),
                count: *self.eps_count.get_or_insert(40),
            },
        };
        let sweep = SweepConfig {
            n_values: required(&self.n_values, "n_values")?,
            d: labels[0].0.dim(),
            s: *self.s.get_or_insert(16.0),
            eps_rule,
            reps: *self.reps.get_or_insert(10),
            base_seed: *self.seed.get_or_insert(0),
            labels,
            grid_m: *self.grid_m.get_or_insert(100),
            interpolation: (*self.interpolation.get_or_insert(InterpolationArg::Bicubic)).into(),
            kernel: Kernel::indicator(),
        };
        sweep.validate()?;
        let bandwidth_factor = *self.bandwidth_factor.get_or_insert(3.0);
        if !(bandwidth_factor > 0.0) {
            return Err(Error::Config("bandwidth_factor must be positive".into()));
        }
        let fit_window = *self.fit_window.get_or_insert(5);
        Ok(SweepSettings {
            sweep,
            bandwidth_factor,
            fit_window,
            out_dir: required(&self.out_dir, "out_dir")?,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigensParams {
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct EigensSettings {
    pub growth: EigenGrowthConfig,
    pub out_dir: PathBuf,
}

impl EigensParams {
    pub fn overlay(&mut self, mut file: EigensParams) {
        overlay!(self, file; n_values, alpha, reps, seed, d, fit_window, out_dir);
    }

    pub fn resolve(&mut self) -> Result<EigensSettings> {
        let growth = EigenGrowthConfig {
            n_values: required(&self.n_values, "n_values")?,
            alpha: *self.alpha.get_or_insert(4.0),
            reps: *self.reps.get_or_insert(10),
            base_seed: *self.seed.get_or_insert(0),
            d: *self.d.get_or_insert(2),
            fit_window: *self.fit_window.get_or_insert(7),
        };
        growth.validate()?;
        Ok(EigensSettings {
            growth,
            out_dir: required(&self.out_dir, "out_dir")?,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlpParams {
    /// CSV with header x1,...,xd,value
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<PathBuf>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<PathBuf>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl TlpParams {
    pub fn overlay(&mut self, mut file: TlpParams) {
        overlay!(self, file; a, b, out);
    }

    pub fn resolve(&self) -> Result<(PathBuf, PathBuf, Option<PathBuf>)> {
        let a = required(&self.a, "a")?;
        let b = required(&self.b, "b")?;
        for p in [&a, &b] {
            if !p.is_file() {
                return Err(Error::Config(format!("input {} not found", p.display())));
            }
        }
        if let Some(o) = &self.out {
            check_output_parent(o)?;
        }
        Ok((a, b, self.out.clone()))
    }
}
