//! Experiment configuration: an optional TOML file overridden by flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    /// Row-major `re,im` matrix text (only for `gram`).
    Text,
}

/// Parses `3`, `4.5`, `inf`.
pub fn parse_p(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| format!("bad exponent '{s}': {e}")),
    }
}

pub fn fmt_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p}")
    }
}

fn ser_ps<S: Serializer>(ps: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ps.iter().map(|&p| fmt_p(p)))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum PEntry {
    Num(f64),
    Text(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTolerances {
    doubling: Option<f64>,
    series: Option<f64>,
    orthonormality: Option<f64>,
    slope: Option<f64>,
    max_doublings: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    k: Option<u32>,
    k_list: Option<Vec<u32>>,
    density: Option<f64>,
    m: Option<usize>,
    p: Option<Vec<PEntry>>,
    seed: Option<u64>,
    grid_scale: Option<f64>,
    tol: Option<FileTolerances>,
    c: Option<Vec<f64>>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Harmonic degree.
    #[arg(long)]
    pub k: Option<u32>,
    /// Degrees for a sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k_list: Option<Vec<u32>>,
    /// Density D; the family size is ⌊D(2k+1)⌋.
    #[arg(long)]
    pub density: Option<f64>,
    /// Explicit family size (instead of --density).
    #[arg(long)]
    pub m: Option<usize>,
    /// Lᵖ exponents, comma separated; `inf` for the sup norm.
    #[arg(long, value_delimiter = ',', value_parser = parse_p)]
    pub p: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplier on the default quadrature degree.
    #[arg(long)]
    pub grid_scale: Option<f64>,
    /// Relative resolution-doubling tolerance for non-even p.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Tube constants c (half-width c/√k), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub c: Option<Vec<f64>>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Read poles from a text file instead of generating them.
    #[arg(long)]
    pub poles: Option<PathBuf>,
    /// Write the pole set used to a text file.
    #[arg(long)]
    pub poles_out: Option<PathBuf>,
    /// Add wall-clock timings to the report (makes it non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub doubling: f64,
    pub series: f64,
    pub orthonormality: f64,
    pub slope: f64,
    pub max_doublings: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            doubling: 1e-6,
            series: beamlp::linalg::default_series_tol(),
            orthonormality: beamlp::ortho::ORTHONORMALITY_TOL,
            slope: 0.02,
            max_doublings: 3,
        }
    }
}

/// Resolved configuration, echoed verbatim in every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub k: Option<u32>,
    pub k_list: Vec<u32>,
    pub density: Option<f64>,
    pub m: Option<usize>,
    #[serde(serialize_with = "ser_ps")]
    pub p: Vec<f64>,
    pub seed: u64,
    pub grid_scale: f64,
    pub tol: Tolerances,
    pub c: Vec<f64>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Option<Format>,
    pub poles: Option<PathBuf>,
    #[serde(skip)]
    pub poles_out: Option<PathBuf>,
    #[serde(skip)]
    pub timings: bool,
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let file_p = match file.p {
            Some(list) => Some(
                list.into_iter()
                    .map(|e| match e {
                        PEntry::Num(v) => Ok(v),
                        PEntry::Text(s) => parse_p(&s),
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(CliError::Usage)?,
            ),
            None => None,
        };
        if args.m.is_some() && args.density.is_some() {
            return Err(CliError::Usage("give either --m or --density, not both".into()));
        }
        // a size flag replaces whichever sizing the file chose
        let (density, m) = if args.m.is_some() || args.density.is_some() {
            (args.density, args.m)
        } else {
            (file.density, file.m)
        };
        if density.is_some() && m.is_some() {
            return Err(CliError::Usage("config sets both m and density".into()));
        }
        let ft = file.tol.unwrap_or_default();
        let d = Tolerances::default();
        let tol = Tolerances {
            doubling: args.tol.or(ft.doubling).unwrap_or(d.doubling),
            series: ft.series.unwrap_or(d.series),
            orthonormality: ft.orthonormality.unwrap_or(d.orthonormality),
            slope: ft.slope.unwrap_or(d.slope),
            max_doublings: ft.max_doublings.unwrap_or(d.max_doublings),
        };
        let cfg = Self {
            k: args.k.or(file.k),
            k_list: args.k_list.clone().or(file.k_list).unwrap_or_default(),
            density,
            m,
            p: args.p.clone().or(file_p).unwrap_or_else(|| vec![4.0]),
            seed: args.seed.or(file.seed).unwrap_or(0),
            grid_scale: args.grid_scale.or(file.grid_scale).unwrap_or(1.0),
            tol,
            c: args.c.clone().or(file.c).unwrap_or_else(|| vec![1.0]),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format),
            poles: args.poles.clone(),
            poles_out: args.poles_out.clone(),
            timings: args.timings,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if let Some(d) = self.density {
            if !(d > 0.0 && d < 1.0) {
                return bad(format!("density must lie in (0, 1), got {d}"));
            }
        }
        if self.m == Some(0) {
            return bad("m must be at least 1".into());
        }
        if let Some(p) = self.p.iter().find(|p| !(**p >= 1.0)) {
            return bad(format!("exponents must be at least 1, got {p}"));
        }
        if !(self.grid_scale > 0.0 && self.grid_scale.is_finite()) {
            return bad(format!("grid scale must be positive, got {}", self.grid_scale));
        }
        if let Some(c) = self.c.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return bad(format!("tube constants must be positive, got {c}"));
        }
        let t = &self.tol;
        if [t.doubling, t.series, t.orthonormality, t.slope].iter().any(|v| !(*v > 0.0)) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn require_k(&self) -> Result<u32, CliError> {
        self.k.ok_or_else(|| CliError::Usage("--k is required".into()))
    }

    /// Sizing is required unless poles are read from a file.
    pub fn require_sizing(&self) -> Result<(), CliError> {
        if self.density.is_none() && self.m.is_none() && self.poles.is_none() {
            return Err(CliError::Usage("give --density or --m".into()));
        }
        Ok(())
    }

    /// Degree of the exact grid: `max(2, p_max)·k + 8`, scaled.
    pub fn grid_degree(&self, k: u32) -> usize {
        let base = beamlp::ortho::default_grid_degree(k, &self.p) as f64;
        (base * self.grid_scale).ceil() as usize
    }
}
