//! Serializable report records. Field names are the JSON keys.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const REPORT_VERSION: u32 = 1;

/// A single pass/fail decision with the numbers behind it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `<=`, `<`, or `>=`.
    pub relation: &'static str,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<=",
            bound,
            pass: value <= bound,
        }
    }

    pub fn lt(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<",
            bound,
            pass: value < bound,
        }
    }

    pub fn ge(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">=",
            bound,
            pass: value >= bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoleStats {
    pub m: usize,
    pub seed: u64,
    /// `null` when `m < 2`.
    pub d_min: Option<f64>,
    pub lower: f64,
    pub upper: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GramStats {
    pub k: u32,
    pub r_emp: f64,
    pub dominant: bool,
    pub interval: [f64; 2],
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub max_excess: f64,
    pub eig_tol: f64,
    pub eig_check: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FStats {
    pub diag_min: f64,
    pub diag_max: f64,
    pub h_norm: f64,
    pub max_row_sum: f64,
    pub fef_residual: f64,
    pub series_terms: Option<usize>,
    pub series_diff: Option<f64>,
    pub series_tol: f64,
    pub strong_applicable: bool,
    pub bounds_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthoStats {
    pub max_diag_error: f64,
    pub max_off_diag: f64,
    pub tol: f64,
    pub n_phi: usize,
    pub n_theta: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormRow {
    pub i: usize,
    pub norm_u: f64,
    pub norm_q: f64,
    pub ratio: f64,
    pub chain_lower: f64,
    pub chain_ok: bool,
    pub headline_ok: bool,
    pub converged: bool,
    pub rel_change: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormTable {
    pub p: String,
    /// `‖Q_k‖_p`.
    pub baseline: f64,
    pub half_baseline: f64,
    pub theorem_range: bool,
    pub min_ratio: f64,
    /// `min_ratio / 0.5`.
    pub margin: f64,
    pub n_phi: usize,
    pub n_theta: usize,
    pub pass: bool,
    pub rows: Vec<NormRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AverageStats {
    pub p: String,
    pub density: f64,
    pub average: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocRow {
    pub c: f64,
    pub i: usize,
    pub w: f64,
    pub mass_in: f64,
    pub mass_out: f64,
    pub beam_mass_in: f64,
    pub beam_mass_out: f64,
    pub bound_in: f64,
    pub bound_out: f64,
    pub bound_out_l2: f64,
    pub in_shift: f64,
    pub in_shift_bound: f64,
    pub floor_applicable: bool,
    pub under_resolved: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub c: f64,
    pub w: f64,
    pub mass_in: f64,
    pub erf: f64,
    pub diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryStats {
    pub density: f64,
    pub k: u32,
    pub c0: f64,
    pub group_i: f64,
    pub group_ii: f64,
    pub group_iii: f64,
    pub r_theory: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub k: u32,
    pub m: usize,
    pub r_emp: f64,
    /// `min_i ‖u_i‖_p`, in the order of the configured exponents.
    pub min_norms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeRow {
    pub p: String,
    pub slope: f64,
    pub intercept: f64,
    pub expected: f64,
    pub tol: f64,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixDump {
    pub which: String,
    pub order: usize,
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub kind: &'static str,
    pub version: u32,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poles: Option<PoleStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram: Option<GramStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<FStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orthonormality: Option<OrthoStats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub norms: Vec<NormTable>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub average: Vec<AverageStats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub localization: Vec<LocRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub beam_profile: Vec<ProfileRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryStats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub slopes: Vec<SlopeRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixDump>,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

impl RunReport {
    pub fn new(kind: &'static str, config: &ExperimentConfig) -> Self {
        Self {
            kind,
            version: REPORT_VERSION,
            config: config.clone(),
            poles: None,
            gram: None,
            f: None,
            orthonormality: None,
            norms: Vec::new(),
            average: Vec::new(),
            localization: Vec::new(),
            beam_profile: Vec::new(),
            theory: None,
            sweep: Vec::new(),
            slopes: Vec::new(),
            matrix: None,
            checks: Vec::new(),
            pass: false,
            error: None,
            timings: None,
        }
    }

    pub fn failed(kind: &'static str, config: &ExperimentConfig, err: &CliError) -> Self {
        let mut r = Self::new(kind, config);
        r.error = Some(ErrorRecord {
            kind: err.kind(),
            message: err.to_string(),
        });
        r
    }

    /// Sets `pass` from the check list.
    pub fn settle(&mut self) {
        self.pass = self.error.is_none() && self.checks.iter().all(|c| c.pass);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}
