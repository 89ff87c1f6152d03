//! Structured outputs: JSON summaries (schema-versioned) and CSV curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use impulse_core::band::BandSolution;
use impulse_core::sim::PolicyEstimate;
use impulse_core::threshold::ThresholdSolution;
use impulse_core::{Error, Result};

use crate::config::SCHEMA_VERSION;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRef {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub gamma_star: f64,
    pub b_gamma: f64,
    /// |u(a*) − γ*| / (1 + |γ*|).
    pub value_agreement_rel: f64,
    /// |b* − b^γ|.
    pub trigger_agreement_abs: f64,
    pub iterations: usize,
    pub anchored: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub schema_version: u32,
    pub kind: String,
    pub model: ModelRef,
    pub a_star: f64,
    pub b_star: f64,
    pub rho_star: f64,
    pub boundary_limit_lc: f64,
    pub delay: f64,
    pub smooth_fit_residual: f64,
    pub window_warning: bool,
    pub warnings: Vec<String>,
    pub oracle: Option<OracleReport>,
    pub curve_file: Option<String>,
}

impl ThresholdSummary {
    pub fn new(model: ModelRef, sol: &ThresholdSolution) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "threshold-solution".into(),
            model,
            a_star: sol.a_star,
            b_star: sol.b_star,
            rho_star: sol.rho_star,
            boundary_limit_lc: sol.boundary_limit_lc,
            delay: sol.delay,
            smooth_fit_residual: sol.diagnostics.smooth_fit_residual,
            window_warning: sol.diagnostics.window_warning,
            warnings: sol.diagnostics.warnings.clone(),
            oracle: None,
            curve_file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandSummary {
    pub schema_version: u32,
    pub kind: String,
    pub model: ModelRef,
    pub p_star: f64,
    pub q_star: f64,
    pub c_star: f64,
    pub d_star: f64,
    pub rho_star: f64,
    pub tau_star: f64,
    pub delay: f64,
    pub residual_p: f64,
    pub residual_d: f64,
    pub window_warning: bool,
    pub warnings: Vec<String>,
    pub curve_file: Option<String>,
}

impl BandSummary {
    pub fn new(model: ModelRef, sol: &BandSolution) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "band-solution".into(),
            model,
            p_star: sol.p_star,
            q_star: sol.q_star,
            c_star: sol.c_star,
            d_star: sol.d_star,
            rho_star: sol.rho_star,
            tau_star: sol.tau_star,
            delay: sol.delay,
            residual_p: sol.diagnostics.residual_p,
            residual_d: sol.diagnostics.residual_d,
            window_warning: sol.diagnostics.window_warning,
            warnings: sol.diagnostics.warnings.clone(),
            curve_file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub kind: String,
    pub model: ModelRef,
    pub policy: Vec<f64>,
    pub x0: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub mean: f64,
    pub stderr: f64,
    pub analytic_value: Option<f64>,
    pub z_score: Option<f64>,
    pub discounted_tail_bound: f64,
    pub tail_warning: bool,
    pub mean_interventions: f64,
    pub bridge_fraction: f64,
    pub crossing_bias: String,
    pub exclusion_violations: u64,
}

impl SimReport {
    pub fn new(
        model: ModelRef,
        policy: Vec<f64>,
        x0: f64,
        dt: f64,
        est: &PolicyEstimate,
        analytic: Option<f64>,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "simulation-report".into(),
            model,
            policy,
            x0,
            n_paths: est.n_paths,
            seed: est.seed,
            dt,
            horizon: est.diagnostics.horizon,
            mean: est.mean,
            stderr: est.stderr,
            analytic_value: analytic,
            z_score: analytic.map(|v| est.z_score(v)),
            discounted_tail_bound: est.discounted_tail_bound,
            tail_warning: est.diagnostics.tail_warning,
            mean_interventions: est.diagnostics.mean_interventions,
            bridge_fraction: est.diagnostics.bridge_fraction,
            crossing_bias: est.diagnostics.crossing_bias.to_string(),
            exclusion_violations: est.diagnostics.exclusion_violations,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("write {}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("parse {}: {e}", path.display())))
}

/// One row of a value-function curve.
pub struct CurvePoint {
    pub x: f64,
    pub v: f64,
    pub u: f64,
    pub region: &'static str,
}

/// CSV with header `x,v,u,region` (UTF-8, `.` decimal, scientific notation
/// permitted).
pub fn write_curve_csv(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut text = String::from("x,v,u,region\n");
    for p in points {
        let _ = writeln!(text, "{},{},{},{}", fmt(p.x), fmt(p.v), fmt(p.u), p.region);
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("write {}: {e}", path.display())))
}

/// Generic CSV table writer.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "{}", header.join(","));
    for row in rows {
        let _ = writeln!(text, "{}", row.join(","));
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("write {}: {e}", path.display())))
}

/// Shortest round-trip float formatting (deterministic).
pub fn fmt(v: f64) -> String {
    // `{}` on f64 is the shortest representation that round-trips.
    let buf = format!("{v}");
    if buf == "-0" {
        "0".into()
    } else {
        buf
    }
}

pub fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
