//! Machine-readable fit reports.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baselines::MixRegParams;
use crate::model::{FitConfig, ModelParams, TrimmedFit};

use super::CliError;

/// Current report layout version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Trimmed cluster weighted model.
    Cwrm,
    /// Trimmed mixture of linear regressions.
    Mixreg,
}

/// Fitted parameters; `means` and `scatters` are absent for `mixreg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<Vec<f64>>>,
    /// Row-major `d x d` per component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatters: Option<Vec<Vec<Vec<f64>>>>,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<Vec<f64>>,
    pub noise_vars: Vec<f64>,
}

impl From<&ModelParams> for ReportParams {
    fn from(p: &ModelParams) -> Self {
        Self {
            weights: p.weights.clone(),
            means: Some(p.means.iter().map(|m| m.iter().copied().collect()).collect()),
            scatters: Some(
                p.scatters
                    .iter()
                    .map(|s| s.row_iter().map(|r| r.iter().copied().collect()).collect())
                    .collect(),
            ),
            intercepts: p.intercepts.clone(),
            slopes: p.slopes.iter().map(|b| b.iter().copied().collect()).collect(),
            noise_vars: p.noise_vars.clone(),
        }
    }
}

impl From<&MixRegParams> for ReportParams {
    fn from(p: &MixRegParams) -> Self {
        Self {
            weights: p.weights.clone(),
            means: None,
            scatters: None,
            intercepts: p.intercepts.clone(),
            slopes: p.slopes.iter().map(|b| b.iter().copied().collect()).collect(),
            noise_vars: p.noise_vars.clone(),
        }
    }
}

impl ReportParams {
    /// Cluster weighted parameters, when the report carries covariate moments.
    pub fn to_model_params(&self) -> Option<ModelParams> {
        let means = self.means.as_ref()?;
        let scatters = self.scatters.as_ref()?;
        let d = means.first()?.len();
        Some(ModelParams {
            weights: self.weights.clone(),
            means: means.iter().map(|m| DVector::from_vec(m.clone())).collect(),
            scatters: scatters
                .iter()
                .map(|s| DMatrix::from_fn(d, d, |i, j| s[i][j]))
                .collect(),
            intercepts: self.intercepts.clone(),
            slopes: self.slopes.iter().map(|b| DVector::from_vec(b.clone())).collect(),
            noise_vars: self.noise_vars.clone(),
        })
    }
}

/// Region `intercept + slope'x ± half_width` around a fitted line, with
/// `half_width = 2 σ_g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    /// 1-based component index.
    pub component: usize,
    pub intercept: f64,
    pub slope: Vec<f64>,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub method: Method,
    pub config: FitConfig,
    pub n: usize,
    pub d: usize,
    pub retained: usize,
    pub params: ReportParams,
    /// 0 for trimmed rows, otherwise the 1-based MAP component.
    pub labels: Vec<usize>,
    /// `true` for retained rows.
    pub z: Vec<bool>,
    /// Largest posterior per row (0 on trimmed rows).
    pub max_posterior: Vec<f64>,
    pub objective: f64,
    pub bands: Vec<Band>,
    pub n_iter: usize,
    pub converged: bool,
    pub start_index: usize,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn new<P>(method: Method, config: &FitConfig, d: usize, fit: &TrimmedFit<P>, params: ReportParams, wall_time_ms: f64) -> Self {
        let bands = (0..params.weights.len())
            .map(|g| Band {
                component: g + 1,
                intercept: params.intercepts[g],
                slope: params.slopes[g].clone(),
                half_width: 2.0 * params.noise_vars[g].sqrt(),
            })
            .collect();
        let max_posterior = fit
            .resp
            .tau
            .row_iter()
            .map(|r| r.iter().copied().fold(0.0, f64::max))
            .collect();
        Self {
            schema: SCHEMA_VERSION,
            method,
            config: config.clone(),
            n: fit.labels.len(),
            d,
            retained: fit.resp.retained(),
            params,
            labels: fit.labels.clone(),
            z: fit.resp.z.clone(),
            max_posterior,
            objective: fit.objective,
            bands,
            n_iter: fit.n_iter,
            converged: fit.converged,
            start_index: fit.start_index,
            wall_time_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let r: Self = serde_json::from_str(text).map_err(|e| CliError::parse(format!("invalid report: {e}")))?;
        if r.schema != SCHEMA_VERSION {
            return Err(CliError::parse(format!("unsupported report schema {}", r.schema)));
        }
        Ok(r)
    }

    /// Writes `index, label, trimmed, max_posterior` per row.
    pub fn write_rows<W: Write>(&self, writer: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "label", "trimmed", "max_posterior"]).map_err(CliError::io)?;
        for i in 0..self.n {
            w.write_record([
                i.to_string(),
                self.labels[i].to_string(),
                (!self.z[i]).to_string(),
                self.max_posterior[i].to_string(),
            ])
            .map_err(CliError::io)?;
        }
        w.flush().map_err(CliError::io)
    }
}
