//! Report schema. Every report carries the command, the seed and the config
//! digest; `parse(emit(report)) == report` for all of them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::formats::PovmFile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Report {
    ModelList(ModelListReport),
    Qfim(QfimReport),
    Cfim(CfimReport),
    Bounds(BoundsReport),
    Holevo(ConvexReport),
    Nagaoka(ConvexReport),
    Optimize(OptimizeReport),
    Simulate(ExperimentReport),
    Verify(VerifyReport),
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_csv(&self) -> String {
        let value = serde_json::to_value(self).expect("reports serialize");
        crate::formats::flatten_csv(&value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub kind: String,
    pub n: usize,
    pub d: usize,
    pub parameters: Vec<String>,
    pub domain: Vec<[f64; 2]>,
    pub analytic_tangent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelListReport {
    pub seed: u64,
    pub config_digest: String,
    pub models: Vec<ModelInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorInfo {
    pub partial_max: f64,
    pub weak_max: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopyQfim {
    pub p: usize,
    pub qfim: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfimReport {
    pub seed: u64,
    pub config_digest: String,
    pub model: String,
    pub x: Vec<f64>,
    pub qfim: Vec<Vec<f64>>,
    pub f_im: Vec<Vec<f64>>,
    pub sld_residual: f64,
    pub commutator: CommutatorInfo,
    /// QFIM of `ρ^{⊗p}` with the SLDs solved on the p-copy state.
    pub copies: Vec<CopyQfim>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfimEntry {
    pub p: usize,
    pub povm_digest: String,
    pub outcomes: usize,
    pub cfim: Vec<Vec<f64>>,
    /// `p F_Q`, the quantum ceiling for the same copy count.
    pub qfim_p: Vec<Vec<f64>>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfimReport {
    pub seed: u64,
    pub config_digest: String,
    pub model: String,
    pub x: Vec<f64>,
    pub results: Vec<CfimEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Ok,
    Skipped,
    NonBinding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundJson {
    pub name: String,
    pub value: Option<f64>,
    pub meta: BTreeMap<String, f64>,
    pub status: BoundStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestBound {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub weight: Vec<Vec<f64>>,
    /// `D` used in the conversion (the best `Γ_p` bound).
    pub d: f64,
    /// Lower bound on `ν Tr[W Cov]`.
    pub cov_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReportJson {
    pub model: String,
    pub x: Vec<f64>,
    pub p: usize,
    pub bounds: Vec<BoundJson>,
    pub best: BestBound,
    pub conversion: Option<Conversion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub seed: u64,
    pub config_digest: String,
    pub model: String,
    pub x: Vec<f64>,
    pub reports: Vec<BoundReportJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexReport {
    pub seed: u64,
    pub config_digest: String,
    pub model: String,
    pub x: Vec<f64>,
    pub weight: Vec<Vec<f64>>,
    pub value: f64,
    /// `Tr[W F_Q^{-1}]`, the SLD Cramér–Rao value.
    pub sld_crb: f64,
    pub final_mu: f64,
    pub gap_proxy: f64,
    pub stages: usize,
    pub iterations: usize,
    pub restart_values: Vec<f64>,
    pub tuple_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeEntry {
    pub p: usize,
    pub gamma: f64,
    pub value: f64,
    pub iterations: usize,
    pub restart_trace: Vec<f64>,
    pub cfim: Vec<Vec<f64>>,
    pub povm_digest: String,
    pub povm: PovmFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub seed: u64,
    pub config_digest: String,
    pub model: String,
    pub x: Vec<f64>,
    pub objective: String,
    pub results: Vec<OptimizeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBounds {
    /// `Tr[W F_Q^{-1}]`.
    pub sld_crb: f64,
    /// `Tr[W F_C^{-1}]` of the POVM used.
    pub fc_crb: f64,
    pub holevo: Option<f64>,
    pub nagaoka: Option<f64>,
    /// Conversion of the best `Γ_p` bound at the POVM's copy count.
    pub cov_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub config_digest: String,
    pub model: String,
    pub x: Vec<f64>,
    pub povm_digest: String,
    pub p: usize,
    pub shots: u64,
    pub trials: usize,
    pub nu: f64,
    pub weight: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub nu_cov: Vec<Vec<f64>>,
    pub fc_inv: Vec<Vec<f64>>,
    pub weighted_trace: f64,
    pub weighted_trace_se: f64,
    pub relative_deviation: f64,
    pub flagged: usize,
    pub bounds: ExperimentBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub config_digest: String,
    pub model: String,
    pub x: Vec<f64>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}
