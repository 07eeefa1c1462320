//! Run configuration. Both the flag front end and `qig run --config` produce
//! a [`RunConfig`], which is validated before any computation starts.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qig_core::convex::SolverConfig;
use qig_core::fisher::ModelPoint;
use qig_core::measurement::{Objective, SearchConfig};
use qig_core::models::{lookup, DerivativeMode, ModelKind, StateModel};
use qig_core::{Limits, RealMatrix};

use crate::error::{CliError, CliResult};

/// Environment variable overriding the `d^p` dimension limit.
pub const MAX_DIM_ENV: &str = "QIG_MAX_DIM";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    ModelList,
    Qfim,
    Cfim,
    Bounds,
    Holevo,
    Nagaoka,
    Optimize,
    Simulate,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ModelList => "model_list",
            Command::Qfim => "qfim",
            Command::Cfim => "cfim",
            Command::Bounds => "bounds",
            Command::Holevo => "holevo",
            Command::Nagaoka => "nagaoka",
            Command::Optimize => "optimize",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// A registry name or an inline model spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Name(String),
    Spec(ModelSpec),
}

/// Model-spec file: a built-in kind with overridden constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub kind: String,
    #[serde(default)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<[f64; 3]>,
    /// Force central finite differences even when an analytic tangent exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_difference: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub richardson: Option<bool>,
}

impl ModelSpec {
    pub fn build(&self) -> CliResult<StateModel> {
        let base = lookup(&self.kind).map_err(|_| {
            CliError::Config(format!(
                "model spec {:?}: unknown kind {:?}; built-in kinds: {}",
                self.name,
                self.kind,
                qig_core::models::registry_names().join(", ")
            ))
        })?;
        let p = &self.params;
        let refuse = |field: &str| {
            CliError::Config(format!(
                "model spec {:?}: parameter {field} does not apply to kind {}",
                self.name, self.kind
            ))
        };
        let kind = match base.kind().clone() {
            ModelKind::NoisyQubit { visibility } => ModelKind::NoisyQubit {
                visibility: p.visibility.unwrap_or(visibility),
            },
            ModelKind::Unitary2p { purity } => ModelKind::Unitary2p {
                purity: p.purity.unwrap_or(purity),
            },
            ModelKind::UnitaryQubit1p { initial, generator } => ModelKind::UnitaryQubit1p {
                initial: p.initial.unwrap_or(initial),
                generator: p.generator.unwrap_or(generator),
            },
            other => other,
        };
        let applies = |k: &ModelKind| {
            (
                matches!(k, ModelKind::NoisyQubit { .. }),
                matches!(k, ModelKind::Unitary2p { .. }),
                matches!(k, ModelKind::UnitaryQubit1p { .. }),
            )
        };
        let (vis, pur, uq) = applies(&kind);
        if p.visibility.is_some() && !vis {
            return Err(refuse("visibility"));
        }
        if p.purity.is_some() && !pur {
            return Err(refuse("purity"));
        }
        if p.initial.is_some() && !uq {
            return Err(refuse("initial"));
        }
        if p.generator.is_some() && !uq {
            return Err(refuse("generator"));
        }
        let mut model = StateModel::new(self.name.clone(), kind)?;
        if p.finite_difference == Some(true) {
            model = model.with_derivative_mode(DerivativeMode::FiniteDifference);
        }
        if let Some(r) = p.richardson {
            model = model.with_richardson(r);
        }
        if model.n() != self.n || model.d() != self.d {
            return Err(CliError::Config(format!(
                "model spec {:?}: kind {} has n = {}, d = {}, spec says n = {}, d = {}",
                self.name,
                self.kind,
                model.n(),
                model.d(),
                self.n,
                self.d
            )));
        }
        Ok(model)
    }
}

impl ModelRef {
    pub fn build(&self) -> CliResult<StateModel> {
        match self {
            ModelRef::Name(name) => Ok(lookup(name)?),
            ModelRef::Spec(spec) => spec.build(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightName {
    #[serde(rename = "identity")]
    Identity,
    #[serde(rename = "f_q")]
    Fq,
}

/// Weight matrix `W`: the identity, the QFIM at `x`, or explicit rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Named(WeightName),
    Matrix(Vec<Vec<f64>>),
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Named(WeightName::Identity)
    }
}

impl WeightSpec {
    pub fn resolve(&self, pt: &ModelPoint) -> CliResult<RealMatrix> {
        let n = pt.n();
        let w = match self {
            WeightSpec::Named(WeightName::Identity) => RealMatrix::identity(n),
            WeightSpec::Named(WeightName::Fq) => pt.fq.matrix().clone(),
            WeightSpec::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Config(format!("weight must be {n}x{n}")));
                }
                let w = RealMatrix::from_rows(rows)?;
                if w.symmetry_deviation() > 1e-12 {
                    return Err(CliError::Config("weight matrix must be symmetric".into()));
                }
                w
            }
        };
        if w.min_eigenvalue() < -1e-12 {
            return Err(CliError::Config(
                "weight matrix must be positive semidefinite".into(),
            ));
        }
        Ok(w)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, WeightSpec::Named(WeightName::Identity))
    }
}

/// Convex-solver block, `{"max_iters", "mu_schedule", "restarts", "seed", "tolerance"}`.
/// Missing fields take the library defaults; a missing seed takes the run seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl SolverSpec {
    pub fn resolve(&self, run_seed: u64) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            mu_schedule: self.mu_schedule.clone().unwrap_or(d.mu_schedule),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed: self.seed.unwrap_or(run_seed),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    #[default]
    Gamma,
    WeightedCrb,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(default)]
    pub objective: ObjectiveName,
}

impl OptimizerSpec {
    pub fn resolve(&self, seed: u64, weight: Option<RealMatrix>, limits: Limits) -> SearchConfig {
        let d = SearchConfig::default();
        let objective = match (self.objective, weight) {
            (ObjectiveName::WeightedCrb, Some(w)) => Objective::WeightedCrb(w),
            _ => Objective::Gamma,
        };
        SearchConfig {
            outcomes: self.outcomes,
            restarts: self.restarts.unwrap_or(d.restarts),
            iters: self.iters.unwrap_or(d.iters),
            seed,
            objective,
            limits,
            ..d
        }
    }
}

fn default_p() -> Vec<usize> {
    vec![1]
}

fn default_shots() -> u64 {
    10_000
}

fn default_trials() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default = "default_p")]
    pub p: Vec<usize>,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    /// POVM file consumed by `cfim`, `simulate` and `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<PathBuf>,
    /// Where `optimize` writes the best POVM of the largest `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm_out: Option<PathBuf>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            model: None,
            x: None,
            p: default_p(),
            weight: WeightSpec::default(),
            solver: SolverSpec::default(),
            optimizer: OptimizerSpec::default(),
            povm: None,
            povm_out: None,
            shots: default_shots(),
            trials: default_trials(),
            seed: 0,
            out: None,
            format: Format::Json,
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid run config: {e}")))
    }

    /// Checks everything that does not need a computation.
    pub fn validate(&self) -> CliResult<()> {
        if self.command == Command::ModelList {
            return Ok(());
        }
        let model = self.model()?;
        let x = self.x()?;
        model.check_domain(x)?;
        if self.p.is_empty() || self.p.contains(&0) {
            return Err(CliError::Config(
                "--p needs one or more positive copy counts".into(),
            ));
        }
        let limits = self.limits()?;
        for &p in &self.p {
            limits.power_dim(model.d(), p)?;
        }
        if self.command == Command::Simulate {
            if self.shots == 0 {
                return Err(CliError::Config("--shots must be positive".into()));
            }
            if self.trials < 50 {
                return Err(CliError::Config(format!(
                    "--trials must be at least 50, got {}",
                    self.trials
                )));
            }
        }
        if self.command == Command::Nagaoka && model.n() != 2 {
            return Err(CliError::Config(format!(
                "nagaoka needs a two-parameter model; {} has n = {}",
                model.name(),
                model.n()
            )));
        }
        if let WeightSpec::Matrix(rows) = &self.weight {
            let n = model.n();
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::Config(format!("weight must be {n}x{n}")));
            }
        }
        if let Some(k) = self.optimizer.outcomes {
            if k == 0 {
                return Err(CliError::Config("--outcomes must be positive".into()));
            }
        }
        let s = self.solver.resolve(self.seed);
        if s.mu_schedule.is_empty() || s.mu_schedule.iter().any(|&m| !(m > 0.0)) {
            return Err(CliError::Config(
                "solver mu_schedule must be non-empty and positive".into(),
            ));
        }
        if s.max_iters == 0 || s.restarts == 0 || !(s.tolerance > 0.0) {
            return Err(CliError::Config(
                "solver max_iters, restarts and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn model(&self) -> CliResult<StateModel> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{} needs --model", self.command.name())))?
            .build()
    }

    pub fn x(&self) -> CliResult<&[f64]> {
        self.x
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("{} needs --x", self.command.name())))
    }

    pub fn limits(&self) -> CliResult<Limits> {
        limits_from_env()
    }

    /// SHA-256 of the canonical config, ignoring where and how it is written.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.povm_out = None;
        c.format = Format::Json;
        let text = serde_json::to_string(&c).expect("run config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

pub fn limits_from_env() -> CliResult<Limits> {
    match std::env::var(MAX_DIM_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .map(Limits::new)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{MAX_DIM_ENV} must be a positive integer, got {v:?}"
                ))
            }),
        Err(_) => Ok(Limits::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let e = RunConfig::from_json(r#"{"command": "qfim", "modle": "pure_qubit"}"#).unwrap_err();
        assert!(e.to_string().contains("modle"));
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let c = RunConfig::from_json(
            r#"{"command": "bounds", "model": "noisy_qubit", "x": [0.7, 0.3]}"#,
        )
        .unwrap();
        assert_eq!(c.p, vec![1]);
        assert_eq!(c.shots, 10_000);
        assert!(c.weight.is_identity());
        c.validate().unwrap();
    }

    #[test]
    fn model_spec_overrides_constants() {
        let c = RunConfig::from_json(
            r#"{"command": "qfim", "x": [0.7, 0.3],
                "model": {"name": "faint", "n": 2, "d": 2, "kind": "noisy_qubit", "params": {"visibility": 0.5}}}"#,
        )
        .unwrap();
        let m = c.model().unwrap();
        assert_eq!(m.kind(), &ModelKind::NoisyQubit { visibility: 0.5 });
        assert_eq!(m.name(), "faint");
    }

    #[test]
    fn model_spec_checks_shape_and_parameters() {
        let bad_n = ModelSpec {
            name: "m".into(),
            n: 3,
            d: 2,
            kind: "pure_qubit".into(),
            params: ModelParams::default(),
        };
        assert!(matches!(bad_n.build(), Err(CliError::Config(_))));
        let bad_param = ModelSpec {
            n: 2,
            params: ModelParams {
                purity: Some(0.5),
                ..ModelParams::default()
            },
            ..bad_n
        };
        assert!(bad_param
            .build()
            .unwrap_err()
            .to_string()
            .contains("purity"));
    }

    #[test]
    fn digest_ignores_output_location() {
        let mut a = RunConfig::new(Command::Qfim);
        a.model = Some(ModelRef::Name("pure_qubit".into()));
        let mut b = a.clone();
        b.out = Some("elsewhere.json".into());
        b.format = Format::Csv;
        assert_eq!(a.digest(), b.digest());
        b.seed = 1;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn weight_spec_parses_all_forms() {
        let w: WeightSpec = serde_json::from_str(r#""f_q""#).unwrap();
        assert_eq!(w, WeightSpec::Named(WeightName::Fq));
        let w: WeightSpec = serde_json::from_str("[[1, 0], [0, 2]]").unwrap();
        assert_eq!(w, WeightSpec::Matrix(vec![vec![1.0, 0.0], vec![0.0, 2.0]]));
        assert!(serde_json::from_str::<WeightSpec>(r#""diag""#).is_err());
    }
}
