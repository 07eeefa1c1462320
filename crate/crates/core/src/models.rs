//! Parametrized density-matrix families.
//!
//! A [`StateModel`] maps a parameter vector `x` to a [`DensityMatrix`] and
//! supplies the tangents `∂ρ/∂x_j`, analytically where the family has a
//! closed form and by central finite differences otherwise.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::fmath;
use crate::numlin::{
    bloch_operator, eig_hermitian, kron, kron_power, pauli, ComplexMatrix, Eigh, HermitianOperator,
    Limits, C64,
};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

const TRACE_TOL: f64 = 1e-10;
const MIN_EIGENVALUE: f64 = -1e-10;
/// Relative threshold `λ > 1e-10 · λ_max` for membership in the support.
pub const SUPPORT_REL_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// DensityMatrix

/// Unit-trace PSD operator with its eigensystem cached.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
    eigen: Eigh,
    rank: usize,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let trace = op.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidInput(format!(
                "density matrix trace is {trace}, expected 1"
            )));
        }
        let eigen = eig_hermitian(&op);
        if eigen.min() < MIN_EIGENVALUE {
            return Err(Error::NotPsd(eigen.min()));
        }
        Ok(Self::from_parts(op, eigen))
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    fn from_parts(op: HermitianOperator, eigen: Eigh) -> Self {
        let threshold = SUPPORT_REL_TOL * eigen.max();
        let rank = eigen.values.iter().filter(|&&l| l > threshold).count();
        DensityMatrix { op, eigen, rank }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn eigen(&self) -> &Eigh {
        &self.eigen
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    /// Eigenvectors as columns, matching [`eigenvalues`](Self::eigenvalues).
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigen.vectors
    }

    /// Number of eigenvalues above `1e-10 · λ_max`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_pure(&self) -> bool {
        self.rank == 1
    }

    /// Absolute threshold used for support membership.
    pub fn support_threshold(&self) -> f64 {
        SUPPORT_REL_TOL * self.eigen.max()
    }

    /// Indices (into the ascending eigenvalue list) spanning the support.
    pub fn support(&self) -> Vec<usize> {
        let t = self.support_threshold();
        (0..self.dim())
            .filter(|&i| self.eigen.values[i] > t)
            .collect()
    }

    /// `√ρ` from the cached eigensystem.
    pub fn sqrt(&self) -> HermitianOperator {
        self.eigen.map(|l| fmath::sqrt(l.max(0.0)))
    }

    /// `Tr(ρ M)`.
    pub fn expectation(&self, m: &HermitianOperator) -> f64 {
        self.op.trace_product_real(m)
    }

    /// `ρ^{⊗p}`, with the eigensystem assembled from the single-copy one.
    pub fn tensor_power(&self, p: usize, limits: &Limits) -> Result<DensityMatrix> {
        if p == 1 {
            return Ok(self.clone());
        }
        let op = HermitianOperator::from_hermitian_part(&kron_power(self.op.matrix(), p, limits)?);
        let d = self.dim();
        let mut values = self.eigen.values.clone();
        let mut vectors = self.eigen.vectors.clone();
        for _ in 1..p {
            let mut next = Vec::with_capacity(values.len() * d);
            for &a in &values {
                for &b in &self.eigen.values {
                    next.push(a * b);
                }
            }
            values = next;
            vectors = kron(&vectors, &self.eigen.vectors);
        }
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let eigen = Eigh {
            values: order.iter().map(|&i| values[i]).collect(),
            vectors: ComplexMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]),
        };
        Ok(Self::from_parts(op, eigen))
    }
}

// ---------------------------------------------------------------------------
// TangentData

/// The `n` tangents `∂ρ/∂x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentData {
    ops: Vec<HermitianOperator>,
}

impl TangentData {
    pub fn new(ops: Vec<HermitianOperator>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidInput("tangent list is empty".into()));
        }
        let d = ops[0].dim();
        if ops.iter().any(|o| o.dim() != d) {
            return Err(Error::InvalidInput("tangents have mixed dimensions".into()));
        }
        Ok(TangentData { ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn get(&self, j: usize) -> &HermitianOperator {
        &self.ops[j]
    }

    pub fn ops(&self) -> &[HermitianOperator] {
        &self.ops
    }

    /// Largest `|Tr ∂ρ/∂x_j|`.
    pub fn max_trace(&self) -> f64 {
        self.ops
            .iter()
            .map(|o| o.trace().norm())
            .fold(0.0, f64::max)
    }

    /// Tangents of `ρ^{⊗p}`: `Σ_i ρ^{⊗(i-1)} ⊗ ∂ρ ⊗ ρ^{⊗(p-i)}`.
    pub fn tensor_power(&self, rho: &DensityMatrix, p: usize, limits: &Limits) -> Result<Self> {
        if p == 1 {
            return Ok(self.clone());
        }
        let d = rho.dim();
        limits.power_dim(d, p)?;
        let r = rho.operator().matrix();
        let mut powers = vec![ComplexMatrix::identity(1)];
        for k in 1..p {
            powers.push(kron(&powers[k - 1], r));
        }
        let ops = self
            .ops
            .iter()
            .map(|t| {
                let mut acc: Option<ComplexMatrix> = None;
                for site in 0..p {
                    let term = kron(&kron(&powers[site], t.matrix()), &powers[p - site - 1]);
                    acc = Some(match acc {
                        None => term,
                        Some(a) => &a + &term,
                    });
                }
                HermitianOperator::from_hermitian_part(&acc.expect("p >= 1"))
            })
            .collect();
        Ok(TangentData { ops })
    }
}

// ---------------------------------------------------------------------------
// StateModel

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// Built-in model families with their constants.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`, parameters `(θ, φ)`.
    PureQubit,
    /// `η |ψ(θ,φ)⟩⟨ψ(θ,φ)| + (1-η) I/2`.
    NoisyQubit { visibility: f64 },
    /// `(I + r·σ)/2`, parameters `r = (r_x, r_y, r_z)`.
    Bloch3p,
    /// `(I + r_x σx + r_z σz)/2`; its SLDs do not commute but satisfy
    /// `Tr(ρ[L_1, L_2]) = 0`.
    BlochXz,
    /// `diag(x_1, x_2, 1 - x_1 - x_2)`.
    Classical2p,
    /// `diag(x, 1 - x)`.
    ClassicalCoin,
    /// `U(x) ρ₀ U(x)†` with `U = exp(-i(x_1 σx + x_2 σy)/2)` and
    /// `ρ₀ = (I + s σz)/2`. No analytic tangent; finite differences only.
    Unitary2p { purity: f64 },
    /// `exp(-i x h·σ/2) ρ₀ exp(i x h·σ/2)` with `ρ₀ = (I + r₀·σ)/2`.
    UnitaryQubit1p {
        initial: [f64; 3],
        generator: [f64; 3],
    },
}

impl ModelKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelKind::PureQubit => "pure_qubit",
            ModelKind::NoisyQubit { .. } => "noisy_qubit",
            ModelKind::Bloch3p => "bloch_3p",
            ModelKind::BlochXz => "bloch_xz",
            ModelKind::Classical2p => "classical_2p",
            ModelKind::ClassicalCoin => "classical_coin",
            ModelKind::Unitary2p { .. } => "unitary_2p",
            ModelKind::UnitaryQubit1p { .. } => "unitary_qubit_1p",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ModelKind::NoisyQubit { visibility } => {
                if !(*visibility > 0.0 && *visibility <= 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "noisy_qubit visibility must lie in (0, 1], got {visibility}"
                    )));
                }
            }
            ModelKind::Unitary2p { purity } => {
                if !(*purity > 0.0 && *purity < 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "unitary_2p purity must lie in (0, 1), got {purity}"
                    )));
                }
            }
            ModelKind::UnitaryQubit1p { initial, generator } => {
                if norm3(initial) > 1.0 {
                    return Err(Error::InvalidInput(
                        "unitary_qubit_1p initial Bloch vector must have length <= 1".into(),
                    ));
                }
                if norm3(generator) == 0.0 {
                    return Err(Error::InvalidInput(
                        "unitary_qubit_1p generator must be nonzero".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    fmath::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
}

/// A named parametrized family `x ↦ ρ_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateModel {
    name: String,
    kind: ModelKind,
    mode: DerivativeMode,
    richardson: bool,
}

/// Default visibility of `noisy_qubit`.
pub const DEFAULT_VISIBILITY: f64 = 0.8;
/// Default Bloch length of the `unitary_2p` reference state.
pub const DEFAULT_UNITARY_PURITY: f64 = 0.6;

impl StateModel {
    pub fn new(name: impl Into<String>, kind: ModelKind) -> Result<Self> {
        kind.validate()?;
        let mode = if matches!(kind, ModelKind::Unitary2p { .. }) {
            DerivativeMode::FiniteDifference
        } else {
            DerivativeMode::Analytic
        };
        Ok(StateModel {
            name: name.into(),
            kind,
            mode,
            richardson: false,
        })
    }

    /// Uses finite differences even when an analytic tangent exists.
    pub fn with_derivative_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = if self.has_analytic_tangent() {
            mode
        } else {
            DerivativeMode::FiniteDifference
        };
        self
    }

    /// Enables Richardson extrapolation of finite-difference tangents.
    pub fn with_richardson(mut self, on: bool) -> Self {
        self.richardson = on;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn has_analytic_tangent(&self) -> bool {
        !matches!(self.kind, ModelKind::Unitary2p { .. })
    }

    /// Number of parameters.
    pub fn n(&self) -> usize {
        match self.kind {
            ModelKind::PureQubit | ModelKind::NoisyQubit { .. } => 2,
            ModelKind::Bloch3p => 3,
            ModelKind::BlochXz | ModelKind::Classical2p | ModelKind::Unitary2p { .. } => 2,
            ModelKind::ClassicalCoin | ModelKind::UnitaryQubit1p { .. } => 1,
        }
    }

    /// Hilbert-space dimension.
    pub fn d(&self) -> usize {
        match self.kind {
            ModelKind::Classical2p => 3,
            _ => 2,
        }
    }

    pub fn parameter_names(&self) -> Vec<&'static str> {
        match self.kind {
            ModelKind::PureQubit | ModelKind::NoisyQubit { .. } => vec!["theta", "phi"],
            ModelKind::Bloch3p => vec!["r_x", "r_y", "r_z"],
            ModelKind::BlochXz => vec!["r_x", "r_z"],
            ModelKind::Classical2p | ModelKind::Unitary2p { .. } => vec!["x1", "x2"],
            ModelKind::ClassicalCoin | ModelKind::UnitaryQubit1p { .. } => vec!["x"],
        }
    }

    /// Per-parameter open intervals.
    pub fn domain(&self) -> Vec<(f64, f64)> {
        match self.kind {
            ModelKind::PureQubit | ModelKind::NoisyQubit { .. } => vec![(0.0, PI), (-PI, PI)],
            ModelKind::Bloch3p => vec![(-1.0, 1.0); 3],
            ModelKind::BlochXz => vec![(-1.0, 1.0); 2],
            ModelKind::Classical2p => vec![(0.01, 0.98); 2],
            ModelKind::ClassicalCoin => vec![(0.01, 0.99)],
            ModelKind::Unitary2p { .. } => vec![(-1.2, 1.2); 2],
            ModelKind::UnitaryQubit1p { .. } => vec![(-PI, PI)],
        }
    }

    /// Checks `x` against the box and any joint constraint of the family.
    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::InvalidInput(format!(
                "model {} takes {} parameters, got {}",
                self.name,
                self.n(),
                x.len()
            )));
        }
        let names = self.parameter_names();
        for (j, (&v, &(lo, hi))) in x.iter().zip(self.domain().iter()).enumerate() {
            if !(v > lo && v < hi) {
                return Err(Error::Domain {
                    name: names[j].to_string(),
                    value: v,
                    domain: format!("({lo}, {hi})"),
                });
            }
        }
        match self.kind {
            ModelKind::Bloch3p | ModelKind::BlochXz => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 >= 1.0 {
                    return Err(Error::Domain {
                        name: "|r|".into(),
                        value: fmath::sqrt(r2),
                        domain: "[0, 1)".into(),
                    });
                }
            }
            ModelKind::Classical2p if x[0] + x[1] >= 0.99 => {
                return Err(Error::Domain {
                    name: "x1+x2".into(),
                    value: x[0] + x[1],
                    domain: "(0.02, 0.99)".into(),
                });
            }
            _ => {}
        }
        Ok(())
    }

    /// `ρ_x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<DensityMatrix> {
        self.check_domain(x)?;
        DensityMatrix::new(HermitianOperator::from_hermitian_part(&self.raw_state(x)))
    }

    /// `∂ρ/∂x_j` for every `j`, analytic when available.
    pub fn tangent(&self, x: &[f64]) -> Result<TangentData> {
        self.check_domain(x)?;
        match self.mode {
            DerivativeMode::Analytic => self.analytic_tangent(x),
            DerivativeMode::FiniteDifference => {
                if self.richardson {
                    self.richardson_tangent(x, 1.0)
                } else {
                    self.finite_difference_tangent(x, 1.0)
                }
            }
        }
    }

    /// Central differences with step `scale · 1e-5 · max(1, |x_j|)`.
    pub fn finite_difference_tangent(&self, x: &[f64], scale: f64) -> Result<TangentData> {
        self.check_domain(x)?;
        let mut ops = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let h = scale * 1e-5 * x[j].abs().max(1.0);
            ops.push(self.central_difference(x, j, h)?);
        }
        TangentData::new(ops)
    }

    /// Richardson-extrapolated central differences `(4 D(h/2) - D(h)) / 3`.
    pub fn richardson_tangent(&self, x: &[f64], scale: f64) -> Result<TangentData> {
        self.check_domain(x)?;
        let mut ops = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let h = scale * 1e-5 * x[j].abs().max(1.0);
            let coarse = self.central_difference(x, j, h)?;
            let fine = self.central_difference(x, j, 0.5 * h)?;
            ops.push(fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0)));
        }
        TangentData::new(ops)
    }

    fn central_difference(&self, x: &[f64], j: usize, h: f64) -> Result<HermitianOperator> {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[j] += h;
        minus[j] -= h;
        self.check_domain(&plus)?;
        self.check_domain(&minus)?;
        let diff = &self.raw_state(&plus) - &self.raw_state(&minus);
        Ok(HermitianOperator::from_hermitian_part(
            &diff.scale_real(0.5 / h),
        ))
    }

    fn analytic_tangent(&self, x: &[f64]) -> Result<TangentData> {
        let s = pauli();
        let bloch_dir = |v: [f64; 3]| -> HermitianOperator {
            let mut m = ComplexMatrix::zeros(2, 2);
            for k in 0..3 {
                m = &m + &s[k].scale_real(0.5 * v[k]);
            }
            HermitianOperator::from_hermitian_part(&m)
        };
        let ops = match &self.kind {
            ModelKind::PureQubit | ModelKind::NoisyQubit { .. } => {
                let eta = self.visibility();
                let (th, ph) = (x[0], x[1]);
                let d_theta = [
                    eta * fmath::cos(th) * fmath::cos(ph),
                    eta * fmath::cos(th) * fmath::sin(ph),
                    -eta * fmath::sin(th),
                ];
                let d_phi = [
                    -eta * fmath::sin(th) * fmath::sin(ph),
                    eta * fmath::sin(th) * fmath::cos(ph),
                    0.0,
                ];
                vec![bloch_dir(d_theta), bloch_dir(d_phi)]
            }
            ModelKind::Bloch3p => (0..3)
                .map(|k| {
                    let mut v = [0.0; 3];
                    v[k] = 1.0;
                    bloch_dir(v)
                })
                .collect(),
            ModelKind::BlochXz => vec![bloch_dir([1.0, 0.0, 0.0]), bloch_dir([0.0, 0.0, 1.0])],
            ModelKind::Classical2p => vec![
                HermitianOperator::diag(&[1.0, 0.0, -1.0]),
                HermitianOperator::diag(&[0.0, 1.0, -1.0]),
            ],
            ModelKind::ClassicalCoin => vec![HermitianOperator::diag(&[1.0, -1.0])],
            ModelKind::UnitaryQubit1p { generator, .. } => {
                // ∂ρ = -i [H, ρ_x] with H = h·σ/2
                let h = bloch_dir(*generator).sub(&HermitianOperator::identity(2).scale(0.5));
                let rho = self.raw_state(x);
                let comm = h.commutator(&rho).scale(C64::new(0.0, -1.0));
                vec![HermitianOperator::from_hermitian_part(&comm)]
            }
            ModelKind::Unitary2p { .. } => {
                return self.finite_difference_tangent(x, 1.0);
            }
        };
        TangentData::new(ops)
    }

    fn visibility(&self) -> f64 {
        match self.kind {
            ModelKind::NoisyQubit { visibility } => visibility,
            _ => 1.0,
        }
    }

    /// The state matrix without domain checks or validation.
    fn raw_state(&self, x: &[f64]) -> ComplexMatrix {
        match &self.kind {
            ModelKind::PureQubit | ModelKind::NoisyQubit { .. } => {
                let eta = self.visibility();
                let (th, ph) = (x[0], x[1]);
                bloch_operator([
                    eta * fmath::sin(th) * fmath::cos(ph),
                    eta * fmath::sin(th) * fmath::sin(ph),
                    eta * fmath::cos(th),
                ])
            }
            ModelKind::Bloch3p => bloch_operator([x[0], x[1], x[2]]),
            ModelKind::BlochXz => bloch_operator([x[0], 0.0, x[1]]),
            ModelKind::Classical2p => ComplexMatrix::diag_real(&[x[0], x[1], 1.0 - x[0] - x[1]]),
            ModelKind::ClassicalCoin => ComplexMatrix::diag_real(&[x[0], 1.0 - x[0]]),
            ModelKind::Unitary2p { purity } => {
                let u = su2_rotation([x[0], x[1], 0.0]);
                let rho0 = bloch_operator([0.0, 0.0, *purity]);
                &(&u * &rho0) * &u.adjoint()
            }
            ModelKind::UnitaryQubit1p { initial, generator } => {
                let u = su2_rotation([
                    x[0] * generator[0],
                    x[0] * generator[1],
                    x[0] * generator[2],
                ]);
                let rho0 = bloch_operator(*initial);
                &(&u * &rho0) * &u.adjoint()
            }
        }
    }

    /// A point drawn uniformly from the domain shrunk by `margin` of each
    /// interval's width, rejecting points that violate joint constraints.
    pub fn random_point(&self, seed: u64, margin: f64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let dom = self.domain();
        loop {
            let x: Vec<f64> = dom
                .iter()
                .map(|&(lo, hi)| {
                    let w = hi - lo;
                    rng.random_range((lo + margin * w)..(hi - margin * w))
                })
                .collect();
            let ok = match self.kind {
                ModelKind::Bloch3p | ModelKind::BlochXz => {
                    x.iter().map(|v| v * v).sum::<f64>() < (1.0 - margin) * (1.0 - margin)
                }
                ModelKind::Classical2p => x[0] + x[1] < 0.99 - margin,
                _ => true,
            };
            if ok {
                return x;
            }
        }
    }
}

/// `exp(-i a·σ/2)` in closed form.
fn su2_rotation(a: [f64; 3]) -> ComplexMatrix {
    let t = norm3(&a);
    let s = pauli();
    let (c, sinc_half) = if t < 1e-8 {
        (1.0 - t * t / 8.0, 0.5 - t * t / 48.0)
    } else {
        (fmath::cos(0.5 * t), fmath::sin(0.5 * t) / t)
    };
    let mut gen = ComplexMatrix::zeros(2, 2);
    for k in 0..3 {
        gen = &gen + &s[k].scale_real(a[k]);
    }
    &ComplexMatrix::identity(2).scale_real(c) - &gen.scale(C64::new(0.0, sinc_half))
}

/// The built-in model registry.
pub fn registry() -> Vec<StateModel> {
    let entries = [
        ("pure_qubit", ModelKind::PureQubit),
        (
            "noisy_qubit",
            ModelKind::NoisyQubit {
                visibility: DEFAULT_VISIBILITY,
            },
        ),
        ("bloch_3p", ModelKind::Bloch3p),
        ("classical_2p", ModelKind::Classical2p),
        (
            "unitary_2p",
            ModelKind::Unitary2p {
                purity: DEFAULT_UNITARY_PURITY,
            },
        ),
        ("bloch_xz", ModelKind::BlochXz),
        ("classical_coin", ModelKind::ClassicalCoin),
        (
            "unitary_qubit_1p",
            ModelKind::UnitaryQubit1p {
                initial: [0.0, 0.0, 0.7],
                generator: [1.0, 0.0, 0.0],
            },
        ),
    ];
    entries
        .into_iter()
        .map(|(name, kind)| StateModel::new(name, kind).expect("registry constants are valid"))
        .collect()
}

/// Names of the registry models, in registry order.
pub fn registry_names() -> Vec<String> {
    registry().iter().map(|m| m.name().to_string()).collect()
}

pub fn lookup(name: &str) -> Result<StateModel> {
    registry()
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::ModelNotFound {
            name: name.to_string(),
            available: registry_names().join(", "),
        })
}
