//! Symmetric logarithmic derivatives and Fisher information.

use alloc::format;
use alloc::vec::Vec;

use crate::fmath;
use crate::measurement::Povm;
use crate::models::{DensityMatrix, StateModel, TangentData};
use crate::numlin::{
    eig_hermitian, local_sum, ComplexMatrix, HermitianOperator, Limits, RealMatrix, C64,
};
use crate::{Error, Result};

/// Largest kernel-to-kernel tangent component tolerated by [`sld`].
pub const KERNEL_TANGENT_TOL: f64 = 1e-8;
/// Outcomes with smaller probability are skipped by [`cfim`].
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Largest condition number accepted by [`reparametrized_slds`].
pub const MAX_METRIC_CONDITION: f64 = 1e12;
const TANGENT_TRACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherKind {
    Quantum,
    Classical,
}

/// Real symmetric Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    matrix: RealMatrix,
    kind: FisherKind,
    p: usize,
}

impl FisherMatrix {
    pub fn new(matrix: RealMatrix, kind: FisherKind, p: usize) -> Self {
        FisherMatrix {
            matrix: matrix.symmetrized(),
            kind,
            p,
        }
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> RealMatrix {
        self.matrix
    }

    pub fn kind(&self) -> FisherKind {
        self.kind
    }

    /// Number of copies the matrix refers to.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn inverse(&self) -> Result<RealMatrix> {
        self.matrix.inverse_spd(MAX_METRIC_CONDITION)
    }

    pub fn inverse_sqrt(&self) -> Result<RealMatrix> {
        self.matrix.inverse_sqrt_spd(MAX_METRIC_CONDITION)
    }
}

/// SLDs `L_j` of a state, one per parameter.
///
/// Components on `ker ρ × ker ρ` are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SldSet {
    ops: Vec<HermitianOperator>,
    p: usize,
    reparametrized: bool,
}

impl SldSet {
    pub fn from_ops(ops: Vec<HermitianOperator>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidInput("SLD list is empty".into()));
        }
        Ok(SldSet {
            ops,
            p: 1,
            reparametrized: false,
        })
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

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_reparametrized(&self) -> bool {
        self.reparametrized
    }

    /// `Σ_k a_jk L_k` for each row `j` of `a`.
    pub fn linear_combination(&self, a: &RealMatrix) -> SldSet {
        let ops = (0..a.rows())
            .map(|j| {
                let mut m = ComplexMatrix::zeros(self.dim(), self.dim());
                for k in 0..a.cols() {
                    m = &m + &self.ops[k].scale_real(a[(j, k)]);
                }
                HermitianOperator::from_hermitian_part(&m)
            })
            .collect();
        SldSet {
            ops,
            p: self.p,
            reparametrized: self.reparametrized,
        }
    }
}

/// SLD of `ρ` along the tangent `∂ρ`, with the kernel block set to zero.
pub fn sld(rho: &DensityMatrix, d_rho: &HermitianOperator) -> Result<HermitianOperator> {
    if d_rho.dim() != rho.dim() {
        return Err(Error::InvalidInput(format!(
            "tangent dimension {} does not match state dimension {}",
            d_rho.dim(),
            rho.dim()
        )));
    }
    let tr = d_rho.trace().norm();
    if tr > TANGENT_TRACE_TOL {
        return Err(Error::InvalidInput(format!(
            "tangent is not traceless (|Tr| = {tr:e})"
        )));
    }
    let v = rho.eigenvectors();
    let lam = rho.eigenvalues();
    let tol = rho.support_threshold();
    let a = &(&v.adjoint() * d_rho.matrix()) * v;
    let d = rho.dim();
    let mut l = ComplexMatrix::zeros(d, d);
    let mut worst = 0.0f64;
    for r in 0..d {
        for s in 0..d {
            let denom = lam[r] + lam[s];
            if denom > tol {
                l[(r, s)] = a[(r, s)] * (2.0 / denom);
            } else {
                worst = worst.max(a[(r, s)].norm());
            }
        }
    }
    if worst > KERNEL_TANGENT_TOL {
        return Err(Error::InconsistentTangent(worst));
    }
    Ok(HermitianOperator::from_hermitian_part(
        &(&(v * &l) * &v.adjoint()),
    ))
}

/// SLDs for every tangent direction.
pub fn slds(rho: &DensityMatrix, tangent: &TangentData) -> Result<SldSet> {
    let ops = tangent
        .ops()
        .iter()
        .map(|t| sld(rho, t))
        .collect::<Result<Vec<_>>>()?;
    SldSet::from_ops(ops)
}

/// Largest `‖∂_jρ − ½(ρL_j + L_jρ)‖_F` over `j`.
pub fn sld_residual(rho: &DensityMatrix, tangent: &TangentData, slds: &SldSet) -> f64 {
    tangent
        .ops()
        .iter()
        .zip(slds.ops())
        .map(|(t, l)| {
            let sym = rho.operator().anticommutator(l).scale_real(0.5);
            (t.matrix() - &sym).frobenius_norm()
        })
        .fold(0.0, f64::max)
}

/// `Tr(ρ L_j L_k)` for all pairs.
fn rho_products(rho: &DensityMatrix, slds: &SldSet) -> Vec<Vec<C64>> {
    let n = slds.len();
    let rl: Vec<ComplexMatrix> = slds
        .ops()
        .iter()
        .map(|l| rho.operator().matrix() * l.matrix())
        .collect();
    (0..n)
        .map(|j| (0..n).map(|k| rl[j].trace_product(slds.get(k))).collect())
        .collect()
}

/// `F_Q[j][k] = ½ Tr[ρ {L_j, L_k}]`.
pub fn qfim(rho: &DensityMatrix, slds: &SldSet) -> FisherMatrix {
    let t = rho_products(rho, slds);
    let n = slds.len();
    FisherMatrix::new(
        RealMatrix::from_fn(n, n, |j, k| t[j][k].re),
        FisherKind::Quantum,
        slds.p(),
    )
}

/// `F_Im[j][k] = Im Tr(ρ L_j L_k)`, real antisymmetric.
pub fn f_im(rho: &DensityMatrix, slds: &SldSet) -> RealMatrix {
    let t = rho_products(rho, slds);
    let n = slds.len();
    let raw = RealMatrix::from_fn(n, n, |j, k| t[j][k].im);
    RealMatrix::from_fn(n, n, |j, k| 0.5 * (raw[(j, k)] - raw[(k, j)]))
}

/// Classical Fisher information of `povm` on `ρ`, or on `ρ^{⊗p}` when the
/// POVM acts on `p` copies.
pub fn cfim(rho: &DensityMatrix, tangent: &TangentData, povm: &Povm) -> Result<FisherMatrix> {
    let (state, tan) = if povm.dim() == rho.dim() {
        (None, None)
    } else if povm.local_dim() == rho.dim() && povm.p() > 1 {
        let limits = Limits::new(povm.dim().max(crate::numlin::DEFAULT_MAX_DIM));
        (
            Some(rho.tensor_power(povm.p(), &limits)?),
            Some(tangent.tensor_power(rho, povm.p(), &limits)?),
        )
    } else {
        return Err(Error::InvalidInput(format!(
            "POVM dimension {} does not match state dimension {}",
            povm.dim(),
            rho.dim()
        )));
    };
    let state = state.as_ref().unwrap_or(rho);
    let tan = tan.as_ref().unwrap_or(tangent);
    Ok(classical_fisher(state, tan, povm))
}

fn classical_fisher(rho: &DensityMatrix, tangent: &TangentData, povm: &Povm) -> FisherMatrix {
    let n = tangent.len();
    let mut f = RealMatrix::zeros(n, n);
    let mut dp = alloc::vec![0.0; n];
    for m in povm.elements() {
        let prob = rho.expectation(m);
        if prob < PROBABILITY_FLOOR {
            continue;
        }
        for (j, t) in tangent.ops().iter().enumerate() {
            dp[j] = t.trace_product_real(m);
        }
        for j in 0..n {
            for k in 0..n {
                f[(j, k)] += dp[j] * dp[k] / prob;
            }
        }
    }
    FisherMatrix::new(f, FisherKind::Classical, povm.p())
}

/// Bures distance `√(2 − 2 Tr√(√ρ₁ ρ₂ √ρ₁))`.
pub fn bures_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::InvalidInput(format!(
            "dimensions {} and {} differ",
            rho1.dim(),
            rho2.dim()
        )));
    }
    let s = rho1.sqrt();
    let inner = s.sandwich_by(rho2.operator());
    let fidelity: f64 = eig_hermitian(&inner)
        .values
        .iter()
        .map(|&l| fmath::sqrt(l.max(0.0)))
        .sum();
    let fidelity = fidelity.clamp(0.0, 1.0);
    Ok(fmath::sqrt((2.0 - 2.0 * fidelity).max(0.0)))
}

/// `L̃_j = Σ_k (F_Q^{-½})_jk L_k`, the SLDs in coordinates where `F̃_Q = I`.
pub fn reparametrized_slds(slds: &SldSet, fq: &FisherMatrix) -> Result<SldSet> {
    if fq.n() != slds.len() {
        return Err(Error::InvalidInput(format!(
            "metric is {}x{} but there are {} SLDs",
            fq.n(),
            fq.n(),
            slds.len()
        )));
    }
    let w = fq.inverse_sqrt()?;
    let mut out = slds.linear_combination(&w);
    out.reparametrized = true;
    Ok(out)
}

/// SLDs of `ρ^{⊗p}`: `L_jp = Σ_i I ⊗ … ⊗ L_j ⊗ … ⊗ I`.
pub fn tensor_slds(slds: &SldSet, p: usize, limits: &Limits) -> Result<SldSet> {
    if p == 0 {
        return Err(Error::InvalidInput("copy count must be at least 1".into()));
    }
    if p == 1 {
        return Ok(slds.clone());
    }
    let ops = slds
        .ops()
        .iter()
        .map(|l| {
            Ok(HermitianOperator::from_hermitian_part(&local_sum(
                l.matrix(),
                p,
                limits,
            )?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SldSet {
        ops,
        p: slds.p() * p,
        reparametrized: slds.reparametrized,
    })
}

/// Commutation diagnostics of a set of SLDs.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    /// `max |⟨Ψ_r|[L_j, L_k]|Ψ_s⟩|` over support eigenvectors.
    pub partial_max: f64,
    /// `max |Tr(ρ [L_j, L_k])|`.
    pub weak_max: f64,
    pub tolerance: f64,
}

impl CommutatorReport {
    pub fn partial_commutative(&self) -> bool {
        self.partial_max <= self.tolerance
    }

    pub fn weak_commutative(&self) -> bool {
        self.weak_max <= self.tolerance
    }
}

pub fn commutator_report(rho: &DensityMatrix, slds: &SldSet) -> CommutatorReport {
    let v = rho.eigenvectors();
    let support = rho.support();
    let n = slds.len();
    let mut partial = 0.0f64;
    let mut weak = 0.0f64;
    for j in 0..n {
        for k in (j + 1)..n {
            let c = slds.get(j).commutator(slds.get(k));
            let cb = &(&v.adjoint() * &c) * v;
            for &r in &support {
                for &s in &support {
                    partial = partial.max(cb[(r, s)].norm());
                }
            }
            weak = weak.max(rho.operator().trace_product(&c).norm());
        }
    }
    CommutatorReport {
        partial_max: partial,
        weak_max: weak,
        tolerance: 1e-9,
    }
}

/// State, tangents, SLDs and QFIM of a model at one point.
#[derive(Debug, Clone)]
pub struct ModelPoint {
    pub rho: DensityMatrix,
    pub tangent: TangentData,
    pub slds: SldSet,
    pub fq: FisherMatrix,
}

impl ModelPoint {
    pub fn new(model: &StateModel, x: &[f64]) -> Result<Self> {
        Self::from_state(model.evaluate(x)?, model.tangent(x)?)
    }

    pub fn from_state(rho: DensityMatrix, tangent: TangentData) -> Result<Self> {
        let slds = slds(&rho, &tangent)?;
        let fq = qfim(&rho, &slds);
        Ok(ModelPoint {
            rho,
            tangent,
            slds,
            fq,
        })
    }

    pub fn n(&self) -> usize {
        self.slds.len()
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// The `p`-copy point, with SLDs built as local sums.
    pub fn tensor_power(&self, p: usize, limits: &Limits) -> Result<Self> {
        if p == 1 {
            return Ok(self.clone());
        }
        let rho = self.rho.tensor_power(p, limits)?;
        let tangent = self.tangent.tensor_power(&self.rho, p, limits)?;
        let slds = tensor_slds(&self.slds, p, limits)?;
        let fq = qfim(&rho, &slds);
        Ok(ModelPoint {
            rho,
            tangent,
            slds,
            fq,
        })
    }

    pub fn reparametrized_slds(&self) -> Result<SldSet> {
        reparametrized_slds(&self.slds, &self.fq)
    }

    pub fn f_im(&self) -> RealMatrix {
        f_im(&self.rho, &self.slds)
    }
}
