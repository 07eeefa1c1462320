//! POVMs and the search for `Γ_p = max Tr[(p F_Q)^{-1} F_Cp]`.
//!
//! The optimizer works with rank-one POVMs written as the rows `v_α` of an
//! isometry `V` (`K × D`, `V†V = I`), so `M_α = v_α† v_α` and
//! `p_α = v_α ρ v_α†`. It ascends the objective with Riemannian gradient
//! steps on the complex Stiefel manifold, retracting by re-orthonormalizing
//! the columns.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::fisher::{cfim, FisherKind, FisherMatrix, ModelPoint, PROBABILITY_FLOOR};
use crate::fmath;
use crate::models::{DensityMatrix, StateModel};
use crate::numlin::{
    eig_hermitian, kron, orthonormalize_columns, ComplexMatrix, HermitianOperator, Limits,
    RealMatrix, C64,
};
use crate::rng::{derive_seed, gaussian_matrix, rng_from_seed, QigRng};
use crate::{Error, Result};

const POVM_PSD_TOL: f64 = -1e-9;
const COMPLETENESS_TOL: f64 = 1e-8;

/// A POVM `{M_α}` on `p` copies of a `local_dim`-dimensional system.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianOperator>,
    local_dim: usize,
    p: usize,
    isometry: Option<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>, local_dim: usize, p: usize) -> Result<Self> {
        let povm = Povm {
            elements,
            local_dim,
            p,
            isometry: None,
        };
        povm.validate()?;
        Ok(povm)
    }

    /// Single-copy POVM on the elements' own dimension.
    pub fn from_elements(elements: Vec<HermitianOperator>) -> Result<Self> {
        let d = elements.first().map(|m| m.dim()).unwrap_or(0);
        Self::new(elements, d, 1)
    }

    /// Rank-one POVM with `M_α = v_α† v_α` for the rows `v_α` of `v`.
    pub fn from_isometry(v: ComplexMatrix, local_dim: usize, p: usize) -> Result<Self> {
        let elements = (0..v.rows())
            .map(|a| {
                let row = v.row(a);
                let col: Vec<C64> = row.iter().map(|z| z.conj()).collect();
                HermitianOperator::rank_one(&col, 1.0)
            })
            .collect();
        let povm = Povm {
            elements,
            local_dim,
            p,
            isometry: Some(v),
        };
        povm.validate()?;
        Ok(povm)
    }

    pub fn computational_basis(dim: usize) -> Self {
        Povm::from_isometry(ComplexMatrix::identity(dim), dim, 1).expect("identity is complete")
    }

    fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        if self.local_dim < 1 || self.p < 1 {
            return Err(Error::InvalidPovm(
                "dimension and locality must be positive".into(),
            ));
        }
        let dim = self
            .local_dim
            .checked_pow(self.p as u32)
            .unwrap_or(usize::MAX);
        if self.elements.iter().any(|m| m.dim() != dim) {
            return Err(Error::InvalidPovm(format!(
                "elements must be {dim}x{dim} for local dimension {} and p = {}",
                self.local_dim, self.p
            )));
        }
        for (a, m) in self.elements.iter().enumerate() {
            let lo = eig_hermitian(m).min();
            if lo < POVM_PSD_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {a} has eigenvalue {lo:e}"
                )));
            }
        }
        let dev = self.completeness_deviation();
        if dev > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to the identity only within {dev:e}"
            )));
        }
        Ok(())
    }

    /// `max |Σ_α M_α − I|`.
    pub fn completeness_deviation(&self) -> f64 {
        let d = self.dim();
        let mut s = ComplexMatrix::zeros(d, d);
        for m in &self.elements {
            s = &s + m.matrix();
        }
        (&s - &ComplexMatrix::identity(d)).max_abs()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn isometry(&self) -> Option<&ComplexMatrix> {
        self.isometry.as_ref()
    }

    /// Outcome probabilities `Tr(ρ M_α)`, clamped at zero.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "POVM dimension {} does not match state dimension {}",
                self.dim(),
                rho.dim()
            )));
        }
        Ok(self
            .elements
            .iter()
            .map(|m| rho.expectation(m).max(0.0))
            .collect())
    }
}

/// `{A_α ⊗ B_β}`, acting on `a.p() + b.p()` copies.
pub fn product_povm(a: &Povm, b: &Povm) -> Result<Povm> {
    if a.local_dim != b.local_dim {
        return Err(Error::InvalidInput(
            "product POVM factors need the same local dimension".into(),
        ));
    }
    let p = a.p + b.p;
    if let (Some(va), Some(vb)) = (&a.isometry, &b.isometry) {
        return Povm::from_isometry(kron(va, vb), a.local_dim, p);
    }
    let mut elements = Vec::with_capacity(a.outcomes() * b.outcomes());
    for ma in &a.elements {
        for mb in &b.elements {
            elements.push(HermitianOperator::from_hermitian_part(&kron(ma, mb)));
        }
    }
    Povm::new(elements, a.local_dim, p)
}

/// `p`-fold product of a single-copy POVM.
pub fn repeated_povm(a: &Povm, p: usize) -> Result<Povm> {
    let mut out = a.clone();
    for _ in 1..p {
        out = product_povm(&out, a)?;
    }
    Ok(out)
}

/// Random `K`-outcome POVM from a Gaussian isometry `dim → K·dim`; the
/// elements are the Gram matrices `B_α† B_α` of its `dim × dim` blocks.
pub fn random_povm(dim: usize, k: usize, seed: u64, limits: &Limits) -> Result<Povm> {
    if k < 2 {
        return Err(Error::InvalidInput(
            "a random POVM needs at least 2 outcomes".into(),
        ));
    }
    limits.check(k.saturating_mul(dim))?;
    let mut rng = rng_from_seed(seed);
    let b = random_isometry(&mut rng, k * dim, dim)?;
    let elements = (0..k)
        .map(|a| {
            let block = ComplexMatrix::from_fn(dim, dim, |r, c| b[(a * dim + r, c)]);
            HermitianOperator::from_hermitian_part(&(&block.adjoint() * &block))
        })
        .collect();
    Povm::new(elements, dim, 1)
}

/// Projective measurement onto a Haar-like random orthonormal basis.
pub fn random_projective_povm(dim: usize, seed: u64) -> Result<Povm> {
    let mut rng = rng_from_seed(seed);
    let u = random_isometry(&mut rng, dim, dim)?;
    Povm::from_isometry(u, dim, 1)
}

fn random_isometry(rng: &mut QigRng, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    for _ in 0..8 {
        if let Some(q) = orthonormalize_columns(&gaussian_matrix(rng, rows, cols)) {
            return Ok(q);
        }
    }
    Err(Error::SearchFailed(
        "could not draw a full-rank Gaussian matrix".into(),
    ))
}

/// Rank-one POVM onto the columns of a unitary (rows `u_i†`).
fn basis_isometry(u: &ComplexMatrix) -> ComplexMatrix {
    u.adjoint()
}

/// Projectors onto the eigenvectors of `l`.
pub fn sld_eigenbasis_povm(rho: &DensityMatrix, l: &HermitianOperator) -> Result<Povm> {
    if rho.dim() != l.dim() {
        return Err(Error::InvalidInput(format!(
            "SLD dimension {} does not match state dimension {}",
            l.dim(),
            rho.dim()
        )));
    }
    Povm::from_isometry(basis_isometry(&eig_hermitian(l).vectors), rho.dim(), 1)
}

/// `Tr[(p F_Q)^{-1} F_Cp]` for a POVM on `p = povm.p()` copies.
pub fn gamma_of(model: &StateModel, x: &[f64], povm: &Povm) -> Result<f64> {
    let pt = ModelPoint::new(model, x)?;
    gamma_of_point(&pt, povm)
}

pub fn gamma_of_point(pt: &ModelPoint, povm: &Povm) -> Result<f64> {
    if povm.local_dim() != pt.dim() {
        return Err(Error::InvalidInput(format!(
            "POVM local dimension {} does not match model dimension {}",
            povm.local_dim(),
            pt.dim()
        )));
    }
    let fc = cfim(&pt.rho, &pt.tangent, povm)?;
    let g = pt.fq.inverse()?;
    Ok((&g * fc.matrix()).trace() / povm.p() as f64)
}

// ---------------------------------------------------------------------------
// Search

/// Quantity maximized by [`optimize_gamma`].
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `Γ_p = Tr[(p F_Q)^{-1} F_Cp]`.
    Gamma,
    /// Minimizes the per-copy weighted Cramér–Rao value `p·Tr[W F_Cp^{-1}]`.
    WeightedCrb(RealMatrix),
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Outcome count `K`; `None` means `(d^p)²`.
    pub outcomes: Option<usize>,
    /// Random starting isometries, in addition to the structured ones.
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    pub objective: Objective,
    /// Start from the eigenbases of `ρ^{⊗p}` and of each `L_jp`.
    pub structured_starts: bool,
    /// Extra starting POVMs (rank-one, with an isometry) on `p` copies.
    pub warm_starts: Vec<Povm>,
    pub limits: Limits,
    /// Stop when the Riemannian gradient norm falls below this.
    pub gradient_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            outcomes: None,
            restarts: 4,
            iters: 200,
            seed: 0,
            objective: Objective::Gamma,
            structured_starts: true,
            warm_starts: Vec::new(),
            limits: Limits::default(),
            gradient_tol: 1e-10,
        }
    }
}

/// Best measurement found by [`optimize_gamma`]. This is a witness, not a
/// certificate of optimality.
#[derive(Debug, Clone)]
pub struct GammaResult {
    pub povm: Povm,
    /// `Γ_p` of the returned POVM.
    pub gamma: f64,
    /// Objective value: `Γ_p`, or `p·Tr[W F_Cp^{-1}]` for the weighted objective.
    pub value: f64,
    pub fc: FisherMatrix,
    /// Final objective value of each trajectory, in start order.
    pub restart_trace: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub p: usize,
}

struct Landscape {
    p: usize,
    rho: ComplexMatrix,
    tangents: Vec<ComplexMatrix>,
    /// `(p F_Q)^{-1}`.
    g_gamma: RealMatrix,
    weight: Option<RealMatrix>,
}

struct Evaluation {
    /// Value to maximize.
    score: f64,
    fc: RealMatrix,
    g: RealMatrix,
    probs: Vec<f64>,
    a: Vec<Vec<f64>>,
    vr: ComplexMatrix,
    vt: Vec<ComplexMatrix>,
}

fn row_inner(x: &ComplexMatrix, v: &ComplexMatrix, a: usize) -> f64 {
    x.row(a)
        .iter()
        .zip(v.row(a))
        .map(|(p, q)| (p * q.conj()).re)
        .sum()
}

impl Landscape {
    fn n(&self) -> usize {
        self.tangents.len()
    }

    fn evaluate(&self, v: &ComplexMatrix) -> Option<Evaluation> {
        let n = self.n();
        let k = v.rows();
        let vr = v * &self.rho;
        let vt: Vec<ComplexMatrix> = self.tangents.iter().map(|t| v * t).collect();
        let mut probs = vec![0.0; k];
        let mut a = vec![vec![0.0; n]; k];
        let mut fc = RealMatrix::zeros(n, n);
        for al in 0..k {
            let pa = row_inner(&vr, v, al);
            probs[al] = pa;
            if pa < PROBABILITY_FLOOR {
                continue;
            }
            for j in 0..n {
                a[al][j] = row_inner(&vt[j], v, al);
            }
            for j in 0..n {
                for l in 0..n {
                    fc[(j, l)] += a[al][j] * a[al][l] / pa;
                }
            }
        }
        let fc = fc.symmetrized();
        let (score, g) = match &self.weight {
            None => ((&self.g_gamma * &fc).trace(), self.g_gamma.clone()),
            Some(w) => {
                let inv = fc.inverse_spd(1e12).ok()?;
                let crb = (w * &inv).trace() * self.p as f64;
                let g = (&(&inv * w) * &inv).scale(self.p as f64).symmetrized();
                (-crb, g)
            }
        };
        if !score.is_finite() {
            return None;
        }
        Some(Evaluation {
            score,
            fc,
            g,
            probs,
            a,
            vr,
            vt,
        })
    }

    /// Euclidean gradient of the score with respect to `V`.
    fn euclidean_gradient(&self, v: &ComplexMatrix, e: &Evaluation) -> ComplexMatrix {
        let (k, d) = (v.rows(), v.cols());
        let mut grad = ComplexMatrix::zeros(k, d);
        for al in 0..k {
            let pa = e.probs[al];
            if pa < PROBABILITY_FLOOR {
                continue;
            }
            let b = e.g.mul_vec(&e.a[al]);
            let s: f64 = b.iter().zip(&e.a[al]).map(|(x, y)| x * y).sum();
            for c in 0..d {
                let mut z = e.vr[(al, c)] * (-s / (pa * pa));
                for (vt, bj) in e.vt.iter().zip(&b) {
                    z += vt[(al, c)] * (2.0 * bj / pa);
                }
                grad[(al, c)] = z * 2.0;
            }
        }
        grad
    }
}

/// `Z − V herm(V†Z)`: projection onto the tangent space of `V†V = I`.
fn project_tangent(v: &ComplexMatrix, z: &ComplexMatrix) -> ComplexMatrix {
    let vz = (&v.adjoint() * z).hermitian_part();
    z - &(v * &vz)
}

struct Trajectory {
    v: ComplexMatrix,
    eval: Evaluation,
    iterations: usize,
}

fn ascend(land: &Landscape, v0: ComplexMatrix, iters: usize, gtol: f64) -> Option<Trajectory> {
    let mut v = v0;
    let mut e = land.evaluate(&v)?;
    let mut step = 0.0f64;
    let mut done = 0;
    for it in 0..iters {
        done = it + 1;
        let xi = project_tangent(&v, &land.euclidean_gradient(&v, &e));
        let gnorm2 = xi.frobenius_norm().powi(2);
        if fmath::sqrt(gnorm2) < gtol {
            break;
        }
        if step == 0.0 {
            step = 0.2 / fmath::sqrt(gnorm2);
        }
        let mut t = step * 2.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial = &v + &xi.scale_real(t);
            if let Some(q) = orthonormalize_columns(&trial) {
                if let Some(te) = land.evaluate(&q) {
                    if te.score >= e.score + 1e-4 * t * gnorm2 {
                        accepted = Some((q, te));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((q, te)) => {
                let gain = te.score - e.score;
                v = q;
                e = te;
                step = t;
                if gain <= 1e-15 * e.score.abs().max(1.0) {
                    break;
                }
            }
            None => break,
        }
    }
    Some(Trajectory {
        v,
        eval: e,
        iterations: done,
    })
}

/// Spreads the rows of a `D × D` basis isometry over `k` rows and perturbs
/// them slightly so identical copies can separate.
fn fine_grain(
    basis_rows: &ComplexMatrix,
    k: usize,
    rng: &mut QigRng,
    noise: f64,
) -> Option<ComplexMatrix> {
    let (m, d) = (basis_rows.rows(), basis_rows.cols());
    let mut out = ComplexMatrix::zeros(k, d);
    // distribute k rows over m basis vectors as evenly as possible
    let mut next = 0;
    for i in 0..m {
        let copies = k / m + usize::from(i < k % m);
        let scale = 1.0 / fmath::sqrt(copies.max(1) as f64);
        for _ in 0..copies {
            for c in 0..d {
                out[(next, c)] = basis_rows[(i, c)] * scale;
            }
            next += 1;
        }
    }
    let jitter = gaussian_matrix(rng, k, d).scale_real(noise / fmath::sqrt((k * d) as f64));
    orthonormalize_columns(&(&out + &jitter))
}

/// Maximizes the objective over `K`-outcome rank-one POVMs on `p` copies.
pub fn optimize_gamma(
    model: &StateModel,
    x: &[f64],
    p: usize,
    cfg: &SearchConfig,
) -> Result<GammaResult> {
    let pt = ModelPoint::new(model, x)?;
    optimize_point(&pt, p, cfg)
}

pub fn optimize_point(pt: &ModelPoint, p: usize, cfg: &SearchConfig) -> Result<GammaResult> {
    if p == 0 {
        return Err(Error::InvalidInput("copy count must be at least 1".into()));
    }
    let d = pt.dim();
    let dim = cfg.limits.power_dim(d, p)?;
    let k = cfg.outcomes.unwrap_or(dim * dim);
    if k < dim {
        return Err(Error::InvalidInput(format!(
            "rank-one search needs at least {dim} outcomes, got {k}"
        )));
    }
    cfg.limits.check(k)?;
    let n = pt.n();
    if let Objective::WeightedCrb(w) = &cfg.objective {
        if w.rows() != n || w.cols() != n {
            return Err(Error::InvalidInput(format!(
                "weight matrix must be {n}x{n}"
            )));
        }
    }
    let big = pt.tensor_power(p, &cfg.limits)?;
    let g_gamma = pt.fq.matrix().scale(p as f64).inverse_spd(1e12)?;
    let land = Landscape {
        p,
        rho: big.rho.operator().matrix().clone(),
        tangents: big
            .tangent
            .ops()
            .iter()
            .map(|t| t.matrix().clone())
            .collect(),
        g_gamma,
        weight: match &cfg.objective {
            Objective::Gamma => None,
            Objective::WeightedCrb(w) => Some(w.symmetrized()),
        },
    };

    let mut starts: Vec<ComplexMatrix> = Vec::new();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, u64::MAX));
    for w in &cfg.warm_starts {
        if w.dim() != dim {
            return Err(Error::InvalidInput(format!(
                "warm-start POVM acts on dimension {}, expected {dim}",
                w.dim()
            )));
        }
        if let Some(iso) = w.isometry() {
            if iso.rows() == k {
                starts.push(iso.clone());
            } else if let Some(v) = fine_grain(iso, k, &mut rng, 1e-3) {
                starts.push(v);
            }
        }
    }
    if cfg.structured_starts {
        let mut bases = vec![big.rho.eigenvectors().clone()];
        for l in big.slds.ops() {
            bases.push(eig_hermitian(l).vectors);
        }
        for b in bases {
            if let Some(v) = fine_grain(&basis_isometry(&b), k, &mut rng, 1e-3) {
                starts.push(v);
            }
        }
    }
    let structured = starts.len();

    let mut best: Option<Trajectory> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let total = structured + cfg.restarts;
    for idx in 0..total {
        let mut traj = None;
        for attempt in 0..5u64 {
            let v0 = match starts.get(idx) {
                Some(s) if attempt == 0 => s.clone(),
                _ => {
                    let mut r = rng_from_seed(derive_seed(cfg.seed, (idx as u64) * 8 + attempt));
                    random_isometry(&mut r, k, dim)?
                }
            };
            if let Some(t) = ascend(&land, v0, cfg.iters, cfg.gradient_tol) {
                traj = Some(t);
                break;
            }
        }
        let Some(t) = traj else { continue };
        iterations += t.iterations;
        trace.push(score_to_value(&cfg.objective, t.eval.score));
        let better = match &best {
            None => true,
            Some(b) => t.eval.score > b.eval.score,
        };
        if better {
            best = Some(t);
        }
    }
    let best = best
        .ok_or_else(|| Error::SearchFailed("every trajectory had a non-finite objective".into()))?;
    let gamma = (&land.g_gamma * &best.eval.fc).trace();
    let povm = Povm::from_isometry(best.v, d, p)?;
    Ok(GammaResult {
        povm,
        gamma,
        value: score_to_value(&cfg.objective, best.eval.score),
        fc: FisherMatrix::new(best.eval.fc, FisherKind::Classical, p),
        restart_trace: trace,
        iterations,
        seed: cfg.seed,
        p,
    })
}

fn score_to_value(obj: &Objective, score: f64) -> f64 {
    match obj {
        Objective::Gamma => score,
        Objective::WeightedCrb(_) => -score,
    }
}

/// Searches `p = 1..=p_max` in turn, seeding each level with products of
/// the best POVMs found at lower levels.
pub fn optimize_hierarchy(
    pt: &ModelPoint,
    p_max: usize,
    cfg: &SearchConfig,
) -> Result<Vec<GammaResult>> {
    let mut results: Vec<GammaResult> = Vec::new();
    for p in 1..=p_max {
        let mut level = cfg.clone();
        level.seed = derive_seed(cfg.seed, p as u64);
        level.warm_starts = cfg
            .warm_starts
            .iter()
            .filter(|w| w.p() == p)
            .cloned()
            .collect();
        for a in 1..=p / 2 {
            let b = p - a;
            let prod = product_povm(&results[b - 1].povm, &results[a - 1].povm)?;
            level.warm_starts.push(prod);
        }
        results.push(optimize_point(pt, p, &level)?);
    }
    Ok(results)
}
