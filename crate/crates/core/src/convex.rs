//! Covariance lower bounds from minimizations over locally unbiased
//! observable tuples: Holevo, Nagaoka (two parameters) and the frame-based
//! `A_u` family.
//!
//! Tuples are parametrized by affine coordinates on the constraint set, so
//! every iterate is feasible. The trace-norm terms are smoothed
//! (`σ → √(σ² + μ²) − μ`) and minimized by BFGS while `μ` is lowered stage by
//! stage; the reported value is the exact objective at the final iterate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::Frame;
use crate::fisher::{qfim, slds, FisherMatrix};
use crate::fmath;
use crate::measurement::Povm;
use crate::models::{DensityMatrix, TangentData};
use crate::numlin::{
    anti_hermitian_trace_norm, eig_hermitian, ComplexMatrix, HermitianOperator, RealMatrix, C64,
};
use crate::rng::{derive_seed, gaussian_vector, rng_from_seed};
use crate::{Error, Result};

const FEASIBILITY_TOL: f64 = 1e-8;

/// Orthonormal (Hilbert–Schmidt) Hermitian basis of `d × d` matrices:
/// off-diagonal symmetric and antisymmetric generators, `d − 1` traceless
/// diagonals, then `I/√d`.
pub fn gell_mann_basis(d: usize) -> Vec<HermitianOperator> {
    let mut out = Vec::with_capacity(d * d);
    let r = fmath::sqrt(0.5);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = ComplexMatrix::zeros(d, d);
            s[(j, k)] = C64::new(r, 0.0);
            s[(k, j)] = C64::new(r, 0.0);
            out.push(HermitianOperator::from_hermitian_part(&s));
            let mut a = ComplexMatrix::zeros(d, d);
            a[(j, k)] = C64::new(0.0, -r);
            a[(k, j)] = C64::new(0.0, r);
            out.push(HermitianOperator::from_hermitian_part(&a));
        }
    }
    for l in 1..d {
        let norm = fmath::sqrt((l * (l + 1)) as f64);
        let mut v = vec![0.0; d];
        for x in v.iter_mut().take(l) {
            *x = 1.0 / norm;
        }
        v[l] = -(l as f64) / norm;
        out.push(HermitianOperator::diag(&v));
    }
    out.push(HermitianOperator::identity(d).scale(1.0 / fmath::sqrt(d as f64)));
    out
}

/// Observables `X_1..X_n` of a candidate estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorTuple {
    pub ops: Vec<HermitianOperator>,
}

impl EstimatorTuple {
    /// Largest violation of `Tr(ρX_j) = 0`, `Tr(∂_kρ X_j) = δ_jk`.
    pub fn residual(&self, rho: &DensityMatrix, tangent: &TangentData) -> f64 {
        let mut worst = 0.0f64;
        for (j, x) in self.ops.iter().enumerate() {
            worst = worst.max(rho.expectation(x).abs());
            for (k, t) in tangent.ops().iter().enumerate() {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((t.trace_product_real(x) - target).abs());
            }
        }
        worst
    }
}

/// Affine space of locally unbiased tuples: `X_j = X⁰_j + Σ_a c_ja E_a`.
#[derive(Debug, Clone)]
pub struct UnbiasedSpace {
    particular: EstimatorTuple,
    /// Orthonormal basis of `{Y : Tr(ρY) = 0, Tr(∂_kρ Y) = 0 ∀k}`.
    basis: Vec<HermitianOperator>,
    fq: FisherMatrix,
}

impl UnbiasedSpace {
    pub fn new(rho: &DensityMatrix, tangent: &TangentData) -> Result<Self> {
        let l = slds(rho, tangent)?;
        let fq = qfim(rho, &l);
        let inv = fq
            .inverse()
            .map_err(|e| Error::Infeasible(format!("{e}")))?;
        let particular = EstimatorTuple {
            ops: l.linear_combination(&inv).ops().to_vec(),
        };
        let res = particular.residual(rho, tangent);
        if res > FEASIBILITY_TOL {
            return Err(Error::Infeasible(format!(
                "particular solution violates the constraints by {res:e}"
            )));
        }
        let d = rho.dim();
        let gm = gell_mann_basis(d);
        let n = tangent.len();
        let mut rows: Vec<&HermitianOperator> = vec![rho.operator()];
        rows.extend(tangent.ops());
        let c = RealMatrix::from_fn(n + 1, gm.len(), |i, b| rows[i].trace_product_real(&gm[b]));
        let ctc = &c.transpose() * &c;
        let (vals, vecs) = ctc.sym_eigen();
        let cut = 1e-10 * vals.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
        let basis = (0..gm.len())
            .filter(|&i| vals[i] <= cut)
            .map(|i| {
                let mut m = ComplexMatrix::zeros(d, d);
                for (b, g) in gm.iter().enumerate() {
                    m = &m + &g.scale_real(vecs[(b, i)]);
                }
                HermitianOperator::from_hermitian_part(&m)
            })
            .collect();
        Ok(UnbiasedSpace {
            particular,
            basis,
            fq,
        })
    }

    pub fn n(&self) -> usize {
        self.particular.ops.len()
    }

    pub fn particular(&self) -> &EstimatorTuple {
        &self.particular
    }

    /// Basis of the single-observable homogeneous space.
    pub fn basis(&self) -> &[HermitianOperator] {
        &self.basis
    }

    /// Dimension of the homogeneous tuple space, `n · dim(basis)`.
    pub fn homogeneous_dim(&self) -> usize {
        self.n() * self.basis.len()
    }

    pub fn fq(&self) -> &FisherMatrix {
        &self.fq
    }

    /// Tuple at affine coordinates `c` (length [`homogeneous_dim`](Self::homogeneous_dim)).
    pub fn tuple(&self, c: &[f64]) -> EstimatorTuple {
        let m = self.basis.len();
        let ops = self
            .particular
            .ops
            .iter()
            .enumerate()
            .map(|(j, x0)| {
                let mut x = x0.matrix().clone();
                for a in 0..m {
                    x = &x + &self.basis[a].scale_real(c[j * m + a]);
                }
                HermitianOperator::from_hermitian_part(&x)
            })
            .collect();
        EstimatorTuple { ops }
    }

    /// Coordinates of an operator gradient `(G_1..G_n)`: `Tr(G_j E_a)`.
    fn project(&self, g: &[ComplexMatrix]) -> Vec<f64> {
        let m = self.basis.len();
        let mut out = vec![0.0; self.n() * m];
        for (j, gj) in g.iter().enumerate() {
            for a in 0..m {
                out[j * m + a] = gj.trace_product(&self.basis[a]).re;
            }
        }
        out
    }
}

/// `Z_jk = Tr(ρ X_j X_k)` and its real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct HolevoData {
    pub z: ComplexMatrix,
    pub re: RealMatrix,
    pub im: RealMatrix,
}

pub fn holevo_data(rho: &DensityMatrix, tuple: &EstimatorTuple) -> HolevoData {
    let n = tuple.ops.len();
    let z = ComplexMatrix::from_fn(n, n, |j, k| {
        (rho.operator().matrix() * tuple.ops[j].matrix()).trace_product(&tuple.ops[k])
    });
    HolevoData {
        re: RealMatrix::from_fn(n, n, |j, k| 0.5 * (z[(j, k)].re + z[(k, j)].re)),
        im: RealMatrix::from_fn(n, n, |j, k| 0.5 * (z[(j, k)].im - z[(k, j)].im)),
        z,
    }
}

// ---------------------------------------------------------------------------
// Objectives

/// `Σ_i (√(s_i² + μ²) − μ)` over singular values of a real antisymmetric
/// matrix and its gradient `M (MᵀM + μ²)^{-½}`; `μ = 0` gives the exact
/// trace norm and no gradient.
fn antisym_trace_norm(m: &RealMatrix, mu: f64) -> (f64, Option<RealMatrix>) {
    let im = m.to_complex().scale(C64::new(0.0, 1.0));
    let e = eig_hermitian(&HermitianOperator::from_hermitian_part(&im));
    if mu == 0.0 {
        return (e.values.iter().map(|l| l.abs()).sum(), None);
    }
    let v = e
        .values
        .iter()
        .map(|l| fmath::sqrt(l * l + mu * mu) - mu)
        .sum();
    let mtm = (&m.transpose() * m).symmetrized();
    let root = mtm.sym_map(|s| 1.0 / fmath::sqrt(s.max(0.0) + mu * mu));
    (v, Some(m * &root))
}

#[derive(Debug, Clone)]
enum ObjectiveKind {
    /// `Tr[W Re Z] + ‖√W Im Z √W‖₁` with `Z_jk = Tr(σ1 X_jX_k) + Tr(σ2 X_kX_j)`.
    Framework {
        s1: ComplexMatrix,
        s2: Option<ComplexMatrix>,
        w: RealMatrix,
        sqrt_w: RealMatrix,
    },
    /// `Tr(ρX_1²) + Tr(ρX_2²) + ‖√ρ[X_1,X_2]√ρ‖₁`.
    Nagaoka {
        rho: ComplexMatrix,
        sqrt_rho: ComplexMatrix,
    },
}

impl ObjectiveKind {
    /// Smoothed value and operator gradient for `μ > 0`; exact value for `μ = 0`.
    fn eval(&self, xs: &[ComplexMatrix], mu: f64) -> (f64, Option<Vec<ComplexMatrix>>) {
        match self {
            ObjectiveKind::Framework { s1, s2, w, sqrt_w } => {
                let n = xs.len();
                let s1x: Vec<ComplexMatrix> = xs.iter().map(|x| s1 * x).collect();
                let s2x: Option<Vec<ComplexMatrix>> =
                    s2.as_ref().map(|s| xs.iter().map(|x| s * x).collect());
                let z = ComplexMatrix::from_fn(n, n, |j, k| {
                    let mut v = s1x[j].trace_product(&xs[k]);
                    if let Some(s2x) = &s2x {
                        v += s2x[k].trace_product(&xs[j]);
                    }
                    v
                });
                let re = RealMatrix::from_fn(n, n, |j, k| 0.5 * (z[(j, k)].re + z[(k, j)].re));
                let im = RealMatrix::from_fn(n, n, |j, k| 0.5 * (z[(j, k)].im - z[(k, j)].im));
                let m = &(sqrt_w * &im) * sqrt_w;
                let (tn, psi) = antisym_trace_norm(&m, mu);
                let value = (w * &re).trace() + tn;
                let Some(psi) = psi else { return (value, None) };
                let pmat = &(sqrt_w * &psi) * sqrt_w;
                // c = W − iP; G_m = herm(Σ_k c_mk (X_kσ1 + σ2X_k) + Σ_j c_jm (σ1X_j + X_jσ2))
                let c = ComplexMatrix::from_fn(n, n, |j, k| C64::new(w[(j, k)], -pmat[(j, k)]));
                let x_s1: Vec<ComplexMatrix> = xs.iter().map(|x| x * s1).collect();
                let x_s2: Option<Vec<ComplexMatrix>> =
                    s2.as_ref().map(|s| xs.iter().map(|x| x * s).collect());
                let d = xs[0].rows();
                let grads = (0..n)
                    .map(|mi| {
                        let mut g = ComplexMatrix::zeros(d, d);
                        for k in 0..n {
                            g = &g + &x_s1[k].scale(c[(mi, k)]);
                            g = &g + &s1x[k].scale(c[(k, mi)]);
                            if let (Some(s2x), Some(x_s2)) = (&s2x, &x_s2) {
                                g = &g + &s2x[k].scale(c[(mi, k)]);
                                g = &g + &x_s2[k].scale(c[(k, mi)]);
                            }
                        }
                        g.hermitian_part()
                    })
                    .collect();
                (value, Some(grads))
            }
            ObjectiveKind::Nagaoka { rho, sqrt_rho } => {
                let (x1, x2) = (&xs[0], &xs[1]);
                let rx1 = rho * x1;
                let rx2 = rho * x2;
                let quad = rx1.trace_product(x1).re + rx2.trace_product(x2).re;
                let k = &(sqrt_rho * &x1.commutator(x2)) * sqrt_rho;
                if mu == 0.0 {
                    return (quad + anti_hermitian_trace_norm(&k), None);
                }
                let ik = HermitianOperator::from_hermitian_part(&k.scale(C64::new(0.0, 1.0)));
                let e = eig_hermitian(&ik);
                let tn: f64 = e
                    .values
                    .iter()
                    .map(|l| fmath::sqrt(l * l + mu * mu) - mu)
                    .sum();
                // Φ = K (K†K + μ²)^{-½}, and K†K = (iK)²
                let root = e.map(|l| 1.0 / fmath::sqrt(l * l + mu * mu));
                let phi = &k * root.matrix();
                let p = &(sqrt_rho * &phi.adjoint()) * sqrt_rho;
                let g1 = &(&(x2 * &p) - &(&p * x2)).hermitian_part() + &(&rx1 + &(x1 * rho));
                let g2 = &(&(&p * x1) - &(x1 * &p)).hermitian_part() + &(&rx2 + &(x2 * rho));
                (quad + tn, Some(vec![g1, g2]))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Solver

/// Solver settings; also the CLI solver-config block.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// BFGS iterations per smoothing stage.
    pub max_iters: usize,
    pub mu_schedule: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Stage-to-stage change of the exact objective that ends the schedule.
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 500,
            mu_schedule: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
            restarts: 1,
            seed: 0,
            tolerance: 1e-7,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.mu_schedule.is_empty() || self.mu_schedule.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidInput(
                "mu_schedule must be non-empty and positive".into(),
            ));
        }
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidInput(
                "max_iters and restarts must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a convex minimization.
#[derive(Debug, Clone)]
pub struct ConvexBound {
    /// Exact objective at the final iterate (an upper estimate of the infimum).
    pub value: f64,
    pub tuple: EstimatorTuple,
    pub coordinates: Vec<f64>,
    /// Smoothing parameter of the last stage run.
    pub final_mu: f64,
    pub stages: usize,
    pub iterations: usize,
    /// Length of the last accepted step.
    pub final_step: f64,
    /// Upper bound on the smoothing error at the final stage.
    pub gap_proxy: f64,
    /// Best value of each restart.
    pub restart_values: Vec<f64>,
}

struct Problem<'a> {
    space: &'a UnbiasedSpace,
    kind: ObjectiveKind,
    /// Dimension of the trace-norm argument; bounds the smoothing error.
    smoothing_rank: usize,
}

impl Problem<'_> {
    fn ops(&self, c: &[f64]) -> Vec<ComplexMatrix> {
        self.space
            .tuple(c)
            .ops
            .into_iter()
            .map(|o| o.into_matrix())
            .collect()
    }

    fn exact(&self, c: &[f64]) -> f64 {
        self.kind.eval(&self.ops(c), 0.0).0
    }

    fn smoothed(&self, c: &[f64], mu: f64) -> (f64, Vec<f64>) {
        let (v, g) = self.kind.eval(&self.ops(c), mu);
        (
            v,
            self.space
                .project(&g.expect("smoothed objective has a gradient")),
        )
    }
}

struct BfgsOutcome {
    x: Vec<f64>,
    iterations: usize,
    last_step: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bfgs(f: impl Fn(&[f64]) -> (f64, Vec<f64>), x0: Vec<f64>, max_iters: usize) -> BfgsOutcome {
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut h = RealMatrix::identity(n);
    let mut fresh = true;
    let mut last_step = 0.0;
    let mut iterations = 0;
    for _ in 0..max_iters {
        let gnorm = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gnorm < 1e-12 {
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = h.mul_vec(&g).iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            h = RealMatrix::identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let (ft, gt) = f(&xt);
            if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                accepted = Some((xt, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if fresh {
                break;
            }
            // retry once along steepest descent
            h = RealMatrix::identity(n);
            fresh = true;
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        last_step = fmath::sqrt(dot(&s, &s));
        let sy = dot(&s, &y);
        if sy > 1e-14 * fmath::sqrt(dot(&s, &s) * dot(&y, &y)) && sy > 0.0 {
            if fresh {
                let scale = sy / dot(&y, &y);
                h = RealMatrix::identity(n).scale(scale);
                fresh = false;
            }
            let hy = h.mul_vec(&y);
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            let mut hn = h.clone();
            for i in 0..n {
                for j in 0..n {
                    hn[(i, j)] +=
                        rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
            h = hn.symmetrized();
        }
        let decrease = fx - fnew;
        x = xn;
        fx = fnew;
        g = gn;
        if decrease <= 1e-16 * fx.abs().max(1.0) && last_step < 1e-12 {
            break;
        }
    }
    BfgsOutcome {
        x,
        iterations,
        last_step,
    }
}

fn solve(problem: &Problem, cfg: &SolverConfig) -> Result<ConvexBound> {
    cfg.validate()?;
    let dim = problem.space.homogeneous_dim();
    let mut best: Option<ConvexBound> = None;
    let mut restart_values = Vec::new();
    let mut total_iters = 0;
    let mut any_converged = false;
    for r in 0..cfg.restarts {
        let mut c = if r == 0 {
            vec![0.0; dim]
        } else {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, r as u64));
            gaussian_vector(&mut rng, dim)
        };
        let mut prev = problem.exact(&c);
        let mut stages = 0;
        let mut iterations = 0;
        let mut final_step = 0.0;
        let mut final_mu = cfg.mu_schedule[0];
        let mut converged = dim == 0;
        if dim > 0 {
            for &mu in &cfg.mu_schedule {
                let out = bfgs(|x| problem.smoothed(x, mu), c.clone(), cfg.max_iters);
                stages += 1;
                iterations += out.iterations;
                final_step = out.last_step;
                final_mu = mu;
                let exact = problem.exact(&out.x);
                // keep the better iterate; smoothing can only bias by rank·μ
                if exact <= prev {
                    c = out.x;
                }
                let change = (prev - exact).abs();
                prev = problem.exact(&c);
                if change < cfg.tolerance && stages > 1 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                // the schedule ran out; accept if the last stage barely moved
                converged = final_mu * problem.smoothing_rank as f64 <= cfg.tolerance;
            }
        }
        any_converged |= converged;
        total_iters += iterations;
        let value = problem.exact(&c);
        restart_values.push(value);
        let cand = ConvexBound {
            value,
            tuple: problem.space.tuple(&c),
            coordinates: c,
            final_mu,
            stages,
            iterations,
            final_step,
            gap_proxy: problem.smoothing_rank as f64 * final_mu,
            restart_values: Vec::new(),
        };
        if best.as_ref().is_none_or(|b| cand.value < b.value) {
            best = Some(cand);
        }
    }
    let mut best = best.expect("at least one restart");
    best.iterations = total_iters;
    best.restart_values = restart_values;
    if !any_converged {
        return Err(Error::Convergence {
            best: best.value,
            iterations: total_iters,
        });
    }
    Ok(best)
}

fn check_weight(w: &RealMatrix, n: usize) -> Result<RealMatrix> {
    if w.rows() != n || w.cols() != n {
        return Err(Error::InvalidInput(format!(
            "weight matrix must be {n}x{n}"
        )));
    }
    if w.symmetry_deviation() > 1e-12 * w.max_abs().max(1.0) {
        return Err(Error::InvalidInput("weight matrix is not symmetric".into()));
    }
    w.sqrt_psd()
        .map_err(|_| Error::InvalidInput("weight matrix is not positive semidefinite".into()))
}

/// Holevo bound `min Tr[W Re Z] + ‖√W Im Z √W‖₁`.
pub fn holevo_bound(
    rho: &DensityMatrix,
    tangent: &TangentData,
    w: &RealMatrix,
    cfg: &SolverConfig,
) -> Result<ConvexBound> {
    let space = UnbiasedSpace::new(rho, tangent)?;
    let sqrt_w = check_weight(w, space.n())?;
    let problem = Problem {
        kind: ObjectiveKind::Framework {
            s1: rho.operator().matrix().clone(),
            s2: None,
            w: w.symmetrized(),
            sqrt_w,
        },
        smoothing_rank: space.n(),
        space: &space,
    };
    solve(&problem, cfg)
}

/// Nagaoka bound `min Tr(ρX_1²) + Tr(ρX_2²) + ‖√ρ[X_1,X_2]√ρ‖₁`.
pub fn nagaoka_bound(
    rho: &DensityMatrix,
    tangent: &TangentData,
    cfg: &SolverConfig,
) -> Result<ConvexBound> {
    if tangent.len() != 2 {
        return Err(Error::UnsupportedArity {
            expected: 2,
            got: tangent.len(),
        });
    }
    let space = UnbiasedSpace::new(rho, tangent)?;
    let problem = Problem {
        kind: ObjectiveKind::Nagaoka {
            rho: rho.operator().matrix().clone(),
            sqrt_rho: rho.sqrt().into_matrix(),
        },
        smoothing_rank: rho.dim(),
        space: &space,
    };
    solve(&problem, cfg)
}

/// `σ1 = √ρ P_id √ρ` and `σ2 = √ρ P_T √ρ`, where `P_T` collects the frame
/// vectors whose `A_u` enters transposed.
fn frame_weights(
    rho: &DensityMatrix,
    frame: &Frame,
    mask: &[bool],
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if frame.dim() != rho.dim() {
        return Err(Error::InvalidInput(format!(
            "frame dimension {} does not match state dimension {}",
            frame.dim(),
            rho.dim()
        )));
    }
    if mask.len() != frame.len() {
        return Err(Error::InvalidInput(format!(
            "mask has {} entries for {} frame vectors",
            mask.len(),
            frame.len()
        )));
    }
    let d = rho.dim();
    let mut p_id = ComplexMatrix::zeros(d, d);
    let mut p_t = ComplexMatrix::zeros(d, d);
    for (u, &t) in frame.vectors().iter().zip(mask) {
        let proj = ComplexMatrix::outer(u, u);
        if t {
            p_t = &p_t + &proj;
        } else {
            p_id = &p_id + &proj;
        }
    }
    let s = rho.sqrt();
    Ok((
        &(s.matrix() * &p_id) * s.matrix(),
        &(s.matrix() * &p_t) * s.matrix(),
    ))
}

/// Frame bound `min Tr[W Ā_Re] + ‖√W Ā_Im √W‖₁` with
/// `Ā = Σ_q A_{u_q}` (or `A_{u_q}ᵀ` where `mask[q]`) and
/// `(A_u)_jk = ⟨u|√ρ X_jX_k √ρ|u⟩`.
pub fn general_framework_bound(
    rho: &DensityMatrix,
    tangent: &TangentData,
    w: &RealMatrix,
    frame: &Frame,
    mask: &[bool],
    cfg: &SolverConfig,
) -> Result<ConvexBound> {
    let space = UnbiasedSpace::new(rho, tangent)?;
    let sqrt_w = check_weight(w, space.n())?;
    let (s1, s2) = frame_weights(rho, frame, mask)?;
    let problem = Problem {
        kind: ObjectiveKind::Framework {
            s1,
            s2: if mask.iter().any(|&t| t) {
                Some(s2)
            } else {
                None
            },
            w: w.symmetrized(),
            sqrt_w,
        },
        smoothing_rank: space.n(),
        space: &space,
    };
    solve(&problem, cfg)
}

/// Exact Holevo objective of a given tuple.
pub fn holevo_objective(
    rho: &DensityMatrix,
    tuple: &EstimatorTuple,
    w: &RealMatrix,
) -> Result<f64> {
    let sqrt_w = check_weight(w, tuple.ops.len())?;
    let kind = ObjectiveKind::Framework {
        s1: rho.operator().matrix().clone(),
        s2: None,
        w: w.clone(),
        sqrt_w,
    };
    let xs: Vec<ComplexMatrix> = tuple.ops.iter().map(|o| o.matrix().clone()).collect();
    Ok(kind.eval(&xs, 0.0).0)
}

/// Exact Nagaoka objective of a given pair.
pub fn nagaoka_objective(rho: &DensityMatrix, tuple: &EstimatorTuple) -> Result<f64> {
    if tuple.ops.len() != 2 {
        return Err(Error::UnsupportedArity {
            expected: 2,
            got: tuple.ops.len(),
        });
    }
    let kind = ObjectiveKind::Nagaoka {
        rho: rho.operator().matrix().clone(),
        sqrt_rho: rho.sqrt().into_matrix(),
    };
    let xs: Vec<ComplexMatrix> = tuple.ops.iter().map(|o| o.matrix().clone()).collect();
    Ok(kind.eval(&xs, 0.0).0)
}

/// Exact frame objective of a given tuple.
pub fn framework_objective(
    rho: &DensityMatrix,
    tuple: &EstimatorTuple,
    w: &RealMatrix,
    frame: &Frame,
    mask: &[bool],
) -> Result<f64> {
    let sqrt_w = check_weight(w, tuple.ops.len())?;
    let (s1, s2) = frame_weights(rho, frame, mask)?;
    let kind = ObjectiveKind::Framework {
        s1,
        s2: Some(s2),
        w: w.clone(),
        sqrt_w,
    };
    let xs: Vec<ComplexMatrix> = tuple.ops.iter().map(|o| o.matrix().clone()).collect();
    Ok(kind.eval(&xs, 0.0).0)
}

// ---------------------------------------------------------------------------
// Dominance of Cov_u over A_u

/// `X_j = Σ_α (x̂_j(α) − x_j) M_α` for per-outcome offsets `x̂(α) − x`.
pub fn estimator_observables(povm: &Povm, offsets: &[Vec<f64>]) -> Result<EstimatorTuple> {
    if offsets.len() != povm.outcomes() {
        return Err(Error::InvalidInput(format!(
            "{} estimator values for {} outcomes",
            offsets.len(),
            povm.outcomes()
        )));
    }
    let n = offsets.first().map(|o| o.len()).unwrap_or(0);
    let d = povm.dim();
    let ops = (0..n)
        .map(|j| {
            let mut x = ComplexMatrix::zeros(d, d);
            for (m, off) in povm.elements().iter().zip(offsets) {
                x = &x + &m.scale_real(off[j]);
            }
            HermitianOperator::from_hermitian_part(&x)
        })
        .collect();
    Ok(EstimatorTuple { ops })
}

/// `(Cov_u)_jk = Σ_α δ_j(α) δ_k(α) ⟨u|√ρ M_α √ρ|u⟩` and
/// `(A_u)_jk = ⟨u|√ρ X_j X_k √ρ|u⟩`.
fn cov_and_a(
    sqrt_rho: &HermitianOperator,
    povm: &Povm,
    offsets: &[Vec<f64>],
    tuple: &EstimatorTuple,
    u: &[C64],
) -> (ComplexMatrix, ComplexMatrix) {
    let n = tuple.ops.len();
    let su = sqrt_rho.mul_vec(u);
    let mut cov = ComplexMatrix::zeros(n, n);
    for (m, off) in povm.elements().iter().zip(offsets) {
        let wgt = m.sandwich(&su, &su).re;
        for j in 0..n {
            for k in 0..n {
                cov[(j, k)] += C64::new(off[j] * off[k] * wgt, 0.0);
            }
        }
    }
    let xs: Vec<Vec<C64>> = tuple.ops.iter().map(|x| x.mul_vec(&su)).collect();
    let a = ComplexMatrix::from_fn(n, n, |j, k| {
        xs[j].iter().zip(&xs[k]).map(|(p, q)| p.conj() * q).sum()
    });
    (cov, a)
}

/// Minimum eigenvalues of `Cov_u − A_u` and `Cov_u − A_uᵀ` for an estimator
/// given by its per-outcome offsets `x̂(α) − x`.
pub fn verify_dominance(
    rho: &DensityMatrix,
    tangent: &TangentData,
    povm: &Povm,
    offsets: &[Vec<f64>],
    u: &[C64],
) -> Result<(f64, f64)> {
    if povm.dim() != rho.dim() || u.len() != rho.dim() {
        return Err(Error::InvalidInput(
            "POVM, state and vector dimensions differ".into(),
        ));
    }
    let tuple = estimator_observables(povm, offsets)?;
    let res = tuple.residual(rho, tangent);
    if res > FEASIBILITY_TOL {
        return Err(Error::NotLocallyUnbiased(res));
    }
    let (cov, a) = cov_and_a(&rho.sqrt(), povm, offsets, &tuple, u);
    let m1 = HermitianOperator::from_hermitian_part(&(&cov - &a));
    let m2 = HermitianOperator::from_hermitian_part(&(&cov - &a.transpose()));
    Ok((eig_hermitian(&m1).min(), eig_hermitian(&m2).min()))
}

/// `max |Σ_q Cov_{u_q} − Cov(x̂)|` over entries, for a resolution `{u_q}`.
pub fn resolution_deviation(
    rho: &DensityMatrix,
    povm: &Povm,
    offsets: &[Vec<f64>],
    frame: &Frame,
) -> Result<f64> {
    let tuple = estimator_observables(povm, offsets)?;
    let n = tuple.ops.len();
    let s = rho.sqrt();
    let mut total = ComplexMatrix::zeros(n, n);
    for u in frame.vectors() {
        total = &total + &cov_and_a(&s, povm, offsets, &tuple, u).0;
    }
    let probs = povm.probabilities(rho)?;
    let cov = ComplexMatrix::from_fn(n, n, |j, k| {
        C64::new(
            probs
                .iter()
                .zip(offsets)
                .map(|(p, o)| p * o[j] * o[k])
                .sum(),
            0.0,
        )
    });
    Ok((&total - &cov).max_abs())
}
