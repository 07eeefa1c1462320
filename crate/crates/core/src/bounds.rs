//! Closed-form upper bounds on `Γ_p` and the covariance conversion.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::fisher::{qfim, FisherMatrix, ModelPoint, SldSet};
use crate::fmath;
use crate::models::DensityMatrix;
use crate::numlin::{
    anti_hermitian_trace_norm, local_sum, orthonormalize_columns, ComplexMatrix, Limits,
    RealMatrix, C64,
};
use crate::rng::{gaussian_matrix, rng_from_seed};
use crate::{Error, Result};

/// Largest number of count vectors enumerated by exact `T_p`.
pub const TP_EXACT_LIMIT: f64 = 1e6;
/// Frames with at most this many transpose masks are searched exhaustively.
pub const EXHAUSTIVE_MASKS: usize = 1024;
/// Random masks tried when the mask space is larger.
pub const RANDOM_MASKS: usize = 64;

/// `max{1/(4(n−1)), (n−2)/(n−1)², 1/5}`.
pub fn f_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "f(n) needs at least 2 parameters, got {n}"
        )));
    }
    let m = (n - 1) as f64;
    Ok((0.25 / m).max((n as f64 - 2.0) / (m * m)).max(0.2))
}

fn clamp_gamma(v: f64, n: usize) -> f64 {
    v.clamp(0.0, n as f64)
}

/// `‖F^{-½} M F^{-½}‖_F²`.
fn whitened_norm2(fq: &FisherMatrix, m: &RealMatrix) -> Result<f64> {
    let w = fq.inverse_sqrt()?;
    Ok((&(&w * m) * &w).frobenius_norm().powi(2))
}

/// `n − f(n) ‖F_Q^{-½} F_Im F_Q^{-½}‖_F²`, valid for pure states at every `p`.
pub fn pure_state_gamma_bound(fq: &FisherMatrix, f_im: &RealMatrix, n: usize) -> Result<f64> {
    let norm2 = whitened_norm2(fq, f_im)?;
    if n < 2 {
        return Ok(n as f64);
    }
    Ok(clamp_gamma(n as f64 - f_n(n)? * norm2, n))
}

/// Symmetric nonnegative commutator matrix (`C_p` or `T_p`).
#[derive(Debug, Clone, PartialEq)]
pub struct CpMatrix {
    pub matrix: RealMatrix,
    pub p: usize,
}

/// `(C_p)_jk = ½ ‖√ρ^{⊗p} [L̃_jp, L̃_kp] √ρ^{⊗p}‖₁`.
pub fn cp_matrix(
    rho: &DensityMatrix,
    slds_tilde: &SldSet,
    p: usize,
    limits: &Limits,
) -> Result<CpMatrix> {
    let big = rho.tensor_power(p, limits)?;
    let s = big.sqrt();
    let n = slds_tilde.len();
    let mut c = RealMatrix::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            // [Σ_i L_j^{(i)}, Σ_i L_k^{(i)}] = Σ_i [L_j, L_k]^{(i)}
            let comm = slds_tilde.get(j).commutator(slds_tilde.get(k));
            let big_comm = local_sum(&comm, p, limits)?;
            let sks = &(s.matrix() * &big_comm) * s.matrix();
            let v = 0.5 * anti_hermitian_trace_norm(&sks);
            c[(j, k)] = v;
            c[(k, j)] = v;
        }
    }
    Ok(CpMatrix { matrix: c, p })
}

/// `n − ‖M/p‖_F² / (4(n−1))`, shared by the `C_p` and `T_p` bounds.
fn commutator_gamma_bound(m: &CpMatrix, n: usize) -> f64 {
    if n < 2 {
        return n as f64;
    }
    let norm2 = m.matrix.scale(1.0 / m.p as f64).frobenius_norm().powi(2);
    clamp_gamma(n as f64 - norm2 / (4.0 * (n - 1) as f64), n)
}

pub fn cp_gamma_bound(cp: &CpMatrix, n: usize) -> f64 {
    commutator_gamma_bound(cp, n)
}

pub fn tp_gamma_bound(tp: &CpMatrix, n: usize) -> f64 {
    commutator_gamma_bound(tp, n)
}

/// `½ |Tr(ρ [L̃_j, L̃_k])|`, the `p → ∞` limit of `C_p / p`.
pub fn cp_limit_matrix(rho: &DensityMatrix, slds_tilde: &SldSet) -> RealMatrix {
    let n = slds_tilde.len();
    let mut m = RealMatrix::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            let comm = slds_tilde.get(j).commutator(slds_tilde.get(k));
            let v = 0.5 * rho.operator().trace_product(&comm).norm();
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TpMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TpResult {
    pub tp: CpMatrix,
    /// Per-entry standard error (Monte-Carlo mode only).
    pub std_error: Option<RealMatrix>,
    /// Count vectors enumerated, or samples drawn.
    pub terms: usize,
}

/// `Im ⟨Ψ_i|[L̃_j, L̃_k]|Ψ_i⟩` over support eigenvectors, for every `j < k`.
type PairTerms = Vec<(usize, usize, Vec<f64>)>;
type BoundResult = Result<(f64, BTreeMap<String, f64>)>;

fn diagonal_commutator_terms(rho: &DensityMatrix, slds_tilde: &SldSet) -> (Vec<f64>, PairTerms) {
    let support = rho.support();
    let lam: Vec<f64> = support.iter().map(|&i| rho.eigenvalues()[i]).collect();
    let n = slds_tilde.len();
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            let comm = slds_tilde.get(j).commutator(slds_tilde.get(k));
            let a = support
                .iter()
                .map(|&i| {
                    let v = rho.eigen().vector(i);
                    comm.sandwich(&v, &v).im
                })
                .collect();
            pairs.push((j, k, a));
        }
    }
    (lam, pairs)
}

/// Number of count vectors `(c_1..c_m)` with `Σ c_i = p`: `C(p+m−1, m−1)`.
pub fn composition_count(p: usize, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let v = fmath::lgamma((p + m) as f64) - fmath::lgamma((p + 1) as f64) - fmath::lgamma(m as f64);
    fmath::exp(v).round()
}

/// Calls `f` with every count vector of length `m` summing to `p`.
fn for_each_composition(p: usize, m: usize, f: &mut impl FnMut(&[usize])) {
    let mut c = vec![0usize; m];
    fn rec(idx: usize, left: usize, c: &mut [usize], f: &mut impl FnMut(&[usize])) {
        if idx + 1 == c.len() {
            c[idx] = left;
            f(c);
            return;
        }
        for v in 0..=left {
            c[idx] = v;
            rec(idx + 1, left - v, c, f);
        }
    }
    if m > 0 {
        rec(0, p, &mut c, f);
    }
}

/// `(T_p)_jk = ½ E|Σ_r ⟨Φ_r|[L̃_j, L̃_k]|Φ_r⟩|` with `Φ_r` drawn independently
/// from the eigenvectors of `ρ` with probabilities `λ_i`.
pub fn tp_matrix(
    rho: &DensityMatrix,
    slds_tilde: &SldSet,
    p: usize,
    mode: TpMode,
) -> Result<TpResult> {
    if p == 0 {
        return Err(Error::InvalidInput("copy count must be at least 1".into()));
    }
    let n = slds_tilde.len();
    let (lam, pairs) = diagonal_commutator_terms(rho, slds_tilde);
    let m = lam.len();
    let mut t = RealMatrix::zeros(n, n);
    match mode {
        TpMode::Exact => {
            let count = composition_count(p, m);
            if count > TP_EXACT_LIMIT {
                return Err(Error::EnumerationTooLarge {
                    count,
                    limit: TP_EXACT_LIMIT,
                });
            }
            let log_lam: Vec<f64> = lam.iter().map(|&l| fmath::ln(l)).collect();
            let lg_p = fmath::lgamma((p + 1) as f64);
            let mut sums = vec![0.0; pairs.len()];
            let mut terms = 0;
            for_each_composition(p, m, &mut |c| {
                terms += 1;
                let mut lw = lg_p;
                for (i, &ci) in c.iter().enumerate() {
                    lw += ci as f64 * log_lam[i] - fmath::lgamma((ci + 1) as f64);
                }
                let w = fmath::exp(lw);
                for (s, (_, _, a)) in sums.iter_mut().zip(&pairs) {
                    let v: f64 = c.iter().zip(a).map(|(&ci, ai)| ci as f64 * ai).sum();
                    *s += w * v.abs();
                }
            });
            for ((j, k, _), s) in pairs.iter().zip(&sums) {
                t[(*j, *k)] = 0.5 * s;
                t[(*k, *j)] = 0.5 * s;
            }
            Ok(TpResult {
                tp: CpMatrix { matrix: t, p },
                std_error: None,
                terms,
            })
        }
        TpMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidInput(
                    "Monte-Carlo T_p needs at least 2 samples".into(),
                ));
            }
            let mut rng = rng_from_seed(seed);
            let total: f64 = lam.iter().sum();
            let mut cdf = Vec::with_capacity(m);
            let mut acc = 0.0;
            for &l in &lam {
                acc += l / total;
                cdf.push(acc);
            }
            let mut sum = vec![0.0; pairs.len()];
            let mut sum2 = vec![0.0; pairs.len()];
            let mut counts = vec![0usize; m];
            for _ in 0..samples {
                counts.iter_mut().for_each(|c| *c = 0);
                for _ in 0..p {
                    let u: f64 = rng.random();
                    let i = cdf.iter().position(|&c| u < c).unwrap_or(m - 1);
                    counts[i] += 1;
                }
                for (q, (_, _, a)) in pairs.iter().enumerate() {
                    let v: f64 = counts.iter().zip(a).map(|(&ci, ai)| ci as f64 * ai).sum();
                    let v = v.abs();
                    sum[q] += v;
                    sum2[q] += v * v;
                }
            }
            let ns = samples as f64;
            let mut se = RealMatrix::zeros(n, n);
            for (q, (j, k, _)) in pairs.iter().enumerate() {
                let mean = sum[q] / ns;
                let var = ((sum2[q] / ns - mean * mean) * ns / (ns - 1.0)).max(0.0);
                t[(*j, *k)] = 0.5 * mean;
                t[(*k, *j)] = 0.5 * mean;
                let e = 0.5 * fmath::sqrt(var / ns);
                se[(*j, *k)] = e;
                se[(*k, *j)] = e;
            }
            Ok(TpResult {
                tp: CpMatrix { matrix: t, p },
                std_error: Some(se),
                terms: samples,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Frame bound

/// A set of vectors `{u_q}` with `Σ_q |u_q⟩⟨u_q| = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    vectors: Vec<Vec<C64>>,
}

impl Frame {
    pub fn new(vectors: Vec<Vec<C64>>) -> Result<Self> {
        let d = vectors.first().map(|v| v.len()).unwrap_or(0);
        if d == 0 || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidInput(
                "frame vectors must share a nonzero length".into(),
            ));
        }
        let mut s = ComplexMatrix::zeros(d, d);
        for v in &vectors {
            s = &s + &ComplexMatrix::outer(v, v);
        }
        let dev = (&s - &ComplexMatrix::identity(d)).max_abs();
        if dev > 1e-8 {
            return Err(Error::InvalidFrame(dev));
        }
        Ok(Frame { vectors })
    }

    /// The columns of a unitary (or of any `D × q` co-isometry).
    pub fn from_columns(u: &ComplexMatrix) -> Result<Self> {
        Self::new((0..u.cols()).map(|c| u.column(c)).collect())
    }

    pub fn computational(dim: usize) -> Self {
        Self::from_columns(&ComplexMatrix::identity(dim)).expect("identity resolves itself")
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }
}

/// Random frame of `q ≥ dim` vectors: the conjugated rows of a Gaussian
/// isometry `dim → q`.
pub fn random_frame(dim: usize, q: usize, seed: u64) -> Result<Frame> {
    if q < dim {
        return Err(Error::InvalidInput(format!(
            "a frame in dimension {dim} needs at least {dim} vectors"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let v = orthonormalize_columns(&gaussian_matrix(&mut rng, q, dim))
        .ok_or_else(|| Error::InvalidInput("degenerate random frame".into()))?;
    Frame::from_columns(&v.adjoint())
}

/// `Im F_{u_q}` for each frame vector, where
/// `(F_u)_jk = ⟨u|√ρ^{⊗p} L_jp L_kp √ρ^{⊗p}|u⟩`.
pub fn frame_imaginary_parts(
    rho: &DensityMatrix,
    slds: &SldSet,
    p: usize,
    frame: &Frame,
    limits: &Limits,
) -> Result<Vec<RealMatrix>> {
    let big = rho.tensor_power(p, limits)?;
    if frame.dim() != big.dim() {
        return Err(Error::InvalidInput(format!(
            "frame dimension {} does not match state dimension {}",
            frame.dim(),
            big.dim()
        )));
    }
    let s = big.sqrt();
    let n = slds.len();
    let lp: Vec<ComplexMatrix> = slds
        .ops()
        .iter()
        .map(|l| local_sum(l.matrix(), p, limits))
        .collect::<Result<_>>()?;
    let ls: Vec<ComplexMatrix> = lp.iter().map(|l| l * s.matrix()).collect();
    Ok(frame
        .vectors()
        .iter()
        .map(|u| {
            let w: Vec<Vec<C64>> = ls.iter().map(|m| m.mul_vec(u)).collect();
            RealMatrix::from_fn(n, n, |j, k| {
                w[j].iter()
                    .zip(&w[k])
                    .map(|(a, b)| a.conj() * b)
                    .sum::<C64>()
                    .im
            })
        })
        .collect())
}

/// `n − f(n) ‖F_Q^{-½} F̄_Imp F_Q^{-½} / p‖_F²` for one frame and transpose mask
/// (`true` uses `F_{u_q}ᵀ`).
pub fn fbar_imp_gamma_bound(
    rho: &DensityMatrix,
    slds: &SldSet,
    p: usize,
    frame: &Frame,
    mask: &[bool],
    limits: &Limits,
) -> Result<f64> {
    if mask.len() != frame.len() {
        return Err(Error::InvalidInput(format!(
            "mask has {} entries for {} frame vectors",
            mask.len(),
            frame.len()
        )));
    }
    let parts = frame_imaginary_parts(rho, slds, p, frame, limits)?;
    let fq = qfim(rho, slds);
    masked_fbar_bound(&fq, &parts, mask, p)
}

fn masked_fbar_bound(
    fq: &FisherMatrix,
    parts: &[RealMatrix],
    mask: &[bool],
    p: usize,
) -> Result<f64> {
    let n = fq.n();
    let mut fbar = RealMatrix::zeros(n, n);
    for (m, &t) in parts.iter().zip(mask) {
        // F_uᵀ = conj(F_u), so transposing flips the imaginary part
        fbar = if t { &fbar - m } else { &fbar + m };
    }
    let norm2 = whitened_norm2(fq, &fbar.scale(1.0 / p as f64))?;
    if n < 2 {
        return Ok(n as f64);
    }
    Ok(clamp_gamma(n as f64 - f_n(n)? * norm2, n))
}

/// Best frame bound over transpose masks: exhaustive up to
/// [`EXHAUSTIVE_MASKS`] masks, else the identity mask plus [`RANDOM_MASKS`]
/// random ones.
pub fn fbar_mask_search(
    rho: &DensityMatrix,
    slds: &SldSet,
    p: usize,
    frame: &Frame,
    seed: u64,
    limits: &Limits,
) -> Result<(f64, Vec<bool>)> {
    let parts = frame_imaginary_parts(rho, slds, p, frame, limits)?;
    let fq = qfim(rho, slds);
    let q = frame.len();
    let mut masks: Vec<Vec<bool>> = Vec::new();
    if q < 11 && (1usize << q) <= EXHAUSTIVE_MASKS {
        for bits in 0..(1usize << q) {
            masks.push((0..q).map(|i| bits >> i & 1 == 1).collect());
        }
    } else {
        let mut rng = rng_from_seed(seed);
        masks.push(vec![false; q]);
        for _ in 0..RANDOM_MASKS {
            masks.push((0..q).map(|_| rng.random::<bool>()).collect());
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    for m in masks {
        let v = masked_fbar_bound(&fq, &parts, &m, p)?;
        if v < best.0 {
            best = (v, m);
        }
    }
    Ok(best)
}

/// Eigenbasis of `ρ^{⊗p}` as a frame.
pub fn eigen_frame(rho: &DensityMatrix, p: usize, limits: &Limits) -> Result<Frame> {
    let big = rho.tensor_power(p, limits)?;
    Frame::from_columns(big.eigenvectors())
}

// ---------------------------------------------------------------------------
// Dimension caps and the covariance conversion

pub fn gill_massar_bound(d: usize) -> f64 {
    d as f64 - 1.0
}

pub fn zhu_hayashi_bound(d: usize) -> f64 {
    1.5 * (d as f64 - 1.0)
}

/// `(Tr √(F_Q^{-½} W F_Q^{-½}))² / D`.
pub fn weighted_cov_lower_bound(w: &RealMatrix, fq: &FisherMatrix, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!(
            "bound D must be positive, got {d}"
        )));
    }
    if w.rows() != fq.n() || w.cols() != fq.n() {
        return Err(Error::InvalidInput(format!(
            "weight matrix must be {0}x{0}",
            fq.n()
        )));
    }
    if w.symmetry_deviation() > 1e-12 * w.max_abs().max(1.0) {
        return Err(Error::InvalidInput("weight matrix is not symmetric".into()));
    }
    if w.min_eigenvalue() < -1e-12 * w.max_abs().max(1.0) {
        return Err(Error::InvalidInput(
            "weight matrix is not positive semidefinite".into(),
        ));
    }
    let s = fq
        .inverse_sqrt()
        .map_err(|e| Error::InvalidInput(format!("{e}")))?;
    let inner = (&(&s * w) * &s).symmetrized();
    let tr: f64 = inner
        .sym_eigen()
        .0
        .iter()
        .map(|&l| fmath::sqrt(l.max(0.0)))
        .sum();
    Ok(tr * tr / d)
}

// ---------------------------------------------------------------------------
// Reports

/// Bound names, in tie-break precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundKind {
    Cp,
    Tp,
    Fbar,
    Pure,
    GillMassar,
    ZhuHayashi,
    Trivial,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Cp => "cp",
            BoundKind::Tp => "tp",
            BoundKind::Fbar => "fbar",
            BoundKind::Pure => "pure",
            BoundKind::GillMassar => "gill_massar",
            BoundKind::ZhuHayashi => "zhu_hayashi",
            BoundKind::Trivial => "trivial",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEntry {
    pub kind: BoundKind,
    pub value: f64,
    pub meta: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub model: String,
    pub x: Vec<f64>,
    pub p: usize,
    pub n: usize,
    pub entries: Vec<BoundEntry>,
    /// Bounds that do not apply or could not be evaluated, with the reason.
    pub skipped: Vec<(BoundKind, String)>,
    /// Dimension caps that exceed the trivial cap `n`.
    pub non_binding: Vec<(BoundKind, f64)>,
}

/// Smallest `Γ_p` bound; ties go to the earlier [`BoundKind`].
pub fn best_gamma_bound(report: &BoundReport) -> (BoundKind, f64) {
    let mut best = (BoundKind::Trivial, report.n as f64);
    for e in &report.entries {
        if e.value < best.1 || (e.value == best.1 && e.kind < best.0) {
            best = (e.kind, e.value);
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct BoundOptions {
    pub limits: Limits,
    /// Monte-Carlo samples used when exact `T_p` enumeration is too large.
    pub tp_samples: usize,
    pub seed: u64,
    /// Random frames tried for the frame bound, besides the eigenbasis frame.
    pub random_frames: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            limits: Limits::default(),
            tp_samples: 100_000,
            seed: 0,
            random_frames: 4,
        }
    }
}

/// Every applicable `Γ_p` bound at one point.
pub fn bound_report(
    pt: &ModelPoint,
    model: &str,
    x: &[f64],
    p: usize,
    opts: &BoundOptions,
) -> BoundReport {
    let n = pt.n();
    let d = pt.dim();
    let mut entries = vec![BoundEntry {
        kind: BoundKind::Trivial,
        value: n as f64,
        meta: BTreeMap::new(),
    }];
    let mut skipped = Vec::new();
    let mut push = |kind: BoundKind, r: BoundResult| match r {
        Ok((value, meta)) => entries.push(BoundEntry { kind, value, meta }),
        Err(e) => skipped.push((kind, e.to_string())),
    };
    let tilde = pt.reparametrized_slds();

    push(
        BoundKind::Cp,
        tilde
            .clone()
            .and_then(|t| cp_matrix(&pt.rho, &t, p, &opts.limits))
            .map(|c| (cp_gamma_bound(&c, n), BTreeMap::new())),
    );

    push(
        BoundKind::Tp,
        tilde.clone().and_then(|t| {
            let r = match tp_matrix(&pt.rho, &t, p, TpMode::Exact) {
                Err(Error::EnumerationTooLarge { .. }) => tp_matrix(
                    &pt.rho,
                    &t,
                    p,
                    TpMode::MonteCarlo {
                        samples: opts.tp_samples,
                        seed: opts.seed,
                    },
                ),
                other => other,
            }?;
            let mut meta = BTreeMap::new();
            meta.insert("terms".to_string(), r.terms as f64);
            if let Some(se) = &r.std_error {
                meta.insert("max_std_error".to_string(), se.max_abs());
            }
            Ok((tp_gamma_bound(&r.tp, n), meta))
        }),
    );

    push(
        BoundKind::Fbar,
        (|| {
            let mut frames = vec![eigen_frame(&pt.rho, p, &opts.limits)?];
            let dim = opts.limits.power_dim(d, p)?;
            for i in 0..opts.random_frames {
                frames.push(random_frame(
                    dim,
                    dim,
                    crate::rng::derive_seed(opts.seed, i as u64),
                )?);
            }
            let mut best = (f64::INFINITY, 0usize);
            for (i, f) in frames.iter().enumerate() {
                let (v, _) = fbar_mask_search(&pt.rho, &pt.slds, p, f, opts.seed, &opts.limits)?;
                if v < best.0 {
                    best = (v, i);
                }
            }
            let mut meta = BTreeMap::new();
            meta.insert("frames".to_string(), frames.len() as f64);
            meta.insert("frame_index".to_string(), best.1 as f64);
            Ok((best.0, meta))
        })(),
    );

    if pt.rho.is_pure() {
        push(
            BoundKind::Pure,
            pure_state_gamma_bound(&pt.fq, &pt.f_im(), n).map(|v| (v, BTreeMap::new())),
        );
    } else {
        push(
            BoundKind::Pure,
            Err(Error::InvalidInput("state is mixed".into())),
        );
    }

    // Gill–Massar applied to the d^p-dimensional p-copy system
    let mut non_binding = Vec::new();
    let mut cap = |kind: BoundKind, value: f64, push: &mut dyn FnMut(BoundKind, BoundResult)| {
        if value <= n as f64 {
            push(kind, Ok((value, BTreeMap::new())));
        } else {
            non_binding.push((kind, value));
        }
    };
    match opts.limits.power_dim(d, p) {
        Ok(dim) => cap(BoundKind::GillMassar, gill_massar_bound(dim), &mut push),
        Err(e) => push(BoundKind::GillMassar, Err(e)),
    }
    if p == 2 {
        cap(BoundKind::ZhuHayashi, zhu_hayashi_bound(d), &mut push);
    } else {
        push(
            BoundKind::ZhuHayashi,
            Err(Error::InvalidInput("requires p = 2".into())),
        );
    }

    BoundReport {
        model: model.to_string(),
        x: x.to_vec(),
        p,
        n,
        entries,
        skipped,
        non_binding,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::commutator_report;
    use crate::models::lookup;
    use crate::numlin::trace_norm;

    fn point(name: &str, x: &[f64]) -> ModelPoint {
        ModelPoint::new(&lookup(name).unwrap(), x).unwrap()
    }

    #[test]
    fn f_n_values() {
        assert_eq!(f_n(2).unwrap(), 0.25);
        assert_eq!(f_n(3).unwrap(), 0.25);
        assert!((f_n(6).unwrap() - 0.2).abs() < 1e-15);
        assert!(f_n(1).is_err());
    }

    #[test]
    fn dimension_caps() {
        assert_eq!((gill_massar_bound(2), zhu_hayashi_bound(2)), (1.0, 1.5));
        assert_eq!((gill_massar_bound(3), zhu_hayashi_bound(3)), (2.0, 3.0));
    }

    #[test]
    fn covariance_conversion_examples() {
        let fq = FisherMatrix::new(
            RealMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap(),
            crate::fisher::FisherKind::Quantum,
            1,
        );
        let v = weighted_cov_lower_bound(fq.matrix(), &fq, 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let id = FisherMatrix::new(
            RealMatrix::identity(3),
            crate::fisher::FisherKind::Quantum,
            1,
        );
        assert!(
            (weighted_cov_lower_bound(&RealMatrix::identity(3), &id, 3.0).unwrap() - 3.0).abs()
                < 1e-12
        );
        assert!(weighted_cov_lower_bound(&RealMatrix::identity(3), &id, 0.0).is_err());
    }

    #[test]
    fn classical_family_has_no_commutator_penalty() {
        let pt = point("classical_2p", &[0.2, 0.3]);
        let t = pt.reparametrized_slds().unwrap();
        for p in 1..=3 {
            let cp = cp_matrix(&pt.rho, &t, p, &Limits::default()).unwrap();
            assert!(cp.matrix.max_abs() < 1e-12);
            assert_eq!(cp_gamma_bound(&cp, 2), 2.0);
            let tp = tp_matrix(&pt.rho, &t, p, TpMode::Exact).unwrap();
            assert!(tp.tp.matrix.max_abs() < 1e-12);
        }
        assert!(cp_limit_matrix(&pt.rho, &t).max_abs() < 1e-12);
        let frame = Frame::computational(3);
        let v = fbar_imp_gamma_bound(
            &pt.rho,
            &pt.slds,
            1,
            &frame,
            &[false; 3],
            &Limits::default(),
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cp_entry_matches_dense_evaluation() {
        let pt = point("noisy_qubit", &[0.7, 0.3]);
        let t = pt.reparametrized_slds().unwrap();
        let lim = Limits::default();
        for p in [1usize, 2] {
            let cp = cp_matrix(&pt.rho, &t, p, &lim).unwrap();
            // dense route: explicit tensor SLDs, full products, general trace norm
            let big = pt.rho.tensor_power(p, &lim).unwrap();
            let s = crate::numlin::psd_sqrt(big.operator()).unwrap();
            let l1 = local_sum(t.get(0).matrix(), p, &lim).unwrap();
            let l2 = local_sum(t.get(1).matrix(), p, &lim).unwrap();
            let comm = &(&l1 * &l2) - &(&l2 * &l1);
            let dense = 0.5 * trace_norm(&(&(s.matrix() * &comm) * s.matrix())).unwrap();
            assert!(cp.matrix[(0, 1)] > 0.0);
            // the Gram-matrix route takes square roots of roundoff near zero
            // singular values, so it is only good to ~1e-8
            assert!(
                (cp.matrix[(0, 1)] - dense).abs() < 1e-7,
                "{} vs {dense}",
                cp.matrix[(0, 1)]
            );
        }
    }

    #[test]
    fn tp_exact_at_one_copy_is_the_single_draw_average() {
        let pt = point("bloch_3p", &[0.2, 0.3, 0.1]);
        let t = pt.reparametrized_slds().unwrap();
        let tp = tp_matrix(&pt.rho, &t, 1, TpMode::Exact).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                if j == k {
                    continue;
                }
                let comm = t.get(j).commutator(t.get(k));
                let direct: f64 = (0..2)
                    .map(|i| {
                        let v = pt.rho.eigen().vector(i);
                        0.5 * pt.rho.eigenvalues()[i] * comm.sandwich(&v, &v).norm()
                    })
                    .sum();
                assert!((tp.tp.matrix[(j, k)] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tp_exact_refuses_huge_enumerations() {
        let pt = point("classical_2p", &[0.2, 0.3]);
        let t = pt.reparametrized_slds().unwrap();
        assert_eq!(composition_count(10, 2), 11.0);
        assert!(matches!(
            tp_matrix(&pt.rho, &t, 3000, TpMode::Exact),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn pure_bound_is_n_without_imaginary_part() {
        let fq = FisherMatrix::new(
            RealMatrix::identity(2),
            crate::fisher::FisherKind::Quantum,
            1,
        );
        assert_eq!(
            pure_state_gamma_bound(&fq, &RealMatrix::zeros(2, 2), 2).unwrap(),
            2.0
        );
    }

    #[test]
    fn random_frames_resolve_identity() {
        let f = random_frame(4, 6, 3).unwrap();
        assert_eq!(f.len(), 6);
        assert!(Frame::new(f.vectors().to_vec()).is_ok());
        let bad = vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]];
        assert!(matches!(Frame::new(bad), Err(Error::InvalidFrame(_))));
    }

    #[test]
    fn best_bound_selection() {
        let mk = |kind, value| BoundEntry {
            kind,
            value,
            meta: BTreeMap::new(),
        };
        let mut r = BoundReport {
            model: "m".into(),
            x: vec![],
            p: 1,
            n: 2,
            entries: vec![mk(BoundKind::Trivial, 2.0)],
            skipped: vec![],
            non_binding: vec![],
        };
        assert_eq!(best_gamma_bound(&r), (BoundKind::Trivial, 2.0));
        r.entries.push(mk(BoundKind::Cp, 1.7));
        r.entries.push(mk(BoundKind::Tp, 1.75));
        assert_eq!(best_gamma_bound(&r), (BoundKind::Cp, 1.7));
        r.entries.push(mk(BoundKind::Fbar, 1.7));
        r.entries.insert(0, mk(BoundKind::Pure, 1.7));
        assert_eq!(best_gamma_bound(&r), (BoundKind::Cp, 1.7));
    }

    #[test]
    fn partial_commutativity_matches_trivial_cp_bound() {
        for (name, x) in [
            ("classical_2p", vec![0.2, 0.3]),
            ("noisy_qubit", vec![0.7, 0.3]),
        ] {
            let pt = point(name, &x);
            let rep = commutator_report(&pt.rho, &pt.slds);
            let t = pt.reparametrized_slds().unwrap();
            let cp = cp_matrix(&pt.rho, &t, 1, &Limits::default()).unwrap();
            assert_eq!(rep.partial_max <= 1e-9, cp_gamma_bound(&cp, 2) == 2.0);
        }
    }

    #[test]
    fn report_contains_trivial_cap_and_valid_entries() {
        let pt = point("bloch_3p", &[0.2, 0.3, 0.1]);
        let r = bound_report(
            &pt,
            "bloch_3p",
            &[0.2, 0.3, 0.1],
            1,
            &BoundOptions::default(),
        );
        let skipped: Vec<BoundKind> = r.skipped.iter().map(|s| s.0).collect();
        assert_eq!(skipped, vec![BoundKind::Pure, BoundKind::ZhuHayashi]);
        assert!(r.entries.iter().any(|e| e.kind == BoundKind::GillMassar));
        for e in &r.entries {
            assert!(e.value >= 0.0 && e.value <= 3.0 + 1e-9);
        }
        assert_eq!(best_gamma_bound(&r), (BoundKind::GillMassar, 1.0));
    }
}
