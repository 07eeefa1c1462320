//! Outcome sampling, maximum-likelihood estimation and covariance
//! experiments.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::fisher::{cfim, PROBABILITY_FLOOR};
use crate::fmath;
use crate::measurement::Povm;
use crate::models::{DensityMatrix, StateModel, TangentData};
use crate::numlin::{Limits, RealMatrix};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

const NEGATIVE_PROBABILITY_TOL: f64 = -1e-10;
const PROBABILITY_DRIFT_TOL: f64 = 1e-8;

/// Outcome counts of `shots` repetitions of a POVM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSample {
    pub counts: Vec<u64>,
    pub shots: u64,
    pub seed: u64,
}

/// Clamps roundoff negatives and renormalizes a probability vector.
fn clean_probabilities(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(&lo) = probs.iter().find(|&&p| p < NEGATIVE_PROBABILITY_TOL) {
        return Err(Error::InvalidPovm(format!(
            "negative outcome probability {lo:e}"
        )));
    }
    probs.iter_mut().for_each(|p| *p = p.max(0.0));
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_DRIFT_TOL {
        return Err(Error::InvalidPovm(format!(
            "outcome probabilities sum to {total}"
        )));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// Multinomial draw by sequential conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= p {
            counts[i] = left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, q)
            .expect("probability in [0, 1]")
            .sample(rng);
        counts[i] = c;
        left -= c;
        mass -= p;
    }
    counts
}

/// Draws `shots` outcomes of `povm` on `ρ` (or `ρ^{⊗p}`).
pub fn sample(rho: &DensityMatrix, povm: &Povm, shots: u64, seed: u64) -> Result<OutcomeSample> {
    let probs = if povm.dim() == rho.dim() {
        povm.probabilities(rho)?
    } else {
        let big = rho.tensor_power(
            povm.p(),
            &Limits::new(povm.dim().max(crate::numlin::DEFAULT_MAX_DIM)),
        )?;
        povm.probabilities(&big)?
    };
    let probs = clean_probabilities(probs)?;
    let mut rng = rng_from_seed(seed);
    Ok(OutcomeSample {
        counts: sample_counts(&probs, shots, &mut rng),
        shots,
        seed,
    })
}

/// Outcome probabilities and their parameter derivatives `∂_j p(α|x)`.
#[derive(Debug, Clone)]
struct OutcomeLaw {
    probs: Vec<f64>,
    dprobs: Vec<Vec<f64>>,
}

fn outcome_law(model: &StateModel, x: &[f64], povm: &Povm) -> Result<OutcomeLaw> {
    let rho = model.evaluate(x)?;
    let tangent = model.tangent(x)?;
    if povm.local_dim() != rho.dim() {
        return Err(Error::InvalidInput(format!(
            "POVM local dimension {} does not match model dimension {}",
            povm.local_dim(),
            rho.dim()
        )));
    }
    let (rho, tangent) = lift(rho, tangent, povm)?;
    let probs = povm.elements().iter().map(|m| rho.expectation(m)).collect();
    let dprobs = povm
        .elements()
        .iter()
        .map(|m| {
            tangent
                .ops()
                .iter()
                .map(|t| t.trace_product_real(m))
                .collect()
        })
        .collect();
    Ok(OutcomeLaw { probs, dprobs })
}

fn lift(
    rho: DensityMatrix,
    tangent: TangentData,
    povm: &Povm,
) -> Result<(DensityMatrix, TangentData)> {
    if povm.p() == 1 {
        return Ok((rho, tangent));
    }
    let limits = Limits::new(povm.dim().max(crate::numlin::DEFAULT_MAX_DIM));
    let t = tangent.tensor_power(&rho, povm.p(), &limits)?;
    Ok((rho.tensor_power(povm.p(), &limits)?, t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub x: Vec<f64>,
    pub log_likelihood: f64,
    /// Euclidean norm of the log-likelihood gradient at `x`.
    pub gradient_norm: f64,
    pub iterations: usize,
    /// False when the iteration stalled or hit the domain boundary.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iters: usize,
    /// Stop when the largest step component falls below this.
    pub step_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iters: 100,
            step_tol: 1e-12,
        }
    }
}

fn log_likelihood(counts: &[u64], probs: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll += c as f64 * fmath::ln(p);
    }
    ll
}

/// Score vector and expected information `shots · F_C`.
fn score_and_information(counts: &[u64], shots: u64, law: &OutcomeLaw) -> (Vec<f64>, RealMatrix) {
    let n = law.dprobs.first().map(|d| d.len()).unwrap_or(0);
    let mut score = vec![0.0; n];
    let mut info = RealMatrix::zeros(n, n);
    for ((&c, &p), dp) in counts.iter().zip(&law.probs).zip(&law.dprobs) {
        if p < PROBABILITY_FLOOR {
            continue;
        }
        for j in 0..n {
            score[j] += c as f64 * dp[j] / p;
            for k in 0..n {
                info[(j, k)] += shots as f64 * dp[j] * dp[k] / p;
            }
        }
    }
    (score, info)
}

/// Maximum-likelihood estimate by Fisher scoring with a backtracking line
/// search that keeps iterates inside the model domain.
pub fn mle(
    model: &StateModel,
    povm: &Povm,
    sample: &OutcomeSample,
    x0: &[f64],
) -> Result<MleResult> {
    mle_with(model, povm, sample, x0, &MleOptions::default())
}

pub fn mle_with(
    model: &StateModel,
    povm: &Povm,
    sample: &OutcomeSample,
    x0: &[f64],
    opts: &MleOptions,
) -> Result<MleResult> {
    if sample.counts.len() != povm.outcomes() {
        return Err(Error::InvalidInput(format!(
            "sample has {} outcomes, POVM has {}",
            sample.counts.len(),
            povm.outcomes()
        )));
    }
    let mut x = x0.to_vec();
    let mut law = outcome_law(model, &x, povm)?;
    let mut ll = log_likelihood(&sample.counts, &law.probs);
    if !ll.is_finite() {
        return Err(Error::Initialization);
    }
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        iterations += 1;
        let (score, info) = score_and_information(&sample.counts, sample.shots, &law);
        let Some(step) = info.solve(&score) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xt: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            if model.check_domain(&xt).is_ok() {
                if let Ok(lt) = outcome_law(model, &xt, povm) {
                    let llt = log_likelihood(&sample.counts, &lt.probs);
                    if llt.is_finite() && llt >= ll - 1e-12 * ll.abs() {
                        accepted = Some((xt, lt, llt));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((xn, ln, lln)) = accepted else {
            break;
        };
        let size = step.iter().fold(0.0f64, |a, s| a.max((t * s).abs()));
        x = xn;
        law = ln;
        ll = lln;
        if size < opts.step_tol * x.iter().fold(1.0f64, |a, v| a.max(v.abs())) {
            converged = true;
            break;
        }
    }
    let (score, _) = score_and_information(&sample.counts, sample.shots, &law);
    let gradient_norm = fmath::sqrt(score.iter().map(|s| s * s).sum());
    Ok(MleResult {
        x,
        log_likelihood: ll,
        gradient_norm,
        iterations,
        converged,
    })
}

/// Repeated sampling and estimation at a fixed truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialEnsemble {
    pub trials: usize,
    /// POVM repetitions per trial (`μ`).
    pub shots: u64,
    /// Copies consumed per trial, `ν = μ·p`.
    pub nu: f64,
    pub estimates: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// `E[(x̂ − x)(x̂ − x)ᵀ]` about the true `x`.
    pub cov: RealMatrix,
    pub nu_cov: RealMatrix,
    /// `F_C^{-1}` per copy, comparable with `ν·Cov`: `p·F_Cp^{-1}`.
    pub fc_inv: RealMatrix,
    pub weight: RealMatrix,
    /// `ν·Tr[W Cov]`.
    pub weighted_trace: f64,
    /// Standard error of `weighted_trace` across trials.
    pub weighted_trace_se: f64,
    /// `(Tr[ν Cov] − Tr[F_C^{-1}]) / Tr[F_C^{-1}]`.
    pub relative_deviation: f64,
    /// Trials whose MLE did not converge.
    pub flagged: usize,
    pub seed: u64,
}

/// Runs `trials` independent experiments of `shots` POVM repetitions each.
/// Trial `t` uses the seed `derive_seed(seed, t)`.
pub fn covariance_experiment(
    model: &StateModel,
    x: &[f64],
    povm: &Povm,
    shots: u64,
    trials: usize,
    seed: u64,
    weight: Option<&RealMatrix>,
) -> Result<TrialEnsemble> {
    if trials < 50 {
        return Err(Error::InvalidInput(format!(
            "covariance experiments need at least 50 trials, got {trials}"
        )));
    }
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be positive".into()));
    }
    let n = model.n();
    let w = match weight {
        Some(w) if w.rows() == n && w.cols() == n => w.clone(),
        Some(_) => {
            return Err(Error::InvalidInput(format!(
                "weight matrix must be {n}x{n}"
            )))
        }
        None => RealMatrix::identity(n),
    };
    let rho = model.evaluate(x)?;
    let tangent = model.tangent(x)?;
    let fc = cfim(&rho, &tangent, povm)?;
    let fc_inv = fc.inverse()?.scale(povm.p() as f64);
    let (big, _) = lift(rho, tangent, povm)?;
    let probs = clean_probabilities(povm.probabilities(&big)?)?;
    let nu = shots as f64 * povm.p() as f64;

    let mut estimates = Vec::with_capacity(trials);
    let mut flagged = 0;
    let mut per_trial = Vec::with_capacity(trials);
    let mut cov = RealMatrix::zeros(n, n);
    for t in 0..trials {
        let s = derive_seed(seed, t as u64);
        let mut rng = rng_from_seed(s);
        let sample = OutcomeSample {
            counts: sample_counts(&probs, shots, &mut rng),
            shots,
            seed: s,
        };
        let r = mle(model, povm, &sample, x)?;
        if !r.converged {
            flagged += 1;
        }
        let dev: Vec<f64> = r.x.iter().zip(x).map(|(a, b)| a - b).collect();
        for j in 0..n {
            for k in 0..n {
                cov[(j, k)] += dev[j] * dev[k];
            }
        }
        per_trial.push(nu * w.quadratic_form(&dev));
        estimates.push(r.x);
    }
    let tn = trials as f64;
    let cov = cov.scale(1.0 / tn);
    let mean: Vec<f64> = (0..n)
        .map(|j| estimates.iter().map(|e| e[j]).sum::<f64>() / tn)
        .collect();
    let weighted_trace = per_trial.iter().sum::<f64>() / tn;
    let var = per_trial
        .iter()
        .map(|v| (v - weighted_trace).powi(2))
        .sum::<f64>()
        / (tn - 1.0);
    let nu_cov = cov.scale(nu);
    let relative_deviation = (nu_cov.trace() - fc_inv.trace()) / fc_inv.trace();
    Ok(TrialEnsemble {
        trials,
        shots,
        nu,
        estimates,
        mean,
        cov,
        nu_cov,
        fc_inv,
        weight: w,
        weighted_trace,
        weighted_trace_se: fmath::sqrt(var / tn),
        relative_deviation,
        flagged,
        seed,
    })
}

/// Offsets `x̂(α) − x = F_C^{-1} ∂ log p(α|x)` of the locally unbiased
/// estimator attached to a POVM; its covariance is exactly `F_C^{-1}`.
pub fn locally_unbiased_offsets(
    rho: &DensityMatrix,
    tangent: &TangentData,
    povm: &Povm,
) -> Result<Vec<Vec<f64>>> {
    if povm.dim() != rho.dim() {
        return Err(Error::InvalidInput(format!(
            "POVM dimension {} does not match state dimension {}",
            povm.dim(),
            rho.dim()
        )));
    }
    let fc = cfim(rho, tangent, povm)?;
    let inv = fc.inverse()?;
    Ok(povm
        .elements()
        .iter()
        .map(|m| {
            let p = rho.expectation(m);
            if p < PROBABILITY_FLOOR {
                return vec![0.0; tangent.len()];
            }
            let dlog: Vec<f64> = tangent
                .ops()
                .iter()
                .map(|t| t.trace_product_real(m) / p)
                .collect();
            inv.mul_vec(&dlog)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::lookup;
    use crate::numlin::HermitianOperator;

    #[test]
    fn binomial_frequency() {
        let rho = DensityMatrix::new(HermitianOperator::diag(&[0.3, 0.7])).unwrap();
        let povm = Povm::computational_basis(2);
        let s = sample(&rho, &povm, 10_000, 5).unwrap();
        let f = s.counts[0] as f64 / 1e4;
        let sigma = fmath::sqrt(0.3 * 0.7 / 1e4);
        assert!((f - 0.3).abs() < 5.0 * sigma);
        assert_eq!(s.counts.iter().sum::<u64>(), 10_000);
        assert_eq!(s, sample(&rho, &povm, 10_000, 5).unwrap());
    }

    #[test]
    fn eigenstate_gives_one_outcome() {
        let rho = DensityMatrix::new(HermitianOperator::diag(&[0.0, 1.0])).unwrap();
        let s = sample(&rho, &Povm::computational_basis(2), 500, 1).unwrap();
        assert_eq!(s.counts, vec![0, 500]);
    }

    #[test]
    fn coin_mle_is_the_frequency() {
        let m = lookup("classical_coin").unwrap();
        let povm = Povm::computational_basis(2);
        let s = OutcomeSample {
            counts: vec![3_123, 6_877],
            shots: 10_000,
            seed: 0,
        };
        let r = mle(&m, &povm, &s, &[0.3]).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 0.3123).abs() < 1e-8);
        assert!(r.gradient_norm < 1e-6);
    }

    #[test]
    fn mle_rejects_impossible_start() {
        let m = lookup("classical_coin").unwrap();
        let povm = Povm::from_isometry(crate::numlin::ComplexMatrix::identity(2), 2, 1).unwrap();
        let s = OutcomeSample {
            counts: vec![10, 0],
            shots: 10,
            seed: 0,
        };
        assert!(mle(&m, &povm, &s, &[0.5]).is_ok());
        assert!(matches!(
            mle(
                &m,
                &povm,
                &OutcomeSample {
                    counts: vec![1],
                    shots: 1,
                    seed: 0
                },
                &[0.5]
            ),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn locally_unbiased_offsets_have_fc_inverse_covariance() {
        let m = lookup("noisy_qubit").unwrap();
        let x = [0.7, 0.3];
        let rho = m.evaluate(&x).unwrap();
        let t = m.tangent(&x).unwrap();
        let povm = crate::measurement::random_povm(2, 4, 2, &Limits::default()).unwrap();
        let off = locally_unbiased_offsets(&rho, &t, &povm).unwrap();
        let probs = povm.probabilities(&rho).unwrap();
        let inv = cfim(&rho, &t, &povm).unwrap().inverse().unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let c: f64 = probs.iter().zip(&off).map(|(p, o)| p * o[j] * o[k]).sum();
                assert!((c - inv[(j, k)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let m = lookup("classical_coin").unwrap();
        let povm = Povm::computational_basis(2);
        let a = covariance_experiment(&m, &[0.3], &povm, 1000, 50, 9, None).unwrap();
        let b = covariance_experiment(&m, &[0.3], &povm, 1000, 50, 9, None).unwrap();
        assert_eq!(a, b);
        assert!(covariance_experiment(&m, &[0.3], &povm, 1000, 10, 9, None).is_err());
    }
}
