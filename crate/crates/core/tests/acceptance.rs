//! Acceptance suite. Every criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails. Pass criterion numbers as arguments
//! to run a subset, e.g. `cargo test -p qig-core --test acceptance -- 5 9`.

mod common;

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use qig_core::bounds::{
    bound_report, cp_gamma_bound, cp_limit_matrix, cp_matrix, eigen_frame, fbar_imp_gamma_bound,
    random_frame, tp_gamma_bound, tp_matrix, weighted_cov_lower_bound, BoundOptions, TpMode,
};
use qig_core::convex::{
    general_framework_bound, holevo_bound, nagaoka_bound, verify_dominance, SolverConfig,
};
use qig_core::estimation::{covariance_experiment, locally_unbiased_offsets};
use qig_core::fisher::{bures_distance, cfim, commutator_report, ModelPoint};
use qig_core::measurement::{
    optimize_hierarchy, optimize_point, random_povm, random_projective_povm, sld_eigenbasis_povm,
    GammaResult, Objective, Povm, SearchConfig,
};
use qig_core::models::{lookup, registry, ModelKind, StateModel};
use qig_core::rng::{derive_seed, gaussian_vector, rng_from_seed};
use qig_core::{Limits, RealMatrix, Result};
use rand::Rng;

use common::{random_unit_vector, reference_point};

/// Fixed before the first run and never changed to make a criterion pass.
const SEED: u64 = 20_240_611;

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 16] = [
        ("metric consistency", c01_metric_consistency),
        ("additivity", c02_additivity),
        (
            "single-parameter saturation",
            c03_single_parameter_saturation,
        ),
        ("data-processing ordering", c04_data_processing),
        ("bound dominance", c05_bound_dominance),
        ("hierarchy", c06_hierarchy),
        ("gill-massar pinch", c07_gill_massar_pinch),
        ("commutative-limit convergence", c08_commutative_limit),
        ("T_p fidelity", c09_tp_fidelity),
        ("commuting-family exactness", c10_commuting_family),
        ("convex-bound ordering", c11_convex_ordering),
        ("pure-state collapse", c12_pure_state_collapse),
        (
            "weak-commutative Holevo saturation",
            c13_weak_commutative_holevo,
        ),
        ("framework validity", c14_framework_validity),
        ("conversion consistency", c15_conversion_consistency),
        ("estimation achievability", c16_estimation_achievability),
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {id:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn identity_search(p_seed: u64) -> SearchConfig {
    SearchConfig {
        seed: p_seed,
        ..SearchConfig::default()
    }
}

/// Best 1-local (or p-local) strategy for the weighted Cramér–Rao value.
fn crb_strategy(pt: &ModelPoint, p: usize, w: &RealMatrix) -> Result<GammaResult> {
    optimize_point(
        pt,
        p,
        &SearchConfig {
            objective: Objective::WeightedCrb(w.clone()),
            seed: SEED,
            ..SearchConfig::default()
        },
    )
}

fn solver() -> SolverConfig {
    SolverConfig {
        seed: SEED,
        ..SolverConfig::default()
    }
}

fn inverse_trace(pt: &ModelPoint) -> Result<f64> {
    Ok(pt.fq.inverse()?.trace())
}

fn c01_metric_consistency() -> Outcome {
    let t0 = Instant::now();
    let m = lookup("pure_qubit")?;
    let mut worst = 0.0f64;
    for i in 0..20 {
        let x = m.random_point(derive_seed(SEED, i), 0.05);
        let pt = ModelPoint::new(&m, &x)?;
        let mut rng = rng_from_seed(derive_seed(SEED, 100 + i));
        let a: f64 = rng.random_range(0.0..TAU);
        let dx = [1e-3 * a.cos(), 1e-3 * a.sin()];
        let moved = m.evaluate(&[x[0] + dx[0], x[1] + dx[1]])?;
        let db = bures_distance(&pt.rho, &moved)?;
        worst = worst.max((4.0 * db * db - pt.fq.matrix().quadratic_form(&dx)).abs());
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-6 && secs < 5.0,
        format!("max |4 D_B^2 - dx.F_Q.dx| = {worst:.2e} (tol 1e-6), {secs:.2}s (limit 5s)"),
    ))
}

fn c02_additivity() -> Outcome {
    let t0 = Instant::now();
    let limits = Limits::default();
    let mut worst = 0.0f64;
    for m in registry() {
        let pt = ModelPoint::new(&m, &reference_point(&m))?;
        for p in [2, 3] {
            // SLDs solved afresh on the p-copy state, not built from local sums
            let big = ModelPoint::from_state(
                pt.rho.tensor_power(p, &limits)?,
                pt.tangent.tensor_power(&pt.rho, p, &limits)?,
            )?;
            let dev = (big.fq.matrix() - &pt.fq.matrix().scale(p as f64)).max_abs();
            worst = worst.max(dev);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-9 && secs < 5.0,
        format!("max |F_Qp - p F_Q| = {worst:.2e} (tol 1e-9), {secs:.2}s (limit 5s)"),
    ))
}

fn c03_single_parameter_saturation() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut tried = 0;
    let mut i = 0;
    while tried < 10 {
        i += 1;
        let mut rng = rng_from_seed(derive_seed(SEED, 300 + i));
        let dir = gaussian_vector(&mut rng, 3);
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius: f64 = rng.random_range(0.2..0.95);
        let initial = [0, 1, 2].map(|k| radius * dir[k] / norm);
        let gen = gaussian_vector(&mut rng, 3);
        let gnorm = gen.iter().map(|v| v * v).sum::<f64>().sqrt();
        let generator = [0, 1, 2].map(|k| gen[k] / gnorm);
        let model = StateModel::new(
            "random_qubit_1p",
            ModelKind::UnitaryQubit1p { initial, generator },
        )?;
        let x = [rng.random_range(-2.0..2.0)];
        let pt = ModelPoint::new(&model, &x)?;
        let fq = pt.fq.matrix()[(0, 0)];
        if fq < 1e-3 {
            continue;
        }
        tried += 1;
        let povm = sld_eigenbasis_povm(&pt.rho, pt.slds.get(0))?;
        let fc = cfim(&pt.rho, &pt.tangent, &povm)?.matrix()[(0, 0)];
        worst = worst.min(fc / fq);
    }
    Ok((
        worst >= 1.0 - 1e-8,
        format!("min F_C/F_Q = {worst:.12} over 10 models (need >= 1 - 1e-8)"),
    ))
}

fn c04_data_processing() -> Outcome {
    let limits = Limits::default();
    let mut worst = f64::INFINITY;
    for (mi, m) in registry().into_iter().enumerate() {
        let x = m.random_point(derive_seed(SEED, 400 + mi as u64), 0.1);
        let pt = ModelPoint::new(&m, &x)?;
        for i in 0..100u64 {
            let seed = derive_seed(SEED, 1000 * mi as u64 + i);
            let povm = if i % 5 == 4 {
                random_projective_povm(m.d(), seed)?
            } else {
                random_povm(m.d(), 2 + (i as usize % 5), seed, &limits)?
            };
            let fc = cfim(&pt.rho, &pt.tangent, &povm)?;
            worst = worst.min((pt.fq.matrix() - fc.matrix()).min_eigenvalue());
        }
    }
    Ok((
        worst >= -1e-8,
        format!("min eig(F_Q - F_C) = {worst:.2e} over 8 models x 100 POVMs (tol -1e-8)"),
    ))
}

fn c05_bound_dominance() -> Outcome {
    let t0 = Instant::now();
    let limits = Limits::default();
    let opts = BoundOptions {
        seed: SEED,
        ..BoundOptions::default()
    };
    let mut worst = (f64::INFINITY, String::new());
    let mut checked = 0;
    for m in registry() {
        let x = reference_point(&m);
        let pt = ModelPoint::new(&m, &x)?;
        let results = optimize_hierarchy(&pt, 3, &identity_search(SEED))?;
        for r in &results {
            let p = r.p;
            let report = bound_report(&pt, m.name(), &x, p, &opts);
            let mut caps: Vec<(String, f64)> = report
                .entries
                .iter()
                .map(|e| (e.kind.name().to_string(), e.value))
                .chain(
                    report
                        .non_binding
                        .iter()
                        .map(|(k, v)| (k.name().to_string(), *v)),
                )
                .collect();
            let dim = m.d().pow(p as u32);
            let mut rng = rng_from_seed(derive_seed(SEED, 500 + p as u64));
            for f in 0..20u64 {
                let frame = if f == 0 {
                    eigen_frame(&pt.rho, p, &limits)?
                } else {
                    random_frame(dim, dim + (f as usize % 3), derive_seed(SEED, 600 + f))?
                };
                let mask: Vec<bool> = (0..frame.len()).map(|_| rng.random::<bool>()).collect();
                let v = fbar_imp_gamma_bound(&pt.rho, &pt.slds, p, &frame, &mask, &limits)?;
                caps.push((format!("fbar#{f}"), v));
            }
            for (name, v) in caps {
                checked += 1;
                let slack = v + 1e-6 - r.gamma;
                if slack < worst.0 {
                    worst = (
                        slack,
                        format!("{} p={p} {name}: gamma {:.8} vs {v:.8}", m.name(), r.gamma),
                    );
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        worst.0 >= 0.0 && secs < 600.0,
        format!(
            "{checked} comparisons, tightest slack {:.2e} ({}), {secs:.1}s (limit 600s)",
            worst.0, worst.1
        ),
    ))
}

fn c06_hierarchy() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["noisy_qubit", "unitary_2p"] {
        let m = lookup(name)?;
        let pt = ModelPoint::new(&m, &reference_point(&m))?;
        let r = optimize_hierarchy(&pt, 2, &identity_search(SEED))?;
        pass &= r[0].gamma <= r[1].gamma + 1e-6;
        parts.push(format!(
            "{name}: G1 {:.8} <= G2 {:.8}",
            r[0].gamma, r[1].gamma
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn c07_gill_massar_pinch() -> Outcome {
    let m = lookup("bloch_3p")?;
    let pt = ModelPoint::new(&m, &reference_point(&m))?;
    let g = optimize_point(&pt, 1, &identity_search(SEED))?.gamma;
    Ok((
        (0.98..=1.0 + 1e-6).contains(&g),
        format!("bloch_3p best G1 = {g:.10} (need [0.98, 1 + 1e-6])"),
    ))
}

fn c08_commutative_limit() -> Outcome {
    let t0 = Instant::now();
    let limits = Limits::default();
    let m = lookup("noisy_qubit")?;
    let pt = ModelPoint::new(&m, &reference_point(&m))?;
    let tilde = pt.reparametrized_slds()?;
    let limit = cp_limit_matrix(&pt.rho, &tilde)[(0, 1)];
    let mut seq = Vec::new();
    for p in 1..=5 {
        let cp = cp_matrix(&pt.rho, &tilde, p, &limits)?;
        seq.push((cp.matrix[(0, 1)] / p as f64 - limit).abs());
    }
    // Exact plateaus occur (p = 2k and 2k + 1 coincide on this model), so
    // the sequence is checked as non-increasing up to roundoff.
    let monotone = seq.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let halved = seq[4] < 0.5 * seq[0];
    let secs = t0.elapsed().as_secs_f64();
    let shown: Vec<String> = seq.iter().map(|v| format!("{v:.6}")).collect();
    Ok((
        monotone && halved && secs < 30.0,
        format!(
            "|C_p/p - limit| = [{}], non-increasing {monotone}, p=5 below half of p=1 {halved}, {secs:.2}s (limit 30s)",
            shown.join(", ")
        ),
    ))
}

fn c09_tp_fidelity() -> Outcome {
    let limits = Limits::default();
    let m = lookup("noisy_qubit")?;
    let pt = ModelPoint::new(&m, &reference_point(&m))?;
    let tilde = pt.reparametrized_slds()?;

    // closed form at p = 1 from the eigensystem of ρ
    let comm = tilde.get(0).commutator(tilde.get(1));
    let mut closed = 0.0;
    for i in 0..pt.rho.dim() {
        let v = pt.rho.eigen().vector(i);
        closed += 0.5 * pt.rho.eigenvalues()[i] * comm.sandwich(&v, &v).im.abs();
    }
    let t1 = tp_matrix(&pt.rho, &tilde, 1, TpMode::Exact)?.tp.matrix[(0, 1)];
    let closed_ok = (t1 - closed).abs() <= 1e-12;

    let exact4 = tp_matrix(&pt.rho, &tilde, 4, TpMode::Exact)?.tp.matrix[(0, 1)];
    let mc = tp_matrix(
        &pt.rho,
        &tilde,
        4,
        TpMode::MonteCarlo {
            samples: 100_000,
            seed: SEED,
        },
    )?;
    let se = mc.std_error.as_ref().map(|s| s[(0, 1)]).unwrap_or(0.0);
    let mc_ok = (mc.tp.matrix[(0, 1)] - exact4).abs() <= 3.0 * se + 1e-12;

    // The noisy qubit has C_p = T_p exactly, so the gap trend is read on bloch_3p.
    let gap = |pt: &ModelPoint, p: usize| -> Result<f64> {
        let tilde = pt.reparametrized_slds()?;
        let n = pt.n();
        let tp = tp_gamma_bound(&tp_matrix(&pt.rho, &tilde, p, TpMode::Exact)?.tp, n);
        let cp = cp_gamma_bound(&cp_matrix(&pt.rho, &tilde, p, &limits)?, n);
        Ok((tp - cp).abs())
    };
    let b = lookup("bloch_3p")?;
    let bpt = ModelPoint::new(&b, &reference_point(&b))?;
    let (g1, g4) = (gap(&bpt, 1)?, gap(&bpt, 4)?);
    let (n1, n4) = (gap(&pt, 1)?, gap(&pt, 4)?);
    Ok((
        closed_ok && mc_ok && g4 < g1,
        format!(
            "T_1 {t1:.15} vs closed form {closed:.15}; MC T_4 {:.6} vs exact {exact4:.6} (se {se:.2e}); \
             bloch_3p |tp - cp| p=1 {g1:.3e}, p=4 {g4:.3e}; noisy_qubit p=1 {n1:.1e}, p=4 {n4:.1e}",
            mc.tp.matrix[(0, 1)]
        ),
    ))
}

fn c10_commuting_family() -> Outcome {
    let limits = Limits::default();
    let m = lookup("classical_2p")?;
    let pt = ModelPoint::new(&m, &reference_point(&m))?;
    let tilde = pt.reparametrized_slds()?;
    let mut cp_max = 0.0f64;
    let mut tp_max = 0.0f64;
    for p in 1..=3 {
        cp_max = cp_max.max(cp_matrix(&pt.rho, &tilde, p, &limits)?.matrix.max_abs());
        tp_max = tp_max.max(
            tp_matrix(&pt.rho, &tilde, p, TpMode::Exact)?
                .tp
                .matrix
                .max_abs(),
        );
    }
    let partial = commutator_report(&pt.rho, &pt.slds).partial_max;
    let g = optimize_point(&pt, 1, &identity_search(SEED))?.gamma;
    Ok((
        cp_max <= 1e-12 && tp_max <= 1e-12 && partial <= 1e-9 && (g - 2.0).abs() <= 1e-6,
        format!(
            "max|C_p| {cp_max:.1e}, max|T_p| {tp_max:.1e}, partial_max {partial:.1e}, G1 {g:.10}"
        ),
    ))
}

fn c11_convex_ordering() -> Outcome {
    let m = lookup("noisy_qubit")?;
    let x = reference_point(&m);
    let pt = ModelPoint::new(&m, &x)?;
    let w = RealMatrix::identity(2);
    let crb = inverse_trace(&pt)?;
    let holevo = holevo_bound(&pt.rho, &pt.tangent, &w, &solver())?.value;
    let nagaoka = nagaoka_bound(&pt.rho, &pt.tangent, &solver())?.value;
    let strategy = crb_strategy(&pt, 1, &w)?;
    let ens = covariance_experiment(&m, &x, &strategy.povm, 10_000, 2_000, SEED, None)?;
    let measured = ens.weighted_trace;
    let se = ens.weighted_trace_se;
    let ok1 = holevo - crb >= -1e-5;
    let ok2 = nagaoka - holevo >= -1e-5;
    let ok3 = measured - nagaoka >= -1e-5 || measured - nagaoka >= -3.0 * se;
    Ok((
        ok1 && ok2 && ok3,
        format!(
            "Tr F_Q^-1 {crb:.6} <= Holevo {holevo:.6} <= Nagaoka {nagaoka:.6} <= measured {measured:.6} \
             (se {se:.4}, strategy CRB {:.6})",
            strategy.value
        ),
    ))
}

fn c12_pure_state_collapse() -> Outcome {
    let m = lookup("pure_qubit")?;
    let x = reference_point(&m);
    let pt = ModelPoint::new(&m, &x)?;
    let w = RealMatrix::identity(2);
    let holevo = holevo_bound(&pt.rho, &pt.tangent, &w, &solver())?.value;
    let nagaoka = nagaoka_bound(&pt.rho, &pt.tangent, &solver())?.value;
    let strategy = crb_strategy(&pt, 1, &w)?;
    let ens = covariance_experiment(&m, &x, &strategy.povm, 10_000, 50_000, SEED, None)?;
    let measured = ens.weighted_trace;
    let r1 = (nagaoka - holevo).abs() / holevo;
    let r2 = (measured - holevo).abs() / holevo;
    Ok((
        r1 <= 0.01 && r2 <= 0.02,
        format!(
            "Nagaoka {nagaoka:.6} vs Holevo {holevo:.6} (rel {r1:.1e}, tol 1%); measured {measured:.5} \
             (se {:.5}, rel {r2:.2e}, tol 2%)",
            ens.weighted_trace_se
        ),
    ))
}

fn c13_weak_commutative_holevo() -> Outcome {
    let m = lookup("bloch_xz")?;
    let pt = ModelPoint::new(&m, &reference_point(&m))?;
    let report = commutator_report(&pt.rho, &pt.slds);
    let crb = inverse_trace(&pt)?;
    let holevo = holevo_bound(&pt.rho, &pt.tangent, &RealMatrix::identity(2), &solver())?.value;
    let diff = (holevo - crb).abs();
    Ok((
        report.weak_max <= 1e-8 && diff <= 1e-5,
        format!(
            "bloch_xz weak_max {:.1e}, partial_max {:.3}; Holevo {holevo:.9} vs Tr F_Q^-1 {crb:.9} (diff {diff:.1e}, tol 1e-5)",
            report.weak_max, report.partial_max
        ),
    ))
}

fn c14_framework_validity() -> Outcome {
    let limits = Limits::default();
    let m = lookup("noisy_qubit")?;
    let x = reference_point(&m);
    let pt = ModelPoint::new(&m, &x)?;
    let w = RealMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 0.6]])?;

    let mut rng = rng_from_seed(derive_seed(SEED, 1400));
    let mut best = f64::NEG_INFINITY;
    for f in 0..20u64 {
        let frame = random_frame(2, 2 + (f as usize % 3), derive_seed(SEED, 1410 + f))?;
        let mask: Vec<bool> = (0..frame.len()).map(|_| rng.random::<bool>()).collect();
        let v = general_framework_bound(&pt.rho, &pt.tangent, &w, &frame, &mask, &solver())?.value;
        best = best.max(v);
    }
    let mut worst_slack = f64::INFINITY;
    for j in 0..5u64 {
        let povm = random_povm(2, 3 + j as usize, derive_seed(SEED, 1440 + j), &limits)?;
        let ens = covariance_experiment(
            &m,
            &x,
            &povm,
            2_000,
            1_000,
            derive_seed(SEED, 1450 + j),
            Some(&w),
        )?;
        worst_slack = worst_slack.min(ens.weighted_trace + 3.0 * ens.weighted_trace_se - best);
    }

    let b = lookup("bloch_3p")?;
    let bpt = ModelPoint::new(&b, &reference_point(&b))?;
    let mut min_eig = f64::INFINITY;
    for i in 0..50u64 {
        let target: &ModelPoint = if i % 2 == 0 { &pt } else { &bpt };
        let povm: Povm = random_povm(
            2,
            4 + (i as usize % 3),
            derive_seed(SEED, 1500 + i),
            &limits,
        )?;
        let offsets = locally_unbiased_offsets(&target.rho, &target.tangent, &povm)?;
        let u = random_unit_vector(2, derive_seed(SEED, 1600 + i));
        let (e1, e2) = verify_dominance(&target.rho, &target.tangent, &povm, &offsets, &u)?;
        min_eig = min_eig.min(e1).min(e2);
    }
    Ok((
        worst_slack >= 0.0 && min_eig >= -1e-9,
        format!(
            "largest frame bound {best:.6}; min (measured + 3se - bound) {worst_slack:.4} over 5 POVMs; \
             min eig(Cov_u - A_u) {min_eig:.2e} over 50 pairs"
        ),
    ))
}

fn c15_conversion_consistency() -> Outcome {
    let limits = Limits::default();
    let m = lookup("noisy_qubit")?;
    let x = reference_point(&m);
    let pt = ModelPoint::new(&m, &x)?;
    let tilde = pt.reparametrized_slds()?;
    let w = RealMatrix::identity(2);
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [1usize, 2] {
        let d = cp_gamma_bound(&cp_matrix(&pt.rho, &tilde, p, &limits)?, 2);
        let lower = weighted_cov_lower_bound(&w, &pt.fq, d)?;
        let strategy = crb_strategy(&pt, p, &w)?;
        let shots = 10_000 / p as u64;
        let ens = covariance_experiment(
            &m,
            &x,
            &strategy.povm,
            shots,
            1_000,
            derive_seed(SEED, 1700 + p as u64),
            None,
        )?;
        let ok = lower <= ens.weighted_trace + 3.0 * ens.weighted_trace_se;
        pass &= ok;
        parts.push(format!(
            "p={p}: D {d:.5}, lower {lower:.5} vs measured {:.5} (se {:.4})",
            ens.weighted_trace, ens.weighted_trace_se
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn c16_estimation_achievability() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let coin = lookup("classical_coin")?;
    let coin_x = reference_point(&coin);
    let coin_povm = Povm::computational_basis(2);
    let pq = lookup("pure_qubit")?;
    let pq_x = reference_point(&pq);
    let pq_povm = crb_strategy(&ModelPoint::new(&pq, &pq_x)?, 1, &RealMatrix::identity(2))?.povm;
    for (m, x, povm) in [(&coin, &coin_x, &coin_povm), (&pq, &pq_x, &pq_povm)] {
        let ens = covariance_experiment(m, x, povm, 10_000, 200, SEED, None)?;
        let rel = ens.relative_deviation;
        pass &= rel.abs() <= 0.10;
        parts.push(format!(
            "{}: Tr[nu Cov] {:.5} vs Tr F_C^-1 {:.5} (rel {rel:+.3}, se {:.4})",
            m.name(),
            ens.nu_cov.trace(),
            ens.fc_inv.trace(),
            ens.weighted_trace_se
        ));
    }
    Ok((pass, parts.join("; ")))
}
