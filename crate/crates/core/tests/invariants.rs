mod common;

use proptest::prelude::*;
use qig_core::bounds::{
    cp_gamma_bound, cp_matrix, eigen_frame, fbar_imp_gamma_bound, pure_state_gamma_bound,
    tp_gamma_bound, tp_matrix, TpMode,
};
use qig_core::convex::{holevo_bound, SolverConfig};
use qig_core::fisher::{cfim, commutator_report, sld_residual, ModelPoint};
use qig_core::measurement::{gamma_of_point, optimize_point, random_povm, SearchConfig};
use qig_core::models::{registry, StateModel, TangentData};
use qig_core::numlin::eig_hermitian;
use qig_core::{Limits, RealMatrix};

use common::reference_point;

fn model(idx: usize) -> StateModel {
    let all = registry();
    all[idx % all.len()].clone()
}

/// Tangents of the reparametrization `x = A y`.
fn reparametrize(pt: &ModelPoint, a: &RealMatrix) -> ModelPoint {
    let n = pt.n();
    let ops = (0..n)
        .map(|k| {
            let mut acc = pt.tangent.get(0).scale(a[(0, k)]);
            for j in 1..n {
                acc = acc.add(&pt.tangent.get(j).scale(a[(j, k)]));
            }
            acc
        })
        .collect();
    ModelPoint::from_state(pt.rho.clone(), TangentData::new(ops).unwrap()).unwrap()
}

#[test]
fn registry_states_and_tangents_are_well_formed() {
    for m in registry() {
        for i in 0..10 {
            let x = m.random_point(i, 0.05);
            let rho = m.evaluate(&x).unwrap();
            assert!(
                (rho.operator().trace().re - 1.0).abs() < 1e-10,
                "{} trace",
                m.name()
            );
            assert!(
                eig_hermitian(rho.operator()).min() > -1e-10,
                "{} psd",
                m.name()
            );
            let t = m.tangent(&x).unwrap();
            assert!(t.max_trace() < 1e-8, "{} traceless", m.name());
            let pt = ModelPoint::new(&m, &x).unwrap();
            assert!(
                sld_residual(&pt.rho, &pt.tangent, &pt.slds) < 1e-8,
                "{} residual at {x:?}",
                m.name()
            );
        }
    }
}

#[test]
fn weak_condition_is_implied_by_partial() {
    for m in registry() {
        let pt = ModelPoint::new(&m, &reference_point(&m)).unwrap();
        let r = commutator_report(&pt.rho, &pt.slds);
        assert!(
            r.weak_max <= pt.dim() as f64 * r.partial_max + 1e-9,
            "{}",
            m.name()
        );
    }
}

#[test]
fn restarts_are_recorded_and_search_is_deterministic() {
    let m = model(1);
    let pt = ModelPoint::new(&m, &reference_point(&m)).unwrap();
    let cfg = SearchConfig {
        seed: 5,
        restarts: 3,
        ..SearchConfig::default()
    };
    let a = optimize_point(&pt, 2, &cfg).unwrap();
    let b = optimize_point(&pt, 2, &cfg).unwrap();
    assert_eq!(a.restart_trace, b.restart_trace);
    assert_eq!(a.gamma, b.gamma);
    let best = a
        .restart_trace
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((best - a.value).abs() < 1e-12);
    assert!((gamma_of_point(&pt, &a.povm).unwrap() - a.gamma).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn classical_fisher_is_dominated(mi in 0usize..8, seed in any::<u64>(), k in 2usize..7) {
        let m = model(mi);
        let pt = ModelPoint::new(&m, &m.random_point(seed, 0.1)).unwrap();
        let povm = random_povm(m.d(), k, seed, &Limits::default()).unwrap();
        let fc = cfim(&pt.rho, &pt.tangent, &povm).unwrap();
        prop_assert!((pt.fq.matrix() - fc.matrix()).min_eigenvalue() > -1e-8);
        let g = gamma_of_point(&pt, &povm).unwrap();
        prop_assert!(g >= -1e-10 && g <= pt.n() as f64 + 1e-8);
    }

    #[test]
    fn classical_fisher_is_additive_over_product_measurements(mi in 0usize..8, seed in any::<u64>()) {
        let m = model(mi);
        let pt = ModelPoint::new(&m, &reference_point(&m)).unwrap();
        let povm = random_povm(m.d(), 3, seed, &Limits::default()).unwrap();
        let f1 = cfim(&pt.rho, &pt.tangent, &povm).unwrap();
        let f2 = cfim(&pt.rho, &pt.tangent, &qig_core::measurement::repeated_povm(&povm, 2).unwrap()).unwrap();
        prop_assert!((f2.matrix() - &f1.matrix().scale(2.0)).max_abs() < 1e-8);
    }

    #[test]
    fn gamma_bounds_are_reparametrization_invariant(
        mi in 0usize..8,
        entries in proptest::collection::vec(-1.0f64..1.0, 9),
        p in 1usize..3,
    ) {
        let m = model(mi);
        let pt = ModelPoint::new(&m, &reference_point(&m)).unwrap();
        let n = pt.n();
        let a = RealMatrix::from_fn(n, n, |i, j| entries[3 * i + j] + if i == j { 2.0 } else { 0.0 });
        prop_assume!((&a.transpose() * &a).condition_number() < 1e6);
        let q = reparametrize(&pt, &a);
        let limits = Limits::default();
        let (t1, t2) = (pt.reparametrized_slds().unwrap(), q.reparametrized_slds().unwrap());
        let c1 = cp_gamma_bound(&cp_matrix(&pt.rho, &t1, p, &limits).unwrap(), n);
        let c2 = cp_gamma_bound(&cp_matrix(&q.rho, &t2, p, &limits).unwrap(), n);
        prop_assert!((c1 - c2).abs() < 1e-7, "cp {} vs {}", c1, c2);
        let s1 = tp_gamma_bound(&tp_matrix(&pt.rho, &t1, p, TpMode::Exact).unwrap().tp, n);
        let s2 = tp_gamma_bound(&tp_matrix(&q.rho, &t2, p, TpMode::Exact).unwrap().tp, n);
        prop_assert!((s1 - s2).abs() < 1e-7, "tp {} vs {}", s1, s2);
        let frame = eigen_frame(&pt.rho, p, &limits).unwrap();
        let mask = vec![false; frame.len()];
        let f1 = fbar_imp_gamma_bound(&pt.rho, &pt.slds, p, &frame, &mask, &limits).unwrap();
        let f2 = fbar_imp_gamma_bound(&q.rho, &q.slds, p, &frame, &mask, &limits).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-7, "fbar {} vs {}", f1, f2);
        if pt.rho.is_pure() {
            let b1 = pure_state_gamma_bound(&pt.fq, &pt.f_im(), n).unwrap();
            let b2 = pure_state_gamma_bound(&q.fq, &q.f_im(), n).unwrap();
            prop_assert!((b1 - b2).abs() < 1e-7, "pure {} vs {}", b1, b2);
        }
        let povm = random_povm(m.d(), 4, 9, &limits).unwrap();
        let g1 = gamma_of_point(&pt, &povm).unwrap();
        let g2 = gamma_of_point(&q, &povm).unwrap();
        prop_assert!((g1 - g2).abs() < 1e-7);
    }

    #[test]
    fn holevo_objective_is_weight_homogeneous(scale in 0.2f64..5.0) {
        // Tr[sW Re Z] + ‖√(sW) Im Z √(sW)‖₁ is s times the unscaled objective
        let m = model(1);
        let pt = ModelPoint::new(&m, &reference_point(&m)).unwrap();
        let cfg = SolverConfig::default();
        let w = RealMatrix::identity(2);
        let h1 = holevo_bound(&pt.rho, &pt.tangent, &w, &cfg).unwrap().value;
        let h2 = holevo_bound(&pt.rho, &pt.tangent, &w.scale(scale), &cfg).unwrap().value;
        prop_assert!((h2 - scale * h1).abs() < 1e-5 * scale * h1);
    }
}
