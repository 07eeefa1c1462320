//! One function per subcommand, each turning a validated [`RunConfig`] into a
//! [`Report`].

use std::collections::BTreeMap;

use qig_core::bounds::{
    best_gamma_bound, bound_report, weighted_cov_lower_bound, BoundKind, BoundOptions, BoundReport,
};
use qig_core::convex::{holevo_bound, nagaoka_bound, verify_dominance, ConvexBound};
use qig_core::estimation::{covariance_experiment, locally_unbiased_offsets};
use qig_core::fisher::{cfim, commutator_report, sld_residual, ModelPoint};
use qig_core::measurement::{
    gamma_of_point, optimize_hierarchy, optimize_point, random_povm, Objective, Povm,
};
use qig_core::models::{registry, StateModel};
use qig_core::numlin::eig_hermitian;
use qig_core::rng::{derive_seed, gaussian_matrix, rng_from_seed};
use qig_core::{Limits, RealMatrix, C64};

use crate::config::{limits_from_env, Command, ObjectiveName, RunConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{real_rows, PovmFile};
use crate::report::*;

pub fn execute(cfg: &RunConfig) -> CliResult<Report> {
    cfg.validate()?;
    match cfg.command {
        Command::ModelList => Ok(Report::ModelList(model_list(cfg))),
        Command::Qfim => qfim(cfg).map(Report::Qfim),
        Command::Cfim => cfim_cmd(cfg).map(Report::Cfim),
        Command::Bounds => bounds(cfg).map(Report::Bounds),
        Command::Holevo => holevo(cfg).map(Report::Holevo),
        Command::Nagaoka => nagaoka(cfg).map(Report::Nagaoka),
        Command::Optimize => optimize(cfg).map(Report::Optimize),
        Command::Simulate => simulate(cfg).map(Report::Simulate),
        Command::Verify => verify(cfg).map(Report::Verify),
    }
}

struct Setup {
    model: StateModel,
    x: Vec<f64>,
    pt: ModelPoint,
    limits: Limits,
}

fn setup(cfg: &RunConfig) -> CliResult<Setup> {
    let model = cfg.model()?;
    let x = cfg.x()?.to_vec();
    let pt = ModelPoint::new(&model, &x)?;
    Ok(Setup {
        model,
        x,
        pt,
        limits: limits_from_env()?,
    })
}

fn model_list(cfg: &RunConfig) -> ModelListReport {
    let models = registry()
        .iter()
        .map(|m| ModelInfo {
            name: m.name().to_string(),
            kind: m.kind().kind_name().to_string(),
            n: m.n(),
            d: m.d(),
            parameters: m.parameter_names().iter().map(|s| s.to_string()).collect(),
            domain: m.domain().iter().map(|&(lo, hi)| [lo, hi]).collect(),
            analytic_tangent: m.has_analytic_tangent(),
        })
        .collect();
    ModelListReport {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        models,
    }
}

fn qfim(cfg: &RunConfig) -> CliResult<QfimReport> {
    let s = setup(cfg)?;
    let report = commutator_report(&s.pt.rho, &s.pt.slds);
    let mut copies = Vec::new();
    for &p in &cfg.p {
        let m = if p == 1 {
            s.pt.fq.matrix().clone()
        } else {
            let rho = s.pt.rho.tensor_power(p, &s.limits)?;
            let tangent = s.pt.tangent.tensor_power(&s.pt.rho, p, &s.limits)?;
            ModelPoint::from_state(rho, tangent)?.fq.into_matrix()
        };
        copies.push(CopyQfim {
            p,
            qfim: real_rows(&m),
        });
    }
    Ok(QfimReport {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        model: s.model.name().to_string(),
        x: s.x,
        qfim: real_rows(s.pt.fq.matrix()),
        f_im: real_rows(&s.pt.f_im()),
        sld_residual: sld_residual(&s.pt.rho, &s.pt.tangent, &s.pt.slds),
        commutator: CommutatorInfo {
            partial_max: report.partial_max,
            weak_max: report.weak_max,
            tolerance: report.tolerance,
        },
        copies,
    })
}

fn load_povm(cfg: &RunConfig) -> CliResult<Option<(Povm, PovmFile)>> {
    match &cfg.povm {
        None => Ok(None),
        Some(path) => {
            let file = PovmFile::read(path)?;
            Ok(Some((file.to_povm()?, file)))
        }
    }
}

fn check_povm_fits(povm: &Povm, model: &StateModel) -> CliResult<()> {
    if povm.local_dim() != model.d() {
        return Err(CliError::Config(format!(
            "POVM acts on {}-dimensional copies, model {} has d = {}",
            povm.local_dim(),
            model.name(),
            model.d()
        )));
    }
    Ok(())
}

fn cfim_cmd(cfg: &RunConfig) -> CliResult<CfimReport> {
    let s = setup(cfg)?;
    let povms: Vec<(Povm, PovmFile)> = match load_povm(cfg)? {
        Some(pair) => vec![pair],
        None => cfg
            .p
            .iter()
            .map(|&p| {
                let povm = Povm::computational_basis(s.limits.power_dim(s.model.d(), p)?);
                let povm = Povm::new(povm.elements().to_vec(), s.model.d(), p)?;
                let file = PovmFile::from_povm(&povm);
                Ok((povm, file))
            })
            .collect::<CliResult<_>>()?,
    };
    let mut results = Vec::new();
    for (povm, file) in &povms {
        check_povm_fits(povm, &s.model)?;
        let fc = cfim(&s.pt.rho, &s.pt.tangent, povm)?;
        results.push(CfimEntry {
            p: povm.p(),
            povm_digest: file.digest(),
            outcomes: povm.outcomes(),
            cfim: real_rows(fc.matrix()),
            qfim_p: real_rows(&s.pt.fq.matrix().scale(povm.p() as f64)),
            gamma: gamma_of_point(&s.pt, povm)?,
        });
    }
    Ok(CfimReport {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        model: s.model.name().to_string(),
        x: s.x,
        results,
    })
}

fn bound_options(cfg: &RunConfig, limits: Limits) -> BoundOptions {
    BoundOptions {
        limits,
        seed: cfg.seed,
        ..BoundOptions::default()
    }
}

fn bound_json(report: &BoundReport) -> Vec<BoundJson> {
    let mut rows: Vec<(BoundKind, BoundJson)> = Vec::new();
    for e in &report.entries {
        rows.push((
            e.kind,
            BoundJson {
                name: e.kind.name().into(),
                value: Some(e.value),
                meta: e.meta.clone(),
                status: BoundStatus::Ok,
                reason: None,
            },
        ));
    }
    for (k, reason) in &report.skipped {
        rows.push((
            *k,
            BoundJson {
                name: k.name().into(),
                value: None,
                meta: BTreeMap::new(),
                status: BoundStatus::Skipped,
                reason: Some(reason.clone()),
            },
        ));
    }
    for (k, v) in &report.non_binding {
        rows.push((
            *k,
            BoundJson {
                name: k.name().into(),
                value: Some(*v),
                meta: BTreeMap::new(),
                status: BoundStatus::NonBinding,
                reason: Some(format!("exceeds the trivial cap {}", report.n)),
            },
        ));
    }
    rows.sort_by_key(|(k, _)| *k);
    rows.into_iter().map(|(_, b)| b).collect()
}

fn bounds(cfg: &RunConfig) -> CliResult<BoundsReport> {
    let s = setup(cfg)?;
    let w = cfg.weight.resolve(&s.pt)?;
    let opts = bound_options(cfg, s.limits);
    let mut reports = Vec::new();
    for &p in &cfg.p {
        let r = bound_report(&s.pt, s.model.name(), &s.x, p, &opts);
        let (kind, value) = best_gamma_bound(&r);
        let conversion = weighted_cov_lower_bound(&w, &s.pt.fq, value)
            .ok()
            .map(|lb| Conversion {
                weight: real_rows(&w),
                d: value,
                cov_lower_bound: lb,
            });
        reports.push(BoundReportJson {
            model: r.model.clone(),
            x: r.x.clone(),
            p,
            bounds: bound_json(&r),
            best: BestBound {
                name: kind.name().into(),
                value,
            },
            conversion,
        });
    }
    Ok(BoundsReport {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        model: s.model.name().to_string(),
        x: s.x,
        reports,
    })
}

fn sld_crb(pt: &ModelPoint, w: &RealMatrix) -> CliResult<f64> {
    Ok((w * &pt.fq.inverse()?).trace())
}

fn convex_report(
    cfg: &RunConfig,
    s: &Setup,
    w: &RealMatrix,
    b: ConvexBound,
) -> CliResult<ConvexReport> {
    Ok(ConvexReport {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        model: s.model.name().to_string(),
        x: s.x.clone(),
        weight: real_rows(w),
        value: b.value,
        sld_crb: sld_crb(&s.pt, w)?,
        final_mu: b.final_mu,
        gap_proxy: b.gap_proxy,
        stages: b.stages,
        iterations: b.iterations,
        restart_values: b.restart_values.clone(),
        tuple_residual: b.tuple.residual(&s.pt.rho, &s.pt.tangent),
    })
}

fn holevo(cfg: &RunConfig) -> CliResult<ConvexReport> {
    let s = setup(cfg)?;
    let w = cfg.weight.resolve(&s.pt)?;
    let b = holevo_bound(&s.pt.rho, &s.pt.tangent, &w, &cfg.solver.resolve(cfg.seed))?;
    convex_report(cfg, &s, &w, b)
}

fn nagaoka(cfg: &RunConfig) -> CliResult<ConvexReport> {
    let s = setup(cfg)?;
    let w = RealMatrix::identity(s.pt.n());
    let b = nagaoka_bound(&s.pt.rho, &s.pt.tangent, &cfg.solver.resolve(cfg.seed))?;
    convex_report(cfg, &s, &w, b)
}

fn optimize(cfg: &RunConfig) -> CliResult<OptimizeReport> {
    let s = setup(cfg)?;
    let weight = match cfg.optimizer.objective {
        ObjectiveName::WeightedCrb => Some(cfg.weight.resolve(&s.pt)?),
        ObjectiveName::Gamma => None,
    };
    let search = cfg.optimizer.resolve(cfg.seed, weight, s.limits);
    let objective = match &search.objective {
        Objective::Gamma => "gamma",
        Objective::WeightedCrb(_) => "weighted_crb",
    };
    let p_max = *cfg.p.iter().max().expect("validated non-empty");
    let hierarchy = optimize_hierarchy(&s.pt, p_max, &search)?;
    let mut results = Vec::new();
    for r in hierarchy.iter().filter(|r| cfg.p.contains(&r.p)) {
        let povm = PovmFile::from_povm(&r.povm);
        results.push(OptimizeEntry {
            p: r.p,
            gamma: r.gamma,
            value: r.value,
            iterations: r.iterations,
            restart_trace: r.restart_trace.clone(),
            cfim: real_rows(r.fc.matrix()),
            povm_digest: povm.digest(),
            povm,
        });
    }
    if let (Some(path), Some(last)) = (&cfg.povm_out, results.last()) {
        let text = serde_json::to_string_pretty(&last.povm).expect("POVM serializes") + "\n";
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    Ok(OptimizeReport {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        model: s.model.name().to_string(),
        x: s.x,
        objective: objective.into(),
        results,
    })
}

fn simulate(cfg: &RunConfig) -> CliResult<ExperimentReport> {
    let s = setup(cfg)?;
    let w = cfg.weight.resolve(&s.pt)?;
    let (povm, file) = match load_povm(cfg)? {
        Some(pair) => pair,
        None => {
            // default strategy: the best weighted Cramér–Rao POVM on p[0] copies
            let mut search = cfg.optimizer.resolve(cfg.seed, Some(w.clone()), s.limits);
            search.objective = Objective::WeightedCrb(w.clone());
            let r = optimize_point(&s.pt, cfg.p[0], &search)?;
            let file = PovmFile::from_povm(&r.povm);
            (r.povm, file)
        }
    };
    check_povm_fits(&povm, &s.model)?;
    let ens = covariance_experiment(
        &s.model,
        &s.x,
        &povm,
        cfg.shots,
        cfg.trials,
        cfg.seed,
        Some(&w),
    )?;
    let solver = cfg.solver.resolve(cfg.seed);
    let holevo = holevo_bound(&s.pt.rho, &s.pt.tangent, &w, &solver)
        .ok()
        .map(|b| b.value);
    let nagaoka = if s.pt.n() == 2 && cfg.weight.is_identity() {
        nagaoka_bound(&s.pt.rho, &s.pt.tangent, &solver)
            .ok()
            .map(|b| b.value)
    } else {
        None
    };
    let report = bound_report(
        &s.pt,
        s.model.name(),
        &s.x,
        povm.p(),
        &bound_options(cfg, s.limits),
    );
    let cov_lower_bound = weighted_cov_lower_bound(&w, &s.pt.fq, best_gamma_bound(&report).1)?;
    Ok(ExperimentReport {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        model: s.model.name().to_string(),
        x: s.x.clone(),
        povm_digest: file.digest(),
        p: povm.p(),
        shots: ens.shots,
        trials: ens.trials,
        nu: ens.nu,
        weight: real_rows(&w),
        mean: ens.mean.clone(),
        nu_cov: real_rows(&ens.nu_cov),
        fc_inv: real_rows(&ens.fc_inv),
        weighted_trace: ens.weighted_trace,
        weighted_trace_se: ens.weighted_trace_se,
        relative_deviation: ens.relative_deviation,
        flagged: ens.flagged,
        bounds: ExperimentBounds {
            sld_crb: sld_crb(&s.pt, &w)?,
            fc_crb: (&w * &ens.fc_inv).trace(),
            holevo,
            nagaoka,
            cov_lower_bound,
        },
    })
}

fn check(name: &str, value: f64, tolerance: f64, pass: bool) -> CheckResult {
    CheckResult {
        name: name.into(),
        value,
        tolerance,
        pass,
    }
}

/// Random POVM seeds for the verify suite.
const VERIFY_POVMS: u64 = 20;

fn verify(cfg: &RunConfig) -> CliResult<VerifyReport> {
    let s = setup(cfg)?;
    let d = s.model.d();
    let n = s.pt.n();
    let mut checks = Vec::new();

    let res = sld_residual(&s.pt.rho, &s.pt.tangent, &s.pt.slds);
    checks.push(check("sld_residual", res, 1e-8, res <= 1e-8));
    let sym = s.pt.fq.matrix().symmetry_deviation();
    checks.push(check("qfim_symmetry", sym, 1e-10, sym <= 1e-10));
    let psd = s.pt.fq.matrix().min_eigenvalue();
    checks.push(check("qfim_min_eigenvalue", psd, -1e-9, psd >= -1e-9));

    let mut povms: Vec<Povm> = Vec::new();
    if let Some((p, _)) = load_povm(cfg)? {
        check_povm_fits(&p, &s.model)?;
        povms.push(p);
    }
    for i in 0..VERIFY_POVMS {
        povms.push(random_povm(
            d,
            2 + (i as usize % 5),
            derive_seed(cfg.seed, i),
            &s.limits,
        )?);
    }
    let mut worst = f64::INFINITY;
    for povm in &povms {
        let fc = cfim(&s.pt.rho, &s.pt.tangent, povm)?;
        let fq_p = s.pt.fq.matrix().scale(povm.p() as f64);
        worst = worst.min((&fq_p - fc.matrix()).min_eigenvalue());
    }
    checks.push(check("min_eig_fq_minus_fc", worst, -1e-8, worst >= -1e-8));

    let mut add = 0.0f64;
    for &p in cfg.p.iter().filter(|&&p| p > 1) {
        let rho = s.pt.rho.tensor_power(p, &s.limits)?;
        let tangent = s.pt.tangent.tensor_power(&s.pt.rho, p, &s.limits)?;
        let big = ModelPoint::from_state(rho, tangent)?;
        add = add.max((big.fq.matrix() - &s.pt.fq.matrix().scale(p as f64)).max_abs());
    }
    checks.push(check("qfim_additivity", add, 1e-9, add <= 1e-9));

    let comm = commutator_report(&s.pt.rho, &s.pt.slds);
    let slack = d as f64 * comm.partial_max + 1e-9 - comm.weak_max;
    checks.push(check("weak_implied_by_partial", slack, 0.0, slack >= 0.0));

    // dominance Cov_u ≥ A_u for locally unbiased estimators of random POVMs
    let mut dom = f64::INFINITY;
    for i in 0..VERIFY_POVMS {
        let povm = random_povm(
            d,
            n + 2 + (i as usize % 3),
            derive_seed(cfg.seed, 100 + i),
            &s.limits,
        )?;
        let Ok(offsets) = locally_unbiased_offsets(&s.pt.rho, &s.pt.tangent, &povm) else {
            continue;
        };
        let mut rng = rng_from_seed(derive_seed(cfg.seed, 200 + i));
        let u = gaussian_matrix(&mut rng, d, 1).column(0);
        let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let u: Vec<C64> = u.into_iter().map(|z| z / norm).collect();
        let (e1, e2) = verify_dominance(&s.pt.rho, &s.pt.tangent, &povm, &offsets, &u)?;
        dom = dom.min(e1).min(e2);
    }
    checks.push(check("min_eig_cov_u_minus_a_u", dom, -1e-9, dom >= -1e-9));

    // the search witness never beats the best analytic bound
    let search = cfg.optimizer.resolve(cfg.seed, None, s.limits);
    let p_max = *cfg.p.iter().max().expect("validated non-empty");
    let opts = bound_options(cfg, s.limits);
    let mut gap = f64::INFINITY;
    for r in optimize_hierarchy(&s.pt, p_max, &search)? {
        let report = bound_report(&s.pt, s.model.name(), &s.x, r.p, &opts);
        gap = gap.min(best_gamma_bound(&report).1 + 1e-6 - r.gamma);
    }
    checks.push(check("gamma_below_best_bound", gap, 0.0, gap >= 0.0));

    let rho_min = eig_hermitian(s.pt.rho.operator()).min();
    checks.push(check(
        "state_min_eigenvalue",
        rho_min,
        -1e-10,
        rho_min >= -1e-10,
    ));

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        model: s.model.name().to_string(),
        x: s.x,
        checks,
        pass,
    })
}
