//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::Instant;

use aqcls_cli::commands::cmd_grover_schedules;
use aqcls_cli::config::{parse_config, Format};
use aqcls_core::evolution::{evolve, EvolutionSpec, Schedule};
use aqcls_core::grover::grover_problem;
use aqcls_core::hamiltonians::{grover_initial, transverse_field_initial, ProblemFamily};
use aqcls_core::markov::{
    build_transition_matrix, check_convergence_hypotheses, delta_bound, estimate_generation_matrix,
    exact_generation_matrix, neighborhood_graph, stationary_distribution, AcceptanceRule, Estimation,
    GenerationMatrix, GeneratorContext, GraphClass,
};
use aqcls_core::objective::Objective;
use aqcls_core::quantum::{eigendecompose, HermitianOperator};
use aqcls_core::rng;
use aqcls_core::search::{acceptance_probability, run_aqcls, AqclsConfig};
use aqcls_core::spectral::{adiabatic_time_bound, gap_profile, verify_bound};
use nalgebra::DMatrix;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn adiabatic_theorem() -> Outcome {
    let hi = transverse_field_initial(2).unwrap().operator;
    let fam = ProblemFamily::ising(2, vec![(0, 1)]).unwrap();
    let mut r = rng::seeded(2024);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    while instances < 10 {
        let w: Vec<f64> = (0..3).map(|_| 2.0 * r.random::<f64>() - 1.0).collect();
        let hp = fam.build(&w).unwrap();
        let Ok(profile) = gap_profile(&hi, &hp, 512) else { continue };
        if profile.lambda_min < 0.3 || eigendecompose(&hp).gap() < 1e-6 {
            continue;
        }
        let report = verify_bound(&hi, &hp, 0.1).map_err(|e| e.to_string())?;
        if !report.within_bound {
            return Err(format!("instance {w:?}: distance {:.3e} > 0.1", report.achieved_distance));
        }
        worst = worst.max(report.achieved_distance);
        instances += 1;
    }
    check(true, format!("10 instances, worst distance {worst:.3e} <= 0.1"))
}

fn bound_quadrature() -> Outcome {
    let hi = HermitianOperator::pauli_x().scale(-1.0);
    let hp = HermitianOperator::pauli_z().scale(-1.0);
    let profile = gap_profile(&hi, &hp, 512).map_err(|e| e.to_string())?;
    let eps = 0.1;
    let computed = adiabatic_time_bound(&profile, eps).map_err(|e| e.to_string())?;

    // Midpoint rule on 1e5 cells with the closed-form gap 2√((1−s)² + s²).
    let n = 100_000;
    let gap = |s: f64| 2.0 * ((1.0 - s).powi(2) + s * s).sqrt();
    let dh = 2f64.sqrt();
    let lam = (0..=n).map(|k| gap(k as f64 / n as f64)).fold(f64::INFINITY, f64::min);
    let h = 1.0 / n as f64;
    let integral: f64 = (0..n).map(|_| h * (10.0 * dh / lam.powi(3) + dh / lam)).sum();
    let oracle = 4.0 / eps * (dh / gap(0.0).powi(2) + dh / gap(1.0).powi(2) + integral);
    let rel = (computed - oracle).abs() / oracle;

    let ratio = computed / adiabatic_time_bound(&profile, 2.0 * eps).map_err(|e| e.to_string())?;
    check(
        rel <= 1e-3 && (ratio - 2.0).abs() <= 1e-9,
        format!("relative error {rel:.2e} (<= 1e-3), ratio(0.1/0.2) - 2 = {:.1e}", ratio - 2.0),
    )
}

fn grover_gap() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let hi = grover_initial(n).unwrap().operator;
        let hp = grover_problem(n, (1 << n) - 1).unwrap();
        let p = gap_profile(&hi, &hp, 1025).map_err(|e| e.to_string())?;
        worst = worst.max((p.lambda_min - 2f64.powf(-(n as f64) / 2.0)).abs());
    }
    check(worst <= 1e-8, format!("max |lambda_min - 2^(-n/2)| = {worst:.2e} over n = 1..6"))
}

fn schedule_comparison() -> Outcome {
    let cfg = parse_config(
        "[problem]\nkind = \"grover\"\nn_qubits = 5\ntarget = 0\n\n[grover_schedules]\nn_min = 2\nn_max = 5\ntarget = 0.9\n",
    )
    .map_err(|e| e.to_string())?;
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let out = cmd_grover_schedules(&cfg, dir.path(), Format::Csv).map_err(|e| e.to_string())?;
    let lin = &out.ratios[0].1;
    let tanh = &out.ratios[1].1;
    let mut ok = lin.len() == 3 && tanh.len() == 3;
    for (&(_, rl), &(_, rt)) in lin.iter().zip(tanh) {
        ok &= (1.4..=2.6).contains(&rl) && rt < rl;
    }
    let fmt = |v: &[(usize, f64)]| v.iter().map(|(n, r)| format!("n{n}:{r:.3}")).collect::<Vec<_>>().join(" ");
    check(ok, format!("linear ratios [{}], tanh_like ratios [{}]", fmt(lin), fmt(tanh)))
}

fn search_config() -> AqclsConfig {
    AqclsConfig {
        t_min: 5.0,
        eta: 0.2,
        q: 0.95,
        n_max: 200,
        ..AqclsConfig::default()
    }
}

fn optimality_on(objective: &Objective, n_qubits: usize) -> Result<(usize, usize), String> {
    let fam = ProblemFamily::diagonal(objective.dim()).unwrap().with_bounds(-1.0, 1.0).unwrap();
    let init = transverse_field_initial(n_qubits).unwrap();
    let argmin = objective.argmin();
    let (mut found, mut ground_ok) = (0, 0);
    for seed in 0..20 {
        let cfg = AqclsConfig { seed, ..search_config() };
        let r = run_aqcls(objective, &fam, &init, &Schedule::Linear, &cfg).map_err(|e| e.to_string())?;
        if argmin.contains(&r.x_star) {
            found += 1;
            let eig = eigendecompose(&r.h_problem);
            let g = eig.state(0).unwrap().probabilities();
            if eig.gap() > 1e-9 && g[r.x_star] > 0.5 {
                ground_ok += 1;
            }
        }
    }
    Ok((found, ground_ok))
}

fn aqcls_optimality() -> Outcome {
    let table = Objective::table("table", vec![3.0, 1.0, 2.0, 0.0]).unwrap();
    let grover = Objective::grover(3, 5).unwrap();
    let (t_found, t_ground) = optimality_on(&table, 2)?;
    let (g_found, g_ground) = optimality_on(&grover, 3)?;
    let ok = t_found >= 18 && g_found >= 18 && 10 * t_ground >= 9 * t_found && 10 * g_ground >= 9 * g_found;
    check(
        ok,
        format!(
            "table: argmin {t_found}/20, ground {t_ground}/{t_found}; grover n=3: argmin {g_found}/20, ground {g_ground}/{g_found}"
        ),
    )
}

fn generation_completeness() -> Outcome {
    let init = transverse_field_initial(2).unwrap();
    let fam = ProblemFamily::diagonal(4).unwrap();
    let q = 0.5;
    let ctx = GeneratorContext::new(&init, &fam, Schedule::Linear, q).unwrap();
    let trials = 10_000;
    let a = estimate_generation_matrix(&ctx, 1.0, 2.0, trials, 6).map_err(|e| e.to_string())?;
    let floor = (1.0 - q) / 4.0;
    let threshold = floor - 3.0 * (floor * (1.0 - floor) / trials as f64).sqrt();
    let min = a.entries().min();
    let class = neighborhood_graph(&a, 0.0).class;
    check(
        min > 0.0 && min >= threshold && class == GraphClass::Complete,
        format!("min a_ij = {min:.4} >= {threshold:.4}, graph {class:?}"),
    )
}

fn convergence_hypotheses() -> Outcome {
    // (a) Monte Carlo generator over a variance ladder.
    let init = transverse_field_initial(2).unwrap();
    let fam = ProblemFamily::diagonal(4).unwrap();
    let q = 0.5;
    let ctx = GeneratorContext::new(&init, &fam, Schedule::Linear, q).unwrap();
    let ladder: Vec<GenerationMatrix> = [1.0, 0.5, 0.1]
        .iter()
        .enumerate()
        .map(|(k, &s2)| estimate_generation_matrix(&ctx, s2, 2.0, 10_000, 100 + k as u64))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let report = check_convergence_hypotheses(&ladder, delta_bound(&init, q), 0.0).map_err(|e| e.to_string())?;

    // (b) Exact generator on D = 8, cold chain.
    let init8 = transverse_field_initial(3).unwrap();
    let fam8 = ProblemFamily::diagonal(8).unwrap();
    let f = [2.7, 0.4, 3.1, 1.9, -0.6, 2.2, 0.9, 1.3];
    let ctx8 = GeneratorContext::new(&init8, &fam8, Schedule::Linear, q).unwrap();
    let a8 = exact_generation_matrix(&ctx8, 2.0).map_err(|e| e.to_string())?;
    let m8 = build_transition_matrix(&a8, &f, 1e-4, 1.0, AcceptanceRule::VarianceRatio).map_err(|e| e.to_string())?;
    let mass = stationary_distribution(&m8).map_err(|e| e.to_string())?.pi[4];

    // (c) Two-state chain against detailed balance.
    let a2 = GenerationMatrix::new(DMatrix::from_element(2, 2, 0.5), 1.0, Estimation::Exact).unwrap();
    let mut err2: f64 = 0.0;
    for r in [1.0, 0.5, 0.1, 1e-3] {
        let m = build_transition_matrix(&a2, &[0.0, 1.0], r, 1.0, AcceptanceRule::VarianceRatio).map_err(|e| e.to_string())?;
        let pi = stationary_distribution(&m).map_err(|e| e.to_string())?.pi;
        err2 = err2.max((pi[0] - 1.0 / (1.0 + r)).abs()).max((pi[1] - r / (1.0 + r)).abs());
    }
    check(
        report.all_passed && mass >= 0.99 && err2 <= 1e-8,
        format!(
            "hypotheses symmetric={} delta={} constant={} (min a_ij {:.4}); D=8 mass on argmin {mass:.6}; D=2 error {err2:.1e}",
            report.combinatorial_symmetry.passed,
            report.uniform_lower_bound.passed,
            report.graph_constancy.passed,
            report.observed_min_offdiagonal
        ),
    )
}

fn mechanics() -> Outcome {
    let objective = Objective::table("table", vec![3.0, 1.0, 2.0, 0.0]).unwrap();
    let fam = ProblemFamily::diagonal(4).unwrap();
    let init = transverse_field_initial(2).unwrap();
    let cfg = AqclsConfig { seed: 3, ..AqclsConfig::default() };
    let run = || run_aqcls(&objective, &fam, &init, &Schedule::Linear, &cfg).unwrap();
    let first = run();
    let ladder_exact = first.trace.iter().all(|t| {
        let k = (t.i / cfg.n_per_level + 1) as i32;
        t.sigma2 == cfg.sigma2_max * (1.0 - cfg.eta).powi(k) && t.tau == cfg.t_min + k as f64 * cfg.nu
    });

    let trials = 10_000;
    let mut acceptance_ok = true;
    for (k, &(df, ratio)) in [(1.0, 0.5), (2.0, 0.5), (1.0, 0.1)].iter().enumerate() {
        let p = acceptance_probability(df, 0.0, ratio, 1.0);
        let mut r = rng::stream(77, k as u64);
        let hits = (0..trials).filter(|_| r.random::<f64>() < p).count();
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        acceptance_ok &= (hits as f64 / trials as f64 - p).abs() <= 3.0 * sigma;
    }

    let csv = |res: &aqcls_core::AqclsResult| {
        let mut buf = Vec::new();
        res.write_trace_csv(&mut buf).unwrap();
        buf
    };
    let identical = csv(&first) == csv(&run());

    let hp = fam.build(&[0.3, -0.2, 0.8, -0.5]).unwrap();
    let spec = EvolutionSpec::new(&init.operator, &hp, Schedule::Smoothstep, 30.0)
        .unwrap()
        .with_steps(10_000)
        .unwrap();
    let drift = (evolve(&spec, &init.ground).unwrap().norm() - 1.0).abs();

    check(
        ladder_exact && acceptance_ok && identical && drift <= 1e-8,
        format!("ladders exact={ladder_exact}, acceptance within 3 sigma={acceptance_ok}, traces identical={identical}, norm drift {drift:.1e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 adiabatic theorem", adiabatic_theorem),
        ("2 run-time bound quadrature", bound_quadrature),
        ("3 grover gap", grover_gap),
        ("4 schedule comparison", schedule_comparison),
        ("5 search optimality", aqcls_optimality),
        ("6 generation completeness", generation_completeness),
        ("7 convergence hypotheses", convergence_hypotheses),
        ("8 mechanics", mechanics),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
