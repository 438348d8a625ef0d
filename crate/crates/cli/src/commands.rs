//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns what it wrote for the caller to summarize.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use aqcls_core::evolution::{evolve, EvolutionSpec};
use aqcls_core::grover::{compare_schedules, growth_ratios, ScheduleRow, TimeSearch};
use aqcls_core::markov::{
    build_transition_matrix, check_convergence_hypotheses, delta_bound, estimate_generation_matrix,
    exact_generation_matrix, neighborhood_graph, stationary_distribution, Estimation, GenerationMatrix,
    GeneratorContext, GraphClass, HypothesisReport,
};
use aqcls_core::quantum::{eigendecompose, ground_state};
use aqcls_core::search::{run_aqcls, write_trace_csv, AqclsConfig};
use aqcls_core::spectral::{gap_profile, gap_profile_with_tol, verify_bound_on_grid, BoundReport, SpectralProfile};
use aqcls_core::{Error as CoreError, Schedule};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{ChainGenerator, ConfigError, ExperimentConfig, Format, Resolved};
use crate::record::{LearnedAlgorithmRecord, RecordStore};

pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Simulation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Simulation(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Simulation(e) => write!(f, "simulation error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Simulation(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn write_with<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
        writeln!(w)
    })
}

fn prepare(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0)
}

pub struct SolveOutput {
    /// In seed order.
    pub records: Vec<LearnedAlgorithmRecord>,
    pub trace_files: Vec<PathBuf>,
}

/// Runs the search once per seed on a bounded worker pool. Each run writes its
/// own trace file and appends one record to `records.jsonl` as soon as it
/// finishes; a failing seed does not discard the others.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path, format: Format) -> Result<SolveOutput, CliError> {
    prepare(out)?;
    let r = cfg.resolve()?;
    let seeds = cfg.seeds();
    let store = RecordStore::open(&out.join(RECORDS_FILE))?;
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(seeds.len())
        .max(1);
    let next = AtomicUsize::new(0);
    type Slot = Option<Result<(LearnedAlgorithmRecord, PathBuf), CliError>>;
    let slots: Mutex<Vec<Slot>> =
        Mutex::new((0..seeds.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= seeds.len() {
                    break;
                }
                let outcome = solve_one(cfg, &r, seeds[k], out, format, &store);
                slots.lock().unwrap_or_else(|p| p.into_inner())[k] = Some(outcome);
            });
        }
    });

    let mut records = Vec::new();
    let mut trace_files = Vec::new();
    let mut first_error = None;
    for slot in slots.into_inner().unwrap_or_else(|p| p.into_inner()) {
        match slot.expect("every seed is processed") {
            Ok((rec, path)) => {
                records.push(rec);
                trace_files.push(path);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(SolveOutput { records, trace_files }),
    }
}

fn solve_one(
    cfg: &ExperimentConfig,
    r: &Resolved,
    seed: u64,
    out: &Path,
    format: Format,
    store: &RecordStore,
) -> Result<(LearnedAlgorithmRecord, PathBuf), CliError> {
    let search = AqclsConfig { seed, ..cfg.search.clone() };
    let result = run_aqcls(&r.objective, &r.family, &r.initial, &cfg.schedule, &search)?;

    let trace_path = out.join(format!("trace_seed{seed}.{}", ext(format)));
    match format {
        Format::Csv => write_with(&trace_path, |w| write_trace_csv(&result.trace, w))?,
        Format::Json => write_json(&trace_path, &result.trace)?,
    }

    let eig = eigendecompose(&result.h_problem);
    let ground = eig.state(0)?.probabilities();
    let path = gap_profile_with_tol(&r.initial.operator, &result.h_problem, 128, f64::NEG_INFINITY)?;
    let tabu = result
        .tabu
        .counts()
        .iter()
        .enumerate()
        .flat_map(|(x, &c)| std::iter::repeat_n(x, c as usize))
        .collect();
    let record = LearnedAlgorithmRecord {
        objective_id: r.objective.id.clone(),
        initial_id: r.initial_id.to_string(),
        schedule_id: cfg.schedule.id(),
        family_id: r.family.id(),
        seed,
        w_star: result.w_star.clone(),
        tabu,
        tau: result.tau,
        x_star: result.x_star,
        f_star: result.f_star,
        iterations: result.iterations,
        ground_index: argmax(&ground),
        ground_degenerate: eig.gap() <= 1e-9,
        min_gap: path.lambda_min,
    };
    store.append(&record)?;
    Ok((record, trace_path))
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveOutput {
    pub schedule: String,
    pub tau: f64,
    pub steps: usize,
    /// `|⟨ground(H_P)|ψ(τ)⟩|`.
    pub fidelity: f64,
    pub ground_index: usize,
    pub probabilities: Vec<f64>,
    pub amplitudes_re: Vec<f64>,
    pub amplitudes_im: Vec<f64>,
}

/// Evolves the ground state of `H_I` towards `diag(f)`.
pub fn cmd_evolve(cfg: &ExperimentConfig, out: &Path, format: Format) -> Result<EvolveOutput, CliError> {
    prepare(out)?;
    let r = cfg.resolve()?;
    let h_p = r.objective.native_hamiltonian();
    let mut spec = EvolutionSpec::new(&r.initial.operator, &h_p, cfg.schedule, cfg.evolve.tau)?;
    if let Some(steps) = cfg.evolve.steps {
        spec = spec.with_steps(steps)?;
    }
    let psi = evolve(&spec, &r.initial.ground)?;
    let target = ground_state(&h_p, 1e-9)?;
    let amps = psi.amplitudes();
    let output = EvolveOutput {
        schedule: cfg.schedule.id(),
        tau: spec.tau,
        steps: spec.steps,
        fidelity: psi.fidelity(&target.state)?,
        ground_index: argmax(&target.state.probabilities()),
        probabilities: psi.probabilities(),
        amplitudes_re: amps.iter().map(|a| a.re).collect(),
        amplitudes_im: amps.iter().map(|a| a.im).collect(),
    };
    let path = out.join(format!("evolve.{}", ext(format)));
    match format {
        Format::Csv => write_with(&path, |w| {
            writeln!(w, "index,re,im,probability")?;
            for k in 0..output.probabilities.len() {
                writeln!(
                    w,
                    "{k},{},{},{}",
                    output.amplitudes_re[k], output.amplitudes_im[k], output.probabilities[k]
                )?;
            }
            Ok(())
        })?,
        Format::Json => write_json(&path, &output)?,
    }
    Ok(output)
}

pub fn cmd_gap(cfg: &ExperimentConfig, out: &Path, format: Format) -> Result<SpectralProfile, CliError> {
    prepare(out)?;
    let r = cfg.resolve()?;
    let profile = gap_profile(&r.initial.operator, &r.objective.native_hamiltonian(), cfg.gap.grid_points)?;
    let path = out.join(format!("gap.{}", ext(format)));
    match format {
        Format::Csv => write_with(&path, |w| profile.write_csv(w))?,
        Format::Json => write_json(&path, &profile)?,
    }
    Ok(profile)
}

/// One report per configured `ε`.
pub fn cmd_bound(cfg: &ExperimentConfig, out: &Path, format: Format) -> Result<Vec<BoundReport>, CliError> {
    prepare(out)?;
    let r = cfg.resolve()?;
    let h_p = r.objective.native_hamiltonian();
    let reports = cfg
        .bound
        .epsilon
        .iter()
        .map(|&eps| verify_bound_on_grid(&r.initial.operator, &h_p, eps, cfg.bound.grid_points))
        .collect::<Result<Vec<_>, _>>()?;
    let path = out.join(format!("bound.{}", ext(format)));
    match format {
        Format::Csv => write_with(&path, |w| {
            writeln!(w, "epsilon,lambda_min,tau_min,steps,achieved_distance,within_bound")?;
            for b in &reports {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    b.epsilon,
                    b.lambda_min,
                    b.tau_min,
                    b.steps,
                    b.achieved_distance,
                    u8::from(b.within_bound)
                )?;
            }
            Ok(())
        })?,
        Format::Json => write_json(&path, &reports)?,
    }
    Ok(reports)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainLevel {
    pub ratio: f64,
    pub sigma2: f64,
    /// `None` at infinite temperature.
    pub temperature: Option<f64>,
    pub pi: Vec<f64>,
    pub residual: f64,
    pub mass_on_argmin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainOutput {
    pub generator: ChainGenerator,
    pub graph_class: GraphClass,
    pub delta_expected: f64,
    /// Present when the ladder has at least two levels.
    pub hypotheses: Option<HypothesisReport>,
    pub levels: Vec<ChainLevel>,
}

/// Generation matrices over the variance ladder, their transition matrices
/// and stationary laws, plus the convergence-hypothesis report.
pub fn cmd_chain(cfg: &ExperimentConfig, out: &Path, format: Format) -> Result<ChainOutput, CliError> {
    prepare(out)?;
    let r = cfg.resolve()?;
    let c = &cfg.chain;
    let dim = r.objective.dim();
    let sigma2_max = cfg.search.sigma2_max;
    let ctx = GeneratorContext::new(&r.initial, &r.family, cfg.schedule, c.q)?;

    let (ladder, delta_expected): (Vec<GenerationMatrix>, f64) = match c.generator {
        ChainGenerator::Uniform => {
            let a = DMatrix::from_element(dim, dim, 1.0 / dim as f64);
            let ladder = c
                .ratios
                .iter()
                .map(|&ratio| GenerationMatrix::new(a.clone(), ratio * sigma2_max, Estimation::Exact))
                .collect::<Result<_, _>>()?;
            (ladder, 1.0 / dim as f64)
        }
        ChainGenerator::Exact => {
            let a = exact_generation_matrix(&ctx, c.tau)?;
            let ladder = c
                .ratios
                .iter()
                .map(|&ratio| GenerationMatrix::new(a.entries().clone(), ratio * sigma2_max, Estimation::Exact))
                .collect::<Result<_, _>>()?;
            (ladder, delta_bound(&r.initial, c.q))
        }
        ChainGenerator::MonteCarlo => {
            let ladder = c
                .ratios
                .iter()
                .enumerate()
                .map(|(k, &ratio)| {
                    estimate_generation_matrix(&ctx, ratio * sigma2_max, c.tau, c.trials, c.seed.wrapping_add(k as u64))
                })
                .collect::<Result<_, _>>()?;
            (ladder, delta_bound(&r.initial, c.q))
        }
    };

    let argmin = r.objective.argmin();
    let mut levels = Vec::new();
    for (k, a) in ladder.iter().enumerate() {
        let ratio = c.ratios[k];
        let m = build_transition_matrix(a, r.objective.values(), ratio * sigma2_max, sigma2_max, c.rule)?;
        let pi = stationary_distribution(&m)?;
        write_with(&out.join(format!("generation_{k}.csv")), |w| a.write_csv(w))?;
        write_with(&out.join(format!("transition_{k}.csv")), |w| m.write_csv(w))?;
        levels.push(ChainLevel {
            ratio,
            sigma2: ratio * sigma2_max,
            temperature: Some(m.temperature).filter(|t| t.is_finite()),
            mass_on_argmin: pi.mass_on(&argmin),
            pi: pi.pi,
            residual: pi.residual,
        });
    }
    let hypotheses = if ladder.len() >= 2 {
        Some(check_convergence_hypotheses(&ladder, delta_expected, c.zero_tol)?)
    } else {
        None
    };
    let output = ChainOutput {
        generator: c.generator,
        graph_class: neighborhood_graph(&ladder[0], c.zero_tol).class,
        delta_expected,
        hypotheses,
        levels,
    };
    if let Some(h) = &output.hypotheses {
        write_json(&out.join("hypotheses.json"), h)?;
    }
    let path = out.join(format!("chain.{}", ext(format)));
    match format {
        Format::Csv => write_with(&path, |w| {
            let cols: Vec<String> = (0..dim).map(|x| format!("pi_{x}")).collect();
            writeln!(w, "ratio,sigma2,temperature,residual,mass_on_argmin,{}", cols.join(","))?;
            for l in &output.levels {
                let pi: Vec<String> = l.pi.iter().map(|p| p.to_string()).collect();
                let t = l.temperature.map_or("inf".to_string(), |t| t.to_string());
                writeln!(
                    w,
                    "{},{},{t},{},{},{}",
                    l.ratio,
                    l.sigma2,
                    l.residual,
                    l.mass_on_argmin,
                    pi.join(",")
                )?;
            }
            Ok(())
        })?,
        Format::Json => write_json(&path, &output)?,
    }
    Ok(output)
}

#[derive(Debug, Clone, Serialize)]
pub struct GroverSchedulesOutput {
    pub target: f64,
    pub rows: Vec<ScheduleRow>,
    /// `(n, τ(n)/τ(n−1))` per schedule id.
    pub ratios: Vec<(String, Vec<(usize, f64)>)>,
}

/// Minimal run time to reach the target success probability for the linear
/// and tanh-like schedules over a range of register sizes.
pub fn cmd_grover_schedules(
    cfg: &ExperimentConfig,
    out: &Path,
    format: Format,
) -> Result<GroverSchedulesOutput, CliError> {
    prepare(out)?;
    let g = &cfg.grover_schedules;
    let schedules = [Schedule::Linear, Schedule::tanh_like(g.steepness)?];
    let search = TimeSearch {
        tau_start: g.tau_start,
        tau_cap: g.tau_cap,
        rel_tol: g.rel_tol,
    };
    let rows = compare_schedules(g.n_min..=g.n_max, &schedules, g.target, &search)?;
    let ratios = schedules
        .iter()
        .map(|s| (s.id(), growth_ratios(&rows, &s.id())))
        .collect();
    let output = GroverSchedulesOutput {
        target: g.target,
        rows,
        ratios,
    };
    let path = out.join(format!("grover_schedules.{}", ext(format)));
    match format {
        Format::Csv => write_with(&path, |w| {
            writeln!(w, "n,schedule,tau_needed,censored")?;
            for row in &output.rows {
                let (tau, censored) = match row.tau_needed.value() {
                    Some(t) => (t, 0),
                    None => (g.tau_cap, 1),
                };
                writeln!(w, "{},{},{tau},{censored}", row.n, row.schedule)?;
            }
            Ok(())
        })?,
        Format::Json => write_json(&path, &output)?,
    }
    Ok(output)
}
