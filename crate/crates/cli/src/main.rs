use std::path::PathBuf;
use std::process::ExitCode;

use aqcls_cli::commands::{self, CliError};
use aqcls_cli::config::{load_config, Format};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aqcls", version, about = "Adiabatic quantum computation with learned problem Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed list; repeat for several runs.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory (default: `output.dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the learning search once per seed.
    Solve(Common),
    /// Evolve the initial ground state towards diag(f).
    Evolve(Common),
    /// Gap profile along the interpolation path.
    Gap(Common),
    /// Adiabatic run-time bound, checked by simulation.
    Bound(Common),
    /// Generation/transition matrices and stationary laws over a variance ladder.
    Chain(Common),
    /// Minimal Grover run time for the linear and tanh-like schedules.
    GroverSchedules(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Solve(c)
    | Command::Evolve(c)
    | Command::Gap(c)
    | Command::Bound(c)
    | Command::Chain(c)
    | Command::GroverSchedules(c)) = &cli.command;
    let mut cfg = load_config(&c.config)?;
    if !c.seeds.is_empty() {
        cfg.seeds = c.seeds.clone();
    }
    let out = c.out.clone().unwrap_or_else(|| cfg.base_dir.join(&cfg.output.dir));
    let format = c.format.unwrap_or(cfg.output.format);

    match &cli.command {
        Command::Solve(_) => {
            let res = commands::cmd_solve(&cfg, &out, format)?;
            for r in &res.records {
                println!(
                    "seed {}: x* = {} f* = {} iterations = {} ground(H_P) = {} min gap = {:.6}",
                    r.seed, r.x_star, r.f_star, r.iterations, r.ground_index, r.min_gap
                );
            }
        }
        Command::Evolve(_) => {
            let r = commands::cmd_evolve(&cfg, &out, format)?;
            println!(
                "tau = {} steps = {} fidelity with ground(H_P) = {:.9}",
                r.tau, r.steps, r.fidelity
            );
        }
        Command::Gap(_) => {
            let p = commands::cmd_gap(&cfg, &out, format)?;
            println!("lambda_min = {:.12} at s = {}", p.lambda_min, p.s_at_min);
        }
        Command::Bound(_) => {
            for b in commands::cmd_bound(&cfg, &out, format)? {
                println!(
                    "epsilon = {} tau_min = {:.6} distance = {:.3e} within bound: {}",
                    b.epsilon, b.tau_min, b.achieved_distance, b.within_bound
                );
            }
        }
        Command::Chain(_) => {
            let c = commands::cmd_chain(&cfg, &out, format)?;
            println!("neighborhood graph: {:?}", c.graph_class);
            for l in &c.levels {
                println!("r = {:e}: mass on argmin = {:.9}", l.ratio, l.mass_on_argmin);
            }
            if let Some(h) = &c.hypotheses {
                println!("hypotheses hold: {}", h.all_passed);
            }
        }
        Command::GroverSchedules(_) => {
            let g = commands::cmd_grover_schedules(&cfg, &out, format)?;
            for row in &g.rows {
                match row.tau_needed.value() {
                    Some(t) => println!("n = {} {}: tau = {t:.4}", row.n, row.schedule),
                    None => println!("n = {} {}: censored", row.n, row.schedule),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aqcls: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
