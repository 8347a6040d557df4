//! `wpirc`: solve, sweep, certify and oracle-check minimum-energy
//! allocations for a wireless-powered radar-communication transmitter.
//!
//! Exit codes: 0 success, 1 bad configuration or usage, 2 solver or I/O
//! error, 3 infeasible instance, 4 certificate invalid or oracle mismatch.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wpirc::benchmark::{solve_scheme, Scheme};
use wpirc::certify::{brute_force_oracle_auto, kkt_certificate_with};
use wpirc::model::{ChannelRealization, Solution, Status, SystemParams};
use wpirc::sim::{run_frontiers, run_sweep, summarize, write_csv, write_frontier_csv};
use wpirc::solver::Solver;

use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "wpirc", version, about = "Minimum-energy wireless-powered radar-communication allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` (channel seed, or master seed for sweeps).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance and print the allocation summary.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "op")]
        scheme: String,
    },
    /// Monte-Carlo sweep of one floor, written as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        /// Worker thread cap; overrides `threads`.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Solve one instance and check its optimality certificate.
    Certify {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the solver against the exhaustive grid oracle.
    OracleCheck {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(String),
    Solver(String),
    Infeasible,
    Rejected(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Infeasible => 3,
            Failure::Rejected(_) => 4,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<wpirc::Error> for Failure {
    fn from(e: wpirc::Error) -> Self {
        Failure::Solver(e.to_string())
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn instance(cfg: &RunConfig) -> Result<(SystemParams, ChannelRealization), Failure> {
    Ok((cfg.params()?, cfg.channel()?))
}

fn print_solution(params: &SystemParams, chan: &ChannelRealization, sol: &Solution) {
    println!("status        {}", sol.status);
    if sol.status == Status::Infeasible {
        return;
    }
    println!("energy        {:.6e} J", sol.energy);
    println!("tau1          {:.6e} s", sol.tau1);
    println!("tau2          {:.6e} s", sol.tau2);
    println!("symbols       {}", sol.n_symbols(params));
    println!("beam power    {:.6e} W", sol.beam_power());
    println!("radar MI      {:.6} bits (floor {})", sol.achieved_mi(params, chan), params.mi_floor);
    println!("rate          {:.6} bits (floor {})", sol.achieved_rate(params, chan), params.rate_floor);
}

fn cmd_solve(common: &Common, scheme: &str) -> Result<(), Failure> {
    let cfg = load(common)?;
    let scheme: Scheme = scheme.parse().map_err(|e: wpirc::Error| Failure::Config(e.to_string()))?;
    let (params, chan) = instance(&cfg)?;
    let solver = Solver::new(cfg.solver_options());
    let sol = solve_scheme(&solver, scheme, &params, &chan)?;
    println!("scheme        {scheme}");
    print_solution(&params, &chan, &sol);
    if sol.status == Status::Infeasible {
        return Err(Failure::Infeasible);
    }
    Ok(())
}

fn cmd_sweep(
    common: &Common,
    out: Option<PathBuf>,
    trials: Option<usize>,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let mut cfg = load(common)?;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(t) = threads {
        cfg.threads = t;
    }
    let out = out.unwrap_or_else(|| cfg.output.clone());
    let sweep = cfg.sweep()?;
    let pool = rayon_pool(cfg.threads)?;
    let rows = pool.install(|| run_sweep(&sweep))?;
    write_csv(&rows, &out)?;
    for s in summarize(&rows, &sweep.sweep_values, &sweep.schemes) {
        println!(
            "{} {:>10.3} bits: mean energy {:.4e} J, tau1 {:.4e} s, tau2 {:.4e} s ({} paired, {} infeasible, {} errors)",
            s.scheme, s.sweep_value, s.mean_energy, s.mean_tau1, s.mean_tau2, s.paired_trials, s.infeasible, s.errors
        );
    }
    if let Some(path) = &cfg.frontier_output {
        let frontiers = pool.install(|| run_frontiers(&sweep))?;
        write_frontier_csv(&frontiers, path)?;
        println!("frontiers written to {}", path.display());
    }
    println!("{} rows written to {}", rows.len(), out.display());
    Ok(())
}

fn rayon_pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Solver(format!("cannot start worker threads: {e}")))
}

fn cmd_certify(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let (params, chan) = instance(&cfg)?;
    let sol = Solver::new(cfg.solver_options()).solve(&params, &chan)?;
    print_solution(&params, &chan, &sol);
    match sol.status {
        Status::Infeasible => return Err(Failure::Infeasible),
        Status::ZeroDemand => {
            println!("certificate   not needed (zero demand, no transmission)");
            return Ok(());
        }
        Status::Optimal => {}
    }
    let cert = kkt_certificate_with(&params, &chan, &sol, &cfg.certificate_tolerances())?;
    println!("mu            {:.6e} (1/||h||^2 = {:.6e})", cert.mu, 1.0 / chan.h_norm_sqr());
    println!("rank(Y)       {} of {}", cert.rank_y, params.n_antennas);
    println!("min eig(Y)    {:.3e}", cert.y_min_eigenvalue);
    println!("||YQ||_F      {:.3e}", cert.complementary_residual);
    println!("rank-one      {:.3e}", cert.rank_one_ratio);
    println!("harvest gap   {:.3e} J", cert.harvest_gap);
    if cert.valid {
        println!("certificate   valid");
        Ok(())
    } else {
        Err(Failure::Rejected(format!("certificate invalid: {}", cert.failed_checks.join(", "))))
    }
}

fn cmd_oracle_check(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let (params, chan) = instance(&cfg)?;
    if params.n_subcarriers > wpirc::certify::ORACLE_MAX_SUBCARRIERS {
        return Err(Failure::Config(format!(
            "oracle-check supports at most {} subcarriers, config has {}",
            wpirc::certify::ORACLE_MAX_SUBCARRIERS,
            params.n_subcarriers
        )));
    }
    let sol = Solver::new(cfg.solver_options()).solve(&params, &chan)?;
    let oracle = brute_force_oracle_auto(&params, &chan, cfg.oracle_tau2_steps, cfg.oracle_gamma_steps)?;
    println!("solver        {} {:.6e} J (tau2 {:.6e} s)", sol.status, sol.energy, sol.tau2);
    println!("oracle        {} {:.6e} J (tau2 {:.6e} s)", oracle.status, oracle.energy, oracle.tau2);
    if sol.status != oracle.status {
        return Err(Failure::Rejected("solver and oracle disagree on status".into()));
    }
    if sol.status != Status::Optimal {
        println!("agreement     status only");
        return Ok(());
    }
    let gap = (oracle.energy - sol.energy).abs() / sol.energy;
    println!("relative gap  {gap:.4e} (tolerance {:e})", cfg.oracle_rel_tol);
    if gap <= cfg.oracle_rel_tol {
        Ok(())
    } else {
        Err(Failure::Rejected(format!("relative gap {gap:.4e} exceeds {}", cfg.oracle_rel_tol)))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Solve { common, scheme } => cmd_solve(common, scheme),
        Command::Sweep {
            common,
            out,
            trials,
            threads,
        } => cmd_sweep(common, out.clone(), *trials, *threads),
        Command::Certify { common } => cmd_certify(common),
        Command::OracleCheck { common } => cmd_oracle_check(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) | Failure::Solver(m) | Failure::Rejected(m) => eprintln!("error: {m}"),
                Failure::Infeasible => eprintln!("instance is infeasible"),
            }
            ExitCode::from(f.code())
        }
    }
}
