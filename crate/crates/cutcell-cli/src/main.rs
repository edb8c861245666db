mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use cutcell::bench::cases::CaseId;
use cutcell::bench::run_benchmark;
use cutcell::reference::checks;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "cutcell", version, about = "Cut-cell diffusion benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and print its error table.
    Run {
        /// Case name; see `cutcell list`.
        case: String,
        /// Use the first `n` levels of the case ladder.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        theta: Option<f64>,
        /// Jump weight of the two-phase cases that have one.
        #[arg(long)]
        lambda: Option<f64>,
        /// TOML file; command-line flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for the CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run every level of the ladder, including the slow fine grids.
        #[arg(long)]
        full_scale: bool,
        /// Also dump the final field of every level.
        #[arg(long)]
        fields: bool,
        /// Solve levels one after another.
        #[arg(long)]
        serial: bool,
    },
    /// List the available cases and their levels.
    List,
    /// Verify the analytical reference solutions.
    Check,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::List => {
            for c in CaseId::ALL {
                let ladder = c.ladder();
                let default: Vec<usize> = ladder[c.default_levels()].to_vec();
                println!("{:<26} {}D  levels {:?}  default {:?}", c.name(), c.dim(), ladder, default);
                println!("{:<26} {}", "", c.description());
            }
            Ok(true)
        }
        Command::Check => {
            let results = checks::run_all();
            let mut ok = true;
            for r in &results {
                let status = if r.passed() { "ok" } else { "FAILED" };
                println!("{:<52} {:>10.3e} (tol {:.0e}) {status}", r.name, r.residual, r.tol);
                ok &= r.passed();
            }
            Ok(ok)
        }
        Command::Run { case, levels, theta, lambda, config, out, full_scale, fields, serial } => {
            let id = CaseId::from_name(&case).ok_or_else(|| {
                let names: Vec<&str> = CaseId::ALL.iter().map(|c| c.name()).collect();
                anyhow!("unknown case '{case}' (expected one of {})", names.join(", "))
            })?;
            let file_cfg = match &config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    RunConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => RunConfig::default(),
            };
            let mut cfg = file_cfg.into_bench()?;
            if levels.is_some() {
                cfg.levels = levels;
            }
            if theta.is_some() {
                cfg.params.theta = theta;
            }
            if lambda.is_some() {
                cfg.params.lambda = lambda;
            }
            if out.is_some() {
                cfg.out_dir = out;
            }
            cfg.full_scale |= full_scale;
            cfg.write_fields |= fields;
            if serial {
                cfg.parallel = false;
            }
            let report = run_benchmark(id, &cfg)?;
            print!("{}", report.table());
            for l in &report.levels {
                eprintln!("N = {:>4}: {} unknowns, {} steps, {:.2} s", l.cells_per_axis, l.unknowns, l.steps, l.wall_time);
            }
            if let Some(dir) = &cfg.out_dir {
                eprintln!("wrote CSV files to {}", dir.display());
            }
            Ok(report.failure.is_none())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
