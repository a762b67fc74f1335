use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ubopt::config::{load_scenario, load_sweep};
use ubopt::experiments::{
    default_power_grid, eh_compare, output_feasible, run_sweep, solve_scheme, worker_count, write_eh_csv,
    write_sweep_csv, write_trace_csv, write_trajectory_csv, EhCompareParams, ExperimentError,
};
use ubopt_core::SchemeId;

#[derive(Parser)]
#[command(name = "ubopt", version, about = "Throughput maximization for a cache-assisted UAV backscatter relay")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one scenario with one scheme.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        /// LEH, NLEH, LNC, NLNC, LFTau, NLFTau, LFTra or NLFTra.
        #[arg(long, value_parser = parse_scheme)]
        scheme: SchemeId,
        /// Directory for trajectory.csv and trace.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write sweep.csv.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the linear and sigmoid harvesting models over input power.
    Ehcompare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_scheme(s: &str) -> Result<SchemeId, String> {
    SchemeId::parse(s).ok_or_else(|| format!("unknown scheme {s:?}"))
}

enum Failure {
    Usage(String),
    Infeasible(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Solve { .. } | ExperimentError::Infeasible(_) => Failure::Infeasible(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Solve { scenario, scheme, out } => {
            let sc = load_scenario(&scenario).map_err(usage)?;
            let sol = solve_scheme(&sc, scheme).map_err(|e| Failure::Infeasible(e.to_string()))?;
            if !output_feasible(&sol) {
                return Err(Failure::Infeasible(format!("{scheme} returned a point that violates its constraints")));
            }
            let r = &sol.report;
            println!("scheme          {scheme}");
            println!("objective_bits  {:.11e}", r.objective());
            println!("throughput_bps  {:.11e}", r.objective() / sol.scenario.duration);
            println!("converged       {}", r.converged);
            println!("iterations      {}", r.iterations);
            println!("demand_met      {}", r.demand_met);
            println!("wall_time_s     {:.3}", r.wall_time);
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(usage)?;
                write_trajectory_csv(&sol, create(&dir.join("trajectory.csv"))?)?;
                write_trace_csv(&sol, create(&dir.join("trace.csv"))?)?;
            }
        }
        Cmd::Sweep { spec, out } => {
            let spec = load_sweep(&spec).map_err(usage)?;
            let rows = run_sweep(&spec, worker_count())?;
            fs::create_dir_all(&out).map_err(usage)?;
            write_sweep_csv(&rows, create(&out.join("sweep.csv"))?)?;
        }
        Cmd::Ehcompare { scenario, out } => {
            let sc = load_scenario(&scenario).map_err(usage)?;
            let rows = eh_compare(&default_power_grid(), &EhCompareParams::reference(&sc));
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(usage)?;
            }
            write_eh_csv(&rows, create(&out)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(m)) => {
            eprintln!("infeasible: {m}");
            ExitCode::from(2)
        }
    }
}
