use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mecsim::sweep::{write_sweep, Execution, SweepError, SweepSpec};
use mecsim::{Scenario, ScenarioError, SimError, Simulation};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;

#[derive(Debug, Parser)]
#[command(version, about = "Uncoordinated serverless dispatching in edge computing, simulated")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one replication and print its summary as JSON
    Simulate {
        /// Scenario file (JSON)
        #[arg(long)]
        scenario: PathBuf,
        /// Master seed of the random streams
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dump every processed event, tab-separated, to this file
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sweep chi or the pool size over several seeds
    Sweep {
        /// Scenario file (JSON)
        #[arg(long)]
        scenario: PathBuf,
        /// Parameter to sweep: chi or k
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values
        #[arg(long)]
        values: String,
        /// Comma-separated seeds
        #[arg(long)]
        seeds: String,
        /// Output directory for summary.csv and the CDF files
        #[arg(long)]
        out: PathBuf,
        /// Run replications one at a time
        #[arg(long, default_value_t = false)]
        sequential: bool,
    },
}

enum Failure {
    Validation(String),
    Io(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::Validation(format!("internal simulation error: {e}"))
    }
}

fn io_failure(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("cannot write {}: {e}", path.display()))
}

fn simulate(scenario: PathBuf, seed: u64, trace: Option<PathBuf>) -> Result<(), Failure> {
    let scenario = Scenario::load(&scenario)?;
    let mut sim = Simulation::new(&scenario, seed);
    if trace.is_some() {
        sim = sim.with_trace();
    }
    sim.run_until(scenario.horizon())?;
    let report = sim.report();

    if let Some(path) = trace {
        let file = fs::File::create(&path).map_err(io_failure(&path))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "time_s\tseq\tkind\tdetails").map_err(io_failure(&path))?;
        for event in sim.take_trace() {
            writeln!(w, "{}", event.trace_line()).map_err(io_failure(&path))?;
        }
        w.flush().map_err(io_failure(&path))?;
    }

    let json = serde_json::json!({
        "seed": seed,
        "policy": scenario.policy().kind.name(),
        "k": scenario.policy().k,
        "chi": scenario.policy().chi,
        "samples": report.delay_samples.len(),
        "probes_per_request": report.probes_per_request(),
        "report": report,
    });
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&json).expect("report serializes"));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { scenario, seed, trace } => simulate(scenario, seed, trace),
        Command::Sweep {
            scenario,
            param,
            values,
            seeds,
            out,
            sequential,
        } => {
            let spec = SweepSpec::parse(&param, &values, &seeds)?;
            let scenario = Scenario::load(&scenario)?;
            let execution = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let points = mecsim::sweep(&scenario, &spec, execution)?;
            let summary = write_sweep(&points, &out)?;
            let table = fs::read_to_string(&summary).map_err(io_failure(&summary))?;
            let _ = write!(std::io::stdout().lock(), "{table}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
