use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pseudo_paths_cli::{
    list_scenarios, output_path, run, write_report, CliError, ExperimentConfig, Format, Overrides,
    Parameters,
};

#[derive(Parser)]
#[command(
    name = "pseudo-paths",
    version,
    about = "Run weak-value path experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its report.
    Run(Box<RunArgs>),
    /// List scenarios and their parameters.
    ListScenarios {
        /// Emit the list as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario name (see list-scenarios).
    #[arg(long)]
    scenario: Option<String>,
    /// Flat JSON object with parameters; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi_j: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta_omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    chi: Option<f64>,
    /// Three polarizer angles a,b,c.
    #[arg(long, value_delimiter = ',', num_args = 3, allow_hyphen_values = true)]
    angles: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta_q: Option<f64>,
    #[arg(long)]
    delta_threshold: Option<f64>,
    /// Toy grid size n.
    #[arg(long)]
    grid: Option<usize>,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// Read every angle in degrees.
    #[arg(long)]
    degrees: bool,
}

impl RunArgs {
    fn overrides(self) -> Result<Overrides, CliError> {
        let angles = self.angles.map(|v| [v[0], v[1], v[2]]);
        Ok(Overrides {
            scenario: self.scenario,
            config: self.config,
            out: self.out,
            format: self
                .format
                .as_deref()
                .map(str::parse::<Format>)
                .transpose()?,
            degrees: self.degrees,
            parameters: Parameters {
                phi: self.phi,
                phi_j: self.phi_j,
                delta_omega: self.delta_omega,
                chi: self.chi,
                samples: self.samples,
                seed: self.seed,
                eta: self.eta,
                delta_q: self.delta_q,
                angles,
                delta_threshold: self.delta_threshold,
                grid: self.grid,
            },
        })
    }
}

fn execute(args: RunArgs) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::resolve(args.overrides()?)?;
    let report = run(&cfg)?;
    let path = output_path(&cfg);
    write_report(&report, cfg.format, &path)?;
    for r in report.results.iter().filter(|r| r.pass == Some(false)) {
        println!(
            "FAIL {} {} = {} ({})",
            r.quantity,
            r.label,
            r.re,
            r.tolerance.as_deref().unwrap_or("")
        );
    }
    println!(
        "{}: {}/{} checks passed, report written to {}",
        report.scenario,
        report.checks - report.failures,
        report.checks,
        path.display()
    );
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::ListScenarios { json } => {
            print!("{}", list_scenarios(json));
            0
        }
        Command::Run(args) => execute(*args).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            e.exit_code()
        }),
    };
    ExitCode::from(code as u8)
}
