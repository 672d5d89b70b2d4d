use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mif_cli::config::{Method, RunConfig, ScenarioKind};
use mif_cli::error::CliError;
use mif_cli::plotdata::{emit, PlotInput};
use mif_core::scenarios::Discretization;
use mif_core::WeightMode;

#[derive(Parser)]
#[command(name = "mif", version, about = "Meshfree implicit filter benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method over several seeded realizations.
    Run(Overrides),
    /// Run a matrix of methods over shared realizations.
    Bench(Overrides),
    /// Convert trajectory CSVs into long-format plot data.
    EmitPlotdata {
        /// Trajectory CSVs, as `path` or `method=path`.
        #[arg(required = true)]
        inputs: Vec<PlotInput>,
        #[arg(long, default_value = "plotdata")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    /// JSON configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    weight_mode: Option<WeightMode>,
    #[arg(long)]
    discretization: Option<Discretization>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Overrides {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, self.scenario) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(kind)) => RunConfig::new(kind),
            (None, None) => return Err(CliError::Config("either --config or --scenario is required".into())),
        };
        if let Some(v) = self.scenario {
            cfg.scenario = v;
        }
        if let Some(v) = self.method {
            cfg.method = v;
        }
        cfg.points = self.points.or(cfg.points);
        cfg.samples = self.samples.or(cfg.samples);
        cfg.particles = self.particles.or(cfg.particles);
        cfg.neighbors = self.neighbors.or(cfg.neighbors);
        cfg.epsilon = self.epsilon.or(cfg.epsilon);
        cfg.tau = self.tau.or(cfg.tau);
        cfg.weight_mode = self.weight_mode.or(cfg.weight_mode);
        cfg.discretization = self.discretization.or(cfg.discretization);
        cfg.threads = self.threads.or(cfg.threads);
        if let Some(v) = self.reps {
            cfg.reps = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.out {
            cfg.out = v;
        }
        Ok(cfg)
    }
}

fn install_pool(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(o) => {
            let cfg = o.into_config()?;
            install_pool(cfg.threads)?;
            let report = mif_cli::run(&cfg)?;
            println!(
                "{} {}: err_G {} over {}/{} realizations, {:.3} s",
                cfg.scenario.name(),
                report.label,
                report.stats.err_g.map_or("n/a".to_string(), |e| format!("{e:.6}")),
                report.stats.completed,
                cfg.reps,
                report.stats.wall_clock_seconds
            );
            Ok(report.exit_code)
        }
        Command::Bench(o) => {
            let cfg = o.into_config()?;
            install_pool(cfg.threads)?;
            let report = mif_cli::bench(&cfg)?;
            println!("{:<24} {:>12} {:>16} {:>10}", "cell", "err_G", "mean seconds", "completed");
            for r in &report.rows {
                println!(
                    "{:<24} {:>12} {:>16} {:>10}",
                    r.label,
                    r.err_g.map_or("n/a".to_string(), |e| format!("{e:.6}")),
                    r.mean_wall_clock_seconds.map_or("n/a".to_string(), |s| format!("{s:.3}")),
                    format!("{}/{}", r.completed, cfg.reps)
                );
            }
            Ok(report.exit_code)
        }
        Command::EmitPlotdata { inputs, out } => {
            let counts = emit(&inputs, &out)?;
            println!("wrote {} plot rows and {} error rows to {}", counts.plot_rows, counts.error_rows, out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
