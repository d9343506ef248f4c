use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prafd::experiment::{run_experiment, run_trial, Algorithm, ExperimentSpec, Sweep};
use prafd::report::emit_csv;

#[derive(Parser)]
#[command(name = "prafd", version, about = "Full-duplex MIMO with movable antennas: solver and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one trial and print the rate trace.
    Solve(Common),
    /// Run a Monte Carlo experiment and write CSV results.
    Experiment(Common),
    /// Run the brute-force verification suites.
    Oracle {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario or experiment TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count (experiment) or trial index (solve).
    #[arg(long)]
    trials: Option<usize>,
    /// field=v1,v2,...
    #[arg(long)]
    sweep: Option<Sweep>,
    /// Comma-separated: fp-bsum, fp-bsum-simplified, fp-gd, fpas, hd.
    #[arg(long)]
    algos: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    simplified_geometry: Option<bool>,
    #[arg(long)]
    duplex_factor: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn spec(&self) -> prafd::Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.trials {
            spec.trials = v;
        }
        if let Some(v) = &self.sweep {
            spec.sweep = Some(v.clone());
        }
        if let Some(v) = &self.algos {
            spec.algorithms = Algorithm::parse_list(v)?;
        }
        if let Some(v) = &self.out {
            spec.out = Some(v.clone());
        }
        if let Some(v) = self.simplified_geometry {
            spec.simplified_geometry = v;
        }
        if let Some(v) = self.duplex_factor {
            spec.duplex_factor = v;
        }
        if self.threads.is_some() {
            spec.threads = self.threads;
        }
        Ok(spec)
    }
}

fn solve(args: &Common) -> prafd::Result<()> {
    let mut spec = args.spec()?;
    let trial = args.trials.unwrap_or(0) as u64;
    spec.trials = spec.trials.max(1);
    spec.validate()?;
    let point = spec.point(spec.points()[0])?;
    for &alg in &spec.algorithms {
        let r = run_trial(&spec, &point, alg, trial)?;
        println!("{alg} (seed {}, trial {trial})", spec.seed);
        for (i, (opt, eval)) in r.objective_trace.iter().zip(&r.evaluated_trace).enumerate() {
            println!("  iter {i:>3}  rate {opt:.6}  evaluated {eval:.6}");
        }
        println!(
            "  final {:.6} bits/s/Hz, {} iterations, converged {}, {:.3}s",
            r.weighted_sum_rate, r.outer_iterations, r.converged, r.wall_time_s
        );
    }
    Ok(())
}

fn experiment(args: &Common) -> prafd::Result<()> {
    let spec = args.spec()?;
    spec.validate()?;
    let results = run_experiment(&spec)?;
    for agg in &results.aggregates {
        let at = agg.sweep_value.map(|v| format!(" @ {v}")).unwrap_or_default();
        println!(
            "{}{at}: mean {:.4} (std {:.4}), {} ok, {} failed",
            agg.algorithm, agg.mean, agg.std, agg.n_ok, agg.n_failed
        );
    }
    let dir = spec.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let (trials, aggregates) = emit_csv(&results, &dir)?;
    println!("wrote {} and {}", trials.display(), aggregates.display());
    Ok(())
}

fn oracle(seed: u64) -> prafd::Result<bool> {
    let reports = prafd::oracle::run_all(seed)?;
    for r in &reports {
        println!("{r}");
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => solve(args).map(|_| true),
        Command::Experiment(args) => experiment(args).map(|_| true),
        Command::Oracle { seed } => oracle(*seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
