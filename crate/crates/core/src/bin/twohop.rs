use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use twohop_lattice::channel::InterferenceSpec;
use twohop_lattice::config::{apply, load_config};
use twohop_lattice::output::{emit_results, write_csv, write_json};
use twohop_lattice::rates::rate_report;
use twohop_lattice::sim::{run_interference_sweep, run_trials, OutputFormat, RunConfig, RunSummary};
use twohop_lattice::verify::{log_grid, verify_suite, VerifyOptions};

#[derive(Parser)]
#[command(name = "twohop", version, about = "Nested-lattice decode-and-forward for two-hop networks with known interference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print achievable rate, clean capacity and gap as CSV.
    Rates {
        #[arg(long, default_value_t = 255.0)]
        s1: f64,
        #[arg(long, default_value_t = 255.0)]
        s2: f64,
        /// Evaluate a 50x50 log-spaced SNR grid (1e-2 .. 1e6) instead of one point.
        #[arg(long)]
        grid: bool,
    },
    /// Run Monte Carlo trials of one scheme.
    Simulate(Box<SimulateArgs>),
    /// Run the invariant battery.
    Verify {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Measure the relay effective noise with this coefficient instead of the optimum.
        #[arg(long)]
        alpha1: Option<f64>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// key = value configuration file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    s1: Option<String>,
    #[arg(long)]
    s2: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// integer or "auto"
    #[arg(long)]
    k1: Option<String>,
    /// integer or "auto"
    #[arg(long)]
    k2: Option<String>,
    #[arg(long)]
    margin: Option<String>,
    /// kind[:param], kind one of constant, gaussian, sinusoid, uniform
    #[arg(long)]
    interference: Option<String>,
    #[arg(long)]
    reseed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    ideal_hop2: Option<String>,
    #[arg(long)]
    noiseless: Option<String>,
    #[arg(long)]
    alpha1: Option<String>,
    #[arg(long)]
    alpha2: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Comma-separated interference specs to run side by side, reporting
    /// whether their 95% error-rate intervals overlap.
    #[arg(long, value_delimiter = ',')]
    compare_interference: Vec<String>,
}

impl SimulateArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let pairs = [
            ("model", &self.model),
            ("s1", &self.s1),
            ("s2", &self.s2),
            ("n", &self.n),
            ("k1", &self.k1),
            ("k2", &self.k2),
            ("margin", &self.margin),
            ("interference", &self.interference),
            ("reseed", &self.reseed),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("ideal_hop2", &self.ideal_hop2),
            ("noiseless", &self.noiseless),
            ("alpha1", &self.alpha1),
            ("alpha2", &self.alpha2),
            ("output", &self.output),
            ("format", &self.format),
            ("workers", &self.workers),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }

    fn build_config(&self) -> anyhow::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        for (key, value) in self.overrides() {
            apply(&mut config, key, value).with_context(|| format!("--{key}"))?;
        }
        Ok(config)
    }
}

fn write_summaries(summaries: &[RunSummary], config: &RunConfig) -> anyhow::Result<()> {
    match &config.output {
        Some(path) => {
            emit_results(summaries, config.format, path)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let stdout = std::io::stdout().lock();
            match config.format {
                OutputFormat::Csv => write_csv(summaries, stdout)?,
                OutputFormat::Json => write_json(summaries, stdout)?,
            }
        }
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let config = args.build_config()?;
    if args.compare_interference.is_empty() {
        let summary = run_trials(&config)?;
        eprintln!(
            "model {}: {} errors / {} trials (rate {:.3e}, 95% CI [{:.3e}, {:.3e}]) in {:.2?}",
            summary.model,
            summary.errors,
            summary.trials,
            summary.error_rate,
            summary.ci_lo,
            summary.ci_hi,
            summary.elapsed
        );
        write_summaries(std::slice::from_ref(&summary), &config)
    } else {
        let specs = args
            .compare_interference
            .iter()
            .map(|s| s.parse::<InterferenceSpec>())
            .collect::<Result<Vec<_>, _>>()?;
        let sweep = run_interference_sweep(&config, &specs)?;
        for (i, j, overlap) in &sweep.overlaps {
            eprintln!(
                "{} vs {}: intervals {}",
                sweep.summaries[*i].interference,
                sweep.summaries[*j].interference,
                if *overlap { "overlap" } else { "DISJOINT" }
            );
        }
        write_summaries(&sweep.summaries, &config)?;
        if !sweep.all_overlap() {
            bail!("error rates depend on the interference");
        }
        Ok(())
    }
}

fn rates(s1: f64, s2: f64, grid: bool) -> anyhow::Result<()> {
    let points: Vec<(f64, f64)> = if grid {
        let g = log_grid(50, -2.0, 6.0);
        g.iter().flat_map(|&a| g.iter().map(move |&b| (a, b))).collect()
    } else {
        vec![(s1, s2)]
    };
    let mut out = std::io::stdout().lock();
    writeln!(out, "S1,S2,R_thm,R_clean,gap")?;
    for (a, b) in points {
        let r = rate_report(a, b)?;
        writeln!(out, "{},{},{},{},{}", r.s1, r.s2, r.r_thm, r.r_clean, r.gap)?;
    }
    Ok(())
}

fn verify(seed: u64, alpha1: Option<f64>) -> anyhow::Result<bool> {
    let report = verify_suite(&VerifyOptions { seed, alpha1_override: alpha1 });
    for c in &report.checks {
        println!("{} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rates { s1, s2, grid } => rates(*s1, *s2, *grid).map(|_| true),
        Command::Simulate(args) => simulate(args).map(|_| true),
        Command::Verify { seed, alpha1 } => verify(*seed, *alpha1),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
