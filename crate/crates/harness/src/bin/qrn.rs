use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrn_core::optimizer::SearchMethod;
use qrn_harness::output::render;
use qrn_harness::{
    oracle_check, run_experiment, write_outputs, ExperimentSpec, HarnessError, HarnessResult, OutputFormat, Scenario,
    Symbol,
};

/// Scalability planning for linear quantum repeater chains.
///
/// Exit status: 0 success, 1 invalid spec, 2 no feasible solution,
/// 3 I/O failure, 4 oracle mismatch.
#[derive(Parser)]
#[command(name = "qrn", version)]
struct Cli {
    /// Experiment spec (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the genetic search; overrides the spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; defaults to the spec's `output`, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; defaults to the output file extension, else csv.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    params: ParamOverrides,
    #[command(subcommand)]
    command: Command,
}

/// Fixed-parameter overrides; each replaces any grid over the same symbol.
#[derive(Args)]
struct ParamOverrides {
    #[arg(long, global = true)]
    f0: Option<f64>,
    #[arg(long, global = true)]
    r0: Option<f64>,
    #[arg(long, global = true)]
    l0: Option<f64>,
    #[arg(long, global = true)]
    p2: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    r_min: Option<f64>,
    #[arg(long, global = true)]
    f_min: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Score one decision.
    Evaluate {
        #[arg(long)]
        n_links: Option<usize>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        n_link_distill: Option<usize>,
        #[arg(long)]
        n_e2e_distill: Option<usize>,
    },
    /// Find the longest feasible chain.
    Optimize {
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long)]
        pin_n_links: Option<usize>,
        #[arg(long)]
        pin_d: Option<f64>,
        #[arg(long)]
        pin_n_link_distill: Option<usize>,
        #[arg(long)]
        pin_n_e2e_distill: Option<usize>,
    },
    /// Run the scenario named in --config.
    Sweep,
    /// Compare the optimizer and rate formulas with the oracles.
    OracleCheck,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Method {
    Exhaustive,
    Genetic,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qrn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> HarnessResult<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| HarnessError::InvalidSpec(format!("thread pool: {e}")))?;
    }
    let mut spec = match (&cli.config, &cli.command) {
        (Some(path), _) => ExperimentSpec::load(path)?,
        (None, Command::Sweep) => return Err(HarnessError::InvalidSpec("sweep needs --config".into())),
        (None, _) => ExperimentSpec::new(Scenario::Optimize),
    };
    apply_overrides(&mut spec, &cli)?;

    match cli.command {
        Command::Evaluate {
            n_links,
            d,
            n_link_distill,
            n_e2e_distill,
        } => {
            spec.scenario = Scenario::Evaluate;
            let dec = &mut spec.decision;
            dec.n_links = n_links.unwrap_or(dec.n_links);
            dec.d = d.unwrap_or(dec.d);
            dec.n_link_distill = n_link_distill.unwrap_or(dec.n_link_distill);
            dec.n_e2e_distill = n_e2e_distill.unwrap_or(dec.n_e2e_distill);
        }
        Command::Optimize {
            method,
            pin_n_links,
            pin_d,
            pin_n_link_distill,
            pin_n_e2e_distill,
        } => {
            spec.scenario = Scenario::Optimize;
            if let Some(m) = method {
                spec.method = match m {
                    Method::Exhaustive => SearchMethod::Exhaustive,
                    Method::Genetic => SearchMethod::Genetic,
                };
            }
            let pins = &mut spec.pins;
            pins.n_links = pin_n_links.or(pins.n_links);
            pins.d_separation = pin_d.or(pins.d_separation);
            pins.n_link_distill = pin_n_link_distill.or(pins.n_link_distill);
            pins.n_e2e_distill = pin_n_e2e_distill.or(pins.n_e2e_distill);
        }
        Command::Sweep => {}
        Command::OracleCheck => return run_oracle_check(&spec, cli.out.as_deref()),
    }

    let output = run_experiment(&spec)?;
    let target = cli.out.clone().or_else(|| spec.output.clone());
    let format = cli
        .format
        .or_else(|| target.as_deref().and_then(OutputFormat::from_path))
        .unwrap_or(OutputFormat::Csv);
    match &target {
        Some(path) => write_outputs(&spec, &output.records, &output.summary, format, path)?,
        None => {
            let bytes = render(&spec, &output.records, &output.summary, format);
            std::io::stdout().write_all(&bytes).map_err(|e| HarnessError::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
    }
    if output.nothing_feasible() {
        return Err(HarnessError::NoFeasibleSolution);
    }
    Ok(())
}

fn apply_overrides(spec: &mut ExperimentSpec, cli: &Cli) -> HarnessResult<()> {
    let p = &cli.params;
    let pairs = [
        (Symbol::F0, p.f0),
        (Symbol::R0, p.r0),
        (Symbol::L0, p.l0),
        (Symbol::P2, p.p2),
        (Symbol::Eta, p.eta),
        (Symbol::RMin, p.r_min),
        (Symbol::FMin, p.f_min),
    ];
    for (symbol, value) in pairs {
        if let Some(v) = value {
            spec.set_param(symbol, v)?;
        }
    }
    if let Some(seed) = cli.seed {
        spec.grid.remove(&Symbol::Seed);
        spec.seed = Some(seed);
    }
    Ok(())
}

fn run_oracle_check(spec: &ExperimentSpec, out: Option<&Path>) -> HarnessResult<()> {
    let report = oracle_check(spec)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        std::fs::write(path, text).map_err(|e| HarnessError::Io {
            path: path.into(),
            source: e,
        })?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(HarnessError::OracleMismatch("see FAIL lines above".into()))
    }
}
