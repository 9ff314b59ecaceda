//! Command-line front end for scripted, reproducible runs.
//!
//! Five subcommands expose the library: `rates` (Monte Carlo error grids
//! plus slope fits), `recovery` (the sign-pattern recovery game), `bounds`
//! (closed-form table for one parameter point), `packing` (sign-vector
//! packing report), and `gap` (achievable-rate versus minimax-floor table).
//! Values resolve flag > config file > built-in default; every run prints
//! its resolved configuration, and all randomness flows from one seed.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use zograd::bounds::{
    bernoulli_kl, fano_error_floor, fdm_gaussian_exact, fdm_gaussian_minimized_constant,
    fdm_gaussian_rate_constant, fdm_upper_bound, gaussian_fdm_error_at_h,
    kl_transcript_bound, lower_bound_minimax, lower_bound_minimax_rate, RateInputs,
};
use zograd::config::Config;
use zograd::error::{Error, Result};
use zograd::estimators::{optimal_step_chebyshev, optimal_step_gaussian, StepPolicy};
use zograd::harness::{
    emit_results, fit_rate, gap_report, recovery_transcript, run_fdm_grid,
    run_recovery_game, CubicFamily, ExperimentGrid, ExperimentRecord, GapReport,
    OutputFormat, RateAxis, RecoveryGameResult,
};
use zograd::packing::{
    build_packing, min_discrepancy_psi, separation_threshold, target_size,
};

#[derive(Parser, Debug)]
#[command(
    name = "zograd",
    version,
    about = "Zeroth-order gradient estimation: Monte Carlo rate experiments, \
             the sign-pattern recovery game, and closed-form bound evaluation",
    disable_help_subcommand = true
)]
struct Cli {
    /// Read defaults from a key=value config file; flags override it
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed for all randomness; omitted, one is drawn and printed
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Cap on worker threads (default: all cores); never changes results
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo L1-error grid for the finite-difference estimator, with
    /// log-log slope fits and CSV/JSON emission
    Rates(RatesArgs),
    /// Sign-pattern recovery game against the adversarial oracle
    Recovery(RecoveryArgs),
    /// Closed-form bounds and tuned step sizes for one parameter point
    Bounds(BoundsArgs),
    /// Build a sign-vector packing and report its invariants
    Packing(PackingArgs),
    /// Achievable-rate versus minimax-floor gap table
    Gap(GapArgs),
}

#[derive(Args, Debug)]
struct RatesArgs {
    /// Dimensions to sweep (comma-separated) [default: 4]
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Query budgets to sweep (comma-separated) [default: 512,1024,2048,4096]
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<u64>>,
    /// Oracle noise standard deviation [default: 1]
    #[arg(long)]
    sigma: Option<f64>,
    /// Cubic curvature (third-derivative bound); 0 removes bias [default: 0]
    #[arg(long)]
    k: Option<f64>,
    /// Quadratic coefficient of the test function [default: 0]
    #[arg(long)]
    quad: Option<f64>,
    /// Linear coefficient of the test function [default: 0]
    #[arg(long)]
    lin: Option<f64>,
    /// Monte Carlo trials per cell, at least 100 [default: 1000]
    #[arg(long)]
    trials: Option<u64>,
    /// Step rule: fixed:<h> | chebyshev | gaussian | boundary [default: boundary]
    #[arg(long)]
    policy: Option<StepPolicy>,
    /// Domain half-width [default: 1]
    #[arg(long)]
    radius: Option<f64>,
    /// Probe-point coordinate, broadcast across axes [default: 0]
    #[arg(long = "x_star")]
    x_star: Option<f64>,
    /// Output file [default: rates.csv]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json [default: csv]
    #[arg(long)]
    format: Option<OutputFormat>,
}

#[derive(Args, Debug)]
struct RecoveryArgs {
    /// Dimension, at least 4 [default: 16]
    #[arg(long)]
    d: Option<usize>,
    /// Query budget per trial, at least 2d [default: 512]
    #[arg(long = "T")]
    budget: Option<u64>,
    /// Adversarial oracle bias in (0, 0.25] [default: 0.05]
    #[arg(long)]
    delta: Option<f64>,
    /// Game trials [default: 1000]
    #[arg(long)]
    trials: Option<u64>,
    /// Also write trial 0's oracle transcript CSV here
    #[arg(long, value_name = "PATH")]
    transcript: Option<PathBuf>,
    /// Output file [default: recovery.json]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json [default: json]
    #[arg(long)]
    format: Option<OutputFormat>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Dimension [default: 16]
    #[arg(long)]
    d: Option<usize>,
    /// Query budget [default: 100]
    #[arg(long = "T")]
    budget: Option<u64>,
    /// Oracle noise standard deviation [default: 1]
    #[arg(long)]
    sigma: Option<f64>,
    /// Third-derivative bound [default: 0]
    #[arg(long)]
    k: Option<f64>,
    /// Boundary step for the curvature-free forms [default: 1]
    #[arg(long = "h_r")]
    h_r: Option<f64>,
    /// Adversarial bias; adds the KL/Fano rows when given
    #[arg(long)]
    delta: Option<f64>,
    /// Write the JSON report here as well
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PackingArgs {
    /// Dimension [default: 8]
    #[arg(long)]
    d: Option<usize>,
    /// Gradient-gap scale; adds the psi row when given
    #[arg(long)]
    delta: Option<f64>,
    /// Write the packing members here as CSV rows of +1/-1
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GapArgs {
    /// Dimensions to tabulate (comma-separated) [default: 16,32,64,128]
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Query budgets to tabulate (comma-separated) [default: 3200]
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<u64>>,
    /// Oracle noise standard deviation [default: 1]
    #[arg(long)]
    sigma: Option<f64>,
    /// Third-derivative bound [default: 0]
    #[arg(long)]
    k: Option<f64>,
    /// Boundary step for the curvature-free exact rate [default: 2]
    #[arg(long = "h_r")]
    h_r: Option<f64>,
    /// Output file [default: gap.csv]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json [default: csv]
    #[arg(long)]
    format: Option<OutputFormat>,
}

fn main() -> ExitCode {
    // Restore the default SIGPIPE disposition so a downstream reader closing
    // the pipe early (`zograd ... | head`) ends the process quietly instead
    // of panicking on the next write to stdout.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Some(command) = cli.command else {
        let _ = Cli::command().print_help();
        return ExitCode::from(1);
    };
    match run(command, cli.config, cli.seed, cli.threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(
    command: Command,
    config_path: Option<PathBuf>,
    seed_flag: Option<u64>,
    threads: Option<usize>,
) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("thread pool setup failed: {e}")))?;
    }
    let file_config = match config_path {
        Some(path) => Config::parse(&fs::read_to_string(path)?)?,
        None => Config::default(),
    };
    let seed = seed_flag
        .or(file_config.seed)
        .unwrap_or_else(rand::random::<u64>);
    match command {
        Command::Rates(args) => rates(args, file_config, seed),
        Command::Recovery(args) => recovery(args, file_config, seed),
        Command::Bounds(args) => bounds(args, file_config, seed),
        Command::Packing(args) => packing(args, file_config, seed),
        Command::Gap(args) => gap(args, file_config, seed),
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn rates(args: RatesArgs, file: Config, seed: u64) -> Result<()> {
    let flags = Config {
        dims: args.dims,
        budgets: args.budgets,
        sigma: args.sigma,
        k: args.k,
        quad: args.quad,
        lin: args.lin,
        trials: args.trials,
        policy: args.policy,
        radius: args.radius,
        x_star: args.x_star,
        out: args.out,
        format: args.format,
        ..Config::default()
    };
    let cfg = flags.or(file);
    let grid = ExperimentGrid {
        dims: cfg.dims.unwrap_or_else(|| vec![4]),
        budgets: cfg.budgets.unwrap_or_else(|| vec![512, 1024, 2048, 4096]),
        sigma: cfg.sigma.unwrap_or(1.0),
        k: cfg.k.unwrap_or(0.0),
        family: CubicFamily {
            quad: cfg.quad.unwrap_or(0.0),
            lin: cfg.lin.unwrap_or(0.0),
        },
        trials: cfg.trials.unwrap_or(1000),
        master_seed: seed,
        step_policy: cfg.policy.unwrap_or(StepPolicy::Boundary),
        radius: cfg.radius.unwrap_or(1.0),
        x_star: cfg.x_star.unwrap_or(0.0),
    };
    let out = cfg.out.unwrap_or_else(|| PathBuf::from("rates.csv"));
    let format = cfg.format.unwrap_or(OutputFormat::Csv);
    println!(
        "# rates dims={} budgets={} sigma={} k={} quad={} lin={} trials={} \
         policy={} radius={} x_star={} seed={} out={} format={}",
        join(&grid.dims),
        join(&grid.budgets),
        grid.sigma,
        grid.k,
        grid.family.quad,
        grid.family.lin,
        grid.trials,
        grid.step_policy,
        grid.radius,
        grid.x_star,
        seed,
        out.display(),
        format
    );
    let records = run_fdm_grid(&grid)?;
    println!("d,T,mean_l1_error,ci_halfwidth,predicted");
    for r in &records {
        println!(
            "{},{},{},{},{}",
            r.d, r.budget, r.mean_l1_error, r.ci_halfwidth, r.predicted
        );
    }
    print_fits(&records, &grid);
    emit_results(&records, &out, format)?;
    println!("# wrote {}", out.display());
    Ok(())
}

fn print_fits(records: &[ExperimentRecord], grid: &ExperimentGrid) {
    if grid.budgets.len() >= 3 {
        for &d in &grid.dims {
            let subset: Vec<ExperimentRecord> =
                records.iter().filter(|r| r.d == d).copied().collect();
            match fit_rate(&subset, RateAxis::Budget) {
                Ok(fit) => println!(
                    "# fit d={d}: slope vs T = {:.4} (r^2 = {:.4})",
                    fit.slope, fit.r_squared
                ),
                Err(e) => println!("# fit d={d}: unavailable ({e})"),
            }
        }
    }
    if grid.dims.len() >= 3 {
        for &budget in &grid.budgets {
            let subset: Vec<ExperimentRecord> = records
                .iter()
                .filter(|r| r.budget == budget)
                .copied()
                .collect();
            match fit_rate(&subset, RateAxis::Dimension) {
                Ok(fit) => println!(
                    "# fit T={budget}: slope vs d = {:.4} (r^2 = {:.4})",
                    fit.slope, fit.r_squared
                ),
                Err(e) => println!("# fit T={budget}: unavailable ({e})"),
            }
        }
    }
}

const RECOVERY_CSV_HEADER: &str = "d,T,delta,trials,empirical_error_prob,fano_floor,\
markov_ceiling_applicable,mean_l1_risk,psi";

fn recovery_csv(result: &RecoveryGameResult) -> String {
    format!(
        "{RECOVERY_CSV_HEADER}\n{},{},{},{},{},{},{},{},{}\n",
        result.d,
        result.budget,
        result.delta,
        result.trials,
        result.empirical_error_prob,
        result.fano_floor,
        result.markov_ceiling_applicable,
        result.mean_l1_risk,
        result.psi
    )
}

fn recovery(args: RecoveryArgs, file: Config, seed: u64) -> Result<()> {
    let flags = Config {
        d: args.d,
        budget: args.budget,
        delta: args.delta,
        trials: args.trials,
        out: args.out,
        format: args.format,
        ..Config::default()
    };
    let cfg = flags.or(file);
    let d = cfg.d.unwrap_or(16);
    let budget = cfg.budget.unwrap_or(512);
    let delta = cfg.delta.unwrap_or(0.05);
    let trials = cfg.trials.unwrap_or(1000);
    let out = cfg.out.unwrap_or_else(|| PathBuf::from("recovery.json"));
    let format = cfg.format.unwrap_or(OutputFormat::Json);
    println!(
        "# recovery d={d} T={budget} delta={delta} trials={trials} seed={seed} \
         out={} format={format}",
        out.display()
    );
    let result = run_recovery_game(d, budget, delta, trials, seed)?;
    println!("empirical_error_prob = {}", result.empirical_error_prob);
    println!(
        "fano_floor = {} (clamped: {})",
        result.fano_floor,
        result.fano_floor.max(0.0)
    );
    println!("mean_l1_risk = {}", result.mean_l1_risk);
    println!("psi = {} (ceiling regime at risk <= {})", result.psi, result.psi / 9.0);
    println!(
        "markov_ceiling_applicable = {}",
        result.markov_ceiling_applicable
    );
    if let Some(path) = args.transcript {
        let transcript = recovery_transcript(d, budget, delta, seed)?;
        let mut writer = std::io::BufWriter::new(fs::File::create(&path)?);
        transcript.write_csv(&mut writer)?;
        writer.flush()?;
        println!("# wrote transcript {}", path.display());
    }
    match format {
        OutputFormat::Csv => fs::write(&out, recovery_csv(&result))?,
        OutputFormat::Json => {
            let mut json = serde_json::to_string_pretty(&result)
                .map_err(|e| Error::invalid(format!("JSON encoding failed: {e}")))?;
            json.push('\n');
            fs::write(&out, json)?;
        }
    }
    println!("# wrote {}", out.display());
    Ok(())
}

fn bounds(args: BoundsArgs, file: Config, seed: u64) -> Result<()> {
    let flags = Config {
        d: args.d,
        budget: args.budget,
        sigma: args.sigma,
        k: args.k,
        h_r: args.h_r,
        delta: args.delta,
        out: args.out,
        ..Config::default()
    };
    let cfg = flags.or(file);
    let d = cfg.d.unwrap_or(16);
    let budget = cfg.budget.unwrap_or(100);
    let sigma = cfg.sigma.unwrap_or(1.0);
    let k = cfg.k.unwrap_or(0.0);
    let h_r = cfg.h_r.unwrap_or(1.0);
    let delta = cfg.delta;
    println!(
        "# bounds d={d} T={budget} sigma={sigma} k={k} h_r={h_r} delta={} seed={seed}",
        delta.map_or_else(|| "none".into(), |v| v.to_string())
    );
    let mut inputs = RateInputs::new(d, budget, sigma, k).with_h_r(h_r);
    if let Some(delta) = delta {
        inputs = inputs.with_delta(delta);
    }
    inputs.validate()?;
    let mut rows: Vec<(&str, serde_json::Value)> = vec![
        ("packing_target_size", target_size(d).into()),
        ("packing_separation", separation_threshold(d).into()),
        ("lower_bound_minimax", lower_bound_minimax(d, budget).into()),
        (
            "lower_bound_minimax_rate",
            lower_bound_minimax_rate(d, budget).into(),
        ),
        ("fdm_upper_bound", fdm_upper_bound(&inputs)?.into()),
        ("fdm_gaussian_exact", fdm_gaussian_exact(&inputs)?.into()),
        (
            "fdm_gaussian_rate_constant",
            fdm_gaussian_rate_constant().into(),
        ),
        (
            "fdm_gaussian_minimized_constant",
            fdm_gaussian_minimized_constant().into(),
        ),
    ];
    if k > 0.0 && sigma > 0.0 {
        let h_cheb = optimal_step_chebyshev(d, budget, sigma, k)?;
        let h_gauss = optimal_step_gaussian(d, budget, sigma, k)?;
        rows.push(("optimal_step_chebyshev", h_cheb.into()));
        rows.push(("optimal_step_gaussian", h_gauss.into()));
        rows.push((
            "gaussian_error_at_optimal_step",
            gaussian_fdm_error_at_h(&inputs, h_gauss).into(),
        ));
    }
    if let Some(delta) = delta {
        rows.push(("bernoulli_kl", bernoulli_kl(delta)?.into()));
        rows.push((
            "kl_transcript_bound",
            kl_transcript_bound(budget, delta)?.into(),
        ));
        rows.push((
            "fano_error_floor",
            fano_error_floor(d, budget, delta).into(),
        ));
    }
    let width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(0);
    for (name, value) in &rows {
        println!("{name:width$}  {value}");
    }
    let json_map: serde_json::Map<String, serde_json::Value> = [
        ("d".to_string(), d.into()),
        ("T".to_string(), budget.into()),
        ("sigma".to_string(), sigma.into()),
        ("k".to_string(), k.into()),
        ("h_r".to_string(), h_r.into()),
        (
            "delta".to_string(),
            delta.map_or(serde_json::Value::Null, Into::into),
        ),
    ]
    .into_iter()
    .chain(rows.iter().map(|(name, value)| (name.to_string(), value.clone())))
    .collect();
    let mut json = serde_json::to_string_pretty(&json_map)
        .map_err(|e| Error::invalid(format!("JSON encoding failed: {e}")))?;
    json.push('\n');
    println!("{json}");
    if let Some(out) = cfg.out {
        fs::write(&out, json)?;
        println!("# wrote {}", out.display());
    }
    Ok(())
}

fn packing(args: PackingArgs, file: Config, seed: u64) -> Result<()> {
    let flags = Config {
        d: args.d,
        delta: args.delta,
        out: args.out,
        ..Config::default()
    };
    let cfg = flags.or(file);
    let d = cfg.d.unwrap_or(8);
    println!(
        "# packing d={d} delta={} seed={seed}",
        cfg.delta.map_or_else(|| "none".into(), |v| v.to_string())
    );
    let set = build_packing(d, seed)?;
    println!("size = {} (target {})", set.len(), target_size(d));
    println!(
        "min_pairwise_distance = {} (threshold {})",
        set.min_pairwise_distance(),
        separation_threshold(d)
    );
    if let Some(delta) = cfg.delta {
        let psi = min_discrepancy_psi(&set, delta, &vec![0.0; d])?;
        println!("psi = {psi} (guarantee {})", delta / 2.0);
    }
    if let Some(out) = cfg.out {
        let mut body = String::new();
        for v in set.vectors() {
            let row: Vec<String> =
                v.as_slice().iter().map(|s| s.to_string()).collect();
            body.push_str(&row.join(","));
            body.push('\n');
        }
        fs::write(&out, body)?;
        println!("# wrote {}", out.display());
    }
    Ok(())
}

const GAP_CSV_HEADER: &str = "d,T,exact,lower,ratio,vacuous";

fn gap_csv(report: &GapReport) -> String {
    let mut out = String::from(GAP_CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.d,
            row.budget,
            row.exact,
            row.lower,
            row.ratio.map_or_else(String::new, |r| r.to_string()),
            row.vacuous
        ));
    }
    out
}

fn gap(args: GapArgs, file: Config, seed: u64) -> Result<()> {
    let flags = Config {
        dims: args.dims,
        budgets: args.budgets,
        sigma: args.sigma,
        k: args.k,
        h_r: args.h_r,
        out: args.out,
        format: args.format,
        ..Config::default()
    };
    let cfg = flags.or(file);
    let dims = cfg.dims.unwrap_or_else(|| vec![16, 32, 64, 128]);
    let budgets = cfg.budgets.unwrap_or_else(|| vec![3200]);
    let sigma = cfg.sigma.unwrap_or(1.0);
    let k = cfg.k.unwrap_or(0.0);
    let h_r = cfg.h_r.unwrap_or(2.0);
    let out = cfg.out.unwrap_or_else(|| PathBuf::from("gap.csv"));
    let format = cfg.format.unwrap_or(OutputFormat::Csv);
    println!(
        "# gap dims={} budgets={} sigma={sigma} k={k} h_r={h_r} seed={seed} out={} \
         format={format}",
        join(&dims),
        join(&budgets),
        out.display()
    );
    let report = gap_report(&dims, &budgets, sigma, k, h_r)?;
    print!("{}", gap_csv(&report));
    match report.slope_vs_d {
        Some(slope) => println!("# slope of log ratio vs log d: {slope:.4}"),
        None => println!("# slope of log ratio vs log d: unavailable"),
    }
    match report.slope_vs_budget {
        Some(slope) => println!("# slope of log ratio vs log T: {slope:.4}"),
        None => println!("# slope of log ratio vs log T: unavailable"),
    }
    match format {
        OutputFormat::Csv => fs::write(&out, gap_csv(&report))?,
        OutputFormat::Json => {
            let mut json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::invalid(format!("JSON encoding failed: {e}")))?;
            json.push('\n');
            fs::write(&out, json)?;
        }
    }
    println!("# wrote {}", out.display());
    Ok(())
}
