//! `mmq`: service-rate control for Markov-modulated and periodic queues.
//!
//! Scenario configs come in as TOML (see [`config`]), results go out as
//! CSV files plus a `key = value` summary (see [`io`]). Exit codes: 0 on
//! success, 1 for configuration/schema problems, 2 for numeric failures,
//! whose error name is printed on stderr.

mod config;
mod fail;
mod io;
mod pipeline;
mod reproduce;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

/// Writes to stdout, treating a closed pipe as a request to stop: piping
/// reports into `head` must not panic. Other stdout failures are real
/// errors.
fn emit(args: std::fmt::Arguments<'_>, newline: bool) {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    let res = out.write_fmt(args).and_then(|()| {
        if newline {
            out.write_all(b"\n")
        } else {
            Ok(())
        }
    });
    if let Err(e) = res {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

macro_rules! out {
    ($($arg:tt)*) => { emit(format_args!($($arg)*), false) };
}

macro_rules! outln {
    ($($arg:tt)*) => { emit(format_args!($($arg)*), true) };
}

use mmq_core::{heuristics, nhpp, solver, structure};

use config::ConfigFile;
use fail::Failure;
use io::TableRow;

#[derive(Parser)]
#[command(
    name = "mmq",
    version,
    about = "Optimal and heuristic service-rate control for MMPP/M/1 queues"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal policy; writes policy.csv, value.csv, and
    /// summary.txt into the output directory.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `discounted` when alpha > 0 and `average` otherwise.
        #[arg(long, value_enum)]
        criterion: Option<Criterion>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute one heuristic policy and its long-run-average gain.
    Heuristic {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve and run every heuristic; writes a one-row comparison.csv.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print stability, generator-monotonicity, and policy-monotonicity
    /// reports on stdout; the exit code stays 0 even when a report finds
    /// violations.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Periodic (non-homogeneous Poisson) arrival control.
    #[command(subcommand)]
    Nhpp(NhppCommand),
    /// Regenerate a bundled benchmark table from built-in parameters.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=5))]
        table: u8,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum NhppCommand {
    /// Solve the periodic problem exactly on the (queue, clock) lattice.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the MMPP approximation, lift its policy onto the clock grid,
    /// and evaluate the lift under the exact periodic dynamics.
    Approx {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimal solve and MMPP approximation side by side.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Criterion {
    Discounted,
    Average,
}

impl Criterion {
    fn name(self) -> &'static str {
        match self {
            Criterion::Discounted => "discounted",
            Criterion::Average => "average",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Arm,
    Prm,
    Fixed,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Arm => "arm",
            Method::Prm => "prm",
            Method::Fixed => "fixed",
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(failure) = run(cli) {
        eprintln!("error: {failure}");
        std::process::exit(failure.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            config,
            criterion,
            out,
        } => cmd_solve(&config, criterion, &out),
        Command::Heuristic {
            config,
            method,
            out,
        } => cmd_heuristic(&config, method, &out),
        Command::Compare { config, out } => cmd_compare(&config, &out),
        Command::Check { config } => cmd_check(&config),
        Command::Nhpp(cmd) => cmd_nhpp(cmd),
        Command::Reproduce { table, out } => reproduce::run(table, &out),
    }
}

/// Criterion actually solved: an explicit flag wins, otherwise a positive
/// discount selects the discounted problem.
fn pick_criterion(requested: Option<Criterion>, alpha: f64) -> Result<Criterion, Failure> {
    let criterion = requested.unwrap_or(if alpha > 0.0 {
        Criterion::Discounted
    } else {
        Criterion::Average
    });
    if criterion == Criterion::Discounted && alpha <= 0.0 {
        return Err(Failure::Config(
            "the discounted criterion needs alpha > 0".into(),
        ));
    }
    Ok(criterion)
}

fn cmd_solve(config: &Path, criterion: Option<Criterion>, out: &Path) -> Result<(), Failure> {
    let cfg = ConfigFile::from_path(config)?;
    let scenario = cfg.scenario()?;
    let criterion = pick_criterion(criterion, scenario.alpha())?;
    let res = match criterion {
        Criterion::Discounted => solver::solve_discounted(&scenario)?,
        Criterion::Average => solver::solve_average(&scenario)?,
    };
    if res.stability_warning {
        eprintln!("warning: u_max does not exceed the mean arrival rate");
    }
    std::fs::create_dir_all(out)?;
    io::write_policy_csv(&out.join("policy.csv"), &res.policy)?;
    io::write_value_csv(&out.join("value.csv"), &res.value)?;
    let mut entries = vec![("criterion", criterion.name().to_string())];
    if criterion == Criterion::Average {
        // The summary reports the exact stationary gain of the policy as
        // written, so re-loading policy.csv and evaluating it reproduces
        // this number.
        let gain = solver::evaluate_policy(&scenario, &res.policy)?;
        entries.push(("gain", io::fmt_g(gain)));
        outln!("gain = {}", io::fmt_g(gain));
    }
    entries.push(("residual", io::fmt_g(res.residual)));
    entries.push(("iterations", res.iterations.to_string()));
    entries.push(("solved_rows", res.solved_rows.to_string()));
    if res.stability_warning {
        entries.push(("stability_warning", "true".to_string()));
    }
    io::write_summary(&out.join("summary.txt"), &entries)
}

fn cmd_heuristic(config: &Path, method: Method, out: &Path) -> Result<(), Failure> {
    let cfg = ConfigFile::from_path(config)?;
    let scenario = cfg.scenario()?;
    let mut entries = vec![("method", method.name().to_string())];
    let (policy, gain) = match method {
        Method::Arm => {
            let policy = heuristics::arm_policy(&scenario)?;
            let gain = solver::evaluate_policy(&scenario, &policy)?;
            (policy, gain)
        }
        Method::Prm => {
            let policy = heuristics::prm_policy(&scenario)?;
            let gain = solver::evaluate_policy(&scenario, &policy)?;
            (policy, gain)
        }
        Method::Fixed => {
            let found = heuristics::fixed_rate_policy(&scenario)?;
            entries.push(("mu_star", io::fmt_g(found.mu_star)));
            let policy = solver::Policy::constant(
                scenario.phase().num_phases(),
                scenario.truncation_n(),
                found.mu_star,
            );
            (policy, found.gain)
        }
    };
    entries.push(("gain", io::fmt_g(gain)));
    std::fs::create_dir_all(out)?;
    io::write_policy_csv(&out.join("policy.csv"), &policy)?;
    io::write_summary(&out.join("summary.txt"), &entries)?;
    outln!("gain = {}", io::fmt_g(gain));
    Ok(())
}

fn cmd_compare(config: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = ConfigFile::from_path(config)?;
    let scenario = cfg.scenario()?;
    let row = heuristics::compare_heuristics(&scenario)?;
    outln!(
        "optimal {} | arm {} ({:+.2}%) | prm {} ({:+.2}%) | fixed {} ({:+.2}%)",
        io::fmt_g(row.optimal_gain),
        io::fmt_g(row.arm.gain),
        row.arm.pct_suboptimal,
        io::fmt_g(row.prm.gain),
        row.prm.pct_suboptimal,
        io::fmt_g(row.fixed.gain),
        row.fixed.pct_suboptimal,
    );
    let label = config
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario")
        .to_string();
    std::fs::create_dir_all(out)?;
    io::write_comparison_csv(
        &out.join("comparison.csv"),
        &[TableRow {
            case_label: label,
            c_label: String::new(),
            row,
        }],
    )
}

fn cmd_check(config: &Path) -> Result<(), Failure> {
    let cfg = ConfigFile::from_path(config)?;
    let scenario = cfg.scenario()?;
    let stability = scenario.stability_check()?;
    outln!(
        "stability: {} (mean arrival rate = {}, u_max = {})",
        if stability.stable { "stable" } else { "unstable" },
        io::fmt_g(stability.mean_rate),
        io::fmt_g(stability.u_max)
    );
    outln!(
        "generator stochastically monotone: {}",
        if structure::check_generator_monotone(scenario.phase()) {
            "yes"
        } else {
            "no"
        }
    );
    let criterion = pick_criterion(None, scenario.alpha())?;
    let res = match criterion {
        Criterion::Discounted => solver::solve_discounted(&scenario)?,
        Criterion::Average => solver::solve_average(&scenario)?,
    };
    outln!("criterion: {}", criterion.name());
    if criterion == Criterion::Average {
        let gain = solver::evaluate_policy(&scenario, &res.policy)?;
        outln!("gain = {}", io::fmt_g(gain));
    }
    out!(
        "{}",
        io::render_report("monotone_in_n", &structure::verify_monotone_in_n(&res.policy))
    );
    out!(
        "{}",
        io::render_report("monotone_in_s", &structure::verify_monotone_in_s(&res.policy))
    );
    Ok(())
}

fn cmd_nhpp(cmd: NhppCommand) -> Result<(), Failure> {
    match cmd {
        NhppCommand::Solve { config, out } => {
            let cfg = ConfigFile::from_path(&config)?;
            let sc = cfg.nhpp_scenario()?;
            let res = nhpp::solve_nhpp_average(&sc)?;
            std::fs::create_dir_all(&out)?;
            io::write_nhpp_policy_csv(&out.join("policy.csv"), &res.policy)?;
            io::write_summary(
                &out.join("summary.txt"),
                &[
                    ("gain", io::fmt_g(res.gain)),
                    ("residual", io::fmt_g(res.residual)),
                    ("iterations", res.iterations.to_string()),
                ],
            )?;
            outln!("gain = {}", io::fmt_g(res.gain));
            Ok(())
        }
        NhppCommand::Approx { config, out } => {
            let cfg = ConfigFile::from_path(&config)?;
            let sc = cfg.nhpp_scenario()?;
            let partitions = cfg.nhpp_partitions()?;
            let outcome = pipeline::approximate(&sc, partitions)?;
            std::fs::create_dir_all(&out)?;
            io::write_policy_csv(&out.join("mmpp_policy.csv"), &outcome.mmpp_policy)?;
            io::write_nhpp_policy_csv(&out.join("policy.csv"), &outcome.lifted)?;
            io::write_summary(
                &out.join("summary.txt"),
                &[
                    ("partitions", partitions.to_string()),
                    ("gain", io::fmt_g(outcome.gain)),
                ],
            )?;
            outln!("gain = {}", io::fmt_g(outcome.gain));
            Ok(())
        }
        NhppCommand::Compare { config, out } => {
            let cfg = ConfigFile::from_path(&config)?;
            let sc = cfg.nhpp_scenario()?;
            let partitions = cfg.nhpp_partitions()?;
            let res = nhpp::solve_nhpp_average(&sc)?;
            let outcome = pipeline::approximate(&sc, partitions)?;
            let pct = 100.0 * (outcome.gain - res.gain) / res.gain;
            std::fs::create_dir_all(&out)?;
            io::write_nhpp_policy_csv(&out.join("policy.csv"), &res.policy)?;
            io::write_policy_csv(&out.join("mmpp_policy.csv"), &outcome.mmpp_policy)?;
            io::write_nhpp_policy_csv(&out.join("lifted_policy.csv"), &outcome.lifted)?;
            io::write_summary(
                &out.join("summary.txt"),
                &[
                    ("optimal_gain", io::fmt_g(res.gain)),
                    ("approx_gain", io::fmt_g(outcome.gain)),
                    ("pct_difference", io::fmt_g(pct)),
                ],
            )?;
            outln!(
                "optimal {} | approx {} ({pct:+.2}%)",
                io::fmt_g(res.gain),
                io::fmt_g(outcome.gain)
            );
            Ok(())
        }
    }
}
