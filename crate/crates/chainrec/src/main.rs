use chainrec::expr::parse_map_expr;
use chainrec::scenario::{
    prepare, run_attractors, run_cr, run_duality, run_oracle_sweep, write_report, write_sweep,
    AnalysisReport, Prepared, RunError, Scenario, Timings, TOOL_VERSION,
};
use chainrec::words::check_abelian_sampled;
use clap::{Args, Parser, Subcommand};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

/// Set-oriented chain recurrence and attractor analysis for finitely
/// generated semigroups of planar maps.
#[derive(Parser)]
#[command(name = "chainrec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for internal data parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for artifacts (overrides the scenario's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Chain recurrent set approximation and chain components.
    Cr(ScenarioArgs),
    /// Trapping-region certification, attractors, and basins.
    Attractors(ScenarioArgs),
    /// Full pipeline: cr + attractors + duality comparison.
    Duality(ScenarioArgs),
    /// Seeded property sweep of the exact finite-state oracle.
    Oracle {
        /// Number of random systems.
        #[arg(long, default_value_t = 200)]
        seeds: usize,
        /// Max state count per system.
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Restrict to systems that are abelian by construction.
        #[arg(long, default_value_t = false)]
        abelian_only: bool,
        /// Base seed; sweep seed k is seed + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse generator expressions and print their canonical forms.
    ParseCheck {
        /// Expressions to check; when absent, the scenario's generators.
        exprs: Vec<String>,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn out_dir(args: &ScenarioArgs, scenario: &Scenario) -> Result<PathBuf, RunError> {
    if let Some(out) = &args.out {
        return Ok(out.clone());
    }
    if let Some(out) = &scenario.out_dir {
        return Ok(PathBuf::from(out));
    }
    Err(RunError::Config(
        "out: no output directory (pass --out or set out_dir in the scenario)".into(),
    ))
}

fn load(args: &ScenarioArgs) -> Result<(Prepared, PathBuf), RunError> {
    let scenario = Scenario::from_file(&args.scenario)?;
    let out = out_dir(args, &scenario)?;
    let prep = prepare(scenario)?;
    Ok((prep, out))
}

fn base_report(prep: &Prepared) -> AnalysisReport {
    AnalysisReport {
        tool_version: TOOL_VERSION.into(),
        config_hash: prep.scenario.config_hash(),
        abelian_sampled: check_abelian_sampled(&prep.sys, &prep.grid.bounds(), 1000),
        cr: None,
        attractors: None,
        duality: None,
        scenario: prep.scenario.clone(),
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Cr(args) => {
            let (prep, out) = load(&args)?;
            let mut timings = Timings::default();
            let cr = run_cr(&prep, &out, &mut timings)?;
            let mut report = base_report(&prep);
            report.cr = Some(cr.fragment);
            write_report(&report, &out)?;
            timings.write(&out.join("timings.txt"))?;
            eprintln!("cr: {} cells -> {}", cr.cr.len(), out.display());
            Ok(())
        }
        Command::Attractors(args) => {
            let (prep, out) = load(&args)?;
            let mut timings = Timings::default();
            let at = run_attractors(&prep, &out, &mut timings)?;
            let mut report = base_report(&prep);
            report.attractors = Some(at.outcomes);
            write_report(&report, &out)?;
            timings.write(&out.join("timings.txt"))?;
            eprintln!(
                "attractors: {} certified of {} candidates -> {}",
                at.records.len(),
                report.attractors.as_ref().unwrap().len(),
                out.display()
            );
            Ok(())
        }
        Command::Duality(args) => {
            let (prep, out) = load(&args)?;
            let mut timings = Timings::default();
            let report = run_duality(&prep, &out, &mut timings)?;
            write_report(&report, &out)?;
            timings.write(&out.join("timings.txt"))?;
            let duality = report.duality.as_ref().unwrap();
            eprintln!(
                "duality: sym diff {} cells, max boundary distance {} cells, pass={:?}",
                duality.sym_diff_cells, duality.max_boundary_dist_cells, duality.pass
            );
            Ok(())
        }
        Command::Oracle {
            seeds,
            n_max,
            abelian_only,
            seed,
            out,
        } => {
            let report = run_oracle_sweep(seeds, n_max, abelian_only, seed)?;
            write_sweep(&report, &out)?;
            eprintln!(
                "oracle: {}/{} seeds pass all properties ({} skipped) -> {}",
                report.summary.all_pass,
                report.summary.seeds,
                report.summary.skipped,
                out.display()
            );
            if report.summary.skipped > 0 {
                return Err(RunError::Budget(format!(
                    "{} seeds exceeded the closure bound and were skipped",
                    report.summary.skipped
                )));
            }
            Ok(())
        }
        Command::ParseCheck { exprs, scenario } => {
            let mut sources = exprs;
            if sources.is_empty() {
                let path = scenario.ok_or_else(|| {
                    RunError::Config("parse-check needs expressions or --scenario".into())
                })?;
                sources = Scenario::from_file(&path)?.generators;
            }
            if sources.is_empty() {
                return Err(RunError::Config("parse-check: nothing to check".into()));
            }
            for src in &sources {
                let e = parse_map_expr(src)
                    .map_err(|err| RunError::Config(format!("`{src}`: {err}")))?;
                println!("{src} -> {e}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(2);
        }
    }
    let outcome = catch_unwind(AssertUnwindSafe(|| run(cli)));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            eprintln!("internal invariant violation: {msg}");
            ExitCode::from(4)
        }
    }
}
