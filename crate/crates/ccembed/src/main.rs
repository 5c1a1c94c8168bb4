use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ccembed::export::dump_fields;
use ccembed::suite::{render_table, run_suite, Suite, SuiteRow};
use ccembed::{run_pipeline, ConfigError, PipelineConfig, StopAfter, EXIT_CONFIG};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ccembed", version, about = "Isometric p-embeddings of conformally compact metrics into hyperbolic half-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline runs and verification suites.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Boundary curvature and hypothesis check only.
    Kappa(RunArgs),
    /// Up to the adjusted metric G.
    Bdf(RunArgs),
    /// Up to the Euclidean embedding of G.
    Embed(RunArgs),
}

#[derive(Subcommand)]
enum PipelineCommand {
    Run(RunArgs),
    /// invariants, limits, negative-controls or all.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct Common {
    /// Output directory for the report and field dumps.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every intermediate field as CSV.
    #[arg(long)]
    dump_fields: bool,
    /// Tolerance override, `key=value`; repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    tol: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SuiteArgs {
    name: String,
    #[command(flatten)]
    common: Common,
}

fn load(path: &Path, common: &Common) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = PipelineConfig::from_path(path)?;
    for t in &common.tol {
        cfg.apply_override(t)?;
    }
    if let Some(seed) = common.seed {
        cfg.embed.seed = seed;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    Ok(cfg)
}

fn run(args: &RunArgs, stop: StopAfter) -> ExitCode {
    let cfg = match load(&args.config, &args.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let outcome = match run_pipeline(&cfg, stop) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let text = outcome.report.render();
    print!("{text}");
    if let Some(dir) = &cfg.out {
        let written = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("report.txt"), &text));
        if let Err(e) = written {
            eprintln!("error: cannot write report to {}: {e}", dir.display());
            return ExitCode::from(1);
        }
        if args.common.dump_fields {
            if let Err(e) = dump_fields(dir, &outcome.artifacts) {
                eprintln!("error: field dump failed: {e}");
                return ExitCode::from(1);
            }
        }
    } else if args.common.dump_fields {
        eprintln!("warning: --dump-fields needs --out or `out` in the config; nothing written");
    }
    ExitCode::from(outcome.report.verdict.exit_code() as u8)
}

fn suite(args: &SuiteArgs) -> ExitCode {
    let Some(which) = Suite::from_name(&args.name) else {
        eprintln!("error: unknown suite `{}` (invariants, limits, negative-controls, all)", args.name);
        return ExitCode::from(EXIT_CONFIG as u8);
    };
    if !args.common.tol.is_empty() || args.common.seed.is_some() {
        eprintln!("note: suites use fixed tolerances and seeds; --tol and --seed are ignored");
    }
    let rows = run_suite(which);
    let table = render_table(&rows);
    print!("{table}");
    if let Some(dir) = &args.common.out {
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join(format!("suite-{}.txt", args.name)), &table)) {
            eprintln!("error: cannot write {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(if rows.iter().all(SuiteRow::passed) { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match &cli.command {
        Command::Pipeline(PipelineCommand::Run(a)) => run(a, StopAfter::Full),
        Command::Pipeline(PipelineCommand::Suite(a)) => suite(a),
        Command::Kappa(a) => run(a, StopAfter::Kappa),
        Command::Bdf(a) => run(a, StopAfter::Bdf),
        Command::Embed(a) => run(a, StopAfter::Embed),
    }
}
