use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use nacc::config::{CompilerConfig, Machine};
use nacc::layout::LayoutError;
use nacc::parallel::ParallelError;
use nacc::render::{render_svg, to_jsonl, trace_events};
use nacc::report::{summarize, CompileReport};
use nacc::{compile_qasm, CompileOptions, Error, Strategy};

const EXIT_IO: u8 = 3;
const EXIT_QASM: u8 = 4;
const EXIT_COMPILE: u8 = 5;
const EXIT_CAPACITY: u8 = 6;

#[derive(Parser)]
#[command(name = "nacc", version, about = "Zero-SWAP compiler for neutral-atom arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile one OpenQASM 2.0 file and write a JSON report.
    Compile(CompileArgs),
    /// Print a comparison table for one or more JSON reports.
    Summarize {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MachineArg {
    Quera256,
    Atom1225,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Parallax,
    SwapBaseline,
}

#[derive(clap::Args)]
struct CompileArgs {
    #[arg(long)]
    input: PathBuf,
    /// Grid preset; a config file's [grid] table overrides it.
    #[arg(long, value_enum, env = "NACC_MACHINE", default_value = "quera256")]
    machine: MachineArg,
    /// TOML file overriding hardware and compiler settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    aod_count: Option<u64>,
    #[arg(long, value_enum, default_value = "parallax")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8000, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    /// Leave moved atoms where they are instead of returning them home.
    #[arg(long)]
    no_homing: bool,
    /// Continuous placement to load, or to create when missing.
    #[arg(long)]
    placement_cache: Option<PathBuf>,
    #[arg(long)]
    trace_svg: Option<PathBuf>,
    /// Movement trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Full schedule as JSON.
    #[arg(long)]
    schedule_out: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add wall-clock compile time to the report.
    #[arg(long)]
    timing: bool,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("nacc: {msg}");
    ExitCode::from(code)
}

fn write(path: &Path, text: &str) -> Result<(), ExitCode> {
    std::fs::write(path, text).map_err(|e| fail(EXIT_IO, format!("cannot write {}: {e}", path.display())))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Qasm(_) => EXIT_QASM,
        Error::CacheIo { .. } => EXIT_IO,
        Error::Config(nacc::config::ConfigError::Io { .. }) => EXIT_IO,
        Error::Layout(LayoutError::InsufficientCapacity { .. }) => EXIT_CAPACITY,
        Error::Parallel(ParallelError::FootprintTooLarge { .. }) => EXIT_CAPACITY,
        _ => EXIT_COMPILE,
    }
}

fn compile(args: CompileArgs) -> Result<(), ExitCode> {
    let machine = match args.machine {
        MachineArg::Quera256 => Machine::Quera256,
        MachineArg::Atom1225 => Machine::Atom1225,
    };
    let mut config = CompilerConfig::for_machine(machine);
    if let Some(path) = &args.config {
        config = config.load_over(path).map_err(|e| {
            let code = if matches!(e, nacc::config::ConfigError::Io { .. }) { EXIT_IO } else { EXIT_COMPILE };
            fail(code, e)
        })?;
    }
    if let Some(n) = args.aod_count {
        config.aod_count = n as usize;
    }
    if args.no_homing {
        config.homing = false;
    }
    let source = std::fs::read_to_string(&args.input)
        .map_err(|e| fail(EXIT_IO, format!("cannot read {}: {e}", args.input.display())))?;
    let opts = CompileOptions {
        strategy: match args.strategy {
            StrategyArg::Parallax => Strategy::Parallax,
            StrategyArg::SwapBaseline => Strategy::SwapBaseline,
        },
        seed: args.seed,
        shots: args.shots,
        placement_cache: args.placement_cache.clone(),
    };
    let started = Instant::now();
    let compiled = compile_qasm(&source, &config, &opts).map_err(|e| {
        let where_ = args.input.display();
        fail(exit_code(&e), format!("{where_}: {e}"))
    })?;
    let elapsed = started.elapsed();
    let name = args
        .input
        .file_stem()
        .map_or_else(|| "circuit".to_string(), |s| s.to_string_lossy().into_owned());
    let mut report = CompileReport::from_compilation(&compiled, &name, machine.name());
    if args.timing {
        report.compile_time_ms = Some(elapsed.as_secs_f64() * 1e3);
    }

    let events = trace_events(&compiled.schedule, &config.hardware);
    if let Some(path) = &args.trace {
        write(path, &to_jsonl(&events))?;
    }
    if let Some(path) = &args.trace_svg {
        let svg = render_svg(&events, &compiled.topology, &compiled.aod, 0..usize::MAX);
        write(path, &svg)?;
    }
    if let Some(path) = &args.schedule_out {
        let json = serde_json::to_string_pretty(&compiled.schedule).expect("schedule serializes");
        write(path, &(json + "\n"))?;
    }
    match &args.out {
        Some(path) => write(path, &report.to_json())?,
        None => print!("{}", report.to_json()),
    }
    Ok(())
}

fn run_summarize(paths: &[PathBuf]) -> Result<(), ExitCode> {
    let mut reports = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(p).map_err(|e| fail(EXIT_IO, format!("cannot read {}: {e}", p.display())))?;
        let r: CompileReport = serde_json::from_str(&text)
            .map_err(|e| fail(EXIT_COMPILE, format!("{} is not a compile report: {e}", p.display())))?;
        reports.push(r);
    }
    print!("{}", summarize(&reports));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(args) => compile(args),
        Command::Summarize { reports } => run_summarize(&reports),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
