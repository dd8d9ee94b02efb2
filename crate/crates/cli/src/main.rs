//! `omprace check` front end.
//!
//! Exit status: 0 when no race is reported, 1 when at least one is, 2 on a
//! usage, I/O or analysis error (which wins over 1).

use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use omprace::bench::{evaluate_benchmarks, KernelStatus};
use omprace::mhp::MhpOptions;
use omprace::pia::PiaLattice;
use omprace::pipeline::{analyze_source, Config};
use omprace::report::{emit_dot, race_json, unsupported_json, Diagnostic, Highlight};

#[derive(Parser)]
#[command(name = "omprace", version, about = "Static data-race checker for OpenMP-style C kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze FILES, or `check bench MANIFEST` to score a labeled corpus.
    Check(CheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct CheckArgs {
    /// Value standing for infinity in phase intervals.
    #[arg(long, default_value_t = omprace::pia::DEFAULT_UPPER_BOUND, value_parser = clap::value_parser!(u64).range(1..))]
    pia_lattice_upper_bound: u64,
    /// Write the solved task graph here. With several inputs one file per
    /// input is written as `<stem>.<input stem>.dot`.
    #[arg(long, value_name = "PATH")]
    emit_taskgraph_dot: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Phase-based parallelism test; `off` reports every pair in the same team.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    mhp_engine: Switch,
    #[arg(required = true, value_name = "FILES")]
    inputs: Vec<PathBuf>,
}

impl CheckArgs {
    fn config(&self) -> Config {
        Config {
            lattice: PiaLattice::new(self.pia_lattice_upper_bound),
            mhp: MhpOptions { engine: self.mhp_engine == Switch::On },
        }
    }
}

/// `NO_COLOR` drops all marking; otherwise red on a terminal and `>>`
/// markers when piped.
fn highlight() -> Highlight {
    if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) {
        Highlight::Plain
    } else if io::stdout().is_terminal() {
        Highlight::Color
    } else {
        Highlight::Marker
    }
}

fn dot_path(base: &Path, input: &Path, many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base.file_stem().unwrap_or_default().to_string_lossy();
    let ext = base.extension().map_or("dot".into(), |e| e.to_string_lossy());
    let file = input.file_stem().unwrap_or_default().to_string_lossy();
    base.with_file_name(format!("{stem}.{file}.{ext}"))
}

fn check(args: &CheckArgs) -> u8 {
    let config = args.config();
    let hl = highlight();
    let many = args.inputs.len() > 1;
    let mut out = io::stdout().lock();
    let mut failed = false;
    let mut raced = false;
    for input in &args.inputs {
        let name = input.display().to_string();
        let text = match std::fs::read_to_string(input) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {name}: {e}");
                failed = true;
                continue;
            }
        };
        let a = match analyze_source(&name, &text, &config) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("error: {e}");
                failed = true;
                continue;
            }
        };
        for w in &a.warnings {
            eprint!("{}", Diagnostic::warning(w).text);
        }
        for u in &a.parsed.unsupported {
            let _ = match args.format {
                Format::Text => write!(out, "{}", Diagnostic::unsupported(u).text),
                Format::Json => writeln!(out, "{}", unsupported_json(u)),
            };
        }
        for r in &a.races {
            let _ = match args.format {
                Format::Text => write!(out, "{}", Diagnostic::race(r, &text, hl).text),
                Format::Json => writeln!(out, "{}", race_json(r, &config.lattice)),
            };
        }
        raced |= !a.races.is_empty();
        if let Some(base) = &args.emit_taskgraph_dot {
            let path = dot_path(base, input, many);
            if let Err(e) = std::fs::write(&path, emit_dot(&a.graph, &a.pia, &config.lattice)) {
                eprintln!("error: {}: {e}", path.display());
                failed = true;
            }
        }
    }
    if failed {
        2
    } else {
        u8::from(raced)
    }
}

fn bench(args: &CheckArgs, manifest: &Path) -> u8 {
    let res = match evaluate_benchmarks(manifest, &args.config()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut out = io::stdout().lock();
    for o in &res.outcomes {
        let expected = if o.entry.expected_race { "yes" } else { "no" };
        let verdict = match &o.status {
            KernelStatus::Analyzed { races } => format!("{races} race(s)"),
            KernelStatus::NotCovered => "not covered".to_string(),
            KernelStatus::Failed(e) => format!("error: {e}"),
        };
        let _ = writeln!(out, "{}\texpected={expected}\t{verdict}", o.entry.path.display());
    }
    let _ = write!(out, "{}", res.metrics);
    0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Check(args) => match args.inputs.as_slice() {
            [first, manifest] if first.as_os_str() == "bench" => bench(args, manifest),
            [first] if first.as_os_str() == "bench" => {
                eprintln!("error: `check bench` needs a MANIFEST argument");
                2
            }
            _ => check(args),
        },
    };
    ExitCode::from(code)
}
