// SPDX-License-Identifier: Apache-2.0

//! `lolisa` command-line runner.
//!
//! Exit codes: 0 success (including a throw), 1 parse/type/config error,
//! 2 runtime error, 3 gas exhausted.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lolisa_core::dump::dump_state;
use lolisa_core::env::GasConfig;
use lolisa_core::eval::ExecOptions;
use lolisa_core::run::{exit_code, load, run, Loaded};
use lolisa_core::syntax::{parse, render};

#[derive(Parser)]
#[command(name = "lolisa", version, about = "Check and run Lolisa contract programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Type-check and execute a program.
    Run(RunArgs),
    /// Type-check a program without running it.
    Check(Source),
    /// Parse a program and print it in canonical form.
    Fmt { file: PathBuf },
}

#[derive(Args)]
struct Source {
    file: PathBuf,
    /// Library declarations loaded before the program.
    #[arg(long)]
    lib: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    src: Source,
    /// Function called after the program body. Defaults to `fallback` when declared.
    #[arg(long)]
    entry: Option<String>,
    /// Do not call any entry function.
    #[arg(long, conflicts_with = "entry")]
    no_entry: bool,
    #[arg(long)]
    gas_budget: Option<u64>,
    #[arg(long)]
    gas_limit: Option<u64>,
    /// File of `gas.<Kind>=n` lines.
    #[arg(long)]
    gas_table: Option<PathBuf>,
    /// Print every executed statement.
    #[arg(long)]
    trace: bool,
    /// Print the final memory state.
    #[arg(long)]
    dump: bool,
}

fn read(p: &Path) -> Result<String, String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn load_source(s: &Source) -> Result<Loaded, String> {
    let src = read(&s.file)?;
    let lib = s.lib.as_deref().map(read).transpose()?;
    load(&src, lib.as_deref()).map_err(|e| format!("{}: {e}", s.file.display()))
}

fn cmd_run(a: &RunArgs) -> Result<i32, String> {
    let loaded = load_source(&a.src)?;
    let mut opts = ExecOptions::default();
    if let Some(p) = &a.gas_table {
        let cfg = GasConfig::parse(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
        opts.table = cfg.table;
        opts.budget = cfg.budget.unwrap_or(opts.budget);
        opts.limit = cfg.limit.unwrap_or(opts.limit);
    }
    opts.budget = a.gas_budget.unwrap_or(opts.budget);
    opts.limit = a.gas_limit.unwrap_or(opts.limit);
    opts.record_trace = a.trace;
    opts.entry = match (&a.entry, a.no_entry) {
        (_, true) => None,
        (Some(name), _) => Some(loaded.entry(name).ok_or_else(|| format!("no function named {name}"))?),
        (None, _) => loaded.entry("fallback"),
    };
    let (r, trace, _) = run(&loaded, &opts);
    if a.trace {
        for t in &trace.entries {
            let out = t.outcome.as_ref().map_or("-", |o| o.name());
            println!("{:>6} {:<12} gas {:>8} {out}", t.id, format!("{:?}", t.kind), t.pre_gas);
        }
    }
    if a.dump {
        print!("{}", dump_state(&r.sigma));
    }
    let halt = r.halt.map_or("none", |h| h.name());
    println!("outcome {} halt {halt} gas {}", r.outcome.name(), r.env.gas);
    if let Some(f) = &r.fault {
        eprintln!("error: {f}");
    }
    Ok(exit_code(&r))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Check(s) => load_source(s).map(|_| {
            println!("ok");
            0
        }),
        Cmd::Fmt { file } => read(file).and_then(|src| {
            let p = parse(&src).map_err(|e| format!("{}: {e}", file.display()))?;
            print!("{}", render(&p.statement, Some(&p.names)));
            Ok(0)
        }),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
