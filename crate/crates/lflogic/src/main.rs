//! Command-line entry point: `lflogic check|repl|serve`.

use std::io::{self, IsTerminal};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lflogic::session::Session;
use lflogic::{protocol, repl};

#[derive(Parser)]
#[command(name = "lflogic", version, about = "A proof assistant for reasoning about LF specifications")]
struct Cli {
    /// Depth bound used by `search` when no explicit bound is given.
    #[arg(long, global = true, default_value_t = lflogic_core::tactics::DEFAULT_SEARCH_DEPTH)]
    search_depth: usize,
    /// Print every rule application performed by each tactic.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a signature (`.lfs`) followed by proof scripts (`.ath`).
    Check { files: Vec<PathBuf> },
    /// Load the given files, then read commands interactively.
    Repl { files: Vec<PathBuf> },
    /// Speak the JSON line protocol on standard input and output.
    Serve { files: Vec<PathBuf> },
}

fn check(session: &mut Session, files: &[PathBuf]) -> ExitCode {
    let mut ok = true;
    for f in files {
        let src = match std::fs::read_to_string(f) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{}: {}", f.display(), e);
                return ExitCode::from(2);
            }
        };
        if f.extension().is_some_and(|e| e == "lfs") {
            if let Err(e) = session.load_signature(&src) {
                eprintln!("{}: {}", f.display(), e);
                return ExitCode::from(2);
            }
            continue;
        }
        let report = session.run_script(&src, false);
        for t in session.take_trace() {
            eprintln!("trace: {}", t);
        }
        for e in &report.errors {
            println!("{}: error: {}", f.display(), e);
        }
        for t in &report.theorems {
            match &t.message {
                None => println!("{}: {} proved", f.display(), t.name),
                Some(m) => println!("{}: {} FAILED: {}", f.display(), t.name, m),
            }
        }
        ok &= report.success();
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn load_all(session: &mut Session, files: &[PathBuf]) -> Result<(), String> {
    for f in files {
        let report = session.load_path(f).map_err(|e| format!("{}: {}", f.display(), e))?;
        if !report.success() {
            let mut msgs = report.errors.clone();
            msgs.extend(report.theorems.iter().filter_map(|t| t.message.as_ref().map(|m| format!("{}: {}", t.name, m))));
            return Err(format!("{}: {}", f.display(), msgs.join("; ")));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut session = Session::new();
    session.search_depth = cli.search_depth;
    session.trace = cli.trace;
    match cli.command {
        Cmd::Check { files } => check(&mut session, &files),
        Cmd::Repl { files } => {
            if let Err(e) = load_all(&mut session, &files) {
                eprintln!("{}", e);
            }
            let stdin = io::stdin();
            let interactive = stdin.is_terminal();
            match repl::run(&mut session, stdin.lock(), io::stdout(), interactive) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{}", e);
                    ExitCode::from(2)
                }
            }
        }
        Cmd::Serve { files } => {
            if let Err(e) = load_all(&mut session, &files) {
                eprintln!("{}", e);
                return ExitCode::from(2);
            }
            match protocol::serve(&mut session, io::stdin().lock(), io::stdout(), io::stderr()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{}", e);
                    ExitCode::from(2)
                }
            }
        }
    }
}
