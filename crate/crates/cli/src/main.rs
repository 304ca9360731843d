//! Command-line front end: check, desugar, instances, trace, assert.
//!
//! Diagnostics go to standard error as `file:line:col: error: message`;
//! results go to standard output. Exit code 0 means success (all
//! assertions passing), 1 a model or assertion failure, 2 usage or I/O
//! errors.

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use claflite_core::desugar::canonical_text;
use claflite_core::pipeline::{compile, compile_goal};
use claflite_core::solver::{
    check_assertion, enumerate_instances, find_trace, AssertMode, AssertVerdict, Goal, LoopChoice,
    Scope,
};
use claflite_core::{CoreModel, Error, LassoTrace};

#[derive(Parser)]
#[command(name = "claflite", version, about = "Lightweight structure/behaviour/variability modeling toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, resolve and validate a model
    Check {
        /// Model file (.cfr)
        file: PathBuf,
    },
    /// Print the fully desugared core model in canonical text form
    Desugar {
        file: PathBuf,
    },
    /// Enumerate satisfying configurations (static interpretation)
    Instances {
        file: PathBuf,
        /// Default per-clafer instance bound per snapshot
        #[arg(long, default_value_t = 1)]
        scope: usize,
        /// Per-clafer bound override, NAME=N (repeatable)
        #[arg(long = "scope-for", value_name = "NAME=N")]
        scope_for: Vec<String>,
        /// Maximum number of configurations to print
        #[arg(long)]
        max: Option<usize>,
        /// Machine-readable output
        #[arg(long)]
        json: bool,
        /// Worker threads for the search (output is identical)
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Search for a satisfying lasso trace
    Trace {
        file: PathBuf,
        /// Maximum trace length
        #[arg(long, default_value_t = 8)]
        length: usize,
        /// Loop position to try: a number, or `all`
        #[arg(long = "loop", default_value = "all")]
        loop_: String,
        /// Additional goal constraint, parsed in top-level context
        #[arg(long)]
        goal: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Check every `assert` block in the file
    Assert {
        file: PathBuf,
        /// witness: find a trace consistent with the assertion;
        /// refute: search for a counterexample to it
        #[arg(long, value_enum, default_value_t = ModeArg::Witness)]
        mode: ModeArg,
        /// Maximum trace length
        #[arg(long, default_value_t = 8)]
        length: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Witness,
    Refute,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            e.exit_code()
        }
    }
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn io(path: &PathBuf, err: std::io::Error) -> CliError {
        CliError {
            message: format!("{}: {}", path.display(), err),
            code: 2,
        }
    }

    fn model(path: &PathBuf, err: Error) -> CliError {
        let message = match &err {
            Error::Parse(p) => format!("{}:{}: error: {}", path.display(), p.pos(), strip_pos(&p.to_string())),
            Error::Elab(e) => format!("{}:{}: error: {}", path.display(), e.pos(), strip_pos(&e.to_string())),
            Error::Wellformedness(w) => format!("{}: error: model is not well-formed:\n{}", path.display(), w),
        };
        CliError { message, code: 1 }
    }

    fn usage(message: String) -> CliError {
        CliError { message, code: 2 }
    }

    fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

fn strip_pos(s: &str) -> String {
    // error displays start with "line:col: "; the prefix is re-added with
    // the file name
    match s.split_once(": ") {
        Some((head, rest)) if head.chars().all(|c| c.is_ascii_digit() || c == ':') => {
            rest.to_string()
        }
        _ => s.to_string(),
    }
}

fn report_error(e: &CliError) {
    let color = std::io::stderr().is_terminal()
        && std::env::var("CLAFLITE_COLOR").map_or(true, |v| v != "0");
    if color {
        eprintln!("\x1b[31m{}\x1b[0m", e.message);
    } else {
        eprintln!("{}", e.message);
    }
}

fn load(path: &PathBuf) -> Result<CoreModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    compile(&text).map_err(|e| CliError::model(path, e))
}

fn parse_scope_overrides(
    cm: &CoreModel,
    pairs: &[String],
) -> Result<std::collections::BTreeMap<String, usize>, CliError> {
    let mut out = std::collections::BTreeMap::new();
    for p in pairs {
        let (name, n) = p
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--scope-for expects NAME=N, got `{}`", p)))?;
        let n: usize = n
            .parse()
            .map_err(|_| CliError::usage(format!("--scope-for expects NAME=N, got `{}`", p)))?;
        if claflite_core::solver::resolve_scope_name(cm, name).is_none() {
            return Err(CliError::usage(format!(
                "--scope-for: no unique clafer named `{}`",
                name
            )));
        }
        out.insert(name.to_string(), n);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Check { file } => {
            load(&file)?;
            println!("ok");
            Ok(ExitCode::SUCCESS)
        }
        Command::Desugar { file } => {
            let cm = load(&file)?;
            print!("{}", canonical_text(&cm));
            Ok(ExitCode::SUCCESS)
        }
        Command::Instances {
            file,
            scope,
            scope_for,
            max,
            json,
            jobs,
        } => {
            let cm = load(&file)?;
            let scope = Scope {
                default_max: scope,
                per_clafer: parse_scope_overrides(&cm, &scope_for)?,
                jobs: jobs.max(1),
                ..Scope::default()
            };
            let result = enumerate_instances(&cm, &scope, max.unwrap_or(usize::MAX));
            for w in &result.warnings {
                eprintln!("warning: {}", w);
            }
            if json {
                let out = serde_json::json!({
                    "version": 1,
                    "command": "instances",
                    "result": {
                        "configurations": result
                            .snapshots
                            .iter()
                            .map(|s| s.to_json(&cm))
                            .collect::<Vec<_>>(),
                        "total": result.snapshots.len(),
                        "warnings": result.warnings,
                    }
                });
                println!("{}", out);
            } else {
                for (i, s) in result.snapshots.iter().enumerate() {
                    println!("configuration {}", i + 1);
                    print!("{}", s.to_text(&cm));
                    println!();
                }
                println!("total: {}", result.snapshots.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace {
            file,
            length,
            loop_,
            goal,
            json,
        } => {
            let cm = load(&file)?;
            let loop_choices = if loop_ == "all" {
                LoopChoice::All
            } else {
                let l: usize = loop_.parse().map_err(|_| {
                    CliError::usage(format!("--loop expects a number or `all`, got `{}`", loop_))
                })?;
                LoopChoice::Fixed(l)
            };
            let scope = Scope {
                trace_len: length,
                loop_choices,
                ..Scope::default()
            };
            let goals: Vec<Goal> = match goal {
                Some(g) => {
                    let tc = compile_goal(&cm, &g).map_err(|e| CliError::model(&file, e))?;
                    vec![Goal::Require(tc)]
                }
                None => Vec::new(),
            };
            match find_trace(&cm, &scope, &goals) {
                Some(tr) => {
                    if json {
                        let out = serde_json::json!({
                            "version": 1,
                            "command": "trace",
                            "result": { "found": true, "trace": tr.to_json(&cm) }
                        });
                        println!("{}", out);
                    } else {
                        print!("{}", tr.to_text(&cm));
                    }
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    if json {
                        let out = serde_json::json!({
                            "version": 1,
                            "command": "trace",
                            "result": { "found": false, "reason": "NONE-WITHIN-BOUND" }
                        });
                        println!("{}", out);
                    } else {
                        println!("NONE-WITHIN-BOUND");
                    }
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Command::Assert { file, mode, length } => {
            let cm = load(&file)?;
            let scope = Scope {
                trace_len: length,
                ..Scope::default()
            };
            let mode = match mode {
                ModeArg::Witness => AssertMode::Witness,
                ModeArg::Refute => AssertMode::Refute,
            };
            if cm.assertions.is_empty() {
                println!("no assertions");
                return Ok(ExitCode::SUCCESS);
            }
            let mut all_pass = true;
            for (i, a) in cm.assertions.iter().enumerate() {
                let verdict = check_assertion(&cm, a, mode, &scope);
                all_pass &= verdict.passed();
                match verdict {
                    AssertVerdict::Pass(tr) => {
                        println!("assertion {}: PASS", i + 1);
                        println!("witness:");
                        print_trace(&cm, &tr);
                    }
                    AssertVerdict::FailWithinBound => {
                        println!("assertion {}: FAIL-WITHIN-BOUND", i + 1);
                    }
                    AssertVerdict::PassWithinBound => {
                        println!("assertion {}: PASS-WITHIN-BOUND", i + 1);
                    }
                    AssertVerdict::Fail(tr) => {
                        println!("assertion {}: FAIL", i + 1);
                        println!("counterexample:");
                        print_trace(&cm, &tr);
                    }
                }
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn print_trace(cm: &CoreModel, tr: &LassoTrace) {
    print!("{}", tr.to_text(cm));
}
