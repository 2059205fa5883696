//! `lqc`: check, inspect, elaborate and run programs.

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lqc_core::calculus::{lint_program, parse_core, RunConfig};
use lqc_core::constraint::{SimpleConstraint, Wanted};
use lqc_core::entail::{entails_wanted, OracleBudget};
use lqc_core::pipeline::{check, elaborate, front_end, run, Diagnostic};

#[derive(Parser)]
#[command(name = "lqc", version, about = "Checker, elaborator and interpreter for a linear language with linear constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Source file (`.lql`).
    file: String,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a program and solve its constraints.
    Check {
        #[command(flatten)]
        input: Input,
        /// Print constraints, evidence and solver trace per binding as JSON.
        #[arg(long)]
        dump_json: bool,
        /// Print the typing derivation of every binding as JSON.
        #[arg(long)]
        dump_derivation: bool,
    },
    /// Print the wanted constraint of every binding.
    Constraints {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        dump_json: bool,
    },
    /// Print the solver's rule applications for every binding.
    Trace {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        dump_json: bool,
    },
    /// Translate a checked program into the core language.
    Elaborate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        json: bool,
    },
    /// Check a core program (as printed by `elaborate`).
    Lint {
        /// Core file.
        file: String,
    },
    /// Evaluate `main`.
    Run {
        #[command(flatten)]
        input: Input,
        /// Seed for `fillShuffled`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decide `Q ⊢ C` exhaustively. Reads `{"given": Q, "wanted": C}` as JSON.
    #[command(hide = true)]
    Oracle {
        /// JSON file, or `-` for standard input.
        #[arg(default_value = "-")]
        file: String,
        /// Node budget of the search.
        #[arg(long)]
        max_fuel: Option<usize>,
    },
}

/// Outcome classes: rejection of the input, or a broken internal invariant.
enum Failure {
    User,
    Internal,
}

impl From<Failure> for ExitCode {
    fn from(f: Failure) -> ExitCode {
        match f {
            Failure::User => ExitCode::from(1),
            Failure::Internal => ExitCode::from(2),
        }
    }
}

const INTERNAL_CLASSES: &[&str] = &[
    "InternalError",
    "LintUnbound",
    "LintType",
    "LintLinearity",
    "UseAfterFree",
    "NonAdjacentJoin",
    "Stuck",
];

fn report(file: &str, d: &Diagnostic) -> Failure {
    eprintln!("{}", d.render(file));
    if INTERNAL_CLASSES.contains(&d.class.as_str()) {
        Failure::Internal
    } else {
        Failure::User
    }
}

fn read(file: &str) -> Result<String, Failure> {
    let r = if file == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map(|_| s)
    } else {
        std::fs::read_to_string(file)
    };
    r.map_err(|e| {
        eprintln!("{file}: {e}");
        Failure::User
    })
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serialisable"));
}

/// The checker and elaborator recurse over the syntax tree.
const STACK_BYTES: usize = 256 << 20;

fn main() -> ExitCode {
    let cmd = Cli::parse().command;
    let r = std::thread::Builder::new()
        .stack_size(STACK_BYTES)
        .spawn(move || dispatch(cmd))
        .expect("spawn worker thread")
        .join();
    match r {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => f.into(),
        Err(_) => ExitCode::from(2),
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Check { input, dump_json, dump_derivation } => {
            let src = read(&input.file)?;
            if dump_derivation {
                let bs = front_end(&src).map_err(|d| report(&input.file, &d))?;
                print_json(&json!(bs.iter().map(|b| b.to_json()).collect::<Vec<_>>()));
            }
            let bs = check(&src).map_err(|d| report(&input.file, &d))?;
            if dump_json {
                print_json(&json!(bs.iter().map(|b| b.to_json()).collect::<Vec<_>>()));
            }
            if let Some(d) = bs.iter().find_map(|b| b.diagnostic()) {
                return Err(report(&input.file, &d));
            }
            if !dump_json && !dump_derivation {
                println!("{}: ok ({} bindings)", input.file, bs.len());
            }
            Ok(())
        }
        Command::Constraints { input, dump_json } => {
            let src = read(&input.file)?;
            let bs = check(&src).map_err(|d| report(&input.file, &d))?;
            if dump_json {
                let v: Vec<_> = bs
                    .iter()
                    .map(|b| json!({"binding": b.binding.name, "constraint": b.obligation.to_string(), "tree": b.obligation}))
                    .collect();
                print_json(&json!(v));
            } else {
                for b in &bs {
                    println!("{}: {}", b.binding.name, b.obligation);
                }
            }
            Ok(())
        }
        Command::Trace { input, dump_json } => {
            let src = read(&input.file)?;
            let bs = check(&src).map_err(|d| report(&input.file, &d))?;
            if dump_json {
                print_json(&json!(bs.iter().map(|b| b.to_json()).collect::<Vec<_>>()));
            } else {
                for b in &bs {
                    println!("== {}", b.binding.name);
                    for line in &b.trace {
                        println!("{line}");
                    }
                }
            }
            match bs.iter().find_map(|b| b.diagnostic()) {
                Some(d) => Err(report(&input.file, &d)),
                None => Ok(()),
            }
        }
        Command::Elaborate { input, json } => {
            let src = read(&input.file)?;
            let p = elaborate(&src).map_err(|d| report(&input.file, &d))?;
            if json {
                let defs: Vec<_> = p
                    .defs
                    .iter()
                    .map(|d| json!({"name": d.name, "type": d.scheme.to_string(), "body": d.body.to_string()}))
                    .collect();
                print_json(&json!({ "defs": defs }));
            } else {
                print!("{p}");
            }
            Ok(())
        }
        Command::Lint { file } => {
            let src = read(&file)?;
            let p = parse_core(&src).map_err(|e| {
                eprintln!("{file}:{}:{}: error[CoreParseError]: {}", e.line, e.col, e.msg);
                Failure::User
            })?;
            lint_program(&p).map_err(|e| {
                eprintln!("{file}: error[{}]: {e}", e.class());
                Failure::User
            })?;
            println!("{file}: ok ({} definitions)", p.defs.len());
            Ok(())
        }
        Command::Run { input, seed } => {
            let src = read(&input.file)?;
            match run(&src, &RunConfig { seed, ..Default::default() }) {
                Ok(r) => {
                    for line in &r.output {
                        println!("{line}");
                    }
                    println!("{}", r.value);
                    Ok(())
                }
                Err((d, out)) => {
                    for line in &out {
                        println!("{line}");
                    }
                    Err(report(&input.file, &d))
                }
            }
        }
        Command::Oracle { file, max_fuel } => {
            let src = read(&file)?;
            let bad = |e: String| {
                eprintln!("{file}: {e}");
                Failure::User
            };
            let mut v: serde_json::Value = serde_json::from_str(&src).map_err(|e| bad(e.to_string()))?;
            let given: SimpleConstraint = match v.get_mut("given") {
                Some(g) => serde_json::from_value(g.take()).map_err(|e| bad(e.to_string()))?,
                None => SimpleConstraint::default(),
            };
            let wanted: Wanted = match v.get_mut("wanted") {
                Some(w) => serde_json::from_value(w.take()).map_err(|e| bad(e.to_string()))?,
                None => return Err(bad("missing field `wanted`".into())),
            };
            let mut budget = OracleBudget::default();
            if let Some(n) = max_fuel {
                budget.max_nodes = n;
            }
            match entails_wanted(&given, &wanted, budget) {
                Ok(b) => println!("{b}"),
                Err(_) => println!("inconclusive"),
            }
            Ok(())
        }
    }
}
