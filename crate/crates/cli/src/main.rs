//! `medsacks`: runs the constructions on JSON inputs and writes a
//! verification report.
//!
//! Exit status: 0 when every check passes, 1 on a failed check (the report
//! is still written), 2 on unreadable or malformed input, 3 when a search
//! cap is exhausted.

mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use medsacks_core::{Check, Report};
use serde::Serialize;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "medsacks", version, about = "Fusion constructions on perfect binary trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Round-trip the pairing and sequence codes on an initial range.
    OrdersSelftest(commands::SelftestArgs),
    /// Check the skeleton invariants of a tree file.
    ValidateTree(commands::ValidateTreeArgs),
    /// Check monotonicity and the modulus of a code file.
    ValidateCode(commands::ValidateCodeArgs),
    /// Catch a single-branch code inside a tree and dump the trace.
    CatchSingle(commands::CatchSingleArgs),
    /// Run the product fusion from a run manifest.
    CatchProduct(commands::ManifestArgs),
    /// Iterate the product fusion over a list of codes.
    Greedy(commands::ManifestArgs),
    /// Tabulate the interleaved encoding of two functions.
    Encode(commands::EncodeArgs),
    /// Recover the encoded pair from a prefix table.
    Decode(commands::DecodeArgs),
    /// Build a function eventually different from a family by blocks.
    Ned(commands::NedArgs),
}

/// What a command hands back for reporting.
pub struct Outcome {
    pub report: Report,
    pub result: Value,
    /// Extra lines for the stdout summary.
    pub notes: Vec<String>,
}

pub enum Failure {
    Input(anyhow::Error),
    Exhausted(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<medsacks_core::Error> for Failure {
    fn from(e: medsacks_core::Error) -> Self {
        if e.is_search_exhausted() {
            Failure::Exhausted(e.into())
        } else {
            Failure::Input(e.into())
        }
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    command: &'a str,
    params: Value,
    checks: &'a [Check],
    summary: String,
    result: Value,
}

fn params<A: Serialize>(args: &A) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, params, outcome) = match &cli.command {
        Command::OrdersSelftest(a) => ("orders-selftest", params(a), commands::orders_selftest(a)),
        Command::ValidateTree(a) => ("validate-tree", params(a), commands::validate_tree(a)),
        Command::ValidateCode(a) => ("validate-code", params(a), commands::validate_code(a)),
        Command::CatchSingle(a) => ("catch-single", params(a), commands::catch_single(a)),
        Command::CatchProduct(a) => ("catch-product", params(a), commands::catch_product(a)),
        Command::Greedy(a) => ("greedy", params(a), commands::greedy(a)),
        Command::Encode(a) => ("encode", params(a), commands::encode(a)),
        Command::Decode(a) => ("decode", params(a), commands::decode(a)),
        Command::Ned(a) => ("ned", params(a), commands::ned(a)),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(Failure::Input(e)) => {
            eprintln!("{name}: error: {e:#}");
            return ExitCode::from(2);
        }
        Err(Failure::Exhausted(e)) => {
            eprintln!("{name}: {e:#}");
            return ExitCode::from(3);
        }
    };

    let report = RunReport {
        command: name,
        params,
        checks: &outcome.report.checks,
        summary: outcome.report.summary(),
        result: outcome.result,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let verdict = if outcome.report.passed() { "PASS" } else { "FAIL" };
    let mut summary = format!("{name}: {verdict} ({})\n", report.summary);
    for check in outcome.report.failures() {
        summary += &format!("  {} failed: {}\n", check.name, check.witness.as_deref().unwrap_or("-"));
    }
    for note in &outcome.notes {
        summary += &format!("  {note}\n");
    }

    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json) {
                eprintln!("{name}: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
            print!("{summary}");
        }
        None => {
            print!("{json}");
            eprint!("{summary}");
        }
    }
    if outcome.report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[derive(Args, Serialize)]
pub struct Sampling {
    /// Seed for branch sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled branches per check.
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
}
