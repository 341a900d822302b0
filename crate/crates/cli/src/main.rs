//! `crit`: command-line front end for the critical-tuple toolkit.
//!
//! Exit codes: 0 completed run (whatever the verdict), 1 input error,
//! 2 resource limit, 3 internal invariant violation.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "crit", version, about = "Decide tuple criticality and run the hardness reductions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Sequential search with canonical witnesses (the default).
    #[arg(long, global = true, default_value_t = true, overrides_with = "parallel")]
    pub deterministic: bool,
    /// Explore the candidate tree on all cores.
    #[arg(long, global = true)]
    pub parallel: bool,
    /// Wall-clock limit in seconds.
    #[arg(long, global = true)]
    pub max_seconds: Option<f64>,
    /// Node limit for each decider run.
    #[arg(long, global = true)]
    pub max_nodes: Option<u64>,
    /// Omit timestamps and timings so identical runs give identical output.
    #[arg(long, global = true)]
    pub reproducible: bool,
    /// Seed for generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether a tuple is critical for a query.
    Check {
        /// Query file, one atom per line.
        query: PathBuf,
        /// Tuple literal such as `R(a,b)`.
        tuple: String,
        /// Decide criticality relative to this atom (0-based).
        #[arg(long)]
        atom_index: Option<usize>,
    },
    /// Build a criticality instance from a hard source problem.
    #[command(subcommand)]
    Reduce(ReduceKind),
    /// Solve a source problem by brute force.
    #[command(subcommand)]
    Oracle(OracleKind),
    /// Cross-validate a reduction against its oracle.
    #[command(subcommand)]
    Crosscheck(CrosscheckKind),
    /// Run the deciders on the two-atom example separating the relative and plain notions.
    Counterexample,
}

#[derive(Subcommand, Debug)]
pub enum ReduceKind {
    /// From a QDIMACS ∀∃3SAT formula.
    Qbf {
        formula: PathBuf,
        /// Add `u ∨ u ∨ ¬u` clauses where needed instead of rejecting the formula.
        #[arg(long)]
        normalize: bool,
        #[command(flatten)]
        out: OutputPaths,
    },
    /// From a pair of digraphs (edge-list files).
    Graphhom {
        g1: PathBuf,
        g2: PathBuf,
        #[command(flatten)]
        out: OutputPaths,
    },
}

#[derive(Args, Debug)]
pub struct OutputPaths {
    /// Write `<prefix>.query`, `<prefix>.tuple` and `<prefix>.registry.json` instead of printing.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum OracleKind {
    Qbf { formula: PathBuf },
    Graphhom { g1: PathBuf, g2: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum CrosscheckKind {
    Qbf {
        #[arg(long, default_value_t = 2)]
        max_universals: usize,
        #[arg(long, default_value_t = 1)]
        max_existentials: usize,
        #[arg(long, default_value_t = 2)]
        max_clauses: usize,
        /// Draw this many random formulas (seeded) instead of enumerating.
        #[arg(long)]
        random: Option<usize>,
        /// Also run the full decider on every instance.
        #[arg(long)]
        decider: bool,
    },
    Graphhom {
        /// Largest cycle length, or node count in random mode.
        #[arg(long, default_value_t = 6)]
        size: usize,
        /// Draw this many random graph pairs (seeded) instead of all cycle pairs.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long)]
        decider: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crit: {e:#}");
            ExitCode::from(e.code())
        }
    }
}
