//! Command-line front end: classify families, run learners against criteria,
//! stage duels, check reductions and run experiment matrices.
//!
//! Exit status: 0 when everything passed or was skipped, 1 on any failure,
//! 2 on a usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use structlearn::adversaries::{run_duel, DuelConfig, DuelOutcome, DuelRecord};
use structlearn::catalog::{registry, Presentation};
use structlearn::harness::{
    check, family_by_name, from_jsonl, reduction_verdict, render_table, run_learner, run_matrix, to_jsonl, CriterionKind,
    CriterionSpec, MatrixConfig, Verdict, DEFAULT_HORIZON, DEFAULT_TAIL, DEFAULT_WINDOW,
};
use structlearn::logic::classify_family;
use structlearn::reductions::{build_operator, verify_reduction};

#[derive(Parser)]
#[command(name = "structlearn", version, about = "Learning countable structures in the limit, at finite horizons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the named families.
    ListFamilies,
    /// Print the existential-theory classification of a family as JSON.
    Classify { family: String },
    /// Run a learner on seeded copies of every member and check a criterion.
    Run {
        family: String,
        learner: String,
        criterion: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(long, default_value_t = DEFAULT_TAIL)]
        tail: usize,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Only this member code.
        #[arg(long)]
        member: Option<usize>,
        /// Write the per-stage transcript of each member as JSON lines here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Play an adversary against a learner, or against an operator for the
    /// operator adversaries.
    Duel {
        adversary: String,
        opponent: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DuelConfig::default().cap)]
        cap: usize,
        #[arg(long, default_value_t = DuelConfig::default().first_checkpoint)]
        first_checkpoint: usize,
        /// Play on this family instead of the adversary's default.
        #[arg(long)]
        family: Option<String>,
    },
    /// Print a reduction's output on canonical-seeded copies, or verify it.
    Reduce {
        gamma: String,
        family: String,
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
    },
    /// Run every cell of a JSON matrix configuration.
    Matrix {
        config: PathBuf,
        /// Where to write the cell records; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a table from cell records.
    Report { runs: PathBuf },
}

enum Failure {
    Usage(String),
    Failed,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn outcome(any_fail: bool) -> Result<(), Failure> {
    if any_fail {
        Err(Failure::Failed)
    } else {
        Ok(())
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::ListFamilies => {
            for f in registry() {
                let kind = f.validate()?;
                let members: Vec<String> = f.members.iter().map(ToString::to_string).collect();
                let bound = f.truncation.map_or(String::new(), |n| format!(" (truncated at {n})"));
                println!("{:<16} {kind:?}{bound}: {}", f.name, members.join(", "));
            }
            Ok(())
        }
        Command::Classify { family } => {
            let c = classify_family(&family_by_name(&family)?)?;
            println!("{}", serde_json::to_string_pretty(&c)?);
            Ok(())
        }
        Command::Run { family, learner, criterion, seed, horizon, tail, window, member, log } => {
            let fam = family_by_name(&family)?;
            let kind: CriterionKind = criterion.parse()?;
            let spec = CriterionSpec { kind, horizon, tail, window };
            spec.validate()?;
            let members: Vec<usize> = match member {
                Some(m) => vec![m],
                None => (0..fam.len()).collect(),
            };
            let mut log_text = String::new();
            let mut any_fail = false;
            for m in members {
                let t = run_learner(&fam, &learner, m, seed, horizon)?;
                let verdict = check(&spec, &t, m, &fam)?;
                any_fail |= verdict.is_fail();
                println!("{family} {learner} {kind} member {m} ({}) seed {seed}: {verdict}", fam.members[m]);
                for (s, h) in t.entries().iter().enumerate() {
                    log_text += &format!("{{\"member\":{m},\"stage\":{s},\"hypothesis\":{}}}\n", serde_json::to_string(h)?);
                }
            }
            if let Some(path) = log {
                std::fs::write(path, log_text)?;
            }
            outcome(any_fail)
        }
        Command::Duel { adversary, opponent, seed, cap, first_checkpoint, family } => {
            let config = DuelConfig { seed, cap, first_checkpoint, ..DuelConfig::default() };
            let mut record = DuelRecord::new(&adversary, &opponent, config)?;
            if let Some(f) = family {
                record.family = f;
            }
            let result = run_duel(&record)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            outcome(matches!(result, DuelOutcome::Certificate(_)))
        }
        Command::Reduce { gamma, family, verify, horizon, seeds } => {
            let fam = family_by_name(&family)?;
            let make = || build_operator(&gamma, &fam);
            let mut op = make()?;
            if verify {
                let report = verify_reduction(&make, &fam, horizon, &seeds)?;
                let verdict = reduction_verdict(&report);
                println!("{}", serde_json::to_string_pretty(&report)?);
                println!("{gamma} on {family}: {verdict}");
                return outcome(verdict.is_fail());
            }
            for (m, a) in fam.members.iter().enumerate() {
                op.reset();
                let mut p = Presentation::new(a.clone(), seeds.first().copied().unwrap_or(0))?;
                let mut out = None;
                for s in 0..horizon {
                    out = Some(op.apply(p.advance_to(s))?);
                }
                println!("# member {m}: {a}");
                if let Some(o) = out {
                    print!("{}", o.to_csv());
                }
            }
            Ok(())
        }
        Command::Matrix { config, out } => {
            let cfg: MatrixConfig = serde_json::from_str(&std::fs::read_to_string(config)?)?;
            let records = run_matrix(&cfg);
            match out {
                Some(path) => std::fs::write(path, to_jsonl(&records))?,
                None => print!("{}", to_jsonl(&records)),
            }
            eprint!("{}", render_table(&records));
            outcome(records.iter().any(|r| r.verdict.is_fail()))
        }
        Command::Report { runs } => {
            let records = from_jsonl(&std::fs::read_to_string(runs)?)?;
            print!("{}", render_table(&records));
            outcome(records.iter().any(|r| matches!(r.verdict, Verdict::Fail { .. })))
        }
    }
}
