//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nashfl_core::experiments::{
    empirical_worst_case, table1_report, theoretical_bound, AdversarialFamily, Objective,
    RatioRecord, TheoreticalBound,
};
use nashfl_core::fairness::{FairnessAudit, FairnessFinding, DEFAULT_FAIRNESS_TOL};
use nashfl_core::model::DEFAULT_MAX_ITER;
use nashfl_core::strategy::{
    best_responses, AgentSelection, ManipulationFinding, DEFAULT_MANIPULATION_GRID,
};
use nashfl_core::{apply_mechanism, welfare_report, MechanismId, SolveConfig};
use serde_json::Value;
use thiserror::Error;

use crate::output::{location_text, num, profile, profile_line, write_csv, write_json, Record};
use crate::profile_io::{read_profile, ProfileError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Core(#[from] nashfl_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_convergence() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nashfl",
    version,
    about = "Facility location on [0, 1] under Nash welfare"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Notion {
    Ifs,
    Ufs,
}

#[derive(Debug, Args)]
struct Common {
    /// Location tolerance of the NashFL solver.
    #[arg(long, env = "NASHFL_EPS")]
    eps: Option<f64>,
    /// Iteration cap of the NashFL solver.
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

impl Common {
    fn config(&self) -> Result<SolveConfig, CliError> {
        let cfg = SolveConfig {
            max_iter: self.max_iter,
            ..SolveConfig::default()
        };
        Ok(match self.eps {
            Some(eps) => cfg.with_eps(eps)?,
            None => cfg.validated()?,
        })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Place the facility with each mechanism and report welfare.
    Solve {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, value_delimiter = ',', default_values = ["mid", "med", "midornearest", "nashfl"])]
        mechanisms: Vec<MechanismId>,
        #[command(flatten)]
        common: Common,
    },
    /// Empirical worst-case ratio of one mechanism for one objective.
    Ratios {
        #[arg(long)]
        mechanism: MechanismId,
        #[arg(long)]
        objective: Objective,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Worst-case ratios for every mechanism and objective, with known bounds.
    Table1 {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Check proportional fairness for singletons or co-located groups.
    AuditFairness {
        #[arg(long)]
        mechanism: MechanismId,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, value_enum, default_value = "ufs")]
        notion: Notion,
        /// Group agents whose neighbouring locations differ by at most this.
        #[arg(long)]
        coalesce_tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_FAIRNESS_TOL)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Search for profitable misreports.
    Manipulate {
        #[arg(long)]
        mechanism: MechanismId,
        #[arg(long)]
        profile: PathBuf,
        /// `all`, or a 0-based agent index in file order.
        #[arg(long, default_value = "all")]
        agents: String,
        #[arg(long, default_value_t = DEFAULT_MANIPULATION_GRID)]
        grid: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Print an adversarial profile.
    Families {
        #[arg(long)]
        name: AdversarialFamily,
        /// Agent count, or group size `k` for `sandwich` and `sp_impossibility_demo`.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        parameter: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

/// Runs the command line `argv` (program name first), writing the report to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                1
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(
    out: &mut dyn Write,
    format: Format,
    header: Record,
    key: &str,
    rows: Vec<Value>,
) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(out, &rows)?,
        Format::Json => write_json(out, &header.with(key, Value::Array(rows)).into_value())?,
    }
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Solve {
            profile: path,
            mechanisms,
            common,
        } => {
            let cfg = common.config()?;
            let (raw, prof) = read_profile(&path)?;
            let mut rows = Vec::new();
            for id in mechanisms {
                let placement = apply_mechanism(id, &prof, &cfg)?;
                let w = welfare_report(placement.y, &prof)?;
                rows.push(
                    Record::new()
                        .with("mechanism", id.name())
                        .with("facility", num(placement.y))
                        .with("loc_error", num(placement.loc_error))
                        .with("usw", num(w.usw))
                        .with("esw", num(w.esw))
                        .with("nash", num(w.nash))
                        .with("log_nash", num(w.log_nash))
                        .into_value(),
                );
            }
            let header = Record::new()
                .with("profile", profile(&raw))
                .with("eps", num(cfg.eps_loc));
            emit(out, common.format, header, "results", rows)
        }
        Command::Ratios {
            mechanism,
            objective,
            n,
            samples,
            seed,
            common,
        } => {
            let cfg = common.config()?;
            check_agents(n)?;
            let record = empirical_worst_case(mechanism, objective, n, samples, seed, &cfg)?;
            let bound = theoretical_bound(mechanism, objective, n);
            let row = ratio_row(&record, n, &bound, bound.admits(record.ratio));
            let header = Record::new().with("samples", samples).with("seed", seed);
            emit(out, common.format, header, "records", vec![row])
        }
        Command::Table1 {
            n,
            samples,
            seed,
            common,
        } => {
            let cfg = common.config()?;
            check_agents(n)?;
            let table = table1_report(n, samples, seed, &cfg)?;
            match common.format {
                Format::Csv => {
                    let rows: Vec<Value> = table
                        .cells
                        .iter()
                        .map(|c| ratio_row(&c.record, n, &c.bound, c.pass))
                        .collect();
                    write_csv(out, &rows)?;
                }
                Format::Json => {
                    let matrix: Vec<Value> = MechanismId::ALL
                        .iter()
                        .map(|&id| {
                            let cells: Vec<Value> = Objective::ALL
                                .iter()
                                .map(|&o| {
                                    let c = table.cell(id, o);
                                    ratio_row(&c.record, n, &c.bound, c.pass)
                                })
                                .collect();
                            Record::new()
                                .with("mechanism", id.name())
                                .with("cells", Value::Array(cells))
                                .into_value()
                        })
                        .collect();
                    let doc = Record::new()
                        .with("n", n)
                        .with("samples", samples)
                        .with("seed", seed)
                        .with("all_pass", table.all_pass())
                        .with("rows", Value::Array(matrix));
                    write_json(out, &doc.into_value())?;
                }
            }
            Ok(())
        }
        Command::AuditFairness {
            mechanism,
            profile: path,
            notion,
            coalesce_tol,
            tol,
            common,
        } => {
            let cfg = common.config()?;
            let (raw, prof) = read_profile(&path)?;
            let audit = FairnessAudit { tol, coalesce_tol };
            let findings = match notion {
                Notion::Ifs => audit.ifs(mechanism, &prof, &cfg)?,
                Notion::Ufs => audit.ufs(mechanism, &prof, &cfg)?,
            };
            let rows = findings.iter().map(|f| fairness_row(f, &raw)).collect();
            let header = Record::new()
                .with("mechanism", mechanism.name())
                .with("notion", notion_name(notion))
                .with("all_satisfied", findings.iter().all(|f| f.satisfied));
            emit(out, common.format, header, "findings", rows)
        }
        Command::Manipulate {
            mechanism,
            profile: path,
            agents,
            grid,
            common,
        } => {
            let cfg = common.config()?.with_grid(grid)?;
            let (raw, prof) = read_profile(&path)?;
            let selection = parse_agents(&agents, raw.len())?;
            let findings = best_responses(mechanism, &prof, selection, &cfg)?;
            let rows = findings.iter().map(|f| manipulation_row(f, &raw)).collect();
            let max_gain = findings.iter().map(|f| f.gain).fold(0.0, f64::max);
            let header = Record::new()
                .with("mechanism", mechanism.name())
                .with("grid", num(grid))
                .with("max_gain", num(max_gain));
            emit(out, common.format, header, "findings", rows)
        }
        Command::Families {
            name,
            n,
            parameter,
            format,
        } => {
            let prof = name.generate(n, parameter)?;
            match format {
                Format::Json => writeln!(out, "{}", profile_line(prof.locations()))?,
                Format::Csv => {
                    for x in prof.locations() {
                        writeln!(out, "{}", location_text(*x))?;
                    }
                }
            }
            Ok(())
        }
    }
}

fn check_agents(n: usize) -> Result<(), CliError> {
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }
    Ok(())
}

fn parse_agents(text: &str, n: usize) -> Result<AgentSelection, CliError> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(AgentSelection::All);
    }
    match text.parse::<usize>() {
        Ok(i) if i < n => Ok(AgentSelection::One(i)),
        Ok(i) => Err(CliError::Usage(format!(
            "--agents {i} is out of range for {n} agents"
        ))),
        Err(_) => Err(CliError::Usage(format!(
            "--agents expects `all` or an index, got `{text}`"
        ))),
    }
}

fn notion_name(notion: Notion) -> &'static str {
    match notion {
        Notion::Ifs => "ifs",
        Notion::Ufs => "ufs",
    }
}

fn ratio_row(r: &RatioRecord, n: usize, bound: &TheoreticalBound, pass: bool) -> Value {
    Record::new()
        .with("mechanism", r.mechanism.name())
        .with("objective", r.objective.name())
        .with("n", n)
        .with("ratio", num(r.ratio.as_f64()))
        .with("optimal", num(r.optimal_value))
        .with("achieved", num(r.achieved_value))
        .with("witness_profile", profile(&r.profile.original_order()))
        .with("theoretical_bound", bound.label)
        .with("pass", pass)
        .with("witness", r.witness.as_str())
        .with("facility", num(r.facility))
        .with("log_optimal", num(r.log_optimal))
        .with("log_achieved", num(r.log_achieved))
        .into_value()
}

fn fairness_row(f: &FairnessFinding, raw: &[f64]) -> Value {
    Record::new()
        .with("mechanism", f.mechanism.name())
        .with("profile", profile(raw))
        .with("coalition_location", num(f.coalition.location))
        .with("size", f.coalition.size())
        .with("required", num(f.required))
        .with("achieved", num(f.achieved))
        .with("satisfied", f.satisfied)
        .with("notion", f.notion.name())
        .with("members", f.coalition.members.clone())
        .with("facility", num(f.facility))
        .with("slack", num(f.slack))
        .into_value()
}

fn manipulation_row(f: &ManipulationFinding, raw: &[f64]) -> Value {
    Record::new()
        .with("mechanism", f.mechanism.name())
        .with("profile", profile(raw))
        .with("agent", f.agent)
        .with("true_location", num(f.true_location))
        .with("best_report", num(f.best_report))
        .with("truthful_facility", num(f.truthful_facility))
        .with("manipulated_facility", num(f.manipulated_facility))
        .with("truthful_utility", num(f.truthful_utility))
        .with("manipulated_utility", num(f.manipulated_utility))
        .with("gain", num(f.gain))
        .into_value()
}
