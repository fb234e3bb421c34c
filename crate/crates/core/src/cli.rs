//! Command-line front end.  Every command produces one deterministic JSON
//! report (or DOT text for `export-dot`) and an exit code:
//! 0 success, 1 usage, 2 input format, 3 budget-inconclusive,
//! 4 an invariant the construction guarantees failed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

use crate::chase::{chase, tgds_of_queries};
use crate::codes::{SkeletonCodes, SymbolTable};
use crate::greengraph::{self, max_code_l1, precompile_rules, seed_graph, RuleL2};
use crate::rainworm::model::{
    beta_edges_in_m0, check_snapshot, compile_to_greengraph, compile_with_grid, find_matches,
    finite_model_procedure, full_counterexample,
};
use crate::rainworm::{Machine, MachineJson, RainwormError};
use crate::relcore::{ConjunctiveQuery, Structure, StructureJson};
use crate::report::ExperimentReport;
use crate::sepexample::views::build_dy_dn;
use crate::sepexample::{
    build_m_truncated, check_foam, grid_budget, grid_experiment, t_box, t_full,
    t_inf, truncation_violations, GridStatus,
};
use crate::spider::{compile_swarm, LabelUniverse};
use crate::swarm::{self, compiled_queries, precompile_map, seed_swarm};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_DISCREPANCY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("input error: {0}")]
    Input(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "redspider", version, about = "Green-red chase and rewriting experiments")]
pub struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Echoed in the report; every command is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Add wall-clock timing (makes reports non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// The infinite-path rules.
    TInf,
    /// The grid rules.
    TBox,
    /// Both.
    TFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    Green,
    Swarm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level 0 chase of the TGDs of a query set.
    Chase {
        /// JSON list of `{"name", "query", "free"}`.
        #[arg(long, conflicts_with = "rules")]
        queries: Option<PathBuf>,
        /// Use Compile(Precompile(rules)) as the query set.
        #[arg(long, value_enum)]
        rules: Option<Builtin>,
        /// Structure JSON; defaults to the compiled green spider seed.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        stages: usize,
        /// Write the chased structure here.
        #[arg(long)]
        save: Option<PathBuf>,
        /// Write the trigger log (JSON lines) here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Compile a swarm to a Level 0 structure.
    Compile {
        #[arg(long)]
        swarm: PathBuf,
        /// Label universe size; defaults to the largest code in the swarm.
        #[arg(long)]
        s: Option<u32>,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Precompile green graph rules, optionally mapping a green graph.
    Precompile {
        #[arg(long, value_enum, default_value = "t-inf")]
        rules: Builtin,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Run a rainworm machine from αη11.
    Simulate {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Write the trace, one configuration per line.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build the finite model of a halting machine and check it.
    FiniteModel {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Stage budget for the grid saturation.
        #[arg(long, default_value_t = 60)]
        stages: usize,
        /// Also run the Level 0 determinacy check.
        #[arg(long)]
        level0: bool,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Print the green graph rules of a machine.
    CompileRainworm {
        #[arg(long)]
        machine: PathBuf,
        /// Include the grid rules.
        #[arg(long)]
        with_grid: bool,
    },
    /// The grid experiment on two glued paths.
    Grid {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        tprime: usize,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Grid experiment plus the words of the infinite path.
    SeparationDemo {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        tprime: usize,
        #[arg(long)]
        budget: Option<usize>,
        /// Path words are listed up to `α(β1β0)^k η1`.
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// A truncation of the honest model `M` with its checks.
    #[command(name = "truncate-M")]
    TruncateM {
        #[arg(long)]
        n: usize,
    },
    /// The instances D_y and D_n for a given i.
    DyDn {
        #[arg(long)]
        i: usize,
        /// Close every component under the grid queries' TGDs first.
        #[arg(long)]
        grids: bool,
        #[arg(long, default_value_t = 40)]
        budget: usize,
    },
    /// DOT rendering of a green graph or swarm JSON file.
    ExportDot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "green")]
        kind: GraphKind,
    },
}

/// What a command produced: the text for stdout (or `--out`) and the exit
/// code.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
}

#[derive(Debug, Deserialize)]
pub struct QueryJson {
    pub name: String,
    pub query: StructureJson,
    #[serde(default)]
    pub free: Vec<String>,
}

fn read(path: &Path, report: &mut ExperimentReport) -> Result<Vec<u8>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    report.record_input(&path.display().to_string(), &bytes);
    Ok(bytes)
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, report: &mut ExperimentReport) -> Result<T, CliError> {
    let bytes = read(path, report)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn builtin(b: Builtin, sk: &SkeletonCodes) -> Vec<RuleL2> {
    match b {
        Builtin::TInf => t_inf(sk),
        Builtin::TBox => t_box(sk),
        Builtin::TFull => t_full(sk),
    }
}

fn load_machine(path: &Path, sk: &SkeletonCodes, report: &mut ExperimentReport) -> Result<Machine, CliError> {
    let j: MachineJson = parse(path, report)?;
    let m = Machine::from_json(&j, sk).map_err(|e| CliError::Input(e.to_string()))?;
    let bad = m.validate();
    if !bad.is_empty() {
        return Err(CliError::Input(RainwormError::Invalid(bad).to_string()));
    }
    report.symbols = m.table.clone();
    Ok(m)
}

/// Parses `argv` (without the program name) and runs the command.
pub fn run_command<I, S>(argv: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("redspider".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Ok(Outcome {
                    code: 0,
                    output: e.to_string(),
                });
            }
            return Err(CliError::Usage(e.to_string()));
        }
    };
    let started = Instant::now();
    let sk = SkeletonCodes::default();
    let mut report = ExperimentReport::new(args, SymbolTable::separating_example(&sk));
    let (code, result, text) = execute(&cli, &sk, &mut report)?;
    if cli.timing {
        report.timing_ms = Some(started.elapsed().as_millis());
    }
    report.result = result;
    let output = text.unwrap_or_else(|| report.to_json());
    if let Some(path) = &cli.out {
        write(path, &output)?;
    }
    Ok(Outcome { code, output })
}

type Executed = (i32, serde_json::Value, Option<String>);

fn execute(cli: &Cli, sk: &SkeletonCodes, report: &mut ExperimentReport) -> Result<Executed, CliError> {
    let ok = |v: serde_json::Value| Ok((0, v, None));
    match &cli.command {
        Command::Chase {
            queries,
            rules,
            instance,
            stages,
            save,
            log,
        } => {
            let (named, s) = match (queries, rules) {
                (Some(p), _) => {
                    let qs: Vec<QueryJson> = parse(p, report)?;
                    let mut named = Vec::new();
                    for q in qs {
                        let st = Structure::from_json(&q.query).map_err(|e| CliError::Input(e.to_string()))?;
                        let free: Vec<&str> = q.free.iter().map(String::as_str).collect();
                        let cq = ConjunctiveQuery::new(st, &free).map_err(|e| CliError::Input(e.to_string()))?;
                        named.push((q.name, cq));
                    }
                    (named, None)
                }
                (None, Some(b)) => {
                    let l1 = precompile_rules(&builtin(*b, sk));
                    let s = max_code_l1(&l1);
                    let named = compiled_queries(&l1, LabelUniverse::new(s)).map_err(|e| CliError::Input(e.to_string()))?;
                    (named, Some(s))
                }
                (None, None) => return Err(CliError::Usage("chase needs --queries or --rules".into())),
            };
            let d = match (instance, s) {
                (Some(p), _) => {
                    let j: StructureJson = parse(p, report)?;
                    Structure::from_json(&j).map_err(|e| CliError::Input(e.to_string()))?
                }
                (None, Some(s)) => compile_swarm(&seed_swarm(), s),
                (None, None) => return Err(CliError::Usage("chase with --queries needs --instance".into())),
            };
            let ts = tgds_of_queries(&named).map_err(|e| CliError::Input(e.to_string()))?;
            log::info!("chasing {} dependencies for {stages} stages", ts.len());
            let r = chase(&ts, &d, *stages);
            if let Some(p) = save {
                write(p, &(serde_json::to_string_pretty(&r.structure.to_json()).expect("json") + "\n"))?;
            }
            if let Some(p) = log {
                write(p, &r.log_jsonl())?;
            }
            ok(json!({
                "dependencies": ts.len(),
                "stages_run": r.stages_run,
                "reached_fixpoint": r.reached_fixpoint,
                "atoms_after_stage": r.atoms_after_stage,
                "triggers_applied": r.trigger_log.len(),
                "structure_digest": crate::report::digest(
                    serde_json::to_string(&r.structure.to_json()).expect("json").as_bytes()
                ),
            }))
        }
        Command::Compile { swarm: path, s, save } => {
            let j: swarm::SwarmJson = parse(path, report)?;
            let m = swarm::from_json(&j);
            let max = m
                .edges()
                .iter()
                .flat_map(|e| [e.label.upper, e.label.lower])
                .flatten()
                .max()
                .unwrap_or(0);
            let s = s.unwrap_or(max).max(4);
            if max > s {
                return Err(CliError::Input(format!("swarm uses code {max} beyond s = {s}")));
            }
            let d = compile_swarm(&m, s);
            let text = serde_json::to_string_pretty(&d.to_json()).expect("json") + "\n";
            if let Some(p) = save {
                write(p, &text)?;
            }
            ok(json!({
                "s": s,
                "swarm_edges": m.num_edges(),
                "atoms": d.num_atoms(),
                "elements": d.num_elements(),
                "structure_digest": crate::report::digest(text.as_bytes()),
            }))
        }
        Command::Precompile { rules, graph, save } => {
            let t2 = builtin(*rules, sk);
            let l1 = precompile_rules(&t2);
            let mut out = json!({
                "rules": l1.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "s": max_code_l1(&l1),
            });
            if let Some(p) = graph {
                let j: greengraph::GreenGraphJson = parse(p, report)?;
                let g = greengraph::from_json(&j);
                match precompile_map(&g, &t2) {
                    Ok(m) => {
                        let sj = swarm::to_json(&m);
                        if let Some(p) = save {
                            write(p, &(serde_json::to_string_pretty(&sj).expect("json") + "\n"))?;
                        }
                        out["swarm"] = serde_json::to_value(&sj).expect("json");
                    }
                    Err(e) => return Err(CliError::Input(e.to_string())),
                }
            }
            ok(out)
        }
        Command::Simulate { machine, budget, trace } => {
            let m = load_machine(machine, sk, report)?;
            let run = match m.run(*budget) {
                Ok(r) => r,
                Err(e) => return Ok((EXIT_DISCREPANCY, json!({ "error": e.to_string() }), None)),
            };
            if let Some(p) = trace {
                let text: String = run.trace.iter().map(|w| m.word(w) + "\n").collect();
                write(p, &text)?;
            }
            let bad: Vec<String> = run
                .trace
                .iter()
                .filter(|w| !m.check_config(w).all())
                .map(|w| m.word(w))
                .collect();
            let over_bound = run
                .trace
                .iter()
                .filter(|w| m.predecessors(w).len() > m.predecessor_bound(w))
                .count();
            let code = if !bad.is_empty() || over_bound > 0 {
                EXIT_DISCREPANCY
            } else if !run.halted {
                EXIT_INCONCLUSIVE
            } else {
                0
            };
            let last = run.trace.last().expect("trace");
            Ok((
                code,
                json!({
                    "halted": run.halted,
                    "steps": run.steps,
                    "k": run.halted.then_some(run.steps),
                    "u": run.final_config().map(|u| m.word(u)),
                    "last": m.word(last),
                    "slime_trail": m.slime_trail(last).map(|t| m.word(t)),
                    "invalid_configs": bad,
                    "predecessor_bound_exceeded": over_bound,
                }),
                None,
            ))
        }
        Command::FiniteModel {
            machine,
            budget,
            stages,
            level0,
            save,
        } => {
            let m = load_machine(machine, sk, report)?;
            let run = match m.run(*budget) {
                Ok(r) => r,
                Err(e) => return Ok((EXIT_DISCREPANCY, json!({ "error": e.to_string() }), None)),
            };
            if !run.halted {
                return Ok((EXIT_INCONCLUSIVE, json!({ "halted": false, "steps": run.steps }), None));
            }
            let fm = match finite_model_procedure(&m, &run, true, 1_000_000) {
                Ok(f) => f,
                Err(RainwormError::EdgeBudget(n)) => {
                    return Ok((EXIT_INCONCLUSIVE, json!({ "error": format!("more than {n} edges") }), None))
                }
                Err(e) => return Ok((EXIT_DISCREPANCY, json!({ "error": e.to_string() }), None)),
            };
            let mut snaps = Vec::new();
            for (i, g) in fm.snapshots.iter().enumerate() {
                match check_snapshot(&m, &fm, i, g, 100_000) {
                    Ok(c) => snaps.push(c),
                    Err(e) => return Ok((EXIT_DISCREPANCY, json!({ "error": e.to_string() }), None)),
                }
            }
            let interesting = find_matches(&fm.model, &fm.rules).iter().filter(|x| x.interesting).count();
            let betas = beta_edges_in_m0(&m, &fm);
            let (g, cx) = match full_counterexample(&m, &fm, *stages, *level0) {
                Ok(x) => x,
                Err(e) => return Ok((EXIT_DISCREPANCY, json!({ "error": e.to_string() }), None)),
            };
            if let Some(p) = save {
                write(p, &(serde_json::to_string_pretty(&greengraph::to_json(&g)).expect("json") + "\n"))?;
            }
            let fine = snaps.iter().all(|c| c.ok())
                && interesting == 0
                && betas
                && fm.added.last() == Some(&0)
                && cx.ok();
            Ok((
                if fine { 0 } else { EXIT_DISCREPANCY },
                json!({
                    "k": fm.k,
                    "u": m.word(&fm.u),
                    "model_edges": fm.model.num_edges(),
                    "added_per_round": fm.added,
                    "snapshots": snaps,
                    "interesting_matches": interesting,
                    "beta_edges_in_m0": betas,
                    "counterexample": cx,
                }),
                None,
            ))
        }
        Command::CompileRainworm { machine, with_grid } => {
            let m = load_machine(machine, sk, report)?;
            let rules = if *with_grid {
                compile_with_grid(&m)
            } else {
                compile_to_greengraph(&m)
            };
            ok(json!({
                "count": rules.len(),
                "rules": rules,
                "readable": rules.iter().map(|r| readable_rule(r, &m.table)).collect::<Vec<_>>(),
            }))
        }
        Command::Grid { t, tprime, budget } => {
            check_lengths(*t, *tprime)?;
            let r = grid_experiment(sk, *t, *tprime, budget.unwrap_or_else(|| grid_budget(*t, *tprime)));
            let code = if r.status == GridStatus::Inconclusive { EXIT_INCONCLUSIVE } else { 0 };
            Ok((code, serde_json::to_value(&r).expect("json"), None))
        }
        Command::SeparationDemo { t, tprime, budget, k } => {
            check_lengths(*t, *tprime)?;
            let r = grid_experiment(sk, *t, *tprime, budget.unwrap_or_else(|| grid_budget(*t, *tprime)));
            let tgds = greengraph::l2_tgds(&t_inf(sk));
            let (g, _) = crate::rewrite::saturate(&tgds, &seed_graph(), 2 * k + 2);
            let table = SymbolTable::separating_example(sk);
            let words: Vec<String> = greengraph::words(&g, 2 * k + 2)
                .map_err(|e| CliError::Input(e.to_string()))?
                .iter()
                .map(|w| table.word(w))
                .collect();
            let code = if r.status == GridStatus::Inconclusive { EXIT_INCONCLUSIVE } else { 0 };
            let mut v = serde_json::to_value(&r).expect("json");
            v["path_words"] = json!(words);
            Ok((code, v, None))
        }
        Command::TruncateM { n } => {
            if *n < 1 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            let m = build_m_truncated(sk, *n);
            let v = truncation_violations(sk, &m);
            let foam = check_foam(sk, &m);
            let patterns = usize::from(greengraph::has_12_pattern(&m.graph).is_some());
            let fine = patterns == 0 && v.non_local.is_empty() && foam.holds();
            Ok((
                if fine { 0 } else { EXIT_DISCREPANCY },
                json!({
                    "depth": n,
                    "edges": m.graph.num_edges(),
                    "patterns": patterns,
                    "violations": v,
                    "foam": foam,
                    "foam_holds": foam.holds(),
                }),
                None,
            ))
        }
        Command::DyDn { i, grids, budget } => {
            if *i < 1 {
                return Err(CliError::Usage("--i must be at least 1".into()));
            }
            let r = build_dy_dn(sk, *i, *grids, *budget).report;
            let fine = r.difference.size() == 1 && r.y_has_full_spider && !r.n_has_full_spider;
            Ok((
                if fine { 0 } else { EXIT_DISCREPANCY },
                serde_json::to_value(&r).expect("json"),
                None,
            ))
        }
        Command::ExportDot { input, kind } => {
            let table = SymbolTable::separating_example(sk);
            let text = match kind {
                GraphKind::Green => {
                    let j: greengraph::GreenGraphJson = parse(input, report)?;
                    greengraph::to_dot(&greengraph::from_json(&j), &table.names)
                }
                GraphKind::Swarm => {
                    let j: swarm::SwarmJson = parse(input, report)?;
                    swarm::to_dot(&swarm::from_json(&j))
                }
            };
            Ok((0, serde_json::Value::Null, Some(text)))
        }
    }
}

fn check_lengths(t: usize, tprime: usize) -> Result<(), CliError> {
    if t < 1 || tprime < 1 {
        return Err(CliError::Usage("path lengths start at 1".into()));
    }
    Ok(())
}

fn readable_rule(r: &RuleL2, table: &SymbolTable) -> String {
    let n = |l: Option<u32>| l.map_or("∅".to_string(), |c| table.name(c));
    let op = match r.mode {
        crate::spider::Mode::Wedge => "⩚̈",
        crate::spider::Mode::Vee => "⩛̈",
    };
    format!("{} {op} {} ⇄ {} {op} {}", n(r.i1), n(r.i2), n(r.i3), n(r.i4))
}
