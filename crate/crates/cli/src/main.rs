//! `csg`: experiments on anytime coalition structure generation.
//!
//! Exit status is 0 on success, 1 when a verification fails and 2 on bad
//! usage or input.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};

use csg_core::bounds::{
    bound_after_level_variant, css1_bound_staircase, minimality_check, minimality_spot_check, oracle_agreement,
    splitting_bad_case_curve, Agreement, Css1Checkpoint, ModulusVariant,
};
use csg_core::io::{
    bound_curve_csv, count_csv, parse_audit_policy, parse_game_raw, parse_generator, parse_policy, protocol_csv,
    trace_csv, write_game,
};
use csg_core::partition::{enumerate_all, enumerate_level};
use csg_core::protocol::{
    exact_catch_probability, inspection_equilibrium, simulate_rounds, Assignment, AuditPolicy, InspectionParams,
    PayoffScheme, SearchPhase, SimulationConfig,
};
use csg_core::search::{run, Algorithm, Budget, SearchConfig};
use csg_core::verify::{run_suite, CheckOutcome, Level};
use csg_core::{AgentCount, Game};

#[derive(Parser)]
#[command(name = "csg", version, about = "Anytime coalition structure generation with worst-case bounds")]
struct Cli {
    /// Worker threads for level scans; output is identical for any value.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coalition and structure counts for 1..=a agents.
    Count {
        #[arg(long)]
        agents: usize,
    },
    /// Lists coalition structures, one per line.
    Enumerate {
        #[arg(long)]
        agents: usize,
        /// Only structures with this many coalitions.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Runs a search and prints the final incumbent and bound.
    Search {
        #[command(flatten)]
        source: GameSource,
        #[arg(long, default_value = "css1")]
        alg: String,
        /// Maximum number of nodes to visit.
        #[arg(long)]
        budget: Option<u64>,
        /// Write the checkpoint trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// The bound staircase and the splitting search's realized ratio on the singleton game.
    BoundCurve {
        #[arg(long)]
        agents: usize,
    },
    /// Writes a generated game in the game file format.
    GenAdversarial {
        #[arg(long)]
        agents: usize,
        /// singleton, level-tight:<l> or uniform-random:<seed>.
        #[arg(long, default_value = "singleton")]
        gen: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact worst-case ratio after each checkpoint, next to the closed form.
    Oracle {
        #[arg(long)]
        agents: usize,
    },
    /// Checks that no smaller node set than the bottom two levels guarantees a bound.
    Minimality {
        #[arg(long, default_value_t = 4)]
        agents: usize,
    },
    /// Simulates distributed search rounds with random audits.
    ProtocolSim(ProtocolArgs),
    /// Runs the self-check suite.
    Verify {
        #[arg(long, value_enum, default_value_t = VerifyLevel::Quick)]
        level: VerifyLevel,
        /// Test fixture: add one to the bound formula at this level.
        #[arg(long, hide = true)]
        inject_bound_fault: Option<usize>,
    },
}

#[derive(Args)]
struct GameSource {
    /// Game file to load.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    game: Option<PathBuf>,
    /// Generator name: singleton, level-tight:<l> or uniform-random:<seed>.
    #[arg(long, requires = "agents")]
    gen: Option<String>,
    /// Agent count for --gen.
    #[arg(long)]
    agents: Option<usize>,
    /// Normalize negative file values by subtracting the minimum.
    #[arg(long)]
    shift: bool,
}

#[derive(Args)]
struct ProtocolArgs {
    #[command(flatten)]
    source: GameSource,
    /// Number of searching agents.
    #[arg(long, default_value_t = 4)]
    searchers: usize,
    /// bottom-two or level:<l>.
    #[arg(long, default_value = "bottom-two")]
    phase: String,
    /// truthful, shirk:<f>, fabricate or mixed:<q>:<strategy>; one value for
    /// everyone or one per searcher, comma-separated.
    #[arg(long, default_value = "truthful")]
    policy: String,
    /// always, never, prob:<p> or equilibrium.
    #[arg(long, default_value = "equilibrium")]
    audit: String,
    #[arg(long, default_value_t = 10.0)]
    penalty: f64,
    #[arg(long, default_value_t = 1.0)]
    c_search: f64,
    #[arg(long, default_value_t = 1.0)]
    c_audit: f64,
    /// equal or singleton-proportional.
    #[arg(long, default_value = "equal")]
    scheme: String,
    #[arg(long, default_value_t = 1000)]
    rounds: u64,
    #[arg(long)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyLevel {
    Quick,
    Full,
}

enum Failure {
    Usage(String),
    Verification,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn agents(n: usize) -> Result<AgentCount, Failure> {
    Ok(AgentCount::new(n)?)
}

fn load_game(source: &GameSource) -> Result<Game, Failure> {
    if let Some(path) = &source.game {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let raw = parse_game_raw(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if source.shift {
            let shifted = raw.into_shifted()?;
            if shifted.warning {
                eprintln!(
                    "warning: shifted all values by {}; structure values change by that times their level, \
                     so the best structure may differ from the original game's",
                    shifted.offset
                );
            }
            return Ok(shifted.game);
        }
        return raw.into_game().map_err(|e| Failure::Usage(format!("{}: {e}", path.display())));
    }
    let gen = parse_generator(source.gen.as_deref().expect("clap requires --game or --gen"))?;
    let a = agents(source.agents.expect("clap requires --agents with --gen"))?;
    Ok(gen.build(a)?)
}

fn write_output(path: Option<&PathBuf>, text: &str) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn finish(out: &str, failed: bool) -> CmdResult {
    write_output(None, out)?;
    if failed {
        Err(Failure::Verification)
    } else {
        Ok(())
    }
}

fn cmd_enumerate(a: AgentCount, level: Option<usize>) -> CmdResult {
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "structure")?;
    match level {
        Some(l) => {
            for cs in enumerate_level(a, l)? {
                writeln!(out, "{cs}")?;
            }
        }
        None => {
            for cs in enumerate_all(a) {
                writeln!(out, "{cs}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_search(
    source: &GameSource,
    alg: &str,
    budget: Option<u64>,
    trace: Option<&PathBuf>,
    threads: usize,
) -> CmdResult {
    let game = load_game(source)?;
    let algorithm = Algorithm::from_name(alg).ok_or_else(|| {
        let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
        Failure::Usage(format!("unknown algorithm `{alg}`; expected one of {}", names.join(", ")))
    })?;
    let budget = match budget {
        Some(n) => Budget::nodes(n)?,
        None => Budget::unlimited(),
    };
    let result = run(&game, algorithm, &SearchConfig { budget, threads })?;
    if let Some(path) = trace {
        write_output(Some(path), &trace_csv(&result))?;
    }
    let last = result.last();
    let bound = last.bound.map(|k| k.to_string()).unwrap_or_else(|| "none".into());
    let mut out = String::new();
    writeln!(out, "structure: {}", last.best_cs)?;
    writeln!(out, "value: {}", last.best_value)?;
    writeln!(out, "n: {}", last.n)?;
    writeln!(out, "bound: {bound}")?;
    finish(&out, false)
}

fn cmd_bound_curve(a: AgentCount) -> CmdResult {
    let staircase = css1_bound_staircase(a)?;
    let splitting = splitting_bad_case_curve(a)?;
    write_output(None, &bound_curve_csv(&staircase, &splitting))
}

fn cmd_oracle(a: AgentCount) -> CmdResult {
    let show = |k: Option<u64>| k.map(|k| k.to_string()).unwrap_or_default();
    let mut failed = false;
    let mut out = String::new();
    writeln!(out, "checkpoint,n,oracle,closed_form,mod_h,mod_h_minus_one,agreement")?;
    for row in oracle_agreement(a, bound_after_level_variant)? {
        let checkpoint = match row.checkpoint {
            Css1Checkpoint::BottomTwo => "bottom-two".to_string(),
            Css1Checkpoint::AfterLevel(l) => format!("level-{l}"),
        };
        let oracle = row.oracle.ratio().map(|r| r.to_string()).unwrap_or_default();
        let agreement = match row.agreement {
            Agreement::Match => "match".to_string(),
            Agreement::Adjudicated(ModulusVariant::ModHMinusOne) => "mod-h-minus-one".to_string(),
            Agreement::Adjudicated(ModulusVariant::ModH) => "mod-h".to_string(),
            Agreement::Unexplained => {
                failed = true;
                "unexplained".to_string()
            }
        };
        writeln!(
            out,
            "{checkpoint},{},{oracle},{},{},{},{agreement}",
            row.n,
            show(row.closed_form),
            show(row.mod_h),
            show(row.mod_h_minus_one)
        )?;
    }
    finish(&out, failed)
}

fn cmd_minimality(a: AgentCount) -> CmdResult {
    let mut failed = false;
    let mut out = String::new();
    writeln!(out, "check,omitted,min_replacements,example")?;
    if a.get() == 4 {
        let v = minimality_check(a)?;
        let ok = v.covering.len() == 1 && v.unique_is_bottom_two;
        failed |= !ok;
        let covering: Vec<String> =
            v.covering.iter().map(|set| set.iter().map(|cs| cs.to_string()).collect::<Vec<_>>().join(" ")).collect();
        writeln!(
            out,
            "scan,,{} eight-node subsets with {} covering,{}",
            v.full_size_subsets_scanned,
            v.covering.len(),
            covering.join(";")
        )?;
    }
    for r in minimality_spot_check(a)? {
        failed |= !r.needs_at_least(2);
        let min = r.min_replacements.map(|m| m.to_string()).unwrap_or_else(|| "none".into());
        let example: Vec<String> = r.example.iter().map(|cs| cs.to_string()).collect();
        writeln!(out, "spot,{},{min},{}", r.omitted, example.join(" "))?;
    }
    finish(&out, failed)
}

fn parse_phase(text: &str) -> Result<SearchPhase, Failure> {
    match text.split_once(':') {
        None if text == "bottom-two" => Ok(SearchPhase::BottomTwo),
        Some(("level", l)) => {
            l.parse().map(SearchPhase::Level).map_err(|_| Failure::Usage(format!("level `{l}` is not an integer")))
        }
        _ => Err(Failure::Usage(format!("unknown phase `{text}`; expected bottom-two or level:<l>"))),
    }
}

fn cmd_protocol(args: &ProtocolArgs) -> CmdResult {
    let game = load_game(&args.source)?;
    let params = InspectionParams::new(args.penalty, args.c_search, args.c_audit)?;
    let eq = inspection_equilibrium(&params);
    let phase = parse_phase(&args.phase)?;
    let mut policies = args.policy.split(',').map(parse_policy).collect::<Result<Vec<_>, _>>()?;
    if policies.len() == 1 {
        policies = vec![policies[0]; args.searchers];
    } else if policies.len() != args.searchers {
        return Err(Failure::Usage(format!("{} policies for {} searchers", policies.len(), args.searchers)));
    }
    let audit = match args.audit.as_str() {
        "equilibrium" => AuditPolicy::Probability(eq.p_audit),
        other => parse_audit_policy(other)?,
    };
    let config = SimulationConfig {
        phase,
        policies,
        audit,
        params,
        scheme: PayoffScheme::from_name(&args.scheme)?,
        rounds: args.rounds,
        seed: args.seed,
    };
    let stats = simulate_rounds(&game, &config)?;
    let deal = Assignment::new(game.agents(), phase, args.searchers, args.seed)?;
    let expected_catch = exact_catch_probability(&game, &deal, &config.policies, audit)?;

    let mut out = protocol_csv(&stats);
    out.push_str("\nquantity,value\n");
    for (k, v) in [
        ("equilibrium_p_audit", eq.p_audit),
        ("equilibrium_q_search", eq.q_search),
        ("audit_probability", audit.probability()),
        ("audit_frequency", stats.audit_frequency()),
        ("catch_frequency", stats.catch_frequency()),
        ("expected_catch_probability", expected_catch),
        ("mean_welfare", stats.mean_welfare),
    ] {
        out.push_str(&format!("{k},{v}\n"));
    }
    write_output(None, &out)
}

static FAULT_LEVEL: AtomicUsize = AtomicUsize::new(0);

fn faulty_formula(a: usize, l: usize, v: ModulusVariant) -> csg_core::Result<u64> {
    let k = bound_after_level_variant(a, l, v)?;
    Ok(if FAULT_LEVEL.load(Ordering::Relaxed) == l { k + 1 } else { k })
}

fn cmd_verify(level: VerifyLevel, fault: Option<usize>) -> CmdResult {
    let level = match level {
        VerifyLevel::Quick => Level::Quick,
        VerifyLevel::Full => Level::Full,
    };
    let outcomes: Vec<CheckOutcome> = match fault {
        Some(l) => {
            FAULT_LEVEL.store(l, Ordering::Relaxed);
            run_suite(level, faulty_formula)
        }
        None => run_suite(level, bound_after_level_variant),
    };
    let mut out = String::new();
    writeln!(out, "check,status,detail")?;
    for o in &outcomes {
        writeln!(out, "{o}")?;
    }
    finish(&out, outcomes.iter().any(|o| !o.passed))
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Count { agents: a } => write_output(None, &count_csv(agents(a)?)),
        Command::Enumerate { agents: a, level } => cmd_enumerate(agents(a)?, level),
        Command::Search { source, alg, budget, trace } => {
            cmd_search(&source, &alg, budget, trace.as_ref(), cli.threads)
        }
        Command::BoundCurve { agents: a } => cmd_bound_curve(agents(a)?),
        Command::GenAdversarial { agents: a, gen, out } => {
            let game = parse_generator(&gen)?.build(agents(a)?)?;
            write_output(out.as_ref(), &write_game(&game))
        }
        Command::Oracle { agents: a } => cmd_oracle(agents(a)?),
        Command::Minimality { agents: a } => cmd_minimality(agents(a)?),
        Command::ProtocolSim(args) => cmd_protocol(&args),
        Command::Verify { level, inject_bound_fault } => cmd_verify(level, inject_bound_fault),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
