use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fairlot::eps::{eps_outcome, EpsMode};
use fairlot::io::{
    instance_to_value, parse_instance, parse_lottery, parse_matrix, write_lottery, LotteryFile,
    LotteryMetadata,
};
use fairlot::oracle::{AllocationFilter, Budget};
use fairlot::pslottery::{ps_lottery, reduce_support, Rule};
use fairlot::{Instance, RandomAllocation};

mod gen;
mod report;

#[derive(Parser)]
#[command(
    name = "fairlot",
    version,
    about = "Exact PS lotteries over EF1 allocations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the fractional (E)PS outcome.
    Solve(SolveArgs),
    /// Compute a lottery over deterministic allocations implementing the outcome.
    Lottery(LotteryArgs),
    /// Check a fairness or efficiency property.
    Verify(VerifyArgs),
    /// Run the brute-force and LP reference oracle.
    Oracle(OracleArgs),
    /// Generate a reproducible random instance.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Ps,
    Eps,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    rule: RuleArg,
    /// Binary utilities only: never eat zero-utility items.
    #[arg(long)]
    skip_zero: bool,
    /// Instance file, or `-` for standard input.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct LotteryArgs {
    #[arg(long, value_enum)]
    rule: RuleArg,
    #[arg(long)]
    skip_zero: bool,
    /// Shrink the support to at most nm + 1 allocations.
    #[arg(long)]
    reduce: bool,
    #[arg(long)]
    input: PathBuf,
    /// Output file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum Property {
    Ef,
    Sdef,
    Ef1,
    Efk,
    Sdef1,
    StrongEf1,
    Rb,
    Sdeff,
    Po,
}

#[derive(Clone, Copy, ValueEnum)]
pub(crate) enum RemovalArg {
    Both,
    Envied,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    property: Property,
    #[arg(long)]
    input: PathBuf,
    /// Lottery file; ex-post properties are checked on every support allocation.
    #[arg(long)]
    lottery: Option<PathBuf>,
    /// Matrix or assignment file to check instead of a lottery.
    #[arg(long)]
    allocation: Option<PathBuf>,
    /// Number of removable items for `efk`.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    k: i64,
    #[arg(long, value_enum, default_value = "both")]
    removal: RemovalArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    /// Decide whether the allocation is a lottery over the filtered set.
    Implement,
    /// Leximin-optimal fractional allocation (binary utilities).
    Leximin,
    /// Search for a fractional Pareto improvement over the allocation.
    Pareto,
    /// Search for an SD improvement over the allocation.
    SdImprove,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Ef1Po,
    BalancedPo,
    None,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum, default_value = "implement")]
    target: Target,
    #[arg(long, value_enum, default_value = "none")]
    filter: FilterArg,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    allocation: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    agents: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    items: u32,
    #[arg(long)]
    seed: u64,
    /// 0/1 utilities instead of distinct positive integers.
    #[arg(long)]
    binary: bool,
}

/// Anything that should end the process with exit code 2.
#[derive(Debug)]
pub(crate) struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

pub(crate) type CliResult<T> = Result<T, Failure>;

fn fail<T>(message: impl Into<String>) -> CliResult<T> {
    Err(Failure(message.into()))
}

fn read_text(path: &Path) -> CliResult<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: fairlot::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure(format!("{}: {e}", path.display())))
}

pub(crate) fn read_instance(path: &Path) -> CliResult<Instance> {
    let text = read_text(path)?;
    in_file(path, parse_instance(&text))
}

pub(crate) fn read_matrix(path: &Path, instance: &Instance) -> CliResult<RandomAllocation> {
    let text = read_text(path)?;
    let file = in_file(path, parse_matrix(&text))?;
    let rows = in_file(path, file.aligned_to(instance))?;
    in_file(path, RandomAllocation::new(rows))
}

pub(crate) fn read_lottery(path: &Path, instance: &Instance) -> CliResult<LotteryFile> {
    let text = read_text(path)?;
    let file = in_file(path, parse_lottery(&text))?;
    if file.agents != instance.agents() || file.items != instance.items() {
        return fail(format!(
            "{}: agents and items must match the instance in the same order",
            path.display()
        ));
    }
    Ok(file)
}

fn print_text(text: &str) {
    // a closed pipe downstream is not an error worth reporting
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &Value) {
    let mut text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    text.push('\n');
    print_text(&text);
}

fn rule_of(rule: RuleArg, skip_zero: bool) -> CliResult<Rule> {
    match (rule, skip_zero) {
        (RuleArg::Ps, false) => Ok(Rule::Ps),
        (RuleArg::Eps, false) => Ok(Rule::Eps),
        (RuleArg::Eps, true) => Ok(Rule::EpsSkipZero),
        (RuleArg::Ps, true) => fail("--skip-zero requires --rule eps"),
    }
}

fn solve(args: SolveArgs) -> CliResult<bool> {
    let instance = read_instance(&args.input)?;
    let (allocation, unwanted) = match rule_of(args.rule, args.skip_zero)? {
        Rule::Ps => {
            let profile = instance
                .ordinal_profile()
                .strictified_by(instance.lex_rank());
            (fairlot::ps::ps_outcome(&profile)?.0, Vec::new())
        }
        Rule::Eps => (
            eps_outcome(&instance, EpsMode::Standard)?.allocation,
            Vec::new(),
        ),
        Rule::EpsSkipZero => {
            let out = eps_outcome(&instance, EpsMode::SkipZero)?;
            (out.allocation, out.unwanted)
        }
    };
    let mut v = json!({
        "agents": instance.agents(),
        "items": instance.items(),
        "matrix": report::matrix(allocation.rows()),
    });
    if args.skip_zero {
        v["unwanted"] = json!(unwanted
            .iter()
            .map(|&o| &instance.items()[o])
            .collect::<Vec<_>>());
    }
    print_json(&v);
    Ok(true)
}

fn lottery(args: LotteryArgs) -> CliResult<bool> {
    let instance = read_instance(&args.input)?;
    let rule = rule_of(args.rule, args.skip_zero)?;
    let out = ps_lottery(&instance, rule)?;
    let m = instance.num_items();
    let tie_break = out
        .profile
        .orders()
        .iter()
        .map(|order| {
            order
                .tiers()
                .iter()
                .map(|tier| tier.iter().map(|&o| out.item_ids[o].clone()).collect())
                .collect()
        })
        .collect();
    let (lottery, support_bound) = if args.reduce {
        (reduce_support(&out.lottery), instance.num_agents() * m + 1)
    } else {
        (out.lottery.clone(), out.support_bound())
    };
    let file = LotteryFile {
        rule: rule.name().to_string(),
        agents: instance.agents().to_vec(),
        items: instance.items().to_vec(),
        expected: out.outcome.clone(),
        lottery,
        metadata: LotteryMetadata {
            tie_break,
            dummies: out.item_ids[m..].to_vec(),
            support_bound,
            reduced: args.reduce,
        },
    };
    let text = write_lottery(&file);
    match args.out {
        Some(path) => {
            fs::write(&path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))?
        }
        None => print_text(&text),
    }
    Ok(true)
}

fn oracle(args: OracleArgs) -> CliResult<bool> {
    let instance = read_instance(&args.input)?;
    let budget = Budget::from_env()?;
    let target = |name: &str| -> CliResult<RandomAllocation> {
        match &args.allocation {
            Some(path) => read_matrix(path, &instance),
            None => fail(format!("--target {name} needs --allocation")),
        }
    };
    let (v, ok) = match args.target {
        Target::Implement => {
            let p = target("implement")?;
            let filter = match args.filter {
                FilterArg::Ef1Po => AllocationFilter::Ef1Po,
                FilterArg::BalancedPo => AllocationFilter::BalancedPo,
                FilterArg::None => AllocationFilter::None,
            };
            report::implement(&instance, &p, filter, budget)?
        }
        Target::Leximin => report::leximin(&instance)?,
        Target::Pareto => report::pareto(&instance, &target("pareto")?)?,
        Target::SdImprove => report::sd_improve(&instance, &target("sd-improve")?)?,
    };
    print_json(&v);
    Ok(ok)
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Lottery(a) => lottery(a),
        Command::Verify(a) => {
            let instance = read_instance(&a.input)?;
            let lottery = a
                .lottery
                .as_deref()
                .map(|p| read_lottery(p, &instance))
                .transpose()?;
            let allocation = a
                .allocation
                .as_deref()
                .map(|p| read_matrix(p, &instance))
                .transpose()?;
            let (v, ok) = report::verify(
                &instance,
                a.property,
                lottery.as_ref(),
                allocation.as_ref(),
                a.k,
                a.removal,
            )?;
            print_json(&v);
            Ok(ok)
        }
        Command::Oracle(a) => oracle(a),
        Command::Gen(a) => {
            let inst = gen::instance(a.agents as usize, a.items as usize, a.seed, a.binary);
            print_json(&instance_to_value(&inst));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(message)) => {
            eprintln!("fairlot: {message}");
            ExitCode::from(2)
        }
    }
}
