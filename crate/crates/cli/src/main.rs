use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dcckp::campaign::{
    read_runs_csv, render_table, run_campaign, summarize, write_outputs, write_summary_csv,
    CampaignConfig, RunRow, Variant, LABEL_ALPHA,
};
use dcckp::metrics::FeasibilityRule;
use dcckp::model::{DEFAULT_C_CONSTANT, DEFAULT_N};
use dcckp::stats::{kruskal_wallis, pairwise_labels};
use dcckp::{Algorithm, BoundKind, DpTable, Error, Instance, InstanceKind};

#[derive(Parser)]
#[command(
    name = "dcckp",
    version,
    about = "Dynamic chance-constrained knapsack benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file
    GenInstance(GenArgs),
    /// Run an experiment campaign and write runs.csv / summary.csv
    Run(RunArgs),
    /// Recompute summary.csv from a runs.csv
    Summarize(SummarizeArgs),
    /// Kruskal-Wallis and pairwise labels for every cell of a runs.csv
    Stats(StatsArgs),
    /// Dump a capacity schedule as iteration,capacity CSV
    Schedule(ScheduleArgs),
    /// Dump the DP table as capacity,optimal_profit CSV
    Dp(DpArgs),
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, default_value = "uncorrelated")]
    kind: InstanceKind,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    /// Additive constant of bounded strongly correlated profits
    #[arg(long, default_value_t = DEFAULT_C_CONSTANT)]
    c: u64,
    #[arg(long, default_value_t = 1)]
    instance_seed: u64,
    /// Read the item set from a file instead of generating it
    #[arg(long)]
    instance: Option<PathBuf>,
}

impl InstanceArgs {
    fn load(&self, delta: u64) -> Result<Instance, Error> {
        match &self.instance {
            Some(path) => Instance::parse(&fs::read_to_string(path)?)?.with_delta(delta),
            None => Instance::generate(self.kind, self.n, delta, self.c, self.instance_seed),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "uncorrelated")]
    kind: InstanceKind,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = 25)]
    delta: u64,
    #[arg(long, default_value_t = DEFAULT_C_CONSTANT)]
    c: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_delimiter = ',', default_value = "25")]
    delta: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.001,0.0001")]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "500")]
    r: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    tau: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    iters: usize,
    #[arg(long, default_value_t = 1_000)]
    warmup: usize,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, value_delimiter = ',', default_value = "ea11,posdc,nsga2")]
    algos: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_value = "chebyshev,chernoff")]
    bounds: Vec<BoundKind>,
    /// Base seed of the campaign
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads (0: all cores)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value_t = 0.5)]
    c0_fraction: f64,
    /// Write per-iteration traces
    #[arg(long)]
    trace: bool,
    #[arg(long, default_value_t = 100)]
    trace_every: usize,
    /// How the scored solution is judged feasible: bound (C*(x) <= C) or
    /// probability (Pr <= alpha)
    #[arg(long, default_value = "bound")]
    feasibility: FeasibilityRule,
}

#[derive(Args)]
struct SummarizeArgs {
    /// runs.csv produced by `run`
    input: PathBuf,
    /// Output summary CSV; defaults to summary.csv next to the input
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    input: PathBuf,
    /// Restrict to one cell id
    #[arg(long)]
    cell: Option<String>,
    #[arg(long, default_value_t = LABEL_ALPHA)]
    family_alpha: f64,
}

#[derive(Args)]
struct ScheduleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 25)]
    delta: u64,
    #[arg(long, default_value_t = 500)]
    r: u64,
    #[arg(long, default_value_t = 1000)]
    tau: usize,
    #[arg(long, default_value_t = 100_000)]
    iters: usize,
    #[arg(long, default_value_t = 1_000)]
    warmup: usize,
    #[arg(long, default_value_t = 0.5)]
    c0_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DpArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 25)]
    delta: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), Error> {
    let inst = Instance::generate(a.kind, a.n, a.delta, a.c, a.seed)?;
    emit(&inst.serialize(), a.out.as_deref())
}

fn campaign_config(a: &RunArgs) -> Result<CampaignConfig, Error> {
    let instance = match &a.instance.instance {
        Some(path) => Some(Instance::parse(&fs::read_to_string(path)?)?),
        None => None,
    };
    let mut variants = Vec::new();
    for &algo in &a.algos {
        for &bound in &a.bounds {
            let v = Variant::new(algo, bound);
            if !variants.contains(&v) {
                variants.push(v);
            }
        }
    }
    Ok(CampaignConfig {
        kind: a.instance.kind,
        n: a.instance.n,
        deltas: a.delta.clone(),
        c_constant: a.instance.c,
        instance_seed: a.instance.instance_seed,
        instance,
        rs: a.r.clone(),
        taus: a.tau.clone(),
        c0_fraction: a.c0_fraction,
        warmup: a.warmup,
        total_iters: a.iters,
        alphas: a.alpha.clone(),
        variants,
        runs: a.runs,
        base_seed: a.seed,
        jobs: a.jobs,
        trace_every: a.trace.then_some(a.trace_every),
        feasibility: a.feasibility,
    })
}

fn cmd_run(a: RunArgs) -> Result<(), Error> {
    let config = campaign_config(&a)?;
    config.validate()?;
    let result = run_campaign(&config)?;
    write_outputs(&result, &a.out)?;
    print!("{}", render_table(&result.summary));
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> Result<(), Error> {
    let rows = read_runs_csv(&a.input)?;
    let summary = summarize(&rows)?;
    let out = a
        .out
        .unwrap_or_else(|| a.input.with_file_name("summary.csv"));
    write_summary_csv(&out, &summary)?;
    print!("{}", render_table(&summary));
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<(), Error> {
    let rows = read_runs_csv(&a.input)?;
    let mut cells: Vec<&str> = Vec::new();
    for r in &rows {
        if !cells.contains(&r.cell_id.as_str()) {
            cells.push(&r.cell_id);
        }
    }
    if let Some(c) = &a.cell {
        if !cells.contains(&c.as_str()) {
            return Err(Error::InvalidParameter(format!("no cell named {c}")));
        }
        cells.retain(|x| x == c);
    }
    for cell in cells {
        let mut groups: Vec<(Variant, Vec<f64>)> = Vec::new();
        for r in rows.iter().filter(|r| r.cell_id == cell) {
            let v = RunRow::variant(r)?;
            match groups.iter_mut().find(|(g, _)| *g == v) {
                Some((_, xs)) => xs.push(r.total_offline_error),
                None => groups.push((v, vec![r.total_offline_error])),
            }
        }
        println!("{cell}");
        if groups.len() < 2 {
            println!("  single variant, nothing to compare");
            continue;
        }
        let tags: Vec<String> = groups.iter().map(|(v, _)| v.number().to_string()).collect();
        let samples: Vec<&[f64]> = groups.iter().map(|(_, xs)| xs.as_slice()).collect();
        let kw = kruskal_wallis(&samples)?;
        println!(
            "  Kruskal-Wallis H = {:.4}, df = {}, p = {:.4e}",
            kw.h, kw.df, kw.p_value
        );
        let named: Vec<(&str, &[f64])> = tags.iter().map(String::as_str).zip(samples).collect();
        let m = pairwise_labels(&named, a.family_alpha)?;
        for (i, (v, _)) in groups.iter().enumerate() {
            println!(
                "  ({}) {}-{}: {}",
                v.number(),
                v.algorithm,
                v.bound,
                m.render_row(i, &tags)
            );
        }
    }
    Ok(())
}

fn cmd_schedule(a: ScheduleArgs) -> Result<(), Error> {
    let inst = a.instance.load(a.delta)?;
    let config = CampaignConfig {
        warmup: a.warmup,
        total_iters: a.iters,
        c0_fraction: a.c0_fraction,
        base_seed: a.seed,
        ..CampaignConfig::default()
    };
    if !(a.c0_fraction > 0.0 && a.c0_fraction <= 1.0) {
        return Err(Error::InvalidParameter(
            "c0 fraction must lie in (0, 1]".into(),
        ));
    }
    let sched = config.schedule_for(&inst, a.r, a.tau)?;
    emit(&sched.to_csv(), a.out.as_deref())
}

fn cmd_dp(a: DpArgs) -> Result<(), Error> {
    let inst = a.instance.load(a.delta)?;
    let dp = DpTable::build(inst.items(), inst.total_expected_weight());
    emit(&dp.to_csv(), a.out.as_deref())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::Parse { .. }
        | Error::TooManyItems { .. }
        | Error::IndexOutOfRange { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::GenInstance(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Schedule(a) => cmd_schedule(a),
        Command::Dp(a) => cmd_dp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
