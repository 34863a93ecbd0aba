//! Experiment campaigns: grid expansion, per-run seeding, parallel execution
//! and CSV output.
//!
//! A *cell* is one point of the `(delta, r, tau, alpha)` grid. Every cell runs
//! each configured variant (algorithm x bound) `runs` times. Run seeds are a
//! pure function of the base seed, the cell coordinates, the variant and the
//! run index, so results do not depend on scheduling or on the thread count.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chance::{BoundKind, ChanceParams};
use crate::dynamics::{CapacitySchedule, ScheduleSpec};
use crate::error::{Error, Result};
use crate::metrics::{FeasibilityRule, RunRecord, TracePoint};
use crate::model::{Instance, InstanceKind, DEFAULT_C_CONSTANT, DEFAULT_N};
use crate::oracle::DpTable;
use crate::solvers::{run_algorithm, Algorithm, RunSettings};
use crate::stats::{kruskal_wallis, pairwise_labels};

pub const RUNS_HEADER: [&str; 11] = [
    "cell_id",
    "algo",
    "bound",
    "r",
    "tau",
    "delta",
    "alpha",
    "run_seed",
    "total_offline_error",
    "feasible_fraction",
    "change_count",
];

/// Family-wise significance level of the pairwise labels.
pub const LABEL_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub algorithm: Algorithm,
    pub bound: BoundKind,
}

impl Variant {
    pub fn new(algorithm: Algorithm, bound: BoundKind) -> Self {
        Variant { algorithm, bound }
    }

    /// Column number used in result tables: 1 and 2 for the EA, 3 and 4 for
    /// POSDC, 5 and 6 for NSGA-II, Chebyshev before Chernoff.
    pub fn number(self) -> usize {
        let a = match self.algorithm {
            Algorithm::Ea11 => 0,
            Algorithm::Posdc => 1,
            Algorithm::Nsga2 => 2,
        };
        let b = match self.bound {
            BoundKind::Chebyshev => 1,
            BoundKind::Chernoff => 2,
        };
        2 * a + b
    }

    pub fn all() -> Vec<Variant> {
        Algorithm::ALL
            .iter()
            .flat_map(|&a| BoundKind::ALL.iter().map(move |&b| Variant::new(a, b)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub delta: u64,
    pub r: u64,
    pub tau: usize,
    pub alpha: f64,
}

impl Cell {
    pub fn id(&self) -> String {
        format!("d{}-r{}-t{}-a{}", self.delta, self.r, self.tau, self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub kind: InstanceKind,
    pub n: usize,
    pub deltas: Vec<u64>,
    pub c_constant: u64,
    pub instance_seed: u64,
    /// Fixed item set; when present `kind`, `n`, `c_constant` and
    /// `instance_seed` are ignored and each delta is applied to it.
    pub instance: Option<Instance>,
    pub rs: Vec<u64>,
    pub taus: Vec<usize>,
    /// Initial capacity as a fraction of the total expected weight.
    pub c0_fraction: f64,
    pub warmup: usize,
    pub total_iters: usize,
    pub alphas: Vec<f64>,
    pub variants: Vec<Variant>,
    pub runs: usize,
    pub base_seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    /// Keep every k-th post-warmup iteration of each run.
    pub trace_every: Option<usize>,
    pub feasibility: FeasibilityRule,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            kind: InstanceKind::Uncorrelated,
            n: DEFAULT_N,
            deltas: vec![25, 50],
            c_constant: DEFAULT_C_CONSTANT,
            instance_seed: 1,
            instance: None,
            rs: vec![500, 2000],
            taus: vec![100, 1000],
            c0_fraction: 0.5,
            warmup: 1_000,
            total_iters: 100_000,
            alphas: vec![0.01, 0.001, 0.0001],
            variants: Variant::all(),
            runs: 10,
            base_seed: 0,
            jobs: 0,
            trace_every: None,
            feasibility: FeasibilityRule::default(),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::invalid(format!("{what} list is empty")));
        if self.deltas.is_empty() {
            return empty("delta");
        }
        if self.rs.is_empty() {
            return empty("r");
        }
        if self.taus.is_empty() {
            return empty("tau");
        }
        if self.alphas.is_empty() {
            return empty("alpha");
        }
        if self.variants.is_empty() {
            return empty("variant");
        }
        if self.runs == 0 {
            return Err(Error::invalid("runs must be >= 1"));
        }
        if self.total_iters <= self.warmup {
            return Err(Error::invalid(format!(
                "iters ({}) must exceed warmup ({})",
                self.total_iters, self.warmup
            )));
        }
        if !(self.c0_fraction > 0.0 && self.c0_fraction <= 1.0) {
            return Err(Error::invalid("c0 fraction must lie in (0, 1]"));
        }
        if self.rs.contains(&0) {
            return Err(Error::invalid("r must be >= 1"));
        }
        if self.taus.contains(&0) {
            return Err(Error::invalid("tau must be >= 1"));
        }
        if self.trace_every == Some(0) {
            return Err(Error::invalid("trace interval must be >= 1"));
        }
        for &a in &self.alphas {
            ChanceParams::new(a, 1, BoundKind::Chebyshev)?;
        }
        for &d in &self.deltas {
            self.instance_for(d)?;
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &delta in &self.deltas {
            for &r in &self.rs {
                for &tau in &self.taus {
                    for &alpha in &self.alphas {
                        out.push(Cell {
                            delta,
                            r,
                            tau,
                            alpha,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn instance_for(&self, delta: u64) -> Result<Instance> {
        match &self.instance {
            Some(inst) => inst.with_delta(delta),
            None => Instance::generate(
                self.kind,
                self.n,
                delta,
                self.c_constant,
                self.instance_seed,
            ),
        }
    }

    pub fn schedule_for(
        &self,
        instance: &Instance,
        r: u64,
        tau: usize,
    ) -> Result<CapacitySchedule> {
        let total = instance.total_expected_weight();
        let c0 = ((self.c0_fraction * total as f64).round() as u64).clamp(1, total);
        let spec = ScheduleSpec {
            c0,
            tau,
            r,
            warmup: self.warmup,
            total_iters: self.total_iters,
            c_min: 1,
            c_max: total,
        };
        let seed = mix(&[self.base_seed, 0x5C4E_D01E, instance.delta(), r, tau as u64]);
        CapacitySchedule::build(spec, seed)
    }

    pub fn run_seed(&self, cell: &Cell, variant: Variant, run: usize) -> u64 {
        mix(&[
            self.base_seed,
            cell.delta,
            cell.r,
            cell.tau as u64,
            cell.alpha.to_bits(),
            variant.number() as u64,
            run as u64,
        ])
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a key tuple.
pub fn mix(keys: &[u64]) -> u64 {
    keys.iter()
        .fold(0x243F_6A88_85A3_08D3, |h, &k| splitmix64(h ^ splitmix64(k)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub cell_id: String,
    pub algo: String,
    pub bound: String,
    pub r: u64,
    pub tau: usize,
    pub delta: u64,
    pub alpha: f64,
    pub run_seed: u64,
    pub total_offline_error: f64,
    pub feasible_fraction: f64,
    pub change_count: usize,
}

impl RunRow {
    pub fn variant(&self) -> Result<Variant> {
        Ok(Variant::new(self.algo.parse()?, self.bound.parse()?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell_id: String,
    pub r: u64,
    pub tau: usize,
    pub delta: u64,
    pub alpha: f64,
    pub variant: usize,
    pub algo: String,
    pub bound: String,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub labels: String,
    pub kw_h: Option<f64>,
    pub kw_p: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub cell: Cell,
    pub variant: Variant,
    pub run: usize,
    pub row: RunRow,
    pub trace: Vec<TracePoint<f64>>,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub outcomes: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl CampaignResult {
    pub fn rows(&self) -> Vec<RunRow> {
        self.outcomes.iter().map(|o| o.row.clone()).collect()
    }
}

struct Job {
    cell: Cell,
    variant: Variant,
    run: usize,
    setup: usize,
}

struct Setup {
    instance: Instance,
    schedule: CapacitySchedule,
    dp: DpTable,
}

pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResult> {
    config.validate()?;

    let mut setups: Vec<Setup> = Vec::new();
    let mut setup_index: HashMap<(u64, u64, usize), usize> = HashMap::new();
    let mut dps: HashMap<u64, DpTable> = HashMap::new();
    let mut jobs = Vec::new();
    for cell in config.cells() {
        let key = (cell.delta, cell.r, cell.tau);
        let setup = match setup_index.get(&key) {
            Some(&i) => i,
            None => {
                let instance = config.instance_for(cell.delta)?;
                let schedule = config.schedule_for(&instance, cell.r, cell.tau)?;
                let dp = dps
                    .entry(cell.delta)
                    .or_insert_with(|| {
                        DpTable::build(instance.items(), instance.total_expected_weight())
                    })
                    .clone();
                setups.push(Setup {
                    instance,
                    schedule,
                    dp,
                });
                setup_index.insert(key, setups.len() - 1);
                setups.len() - 1
            }
        };
        for &variant in &config.variants {
            for run in 0..config.runs {
                jobs.push(Job {
                    cell,
                    variant,
                    run,
                    setup,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|job| execute(config, job, &setups[job.setup]))
            .collect::<Result<Vec<_>>>()
    })?;

    let rows: Vec<RunRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    let summary = summarize(&rows)?;
    Ok(CampaignResult { outcomes, summary })
}

fn execute(config: &CampaignConfig, job: &Job, setup: &Setup) -> Result<RunOutcome> {
    let params = ChanceParams::new(job.cell.alpha, job.cell.delta, job.variant.bound)?;
    let mut settings = RunSettings::new(job.variant.algorithm);
    settings.trace_every = config.trace_every;
    settings.feasibility = config.feasibility;
    let seed = config.run_seed(&job.cell, job.variant, job.run);
    let rec: RunRecord<f64> = run_algorithm(
        &setup.instance,
        &setup.schedule,
        &params,
        &setup.dp,
        &settings,
        seed,
    )?;
    let row = RunRow {
        cell_id: job.cell.id(),
        algo: job.variant.algorithm.to_string(),
        bound: job.variant.bound.to_string(),
        r: job.cell.r,
        tau: job.cell.tau,
        delta: job.cell.delta,
        alpha: job.cell.alpha,
        run_seed: seed,
        total_offline_error: rec.total_offline_error,
        feasible_fraction: rec.feasible_fraction,
        change_count: rec.change_count,
    };
    Ok(RunOutcome {
        cell: job.cell,
        variant: job.variant,
        run: job.run,
        row,
        trace: rec.trace,
    })
}

/// A variant's first row (for the cell metadata) and all of its errors.
type VariantGroup<'a> = (Variant, &'a RunRow, Vec<f64>);

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Per-(cell, variant) mean and sample standard deviation of the total
/// offline error, with Kruskal-Wallis and pairwise labels across the
/// variants of each cell. Rows keep the order of first appearance.
pub fn summarize(rows: &[RunRow]) -> Result<Vec<SummaryRow>> {
    let mut cells: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<VariantGroup>> = HashMap::new();
    for row in rows {
        let variant = row.variant()?;
        let entry = groups.entry(row.cell_id.clone()).or_insert_with(|| {
            cells.push(row.cell_id.clone());
            Vec::new()
        });
        match entry.iter_mut().find(|(v, _, _)| *v == variant) {
            Some((_, _, xs)) => xs.push(row.total_offline_error),
            None => entry.push((variant, row, vec![row.total_offline_error])),
        }
    }

    let mut out = Vec::new();
    for cell in &cells {
        let group = &groups[cell];
        let tags: Vec<String> = group
            .iter()
            .map(|(v, _, _)| v.number().to_string())
            .collect();
        let (labels, kw) = if group.len() >= 2 {
            let named: Vec<(&str, &[f64])> = group
                .iter()
                .zip(&tags)
                .map(|((_, _, xs), t)| (t.as_str(), xs.as_slice()))
                .collect();
            let samples: Vec<&[f64]> = named.iter().map(|(_, xs)| *xs).collect();
            (
                Some(pairwise_labels(&named, LABEL_ALPHA)?),
                Some(kruskal_wallis(&samples)?),
            )
        } else {
            (None, None)
        };
        for (i, (variant, first, xs)) in group.iter().enumerate() {
            let (mean, std) = mean_std(xs);
            out.push(SummaryRow {
                cell_id: cell.clone(),
                r: first.r,
                tau: first.tau,
                delta: first.delta,
                alpha: first.alpha,
                variant: variant.number(),
                algo: first.algo.clone(),
                bound: first.bound.clone(),
                runs: xs.len(),
                mean,
                std,
                labels: labels
                    .as_ref()
                    .map(|m| m.render_row(i, &tags))
                    .unwrap_or_default(),
                kw_h: kw.map(|k| k.h),
                kw_p: kw.map(|k| k.p_value),
            });
        }
    }
    Ok(out)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_runs_csv(path: &Path, rows: &[RunRow]) -> Result<()> {
    if rows.is_empty() {
        fs::write(path, RUNS_HEADER.join(",") + "\n")?;
        return Ok(());
    }
    write_csv(path, rows)
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<RunRow>, _>>()?;
    Ok(rows)
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<SummaryRow>, _>>()?;
    Ok(rows)
}

fn trace_csv(trace: &[TracePoint<f64>]) -> String {
    let mut out = format!("{}\n", crate::metrics::TRACE_HEADER);
    for t in trace {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t.iteration, t.capacity, t.best_profit, t.violation_prob, t.phi
        ));
    }
    out
}

/// Writes `runs.csv`, `summary.csv` and, for traced campaigns, one file per
/// run under `traces/`.
pub fn write_outputs(result: &CampaignResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_runs_csv(&dir.join("runs.csv"), &result.rows())?;
    write_summary_csv(&dir.join("summary.csv"), &result.summary)?;
    if result.outcomes.iter().any(|o| !o.trace.is_empty()) {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir)?;
        for o in &result.outcomes {
            let name = format!(
                "{}_{}-{}_run{}.csv",
                o.cell.id(),
                o.variant.algorithm,
                o.variant.bound,
                o.run
            );
            fs::write(tdir.join(name), trace_csv(&o.trace))?;
        }
    }
    Ok(())
}

/// Human-readable table: one line per cell, one column per variant showing
/// `mean (std) labels`.
pub fn render_table(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    let mut last = None;
    for row in summary {
        if last != Some(&row.cell_id) {
            let kw = match (row.kw_h, row.kw_p) {
                (Some(h), Some(p)) => format!("  [H = {h:.3}, p = {p:.3e}]"),
                _ => String::new(),
            };
            out.push_str(&format!(
                "r = {}, tau = {}, delta = {}, alpha = {}{kw}\n",
                row.r, row.tau, row.delta, row.alpha
            ));
            last = Some(&row.cell_id);
        }
        out.push_str(&format!(
            "  ({}) {}-{:<10} {:>12.2} {:>10.2}  {}\n",
            row.variant, row.algo, row.bound, row.mean, row.std, row.labels
        ));
    }
    out
}
