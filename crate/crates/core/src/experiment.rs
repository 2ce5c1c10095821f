//! Configuration, orchestration and persistence behind the `trifree` CLI.
//!
//! Every subcommand reads one JSON document (see [`ExperimentConfig`]),
//! derives all randomness from `master_seed`, and writes its outputs
//! atomically into `output`. `summary.json` never contains wall-clock data;
//! timings go to `timing.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::census::{self, SmallGraph, FREQ_CSV_HEADER};
use crate::error::{Error, Result};
use crate::extension::ExtensionPattern;
use crate::graph::{BitGraph, PairKey, PairStore};
use crate::independence::{self, ExactConfig, RamseyWitness};
use crate::oracle;
use crate::process::{self, Discipline, ProcessState, SnapshotSchedule, TerminationReport};
use crate::rng::{rng_from_seed, run_seed, IndexStream, ProcessRng};
use crate::scaling::{ErrorParams, ScalingContext};
use crate::stacking::StackingWord;
use crate::stats::{fmt_g9, iqr, median};
use crate::tracker::{self, codegree, StatsMode, TrajectoryRecord, CSV_HEADER};

pub const FORMAT_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "TRIFREE_THREADS";
pub const VERIFY_MAX_N: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Run,
    Sweep,
    Census,
    Ramsey,
    Trajectory,
    Stacking,
    VerifyOracle,
}

impl Subcommand {
    pub fn as_str(self) -> &'static str {
        match self {
            Subcommand::Run => "run",
            Subcommand::Sweep => "sweep",
            Subcommand::Census => "census",
            Subcommand::Ramsey => "ramsey",
            Subcommand::Trajectory => "trajectory",
            Subcommand::Stacking => "stacking",
            Subcommand::VerifyOracle => "verify-oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Geometric,
    Times,
    Steps,
    Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    /// Geometric snapshot count.
    pub count: usize,
    /// Times `t` for `times`.
    pub times: Vec<f64>,
    /// Edge counts for `steps`.
    pub steps: Vec<u64>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Geometric,
            count: 16,
            times: Vec::new(),
            steps: Vec::new(),
        }
    }
}

impl ScheduleSpec {
    pub fn build(&self, n: u32) -> Result<SnapshotSchedule> {
        Ok(match self.kind {
            ScheduleKind::Geometric => SnapshotSchedule::geometric(n, self.count),
            ScheduleKind::Times => {
                if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return Err(Error::Config("schedule.times must be finite and nonnegative".into()));
                }
                SnapshotSchedule::at_times(n, &self.times)
            }
            ScheduleKind::Steps => SnapshotSchedule::new(self.steps.clone(), true)
                .map_err(|e| Error::Config(format!("schedule.steps: {e}")))?,
            ScheduleKind::Termination => SnapshotSchedule::at_termination_only(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatsKind {
    /// Exact up to `exact_max_n`, sampled above.
    Auto,
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsSpec {
    pub mode: StatsKind,
    pub exact_max_n: u32,
    pub sampled_pairs: usize,
    pub codegree_pairs: usize,
}

impl Default for StatsSpec {
    fn default() -> Self {
        StatsSpec {
            mode: StatsKind::Auto,
            exact_max_n: tracker::DEFAULT_N_EXACT,
            sampled_pairs: 200_000,
            codegree_pairs: 1000,
        }
    }
}

impl StatsSpec {
    fn mode(&self, n: u32, seed: u64) -> StatsMode {
        let sampled = StatsMode::Sampled {
            pairs: self.sampled_pairs,
            seed,
        };
        match self.mode {
            StatsKind::Exact => StatsMode::Exact { max_n: self.exact_max_n },
            StatsKind::Sampled => sampled,
            StatsKind::Auto if n <= self.exact_max_n => StatsMode::Exact { max_n: self.exact_max_n },
            StatsKind::Auto => sampled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CensusSpec {
    /// Known names (`C4`, `Petersen`, ...) or literals `name: v=..; edges=..`.
    pub graphs: Vec<String>,
    pub timeout_secs: f64,
}

impl Default for CensusSpec {
    fn default() -> Self {
        CensusSpec {
            graphs: vec!["C4".into(), "C5".into(), "Petersen".into(), "K34".into(), "K45".into()],
            timeout_secs: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseySpec {
    pub max_n: usize,
    /// Search nodes per graph; keeps results independent of machine speed.
    pub node_budget: Option<u64>,
    /// Wall-clock cap per graph; makes results timing dependent.
    pub time_budget_secs: Option<f64>,
}

impl Default for RamseySpec {
    fn default() -> Self {
        RamseySpec {
            max_n: independence::DEFAULT_MAX_N,
            node_budget: Some(5_000_000),
            time_budget_secs: None,
        }
    }
}

impl RamseySpec {
    pub fn exact_config(&self) -> ExactConfig {
        ExactConfig {
            max_n: self.max_n,
            node_budget: self.node_budget,
            time_budget: self.time_budget_secs.map(Duration::from_secs_f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackingSpec {
    pub words: Vec<String>,
    /// Extension pattern literals with a two-vertex base, counted at the
    /// same pairs.
    pub patterns: Vec<String>,
    pub pairs: usize,
    /// Saved edge list (`u v` lines); otherwise run 0 of the sweep.
    pub edges_file: Option<PathBuf>,
    /// Stop the generated run at this time; `None` means at termination.
    pub at_t: Option<f64>,
}

impl Default for StackingSpec {
    fn default() -> Self {
        StackingSpec {
            words: vec!["XO".into(), "YO".into()],
            patterns: Vec::new(),
            pairs: 100,
            edges_file: None,
            at_t: Some(0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    /// Run index whose engine stream is corrupted.
    pub run: u64,
    /// Zero-based step whose index draw is perturbed.
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub sizes: Vec<u32>,
    pub fault: Option<FaultSpec>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            sizes: vec![16, 32, 48],
            fault: None,
        }
    }
}

/// One experiment. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub format_version: u32,
    /// If present, must match the subcommand being run.
    pub subcommand: Option<Subcommand>,
    pub n: u32,
    /// Sizes for `sweep` and `trajectory`.
    pub sweep: Vec<u32>,
    pub seeds: u64,
    pub master_seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub k_override: Option<f64>,
    pub schedule: ScheduleSpec,
    pub output: PathBuf,
    pub threads: Option<usize>,
    pub write_edges: bool,
    pub stats: StatsSpec,
    pub census: CensusSpec,
    pub ramsey: RamseySpec,
    pub stacking: StackingSpec,
    pub verify: VerifySpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            format_version: FORMAT_VERSION,
            subcommand: None,
            n: 1024,
            sweep: vec![1024, 2048, 4096],
            seeds: 5,
            master_seed: 1,
            epsilon: 0.1,
            delta: 0.01,
            k_override: None,
            schedule: ScheduleSpec::default(),
            output: PathBuf::from("out"),
            threads: None,
            write_edges: false,
            stats: StatsSpec::default(),
            census: CensusSpec::default(),
            ramsey: RamseySpec::default(),
            stacking: StackingSpec::default(),
            verify: VerifySpec::default(),
        }
    }
}

/// Sets `path` (dotted) in `v` to `raw`, read as JSON when it parses and as
/// a string otherwise.
pub fn set_dotted(v: &mut Value, path: &str, raw: &str) -> Result<()> {
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = v;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad key path {path:?}")));
    }
    for (k, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("{path}: {} is not an object", parts[..k].join("."))))?;
        if k + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| json!({}));
    }
    unreachable!("path has at least one part")
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

impl ExperimentConfig {
    /// Defaults, overlaid with `doc` (a JSON document) and then with
    /// dotted `key=value` overrides.
    pub fn resolve(doc: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut v = serde_json::to_value(ExperimentConfig::default())?;
        if let Some(doc) = doc {
            let top: Value = serde_json::from_str(doc).map_err(|e| Error::Config(format!("config JSON: {e}")))?;
            if !top.is_object() {
                return Err(Error::Config("config must be a JSON object".into()));
            }
            merge(&mut v, top);
        }
        for o in overrides {
            let (k, val) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            set_dotted(&mut v, k.trim(), val.trim())?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.format_version != FORMAT_VERSION {
            return bad(format!("format_version {} is not supported (expected {FORMAT_VERSION})", self.format_version));
        }
        if self.n < 2 || self.sweep.iter().any(|&n| n < 2) {
            return bad("graph sizes must be at least 2".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return bad(format!("epsilon must lie in (0, 1/4), got {}", self.epsilon));
        }
        if !(self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if !(self.census.timeout_secs > 0.0) {
            return bad("census.timeout_secs must be positive".into());
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ErrorParams> {
        let p = ErrorParams::new(self.epsilon, self.delta).map_err(|e| Error::Config(e.to_string()))?;
        Ok(match self.k_override {
            Some(k) => p.with_k(k),
            None => p,
        })
    }

    /// `sha256` of the canonical JSON form, without `output` and `threads`.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("output");
            o.remove("threads");
        }
        format!("{:x}", Sha256::digest(v.to_string().as_bytes()))
    }

    /// Thread count: environment override, then config, then rayon's default.
    pub fn thread_count(&self) -> Result<Option<usize>> {
        match std::env::var(THREADS_ENV) {
            Ok(s) => match s.trim().parse::<usize>() {
                Ok(t) if t > 0 => Ok(Some(t)),
                _ => Err(Error::Config(format!("{THREADS_ENV}={s:?} is not a positive integer"))),
            },
            Err(_) => Ok(self.threads),
        }
    }
}

/// Writes to a temporary sibling and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::invalid(format!("bad output path {path:?}")))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

/// Parses `u v` lines; blank lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str) -> Result<Vec<PairKey>> {
    text.lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(k, l)| {
            let mut it = l.split_whitespace().map(str::parse::<u32>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => PairKey::new(a, b),
                _ => Err(Error::Parse(format!("line {}: expected `u v`, got {l:?}", k + 1))),
            }
        })
        .collect()
}

/// Median and interquartile range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub median: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(xs: &[f64]) -> Spread {
        if xs.is_empty() {
            return Spread {
                median: f64::NAN,
                iqr: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        Spread {
            median: median(xs),
            iqr: iqr(xs),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `false` when a check failed (exit code 1).
    pub ok: bool,
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            ok: true,
            lines: Vec::new(),
            files: Vec::new(),
        }
    }
}

fn header(cfg: &ExperimentConfig, cmd: Subcommand) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("format_version".into(), json!(FORMAT_VERSION));
    m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("subcommand".into(), json!(cmd.as_str()));
    m.insert("config_hash".into(), json!(cfg.hash()));
    m
}

/// Runs `cmd` inside a pool sized by [`ExperimentConfig::thread_count`].
pub fn execute(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<Outcome> {
    if let Some(c) = cfg.subcommand.filter(|&c| c != cmd) {
        return Err(Error::Config(format!("config is for `{}`, not `{}`", c.as_str(), cmd.as_str())));
    }
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.thread_count()? {
        b = b.num_threads(t);
    }
    let pool = b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cmd {
        Subcommand::Run => cmd_run(cfg),
        Subcommand::Sweep => cmd_sweep(cfg),
        Subcommand::Census => cmd_census(cfg),
        Subcommand::Ramsey => cmd_ramsey(cfg),
        Subcommand::Trajectory => cmd_trajectory(cfg),
        Subcommand::Stacking => cmd_stacking(cfg),
        Subcommand::VerifyOracle => cmd_verify_oracle(cfg),
    })
}

struct RunOutput {
    report: TerminationReport,
    records: Vec<TrajectoryRecord>,
    store: PairStore,
}

fn one_run(n: u32, seed: u64, schedule: &SnapshotSchedule, cfg: &ExperimentConfig) -> Result<RunOutput> {
    let params = cfg.params()?;
    let mut st = ProcessState::new(n, seed)?;
    st.set_history(false);
    let mut records = Vec::new();
    let mut sink = |s: &ProcessState| -> Result<()> {
        let mode = cfg.stats.mode(n, run_seed(seed, s.steps()));
        records.push(tracker::snapshot_record(s.store(), seed, mode, cfg.stats.codegree_pairs, &params)?);
        Ok(())
    };
    let report = st.run_to_completion(schedule, &mut sink)?;
    Ok(RunOutput {
        report,
        records,
        store: st.into_store(),
    })
}

fn runs_for(n: u32, cfg: &ExperimentConfig, schedule: &SnapshotSchedule) -> Result<Vec<RunOutput>> {
    (0..cfg.seeds)
        .into_par_iter()
        .map(|k| one_run(n, run_seed(cfg.master_seed, k), schedule, cfg))
        .collect()
}

#[derive(Serialize)]
struct RunEntry {
    index: u64,
    n: u32,
    seed: u64,
    steps: u64,
    final_edges: u64,
    edge_ratio: f64,
    min_degree: u32,
    max_degree: u32,
}

fn run_entry(index: u64, r: &RunOutput) -> RunEntry {
    let d = tracker::degree_stats(&r.store);
    RunEntry {
        index,
        n: r.report.n,
        seed: r.report.seed,
        steps: r.report.steps,
        final_edges: r.report.final_edges,
        edge_ratio: r.report.final_edges as f64 / process::expected_final_edges(r.report.n),
        min_degree: d.min_y,
        max_degree: d.max_y,
    }
}

fn degree_scale(n: u32) -> f64 {
    let n = n as f64;
    (n * n.ln() / 2.0).sqrt()
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let schedule = cfg.schedule.build(cfg.n)?;
    let runs = runs_for(cfg.n, cfg, &schedule)?;
    let mut out = Outcome::new();
    let mut timing = Vec::new();
    for (k, r) in runs.iter().enumerate() {
        let path = cfg.output.join(format!("trajectory_{k:03}.csv"));
        write_csv(&path, CSV_HEADER, r.records.iter().map(TrajectoryRecord::csv_row))?;
        out.files.push(path);
        if cfg.write_edges {
            let path = cfg.output.join(format!("edges_{k:03}.txt"));
            atomic_write(&path, r.store.edge_list_string().as_bytes())?;
            out.files.push(path);
        }
        timing.push(&r.report);
    }
    let entries: Vec<RunEntry> = runs.iter().enumerate().map(|(k, r)| run_entry(k as u64, r)).collect();
    let edges: Vec<f64> = entries.iter().map(|e| e.final_edges as f64).collect();
    let ratios: Vec<f64> = entries.iter().map(|e| e.edge_ratio).collect();
    let mut s = header(cfg, Subcommand::Run);
    s.insert("n".into(), json!(cfg.n));
    s.insert("final_edges".into(), json!(median(&edges)));
    s.insert("final_edges_spread".into(), json!(Spread::of(&edges)));
    s.insert("predicted_final_edges".into(), json!(process::expected_final_edges(cfg.n)));
    s.insert("edge_ratio".into(), json!(Spread::of(&ratios)));
    s.insert("runs".into(), json!(entries));
    let path = cfg.output.join("summary.json");
    write_json(&path, &s)?;
    write_json(&cfg.output.join("timing.json"), &timing)?;
    out.files.push(path);
    out.lines.push(format!(
        "n={} runs={} median final edges={} (ratio {})",
        cfg.n,
        runs.len(),
        median(&edges),
        fmt_g9(median(&ratios))
    ));
    Ok(out)
}

pub const SWEEP_CSV_HEADER: &str =
    "n,runs,median_edges,iqr_edges,predicted_edges,median_ratio,median_min_degree,median_max_degree,degree_scale";

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::new();
    let mut rows = Vec::new();
    let mut per_n = Vec::new();
    let mut timing = Vec::new();
    for &n in &cfg.sweep {
        let runs = runs_for(n, cfg, &SnapshotSchedule::none())?;
        let entries: Vec<RunEntry> = runs.iter().enumerate().map(|(k, r)| run_entry(k as u64, r)).collect();
        let col = |f: &dyn Fn(&RunEntry) -> f64| entries.iter().map(f).collect::<Vec<f64>>();
        let edges = col(&|e| e.final_edges as f64);
        let ratio = col(&|e| e.edge_ratio);
        let mind = col(&|e| e.min_degree as f64);
        let maxd = col(&|e| e.max_degree as f64);
        rows.push(format!(
            "{n},{},{},{},{},{},{},{},{}",
            entries.len(),
            fmt_g9(median(&edges)),
            fmt_g9(iqr(&edges)),
            fmt_g9(process::expected_final_edges(n)),
            fmt_g9(median(&ratio)),
            fmt_g9(median(&mind)),
            fmt_g9(median(&maxd)),
            fmt_g9(degree_scale(n))
        ));
        out.lines.push(format!("n={n} median ratio {}", fmt_g9(median(&ratio))));
        timing.extend(runs.iter().map(|r| r.report.clone()));
        per_n.push(json!({"n": n, "edge_ratio": Spread::of(&ratio), "runs": entries}));
    }
    let path = cfg.output.join("sweep.csv");
    write_csv(&path, SWEEP_CSV_HEADER, rows)?;
    out.files.push(path);
    let mut s = header(cfg, Subcommand::Sweep);
    s.insert("sizes".into(), json!(per_n));
    let path = cfg.output.join("summary.json");
    write_json(&path, &s)?;
    write_json(&cfg.output.join("timing.json"), &timing)?;
    out.files.push(path);
    Ok(out)
}

pub const TRAJECTORY_SUMMARY_HEADER: &str =
    "n,runs,snapshots,median_abs_devQ,max_abs_devQ,median_abs_devR,median_abs_devS,frac_within_band_Q";

pub fn cmd_trajectory(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::new();
    let mut rows = Vec::new();
    for &n in &cfg.sweep {
        let schedule = cfg.schedule.build(n)?;
        let runs = runs_for(n, cfg, &schedule)?;
        let mut dq = Vec::new();
        let mut dr = Vec::new();
        let mut ds = Vec::new();
        let mut within = 0usize;
        for (k, r) in runs.iter().enumerate() {
            let path = cfg.output.join(format!("trajectory_n{n}_{k:03}.csv"));
            write_csv(&path, CSV_HEADER, r.records.iter().map(TrajectoryRecord::csv_row))?;
            out.files.push(path);
            for rec in r.records.iter().filter(|rec| rec.i > 0) {
                dq.push(rec.dev_tracking.0.abs());
                dr.push(rec.dev_tracking.1.abs());
                ds.push(rec.dev_tracking.2.abs());
                within += rec.within_band.0 as usize;
            }
        }
        let max_q = dq.iter().copied().fold(0.0, f64::max);
        rows.push(format!(
            "{n},{},{},{},{},{},{},{}",
            runs.len(),
            dq.len(),
            fmt_g9(median(&dq)),
            fmt_g9(max_q),
            fmt_g9(median(&dr)),
            fmt_g9(median(&ds)),
            fmt_g9(within as f64 / dq.len().max(1) as f64)
        ));
        out.lines.push(format!("n={n} median |Q/q-1| = {}", fmt_g9(median(&dq))));
    }
    let path = cfg.output.join("trajectory_summary.csv");
    write_csv(&path, TRAJECTORY_SUMMARY_HEADER, rows)?;
    out.files.push(path);
    let mut s = header(cfg, Subcommand::Trajectory);
    s.insert("sizes".into(), json!(cfg.sweep));
    let path = cfg.output.join("summary.json");
    write_json(&path, &s)?;
    out.files.push(path);
    Ok(out)
}

fn parse_small_graphs(specs: &[String]) -> Result<Vec<SmallGraph>> {
    specs
        .iter()
        .map(|s| s.parse::<SmallGraph>().map_err(|e| Error::Config(format!("census.graphs: {e}"))))
        .collect()
}

pub fn cmd_census(cfg: &ExperimentConfig) -> Result<Outcome> {
    let hs = parse_small_graphs(&cfg.census.graphs)?;
    let rows = census::appearance_experiment(
        cfg.n,
        cfg.master_seed,
        cfg.seeds,
        &hs,
        Duration::from_secs_f64(cfg.census.timeout_secs),
    )?;
    let mut out = Outcome::new();
    let path = cfg.output.join("census.csv");
    write_csv(&path, FREQ_CSV_HEADER, rows.iter().map(census::AppearanceRow::csv_row))?;
    out.files.push(path);
    let mut s = header(cfg, Subcommand::Census);
    s.insert("n".into(), json!(cfg.n));
    s.insert("rows".into(), json!(rows));
    let path = cfg.output.join("summary.json");
    write_json(&path, &s)?;
    out.files.push(path);
    for r in &rows {
        out.lines.push(format!(
            "{} m2={} freq={} ({}/{}, {} indeterminate)",
            r.h,
            fmt_g9(r.m2),
            fmt_g9(r.freq),
            r.hits,
            r.runs,
            r.indeterminate
        ));
    }
    Ok(out)
}

pub const RAMSEY_CSV_HEADER: &str = "n,seed,alpha,lower,upper,ratio_lo,ratio_hi,rho,nodes,witness";

/// Exact (or bounded) independence numbers of final graphs, with a
/// re-verified certificate for every exact result.
pub fn cmd_ramsey(cfg: &ExperimentConfig) -> Result<Outcome> {
    let ecfg = cfg.ramsey.exact_config();
    if cfg.n as usize > ecfg.max_n {
        return Err(Error::Config(format!("n = {} exceeds ramsey.max_n = {}", cfg.n, ecfg.max_n)));
    }
    let results: Vec<(u64, BitGraph, independence::MisResult)> = (0..cfg.seeds)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let seed = run_seed(cfg.master_seed, k);
            let store = process::run_seeded(cfg.n, seed)?;
            let g = BitGraph::from_edges(cfg.n as usize, store.edges())?;
            let mis = independence::exact_alpha(&g, &ecfg)?;
            Ok((seed, g, mis))
        })
        .collect::<Result<_>>()?;
    let mut out = Outcome::new();
    let mut rows = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (k, (seed, g, mis)) in results.iter().enumerate() {
        let (rl, rh) = mis.ratio_interval(g.n());
        lo.push(rl);
        hi.push(rh);
        let mut verdict = "none";
        let mut rho = f64::NAN;
        if mis.alpha.is_some() {
            let w = independence::ramsey_witness(g, *seed, mis)?;
            rho = w.rho;
            let path = cfg.output.join(format!("witness_{k:03}.json"));
            write_json(&path, &w)?;
            let back: RamseyWitness = serde_json::from_str(&fs::read_to_string(&path)?)?;
            let chk = independence::verify_witness(&back, &ecfg);
            verdict = if chk.valid { "verified" } else { "invalid" };
            if !chk.valid {
                out.ok = false;
                out.lines.push(format!("witness {k} failed: {}", chk.problems.join("; ")));
            }
            out.files.push(path);
        }
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{}",
            g.n(),
            seed,
            mis.alpha.map_or(String::new(), |a| a.to_string()),
            mis.lower,
            mis.upper,
            fmt_g9(rl),
            fmt_g9(rh),
            fmt_g9(rho),
            mis.nodes,
            verdict
        ));
    }
    let path = cfg.output.join("ramsey.csv");
    write_csv(&path, RAMSEY_CSV_HEADER, rows)?;
    out.files.push(path);
    let mut s = header(cfg, Subcommand::Ramsey);
    s.insert("n".into(), json!(cfg.n));
    s.insert("exact".into(), json!(results.iter().filter(|r| r.2.alpha.is_some()).count()));
    s.insert("ratio_lower".into(), json!(Spread::of(&lo)));
    s.insert("ratio_upper".into(), json!(Spread::of(&hi)));
    let path = cfg.output.join("summary.json");
    write_json(&path, &s)?;
    out.files.push(path);
    out.lines.push(format!(
        "n={} median alpha ratio in [{}, {}]",
        cfg.n,
        fmt_g9(median(&lo)),
        fmt_g9(median(&hi))
    ));
    Ok(out)
}

/// The graph used by the stacking command.
fn stacking_store(cfg: &ExperimentConfig) -> Result<PairStore> {
    if let Some(path) = &cfg.stacking.edges_file {
        let text = fs::read_to_string(path)?;
        let edges = parse_edge_list(&text)?;
        return PairStore::from_edges(cfg.n, &edges);
    }
    let mut st = ProcessState::new(cfg.n, run_seed(cfg.master_seed, 0))?;
    st.set_history(false);
    let stop = cfg
        .stacking
        .at_t
        .map_or(u64::MAX, |t| (t * (cfg.n as f64).powf(1.5)).ceil() as u64);
    while st.steps() < stop && st.store().open_count() > 0 {
        st.step()?;
    }
    Ok(st.into_store())
}

pub const STACKING_CSV_HEADER: &str = "word,u,v,count,tracking,X_uv,Y_uv,Y_vu";
pub const PATTERN_CSV_HEADER: &str = "pattern,u,v,count,scaling";

/// Stacking counts at sampled ordered pairs, cross-checked against the
/// codegree operation for the one-symbol words `XO` and `YO`.
pub fn cmd_stacking(cfg: &ExperimentConfig) -> Result<Outcome> {
    let words: Vec<StackingWord> = cfg
        .stacking
        .words
        .iter()
        .map(|w| w.parse().map_err(|e| Error::Config(format!("stacking.words: {e}"))))
        .collect::<Result<_>>()?;
    let patterns: Vec<ExtensionPattern> = cfg
        .stacking
        .patterns
        .iter()
        .map(|p| p.parse().map_err(|e| Error::Config(format!("stacking.patterns: {e}"))))
        .collect::<Result<_>>()?;
    if let Some(p) = patterns.iter().find(|p| p.base().len() != 2) {
        return Err(Error::Config(format!("pattern {p} needs a two-vertex base")));
    }
    let store = stacking_store(cfg)?;
    let n = store.n();
    let ctx = ScalingContext::new(n as f64, store.edge_count().max(1) as f64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(cfg.master_seed, u64::MAX));
    let pairs: Vec<(u32, u32)> = (0..cfg.stacking.pairs)
        .map(|_| {
            let u = rng.gen_range(0..n);
            (u, (u + rng.gen_range(1..n)) % n)
        })
        .collect();
    let mut out = Outcome::new();
    let mut rows = Vec::new();
    let mut mismatches = 0usize;
    for w in &words {
        let label = w.to_string();
        for &(u, v) in &pairs {
            let c = w.count(&store, u, v)?;
            let tv = w.tracking_value(&store, u, v, &ctx)?;
            let (x, yuv, yvu) = codegree(&store, u, v)?;
            let expect = match label.as_str() {
                "XO" => Some(x),
                "YO" => Some(yvu),
                _ => None,
            };
            if expect.is_some_and(|e| e != c) {
                mismatches += 1;
            }
            rows.push(format!("{label},{u},{v},{c},{},{x},{yuv},{yvu}", fmt_g9(tv)));
        }
    }
    let path = cfg.output.join("stacking.csv");
    write_csv(&path, STACKING_CSV_HEADER, rows)?;
    out.files.push(path);
    if !patterns.is_empty() {
        let mut prow = Vec::new();
        for (k, p) in patterns.iter().enumerate() {
            let full = p.full_mask();
            let base = p.base_mask();
            let sc = p.scaling(base, full, &ctx)?;
            for &(u, v) in &pairs {
                let c = p.count_embeddings(&store, &[u, v])?;
                prow.push(format!("{k},{u},{v},{c},{}", fmt_g9(sc)));
            }
        }
        let path = cfg.output.join("patterns.csv");
        write_csv(&path, PATTERN_CSV_HEADER, prow)?;
        out.files.push(path);
    }
    let mut s = header(cfg, Subcommand::Stacking);
    s.insert("n".into(), json!(n));
    s.insert("edges".into(), json!(store.edge_count()));
    s.insert("t".into(), json!(ctx.t));
    s.insert("pairs".into(), json!(pairs.len()));
    s.insert("codegree_mismatches".into(), json!(mismatches));
    let path = cfg.output.join("summary.json");
    write_json(&path, &s)?;
    out.files.push(path);
    out.ok = mismatches == 0;
    out.lines.push(format!("{} words x {} pairs, {mismatches} codegree mismatches", words.len(), pairs.len()));
    Ok(out)
}

/// An index stream that perturbs one draw, to exercise mismatch reporting.
pub struct FaultyStream<S> {
    inner: S,
    draws: u64,
    at: Option<u64>,
}

impl<S> FaultyStream<S> {
    pub fn new(inner: S, at: Option<u64>) -> Self {
        FaultyStream { inner, draws: 0, at }
    }
}

impl<S: IndexStream> IndexStream for FaultyStream<S> {
    fn next_index(&mut self, bound: u64) -> u64 {
        let x = self.inner.next_index(bound);
        let k = self.draws;
        self.draws += 1;
        if self.at == Some(k) && bound > 1 {
            (x + 1) % bound
        } else {
            x
        }
    }
}

/// First disagreement found by an oracle suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub suite: String,
    pub n: u32,
    pub seed: u64,
    pub step: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: u64,
    pub mismatches: u64,
    pub first: Option<Mismatch>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.into(),
            cases: 0,
            mismatches: 0,
            first: None,
        }
    }

    fn check(&mut self, ok: bool, m: impl FnOnce() -> Mismatch) {
        self.cases += 1;
        if !ok {
            self.mismatches += 1;
            if self.first.is_none() {
                self.first = Some(m());
            }
        }
    }
}

/// Engine (ranked discipline) against the full-scan oracle on a shared
/// stream; `fault` corrupts the engine's copy at one draw.
pub fn check_process_equivalence(n: u32, seed: u64, fault: Option<u64>) -> Result<std::result::Result<Vec<PairKey>, Mismatch>> {
    let stream = rng_from_seed(seed);
    let mut engine = ProcessState::with_stream(n, seed, FaultyStream::new(stream.clone(), fault), Discipline::Ranked)?;
    engine.set_history(true);
    engine.run_to_completion(&SnapshotSchedule::none(), &mut process::NoSink)?;
    let got = engine.history().expect("history enabled").to_vec();
    let mut oracle_stream: ProcessRng = stream;
    let want = oracle::naive_process(n, &mut oracle_stream);
    let first_diff = got.iter().zip(&want).position(|(a, b)| a != b);
    let step = match first_diff {
        Some(s) => Some(s),
        None if got.len() != want.len() => Some(got.len().min(want.len())),
        None => None,
    };
    Ok(match step {
        None => Ok(got),
        Some(s) => Err(Mismatch {
            suite: "process".into(),
            n,
            seed,
            step: s as u64,
            detail: format!(
                "engine chose {:?}, oracle chose {:?}",
                got.get(s).map(|e| (e.u, e.v)),
                want.get(s).map(|e| (e.u, e.v))
            ),
        }),
    })
}

/// Runs every oracle-equivalence suite for the sizes in `cfg.verify`.
pub fn verify_oracle(cfg: &ExperimentConfig) -> Result<Vec<SuiteReport>> {
    if let Some(&n) = cfg.verify.sizes.iter().find(|&&n| n > VERIFY_MAX_N || n < 2) {
        return Err(Error::Config(format!("verify sizes must lie in 2..={VERIFY_MAX_N}, got {n}")));
    }
    let jobs: Vec<(u32, u64)> = cfg
        .verify
        .sizes
        .iter()
        .flat_map(|&n| (0..cfg.seeds).map(move |k| (n, k)))
        .collect();
    let fault = cfg.verify.fault;
    let per_job: Vec<Vec<SuiteReport>> = jobs
        .par_iter()
        .map(|&(n, k)| -> Result<Vec<SuiteReport>> {
            let seed = run_seed(cfg.master_seed, k);
            let inject = fault.filter(|f| f.run == k).map(|f| f.step);
            let mut proc_r = SuiteReport::new("process");
            let mut max_r = SuiteReport::new("maximality");
            let mut stat_r = SuiteReport::new("statuses");
            let mut glob_r = SuiteReport::new("global-stats");
            let mut emb_r = SuiteReport::new("embeddings");
            let mut alpha_r = SuiteReport::new("alpha");
            let edges = match check_process_equivalence(n, seed, inject)? {
                Ok(e) => {
                    proc_r.check(true, || unreachable!());
                    e
                }
                Err(m) => {
                    proc_r.check(false, || m);
                    return Ok(vec![proc_r]);
                }
            };
            let mm = |suite: &str, step: usize, detail: String| Mismatch {
                suite: suite.into(),
                n,
                seed,
                step: step as u64,
                detail,
            };
            max_r.check(oracle::is_maximal_triangle_free(n, &edges), || {
                mm("maximality", edges.len(), "final graph is not maximal triangle-free".into())
            });
            // Intermediate states along the run.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
            for frac in [0.25, 0.5, 0.75, 1.0] {
                let step = ((edges.len() as f64) * frac) as usize;
                let prefix = &edges[..step];
                let store = PairStore::from_edges(n, prefix)?;
                let brute = oracle::brute_statuses(n, prefix);
                let fast: Vec<_> = (0..n)
                    .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                    .map(|(u, v)| store.status_unchecked(u, v))
                    .collect();
                stat_r.check(fast == brute, || mm("statuses", step, "pair statuses differ".into()));
                if n <= 32 {
                    let gs = tracker::global_stats(&store, StatsMode::default())?;
                    let (q, r, s) = oracle::brute_global_counts(n, prefix);
                    stat_eq(&mut glob_r, (gs.q, gs.r, gs.s), (q, r, s), || mm("global-stats", step, format!("fast {:?} brute {:?}", (gs.q, gs.r, gs.s), (q, r, s))));
                }
                if n <= 16 {
                    for _ in 0..4 {
                        let p = random_pattern(&mut rng);
                        let phi: Vec<u32> = {
                            let mut pool: Vec<u32> = (0..n).collect();
                            for i in 0..p.base().len() {
                                let j = rng.gen_range(i..pool.len());
                                pool.swap(i, j);
                            }
                            pool[..p.base().len()].to_vec()
                        };
                        let fast = p.count_embeddings(&store, &phi)?;
                        let slow = oracle::brute_embeddings(n, prefix, p.vertex_count(), p.base(), &phi, p.edge_pairs(), p.open_pairs());
                        emb_r.check(fast == slow, || mm("embeddings", step, format!("{p} at {phi:?}: {fast} vs {slow}")));
                    }
                }
            }
            if n <= 20 {
                let g = BitGraph::from_edges(n as usize, &edges)?;
                let a = independence::exact_alpha(&g, &ExactConfig::default())?;
                let b = oracle::brute_alpha(n, &edges);
                alpha_r.check(a.alpha == Some(b), || mm("alpha", edges.len(), format!("{:?} vs {b}", a.alpha)));
            }
            Ok(vec![proc_r, max_r, stat_r, glob_r, emb_r, alpha_r])
        })
        .collect::<Result<_>>()?;
    let mut merged: Vec<SuiteReport> = Vec::new();
    for reports in per_job {
        for r in reports {
            match merged.iter_mut().find(|m| m.suite == r.suite) {
                Some(m) => {
                    m.cases += r.cases;
                    m.mismatches += r.mismatches;
                    if m.first.is_none() {
                        m.first = r.first;
                    }
                }
                None => merged.push(r),
            }
        }
    }
    Ok(merged)
}

fn stat_eq(r: &mut SuiteReport, fast: (f64, f64, f64), brute: (u64, u64, u64), m: impl FnOnce() -> Mismatch) {
    let ok = fast.0 == brute.0 as f64 && fast.1 == brute.1 as f64 && fast.2 == brute.2 as f64;
    r.check(ok, m);
}

/// A pattern with a 0..=2 vertex base and up to 3 further vertices.
fn random_pattern(rng: &mut ChaCha8Rng) -> ExtensionPattern {
    loop {
        let b = rng.gen_range(0..=2usize);
        let k = b + rng.gen_range(1..=3usize);
        let mut edges = Vec::new();
        let mut opens = Vec::new();
        for x in 0..k {
            for y in x + 1..k {
                if y < b {
                    continue;
                }
                match rng.gen_range(0..3) {
                    0 => edges.push((x, y)),
                    1 => opens.push((x, y)),
                    _ => {}
                }
            }
        }
        if let Ok(p) = ExtensionPattern::new(k, (0..b).collect(), edges, opens) {
            return p;
        }
    }
}

pub fn cmd_verify_oracle(cfg: &ExperimentConfig) -> Result<Outcome> {
    let reports = verify_oracle(cfg)?;
    let mut out = Outcome::new();
    for r in &reports {
        let status = if r.mismatches == 0 { "PASS" } else { "FAIL" };
        out.lines.push(format!("{status} {}: {} cases, {} mismatches", r.suite, r.cases, r.mismatches));
        if let Some(m) = &r.first {
            out.ok = false;
            out.lines.push(format!(
                "  repro: suite={} n={} seed={} step={} ({})",
                m.suite, m.n, m.seed, m.step, m.detail
            ));
        }
    }
    let mut s = header(cfg, Subcommand::VerifyOracle);
    s.insert("suites".into(), json!(reports));
    s.insert("pass".into(), json!(out.ok));
    let path = cfg.output.join("verify_report.json");
    write_json(&path, &s)?;
    out.files.push(path);
    Ok(out)
}
