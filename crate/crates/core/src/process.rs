//! Driving the triangle-free process, its Erdős–Rényi baseline, and the
//! rejection-coupled sampler.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pair_count, OpenSampler, PairKey, PairStatus, PairStore, RankedOpenIndex};
use crate::rng::{rng_from_seed, IndexStream, ProcessRng};

/// History is kept by default only up to this many vertices.
pub const HISTORY_DEFAULT_MAX_N: u32 = 4096;

/// How the next open pair is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Discipline {
    /// Uniform index into the lazy candidate list (canonical, amortized O(1)).
    #[default]
    Lazy,
    /// Uniform rank into the canonically ordered open set (O(log N)); the
    /// addressing used for oracle equivalence.
    Ranked,
}

#[derive(Debug, Clone)]
enum Selector {
    Lazy(OpenSampler),
    Ranked(RankedOpenIndex),
}

/// One run of the process: pair store, step counter and random stream.
#[derive(Debug, Clone)]
pub struct ProcessState<R = ProcessRng> {
    store: PairStore,
    rng: R,
    seed: u64,
    selector: Selector,
    history: Option<Vec<PairKey>>,
    scratch: Vec<PairKey>,
}

impl ProcessState<ProcessRng> {
    /// Fresh run on `n` vertices seeded with `seed` (lazy discipline).
    pub fn new(n: u32, seed: u64) -> Result<Self> {
        Self::with_stream(n, seed, rng_from_seed(seed), Discipline::Lazy)
    }
}

impl<R: IndexStream> ProcessState<R> {
    /// Fresh run drawing indices from `stream`. `seed` is recorded only.
    pub fn with_stream(n: u32, seed: u64, stream: R, discipline: Discipline) -> Result<Self> {
        let store = PairStore::new_empty(n)?;
        let selector = match discipline {
            Discipline::Lazy => Selector::Lazy(OpenSampler::new(&store)),
            Discipline::Ranked => Selector::Ranked(RankedOpenIndex::new(&store)),
        };
        Ok(ProcessState {
            history: (n <= HISTORY_DEFAULT_MAX_N).then(Vec::new),
            store,
            rng: stream,
            seed,
            selector,
            scratch: Vec::new(),
        })
    }

    pub fn set_history(&mut self, on: bool) {
        match (on, self.history.is_some()) {
            (true, false) => self.history = Some(self.store.edges().to_vec()),
            (false, true) => self.history = None,
            _ => {}
        }
    }

    /// Selected pairs in order, when history is on.
    pub fn history(&self) -> Option<&[PairKey]> {
        self.history.as_deref()
    }

    pub fn store(&self) -> &PairStore {
        &self.store
    }

    pub fn into_store(self) -> PairStore {
        self.store
    }

    /// Steps taken so far (= edges added).
    pub fn steps(&self) -> u64 {
        self.store.edge_count()
    }

    pub fn n(&self) -> u32 {
        self.store.n()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }

    /// Chooses the next pair without adding it.
    fn choose(&mut self) -> Result<PairKey> {
        if self.store.open_count() == 0 {
            return Err(Error::Terminated);
        }
        match &mut self.selector {
            Selector::Lazy(s) => s.sample(&self.store, &mut self.rng),
            Selector::Ranked(idx) => {
                let rank = self.rng.next_index(idx.open_count());
                idx.select_pair(rank, self.store.n())
            }
        }
    }

    /// Adds `e` (which must be open) as the next edge.
    pub fn apply(&mut self, e: PairKey) -> Result<()> {
        self.store.add_edge_into(e, &mut self.scratch)?;
        if let Selector::Ranked(idx) = &mut self.selector {
            let n = self.store.n();
            idx.remove(e.index(n));
            for c in &self.scratch {
                idx.remove(c.index(n));
            }
        }
        if let Some(h) = &mut self.history {
            h.push(e);
        }
        Ok(())
    }

    /// Adds one uniformly random open pair.
    pub fn step(&mut self) -> Result<PairKey> {
        let e = self.choose()?;
        self.apply(e)?;
        Ok(e)
    }

    /// Runs to termination, offering each scheduled step to `sink`.
    pub fn run_to_completion<S: SnapshotSink<R> + ?Sized>(
        &mut self,
        schedule: &SnapshotSchedule,
        sink: &mut S,
    ) -> Result<TerminationReport> {
        let start = Instant::now();
        let mut snapshots = 0u64;
        let mut next = schedule.steps.partition_point(|&s| s < self.steps());
        let emit = |state: &Self, snapshots: &mut u64, sink: &mut S| -> Result<()> {
            sink.record(state).map_err(|e| Error::Aborted {
                steps: state.steps(),
                reason: format!("snapshot sink failed: {e}"),
            })?;
            *snapshots += 1;
            Ok(())
        };
        loop {
            while next < schedule.steps.len() && schedule.steps[next] == self.steps() {
                emit(self, &mut snapshots, sink)?;
                next += 1;
            }
            if self.store.open_count() == 0 {
                break;
            }
            self.step()?;
        }
        let last_scheduled = next > 0 && schedule.steps[next - 1] == self.steps();
        if schedule.at_termination && !last_scheduled {
            emit(self, &mut snapshots, sink)?;
        }
        Ok(TerminationReport {
            n: self.n(),
            seed: self.seed,
            steps: self.steps(),
            final_edges: self.store.edge_count(),
            runtime_ms: start.elapsed().as_millis() as u64,
            rejected: None,
            snapshots,
        })
    }
}

/// Receives the process state at scheduled steps.
pub trait SnapshotSink<R = ProcessRng> {
    fn record(&mut self, state: &ProcessState<R>) -> Result<()>;
}

/// A sink that discards snapshots.
pub struct NoSink;

impl<R> SnapshotSink<R> for NoSink {
    fn record(&mut self, _: &ProcessState<R>) -> Result<()> {
        Ok(())
    }
}

impl<R, F: FnMut(&ProcessState<R>) -> Result<()>> SnapshotSink<R> for F {
    fn record(&mut self, state: &ProcessState<R>) -> Result<()> {
        self(state)
    }
}

/// Steps at which statistics are taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotSchedule {
    steps: Vec<u64>,
    at_termination: bool,
}

impl SnapshotSchedule {
    pub fn new(steps: Vec<u64>, at_termination: bool) -> Result<Self> {
        if steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("snapshot steps must be strictly increasing"));
        }
        Ok(SnapshotSchedule {
            steps,
            at_termination,
        })
    }

    pub fn none() -> Self {
        SnapshotSchedule {
            steps: Vec::new(),
            at_termination: false,
        }
    }

    pub fn at_termination_only() -> Self {
        SnapshotSchedule {
            steps: Vec::new(),
            at_termination: true,
        }
    }

    /// Step 0, `count` geometrically spaced steps from `⌈n^{5/4}⌉` up to a
    /// generous estimate of the termination step, and the termination step.
    /// Scheduled steps past the actual termination are never reached.
    pub fn geometric(n: u32, count: usize) -> Self {
        let nf = n as f64;
        let lo = nf.powf(1.25).ceil().max(1.0);
        let hi = (1.5 * expected_final_edges(n)).max(lo + 1.0);
        let mut steps = vec![0u64];
        if count > 0 {
            let ratio = (hi / lo).powf(1.0 / (count.max(2) - 1) as f64);
            for k in 0..count {
                let s = (lo * ratio.powi(k as i32)).round() as u64;
                if s > *steps.last().unwrap() {
                    steps.push(s);
                }
            }
        }
        SnapshotSchedule {
            steps,
            at_termination: true,
        }
    }

    /// Steps at the given times `t` (`i = ⌈t·n^{3/2}⌉`), plus termination.
    pub fn at_times(n: u32, times: &[f64]) -> Self {
        let scale = (n as f64).powf(1.5);
        let mut steps: Vec<u64> = times.iter().map(|t| (t * scale).ceil() as u64).collect();
        steps.sort_unstable();
        steps.dedup();
        SnapshotSchedule {
            steps,
            at_termination: true,
        }
    }

    pub fn steps(&self) -> &[u64] {
        &self.steps
    }

    pub fn at_termination(&self) -> bool {
        self.at_termination
    }
}

/// `(1/(2√2))·√(ln n)·n^{3/2}`, the predicted final edge count.
pub fn expected_final_edges(n: u32) -> f64 {
    let nf = n as f64;
    nf.ln().sqrt() * nf.powf(1.5) / (2.0 * std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminationReport {
    pub n: u32,
    pub seed: u64,
    pub steps: u64,
    pub final_edges: u64,
    pub runtime_ms: u64,
    /// Rejected proposals (coupled mode only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rejected: Option<u64>,
    #[serde(skip)]
    pub snapshots: u64,
}

/// Runs the process on `n` vertices with `seed` to termination.
pub fn run_seeded(n: u32, seed: u64) -> Result<PairStore> {
    let mut st = ProcessState::new(n, seed)?;
    st.set_history(false);
    st.run_to_completion(&SnapshotSchedule::none(), &mut NoSink)?;
    Ok(st.into_store())
}

/// A graph produced by the Erdős–Rényi process.
#[derive(Debug, Clone)]
pub struct ErGraph {
    pub n: u32,
    pub edges: Vec<PairKey>,
    pub triangles: u64,
}

/// `j` uniformly random distinct pairs on `n` vertices (triangles allowed),
/// with the triangle count of the result.
pub fn er_process<G: Rng + ?Sized>(n: u32, j: u64, rng: &mut G) -> Result<ErGraph> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2, got {n}")));
    }
    let total = pair_count(n);
    if j > total {
        return Err(Error::invalid(format!("j = {j} exceeds {total} pairs")));
    }
    let mut chosen = vec![false; total as usize];
    let mut edges = Vec::with_capacity(j as usize);
    if j * 2 <= total {
        while (edges.len() as u64) < j {
            let idx = rng.gen_range(0..total);
            if !chosen[idx as usize] {
                chosen[idx as usize] = true;
                edges.push(PairKey::from_index(idx, n));
            }
        }
    } else {
        // Dense case: shuffle all pairs and keep a prefix.
        let mut all: Vec<u64> = (0..total).collect();
        all.partial_shuffle(rng, j as usize);
        edges.extend(all[..j as usize].iter().map(|&i| PairKey::from_index(i, n)));
    }
    let triangles = count_triangles(n, &edges);
    Ok(ErGraph { n, edges, triangles })
}

/// Number of triangles in a simple graph.
pub fn count_triangles(n: u32, edges: &[PairKey]) -> u64 {
    let mut adj = vec![Vec::new(); n as usize];
    for e in edges {
        adj[e.u as usize].push(e.v);
        adj[e.v as usize].push(e.u);
    }
    for l in &mut adj {
        l.sort_unstable();
    }
    let mut count = 0;
    for e in edges {
        // Common neighbours above v, so each triangle is counted once.
        let (a, b) = (&adj[e.u as usize], &adj[e.v as usize]);
        let (mut i, mut k) = (a.partition_point(|&x| x <= e.v), b.partition_point(|&x| x <= e.v));
        while i < a.len() && k < b.len() {
            match a[i].cmp(&b[k]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => k += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    k += 1;
                }
            }
        }
    }
    count
}

/// Outcome of the rejection-coupled sampler.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub store: PairStore,
    /// Proposals that were closed when drawn.
    pub rejected: u64,
}

/// Proposes every pair once, in uniformly random order, rejecting pairs that
/// are closed when proposed. The accepted sequence is distributed as the
/// triangle-free process. Proposals after termination are all closed and are
/// counted without being drawn.
pub fn coupled_run<G: Rng + ?Sized>(n: u32, rng: &mut G) -> Result<CoupledRun> {
    let mut store = PairStore::new_empty(n)?;
    let total = pair_count(n);
    let mut order: Vec<u32> = (0..total as u32).collect();
    let mut rejected = 0u64;
    let mut proposed = 0u64;
    let mut scratch = Vec::new();
    // Incremental Fisher–Yates: position k receives a uniform never-proposed pair.
    for k in 0..order.len() {
        if store.open_count() == 0 {
            break;
        }
        let pick = rng.gen_range(k..order.len());
        order.swap(k, pick);
        proposed += 1;
        let idx = order[k] as u64;
        match store.status_at(idx) {
            PairStatus::Open => store.add_edge_into(PairKey::from_index(idx, n), &mut scratch)?,
            PairStatus::Closed => rejected += 1,
            PairStatus::Edge => unreachable!("never-proposed pair cannot be an edge"),
        }
    }
    rejected += total - proposed;
    Ok(CoupledRun { store, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::rng::rng_from_seed;

    #[test]
    fn two_vertices() {
        let mut st = ProcessState::new(2, 1).unwrap();
        assert_eq!(st.step().unwrap(), PairKey { u: 0, v: 1 });
        assert!(matches!(st.step(), Err(Error::Terminated)));
    }

    #[test]
    fn three_vertices_two_steps() {
        for seed in 0..50 {
            let mut st = ProcessState::new(3, seed).unwrap();
            st.step().unwrap();
            st.step().unwrap();
            assert!(matches!(st.step(), Err(Error::Terminated)));
            assert_eq!(st.steps(), 2);
            let mut deg: Vec<u32> = (0..3).map(|v| st.store().degree(v)).collect();
            deg.sort_unstable();
            assert_eq!(deg, vec![1, 1, 2]);
        }
    }

    #[test]
    fn run_report_small() {
        for (n, edges) in [(2, 1), (3, 2)] {
            let mut st = ProcessState::new(n, 9).unwrap();
            let rep = st.run_to_completion(&SnapshotSchedule::none(), &mut NoSink).unwrap();
            assert_eq!(rep.final_edges, edges);
            assert_eq!(rep.steps, edges);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = run_seeded(64, 1234).unwrap();
        let b = run_seeded(64, 1234).unwrap();
        assert_eq!(a.edges(), b.edges());
        let c = run_seeded(64, 1235).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn final_graph_is_maximal() {
        for seed in 0..3 {
            let s = run_seeded(1024, seed).unwrap();
            assert!(oracle::is_maximal_triangle_free(1024, s.edges()));
        }
    }

    #[test]
    fn open_count_drops_by_at_least_one_pair_per_step() {
        let mut st = ProcessState::new(200, 77).unwrap();
        let mut prev = 2 * st.store().open_count();
        while st.step().is_ok() {
            let q = 2 * st.store().open_count();
            assert!(prev - q >= 2);
            prev = q;
        }
    }

    #[test]
    fn schedule_hits_steps_and_termination() {
        let mut seen = Vec::new();
        let sched = SnapshotSchedule::new(vec![0, 5, 10, 1_000_000], true).unwrap();
        let mut st = ProcessState::new(40, 3).unwrap();
        let mut sink = |s: &ProcessState| {
            seen.push(s.steps());
            Ok(())
        };
        let rep = st.run_to_completion(&sched, &mut sink).unwrap();
        assert_eq!(seen, vec![0, 5, 10, rep.steps]);
        assert_eq!(rep.snapshots, 4);
        assert!(SnapshotSchedule::new(vec![3, 3], false).is_err());
    }

    #[test]
    fn failing_sink_aborts_with_partial_steps() {
        let sched = SnapshotSchedule::new(vec![0, 20], true).unwrap();
        let mut st = ProcessState::new(40, 3).unwrap();
        let mut sink = |s: &ProcessState| {
            if s.steps() == 20 {
                Err(Error::Io(std::io::Error::other("disk full")))
            } else {
                Ok(())
            }
        };
        match st.run_to_completion(&sched, &mut sink) {
            Err(Error::Aborted { steps, .. }) => assert_eq!(steps, 20),
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn geometric_schedule_shape() {
        let s = SnapshotSchedule::geometric(1024, 128);
        assert_eq!(s.steps()[0], 0);
        assert_eq!(s.steps()[1], (1024f64).powf(1.25).ceil() as u64);
        assert!(s.steps().windows(2).all(|w| w[0] < w[1]));
        assert!(s.at_termination());
    }

    #[test]
    fn er_extremes() {
        let mut rng = rng_from_seed(4);
        let g = er_process(10, 0, &mut rng).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.triangles, 0);
        let g = er_process(10, 45, &mut rng).unwrap();
        assert_eq!(g.triangles, 120);
        assert!(er_process(10, 46, &mut rng).is_err());
    }

    #[test]
    fn er_edges_distinct() {
        let mut rng = rng_from_seed(5);
        for j in [0, 10, 100, 400, 1000] {
            let g = er_process(50, j, &mut rng).unwrap();
            let set: std::collections::HashSet<_> = g.edges.iter().collect();
            assert_eq!(set.len() as u64, j);
            assert_eq!(g.triangles, oracle::brute_triangles(50, &g.edges));
        }
    }

    #[test]
    fn er_triangle_mean_matches_binomial_model() {
        let n = 1024u32;
        let j = (n as f64).powf(1.25).round() as u64;
        let p0 = 2.0 * j as f64 / (n as f64 * n as f64);
        let nf = n as f64;
        let mean_model = p0.powi(3) * nf * (nf - 1.0) * (nf - 2.0) / 6.0;
        let runs = 50;
        let mut rng = rng_from_seed(2718);
        let total: u64 = (0..runs).map(|_| er_process(n, j, &mut rng).unwrap().triangles).sum();
        let mean = total as f64 / runs as f64;
        let sigma = (mean_model / runs as f64).sqrt();
        assert!((mean - mean_model).abs() <= 3.0 * sigma, "mean {mean} vs {mean_model}");
    }

    #[test]
    fn coupled_small() {
        for seed in 0..30 {
            let mut rng = rng_from_seed(seed);
            let c = coupled_run(3, &mut rng).unwrap();
            assert_eq!(c.rejected, 1);
            assert_eq!(c.store.edge_count(), 2);
            let c = coupled_run(2, &mut rng).unwrap();
            assert_eq!(c.rejected, 0);
        }
    }

    #[test]
    fn coupled_output_is_maximal() {
        let mut rng = rng_from_seed(6);
        let c = coupled_run(128, &mut rng).unwrap();
        assert!(oracle::is_maximal_triangle_free(128, c.store.edges()));
        assert_eq!(c.rejected + c.store.edge_count(), pair_count(128));
    }
}
