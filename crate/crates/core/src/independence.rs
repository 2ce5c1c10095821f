//! Independence numbers of final graphs and the Ramsey lower-bound
//! certificates they imply.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{iter_bits, BitGraph};

pub const DEFAULT_MAX_N: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MisMethod {
    ExactBb,
    Greedy,
    DegreeBound,
}

/// `alpha` is set only when `lower == upper` is certified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisResult {
    pub alpha: Option<u32>,
    pub lower: u32,
    pub upper: u32,
    pub witness: Vec<usize>,
    pub method: MisMethod,
    pub nodes: u64,
}

impl MisResult {
    /// `alpha / √(2 n ln n)` as an interval over `[lower, upper]`.
    pub fn ratio_interval(&self, n: usize) -> (f64, f64) {
        (alpha_ratio(n, self.lower as f64), alpha_ratio(n, self.upper as f64))
    }
}

pub fn alpha_ratio(n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    alpha / (2.0 * n * n.ln()).sqrt()
}

/// `n − ⌈m/Δ⌉`: every edge needs an endpoint outside the set and each
/// vertex covers at most `Δ` edges.
fn cover_upper(g: &BitGraph) -> u32 {
    let m = g.edge_count();
    let max_deg = (0..g.n()).map(|x| g.degree(x)).max().unwrap_or(0);
    if m == 0 {
        g.n() as u32
    } else {
        (g.n() - m.div_ceil(max_deg)) as u32
    }
}

fn greedy_once<R: Rng + ?Sized>(g: &BitGraph, rng: Option<&mut R>) -> Vec<usize> {
    let mut alive = vec![0u64; g.words()];
    for x in 0..g.n() {
        alive[x / 64] |= 1 << (x % 64);
    }
    let mut order: Vec<usize> = (0..g.n()).collect();
    if let Some(rng) = rng {
        order.shuffle(rng);
    }
    let mut set = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for &x in &order {
            if alive[x / 64] >> (x % 64) & 1 == 0 {
                continue;
            }
            let d = deg_in(g, x, &alive);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, x));
            }
        }
        let Some((_, v)) = best else { break };
        set.push(v);
        alive[v / 64] &= !(1 << (v % 64));
        for (a, r) in alive.iter_mut().zip(g.row(v)) {
            *a &= !r;
        }
    }
    set.sort_unstable();
    set
}

fn deg_in(g: &BitGraph, x: usize, set: &[u64]) -> usize {
    g.row(x).iter().zip(set).map(|(r, s)| (r & s).count_ones() as usize).sum()
}

/// Best of `restarts` randomized min-degree greedy runs.
pub fn greedy_mis<R: Rng + ?Sized>(g: &BitGraph, rng: &mut R, restarts: usize) -> MisResult {
    let mut best: Vec<usize> = Vec::new();
    for _ in 0..restarts.max(1) {
        let s = greedy_once(g, Some(&mut *rng));
        if s.len() > best.len() || (best.is_empty() && g.n() == 0) {
            best = s;
        }
    }
    MisResult {
        alpha: None,
        lower: best.len() as u32,
        upper: cover_upper(g),
        witness: best,
        method: MisMethod::Greedy,
        nodes: 0,
    }
    .settled()
}

/// Deterministic greedy lower bound paired with the edge-cover upper bound.
pub fn degree_bound(g: &BitGraph) -> MisResult {
    let w = greedy_once::<rand_chacha::ChaCha8Rng>(g, None);
    MisResult {
        alpha: None,
        lower: w.len() as u32,
        upper: cover_upper(g),
        witness: w,
        method: MisMethod::DegreeBound,
        nodes: 0,
    }
    .settled()
}

impl MisResult {
    fn settled(mut self) -> Self {
        if self.lower == self.upper {
            self.alpha = Some(self.lower);
        }
        self
    }
}

/// Limits for [`exact_alpha`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConfig {
    pub max_n: usize,
    pub node_budget: Option<u64>,
    pub time_budget: Option<Duration>,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            max_n: DEFAULT_MAX_N,
            node_budget: None,
            time_budget: None,
        }
    }
}

struct Bb<'a> {
    g: &'a BitGraph,
    best: Vec<usize>,
    cur: Vec<usize>,
    nodes: u64,
    node_budget: u64,
    deadline: Option<Instant>,
    aborted: bool,
    /// Subtrees whose bound is at most this are pruned even if they could
    /// beat `best`; used to prove `α ≤ floor`.
    floor: usize,
}

impl Bb<'_> {
    /// Clique-cover bound: cliques of a triangle-free graph are edges and
    /// single vertices, so a greedy matching `M` gives `α ≤ |P| − |M|`.
    fn cover_bound(&self, p: &[u64]) -> usize {
        let mut free = p.to_vec();
        let mut size = 0;
        for u in iter_bits(p) {
            if free[u / 64] >> (u % 64) & 1 == 0 {
                continue;
            }
            free[u / 64] &= !(1 << (u % 64));
            size += 1;
            let partner = self
                .g
                .row(u)
                .iter()
                .zip(&free)
                .enumerate()
                .find_map(|(k, (r, f))| (r & f != 0).then(|| k * 64 + (r & f).trailing_zeros() as usize));
            if let Some(w) = partner {
                free[w / 64] &= !(1 << (w % 64));
            }
        }
        size
    }

    fn take(&mut self, v: usize, p: &mut [u64]) {
        self.cur.push(v);
        p[v / 64] &= !(1 << (v % 64));
        for (a, r) in p.iter_mut().zip(self.g.row(v)) {
            *a &= !r;
        }
    }

    /// Upper bound on independent sets extending `cur` inside `p`; exact
    /// for subtrees that finish without pruning or aborting.
    fn rec(&mut self, mut p: Vec<u64>) -> usize {
        let base = self.cur.len();
        // Vertices of degree at most one lie in some maximum set.
        let v = loop {
            let mut low = None;
            let mut high: Option<(usize, usize)> = None;
            for x in iter_bits(&p) {
                let d = deg_in(self.g, x, &p);
                if d <= 1 {
                    low = Some(x);
                    break;
                }
                if high.is_none_or(|(hd, _)| d > hd) {
                    high = Some((d, x));
                }
            }
            match (low, high) {
                (Some(x), _) => self.take(x, &mut p),
                (None, Some((_, x))) => break x,
                (None, None) => {
                    let got = self.cur.len();
                    if got > self.best.len() {
                        self.best = self.cur.clone();
                    }
                    self.cur.truncate(base);
                    return got;
                }
            }
        };
        self.nodes += 1;
        if self.nodes >= self.node_budget
            || (self.floor > 0 && self.best.len() > self.floor)
            || (self.nodes % 256 == 0 && self.deadline.is_some_and(|d| Instant::now() > d))
        {
            self.aborted = true;
        }
        let bound = self.cur.len() + self.cover_bound(&p);
        if self.aborted || bound <= self.best.len().max(self.floor) {
            self.cur.truncate(base);
            return bound;
        }
        let mut inc = p.clone();
        self.take(v, &mut inc);
        let ub_in = self.rec(inc);
        self.cur.pop();
        p[v / 64] &= !(1 << (v % 64));
        let ub_out = self.rec(p);
        self.cur.truncate(base);
        ub_in.max(ub_out)
    }
}

fn full_set(g: &BitGraph) -> Vec<u64> {
    let mut p = vec![0u64; g.words()];
    for x in 0..g.n() {
        p[x / 64] |= 1 << (x % 64);
    }
    p
}

struct Phase {
    node_budget: u64,
    deadline: Option<Instant>,
}

/// One branch-and-bound pass; returns the search state and the subtree
/// upper bound at the root.
fn run_bb<'a>(g: &'a BitGraph, best: Vec<usize>, floor: usize, phase: &Phase) -> (Bb<'a>, usize) {
    let mut bb = Bb {
        g,
        best,
        cur: Vec::new(),
        nodes: 0,
        node_budget: phase.node_budget,
        deadline: phase.deadline,
        aborted: false,
        floor,
    };
    let ub = bb.rec(full_set(g));
    (bb, ub)
}

/// Maximum independent set by branch and bound on the max-degree vertex.
///
/// Without budgets the search always finishes. With budgets, half goes to
/// the exact search; if that aborts, the rest tightens the upper bound by
/// bisection with decision searches that prune everything unable to exceed
/// a trial value.
pub fn exact_alpha(g: &BitGraph, cfg: &ExactConfig) -> Result<MisResult> {
    if g.n() > cfg.max_n {
        return Err(Error::Precondition(format!(
            "exact alpha is capped at n = {}, got {}",
            cfg.max_n,
            g.n()
        )));
    }
    let start = Instant::now();
    let budgeted = cfg.node_budget.is_some() || cfg.time_budget.is_some();
    let share = |num: u32, den: u32, used_nodes: u64| Phase {
        node_budget: cfg
            .node_budget
            .map_or(u64::MAX, |b| (b.saturating_sub(used_nodes) * num as u64 / den as u64).max(1)),
        deadline: cfg.time_budget.map(|d| {
            let left = d.saturating_sub(start.elapsed());
            Instant::now() + left * num / den
        }),
    };
    let first = if budgeted { share(1, 2, 0) } else { share(1, 1, 0) };
    let (bb, ub) = run_bb(g, greedy_once::<rand_chacha::ChaCha8Rng>(g, None), 0, &first);
    let mut nodes = bb.nodes;
    let mut witness = bb.best;
    if !bb.aborted {
        witness.sort_unstable();
        let a = witness.len() as u32;
        return Ok(MisResult {
            alpha: Some(a),
            lower: a,
            upper: a,
            witness,
            method: MisMethod::ExactBb,
            nodes,
        });
    }
    let mut hi = ub.max(witness.len()).min(cover_upper(g) as usize);
    let mut probe_lo = witness.len();
    while probe_lo < hi {
        let steps = (usize::BITS - (hi - probe_lo).leading_zeros()).max(1);
        let phase = share(1, steps, nodes);
        if phase.deadline.is_some_and(|d| d <= Instant::now())
            || cfg.node_budget.is_some_and(|b| nodes >= b)
        {
            break;
        }
        let trial = probe_lo + (hi - probe_lo) / 2;
        let (bb, _) = run_bb(g, witness.clone(), trial, &phase);
        nodes += bb.nodes;
        if bb.best.len() > witness.len() {
            witness = bb.best;
            probe_lo = probe_lo.max(witness.len());
        } else if bb.aborted {
            probe_lo = trial + 1;
        } else {
            hi = trial;
        }
    }
    witness.sort_unstable();
    let lower = witness.len() as u32;
    let upper = hi.max(witness.len()) as u32;
    Ok(MisResult {
        alpha: (lower == upper).then_some(lower),
        lower,
        upper,
        witness,
        method: MisMethod::ExactBb,
        nodes,
    })
}

/// `sha256` over sorted `"u v\n"` lines with `u < v`, as lowercase hex.
pub fn edges_sha256(edges: &[(usize, usize)]) -> String {
    let mut e: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    e.sort_unstable();
    let mut h = Sha256::new();
    for (a, b) in e {
        h.update(format!("{a} {b}\n").as_bytes());
    }
    format!("{:x}", h.finalize())
}

/// A self-contained certificate that `R(3, t) > n` with `t = α + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyWitness {
    pub n: usize,
    pub seed: u64,
    pub alpha: u32,
    pub witness: Vec<usize>,
    pub edges_sha256: String,
    pub bound: String,
    pub t: u32,
    pub rho: f64,
    pub edges: Vec<(usize, usize)>,
}

pub const BOUND_TAG: &str = "R(3,t)>n";

pub fn rho(n: usize, alpha: u32) -> f64 {
    let a = alpha as f64;
    n as f64 * a.ln() / (a * a)
}

/// Certificate for `g` from an exact independence result.
pub fn ramsey_witness(g: &BitGraph, seed: u64, mis: &MisResult) -> Result<RamseyWitness> {
    if g.has_triangle() {
        return Err(Error::Refused("graph has a triangle".into()));
    }
    let alpha = mis
        .alpha
        .ok_or_else(|| Error::Precondition("independence number is not known exactly".into()))?;
    if mis.witness.len() != alpha as usize || !g.is_independent(&mis.witness) {
        return Err(Error::Precondition("witness set does not match alpha".into()));
    }
    let edges = g.edges();
    Ok(RamseyWitness {
        n: g.n(),
        seed,
        alpha,
        witness: mis.witness.clone(),
        edges_sha256: edges_sha256(&edges),
        bound: BOUND_TAG.into(),
        t: alpha + 1,
        rho: rho(g.n(), alpha),
        edges,
    })
}

/// Outcome of re-checking a certificate from its serialized fields alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessCheck {
    pub valid: bool,
    /// Whether `α < t` was confirmed by a completed exact search.
    pub alpha_confirmed: bool,
    pub problems: Vec<String>,
}

/// Rebuilds the graph from `w.edges` and checks the hash, triangle-freeness,
/// the independent set, the derived fields and (within `cfg`) that no
/// independent set of size `t` exists.
pub fn verify_witness(w: &RamseyWitness, cfg: &ExactConfig) -> WitnessCheck {
    let mut problems = Vec::new();
    let mut alpha_confirmed = false;
    if edges_sha256(&w.edges) != w.edges_sha256 {
        problems.push("edge hash mismatch".to_string());
    }
    if w.bound != BOUND_TAG {
        problems.push(format!("unexpected bound tag {:?}", w.bound));
    }
    if w.t != w.alpha + 1 {
        problems.push(format!("t = {} but alpha = {}", w.t, w.alpha));
    }
    let r = rho(w.n, w.alpha);
    if (w.rho - r).abs() > 1e-9 * r.abs().max(1.0) {
        problems.push(format!("rho {} does not match {r}", w.rho));
    }
    match BitGraph::from_pairs(w.n, &w.edges) {
        Err(e) => problems.push(e.to_string()),
        Ok(g) => {
            if g.has_triangle() {
                problems.push("graph has a triangle".into());
            }
            if w.witness.len() != w.alpha as usize || !g.is_independent(&w.witness) {
                problems.push("witness is not an independent set of size alpha".into());
            }
            match exact_alpha(&g, cfg) {
                Ok(m) if m.upper <= w.alpha => alpha_confirmed = true,
                Ok(m) if m.lower > w.alpha => {
                    problems.push(format!("independent set of size {} exists", m.lower))
                }
                Ok(_) => {}
                Err(e) => problems.push(e.to_string()),
            }
        }
    }
    WitnessCheck {
        valid: problems.is_empty(),
        alpha_confirmed,
        problems,
    }
}
