//! Small subgraphs of final graphs: 2-densities, containment search and
//! the appearance experiment.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{iter_bits, BitGraph};
use crate::process::run_seeded;
use crate::rng::run_seed;
use crate::stats::{fmt_g9, wilson95};

pub const MAX_SMALL_VERTICES: usize = 10;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// A small simple graph `H` with a name tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmallGraph {
    pub name: String,
    pub v: usize,
    pub edges: Vec<(usize, usize)>,
}

impl SmallGraph {
    pub fn new(name: impl Into<String>, v: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if v == 0 || v > MAX_SMALL_VERTICES {
            return Err(Error::invalid(format!("small graphs have 1..={MAX_SMALL_VERTICES} vertices, got {v}")));
        }
        let mut seen = std::collections::HashSet::new();
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b || a >= v || b >= v {
                return Err(Error::invalid(format!("bad edge ({a},{b}) for v={v}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::invalid(format!("repeated edge ({a},{b})")));
            }
            norm.push(e);
        }
        Ok(SmallGraph {
            name: name.into(),
            v,
            edges: norm,
        })
    }

    /// `P3`, `K2`, `C4`, `C5`, `K34`, `K45` or `Petersen`.
    pub fn named(name: &str) -> Option<Self> {
        let cycle = |k: usize| (0..k).map(|i| (i, (i + 1) % k)).collect::<Vec<_>>();
        let biclique = |a: usize, b: usize| {
            (0..a).flat_map(|i| (a..a + b).map(move |j| (i, j))).collect::<Vec<_>>()
        };
        let (v, edges) = match name {
            "K2" => (2, vec![(0, 1)]),
            "P3" => (3, vec![(0, 1), (1, 2)]),
            "C4" => (4, cycle(4)),
            "C5" => (5, cycle(5)),
            "K34" => (7, biclique(3, 4)),
            "K45" => (9, biclique(4, 5)),
            "Petersen" => {
                let mut e: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
                e.extend((0..5).map(|i| (i, i + 5)));
                e.extend((0..5).map(|i| (5 + i, 5 + (i + 2) % 5)));
                (10, e)
            }
            _ => return None,
        };
        Some(SmallGraph::new(name, v, edges).expect("named graphs are valid"))
    }

    pub fn bits(&self) -> BitGraph {
        BitGraph::from_pairs(self.v, &self.edges).expect("validated")
    }

    pub fn degree(&self, x: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == x || b == x).count()
    }
}

/// `name: v=7; edges=(0,3)(0,4)...`, or a bare known name such as `C4`.
impl FromStr for SmallGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some((name, body)) = s.split_once(':') else {
            return SmallGraph::named(s).ok_or_else(|| Error::Parse(format!("unknown graph {s:?}")));
        };
        let mut v = None;
        let mut edges = Vec::new();
        for field in body.split(';').map(str::trim).filter(|f| !f.is_empty()) {
            let (key, val) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {field:?}")))?;
            match key.trim() {
                "v" => v = Some(val.trim().parse().map_err(|_| Error::Parse(format!("bad v {val:?}")))?),
                "edges" => {
                    let compact: String = val.chars().filter(|c| !c.is_whitespace()).collect();
                    for part in compact.split(')').filter(|p| !p.is_empty()) {
                        let inner = part
                            .strip_prefix('(')
                            .ok_or_else(|| Error::Parse(format!("bad edge {part:?}")))?;
                        let (a, b) = inner
                            .split_once(',')
                            .ok_or_else(|| Error::Parse(format!("bad edge {part:?}")))?;
                        let p = |x: &str| x.parse::<usize>().map_err(|_| Error::Parse(format!("bad vertex {x:?}")));
                        edges.push((p(a)?, p(b)?));
                    }
                }
                other => return Err(Error::Parse(format!("unknown field {other:?}"))),
            }
        }
        let v = v.ok_or_else(|| Error::Parse("missing v=".into()))?;
        SmallGraph::new(name.trim(), v, edges)
    }
}

impl fmt::Display for SmallGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: v={}; edges=", self.name, self.v)?;
        for (a, b) in &self.edges {
            write!(f, "({a},{b})")?;
        }
        Ok(())
    }
}

/// A nonnegative-denominator fraction in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den > 0);
        let g = gcd(num.unsigned_abs(), den as u64).max(1) as i64;
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn gt(self, o: Ratio) -> bool {
        (self.num as i128) * (o.den as i128) > (o.num as i128) * (self.den as i128)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub d2: Ratio,
    pub m2: Ratio,
    pub argmax: Vec<usize>,
}

/// `d₂(H) = (e−1)/(v−2)` and `m₂(H)`, the maximum over induced subgraphs on
/// at least 3 vertices. Deleting edges at a fixed vertex set only lowers
/// `d₂`, so induced subgraphs suffice.
pub fn two_density(h: &SmallGraph) -> Result<DensityReport> {
    if h.v < 3 {
        return Err(Error::invalid(format!("2-density needs at least 3 vertices, got {}", h.v)));
    }
    let d2 = Ratio::new(h.edges.len() as i64 - 1, h.v as i64 - 2);
    let mut best: Option<(Ratio, u32)> = None;
    for mask in 0u32..(1 << h.v) {
        let k = mask.count_ones() as i64;
        if k < 3 {
            continue;
        }
        let e = h
            .edges
            .iter()
            .filter(|&&(a, b)| mask >> a & 1 == 1 && mask >> b & 1 == 1)
            .count() as i64;
        let r = Ratio::new(e - 1, k - 2);
        if best.is_none_or(|(b, _)| r.gt(b)) {
            best = Some((r, mask));
        }
    }
    let (m2, mask) = best.expect("v >= 3");
    Ok(DensityReport {
        d2,
        m2,
        argmax: (0..h.v).filter(|&x| mask >> x & 1 == 1).collect(),
    })
}

/// Outcome of a containment search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Containment {
    /// `witness[x]` is the image of `H`-vertex `x`.
    Found(Vec<usize>),
    Absent,
    /// The time budget ran out first.
    Indeterminate,
}

/// Whether `witness` maps `H` injectively onto a (not necessarily induced)
/// copy in `g`.
pub fn verify_witness(g: &BitGraph, h: &SmallGraph, witness: &[usize]) -> bool {
    witness.len() == h.v
        && witness.iter().all(|&x| x < g.n())
        && (0..h.v).all(|i| !witness[i + 1..].contains(&witness[i]))
        && h.edges.iter().all(|&(a, b)| g.has_edge(witness[a], witness[b]))
}

struct Search<'a> {
    g: &'a BitGraph,
    order: Vec<usize>,
    /// `H`-neighbours of each vertex.
    adj: Vec<Vec<usize>>,
    hdeg: Vec<usize>,
    img: Vec<usize>,
    used: Vec<u64>,
    deadline: Instant,
    nodes: u64,
    timed_out: bool,
}

impl Search<'_> {
    fn candidates(&self, x: usize, extra: Option<(usize, usize)>) -> Vec<u64> {
        let w = self.g.words();
        let mut cand = vec![u64::MAX; w];
        let mut any = false;
        for &y in &self.adj[x] {
            let image = if self.img[y] != usize::MAX {
                self.img[y]
            } else if let Some((_, im)) = extra.filter(|&(yy, _)| yy == y) {
                im
            } else {
                continue;
            };
            any = true;
            for (c, r) in cand.iter_mut().zip(self.g.row(image)) {
                *c &= r;
            }
        }
        if !any {
            // Every vertex of G.
            for (k, c) in cand.iter_mut().enumerate() {
                let lo = k * 64;
                if lo + 64 > self.g.n() {
                    *c = if lo >= self.g.n() { 0 } else { (1u64 << (self.g.n() - lo)) - 1 };
                }
            }
        }
        for (c, u) in cand.iter_mut().zip(&self.used) {
            *c &= !u;
        }
        cand
    }

    fn rec(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        self.nodes += 1;
        if self.nodes % 1024 == 0 && Instant::now() > self.deadline {
            self.timed_out = true;
        }
        if self.timed_out {
            return false;
        }
        let x = self.order[depth];
        let cand = self.candidates(x, None);
        let list: Vec<usize> = iter_bits(&cand).collect();
        for w in list {
            if self.g.degree(w) < self.hdeg[x] {
                continue;
            }
            // Forward check: every unplaced neighbour keeps a candidate.
            let ok = self.adj[x].iter().all(|&y| {
                self.img[y] != usize::MAX || {
                    // `w` is never its own neighbour, so nonempty suffices.
                    self.candidates(y, Some((x, w))).iter().any(|&c| c != 0)
                }
            });
            if !ok {
                continue;
            }
            self.img[x] = w;
            self.used[w / 64] |= 1 << (w % 64);
            if self.rec(depth + 1) {
                return true;
            }
            self.used[w / 64] &= !(1 << (w % 64));
            self.img[x] = usize::MAX;
            if self.timed_out {
                return false;
            }
        }
        false
    }
}

/// Searches for a copy of `h` in `g` with neighbourhood-intersection
/// candidates, degree pruning and forward checking.
pub fn contains(g: &BitGraph, h: &SmallGraph, budget: Duration) -> Containment {
    if h.v > g.n() {
        return Containment::Absent;
    }
    let mut adj = vec![Vec::new(); h.v];
    for &(a, b) in &h.edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let hdeg: Vec<usize> = adj.iter().map(Vec::len).collect();
    // Most-constrained-first order.
    let mut order = Vec::with_capacity(h.v);
    let mut placed = vec![false; h.v];
    while order.len() < h.v {
        let next = (0..h.v)
            .filter(|&x| !placed[x])
            .max_by_key(|&x| {
                let back = adj[x].iter().filter(|&&y| placed[y]).count();
                (back, hdeg[x], std::cmp::Reverse(x))
            })
            .expect("unplaced vertex");
        placed[next] = true;
        order.push(next);
    }
    let mut s = Search {
        g,
        order,
        adj,
        hdeg,
        img: vec![usize::MAX; h.v],
        used: vec![0; g.words()],
        deadline: Instant::now() + budget,
        nodes: 0,
        timed_out: false,
    };
    if s.rec(0) {
        Containment::Found(s.img)
    } else if s.timed_out {
        Containment::Indeterminate
    } else {
        Containment::Absent
    }
}

/// One row of the appearance frequency table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppearanceRow {
    pub h: String,
    pub m2: f64,
    pub n: u32,
    /// Runs with a determinate answer.
    pub runs: u64,
    pub hits: u64,
    pub indeterminate: u64,
    pub freq: f64,
    pub lo95: f64,
    pub hi95: f64,
}

pub const FREQ_CSV_HEADER: &str = "H,m2,n,runs,hits,freq,lo95,hi95";

impl AppearanceRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.h,
            fmt_g9(self.m2),
            self.n,
            self.runs,
            self.hits,
            fmt_g9(self.freq),
            fmt_g9(self.lo95),
            fmt_g9(self.hi95)
        )
    }
}

/// Runs the process `runs` times at size `n` (seeds derived from `master`)
/// and records which of `hs` each final graph contains.
pub fn appearance_experiment(
    n: u32,
    master: u64,
    runs: u64,
    hs: &[SmallGraph],
    budget: Duration,
) -> Result<Vec<AppearanceRow>> {
    for h in hs {
        if h.bits().has_triangle() {
            return Err(Error::Precondition(format!("{} contains a triangle", h.name)));
        }
    }
    let outcomes: Vec<Vec<Containment>> = (0..runs)
        .into_par_iter()
        .map(|k| -> Result<Vec<Containment>> {
            let store = run_seeded(n, run_seed(master, k))?;
            let g = BitGraph::from_edges(n as usize, store.edges())?;
            Ok(hs.iter().map(|h| contains(&g, h, budget)).collect())
        })
        .collect::<Result<_>>()?;
    hs.iter()
        .enumerate()
        .map(|(j, h)| {
            let mut row = AppearanceRow {
                h: h.name.clone(),
                m2: if h.v >= 3 { two_density(h)?.m2.value() } else { 0.0 },
                n,
                runs: 0,
                hits: 0,
                indeterminate: 0,
                freq: 0.0,
                lo95: 0.0,
                hi95: 1.0,
            };
            for o in &outcomes {
                match o[j] {
                    Containment::Found(_) => {
                        row.runs += 1;
                        row.hits += 1;
                    }
                    Containment::Absent => row.runs += 1,
                    Containment::Indeterminate => row.indeterminate += 1,
                }
            }
            if row.runs > 0 {
                row.freq = row.hits as f64 / row.runs as f64;
            }
            (row.lo95, row.hi95) = wilson95(row.hits, row.runs);
            Ok(row)
        })
        .collect()
}
