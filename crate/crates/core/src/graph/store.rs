use std::io::{self, Write};

use super::pair::{pair_count, PairKey};
use crate::error::{Error, Result};

/// Status of a vertex pair. Exactly one status holds at any step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum PairStatus {
    Open = 0,
    Edge = 1,
    Closed = 2,
}

impl PairStatus {
    #[inline]
    fn from_bits(b: u64) -> Self {
        match b {
            0 => PairStatus::Open,
            1 => PairStatus::Edge,
            _ => PairStatus::Closed,
        }
    }
}

const PAIRS_PER_WORD: u64 = 32;

/// Pair statuses of an `n`-vertex graph, packed two bits per pair in the flat
/// upper-triangular layout of [`PairKey::index`], plus per-vertex sorted edge
/// neighbourhoods and counters.
///
/// Invariants maintained by [`PairStore::add_edge`]:
/// * `open + edge + closed = n(n−1)/2`;
/// * the edge set is triangle-free;
/// * a pair is closed iff it is a non-edge whose endpoints have a common
///   neighbour.
#[derive(Debug, Clone)]
pub struct PairStore {
    n: u32,
    bits: Vec<u64>,
    adj: Vec<Vec<u32>>,
    open_degree: Vec<u32>,
    edges: Vec<PairKey>,
    open_count: u64,
    closed_count: u64,
}

impl PairStore {
    /// Largest supported vertex count; pair indices must fit in `u32`.
    pub const MAX_N: u32 = 1 << 16;

    /// The empty graph: every pair open.
    pub fn new_empty(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("need n >= 2, got {n}")));
        }
        if n > Self::MAX_N {
            return Err(Error::invalid(format!("n = {n} exceeds {}", Self::MAX_N)));
        }
        let total = pair_count(n);
        Ok(PairStore {
            n,
            bits: vec![0; total.div_ceil(PAIRS_PER_WORD) as usize],
            adj: vec![Vec::new(); n as usize],
            open_degree: vec![n - 1; n as usize],
            edges: Vec::new(),
            open_count: total,
            closed_count: 0,
        })
    }

    /// Builds a store by adding `edges` in order.
    pub fn from_edges(n: u32, edges: &[PairKey]) -> Result<Self> {
        let mut s = Self::new_empty(n)?;
        let mut scratch = Vec::new();
        for &e in edges {
            s.add_edge_into(e, &mut scratch)?;
        }
        Ok(s)
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn open_count(&self) -> u64 {
        self.open_count
    }

    #[inline]
    pub fn edge_count(&self) -> u64 {
        self.edges.len() as u64
    }

    #[inline]
    pub fn closed_count(&self) -> u64 {
        self.closed_count
    }

    pub fn total_pairs(&self) -> u64 {
        pair_count(self.n)
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[PairKey] {
        &self.edges
    }

    /// Sorted edge neighbourhood of `x`.
    #[inline]
    pub fn neighbors(&self, x: u32) -> &[u32] {
        &self.adj[x as usize]
    }

    #[inline]
    pub fn degree(&self, x: u32) -> u32 {
        self.adj[x as usize].len() as u32
    }

    /// Number of `w` with `xw` open.
    #[inline]
    pub fn open_degree(&self, x: u32) -> u32 {
        self.open_degree[x as usize]
    }

    #[inline]
    pub(crate) fn status_at(&self, idx: u64) -> PairStatus {
        let word = self.bits[(idx / PAIRS_PER_WORD) as usize];
        PairStatus::from_bits((word >> (2 * (idx % PAIRS_PER_WORD))) & 3)
    }

    #[inline]
    fn set_status_at(&mut self, idx: u64, s: PairStatus) {
        let w = &mut self.bits[(idx / PAIRS_PER_WORD) as usize];
        let shift = 2 * (idx % PAIRS_PER_WORD);
        *w = (*w & !(3 << shift)) | ((s as u64) << shift);
    }

    #[inline]
    pub fn status_of(&self, key: PairKey) -> PairStatus {
        self.status_at(key.index(self.n))
    }

    /// Status of `{u, v}`; symmetric in its arguments.
    pub fn status(&self, u: u32, v: u32) -> Result<PairStatus> {
        if u == v {
            return Err(Error::invalid(format!("status of loop ({u}, {u})")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::invalid(format!(
                "pair ({u}, {v}) out of range for n = {}",
                self.n
            )));
        }
        Ok(self.status_of(PairKey::ordered(u, v)))
    }

    /// Unchecked status lookup for hot loops; `u != v`, both `< n`.
    #[inline]
    pub fn status_unchecked(&self, u: u32, v: u32) -> PairStatus {
        self.status_of(PairKey::ordered(u, v))
    }

    #[inline]
    pub fn is_open(&self, u: u32, v: u32) -> bool {
        u != v && self.status_unchecked(u, v) == PairStatus::Open
    }

    #[inline]
    pub fn is_edge(&self, u: u32, v: u32) -> bool {
        u != v && self.status_unchecked(u, v) == PairStatus::Edge
    }

    /// Adds the open pair `e` as an edge and returns the pairs it closes.
    pub fn add_edge(&mut self, e: PairKey) -> Result<Vec<PairKey>> {
        let mut closed = Vec::new();
        self.add_edge_into(e, &mut closed)?;
        Ok(closed)
    }

    /// As [`PairStore::add_edge`], writing the newly closed pairs into
    /// `closed` (cleared first).
    pub fn add_edge_into(&mut self, e: PairKey, closed: &mut Vec<PairKey>) -> Result<()> {
        closed.clear();
        if e.u >= e.v || e.v >= self.n {
            return Err(Error::invalid(format!("bad pair {e:?} for n = {}", self.n)));
        }
        let idx = e.index(self.n);
        let st = self.status_at(idx);
        if st != PairStatus::Open {
            return Err(Error::Precondition(format!("pair {e} is {st:?}, not Open")));
        }
        self.set_status_at(idx, PairStatus::Edge);
        self.open_count -= 1;
        self.open_degree[e.u as usize] -= 1;
        self.open_degree[e.v as usize] -= 1;

        // Every w adjacent to one endpoint closes the pair {w, other endpoint}.
        for (a, b) in [(e.u, e.v), (e.v, e.u)] {
            for k in 0..self.adj[b as usize].len() {
                let w = self.adj[b as usize][k];
                let key = PairKey::ordered(a, w);
                let widx = key.index(self.n);
                if self.status_at(widx) == PairStatus::Open {
                    self.set_status_at(widx, PairStatus::Closed);
                    self.open_count -= 1;
                    self.closed_count += 1;
                    self.open_degree[a as usize] -= 1;
                    self.open_degree[w as usize] -= 1;
                    closed.push(key);
                }
            }
        }

        for (a, b) in [(e.u, e.v), (e.v, e.u)] {
            let list = &mut self.adj[a as usize];
            let pos = list.partition_point(|&x| x < b);
            list.insert(pos, b);
        }
        self.edges.push(e);
        Ok(())
    }

    /// Every non-edge has a common neighbour (no open pair remains).
    pub fn is_terminal(&self) -> bool {
        self.open_count == 0
    }

    /// Iterates over currently open pairs in canonical index order.
    pub fn open_pairs(&self) -> impl Iterator<Item = PairKey> + '_ {
        let n = self.n;
        (0..self.total_pairs())
            .filter(move |&i| self.status_at(i) == PairStatus::Open)
            .map(move |i| PairKey::from_index(i, n))
    }

    /// Writes one `u v` line per edge in insertion order (LF endings).
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.edges {
            writeln!(out, "{} {}", e.u, e.v)?;
        }
        out.flush()
    }

    pub fn edge_list_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii")
    }
}

/// Parses the edge-list text format (`u v` per line). Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_edge_list(text: &str) -> Result<Vec<PairKey>> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |s: Option<&str>| -> Result<u32> {
            s.ok_or_else(|| Error::Parse(format!("line {}: expected two vertices", lineno + 1)))?
                .parse::<u32>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
        };
        let a = parse(it.next())?;
        let b = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::Parse(format!("line {}: trailing tokens", lineno + 1)));
        }
        edges.push(PairKey::new(a, b)?);
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn key(a: u32, b: u32) -> PairKey {
        PairKey::new(a, b).unwrap()
    }

    #[test]
    fn empty_counts() {
        assert_eq!(PairStore::new_empty(3).unwrap().open_count(), 3);
        assert_eq!(PairStore::new_empty(2).unwrap().open_count(), 1);
        let s = PairStore::new_empty(100).unwrap();
        assert_eq!(s.open_count(), 4950);
        assert_eq!(s.edge_count(), 0);
        assert_eq!(s.closed_count(), 0);
        assert!(matches!(PairStore::new_empty(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn first_edge_closes_nothing() {
        let mut s = PairStore::new_empty(4).unwrap();
        assert!(s.add_edge(key(0, 1)).unwrap().is_empty());
    }

    #[test]
    fn cherry_closes_third_pair() {
        let mut s = PairStore::new_empty(4).unwrap();
        s.add_edge(key(0, 1)).unwrap();
        assert_eq!(s.add_edge(key(0, 2)).unwrap(), vec![key(1, 2)]);

        let s3 = PairStore::from_edges(3, &[key(0, 1), key(0, 2)]).unwrap();
        assert_eq!(s3.status(1, 2).unwrap(), PairStatus::Closed);
        assert_eq!(s3.status(2, 1).unwrap(), PairStatus::Closed);
    }

    #[test]
    fn status_symmetry_and_errors() {
        let mut s = PairStore::new_empty(5).unwrap();
        assert_eq!(s.status(0, 1).unwrap(), PairStatus::Open);
        s.add_edge(key(0, 1)).unwrap();
        assert_eq!(s.status(1, 0).unwrap(), PairStatus::Edge);
        assert!(matches!(s.status(2, 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(s.add_edge(key(0, 1)), Err(Error::Precondition(_))));
    }

    #[test]
    fn edge_list_roundtrip() {
        let s = PairStore::from_edges(6, &[key(4, 1), key(0, 2), key(3, 5)]).unwrap();
        let text = s.edge_list_string();
        assert_eq!(text, "1 4\n0 2\n3 5\n");
        assert_eq!(parse_edge_list(&text).unwrap(), s.edges());
    }

    #[test]
    fn matches_brute_force_after_random_additions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let n = rng.gen_range(2..=64);
            let mut s = PairStore::new_empty(n).unwrap();
            let steps = rng.gen_range(0..3 * n);
            for _ in 0..steps {
                let open: Vec<_> = s.open_pairs().collect();
                if open.is_empty() {
                    break;
                }
                let e = open[rng.gen_range(0..open.len())];
                s.add_edge(e).unwrap();
                assert_eq!(s.open_count() + s.edge_count() + s.closed_count(), s.total_pairs());
            }
            let expect = oracle::brute_statuses(n, s.edges());
            for u in 0..n {
                for v in u + 1..n {
                    assert_eq!(
                        s.status(u, v).unwrap(),
                        expect[PairKey { u, v }.index(n) as usize],
                        "trial {trial} pair ({u},{v})"
                    );
                }
                let od = (0..n).filter(|&w| s.is_open(u, w)).count() as u32;
                assert_eq!(s.open_degree(u), od);
            }
            assert!(oracle::is_triangle_free(n, s.edges()));
        }
    }
}
