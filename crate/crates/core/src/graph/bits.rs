use crate::error::{Error, Result};
use crate::graph::PairKey;

/// Dense adjacency bitsets for an arbitrary simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl BitGraph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitGraph {
            n,
            words,
            rows: vec![0; words * n],
        }
    }

    /// Builds from an edge list; repeated edges are merged.
    pub fn from_edges(n: usize, edges: &[PairKey]) -> Result<Self> {
        let mut g = BitGraph::new(n);
        for e in edges {
            g.add_edge(e.u as usize, e.v as usize)?;
        }
        Ok(g)
    }

    pub fn from_pairs(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = BitGraph::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b || a >= self.n || b >= self.n {
            return Err(Error::invalid(format!("bad edge ({a},{b}) for n={}", self.n)));
        }
        self.rows[a * self.words + b / 64] |= 1 << (b % 64);
        self.rows[b * self.words + a / 64] |= 1 << (a % 64);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn row(&self, x: usize) -> &[u64] {
        &self.rows[x * self.words..(x + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.rows[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    pub fn degree(&self, x: usize) -> usize {
        self.row(x).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.row(x))
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|x| self.degree(x)).sum::<usize>() / 2
    }

    /// Edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| self.neighbors(a).filter(move |&b| b > a).map(move |b| (a, b)))
            .collect()
    }

    pub fn has_triangle(&self) -> bool {
        (0..self.n).any(|a| {
            self.neighbors(a)
                .filter(|&b| b > a)
                .any(|b| self.row(a).iter().zip(self.row(b)).any(|(x, y)| x & y != 0))
        })
    }

    /// Triangle-free and every non-adjacent pair has a common neighbour,
    /// checked per vertex via the union of its neighbours' rows.
    pub fn is_maximal_triangle_free(&self) -> bool {
        let mut reach = vec![0u64; self.words];
        (0..self.n).all(|u| {
            reach.iter_mut().for_each(|r| *r = 0);
            for w in self.neighbors(u) {
                for (r, x) in reach.iter_mut().zip(self.row(w)) {
                    *r |= x;
                }
            }
            let own = self.row(u);
            if reach.iter().zip(own).any(|(r, o)| r & o != 0) {
                return false;
            }
            reach[u / 64] |= 1 << (u % 64);
            (0..self.words).all(|k| {
                let covered = reach[k] | own[k];
                let lo = k * 64;
                let full = if lo + 64 <= self.n { u64::MAX } else { (1u64 << (self.n - lo)) - 1 };
                covered & full == full
            })
        })
    }

    /// Whether `set` is independent.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &a)| {
            a < self.n && set[i + 1..].iter().all(|&b| b != a && !self.has_edge(a, b))
        })
    }
}

/// Indices of set bits.
pub fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(k, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                return None;
            }
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(k * 64 + b)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let g = BitGraph::from_pairs(70, &[(0, 1), (1, 65), (65, 0), (3, 4)]).unwrap();
        assert!(g.has_edge(65, 1) && !g.has_edge(2, 3));
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.neighbors(1).collect::<Vec<_>>(), vec![0, 65]);
        assert_eq!(g.edge_count(), 4);
        assert!(g.has_triangle());
        assert!(g.is_independent(&[0, 3, 5]));
        assert!(!g.is_independent(&[3, 4]));
        assert!(!g.is_independent(&[2, 2]));
        assert!(BitGraph::from_pairs(3, &[(0, 3)]).is_err());
        assert!(!g.is_maximal_triangle_free());
    }

    #[test]
    fn maximality_matches_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let n = rng.gen_range(2..=70u32);
            let p = rng.gen_range(0.0..0.6);
            let edges: Vec<PairKey> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .filter(|_| rng.gen_bool(p))
                .map(|(a, b)| PairKey::new(a, b).unwrap())
                .collect();
            let g = BitGraph::from_edges(n as usize, &edges).unwrap();
            assert_eq!(g.is_maximal_triangle_free(), crate::oracle::is_maximal_triangle_free(n, &edges));
            assert_eq!(g.has_triangle(), !crate::oracle::is_triangle_free(n, &edges));
        }
        for n in [3u32, 40, 130] {
            let st = crate::process::run_seeded(n, 1).unwrap();
            assert!(BitGraph::from_edges(n as usize, st.edges()).unwrap().is_maximal_triangle_free());
        }
    }
}
