use super::pair::PairKey;
use super::store::{PairStatus, PairStore};
use crate::error::{Error, Result};

/// Order-statistics index over the open pairs of a store: selects the
/// `r`-th open pair in canonical index order in `O(log N)`.
///
/// This is the rank-addressed sampling discipline; two engines fed the same
/// stream of ranks make identical choices as long as their open sets agree.
#[derive(Debug, Clone)]
pub struct RankedOpenIndex {
    tree: Vec<u32>,
    open: u64,
}

impl RankedOpenIndex {
    pub fn new(store: &PairStore) -> Self {
        let len = store.total_pairs() as usize;
        let mut tree = vec![0u32; len + 1];
        for i in 0..len {
            if store.status_at(i as u64) == PairStatus::Open {
                tree[i + 1] += 1;
            }
        }
        // Linear-time Fenwick build.
        for i in 1..=len {
            let j = i + (i & i.wrapping_neg());
            if j <= len {
                tree[j] += tree[i];
            }
        }
        RankedOpenIndex {
            tree,
            open: store.open_count(),
        }
    }

    pub fn open_count(&self) -> u64 {
        self.open
    }

    /// Records that the pair at `idx` left the open set.
    pub fn remove(&mut self, idx: u64) {
        let len = self.tree.len() - 1;
        let mut i = idx as usize + 1;
        while i <= len {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
        self.open -= 1;
    }

    /// Index of the open pair with 0-based `rank` in canonical order.
    pub fn select(&self, rank: u64) -> Result<u64> {
        if rank >= self.open {
            return Err(Error::invalid(format!(
                "rank {rank} out of range for {} open pairs",
                self.open
            )));
        }
        let len = self.tree.len() - 1;
        let mut pos = 0usize;
        let mut rem = rank as u32 + 1;
        let mut step = if len == 0 { 0 } else { 1usize << (usize::BITS - 1 - len.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= len && self.tree[next] < rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        Ok(pos as u64)
    }

    pub fn select_pair(&self, rank: u64, n: u32) -> Result<PairKey> {
        Ok(PairKey::from_index(self.select(rank)?, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn select_matches_sorted_open_list() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2u32, 3, 10, 33] {
            let mut store = PairStore::new_empty(n).unwrap();
            let mut idx = RankedOpenIndex::new(&store);
            let mut closed = Vec::new();
            loop {
                let open: Vec<_> = store.open_pairs().collect();
                assert_eq!(idx.open_count(), open.len() as u64);
                for (r, p) in open.iter().enumerate() {
                    assert_eq!(idx.select_pair(r as u64, n).unwrap(), *p);
                }
                assert!(idx.select(open.len() as u64).is_err());
                if open.is_empty() {
                    break;
                }
                let e = open[rng.gen_range(0..open.len())];
                store.add_edge_into(e, &mut closed).unwrap();
                idx.remove(e.index(n));
                for c in &closed {
                    idx.remove(c.index(n));
                }
            }
        }
    }
}
