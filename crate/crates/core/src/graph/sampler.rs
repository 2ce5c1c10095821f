use super::pair::PairKey;
use super::store::{PairStatus, PairStore};
use crate::error::{Error, Result};
use crate::rng::IndexStream;

/// Candidate list for uniform open-pair sampling with lazy deletion.
///
/// Every open pair appears exactly once among the candidates; the other
/// entries are stale (edges or closed pairs). A draw picks a uniform candidate
/// index; a stale hit is swap-removed and the draw repeats, so the accepted
/// pair is uniform over the open set. When more than half of the candidates
/// are stale the list is compacted.
///
/// Until the first compaction the list is the identity list of all pair
/// indices and is not materialized; stale hits in that phase are simply
/// redrawn.
#[derive(Debug, Clone)]
pub struct OpenSampler {
    list: Candidates,
}

#[derive(Debug, Clone)]
enum Candidates {
    All { len: u64 },
    Listed(Vec<u32>),
}

impl OpenSampler {
    pub fn new(store: &PairStore) -> Self {
        let mut s = OpenSampler {
            list: Candidates::All {
                len: store.total_pairs(),
            },
        };
        if store.open_count() * 2 < store.total_pairs() {
            s.compact(store);
        }
        s
    }

    pub fn len(&self) -> u64 {
        match &self.list {
            Candidates::All { len } => *len,
            Candidates::Listed(v) => v.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stale entries: candidates that are no longer open.
    pub fn stale_count(&self, store: &PairStore) -> u64 {
        self.len() - store.open_count()
    }

    /// Candidate pair indices (materializing the identity phase).
    pub fn candidates(&self) -> Vec<u64> {
        match &self.list {
            Candidates::All { len } => (0..*len).collect(),
            Candidates::Listed(v) => v.iter().map(|&x| x as u64).collect(),
        }
    }

    fn compact(&mut self, store: &PairStore) {
        let kept: Vec<u32> = match &self.list {
            Candidates::All { len } => (0..*len)
                .filter(|&i| store.status_at(i) == PairStatus::Open)
                .map(|i| i as u32)
                .collect(),
            Candidates::Listed(v) => v
                .iter()
                .copied()
                .filter(|&i| store.status_at(i as u64) == PairStatus::Open)
                .collect(),
        };
        self.list = Candidates::Listed(kept);
    }

    /// Draws a uniformly random open pair.
    pub fn sample<R: IndexStream + ?Sized>(
        &mut self,
        store: &PairStore,
        rng: &mut R,
    ) -> Result<PairKey> {
        if store.open_count() == 0 {
            return Err(Error::Terminated);
        }
        if store.open_count() * 2 < self.len() {
            self.compact(store);
        }
        let n = store.n();
        match &mut self.list {
            Candidates::All { len } => loop {
                let idx = rng.next_index(*len);
                if store.status_at(idx) == PairStatus::Open {
                    return Ok(PairKey::from_index(idx, n));
                }
            },
            Candidates::Listed(v) => loop {
                debug_assert!(!v.is_empty());
                let pos = rng.next_index(v.len() as u64) as usize;
                let idx = v[pos] as u64;
                if store.status_at(idx) == PairStatus::Open {
                    return Ok(PairKey::from_index(idx, n));
                }
                v.swap_remove(pos);
            },
        }
    }
}
