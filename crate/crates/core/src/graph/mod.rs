//! Pair-state bookkeeping for the triangle-free process.

mod bits;
mod pair;
mod ranked;
mod sampler;
mod store;

pub use bits::{iter_bits, BitGraph};
pub use pair::{pair_count, PairKey};
pub use ranked::RankedOpenIndex;
pub use sampler::OpenSampler;
pub use store::{parse_edge_list, PairStatus, PairStore};
