//! Simulator and verification laboratory for the triangle-free random graph
//! process.
//!
//! The process starts from the empty graph on `n` vertices and repeatedly adds
//! a uniformly random *open* pair, i.e. a non-edge whose addition creates no
//! triangle, until no open pair remains. The crate provides
//!
//! * [`graph`]: packed pair-status bookkeeping and uniform open-pair sampling,
//! * [`process`]: the process driver, the Erdős–Rényi baseline and the
//!   rejection-coupled sampler,
//! * [`scaling`]: deterministic trajectories, tracking values and error bands,
//! * [`tracker`]: observed ensemble variables at snapshots,
//! * [`extension`]: extension-variable counting, scalings, balance and
//!   controllability,
//! * [`stacking`]: the stacking-word grammar and its realizations,
//! * [`census`]: 2-densities and small-subgraph containment,
//! * [`independence`]: independence numbers and Ramsey witnesses,
//! * [`experiment`]: configuration and orchestration behind the `trifree` CLI.
//!
//! Every optimized path has a brute-force counterpart in [`oracle`].

pub mod census;
pub mod error;
pub mod experiment;
pub mod extension;
pub mod graph;
pub mod independence;
pub mod oracle;
pub mod process;
pub mod rng;
pub mod scaling;
pub mod stacking;
pub mod stats;
pub mod tracker;

pub use error::{Error, Result};
pub use graph::{PairKey, PairStatus, PairStore};
