//! Observed ensemble variables at snapshots and their deviations from the
//! tracking values.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{PairStatus, PairStore};
use crate::rng::rng_from_seed;
use crate::scaling::{self, ErrorParams, ScalingContext, VariableKind};
use crate::stats::fmt_g9;

/// Largest `n` for exact global counts by default.
pub const DEFAULT_N_EXACT: u32 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StatsMode {
    /// Bitset enumeration; refused above `max_n`.
    Exact { max_n: u32 },
    /// `R` and `S` estimated from `pairs` uniform ordered pairs.
    Sampled { pairs: usize, seed: u64 },
}

impl Default for StatsMode {
    fn default() -> Self {
        StatsMode::Exact { max_n: DEFAULT_N_EXACT }
    }
}

/// Ordered counts `Q`, `R`, `S`. `Q` is always exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalStats {
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub exact: bool,
    /// Standard errors of `(R, S)` when sampled.
    pub std_err: Option<(f64, f64)>,
}

/// Per-vertex open-neighbourhood bitsets.
struct OpenRows {
    words: usize,
    bits: Vec<u64>,
}

impl OpenRows {
    fn new(store: &PairStore) -> Self {
        let n = store.n() as usize;
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; words * n];
        for p in store.open_pairs() {
            let (a, b) = (p.u as usize, p.v as usize);
            bits[a * words + b / 64] |= 1 << (b % 64);
            bits[b * words + a / 64] |= 1 << (a % 64);
        }
        OpenRows { words, bits }
    }

    fn row(&self, x: u32) -> &[u64] {
        let x = x as usize;
        &self.bits[x * self.words..(x + 1) * self.words]
    }

    fn common(&self, a: u32, b: u32) -> u64 {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| (x & y).count_ones() as u64)
            .sum()
    }
}

pub fn global_stats(store: &PairStore, mode: StatsMode) -> Result<GlobalStats> {
    let q = 2.0 * store.open_count() as f64;
    match mode {
        StatsMode::Exact { max_n } => {
            if store.n() > max_n {
                return Err(Error::Refused(format!(
                    "exact global counts limited to n <= {max_n}; use sampled mode"
                )));
            }
            let rows = OpenRows::new(store);
            let r: u64 = store.open_pairs().map(|p| rows.common(p.u, p.v)).sum();
            let s: u64 = store.edges().iter().map(|e| rows.common(e.u, e.v)).sum();
            Ok(GlobalStats {
                q,
                r: 2.0 * r as f64,
                s: 2.0 * s as f64,
                exact: true,
                std_err: None,
            })
        }
        StatsMode::Sampled { pairs, seed } => {
            if pairs < 2 {
                return Err(Error::invalid("sampled mode needs at least 2 pairs"));
            }
            let n = store.n();
            let mut rng = rng_from_seed(seed);
            let ordered = n as f64 * (n as f64 - 1.0);
            let (mut rs, mut ss) = (Vec::with_capacity(pairs), Vec::with_capacity(pairs));
            for _ in 0..pairs {
                let (a, b) = sample_ordered_pair(&mut rng, n);
                let (x, _, _) = codegree(store, a, b)?;
                let st = store.status_unchecked(a, b);
                rs.push(if st == PairStatus::Open { x as f64 } else { 0.0 });
                ss.push(if st == PairStatus::Edge { x as f64 } else { 0.0 });
            }
            let se = |v: &[f64]| ordered * (crate::stats::variance(v) / v.len() as f64).sqrt();
            Ok(GlobalStats {
                q,
                r: ordered * crate::stats::mean(&rs),
                s: ordered * crate::stats::mean(&ss),
                exact: false,
                std_err: Some((se(&rs), se(&ss))),
            })
        }
    }
}

fn sample_ordered_pair<R: Rng + ?Sized>(rng: &mut R, n: u32) -> (u32, u32) {
    let a = rng.gen_range(0..n);
    let b = (a + rng.gen_range(1..n)) % n;
    (a, b)
}

/// `(X_uv, Y_uv, Y_vu)`: common open neighbours, `#{w : uw open, vw edge}`
/// and its mirror.
pub fn codegree(store: &PairStore, u: u32, v: u32) -> Result<(u64, u64, u64)> {
    if u == v || u >= store.n() || v >= store.n() {
        return Err(Error::invalid(format!("codegree needs distinct vertices below n (got {u}, {v})")));
    }
    let x = (0..store.n())
        .filter(|&w| store.is_open(u, w) && store.is_open(v, w))
        .count() as u64;
    let y = |a: u32, b: u32| store.neighbors(b).iter().filter(|&&w| store.is_open(a, w)).count() as u64;
    Ok((x, y(u, v), y(v, u)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    pub min_y: u32,
    pub max_y: u32,
    pub mean_y: f64,
    pub min_x: u32,
    pub max_x: u32,
    pub mean_x: f64,
    /// `hist_y[d]` vertices of degree `d`.
    pub hist_y: Vec<u64>,
    pub hist_x: Vec<u64>,
}

pub fn degree_stats(store: &PairStore) -> DegreeStats {
    let n = store.n();
    let ys: Vec<u32> = (0..n).map(|x| store.degree(x)).collect();
    let xs: Vec<u32> = (0..n).map(|x| store.open_degree(x)).collect();
    let hist = |v: &[u32]| {
        let mut h = vec![0u64; *v.iter().max().unwrap_or(&0) as usize + 1];
        for &d in v {
            h[d as usize] += 1;
        }
        h
    };
    let mean = |v: &[u32]| v.iter().map(|&d| d as f64).sum::<f64>() / v.len() as f64;
    DegreeStats {
        min_y: *ys.iter().min().expect("n >= 2"),
        max_y: *ys.iter().max().expect("n >= 2"),
        mean_y: mean(&ys),
        min_x: *xs.iter().min().expect("n >= 2"),
        max_x: *xs.iter().max().expect("n >= 2"),
        mean_x: mean(&xs),
        hist_y: hist(&ys),
        hist_x: hist(&xs),
    }
}

/// Codegree summaries over a uniform sample of ordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodegreeSummary {
    pub pairs: usize,
    pub mean_xuv: f64,
    pub max_xuv: u64,
    pub mean_yuv: f64,
    pub max_yuv: u64,
}

pub fn codegree_sample(store: &PairStore, pairs: usize, seed: u64) -> Result<CodegreeSummary> {
    if pairs == 0 {
        return Err(Error::invalid("codegree sample needs at least one pair"));
    }
    let mut rng = rng_from_seed(seed);
    let (mut sx, mut sy, mut mx, mut my) = (0u64, 0u64, 0u64, 0u64);
    for _ in 0..pairs {
        let (u, v) = sample_ordered_pair(&mut rng, store.n());
        let (x, y, _) = codegree(store, u, v)?;
        sx += x;
        sy += y;
        mx = mx.max(x);
        my = my.max(y);
    }
    Ok(CodegreeSummary {
        pairs,
        mean_xuv: sx as f64 / pairs as f64,
        max_xuv: mx,
        mean_yuv: sy as f64 / pairs as f64,
        max_yuv: my,
    })
}

/// One snapshot of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub n: u32,
    pub seed: u64,
    pub i: u64,
    pub t: f64,
    pub stats: GlobalStats,
    /// Scalings `q`, `r`, `s`.
    pub predicted: (f64, f64, f64),
    /// Tracking values `𝒯Q`, `𝒯R`, `𝒯S`.
    pub tracking: (f64, f64, f64),
    /// `(V − 𝒯V)/v`.
    pub dev_tracking: (f64, f64, f64),
    /// `(V − v)/v`.
    pub dev_scaling: (f64, f64, f64),
    /// `log10 e_V` of the asymptotic error bands, for reference.
    pub log10_band: (f64, f64, f64),
    /// Whether `|V − 𝒯V| < e_V·v`.
    pub within_band: (bool, bool, bool),
    pub degrees: DegreeStats,
    pub codegrees: CodegreeSummary,
}

fn rel(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Deviations of observed counts from their tracking values and scalings.
pub fn deviation_report(
    stats: &GlobalStats,
    degrees: DegreeStats,
    codegrees: CodegreeSummary,
    ctx: &ScalingContext,
    seed: u64,
    params: &ErrorParams,
) -> Result<TrajectoryRecord> {
    let kinds = [VariableKind::Q, VariableKind::R, VariableKind::S];
    let obs = [stats.q, stats.r, stats.s];
    let mut pred = [0.0; 3];
    let mut track = [0.0; 3];
    let mut dt = [0.0; 3];
    let mut ds = [0.0; 3];
    let mut band = [0.0; 3];
    let mut inside = [false; 3];
    for k in 0..3 {
        pred[k] = scaling::scaling_of(&kinds[k], ctx)?;
        track[k] = scaling::tracking_value(&kinds[k], stats.q, ctx)?;
        dt[k] = rel(obs[k] - track[k], pred[k]);
        ds[k] = rel(obs[k] - pred[k], pred[k]);
        let b = scaling::error_band(&kinds[k], ctx, params);
        band[k] = b.log10_e();
        inside[k] = (obs[k] - track[k]).abs().ln() < b.ln_e + pred[k].ln() || obs[k] == track[k];
    }
    Ok(TrajectoryRecord {
        n: ctx.n as u32,
        seed,
        i: ctx.i as u64,
        t: ctx.t,
        stats: *stats,
        predicted: (pred[0], pred[1], pred[2]),
        tracking: (track[0], track[1], track[2]),
        dev_tracking: (dt[0], dt[1], dt[2]),
        dev_scaling: (ds[0], ds[1], ds[2]),
        log10_band: (band[0], band[1], band[2]),
        within_band: (inside[0], inside[1], inside[2]),
        degrees,
        codegrees,
    })
}

/// Computes every snapshot quantity for the current state of `store`,
/// taking `i` as its edge count.
pub fn snapshot_record(
    store: &PairStore,
    seed: u64,
    mode: StatsMode,
    codegree_pairs: usize,
    params: &ErrorParams,
) -> Result<TrajectoryRecord> {
    let ctx = ScalingContext::new(store.n() as f64, store.edge_count() as f64)?;
    let stats = global_stats(store, mode)?;
    let sample_seed = crate::rng::run_seed(seed, store.edge_count());
    let codeg = codegree_sample(store, codegree_pairs, sample_seed)?;
    deviation_report(&stats, degree_stats(store), codeg, &ctx, seed, params)
}

pub const CSV_HEADER: &str =
    "n,seed,i,t,Q,R,S,q,r,s,devQ,devR,devS,minY,maxY,meanY,minX,maxX,meanXuv,maxYuv";

impl TrajectoryRecord {
    pub fn csv_row(&self) -> String {
        let g = fmt_g9;
        [
            self.n.to_string(),
            self.seed.to_string(),
            self.i.to_string(),
            g(self.t),
            g(self.stats.q),
            g(self.stats.r),
            g(self.stats.s),
            g(self.predicted.0),
            g(self.predicted.1),
            g(self.predicted.2),
            g(self.dev_tracking.0),
            g(self.dev_tracking.1),
            g(self.dev_tracking.2),
            self.degrees.min_y.to_string(),
            self.degrees.max_y.to_string(),
            g(self.degrees.mean_y),
            self.degrees.min_x.to_string(),
            self.degrees.max_x.to_string(),
            g(self.codegrees.mean_xuv),
            self.codegrees.max_yuv.to_string(),
        ]
        .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PairKey;
    use crate::oracle;
    use crate::process::ProcessState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path() -> PairStore {
        PairStore::from_edges(4, &[PairKey::new(0, 1).unwrap(), PairKey::new(1, 2).unwrap()]).unwrap()
    }

    fn mid_state(n: u32, seed: u64, steps: u64) -> PairStore {
        let mut st = ProcessState::new(n, seed).unwrap();
        for _ in 0..steps {
            if st.step().is_err() {
                break;
            }
        }
        st.into_store()
    }

    #[test]
    fn global_examples() {
        let g = global_stats(&PairStore::new_empty(4).unwrap(), StatsMode::default()).unwrap();
        assert_eq!((g.q, g.r, g.s), (12.0, 24.0, 0.0));
        let g = global_stats(&path(), StatsMode::default()).unwrap();
        assert_eq!((g.q, g.r, g.s), (6.0, 0.0, 4.0));
        let big = PairStore::new_empty(100).unwrap();
        assert!(global_stats(&big, StatsMode::Exact { max_n: 50 }).is_err());
        let g = global_stats(&big, StatsMode::Exact { max_n: 100 }).unwrap();
        assert_eq!(g.r, 100.0 * 99.0 * 98.0);
    }

    #[test]
    fn global_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(3..=32u32);
            let st = mid_state(n, rng.gen(), rng.gen_range(0..=n as u64 * 2));
            let g = global_stats(&st, StatsMode::default()).unwrap();
            let (q, r, s) = oracle::brute_global_counts(n, st.edges());
            assert_eq!((g.q, g.r, g.s), (q as f64, r as f64, s as f64));
            assert_eq!(g.q, 2.0 * st.open_count() as f64);
        }
    }

    #[test]
    fn sampled_is_unbiased() {
        let st = mid_state(64, 7, 120);
        let exact = global_stats(&st, StatsMode::default()).unwrap();
        let (mut rs, mut ss) = (Vec::new(), Vec::new());
        for k in 0..200 {
            let g = global_stats(&st, StatsMode::Sampled { pairs: 100, seed: k }).unwrap();
            rs.push(g.r);
            ss.push(g.s);
        }
        for (v, want) in [(&rs, exact.r), (&ss, exact.s)] {
            let se = (crate::stats::variance(v) / v.len() as f64).sqrt();
            assert!((crate::stats::mean(v) - want).abs() < 3.0 * se + 1e-9);
        }
    }

    #[test]
    fn codegree_examples() {
        let e = PairStore::new_empty(7).unwrap();
        assert_eq!(codegree(&e, 2, 5).unwrap(), (5, 0, 0));
        let p = path();
        assert_eq!(codegree(&p, 3, 1).unwrap().1, 2);
        assert_eq!(codegree(&p, 0, 2).unwrap().0, 1);
        assert!(codegree(&p, 1, 1).is_err());
    }

    #[test]
    fn y_two_ways() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(3..=40u32);
            let st = mid_state(n, rng.gen(), rng.gen_range(0..=n as u64));
            let u = rng.gen_range(0..n);
            let v = (u + rng.gen_range(1..n)) % n;
            let scan = (0..n).filter(|&w| st.is_open(u, w) && st.is_edge(v, w)).count() as u64;
            assert_eq!(codegree(&st, u, v).unwrap().1, scan);
        }
    }

    #[test]
    fn degree_examples() {
        let d = degree_stats(&PairStore::new_empty(6).unwrap());
        assert_eq!((d.max_y, d.min_x, d.max_x), (0, 5, 5));
        let st = crate::process::run_seeded(3, 1).unwrap();
        let mut degs: Vec<u32> = (0..3).map(|x| st.degree(x)).collect();
        degs.sort();
        assert_eq!(degs, vec![1, 1, 2]);
        for seed in 0..100 {
            let n = 2 + (seed as u32 % 63);
            let st = mid_state(n, seed, seed * 3);
            let d = degree_stats(&st);
            let sum_y: u64 = d.hist_y.iter().enumerate().map(|(k, c)| k as u64 * c).sum();
            let sum_x: u64 = d.hist_x.iter().enumerate().map(|(k, c)| k as u64 * c).sum();
            assert_eq!(sum_y, 2 * st.edge_count());
            assert_eq!(sum_x, 2 * st.open_count());
        }
    }

    #[test]
    fn deviation_examples() {
        let n = 50u32;
        let st = PairStore::new_empty(n).unwrap();
        let rec = snapshot_record(&st, 1, StatsMode::default(), 16, &ErrorParams::default()).unwrap();
        assert!((rec.dev_tracking.0 + 1.0 / n as f64).abs() < 1e-12);
        assert_eq!(rec.dev_tracking.2, 0.0);
        let stats = GlobalStats { q: 100.0, r: 1000.0, s: 0.0, exact: true, std_err: None };
        let ctx = ScalingContext::new(10.0, 0.0).unwrap();
        let rec = deviation_report(&stats, degree_stats(&st), rec.codegrees, &ctx, 0, &ErrorParams::default()).unwrap();
        assert_eq!(rec.dev_tracking, (0.0, 0.0, 0.0));
        assert!(rec.within_band.0);
    }

    #[test]
    fn csv_row_shape() {
        let st = mid_state(40, 2, 30);
        let rec = snapshot_record(&st, 2, StatsMode::default(), 32, &ErrorParams::default()).unwrap();
        let row = rec.csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("40,2,30,"));
        for x in [rec.dev_tracking.0, rec.dev_tracking.1, rec.dev_tracking.2] {
            assert!(x.is_finite());
        }
    }
}
