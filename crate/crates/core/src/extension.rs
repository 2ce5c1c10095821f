//! General extension variables `X_{φ,J,Γ}`.
//!
//! A pattern has `vertex_count` vertices, a base `A`, a list of pairs that
//! must map to edges (`J`) and a list that must map to open pairs
//! (`Γ ∖ J`). Pairs with both ends in the base carry no constraint when
//! counting. Vertex sets are `u64` bitmasks, so patterns have at most 64
//! vertices.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::PairStore;
use crate::scaling::{ErrorParams, ScalingContext};

/// Counting refuses patterns with more free vertices than this.
pub const MAX_FREE_VERTICES: usize = 16;
/// Exhaustive subset scans (balance, series) are limited to this many free
/// vertices.
pub const MAX_SCAN_VERTICES: usize = 20;

/// Exponents of `n^a·p^b·q̂^c`. Products of scalings add exponents exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScalingExponents {
    pub n: i64,
    pub p: i64,
    pub q: i64,
}

impl ScalingExponents {
    pub fn ln_value(&self, ctx: &ScalingContext) -> f64 {
        let mut acc = self.n as f64 * ctx.ln_n();
        if self.p != 0 {
            acc += self.p as f64 * ctx.ln_p();
        }
        if self.q != 0 {
            acc += self.q as f64 * ctx.ln_q_hat();
        }
        acc
    }

    pub fn value(&self, ctx: &ScalingContext) -> f64 {
        self.ln_value(ctx).exp()
    }
}

impl std::ops::Add for ScalingExponents {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        ScalingExponents {
            n: self.n + o.n,
            p: self.p + o.p,
            q: self.q + o.q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Need {
    Edge,
    Open,
}

/// An extension `(A, J, Γ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionPattern {
    vertex_count: usize,
    base: Vec<usize>,
    edges: Vec<(usize, usize)>,
    opens: Vec<(usize, usize)>,
}

fn bit(x: usize) -> u64 {
    1u64 << x
}

fn inside(mask: u64, (a, b): (usize, usize)) -> bool {
    mask & bit(a) != 0 && mask & bit(b) != 0
}

impl ExtensionPattern {
    /// Validates ranges, loops, duplicates and that no pair is both an
    /// edge and open. `Γ` need not be triangle-free.
    pub fn new(
        vertex_count: usize,
        base: Vec<usize>,
        edges: Vec<(usize, usize)>,
        opens: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if vertex_count == 0 || vertex_count > 64 {
            return Err(Error::invalid(format!("vertex count {vertex_count} outside 1..=64")));
        }
        let mut seen_base = 0u64;
        for &b in &base {
            if b >= vertex_count || seen_base & bit(b) != 0 {
                return Err(Error::invalid(format!("bad or repeated base vertex {b}")));
            }
            seen_base |= bit(b);
        }
        let mut pairs = std::collections::HashSet::new();
        let norm = |&(a, b): &(usize, usize)| -> Result<(usize, usize)> {
            if a >= vertex_count || b >= vertex_count {
                return Err(Error::invalid(format!("pair ({a},{b}) out of range")));
            }
            if a == b {
                return Err(Error::invalid(format!("loop ({a},{a})")));
            }
            Ok((a.min(b), a.max(b)))
        };
        let mut e2 = Vec::with_capacity(edges.len());
        let mut o2 = Vec::with_capacity(opens.len());
        for p in &edges {
            let p = norm(p)?;
            if !pairs.insert(p) {
                return Err(Error::invalid(format!("duplicate pair ({},{})", p.0, p.1)));
            }
            e2.push(p);
        }
        for p in &opens {
            let p = norm(p)?;
            if !pairs.insert(p) {
                return Err(Error::invalid(format!(
                    "pair ({},{}) repeated or both edge and open",
                    p.0, p.1
                )));
            }
            o2.push(p);
        }
        Ok(ExtensionPattern {
            vertex_count,
            base,
            edges: e2,
            opens: o2,
        })
    }

    /// The `h`-fan at base `abc` (vertices 0, 1, 2): new vertices
    /// `v_1..v_h` (3..h+3), a path `b v_1 … v_h c` whose pairs are edges
    /// where `path_edges` says so and open otherwise, and `a v_i` open.
    pub fn fan(h: usize, path_edges: &[bool]) -> Result<Self> {
        if h == 0 || path_edges.len() != h + 1 {
            return Err(Error::invalid("a fan needs h >= 1 and h+1 path flags"));
        }
        let mut path = vec![1];
        path.extend(3..3 + h);
        path.push(2);
        let mut edges = Vec::new();
        let mut opens: Vec<(usize, usize)> = (3..3 + h).map(|v| (0, v)).collect();
        for (k, w) in path.windows(2).enumerate() {
            if path_edges[k] {
                edges.push((w[0], w[1]));
            } else {
                opens.push((w[0], w[1]));
            }
        }
        Self::new(h + 3, vec![0, 1, 2], edges, opens)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn base(&self) -> &[usize] {
        &self.base
    }

    pub fn edge_pairs(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn open_pairs(&self) -> &[(usize, usize)] {
        &self.opens
    }

    pub fn base_mask(&self) -> u64 {
        self.base.iter().fold(0, |m, &b| m | bit(b))
    }

    pub fn full_mask(&self) -> u64 {
        if self.vertex_count == 64 {
            u64::MAX
        } else {
            bit(self.vertex_count) - 1
        }
    }

    fn free_vertices(&self) -> Vec<usize> {
        let bm = self.base_mask();
        (0..self.vertex_count).filter(|&x| bm & bit(x) == 0).collect()
    }

    /// `n(V)`.
    pub fn n_v(&self) -> usize {
        self.vertex_count - self.base.len()
    }

    /// `e(V)`.
    pub fn e_v(&self) -> usize {
        let bm = self.base_mask();
        self.edges.iter().filter(|&&p| !inside(bm, p)).count()
    }

    /// `o(V)`.
    pub fn o_v(&self) -> usize {
        let bm = self.base_mask();
        self.opens.iter().filter(|&&p| !inside(bm, p)).count()
    }

    fn induced(&self, mask: u64) -> ScalingExponents {
        ScalingExponents {
            n: mask.count_ones() as i64,
            p: self.edges.iter().filter(|&&p| inside(mask, p)).count() as i64,
            q: self.opens.iter().filter(|&&p| inside(mask, p)).count() as i64,
        }
    }

    /// Exponents of `S^{B'}_B`.
    pub fn exponents(&self, b: u64, b_prime: u64) -> Result<ScalingExponents> {
        let a = self.base_mask();
        let full = self.full_mask();
        if a & !b != 0 || b & !b_prime != 0 || b_prime & !full != 0 {
            return Err(Error::invalid("scaling needs A ⊆ B ⊆ B' ⊆ V"));
        }
        let hi = self.induced(b_prime);
        let lo = self.induced(b);
        Ok(ScalingExponents {
            n: hi.n - lo.n,
            p: hi.p - lo.p,
            q: hi.q - lo.q,
        })
    }

    /// `S^{B'}_B` at `ctx`.
    pub fn scaling(&self, b: u64, b_prime: u64, ctx: &ScalingContext) -> Result<f64> {
        Ok(self.exponents(b, b_prime)?.value(ctx))
    }

    fn check_scan(&self) -> Result<Vec<usize>> {
        let free = self.free_vertices();
        if free.len() > MAX_SCAN_VERTICES {
            return Err(Error::Refused(format!(
                "subset scan over {} free vertices exceeds {MAX_SCAN_VERTICES}",
                free.len()
            )));
        }
        Ok(free)
    }

    /// Every `B` with `from ⊊ B ⊊ V`, as masks.
    fn intermediate_sets(&self, from: u64) -> Result<Vec<u64>> {
        self.check_scan()?;
        let full = self.full_mask();
        let rest: Vec<usize> = (0..self.vertex_count).filter(|&x| from & bit(x) == 0).collect();
        let mut out = Vec::new();
        for sub in 1u64..(1u64 << rest.len()) {
            let mut m = from;
            for (k, &x) in rest.iter().enumerate() {
                if sub >> k & 1 == 1 {
                    m |= bit(x);
                }
            }
            if m != full {
                out.push(m);
            }
        }
        Ok(out)
    }

    fn balanced_from(&self, from: u64, ctx: &ScalingContext) -> Result<bool> {
        let full = self.full_mask();
        for b in self.intermediate_sets(from)? {
            if self.exponents(b, full)?.ln_value(ctx) >= 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `S^V_B < 1` for every `A ⊊ B ⊊ V`.
    pub fn is_strictly_balanced(&self, ctx: &ScalingContext) -> Result<bool> {
        self.balanced_from(self.base_mask(), ctx)
    }

    /// The extension series `A = B_0 ⊊ B_1 ⊊ … ⊊ B_d = V`. Each step takes
    /// a set `C` minimising `S^C_{B_i}`; ties go to the smaller set, then to
    /// the lexicographically smaller sorted vertex list.
    pub fn extension_series(&self, ctx: &ScalingContext) -> Result<Vec<u64>> {
        let full = self.full_mask();
        let mut chain = vec![self.base_mask()];
        loop {
            let cur = *chain.last().expect("nonempty");
            if cur == full {
                return Ok(chain);
            }
            if self.balanced_from(cur, ctx)? {
                chain.push(full);
                return Ok(chain);
            }
            let mut best: Option<(u64, ScalingExponents, f64)> = None;
            for c in self.intermediate_sets(cur)? {
                let ex = self.exponents(cur, c)?;
                let lv = ex.ln_value(ctx);
                let better = match &best {
                    None => true,
                    Some((bc, bex, blv)) => {
                        if ex == *bex || lv == *blv {
                            set_order(c, *bc) == std::cmp::Ordering::Less
                        } else {
                            lv < *blv
                        }
                    }
                };
                if better {
                    best = Some((c, ex, lv));
                }
            }
            chain.push(best.expect("unbalanced implies an intermediate set").0);
        }
    }

    /// `min ln S^B_A` over `A ⊊ B ⊆ V` by enumerating subsets, with the
    /// minimising `B`.
    pub fn ln_min_scaling_scan(&self, ctx: &ScalingContext) -> Result<(f64, u64)> {
        let a = self.base_mask();
        let full = self.full_mask();
        let mut sets = self.intermediate_sets(a)?;
        if a != full {
            sets.push(full);
        }
        let mut best = (f64::INFINITY, full);
        for b in sets {
            let v = self.exponents(a, b)?.ln_value(ctx);
            if v < best.0 {
                best = (v, b);
            }
        }
        Ok(best)
    }

    /// `min ln S^B_A` over `A ⊊ B ⊆ V` by minimum cuts, which handles
    /// patterns far beyond subset-scan size.
    ///
    /// With `s_uv = ln p` on `J` pairs and `ln q̂` on open pairs, and `x` the
    /// indicator of `B ∖ A`, `ln S = Σ_v (ln n + Σ_{a∈A} s_av) x_v +
    /// Σ s_uv x_u x_v`. Writing `x_u x_v = ½(x_u + x_v − [x_u ≠ x_v])` turns
    /// the quadratic part into a cut with weights `−s_uv/2 ≥ 0`. Each free
    /// vertex is forced into `B` in turn.
    pub fn ln_min_scaling(&self, ctx: &ScalingContext) -> Result<(f64, u64)> {
        let free = self.free_vertices();
        if free.is_empty() {
            return Ok((f64::INFINITY, self.full_mask()));
        }
        let (lp, lq) = (ctx.ln_p(), ctx.ln_q_hat());
        if !(lp <= 0.0 && lq <= 0.0) || lp == f64::NEG_INFINITY {
            if lp == f64::NEG_INFINITY && self.e_v() > 0 {
                return Ok((f64::NEG_INFINITY, self.full_mask()));
            }
            return self.ln_min_scaling_scan(ctx);
        }
        let k = free.len();
        let mut pos = vec![usize::MAX; self.vertex_count];
        for (i, &x) in free.iter().enumerate() {
            pos[x] = i;
        }
        let mut unary = vec![ctx.ln_n(); k];
        let mut cut = vec![vec![0.0f64; k]; k];
        let bm = self.base_mask();
        let pairs = self
            .edges
            .iter()
            .map(|&p| (p, lp))
            .chain(self.opens.iter().map(|&p| (p, lq)));
        for ((a, b), s) in pairs {
            match (bm & bit(a) != 0, bm & bit(b) != 0) {
                (true, true) => {}
                (true, false) => unary[pos[b]] += s,
                (false, true) => unary[pos[a]] += s,
                (false, false) => {
                    let (i, j) = (pos[a], pos[b]);
                    unary[i] += s / 2.0;
                    unary[j] += s / 2.0;
                    cut[i][j] -= s / 2.0;
                    cut[j][i] -= s / 2.0;
                }
            }
        }
        let offset: f64 = unary.iter().filter(|&&u| u < 0.0).sum();
        let mut best = (f64::INFINITY, self.full_mask());
        for forced in 0..k {
            // Nodes: 0..k free vertices, k source, k+1 sink.
            let (s, t) = (k, k + 1);
            let mut cap = vec![vec![0.0f64; k + 2]; k + 2];
            for i in 0..k {
                if unary[i] > 0.0 {
                    cap[i][t] += unary[i];
                } else {
                    cap[s][i] += -unary[i];
                }
                for j in 0..k {
                    cap[i][j] += cut[i][j];
                }
            }
            cap[s][forced] = f64::INFINITY;
            let (value, side) = min_cut(cap, s, t);
            let lv = value + offset;
            if lv < best.0 {
                let mut mask = bm;
                for (i, &x) in free.iter().enumerate() {
                    if side[i] {
                        mask |= bit(x);
                    }
                }
                best = (lv, mask);
            }
        }
        Ok(best)
    }

    /// Controllable at `t'` with the default lower endpoint `t = 1`.
    pub fn is_controllable(&self, n: f64, t_prime: f64, params: &ErrorParams) -> Result<bool> {
        if t_prime < 1.0 {
            return Err(Error::invalid(format!("t' must be at least 1, got {t_prime}")));
        }
        self.is_controllable_between(n, 1.0, t_prime, params.delta)
    }

    /// `J ≠ Γ` and `S^B_A(t) ≥ n^δ` for all `A ⊊ B ⊆ V` and
    /// `t ∈ [t_lower, t']`. Each `S^B_A(t) = C·t^a·e^{−4bt²}` is unimodal in
    /// `t`, so only the endpoints are evaluated.
    pub fn is_controllable_between(&self, n: f64, t_lower: f64, t_prime: f64, delta: f64) -> Result<bool> {
        if !(t_lower >= 0.0 && t_lower <= t_prime) {
            return Err(Error::invalid(format!("need 0 <= t_lower <= t' (got {t_lower}, {t_prime})")));
        }
        if self.opens.is_empty() {
            return Ok(false);
        }
        let threshold = delta * n.ln();
        for t in [t_lower, t_prime] {
            let ctx = ScalingContext::at_time(n, t)?;
            if self.ln_min_scaling(&ctx)?.0 < threshold {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn check_phi(&self, store: &PairStore, phi: &[u32]) -> Result<()> {
        if phi.len() != self.base.len() {
            return Err(Error::invalid(format!(
                "base has {} vertices, assignment has {}",
                self.base.len(),
                phi.len()
            )));
        }
        for (i, &x) in phi.iter().enumerate() {
            if x >= store.n() {
                return Err(Error::invalid(format!("vertex {x} out of range")));
            }
            if phi[..i].contains(&x) {
                return Err(Error::invalid(format!("assignment repeats vertex {x}")));
            }
        }
        Ok(())
    }

    /// Number of injections extending `phi` (images of `base` in order)
    /// with every `J` pair an edge and every open pair open, ignoring pairs
    /// inside the base.
    pub fn count_embeddings(&self, store: &PairStore, phi: &[u32]) -> Result<u64> {
        let mut count = 0u64;
        self.for_each_embedding(store, phi, |_| count += 1)?;
        Ok(count)
    }

    /// Calls `visit` with the full image vector of every embedding counted
    /// by [`count_embeddings`](Self::count_embeddings).
    pub fn for_each_embedding(
        &self,
        store: &PairStore,
        phi: &[u32],
        mut visit: impl FnMut(&[u32]),
    ) -> Result<()> {
        self.check_phi(store, phi)?;
        let free = self.free_vertices();
        if free.len() > MAX_FREE_VERTICES {
            return Err(Error::Refused(format!(
                "{} free vertices exceed the counting limit of {MAX_FREE_VERTICES}",
                free.len()
            )));
        }
        let plan = self.plan();
        let mut img = vec![u32::MAX; self.vertex_count];
        let mut used = vec![false; store.n() as usize];
        for (&b, &x) in self.base.iter().zip(phi) {
            img[b] = x;
            used[x as usize] = true;
        }
        extend(store, &plan, 0, &mut img, &mut used, &mut visit);
        Ok(())
    }

    /// Greedy placement order: next is the free vertex with an edge
    /// constraint to the placed set if any, then the most constraints.
    fn plan(&self) -> Vec<Step> {
        let mut placed = self.base_mask();
        let mut free = self.free_vertices();
        let mut plan = Vec::with_capacity(free.len());
        let constraints = |x: usize, placed: u64| -> Vec<(usize, Need)> {
            let e = self.edges.iter().map(|&p| (p, Need::Edge));
            let o = self.opens.iter().map(|&p| (p, Need::Open));
            e.chain(o)
                .filter_map(|((a, b), k)| {
                    if a == x && placed & bit(b) != 0 {
                        Some((b, k))
                    } else if b == x && placed & bit(a) != 0 {
                        Some((a, k))
                    } else {
                        None
                    }
                })
                .collect()
        };
        while !free.is_empty() {
            let (idx, cons) = free
                .iter()
                .enumerate()
                .map(|(i, &x)| (i, constraints(x, placed)))
                .max_by_key(|(i, c)| {
                    let has_edge = c.iter().any(|&(_, k)| k == Need::Edge);
                    (has_edge, c.len(), std::cmp::Reverse(*i))
                })
                .expect("nonempty");
            let x = free.remove(idx);
            placed |= bit(x);
            plan.push(Step { vertex: x, cons });
        }
        plan
    }

    /// Whether some edge of the graph between base images, pulled back to
    /// the pattern, closes a triangle in `J` plus the pulled-back edges or
    /// forms a two-edge path between the ends of an open pair.
    pub fn is_bad(&self, phi: &[u32], store: &PairStore) -> Result<bool> {
        self.check_phi(store, phi)?;
        let k = self.vertex_count;
        let mut jplus = vec![0u64; k];
        for &(a, b) in &self.edges {
            jplus[a] |= bit(b);
            jplus[b] |= bit(a);
        }
        let mut pulled = Vec::new();
        for i in 0..self.base.len() {
            for j in i + 1..self.base.len() {
                if store.is_edge(phi[i], phi[j]) {
                    let (a, b) = (self.base[i], self.base[j]);
                    pulled.push((a, b));
                    jplus[a] |= bit(b);
                    jplus[b] |= bit(a);
                }
            }
        }
        let mut open = vec![0u64; k];
        for &(a, b) in &self.opens {
            open[a] |= bit(b);
            open[b] |= bit(a);
        }
        for &(a, b) in &pulled {
            if jplus[a] & jplus[b] != 0 {
                return Ok(true);
            }
            // Paths x-a-b or a-b-y ending at an open partner.
            if jplus[b] & open[a] & !bit(b) != 0 || jplus[a] & open[b] & !bit(a) != 0 {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Smaller sets first, then lexicographic order of sorted vertex lists.
fn set_order(a: u64, b: u64) -> std::cmp::Ordering {
    a.count_ones().cmp(&b.count_ones()).then_with(|| {
        let la: Vec<u32> = (0..64).filter(|&x| a >> x & 1 == 1).collect();
        let lb: Vec<u32> = (0..64).filter(|&x| b >> x & 1 == 1).collect();
        la.cmp(&lb)
    })
}

struct Step {
    vertex: usize,
    cons: Vec<(usize, Need)>,
}

fn extend(
    store: &PairStore,
    plan: &[Step],
    depth: usize,
    img: &mut [u32],
    used: &mut [bool],
    leaf: &mut dyn FnMut(&[u32]),
) {
    let Some(step) = plan.get(depth) else {
        leaf(img);
        return;
    };
    let fits = |w: u32, img: &[u32]| {
        step.cons.iter().all(|&(y, k)| match k {
            Need::Edge => store.is_edge(img[y], w),
            Need::Open => store.is_open(img[y], w),
        })
    };
    let anchor = step.cons.iter().find(|&&(_, k)| k == Need::Edge).map(|&(y, _)| img[y]);
    let mut visit = |w: u32, img: &mut [u32], used: &mut [bool]| {
        if used[w as usize] || !fits(w, img) {
            return;
        }
        img[step.vertex] = w;
        used[w as usize] = true;
        extend(store, plan, depth + 1, img, used, leaf);
        used[w as usize] = false;
        img[step.vertex] = u32::MAX;
    };
    match anchor {
        Some(a) => {
            for &w in store.neighbors(a) {
                visit(w, img, used);
            }
        }
        None => {
            for w in 0..store.n() {
                visit(w, img, used);
            }
        }
    }
}

/// Edmonds–Karp on a dense capacity matrix. Returns the cut value and the
/// source side.
fn min_cut(mut cap: Vec<Vec<f64>>, s: usize, t: usize) -> (f64, Vec<bool>) {
    let m = cap.len();
    let eps = 1e-12;
    let mut flow = 0.0;
    loop {
        let mut prev = vec![usize::MAX; m];
        prev[s] = s;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for y in 0..m {
                if prev[y] == usize::MAX && cap[x][y] > eps {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if prev[t] == usize::MAX {
            let side = prev.iter().map(|&p| p != usize::MAX).collect();
            return (flow, side);
        }
        let mut aug = f64::INFINITY;
        let mut y = t;
        while y != s {
            aug = aug.min(cap[prev[y]][y]);
            y = prev[y];
        }
        let mut y = t;
        while y != s {
            let x = prev[y];
            cap[x][y] -= aug;
            cap[y][x] += aug;
            y = x;
        }
        flow += aug;
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected [..], got {s:?}")))?;
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad vertex {x:?}"))))
        .collect()
}

fn parse_pairs(s: &str) -> Result<Vec<(usize, usize)>> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected [..], got {s:?}")))?;
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    let inner = inner
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("expected (a,b) pairs, got {inner:?}")))?;
    inner
        .split("),(")
        .map(|p| {
            let (a, b) = p
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad pair {p:?}")))?;
            let a = a.parse().map_err(|_| Error::Parse(format!("bad vertex {a:?}")))?;
            let b = b.parse().map_err(|_| Error::Parse(format!("bad vertex {b:?}")))?;
            Ok((a, b))
        })
        .collect()
}

/// `vertices=k; base=[..]; edges=[(a,b),..]; opens=[(c,d),..]`. Whitespace
/// is ignored; `base`, `edges` and `opens` default to empty.
impl FromStr for ExtensionPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut vertices = None;
        let (mut base, mut edges, mut opens) = (Vec::new(), Vec::new(), Vec::new());
        for field in compact.split(';').filter(|f| !f.is_empty()) {
            let (key, val) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {field:?}")))?;
            match key {
                "vertices" => {
                    vertices = Some(val.parse().map_err(|_| Error::Parse(format!("bad vertex count {val:?}")))?)
                }
                "base" => base = parse_list(val)?,
                "edges" => edges = parse_pairs(val)?,
                "opens" => opens = parse_pairs(val)?,
                other => return Err(Error::Parse(format!("unknown field {other:?}"))),
            }
        }
        let vertices = vertices.ok_or_else(|| Error::Parse("missing vertices=".into()))?;
        ExtensionPattern::new(vertices, base, edges, opens)
    }
}

impl fmt::Display for ExtensionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let pairs = |v: &[(usize, usize)]| {
            v.iter().map(|(a, b)| format!("({a},{b})")).collect::<Vec<_>>().join(",")
        };
        write!(
            f,
            "vertices={}; base=[{}]; edges=[{}]; opens=[{}]",
            self.vertex_count,
            list(&self.base),
            pairs(&self.edges),
            pairs(&self.opens)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PairKey;
    use crate::oracle;
    use crate::process::ProcessState;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path_store() -> PairStore {
        PairStore::from_edges(4, &[PairKey::new(0, 1).unwrap(), PairKey::new(1, 2).unwrap()]).unwrap()
    }

    fn y_pattern() -> ExtensionPattern {
        // u = 0, v = 1, w = 2: uw open, vw edge.
        "vertices=3; base=[0,1]; edges=[(1,2)]; opens=[(0,2)]".parse().unwrap()
    }

    #[test]
    fn literal_round_trip() {
        let p = y_pattern();
        assert_eq!(p.to_string(), "vertices=3; base=[0,1]; edges=[(1,2)]; opens=[(0,2)]");
        assert_eq!(p.to_string().parse::<ExtensionPattern>().unwrap(), p);
        assert_eq!((p.n_v(), p.e_v(), p.o_v()), (1, 1, 1));
        assert!("vertices=3; base=[0]; edges=[(0,1)]; opens=[(1,0)]".parse::<ExtensionPattern>().is_err());
        assert!("vertices=2; edges=[(0,2)]".parse::<ExtensionPattern>().is_err());
        assert!("base=[0]".parse::<ExtensionPattern>().is_err());
        assert!("vertices=2; colour=[0]".parse::<ExtensionPattern>().is_err());
    }

    #[test]
    fn count_examples() {
        let st = path_store();
        assert_eq!(y_pattern().count_embeddings(&st, &[3, 1]).unwrap(), 2);
        let xu: ExtensionPattern = "vertices=2; base=[0]; opens=[(0,1)]".parse().unwrap();
        let empty = PairStore::new_empty(9).unwrap();
        assert_eq!(xu.count_embeddings(&empty, &[4]).unwrap(), 8);
        assert!(y_pattern().count_embeddings(&st, &[3, 3]).is_err());
        assert!(y_pattern().count_embeddings(&st, &[3]).is_err());
    }

    #[test]
    fn refuses_large_patterns() {
        let p = ExtensionPattern::new(18, vec![0], vec![], (1..18).map(|v| (0, v)).collect()).unwrap();
        let st = PairStore::new_empty(20).unwrap();
        assert!(matches!(p.count_embeddings(&st, &[0]), Err(Error::Refused(_))));
    }

    fn random_pattern(rng: &mut ChaCha8Rng, max_free: usize) -> ExtensionPattern {
        let nb = rng.gen_range(0..=2usize);
        let nf = rng.gen_range(1..=max_free);
        let k = nb + nf;
        let (mut edges, mut opens) = (Vec::new(), Vec::new());
        for a in 0..k {
            for b in a + 1..k {
                match rng.gen_range(0..6) {
                    0 => edges.push((a, b)),
                    1 | 2 => opens.push((a, b)),
                    _ => {}
                }
            }
        }
        ExtensionPattern::new(k, (0..nb).collect(), edges, opens).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, n: u32) -> PairStore {
        let mut st = ProcessState::new(n, rng.gen()).unwrap();
        let steps = rng.gen_range(0..=n as u64 * 2);
        for _ in 0..steps {
            if st.step().is_err() {
                break;
            }
        }
        st.into_store()
    }

    #[test]
    fn count_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..150 {
            let n = rng.gen_range(4..=9u32);
            let st = random_state(&mut rng, n);
            let pat = random_pattern(&mut rng, 3);
            let mut phi: Vec<u32> = Vec::new();
            while phi.len() < pat.base().len() {
                let x = rng.gen_range(0..n);
                if !phi.contains(&x) {
                    phi.push(x);
                }
            }
            let fast = pat.count_embeddings(&st, &phi).unwrap();
            let slow = oracle::brute_embeddings(
                n,
                st.edges(),
                pat.vertex_count(),
                pat.base(),
                &phi,
                pat.edge_pairs(),
                pat.open_pairs(),
            );
            assert_eq!(fast, slow, "case {case}: {pat}");
        }
    }

    #[test]
    fn scaling_identities() {
        let ctx = ScalingContext::at_time(1e4, 0.8).unwrap();
        let y = y_pattern();
        let a = y.base_mask();
        assert_eq!(y.scaling(a, a, &ctx).unwrap(), 1.0);
        let full = y.scaling(a, y.full_mask(), &ctx).unwrap();
        let want = crate::scaling::scaling_of(&crate::scaling::VariableKind::Yuv, &ctx).unwrap();
        assert!(((full - want) / want).abs() < 1e-12);
        assert!(y.scaling(y.full_mask(), a, &ctx).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = random_pattern(&mut rng, 5);
            let a = p.base_mask();
            let full = p.full_mask();
            let extra = |m: u64, rng: &mut ChaCha8Rng| m | (rng.gen::<u64>() & full);
            let b = extra(a, &mut rng);
            let b2 = extra(b, &mut rng);
            let lhs = p.exponents(a, b2).unwrap();
            let rhs = p.exponents(a, b).unwrap() + p.exponents(b, b2).unwrap();
            assert_eq!(lhs, rhs);
            let (l, r) = (
                p.scaling(a, b2, &ctx).unwrap(),
                p.scaling(a, b, &ctx).unwrap() * p.scaling(b, b2, &ctx).unwrap(),
            );
            assert!(((l - r) / l).abs() < 1e-12);
        }
    }

    /// K4 with two adjacent edges and four open pairs, empty base.
    fn k4_config() -> ExtensionPattern {
        "vertices=4; base=[]; edges=[(0,1),(0,2)]; opens=[(0,3),(1,2),(1,3),(2,3)]".parse().unwrap()
    }

    #[test]
    fn strict_balance() {
        let ctx = ScalingContext::at_time(1e4, 1.0).unwrap();
        assert!(y_pattern().is_strictly_balanced(&ctx).unwrap());
        let xuv: ExtensionPattern = "vertices=3; base=[0,1]; opens=[(0,2),(1,2)]".parse().unwrap();
        assert!(xuv.is_strictly_balanced(&ScalingContext::at_time(1e4, 0.1).unwrap()).unwrap());

        let k4 = k4_config();
        let (n, p, q) = (1e4f64, ctx.p, ctx.q_hat);
        // Hand values of S^V_B for a few B.
        let hand = [
            (0b0001u64, n.powi(3) * p * p * q.powi(4)),
            (0b1000, n.powi(3) * p * p * q.powi(4)),
            (0b0011, n.powi(2) * p * q.powi(4)),
            (0b0110, n.powi(2) * p * p * q.powi(3)),
            (0b0111, n * q.powi(3)),
            (0b1110, n * p * p * q),
        ];
        for (b, want) in hand {
            let got = k4.scaling(b, k4.full_mask(), &ctx).unwrap();
            assert!(((got - want) / want).abs() < 1e-12, "B={b:04b}");
        }
        let want = (1u64..15).all(|b| k4.scaling(b, 15, &ctx).unwrap() < 1.0);
        assert_eq!(k4.is_strictly_balanced(&ctx).unwrap(), want);
        assert!(!want);
    }

    #[test]
    fn series_examples() {
        let ctx = ScalingContext::at_time(1e4, 1.0).unwrap();
        let y = y_pattern();
        assert_eq!(y.extension_series(&ctx).unwrap(), vec![y.base_mask(), y.full_mask()]);

        // Dense part {v1, v2}: edges to the base and between them, so its
        // scaling is tiny; a pendant open pair to v3 then has scaling n·q̂.
        let p: ExtensionPattern =
            "vertices=5; base=[0,1]; edges=[(0,2),(1,2),(0,3),(1,3),(2,3)]; opens=[(2,4)]"
                .parse()
                .unwrap();
        let dense = 0b01111;
        assert!(p.scaling(p.base_mask(), dense, &ctx).unwrap() < 1.0);
        assert!(p.scaling(dense, p.full_mask(), &ctx).unwrap() > 1.0);
        let chain = p.extension_series(&ctx).unwrap();
        assert_eq!(chain[1], dense);
        assert_eq!(*chain.last().unwrap(), p.full_mask());
    }

    #[test]
    fn series_chains_increase() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let p = random_pattern(&mut rng, 6);
            let ctx = ScalingContext::at_time(1e5, rng.gen_range(0.2..1.5)).unwrap();
            let chain = p.extension_series(&ctx).unwrap();
            assert_eq!(chain[0], p.base_mask());
            assert_eq!(*chain.last().unwrap(), p.full_mask());
            for w in chain.windows(2) {
                assert!(w[0] & !w[1] == 0 && w[0] != w[1]);
            }
        }
    }

    #[test]
    fn min_cut_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let p = random_pattern(&mut rng, 8);
            let n = 10f64.powf(rng.gen_range(2.0..8.0));
            let ctx = ScalingContext::at_time(n, rng.gen_range(0.5..2.0)).unwrap();
            let (fast, mask) = p.ln_min_scaling(&ctx).unwrap();
            let (slow, _) = p.ln_min_scaling_scan(&ctx).unwrap();
            assert!((fast - slow).abs() < 1e-9 * (1.0 + slow.abs()), "{p}: {fast} vs {slow}");
            let at = p.exponents(p.base_mask(), mask).unwrap().ln_value(&ctx);
            assert!((at - fast).abs() < 1e-9 * (1.0 + fast.abs()));
        }
    }

    #[test]
    fn controllability() {
        let params = ErrorParams::default();
        let closed: ExtensionPattern = "vertices=3; base=[0,1]; edges=[(0,2),(1,2)]".parse().unwrap();
        assert!(!closed.is_controllable(1e12, 1.1, &params).unwrap());
        let xu: ExtensionPattern = "vertices=2; base=[0]; opens=[(0,1)]".parse().unwrap();
        assert!(xu.is_controllable(1e6, 1.1, &params).unwrap());
        assert!(xu.is_controllable(1e6, 0.5, &params).is_err());
    }

    #[test]
    fn fan_controllable_at_t_max() {
        let params = ErrorParams::default();
        let h = params.m() as usize;
        let fan = ExtensionPattern::fan(h, &vec![true; h + 1]).unwrap();
        assert_eq!((fan.n_v(), fan.e_v(), fan.o_v()), (h, h + 1, h));
        // Large n so that y = 2t·q̂·n^{1/2} dominates n^δ on [1, t_max].
        let n = 1e40;
        let tm = crate::scaling::t_max(n, params.epsilon).unwrap();
        assert!(fan.is_controllable(n, tm, &params).unwrap());
        let ctx = ScalingContext::at_time(n, tm).unwrap();
        let (lmin, mask) = fan.ln_min_scaling(&ctx).unwrap();
        assert_eq!((mask & !fan.base_mask()).count_ones(), 1);
        let y = ctx.ln_p() + ctx.ln_q_hat() + ctx.ln_n();
        assert!((lmin - y).abs() < 1e-9 * y.abs());
        // Mixed path statuses still controllable.
        let mut flags = vec![true; h + 1];
        flags[3] = false;
        flags[10] = false;
        assert!(ExtensionPattern::fan(h, &flags).unwrap().is_controllable(n, tm, &params).unwrap());
    }

    #[test]
    fn controllable_is_monotone_in_t_prime() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let p = random_pattern(&mut rng, 6);
            let n = 10f64.powf(rng.gen_range(3.0..12.0));
            let ts = [1.0, 1.2, 1.5, 2.0, 2.5];
            let flags: Vec<bool> = ts.iter().map(|&t| p.is_controllable_between(n, 1.0, t, 0.05).unwrap()).collect();
            for w in flags.windows(2) {
                assert!(w[0] || !w[1]);
            }
        }
    }

    #[test]
    fn endpoint_minimum_of_unimodal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = rng.gen_range(0..8) as f64;
            let b = rng.gen_range(0..8) as f64;
            let c: f64 = rng.gen_range(0.1..100.0);
            let lo: f64 = rng.gen_range(0.5..1.5);
            let hi = lo + rng.gen_range(0.0..1.5);
            let f = |t: f64| c * t.powf(a) * (-4.0 * b * t * t).exp();
            let grid = (0..=2000).map(|k| f(lo + (hi - lo) * k as f64 / 2000.0));
            let gmin = grid.fold(f64::INFINITY, f64::min);
            let emin = f(lo).min(f(hi));
            assert!((gmin - emin).abs() <= 1e-9 * emin.abs().max(1e-300));
        }
    }

    #[test]
    fn badness() {
        let st = path_store();
        let empty = PairStore::new_empty(5).unwrap();
        let y = y_pattern();
        // uv = {0,1} is an edge.
        assert!(y.is_bad(&[0, 1], &st).unwrap());
        assert!(!y.is_bad(&[0, 3], &st).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_pattern(&mut rng, 3);
            let phi: Vec<u32> = (0..p.base().len() as u32).collect();
            assert!(!p.is_bad(&phi, &empty).unwrap());
        }
        // Open pair xy of the base mapped onto a cherry 0-2-1.
        let cherry =
            PairStore::from_edges(5, &[PairKey::new(0, 2).unwrap(), PairKey::new(1, 2).unwrap()]).unwrap();
        let p: ExtensionPattern = "vertices=4; base=[0,1,2]; opens=[(0,1),(2,3)]".parse().unwrap();
        assert!(p.is_bad(&[0, 1, 2], &cherry).unwrap());
        assert!(!p.is_bad(&[0, 3, 4], &cherry).unwrap());
    }
}
