//! Brute-force reference implementations.
//!
//! Each function here recomputes a quantity from first principles with no
//! shared machinery beyond plain edge lists, so it can serve as an
//! independent check of the optimized code paths. All of them are
//! polynomial (or exponential) in `n` and meant for small inputs.

use crate::graph::{pair_count, PairKey, PairStatus};
use crate::rng::IndexStream;

/// Dense adjacency matrix of an edge list.
pub fn adjacency_matrix(n: u32, edges: &[PairKey]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n as usize]; n as usize];
    for e in edges {
        m[e.u as usize][e.v as usize] = true;
        m[e.v as usize][e.u as usize] = true;
    }
    m
}

/// Status of every pair (canonical index order) recomputed from the edge set:
/// edge if present, closed if a non-edge with a common neighbour, else open.
pub fn brute_statuses(n: u32, edges: &[PairKey]) -> Vec<PairStatus> {
    let m = adjacency_matrix(n, edges);
    let mut out = Vec::with_capacity(pair_count(n) as usize);
    for u in 0..n as usize {
        for v in u + 1..n as usize {
            out.push(if m[u][v] {
                PairStatus::Edge
            } else if (0..n as usize).any(|w| m[u][w] && m[v][w]) {
                PairStatus::Closed
            } else {
                PairStatus::Open
            });
        }
    }
    out
}

pub fn brute_triangles(n: u32, edges: &[PairKey]) -> u64 {
    let m = adjacency_matrix(n, edges);
    let n = n as usize;
    let mut c = 0;
    for a in 0..n {
        for b in a + 1..n {
            if !m[a][b] {
                continue;
            }
            for x in b + 1..n {
                if m[a][x] && m[b][x] {
                    c += 1;
                }
            }
        }
    }
    c
}

pub fn is_triangle_free(n: u32, edges: &[PairKey]) -> bool {
    let m = adjacency_matrix(n, edges);
    edges.iter().all(|e| {
        !(0..n as usize).any(|w| m[e.u as usize][w] && m[e.v as usize][w])
    })
}

/// Triangle-free and every non-edge has a common neighbour.
pub fn is_maximal_triangle_free(n: u32, edges: &[PairKey]) -> bool {
    if !is_triangle_free(n, edges) {
        return false;
    }
    // Bitset rows keep this usable for n in the thousands.
    let words = (n as usize).div_ceil(64);
    let mut rows = vec![0u64; words * n as usize];
    for e in edges {
        rows[e.u as usize * words + e.v as usize / 64] |= 1 << (e.v % 64);
        rows[e.v as usize * words + e.u as usize / 64] |= 1 << (e.u % 64);
    }
    let row = |x: usize| &rows[x * words..(x + 1) * words];
    for u in 0..n as usize {
        for v in u + 1..n as usize {
            if row(u)[v / 64] >> (v % 64) & 1 == 1 {
                continue;
            }
            if !row(u).iter().zip(row(v)).any(|(a, b)| a & b != 0) {
                return false;
            }
        }
    }
    true
}

/// The naive process engine: recompute the open set by a full pair scan each
/// step and pick `sorted_open[stream.next_index(len)]`. Returns the edge
/// sequence.
pub fn naive_process<S: IndexStream>(n: u32, stream: &mut S) -> Vec<PairKey> {
    let mut edges: Vec<PairKey> = Vec::new();
    let mut m = vec![vec![false; n as usize]; n as usize];
    loop {
        let mut open = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let (a, b) = (u as usize, v as usize);
                if !m[a][b] && !(0..n as usize).any(|w| m[a][w] && m[b][w]) {
                    open.push(PairKey { u, v });
                }
            }
        }
        if open.is_empty() {
            return edges;
        }
        let e = open[stream.next_index(open.len() as u64) as usize];
        m[e.u as usize][e.v as usize] = true;
        m[e.v as usize][e.u as usize] = true;
        edges.push(e);
    }
}

/// Ordered counts `(Q, R, S)` by full triple enumeration.
pub fn brute_global_counts(n: u32, edges: &[PairKey]) -> (u64, u64, u64) {
    let st = brute_statuses(n, edges);
    let status = |a: u32, b: u32| st[PairKey::ordered(a, b).index(n) as usize];
    let (mut q, mut r, mut s) = (0, 0, 0);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let ab = status(a, b);
            if ab == PairStatus::Open {
                q += 1;
            }
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                let ac = status(a, c) == PairStatus::Open;
                let bc = status(b, c) == PairStatus::Open;
                if ac && bc {
                    match ab {
                        PairStatus::Open => r += 1,
                        PairStatus::Edge => s += 1,
                        PairStatus::Closed => {}
                    }
                }
            }
        }
    }
    (q, r, s)
}

/// Counts injections `f` of `vertex_count` pattern vertices into `0..n` with
/// `f(base[k]) = phi[k]`, every `edges` pair (not inside the base) mapped to
/// an edge and every `opens` pair (not inside the base) mapped to an open
/// pair. Plain odometer enumeration over all assignments.
pub fn brute_embeddings(
    n: u32,
    edges_g: &[PairKey],
    vertex_count: usize,
    base: &[usize],
    phi: &[u32],
    edges: &[(usize, usize)],
    opens: &[(usize, usize)],
) -> u64 {
    let st = brute_statuses(n, edges_g);
    let status = |a: u32, b: u32| {
        if a == b {
            None
        } else {
            Some(st[PairKey::ordered(a, b).index(n) as usize])
        }
    };
    let in_base = |x: usize| base.contains(&x);
    let free: Vec<usize> = (0..vertex_count).filter(|x| !in_base(*x)).collect();
    let mut f = vec![0u32; vertex_count];
    for (k, &b) in base.iter().enumerate() {
        f[b] = phi[k];
    }
    let mut count = 0;
    let mut digits = vec![0u32; free.len()];
    loop {
        for (k, &x) in free.iter().enumerate() {
            f[x] = digits[k];
        }
        let injective = {
            let mut seen = f.clone();
            seen.sort_unstable();
            seen.windows(2).all(|w| w[0] != w[1])
        };
        let ok = injective
            && edges.iter().all(|&(a, b)| {
                (in_base(a) && in_base(b)) || status(f[a], f[b]) == Some(PairStatus::Edge)
            })
            && opens.iter().all(|&(a, b)| {
                (in_base(a) && in_base(b)) || status(f[a], f[b]) == Some(PairStatus::Open)
            });
        if ok {
            count += 1;
        }
        // Advance the odometer.
        let mut k = 0;
        loop {
            if k == digits.len() {
                return count;
            }
            digits[k] += 1;
            if digits[k] < n {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Independence number by checking all `2^n` vertex subsets (`n ≤ 24`).
pub fn brute_alpha(n: u32, edges: &[PairKey]) -> u32 {
    assert!(n <= 24, "brute_alpha is exponential");
    let mut nbr = vec![0u32; n as usize];
    for e in edges {
        nbr[e.u as usize] |= 1 << e.v;
        nbr[e.v as usize] |= 1 << e.u;
    }
    let mut best = 0;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones();
        if size <= best {
            continue;
        }
        let independent = (0..n).all(|v| mask >> v & 1 == 0 || nbr[v as usize] & mask == 0);
        if independent {
            best = size;
        }
    }
    best
}

/// Whether `h_edges` on `h_n` vertices embeds (not necessarily induced) into
/// the graph, by trying every injection.
pub fn brute_contains(n: u32, edges: &[PairKey], h_n: usize, h_edges: &[(usize, usize)]) -> bool {
    let m = adjacency_matrix(n, edges);
    fn rec(
        m: &[Vec<bool>],
        h_n: usize,
        h_edges: &[(usize, usize)],
        f: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if f.len() == h_n {
            return h_edges.iter().all(|&(a, b)| m[f[a]][f[b]]);
        }
        for x in 0..m.len() {
            if used[x] {
                continue;
            }
            used[x] = true;
            f.push(x);
            let found = rec(m, h_n, h_edges, f, used);
            f.pop();
            used[x] = false;
            if found {
                return true;
            }
        }
        false
    }
    let mut used = vec![false; n as usize];
    rec(&m, h_n, h_edges, &mut Vec::new(), &mut used)
}

/// Maximum 2-density over all subgraphs (vertex subset × edge subset) of a
/// graph on `v ≤ 6` vertices; `(numerator, denominator)` of the maximum.
pub fn brute_m2(v: usize, edges: &[(usize, usize)]) -> (i64, i64) {
    assert!(v <= 6 && edges.len() <= 15);
    let mut best: Option<(i64, i64)> = None;
    for vmask in 0u32..(1 << v) {
        let k = vmask.count_ones() as i64;
        if k < 3 {
            continue;
        }
        let inside: Vec<_> = edges
            .iter()
            .filter(|(a, b)| vmask >> a & 1 == 1 && vmask >> b & 1 == 1)
            .collect();
        for emask in 0u32..(1 << inside.len()) {
            let e = emask.count_ones() as i64;
            let cand = (e - 1, k - 2);
            best = Some(match best {
                None => cand,
                Some(b) if cand.0 * b.1 > b.0 * cand.1 => cand,
                Some(b) => b,
            });
        }
    }
    best.expect("v >= 3")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(a: u32, b: u32) -> PairKey {
        PairKey::new(a, b).unwrap()
    }

    #[test]
    fn path_counts() {
        let (q, r, s) = brute_global_counts(4, &[key(0, 1), key(1, 2)]);
        assert_eq!((q, r, s), (6, 0, 4));
        assert_eq!(brute_global_counts(4, &[]), (12, 24, 0));
    }

    #[test]
    fn maximality_checks() {
        assert!(is_maximal_triangle_free(3, &[key(0, 1), key(1, 2)]));
        assert!(!is_maximal_triangle_free(3, &[key(0, 1)]));
        assert!(!is_maximal_triangle_free(3, &[key(0, 1), key(1, 2), key(0, 2)]));
    }

    #[test]
    fn alpha_of_c5() {
        let c5: Vec<_> = (0..5).map(|i| key(i, (i + 1) % 5)).collect();
        assert_eq!(brute_alpha(5, &c5), 2);
    }
}
