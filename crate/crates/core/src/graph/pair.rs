use std::fmt;

use crate::error::{Error, Result};

/// Number of unordered pairs on `n` vertices.
#[inline]
pub fn pair_count(n: u32) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// An unordered vertex pair in canonical order `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairKey {
    pub u: u32,
    pub v: u32,
}

impl PairKey {
    /// Canonicalizes `{a, b}`; fails when `a == b`.
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a == b {
            return Err(Error::invalid(format!("pair ({a}, {a}) is a loop")));
        }
        Ok(Self::ordered(a, b))
    }

    #[inline]
    pub(crate) fn ordered(a: u32, b: u32) -> Self {
        debug_assert_ne!(a, b);
        if a < b {
            PairKey { u: a, v: b }
        } else {
            PairKey { u: b, v: a }
        }
    }

    /// Position in the flat upper-triangular layout of an `n`-vertex store:
    /// `u·n − u(u+1)/2 + (v−u−1)`.
    #[inline]
    pub fn index(self, n: u32) -> u64 {
        let (u, v, n) = (self.u as u64, self.v as u64, n as u64);
        u * n - u * (u + 1) / 2 + (v - u - 1)
    }

    /// Inverse of [`PairKey::index`].
    pub fn from_index(idx: u64, n: u32) -> Self {
        let nn = n as u64;
        debug_assert!(idx < pair_count(n));
        // Row u starts at u·n − u(u+1)/2; solve the quadratic then correct.
        let b = (2 * nn - 1) as f64;
        let disc = b * b - 8.0 * idx as f64;
        let mut u = ((b - disc.max(0.0).sqrt()) / 2.0).floor() as u64;
        let start = |u: u64| u * nn - u * (u + 1) / 2;
        while u > 0 && start(u) > idx {
            u -= 1;
        }
        while u + 1 < nn && start(u + 1) <= idx {
            u += 1;
        }
        let v = idx - start(u) + u + 1;
        PairKey {
            u: u as u32,
            v: v as u32,
        }
    }

    pub fn contains(self, x: u32) -> bool {
        self.u == x || self.v == x
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.u, self.v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_order() {
        assert_eq!(PairKey::new(5, 2).unwrap(), PairKey { u: 2, v: 5 });
        assert!(PairKey::new(3, 3).is_err());
    }

    #[test]
    fn index_is_dense_and_ordered() {
        let n = 9;
        let mut expect = 0;
        for u in 0..n {
            for v in u + 1..n {
                let k = PairKey { u, v };
                assert_eq!(k.index(n), expect);
                assert_eq!(PairKey::from_index(expect, n), k);
                expect += 1;
            }
        }
        assert_eq!(expect, pair_count(n));
    }

    proptest! {
        #[test]
        fn index_roundtrip(n in 2u32..=65536, a in any::<u32>(), b in any::<u32>()) {
            let a = a % n;
            let b = b % n;
            prop_assume!(a != b);
            let k = PairKey::new(a, b).unwrap();
            let idx = k.index(n);
            prop_assert!(idx < pair_count(n));
            prop_assert_eq!(PairKey::from_index(idx, n), k);
        }
    }
}
