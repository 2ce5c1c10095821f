//! Stacking words: parsing, weights, `M`-boundedness, realization as
//! extension patterns, counting and tracking values.
//!
//! Realized vertices are numbered `α_u = 0`, `α_v = 1` and `α_i = i + 1`.
//! The automaton keeps an active rung `xy` with last vertex `y`, starting
//! from `x = α_u`, `y = α_v`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::ExtensionPattern;
use crate::graph::PairStore;
use crate::scaling::{self, ScalingContext, VariableKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum StackingSymbol {
    O,
    E,
    YI,
    YO,
    XI,
    XO,
}

impl StackingSymbol {
    pub const ALL: [StackingSymbol; 6] = [Self::O, Self::E, Self::YI, Self::YO, Self::XI, Self::XO];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::O => "O",
            Self::E => "E",
            Self::YI => "YI",
            Self::YO => "YO",
            Self::XI => "XI",
            Self::XO => "XO",
        }
    }

    fn is_outer(self) -> bool {
        matches!(self, Self::XO | Self::YO)
    }

    fn is_inner(self) -> bool {
        matches!(self, Self::XI | Self::YI)
    }

    fn is_one_vertex(self) -> bool {
        matches!(self, Self::O | Self::E)
    }
}

impl FromStr for StackingSymbol {
    type Err = Error;

    /// Accepts `XO` and `X^O` style spellings.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('^', "").as_str() {
            "O" => Self::O,
            "E" => Self::E,
            "YI" => Self::YI,
            "YO" => Self::YO,
            "XI" => Self::XI,
            "XO" => Self::XO,
            _ => return Err(Error::Parse(format!("unknown stacking symbol {s:?}"))),
        })
    }
}

impl fmt::Display for StackingSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A nonempty word whose first symbol is `O`, `E`, `YO` or `XO` and in
/// which `E` can only be last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StackingWord {
    symbols: Vec<StackingSymbol>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Weights {
    pub w1: usize,
    pub w2: usize,
    pub w: usize,
}

/// A failed `M`-boundedness condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// (i) `E` before the end.
    EndNotLast,
    /// (ii) `O YI` or `O XI` outside the last two positions.
    InnerAfterOpen,
    /// (iii) weight above `2M`.
    Weight,
    /// (iv) weight `2M` with an inner last symbol.
    FullWeightEnding,
    /// (v) an `M`-fan.
    Fan,
}

impl StackingWord {
    pub fn new(symbols: Vec<StackingSymbol>) -> Result<Self> {
        use StackingSymbol::*;
        let Some(&first) = symbols.first() else {
            return Err(Error::Parse("empty stacking word".into()));
        };
        if matches!(first, YI | XI) {
            return Err(Error::Parse(format!("a word cannot start with {first}")));
        }
        if symbols[..symbols.len() - 1].contains(&E) {
            return Err(Error::Parse("E may only be the last symbol".into()));
        }
        Ok(StackingWord { symbols })
    }

    pub fn symbols(&self) -> &[StackingSymbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn last(&self) -> StackingSymbol {
        *self.symbols.last().expect("nonempty")
    }

    /// The word without its last symbol, if nonempty.
    pub fn prefix(&self) -> Option<StackingWord> {
        (self.len() > 1).then(|| StackingWord {
            symbols: self.symbols[..self.len() - 1].to_vec(),
        })
    }

    pub fn weights(&self) -> Weights {
        let w1 = self.symbols.iter().filter(|s| s.is_one_vertex()).count();
        let w2 = self.symbols.iter().filter(|s| s.is_outer()).count();
        Weights { w1, w2, w: w1 + w2 }
    }

    /// Some `M + 1` consecutive symbols lie in
    /// `{XO,YO} × {XI,YI}^{M−1} × {XI,YI,XO}`.
    pub fn has_m_fan(&self, m: usize) -> bool {
        assert!(m >= 1, "M must be positive");
        self.symbols.windows(m + 1).any(|w| {
            w[0].is_outer()
                && w[1..m].iter().all(|s| s.is_inner())
                && (w[m].is_inner() || w[m] == StackingSymbol::XO)
        })
    }

    /// Violated `M`-boundedness conditions, empty if `M`-bounded.
    pub fn m_bounded_violations(&self, m: usize) -> Vec<Violation> {
        use StackingSymbol::*;
        let s = &self.symbols;
        let len = s.len();
        let mut out = Vec::new();
        if s[..len - 1].contains(&E) {
            out.push(Violation::EndNotLast);
        }
        let inner_after_open =
            (0..len.saturating_sub(1)).any(|k| s[k] == O && s[k + 1].is_inner() && k + 2 != len);
        if inner_after_open {
            out.push(Violation::InnerAfterOpen);
        }
        let w = self.weights().w;
        if w > 2 * m {
            out.push(Violation::Weight);
        }
        if w == 2 * m && !matches!(self.last(), O | E | XO | YO) {
            out.push(Violation::FullWeightEnding);
        }
        if self.has_m_fan(m) {
            out.push(Violation::Fan);
        }
        out
    }

    pub fn is_m_bounded(&self, m: usize) -> bool {
        self.m_bounded_violations(m).is_empty()
    }

    /// Builds the extension pattern with base `{α_u, α_v}`.
    pub fn realize(&self) -> Realization {
        use StackingSymbol::*;
        let (mut x, mut y) = (0usize, 1usize);
        let mut edges = Vec::new();
        let mut opens = vec![(0, 1)];
        let mut rungs = vec![(0, 1)];
        let mut stringers = Vec::new();
        for (i, &sym) in self.symbols.iter().enumerate() {
            let z = i + 2;
            match sym {
                O => {
                    opens.push((y, z));
                    rungs.push((y, z));
                    x = y;
                }
                E => edges.push((y, z)),
                XO => {
                    opens.extend([(x, z), (y, z)]);
                    rungs.push((y, z));
                    stringers.push((x, z));
                    x = y;
                }
                XI => {
                    opens.extend([(x, z), (y, z)]);
                    rungs.push((x, z));
                    stringers.push((y, z));
                }
                YO => {
                    opens.push((y, z));
                    edges.push((x, z));
                    rungs.push((y, z));
                    x = y;
                }
                YI => {
                    opens.push((x, z));
                    edges.push((y, z));
                    rungs.push((x, z));
                }
            }
            y = z;
        }
        let len = self.len();
        let partner = (len >= 2 && self.symbols[len - 2] == O && !self.last().is_one_vertex())
            .then_some(len - 1);
        Realization {
            pattern: ExtensionPattern::new(len + 2, vec![0, 1], edges, opens)
                .expect("realized pairs are distinct and in range"),
            rungs,
            stringers,
            partner,
        }
    }

    /// `S^π_{uv}`.
    pub fn count(&self, store: &PairStore, u: u32, v: u32) -> Result<u64> {
        self.realize().pattern.count_embeddings(store, &[u, v])
    }

    /// `𝒯S^π_{uv}` with `Q` read from the store.
    ///
    /// Length one uses the one-vertex tracking value. Otherwise, writing
    /// `π = π⁻U`: if `π` ends `O U` with `U` an `X` or `Y` symbol, the value
    /// sums over embeddings `f` of `π⁻` a product of `X_{f(β)}` and
    /// `Y_{f(β)}` factors at the vertex `β` before that `O`; else it is
    /// `S^{π⁻}_{uv}·𝒯U`.
    pub fn tracking_value(&self, store: &PairStore, u: u32, v: u32, ctx: &ScalingContext) -> Result<f64> {
        use StackingSymbol::*;
        let q = 2.0 * store.open_count() as f64;
        let (n, t) = (ctx.n, ctx.t);
        let dens = q / (n * n);
        let edge = 2.0 * t / n.sqrt();
        let single = |sym: StackingSymbol| -> Result<f64> {
            let kind = match sym {
                O => VariableKind::Xu,
                E => VariableKind::Yu,
                XO | XI => VariableKind::Xuv,
                YO | YI => VariableKind::Yuv,
            };
            scaling::tracking_value(&kind, q, ctx)
        };
        let Some(prefix) = self.prefix() else {
            return single(self.last());
        };
        let real = self.realize();
        match real.partner {
            None => Ok(prefix.count(store, u, v)? as f64 * single(self.last())?),
            Some(beta) => {
                // Embeddings of π minus its last two symbols; β is its last
                // vertex (α_v when that word is empty).
                let (sum_xx, sum_xy) = if self.len() == 2 {
                    let b = v;
                    let x = store.open_degree(b) as f64;
                    (x * x, x * store.degree(b) as f64)
                } else {
                    let base = StackingWord {
                        symbols: self.symbols[..self.len() - 2].to_vec(),
                    };
                    let mut acc = (0.0, 0.0);
                    base.realize().pattern.for_each_embedding(store, &[u, v], |img| {
                        let b = img[beta];
                        let x = store.open_degree(b) as f64;
                        acc.0 += x * x;
                        acc.1 += x * store.degree(b) as f64;
                    })?;
                    acc
                };
                Ok(match self.last() {
                    XO | XI => sum_xx * dens,
                    YI => sum_xx * edge,
                    YO => sum_xy * dens,
                    O | E => unreachable!("partner words end in X or Y"),
                })
            }
        }
    }
}

impl FromStr for StackingWord {
    type Err = Error;

    /// Symbols separated by whitespace or commas, optionally bracketed.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('[').trim_end_matches(']');
        let symbols = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        StackingWord::new(symbols)
    }
}

impl fmt::Display for StackingWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.symbols.iter().map(|s| s.as_str()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl Serialize for StackingWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A realized word: its pattern, rungs (base rung first), open stringers,
/// and the partner vertex `β` when the word ends `O U` with `U` an `X` or
/// `Y` symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub pattern: ExtensionPattern,
    pub rungs: Vec<(usize, usize)>,
    pub stringers: Vec<(usize, usize)>,
    pub partner: Option<usize>,
}

/// Depth-first enumeration of `M`-bounded words up to `max_len` symbols.
pub struct MBoundedWords {
    m: usize,
    max_len: usize,
    stack: Vec<Vec<StackingSymbol>>,
}

/// All `M`-bounded words of length at most `max_len`, in depth-first order.
pub fn enumerate_m_bounded(m: usize, max_len: usize) -> Result<MBoundedWords> {
    if m == 0 || max_len > 2 * m * m {
        return Err(Error::invalid(format!(
            "need M >= 1 and max_len <= 2M² (M={m}, max_len={max_len})"
        )));
    }
    use StackingSymbol::*;
    let stack = [XO, YO, E, O].iter().map(|&s| vec![s]).collect();
    Ok(MBoundedWords { m, max_len, stack })
}

impl Iterator for MBoundedWords {
    type Item = StackingWord;

    fn next(&mut self) -> Option<StackingWord> {
        while let Some(symbols) = self.stack.pop() {
            let word = StackingWord { symbols };
            let violations = word.m_bounded_violations(self.m);
            // Every violation persists under extension, and so does an
            // `O XI` / `O YI` ending.
            let open_inner_end = word.len() >= 2
                && word.symbols[word.len() - 2] == StackingSymbol::O
                && word.last().is_inner();
            let extendable = violations.is_empty()
                && word.len() < self.max_len
                && word.last() != StackingSymbol::E
                && !open_inner_end;
            if extendable {
                for &s in StackingSymbol::ALL.iter().rev() {
                    let mut next = word.symbols.clone();
                    next.push(s);
                    self.stack.push(next);
                }
            }
            if violations.is_empty() {
                return Some(word);
            }
        }
        None
    }
}
