//! Deterministic trajectories of the process: time scaling, variable
//! scalings, tracking values, error bands and the tracked horizon.
//!
//! `log` is the natural logarithm throughout. Error bands involve constants
//! such as `e^K` with `K > M⁶` and `L^{40}`, so they are carried as natural
//! logarithms and only exponentiated on request.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::ExtensionPattern;
use crate::stacking::StackingWord;

/// `(n, i)` with the derived time `t = i·n^{−3/2}`, edge density
/// `p = 2t·n^{−1/2} = 2i/n²` and open density `q̂ = e^{−4t²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingContext {
    pub n: f64,
    pub i: f64,
    pub t: f64,
    pub p: f64,
    pub q_hat: f64,
}

impl ScalingContext {
    pub fn new(n: f64, i: f64) -> Result<Self> {
        if !(n >= 2.0) || !(i >= 0.0) {
            return Err(Error::invalid(format!("context needs n >= 2, i >= 0 (n={n}, i={i})")));
        }
        let t = i * n.powf(-1.5);
        Ok(ScalingContext {
            n,
            i,
            t,
            p: 2.0 * i / (n * n),
            q_hat: (-4.0 * t * t).exp(),
        })
    }

    /// Context at continuous time `t`.
    pub fn at_time(n: f64, t: f64) -> Result<Self> {
        Self::new(n, t * n.powf(1.5))
    }

    pub fn ln_n(&self) -> f64 {
        self.n.ln()
    }

    /// `ln q̂ = −4t²`, exact even where `q̂` underflows.
    pub fn ln_q_hat(&self) -> f64 {
        -4.0 * self.t * self.t
    }

    /// `ln p = ln 2 + ln t − ½ ln n` (−∞ at `t = 0`).
    pub fn ln_p(&self) -> f64 {
        if self.t == 0.0 {
            f64::NEG_INFINITY
        } else {
            std::f64::consts::LN_2 + self.t.ln() - 0.5 * self.ln_n()
        }
    }

    /// Predicted ordered open-pair count `q = q̂n²`.
    pub fn q(&self) -> f64 {
        self.q_hat * self.n * self.n
    }
}

/// The variables the process is analysed through.
#[derive(Debug, Clone, PartialEq)]
pub enum VariableKind {
    /// Ordered open pairs.
    Q,
    /// Ordered triples with three open pairs.
    R,
    /// Ordered triples `abc` with `ab` an edge and `ac`, `bc` open.
    S,
    /// Common open neighbours of a pair.
    Xuv,
    /// `#{w : uw open, vw edge}`.
    Yuv,
    /// Open degree.
    Xu,
    /// Degree.
    Yu,
    Stacking(StackingWord),
    Controllable(ExtensionPattern),
}

/// Which multiple of `e` an error band is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Ensemble {
    Global,
    Stacking,
    Controllable,
}

impl VariableKind {
    /// `(e(V), o(V))`: edges and open pairs outside the base.
    pub fn edge_open_counts(&self) -> (u32, u32) {
        match self {
            VariableKind::Q => (0, 1),
            VariableKind::R => (0, 3),
            VariableKind::S => (1, 2),
            VariableKind::Xuv => (0, 2),
            VariableKind::Yuv => (1, 1),
            VariableKind::Xu => (0, 1),
            VariableKind::Yu => (1, 0),
            VariableKind::Stacking(w) => {
                let p = w.realize().pattern;
                (p.e_v() as u32, p.o_v() as u32)
            }
            VariableKind::Controllable(p) => (p.e_v() as u32, p.o_v() as u32),
        }
    }

    pub fn ensemble(&self) -> Ensemble {
        match self {
            VariableKind::Q | VariableKind::R | VariableKind::S => Ensemble::Global,
            VariableKind::Controllable(_) => Ensemble::Controllable,
            _ => Ensemble::Stacking,
        }
    }

    /// The codegree and degree variables as length-one stacking words.
    pub fn as_stacking_word(&self) -> Option<StackingWord> {
        let text = match self {
            VariableKind::Xuv => "XO",
            VariableKind::Yuv => "YO",
            VariableKind::Xu => "O",
            VariableKind::Yu => "E",
            VariableKind::Stacking(w) => return Some(w.clone()),
            _ => return None,
        };
        Some(text.parse().expect("length-one words are valid"))
    }
}

/// Scaling `v(t)` of a named variable.
pub fn scaling_of(kind: &VariableKind, ctx: &ScalingContext) -> Result<f64> {
    let ScalingContext { n, t, q_hat, .. } = *ctx;
    Ok(match kind {
        VariableKind::Q => q_hat * n * n,
        VariableKind::R => q_hat.powi(3) * n.powi(3),
        VariableKind::S => 2.0 * t * q_hat * q_hat * n.powf(2.5),
        VariableKind::Xuv => q_hat * q_hat * n,
        VariableKind::Yuv => 2.0 * t * q_hat * n.sqrt(),
        VariableKind::Xu => q_hat * n,
        VariableKind::Yu => 2.0 * t * n.sqrt(),
        VariableKind::Stacking(_) | VariableKind::Controllable(_) => {
            return Err(Error::invalid(
                "scaling_of covers the named variables; use ExtensionPattern::scaling",
            ))
        }
    })
}

/// Tracking value `𝒯V` given the observed ordered open-pair count `q_obs`.
///
/// One-vertex extensions with `a` edges and `b` open pairs track
/// `n·(2t·n^{−1/2})^a·(Q/n²)^b`; controllable variables track their scaling.
/// Stacking words need the graph and live in [`crate::stacking`].
pub fn tracking_value(kind: &VariableKind, q_obs: f64, ctx: &ScalingContext) -> Result<f64> {
    let ScalingContext { n, t, .. } = *ctx;
    let dens = q_obs / (n * n);
    let edge = 2.0 * t / n.sqrt();
    Ok(match kind {
        VariableKind::Q => ctx.q(),
        VariableKind::R => q_obs.powi(3) / n.powi(3),
        VariableKind::S => 2.0 * t * n.powf(-1.5) * q_obs * q_obs,
        VariableKind::Xuv => n * dens * dens,
        VariableKind::Yuv => n * edge * dens,
        VariableKind::Xu => n * dens,
        VariableKind::Yu => n * edge,
        VariableKind::Controllable(p) => p.scaling(p.base_mask(), p.full_mask(), ctx)?,
        VariableKind::Stacking(_) => {
            return Err(Error::invalid("stacking tracking values need the graph"))
        }
    })
}

/// Global parameters of the error machinery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Overrides `K = M⁶ + 1`.
    pub k_override: Option<f64>,
}

impl Default for ErrorParams {
    fn default() -> Self {
        ErrorParams {
            epsilon: 0.1,
            delta: 0.01,
            k_override: None,
        }
    }
}

impl ErrorParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        Ok(ErrorParams {
            epsilon,
            delta,
            k_override: None,
        })
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k_override = Some(k);
        self
    }

    /// `M = 3/ε`, rounded to the nearest integer when `3/ε` is one up to
    /// floating-point noise, otherwise rounded up.
    pub fn m(&self) -> u32 {
        let m = 3.0 / self.epsilon;
        if (m - m.round()).abs() < 1e-9 {
            m.round() as u32
        } else {
            m.ceil() as u32
        }
    }

    pub fn k(&self) -> f64 {
        self.k_override
            .unwrap_or_else(|| (self.m() as f64).powi(6) + 1.0)
    }

    /// `ln θ(t)`: `θ = e^{Kt}` on `[0, 1]`, then `e^K(2 − e^{−K(t−1)})`,
    /// which is increasing, C¹ at `t = 1` and bounded by `2e^K`.
    pub fn ln_theta(&self, t: f64) -> f64 {
        let k = self.k();
        if t <= 1.0 {
            k * t
        } else {
            k + (2.0 - (-k * (t - 1.0)).exp()).ln()
        }
    }
}

/// `L = √(ln n)`.
pub fn ln_l(n: f64) -> f64 {
    0.5 * n.ln().ln()
}

/// `ln e` where `e = q̂^{−1/2}·n^{−1/4}`.
pub fn ln_e_param(ctx: &ScalingContext) -> f64 {
    -0.5 * ctx.ln_q_hat() - 0.25 * ctx.ln_n()
}

/// Shape of a variable's error band: its ensemble, `ln c_V` and `e(V)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandShape {
    pub ensemble: Ensemble,
    pub ln_c: f64,
    pub edges: u32,
}

impl BandShape {
    pub fn of(kind: &VariableKind, n: f64, params: &ErrorParams) -> Self {
        let ll = ln_l(n);
        let ln_c = match kind {
            VariableKind::Q => 4f64.ln() + 40.0 * ll,
            VariableKind::R => 40.0 * ll,
            VariableKind::S => 2f64.ln() + 40.0 * ll,
            VariableKind::Controllable(_) => 0.0,
            other => {
                let w = other.as_stacking_word().expect("stacking-type kind");
                stacking_ln_c(&w, n, params.m())
            }
        };
        BandShape {
            ensemble: kind.ensemble(),
            ln_c,
            edges: kind.edge_open_counts().0,
        }
    }
}

/// `ln c_π` with `c_π = L^{15}·9^{4M² − |π| − M·w₁(π)}`.
pub fn stacking_ln_c(word: &StackingWord, n: f64, m: u32) -> f64 {
    let m = m as f64;
    let exp9 = 4.0 * m * m - word.len() as f64 - m * word.weights().w1 as f64;
    15.0 * ln_l(n) + exp9 * 9f64.ln()
}

/// `f_V`, `g_V` and `e_V = f_V + 2g_V`, as natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBand {
    pub ln_f: f64,
    pub ln_g: f64,
    pub ln_e: f64,
}

impl ErrorBand {
    pub fn f(&self) -> f64 {
        self.ln_f.exp()
    }
    pub fn g(&self) -> f64 {
        self.ln_g.exp()
    }
    pub fn e(&self) -> f64 {
        self.ln_e.exp()
    }
    pub fn log10_e(&self) -> f64 {
        self.ln_e / std::f64::consts::LN_10
    }
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 + t^{−e})`.
fn ln_one_plus_t_pow(t: f64, e: u32) -> f64 {
    if e == 0 {
        return std::f64::consts::LN_2;
    }
    if t == 0.0 {
        return f64::INFINITY;
    }
    let x = -(e as f64) * t.ln();
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Error band for a band shape.
pub fn band_for_shape(shape: &BandShape, ctx: &ScalingContext, params: &ErrorParams) -> ErrorBand {
    let le = ln_e_param(ctx);
    let ln_phi = match shape.ensemble {
        Ensemble::Stacking => le,
        Ensemble::Global => 2.0 * le,
        Ensemble::Controllable => params.delta * le,
    };
    let ln_f = shape.ln_c + ln_phi;
    let ln_g = shape.ln_c + params.ln_theta(ctx.t) - ln_l(ctx.n)
        + ln_one_plus_t_pow(ctx.t, shape.edges)
        + ln_phi;
    ErrorBand {
        ln_f,
        ln_g,
        ln_e: ln_add_exp(ln_f, std::f64::consts::LN_2 + ln_g),
    }
}

/// Error band `(f_V, g_V, e_V)` of a variable at `ctx`.
pub fn error_band(kind: &VariableKind, ctx: &ScalingContext, params: &ErrorParams) -> ErrorBand {
    band_for_shape(&BandShape::of(kind, ctx.n, params), ctx, params)
}

/// `t_max = ½·√((½ − ε)·ln n)`, where `q̂(t_max) = n^{−1/2+ε}`.
pub fn t_max(n: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    if !(n > 1.0) {
        return Err(Error::invalid(format!("n must exceed 1, got {n}")));
    }
    Ok(0.5 * ((0.5 - epsilon) * n.ln()).sqrt())
}

/// `⌊t_max·n^{3/2}⌋`.
pub fn i_max(n: f64, epsilon: f64) -> Result<u64> {
    Ok((t_max(n, epsilon)? * n.powf(1.5)).floor() as u64)
}

/// `q̂(t_max)`, which equals `n^{−1/2+ε}`.
pub fn q_hat_at_t_max(n: f64, epsilon: f64) -> Result<f64> {
    let t = t_max(n, epsilon)?;
    Ok((-4.0 * t * t).exp())
}

/// First step at which a variable is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrackingStart {
    At(u64),
    Never,
}

/// Longest integer range scanned step by step; longer ranges are scanned on
/// a grid of this many points and refined by bisection.
const EXACT_SCAN_LIMIT: u64 = 20_000_000;

/// Smallest integer `i ≥ n^{5/4}` (and `≤ i_max`) with `g_V(t) ≤ L^{−1}`.
pub fn tracking_start_index(kind: &VariableKind, n: f64, params: &ErrorParams) -> Result<TrackingStart> {
    tracking_start_for_shape(&BandShape::of(kind, n, params), n, params)
}

pub fn tracking_start_for_shape(shape: &BandShape, n: f64, params: &ErrorParams) -> Result<TrackingStart> {
    let lo = n.powf(1.25).ceil() as u64;
    let hi = i_max(n, params.epsilon)?;
    let limit = -ln_l(n);
    let ok = |i: u64| -> bool {
        let ctx = ScalingContext::new(n, i as f64).expect("valid context");
        band_for_shape(shape, &ctx, params).ln_g <= limit
    };
    if lo > hi {
        return Ok(TrackingStart::Never);
    }
    if hi - lo <= EXACT_SCAN_LIMIT {
        return Ok((lo..=hi).find(|&i| ok(i)).map_or(TrackingStart::Never, TrackingStart::At));
    }
    if ok(lo) {
        return Ok(TrackingStart::At(lo));
    }
    let stride = (hi - lo).div_ceil(EXACT_SCAN_LIMIT);
    let mut prev = lo;
    let mut i = lo;
    while i < hi {
        let next = (i + stride).min(hi);
        if ok(next) {
            // Bisect the first bracket that flips.
            let (mut a, mut b) = (prev.max(i), next);
            while b - a > 1 {
                let mid = a + (b - a) / 2;
                if ok(mid) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(TrackingStart::At(b));
        }
        prev = next;
        i = next;
    }
    Ok(TrackingStart::Never)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn context_values() {
        let c = ScalingContext::new(1000.0, 0.0).unwrap();
        assert_eq!((c.t, c.p, c.q_hat), (0.0, 0.0, 1.0));
        let c = ScalingContext::new(1e6, 1e9).unwrap();
        assert!(rel(c.t, 1.0) < 1e-15);
        assert!(rel(c.p, 0.002) < 1e-15);
        assert!(rel(c.q_hat, 0.018_315_638_888_734_18) < 1e-12);
        let c = ScalingContext::new(777.0, 12345.0).unwrap();
        assert!(rel(c.p * 777.0 * 777.0 / 2.0, 12345.0) < 1e-15);
        assert!(ScalingContext::new(1.0, 0.0).is_err());
    }

    #[test]
    fn named_scalings() {
        let c0 = ScalingContext::new(50.0, 0.0).unwrap();
        assert_eq!(scaling_of(&VariableKind::Q, &c0).unwrap(), 2500.0);
        let c = ScalingContext::at_time(1e4, 1.0).unwrap();
        let y = scaling_of(&VariableKind::Yuv, &c).unwrap();
        assert!(rel(y, 2.0 * (-4f64).exp() * 100.0) < 1e-12);
        assert!((y - 3.663).abs() < 1e-3);
        let s = scaling_of(&VariableKind::S, &c).unwrap();
        assert!(rel(s, c.p * c.q_hat * c.q_hat * 1e12) < 1e-12);
    }

    #[test]
    fn tracking_examples() {
        let n = 37.0;
        let c = ScalingContext::new(n, 100.0).unwrap();
        assert!(rel(tracking_value(&VariableKind::R, n * n, &c).unwrap(), n.powi(3)) < 1e-12);
        let q = c.q();
        let y = scaling_of(&VariableKind::Yuv, &c).unwrap();
        assert!(rel(tracking_value(&VariableKind::Yuv, q, &c).unwrap(), y) < 1e-12);
        let c = ScalingContext::new(4.0, 2.0).unwrap();
        assert_eq!(c.t, 0.25);
        assert!(rel(tracking_value(&VariableKind::S, 6.0, &c).unwrap(), 2.25) < 1e-12);
    }

    #[test]
    fn t_max_values() {
        let n = 16f64.exp();
        assert!((t_max(n, 0.1).unwrap() - 1.264_911).abs() < 1e-6);
        assert!((t_max(1e6, 0.1).unwrap() - 1.175_394).abs() < 1e-5);
        for &(n, eps) in &[(100.0, 0.1), (1e6, 0.2), (12345.0, 0.01), (2e9, 0.45)] {
            let lhs = q_hat_at_t_max(n, eps).unwrap();
            assert!(rel(lhs, f64::powf(n, -0.5 + eps)) < 1e-12);
        }
        assert!(t_max(100.0, 0.5).is_err());
        assert_eq!(i_max(1e6, 0.1).unwrap(), (t_max(1e6, 0.1).unwrap() * 1e9).floor() as u64);
    }

    #[test]
    fn m_and_k() {
        let p = ErrorParams::default();
        assert_eq!(p.m(), 30);
        assert_eq!(p.k(), 30f64.powi(6) + 1.0);
        assert_eq!(ErrorParams::new(0.25, 0.01).unwrap().m(), 12);
        assert_eq!(ErrorParams::new(0.07, 0.01).unwrap().m(), 43);
    }

    #[test]
    fn theta_shape() {
        let p = ErrorParams::default().with_k(3.0);
        assert!((p.ln_theta(0.5) - 1.5).abs() < 1e-15);
        assert!((p.ln_theta(1.0) - 3.0).abs() < 1e-15);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..400 {
            let t = k as f64 * 0.01;
            let v = p.ln_theta(t);
            assert!(v >= prev);
            assert!(v <= 3.0 + 2f64.ln() + 1e-12);
            prev = v;
        }
        // C¹ at t = 1.
        let h = 1e-6;
        let left = (p.ln_theta(1.0) - p.ln_theta(1.0 - h)) / h;
        let right = (p.ln_theta(1.0 + h) - p.ln_theta(1.0)) / h;
        assert!((left - right).abs() < 1e-4);
    }

    #[test]
    fn band_constants() {
        let n = 16f64.exp();
        let ctx = ScalingContext::at_time(n, 0.7).unwrap();
        let p = ErrorParams::default();
        let shape = BandShape::of(&VariableKind::Q, n, &p);
        assert!(rel(shape.ln_c, (4.0 * 4f64.powi(40)).ln()) < 1e-12);
        let b = error_band(&VariableKind::Q, &ctx, &p);
        let e2 = 2.0 * ln_e_param(&ctx);
        assert!(rel(b.ln_f, shape.ln_c + e2) < 1e-12);

        let w: StackingWord = "XO".parse().unwrap();
        let expect = 15.0 * 4f64.ln() + 3599.0 * 9f64.ln();
        assert!(rel(stacking_ln_c(&w, n, 30), expect) < 1e-12);
    }

    #[test]
    fn controllable_band_is_e_delta() {
        let pat = ExtensionPattern::new(3, vec![0, 1], vec![], vec![(0, 2), (1, 2)]).unwrap();
        let kind = VariableKind::Controllable(pat);
        let ctx = ScalingContext::at_time(1e5, 0.9).unwrap();
        let p = ErrorParams::default();
        let b = error_band(&kind, &ctx, &p);
        assert!(rel(b.f(), ln_e_param(&ctx).exp().powf(p.delta)) < 1e-12);
    }

    #[test]
    fn tracking_start_open_only_and_never() {
        // With δ = 1 and a tiny K the open-only controllable band is below
        // L^{-1} from the first admissible step.
        let n = 16384.0;
        let pat = ExtensionPattern::new(3, vec![0, 1], vec![], vec![(0, 2), (1, 2)]).unwrap();
        let kind = VariableKind::Controllable(pat);
        let p = ErrorParams::new(0.1, 1.0).unwrap().with_k(1.0);
        let ctx = ScalingContext::new(n, n.powf(1.25)).unwrap();
        assert!(error_band(&kind, &ctx, &p).ln_g <= -ln_l(n));
        assert_eq!(
            tracking_start_index(&kind, n, &p).unwrap(),
            TrackingStart::At(n.powf(1.25).ceil() as u64)
        );
        let s = tracking_start_index(&VariableKind::S, n, &ErrorParams::default()).unwrap();
        assert_eq!(s, TrackingStart::Never);
    }

    #[test]
    fn tracking_start_monotone_in_constant() {
        let n = 4096.0;
        let p = ErrorParams::new(0.1, 0.5).unwrap().with_k(0.5);
        let mut prev = 0u64;
        for ln_c in [-6.0, -4.0, -3.0, -2.0, -1.5, -1.0, 0.0] {
            let shape = BandShape {
                ensemble: Ensemble::Stacking,
                ln_c,
                edges: 1,
            };
            match tracking_start_for_shape(&shape, n, &p).unwrap() {
                TrackingStart::At(i) => {
                    assert!(i >= prev);
                    prev = i;
                }
                TrackingStart::Never => prev = u64::MAX,
            }
        }
    }

    #[test]
    fn tracking_at_scaling_point_equals_scaling() {
        for &n in &[100.0, 1e4, 1e6, 3.3e7] {
            for k in 0..25 {
                let t = 0.06 * k as f64;
                let ctx = ScalingContext::at_time(n, t).unwrap();
                for kind in [
                    VariableKind::Q,
                    VariableKind::R,
                    VariableKind::S,
                    VariableKind::Xuv,
                    VariableKind::Yuv,
                    VariableKind::Xu,
                    VariableKind::Yu,
                ] {
                    let v = scaling_of(&kind, &ctx).unwrap();
                    let tv = tracking_value(&kind, ctx.q(), &ctx).unwrap();
                    if v == 0.0 {
                        assert_eq!(tv, 0.0);
                    } else {
                        assert!(rel(tv, v) < 1e-9, "{kind:?} n={n} t={t}");
                    }
                }
            }
        }
    }

    #[test]
    fn g_times_scaling_approximately_nonincreasing() {
        let params = ErrorParams::default().with_k(5.0);
        let n = 1e6;
        let kinds = [
            VariableKind::Q,
            VariableKind::R,
            VariableKind::S,
            VariableKind::Xuv,
            VariableKind::Yuv,
            VariableKind::Xu,
            VariableKind::Stacking("YO XO O E".parse().unwrap()),
            VariableKind::Stacking("XO YI YO".parse().unwrap()),
        ];
        let allowance = params.k() + 2f64.ln();
        for kind in &kinds {
            let ln_gv = |t: f64| {
                let ctx = ScalingContext::at_time(n, t).unwrap();
                let v = match kind {
                    VariableKind::Stacking(w) => {
                        let p = w.realize().pattern;
                        p.exponents(p.base_mask(), p.full_mask()).unwrap().ln_value(&ctx)
                    }
                    k => scaling_of(k, &ctx).unwrap().ln(),
                };
                error_band(kind, &ctx, &params).ln_g + v
            };
            let grid: Vec<f64> = (0..40).map(|k| 1.0 + 0.05 * k as f64).collect();
            for (a, &t) in grid.iter().enumerate() {
                for &t2 in &grid[a..] {
                    assert!(ln_gv(t2) <= ln_gv(t) + allowance + 1e-9, "{kind:?} t={t} t'={t2}");
                }
            }
        }
    }
}
