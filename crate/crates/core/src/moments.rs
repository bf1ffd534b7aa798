//! Moments of iterated minima and maxima.
//!
//! `‖W‖_r^r = r ∫_0^∞ t^{r-1} P(W > t) dt` is integrated in two pieces
//! split at the median `m` of the positive part of `W`: `[0, m]` after the
//! substitution `t = m v^{1/r}` and `[m, T]` after `t = m e^u`. Both
//! integrands are normalised by `m^r P(W > 0)`, so nothing underflows even
//! when `W` is the maximum or minimum of `2^30` copies. The tail beyond `T`
//! is added in closed form for power-law tails and pushed out geometrically
//! otherwise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::stable::StableTable;
use crate::distributions::{DistributionSpec, Law};
use crate::error::{Error, Result};
use crate::mc;
use crate::numeric::{logaddexp, MeanVar};
use crate::quad::{integrate, QuadConfig};

/// Minimum or maximum of i.i.d. copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Op {
    Min,
    Max,
}

impl Op {
    /// One-letter symbol: `m` for minima, `M` for maxima.
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Min => "m",
            Op::Max => "M",
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            Op::Min => "min",
            Op::Max => "max",
        }
    }
}

/// A product `M_{n_1} m_{k_1} … (X)` written outermost first; the last step
/// acts on `X` first. Text form: `max2.min3`, or `id` for the empty word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    pub steps: Vec<(Op, u64)>,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(steps: Vec<(Op, u64)>) -> Result<Self> {
        if let Some((_, c)) = steps.iter().find(|(_, c)| *c == 0) {
            return Err(Error::Domain(format!("word counts must be >= 1, got {c}")));
        }
        Ok(Self { steps })
    }

    pub fn single(op: Op, count: u64) -> Self {
        Self {
            steps: vec![(op, count.max(1))],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("id");
        }
        for (i, (op, c)) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{}{}", op.keyword(), c)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() || t == "id" {
            return Ok(Self::identity());
        }
        let mut steps = Vec::new();
        let mut pos = s.len() - s.trim_start().len();
        for part in t.split('.') {
            let (op, digits) = if let Some(d) = part.strip_prefix("max") {
                (Op::Max, d)
            } else if let Some(d) = part.strip_prefix("min") {
                (Op::Min, d)
            } else if let Some(d) = part.strip_prefix('M') {
                (Op::Max, d)
            } else if let Some(d) = part.strip_prefix('m') {
                (Op::Min, d)
            } else {
                return Err(Error::Parse {
                    pos,
                    msg: format!("expected 'max<n>' or 'min<n>', found '{part}'"),
                });
            };
            let count: u64 = digits.parse().map_err(|_| Error::Parse {
                pos: pos + part.len() - digits.len(),
                msg: format!("expected a positive count, found '{digits}'"),
            })?;
            if count == 0 {
                return Err(Error::Parse {
                    pos: pos + part.len() - digits.len(),
                    msg: "counts must be >= 1".into(),
                });
            }
            steps.push((op, count));
            pos += part.len() + 1;
        }
        Ok(Self { steps })
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Law of `W = word(X)`. Steps act right to left.
pub fn compose_cdf(spec: &DistributionSpec, word: &Word) -> DistributionSpec {
    word.steps
        .iter()
        .rev()
        .fold(spec.clone(), |acc, &(op, count)| if count == 1 { acc } else { acc.iterate(op, count) })
}

/// Request for `‖word(X)‖_r`.
#[derive(Debug, Clone)]
pub struct MomentQuery {
    pub spec: DistributionSpec,
    pub word: Word,
    pub r: f64,
    pub rel_tol: f64,
}

impl MomentQuery {
    pub fn new(spec: DistributionSpec, word: Word, r: f64) -> Self {
        Self {
            spec,
            word,
            r,
            rel_tol: 1e-9,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

fn check_exponent(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("moment exponent must be a positive number, got {r}")))
    }
}

/// `ln(r ∫_lo^hi u^{r-1} P(scale·X > u) du)` for finite `0 <= lo <= hi`.
///
/// `pivot` splits the range into a power-substituted lower piece and a
/// log-substituted upper piece.
fn log_segment(spec: &DistributionSpec, r: f64, lo: f64, hi: f64, scale: f64, pivot: f64, rel_tol: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(f64::NEG_INFINITY);
    }
    let lt_lo = spec.log_tail(lo / scale);
    if lt_lo == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let m = pivot.clamp(lo, hi);
    if !(m > 0.0 && (hi / m).is_finite()) {
        return Err(Error::Underflow {
            dist: spec.name().to_string(),
        });
    }
    let bps: Vec<f64> = spec.breakpoints().iter().map(|b| b * scale).collect();
    let lt = |t: f64| spec.log_tail(t / scale) - lt_lo;
    // far in a light tail, ln P(W > t) - ln P(W > lo) carries absolute noise
    // of order ε·|ln P(W > lo)|, which bounds the attainable accuracy
    let rel_tol = rel_tol.max(256.0 * f64::EPSILON * (lt_lo.abs() + 40.0));

    // [lo, m]: t = m v^{1/r}, integrand P(W > t) / P(W > lo)
    let v_lo = (lo / m).powf(r);
    let lower_bps: Vec<f64> = bps.iter().filter(|&&b| b > lo && b < m).map(|b| (b / m).powf(r)).collect();
    let inv_r = 1.0 / r;
    let lower = integrate(
        |v: f64| lt(m * v.powf(inv_r)).exp(),
        v_lo,
        1.0,
        &lower_bps,
        &QuadConfig::relative(0.25 * rel_tol),
    )?;

    // [m, hi]: t = m e^u, integrand r e^{ru} P(W > t) / P(W > lo)
    let u_hi = (hi / m).ln();
    let upper_bps: Vec<f64> = bps.iter().filter(|&&b| b > m && b < hi).map(|b| (b / m).ln()).collect();
    let cfg = QuadConfig {
        rel_tol: 0.25 * rel_tol,
        abs_tol: 0.25 * rel_tol * lower.value,
        ..QuadConfig::default()
    };
    let upper = integrate(
        |u: f64| {
            let t = if u >= u_hi { hi } else { m * u.exp() };
            r * (r * u + lt(t)).exp()
        },
        0.0,
        u_hi,
        &upper_bps,
        &cfg,
    )?;
    let total = lower.value + upper.value;
    Ok(r * m.ln() + lt_lo + total.ln())
}

/// Median of the positive part of `scale·X`, the natural split point.
fn pivot_for(spec: &DistributionSpec, scale: f64) -> f64 {
    let lt0 = spec.log_tail(0.0);
    scale * spec.quantile_log_upper(lt0 - std::f64::consts::LN_2)
}

/// `ln(r ∫_lo^∞ u^{r-1} P(X > u) du)`.
pub(crate) fn log_upper_integral(spec: &DistributionSpec, r: f64, lo: f64, rel_tol: f64) -> Result<f64> {
    check_exponent(r)?;
    if !spec.q_moment_finite(r) {
        return Err(Error::InfiniteMoment {
            dist: spec.name().to_string(),
            r,
        });
    }
    let lt_lo = spec.log_tail(lo);
    if lt_lo == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if let Some((table, w)) = table_view(spec) {
        // E[X^r - lo^r; X > lo], exact for the piecewise-linear table
        let above = w * table.partial_moment(r, lo, f64::INFINITY);
        return Ok((above - lo.powf(r) * lt_lo.exp()).max(0.0).ln());
    }
    let pivot = pivot_for(spec, 1.0);
    let top = spec.support_max();
    if top.is_finite() {
        return log_segment(spec, r, lo, top, 1.0, pivot, rel_tol);
    }
    let start = spec.quantile_log_upper(lt_lo + (1e-14f64).ln()).max(lo);
    if lo > 0.0 && start <= lo * (1.0 + 1e-9) {
        // the tail falls by 1e-14 within a relative step below 1e-9: the
        // one-term Laplace expansion r lo^{r-1} P(X > lo) / λ is exact to
        // that order, with λ the local decay rate of ln P(X > t)
        let h = lo * 1e-9;
        let rate = (lt_lo - spec.log_tail(lo + h)) / h;
        if rate > 0.0 && rate.is_finite() {
            return Ok(r.ln() + (r - 1.0) * lo.ln() + lt_lo - rate.ln());
        }
    }
    if let Some(beta) = spec.tail_index() {
        let body = log_segment(spec, r, lo, start, 1.0, pivot, rel_tol)?;
        let rem = r.ln() + r * start.ln() + spec.log_tail(start) - (beta - r).ln();
        return Ok(logaddexp(body, rem));
    }
    let body = log_segment(spec, r, lo, start, 1.0, pivot, rel_tol)?;
    let envelope = |t: f64| r.ln() + r * t.ln() + spec.log_tail(t);
    let target = body + (0.01 * rel_tol).ln();
    let limit = 2f64.powi(64) * pivot.max(lo).max(f64::MIN_POSITIVE);
    let mut end = start;
    while envelope(end) > target {
        end *= 2.0;
        if end > limit {
            return Err(Error::NonConvergent {
                rel_tol,
                panels: 0,
                error: envelope(end).exp(),
            });
        }
    }
    if end == start {
        Ok(body)
    } else {
        log_segment(spec, r, lo, end, 1.0, pivot, rel_tol)
    }
}

/// `ln E W^r` for `W = spec`. `-∞` when `W = 0` almost surely.
pub fn log_moment(spec: &DistributionSpec, r: f64, rel_tol: f64) -> Result<f64> {
    if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
        return Err(Error::Domain(format!("rel_tol must lie in (0, 1e-3], got {rel_tol}")));
    }
    log_upper_integral(spec, r, 0.0, effective_tol(spec, rel_tol))
}

/// Piecewise-linear tables cannot be integrated to 1e-9 within the panel
/// budget, and their own accuracy is far coarser.
pub const TABLE_QUAD_TOL: f64 = 1e-6;

pub(crate) fn effective_tol(spec: &DistributionSpec, rel_tol: f64) -> f64 {
    if spec.table_backed() {
        rel_tol.max(TABLE_QUAD_TOL)
    } else {
        rel_tol
    }
}

/// `ln ‖word(X)‖_r`.
pub fn log_moment_norm(q: &MomentQuery) -> Result<f64> {
    check_exponent(q.r)?;
    let w = compose_cdf(&q.spec, &q.word);
    // relative error on E W^r divides by r on the norm
    Ok(log_moment(&w, q.r, q.rel_tol * q.r.min(1.0))? / q.r)
}

/// `‖word(X)‖_r = (E W^r)^{1/r}`.
pub fn moment_norm(q: &MomentQuery) -> Result<f64> {
    log_moment_norm(q).map(f64::exp)
}

/// `E (s ∨ scale·X ∧ t)^r = s^r + r ∫_s^t u^{r-1} P(scale·X > u) du` for
/// finite `t`.
pub fn clipped_moment(spec: &DistributionSpec, s: f64, t: f64, scale: f64, r: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("clip needs a finite upper level, got t = {t}")));
    }
    if t == s && s >= 0.0 {
        return Ok(s.powf(r));
    }
    log_clip_moment(spec, s, t, scale, r).map(|c| c.ln_moment().exp())
}

/// Quadrature tolerance of the clip integrals.
pub const CLIP_TOL: f64 = 1e-11;

#[derive(Clone, Copy)]
enum Side {
    Cdf,
    Tail,
}

/// Average of `P(scale·X ≤ u)` or `P(scale·X > u)` over `[s, t]` against
/// `d(u^r)`, for `0 <= s < t < ∞`.
fn weighted_average(spec: &DistributionSpec, side: Side, s: f64, t: f64, scale: f64, r: f64, tol: f64) -> Result<f64> {
    let h = |u: f64| match side {
        Side::Cdf => spec.cdf(u / scale),
        Side::Tail => spec.tail(u / scale),
    };
    let pivot = pivot_for(spec, scale);
    let m = if pivot > 0.0 { pivot.clamp(s, t) } else { t };
    let bps: Vec<f64> = spec.breakpoints().iter().map(|b| b * scale).collect();
    let cfg = QuadConfig {
        abs_tol: 1e-20,
        ..QuadConfig::relative(tol)
    };
    let mut total = 0.0;
    if m > s {
        let (v_lo, v_hi) = ((s / t).powf(r), (m / t).powf(r));
        let cuts: Vec<f64> = bps.iter().filter(|&&b| b > s && b < m).map(|b| (b / t).powf(r)).collect();
        let inv_r = 1.0 / r;
        total += integrate(|v: f64| h(t * v.powf(inv_r)), v_lo, v_hi, &cuts, &cfg)?.value;
    }
    if m < t {
        let y_lo = (m / t).ln();
        let cuts: Vec<f64> = bps.iter().filter(|&&b| b > m && b < t).map(|b| (b / t).ln()).collect();
        total += integrate(|y: f64| r * (r * y).exp() * h(t * y.exp()), y_lo, 0.0, &cuts, &cfg)?.value;
    }
    let width = if s == 0.0 { 1.0 } else { -(r * (s / t).ln()).exp_m1() };
    Ok((total / width).clamp(0.0, 1.0))
}

/// `ln E (s ∨ scale·X ∧ t)^r` split as `r·level + corr`, where `level` is
/// `ln t` or `ln s`. Comparisons between two clips at the same levels can
/// then cancel the levels exactly and work on the small corrections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogClip {
    pub level: f64,
    pub corr: f64,
    pub r: f64,
}

impl LogClip {
    /// `ln E(·)^r`.
    pub fn ln_moment(&self) -> f64 {
        self.r * self.level + self.corr
    }

    /// `ln (E(·)^r)^{1/r}`.
    pub fn ln_norm(&self) -> f64 {
        self.level + self.corr / self.r
    }
}

/// `ln ‖lhs‖ − ln ‖rhs‖` and an error allowance for that difference, with
/// `rel` the relative accuracy of the corrections.
pub fn norm_gap(lhs: &LogClip, rhs: &LogClip, rel: f64) -> (f64, f64) {
    let (cl, cr) = (lhs.corr / lhs.r, rhs.corr / rhs.r);
    let gap = (lhs.level - rhs.level) + (cl - cr);
    let mut slack = rel * (cl.abs() + cr.abs());
    if lhs.level != rhs.level {
        slack += 1e-14 * (lhs.level.abs() + rhs.level.abs());
    }
    (gap, slack)
}

/// `E (s ∨ scale·X ∧ t)^r` in log form for `0 <= s <= t <= ∞`.
///
/// Written as `t^r (1 − w·avg P(scale·X ≤ u))` when the clip mostly sits at
/// `t`, and as `s^r (1 + w'·avg P(scale·X > u))` otherwise, so the result
/// keeps full relative accuracy when `s` and `t` are both far in a tail.
pub fn log_clip_moment(spec: &DistributionSpec, s: f64, t: f64, scale: f64, r: f64) -> Result<LogClip> {
    check_exponent(r)?;
    if !(s >= 0.0 && t >= s && s.is_finite()) {
        return Err(Error::Domain(format!("clip needs 0 <= s <= t, got s = {s}, t = {t}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive, got {scale}")));
    }
    let clip = |level: f64, corr: f64| Ok(LogClip { level, corr, r });
    if t == s {
        return clip(s.ln(), 0.0);
    }
    if let Some((table, w)) = table_view(spec) {
        return Ok(table_clip(table, w, s, t, scale, r));
    }
    let tol = effective_tol(spec, CLIP_TOL);
    if t == f64::INFINITY {
        if s == 0.0 {
            return clip(0.0, r * scale.ln() + log_moment(spec, r, tol.max(1e-10))?);
        }
        let above = r * scale.ln() + log_upper_integral(spec, r, s / scale, tol.max(1e-10))? - r * s.ln();
        return clip(s.ln(), above.exp().ln_1p());
    }
    let below = weighted_average(spec, Side::Cdf, s, t, scale, r, tol)?;
    if below <= 0.5 {
        let width = if s == 0.0 { 1.0 } else { -(r * (s / t).ln()).exp_m1() };
        return clip(t.ln(), (-width * below).ln_1p());
    }
    let above = weighted_average(spec, Side::Tail, s, t, scale, r, tol)?;
    if s == 0.0 {
        return clip(t.ln(), above.ln());
    }
    let width = (r * (t / s).ln()).exp_m1();
    clip(s.ln(), (width * above).ln_1p())
}

/// A tabulated law, possibly mixed with an atom at zero, as the table and
/// the weight `1 - P(X = 0)` it carries.
pub(crate) fn table_view(spec: &DistributionSpec) -> Option<(&StableTable, f64)> {
    match spec.law() {
        Law::StableMod { table, .. } => Some((table, 1.0)),
        Law::AtomZero { p0, base } => table_view(base).map(|(t, w)| (t, (1.0 - p0) * w)),
        _ => None,
    }
}

/// [`log_clip_moment`] for a tabulated law of weight `w` with the rest at
/// zero, from exact partial moments.
fn table_clip(table: &StableTable, w: f64, s: f64, t: f64, scale: f64, r: f64) -> LogClip {
    let (s1, t1) = (s / scale, t / scale);
    let probs = |x: f64| {
        let (below, above) = table.probabilities(x);
        (1.0 - w + w * below, w * above)
    };
    let (below_s, above_s) = probs(s1);
    let moment = |a: f64, b: f64| w * scale.powf(r) * table.partial_moment(r, a, b);
    let clip = |level: f64, corr: f64| LogClip { level, corr, r };
    if t == f64::INFINITY {
        if s == 0.0 {
            return clip(0.0, moment(0.0, f64::INFINITY).ln());
        }
        // E[(scale·X/s)^r - 1; scale·X > s]
        let excess = moment(s1, f64::INFINITY) / s.powf(r) - above_s;
        return clip(s.ln(), excess.ln_1p());
    }
    let (below_t, above_t) = probs(t1);
    let inner = moment(s1, t1);
    // E[1 - (s ∨ scale·X)^r / t^r; scale·X ≤ t]
    let deficit = below_s * -(r * (s / t).ln()).exp_m1() + (below_t - below_s) - inner / t.powf(r);
    if deficit <= 0.5 {
        return clip(t.ln(), (-deficit.max(0.0)).ln_1p());
    }
    if s == 0.0 {
        return clip(t.ln(), (inner / t.powf(r) + above_t).ln());
    }
    // E[(t ∧ scale·X)^r / s^r - 1; scale·X > s]
    let excess = inner / s.powf(r) + (r * (t / s).ln()).exp() * above_t - above_s;
    clip(s.ln(), excess.max(0.0).ln_1p())
}

/// Two-sided bound on `E M_N^r` around the pivot `b_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxMomentBounds {
    pub lower: f64,
    pub upper: f64,
    pub b_n: f64,
    /// `b_N` sits on a point mass, so `P(X ≥ b_N) > P(X > b_N)`.
    pub at_atom: bool,
}

/// `½(b_N^r + N r∫_{b_N}^∞ u^{r-1}P(X>u)du) ≤ E M_N^r ≤ b_N^r + N r∫_{b_N}^∞ …`
/// with `P(X > b_N) ≤ 1/N ≤ P(X ≥ b_N)`.
pub fn max_moment_bounds(spec: &DistributionSpec, n: u64, r: f64, rel_tol: f64) -> Result<MaxMomentBounds> {
    if n == 0 {
        return Err(Error::Domain("N must be >= 1".into()));
    }
    let b = spec.quantile_log_upper(-(n as f64).ln());
    let li = log_upper_integral(spec, r, b, effective_tol(spec, rel_tol))?;
    let tail_part = ((n as f64).ln() + li).exp();
    let br = b.powf(r);
    Ok(MaxMomentBounds {
        lower: 0.5 * (br + tail_part),
        upper: br + tail_part,
        b_n: b,
        at_atom: spec.atoms().contains(&b),
    })
}

/// `N P(M_N ≤ a) E X^r 1{X > a}`, a lower bound for `E M_N^r`.
pub fn max_moment_lower_at(spec: &DistributionSpec, a: f64, n: u64, r: f64, rel_tol: f64) -> Result<f64> {
    let li = log_upper_integral(spec, r, a, effective_tol(spec, rel_tol))?;
    let head = r * a.ln() + spec.log_tail(a);
    let restricted = if a > 0.0 { logaddexp(head, li) } else { li };
    let log_p = n as f64 * spec.log_cdf(a);
    Ok(((n as f64).ln() + log_p + restricted).exp())
}

/// `n u/(1 + n u) ≤ 1 − (1 − u)^n ≤ min(n u, 1)` with `u = P(X > t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSandwich {
    pub lower: f64,
    pub mid: f64,
    pub upper: f64,
}

pub fn tail_sandwich(u: f64, n: u64) -> TailSandwich {
    let nu = n as f64 * u;
    let mid = -(n as f64 * (-u).ln_1p()).exp_m1();
    let out = TailSandwich {
        lower: nu / (1.0 + nu),
        mid,
        upper: nu.min(1.0),
    };
    debug_assert!(out.lower <= out.mid * (1.0 + 1e-12) && out.mid <= out.upper * (1.0 + 1e-12));
    out
}

pub fn max_tail_sandwich(spec: &DistributionSpec, t: f64, n: u64) -> TailSandwich {
    tail_sandwich(spec.tail(t), n)
}

/// Monte Carlo estimate of `E W^r` from literal tournaments.
pub fn mc_moment(spec: &DistributionSpec, word: &Word, r: f64, replicates: usize, seed: u64) -> MeanVar {
    let w = compose_cdf(spec, word);
    let parts = mc::run_batches(seed, 0, replicates, |rng, count| {
        let mut acc = MeanVar::default();
        for _ in 0..count {
            acc.push(w.sample(rng).powf(r));
        }
        acc
    });
    let mut total = MeanVar::default();
    for p in &parts {
        total.merge(p);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::parse_spec;

    fn norm(spec: &str, word: &str, r: f64) -> Result<f64> {
        moment_norm(&MomentQuery::new(parse_spec(spec).unwrap(), word.parse().unwrap(), r))
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn word_text_round_trip() {
        let w: Word = "max2.min3".parse().unwrap();
        assert_eq!(w.steps, vec![(Op::Max, 2), (Op::Min, 3)]);
        assert_eq!(w.to_string(), "max2.min3");
        assert!("M2m3".parse::<Word>().is_err());
        assert_eq!("M2.m3".parse::<Word>().unwrap(), w);
        assert!("id".parse::<Word>().unwrap().is_identity());
        assert!(matches!("max0".parse::<Word>(), Err(Error::Parse { .. })));
        assert!(matches!("max2.foo".parse::<Word>(), Err(Error::Parse { pos: 5, .. })));
    }

    #[test]
    fn composition_acts_right_to_left() {
        let u = parse_spec("uniform(0,1)").unwrap();
        let w = compose_cdf(&u, &"max2.min3".parse().unwrap());
        assert!((w.cdf(0.5) - 0.765625).abs() < 1e-15);
        let id = compose_cdf(&u, &Word::identity());
        assert_eq!(id.cdf(0.3), u.cdf(0.3));
    }

    #[test]
    fn gamma_moments_of_exponential_minima() {
        let got = norm("exp(1)", "min4", 2.0).unwrap();
        assert!(close(got, 2f64.sqrt() / 4.0, 1e-9), "{got}");
        let n = 1u64 << 30;
        let got = norm("exp(1)", &format!("min{n}"), 3.0).unwrap();
        assert!(close(got, 6f64.cbrt() / n as f64, 1e-9), "{got}");
    }

    #[test]
    fn exponential_maxima_are_harmonic() {
        assert!(close(norm("exp(1)", "max2", 1.0).unwrap(), 1.5, 1e-9));
        let h10: f64 = (1..=10).map(|k| 1.0 / k as f64).sum();
        assert!(close(norm("exp(1)", "max10", 1.0).unwrap(), h10, 1e-9));
        let n = (1u64 << 30) as f64;
        let euler = 0.577_215_664_901_532_9;
        let hn = n.ln() + euler + 0.5 / n - 1.0 / (12.0 * n * n);
        assert!(close(norm("exp(1)", "max1073741824", 1.0).unwrap(), hn, 1e-9));
    }

    #[test]
    fn closed_form_norms() {
        let cases = [
            ("constant(2.5)", "max3.min2", 1.7, 2.5),
            ("pareto(3,1)", "id", 2.0, 3f64.sqrt()),
            ("halfnormal(1)", "id", 2.0, 1.0),
            ("lognormal(0,1)", "id", 2.0, std::f64::consts::E),
            ("weibull(2,1)", "id", 1.0, 0.886_226_925_452_758),
            ("uniform(0,1)", "id", 3.0, 0.25f64.cbrt()),
            ("uniform(1,3)", "id", 1.0, 2.0),
            ("atomzero(0.3,exp(1))", "id", 1.0, 0.7),
            ("exp(2)", "id", 0.5, 0.886_226_925_452_758f64.powi(2) / 2.0),
        ];
        for (spec, word, r, want) in cases {
            let got = norm(spec, word, r).unwrap();
            assert!(close(got, want, 1e-9), "{spec} {word} r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn stable_table_moments_match_closed_form() {
        // E|S|^r = 2^r Γ((1+r)/2) Γ(1-r/α) / (√π Γ(1-r/2))
        let g = statrs::function::gamma::gamma;
        for (alpha, r) in [(1.5, 1.0), (0.8, 0.5), (1.0, 0.5)] {
            let want = (2f64.powf(r) * g((1.0 + r) / 2.0) * g(1.0 - r / alpha)
                / (std::f64::consts::PI.sqrt() * g(1.0 - r / 2.0)))
            .powf(1.0 / r);
            let got = norm(&format!("stablemod({alpha})"), "id", r).unwrap();
            assert!(close(got, want, 1e-2), "alpha={alpha} r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn min_of_pareto_has_shifted_index() {
        // min of k Pareto(β, 1) is Pareto(kβ, 1): E X^r = kβ/(kβ - r)
        let got = norm("pareto(1.5,1)", "min2", 2.0).unwrap();
        assert!(close(got, (3.0f64 / 1.0).sqrt(), 1e-9), "{got}");
    }

    #[test]
    fn errors_are_typed() {
        assert!(matches!(norm("pareto(2,1)", "id", 2.0), Err(Error::InfiniteMoment { .. })));
        assert!(matches!(norm("pareto(3,1)", "max5", 3.0), Err(Error::InfiniteMoment { .. })));
        assert!(matches!(norm("loglight()", "min1073741824", 1.0), Err(Error::Underflow { .. })));
        let q = MomentQuery::new(parse_spec("exp(1)").unwrap(), Word::identity(), 1.0).with_rel_tol(0.1);
        assert!(matches!(moment_norm(&q), Err(Error::Domain(_))));
    }

    #[test]
    fn clipped_examples() {
        let u = parse_spec("uniform(0,1)").unwrap();
        let e = parse_spec("exp(1)").unwrap();
        assert_eq!(clipped_moment(&e, 2.0, 2.0, 1.0, 3.0).unwrap(), 8.0);
        assert!((clipped_moment(&u, 0.0, 1.0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((clipped_moment(&e, 0.0, 50.0, 1.0, 1.0).unwrap() - (1.0 - (-50f64).exp())).abs() < 1e-10);
        assert!(clipped_moment(&e, 0.0, f64::INFINITY, 1.0, 1.0).is_err());
        let full = log_clip_moment(&e, 0.0, f64::INFINITY, 2.0, 2.0).unwrap().ln_moment();
        assert!((full - 8f64.ln()).abs() < 1e-9);
        // E(1 ∨ 2U ∧ 1.5) = 0.5·1 + 0.25·1.25 + 0.25·1.5
        let got = clipped_moment(&u, 1.0, 1.5, 2.0, 1.0).unwrap();
        assert!((got - 1.1875).abs() < 1e-12, "{got}");
    }

    #[test]
    fn clip_moments_keep_relative_accuracy_in_tails() {
        let e = parse_spec("exp(1)").unwrap();
        // E(t ∧ X) = 1 - e^{-t}; E(t ∧ X)/t = (1 - e^{-t})/t
        for &t in &[1e-9, 1e-4, 0.3, 5.0] {
            let got = log_clip_moment(&e, 0.0, t, 1.0, 1.0).unwrap().ln_moment();
            let want = (-(-t).exp_m1()).ln();
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "t={t}: {got} {want}");
        }
        // E(s ∨ X) = s + e^{-s}
        for &s in &[1e-3, 1.0, 30.0] {
            let got = log_clip_moment(&e, s, f64::INFINITY, 1.0, 1.0).unwrap().ln_moment();
            let want = s.ln() + ((-s).exp() / s).ln_1p();
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "s={s}: {got} {want}");
        }
        // E(s ∨ X ∧ t) = s + e^{-s} - e^{-t}
        let (s, t) = (2.0f64, 3.0f64);
        let got = log_clip_moment(&e, s, t, 1.0, 1.0).unwrap().ln_moment().exp();
        assert!((got - (s + (-s).exp() - (-t).exp())).abs() < 1e-12);
    }

    #[test]
    fn max_bounds_for_exponential() {
        let e = parse_spec("exp(1)").unwrap();
        let b = max_moment_bounds(&e, 10, 1.0, 1e-10).unwrap();
        assert!((b.b_n - 10f64.ln()).abs() < 1e-14);
        let h10: f64 = (1..=10).map(|k| 1.0 / k as f64).sum();
        assert!(b.lower <= h10 && h10 <= b.upper, "{b:?}");
        let one = max_moment_bounds(&e, 1, 2.0, 1e-10).unwrap();
        assert_eq!(one.b_n, 0.0);
        assert!(one.lower <= 2.0 && close(one.upper, 2.0, 1e-12));
    }

    #[test]
    fn max_bounds_flag_atoms() {
        let c = parse_spec("atomzero(0.5,constant(1))").unwrap();
        let b = max_moment_bounds(&c, 3, 1.0, 1e-10).unwrap();
        assert_eq!(b.b_n, 1.0);
        assert!(b.at_atom);
    }

    #[test]
    fn sandwich_triples() {
        assert_eq!(tail_sandwich(0.5, 2), TailSandwich { lower: 0.5, mid: 0.75, upper: 1.0 });
        assert_eq!(tail_sandwich(0.0, 7), TailSandwich { lower: 0.0, mid: 0.0, upper: 0.0 });
        let t = tail_sandwich(1.0, 3);
        assert_eq!((t.lower, t.mid, t.upper), (0.75, 1.0, 1.0));
    }

    #[test]
    fn monte_carlo_matches_quadrature() {
        let spec = parse_spec("weibull(1.5,2)").unwrap();
        let word: Word = "max3.min2".parse().unwrap();
        let exact = log_moment(&compose_cdf(&spec, &word), 2.0, 1e-9).unwrap().exp();
        let mc = mc_moment(&spec, &word, 2.0, 200_000, 42);
        assert!((mc.mean - exact).abs() < 4.0 * mc.stderr(), "{} {}", mc.mean, exact);
    }

    proptest::proptest! {
        #[test]
        fn sandwich_is_ordered(u in 0.0f64..=1.0, n in 1u64..1_000_000) {
            let t = tail_sandwich(u, n);
            proptest::prop_assert!(t.lower <= t.mid * (1.0 + 1e-12) + 1e-300);
            proptest::prop_assert!(t.mid <= t.upper * (1.0 + 1e-12));
        }
    }
}
