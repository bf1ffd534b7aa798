//! Checkers for min/max hypercontractivity and the constants produced by the
//! equivalent characterizations.
//!
//! Conditions quantify over all `t`; the checkers test them on finite
//! logarithmic grids between extreme quantiles, and every verdict carries the
//! label `grid-certified`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::mc;
use crate::moments::{
    compose_cdf, effective_tol, log_clip_moment, log_moment, log_upper_integral, norm_gap, LogClip, Op, Word,
};
use crate::numeric::{log_grid, MeanVar};
use crate::par;

/// Label attached to every grid-based verdict.
pub const CERTIFICATION: &str = "grid-certified";
/// ε values for the min-side probability condition.
pub const EPS_MIN: [f64; 3] = [0.5, 0.1, 0.01];
/// ε values for the max-side tail condition.
pub const EPS_MAX: [f64; 2] = [0.5, 0.1];
/// Smallest τ and σ tried by the bisections.
pub const FLOOR: f64 = 1e-12;
/// Relative resolution of the τ bisection.
pub const TAU_REL_TOL: f64 = 1e-6;
/// Largest D on the ladder `2^{k/8}`.
pub const D_LIMIT: f64 = 1_048_576.0;
/// Grid endpoints are the quantiles at this probability from either end.
pub const GRID_QUANTILE: f64 = 1e-9;
/// Points per axis of the two-sided clip grid.
pub const CLIP_GRID: usize = 200;

const LOG_SLACK: f64 = 1e-12;

/// Exponents and grids shared by the checkers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperParams {
    pub p: f64,
    pub q: f64,
    pub n_grid: Vec<u64>,
    pub t_grid_size: usize,
    pub rel_tol: f64,
    pub rho: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 2.0,
            n_grid: (0..=30).map(|k| 1u64 << k).collect(),
            t_grid_size: 400,
            rel_tol: 1e-8,
            rho: 0.5,
        }
    }
}

impl HyperParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let h = Self {
            p,
            q,
            ..Self::default()
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < self.q && self.q.is_finite()) {
            return Err(Error::Domain(format!("need 0 < p < q < ∞, got p = {}, q = {}", self.p, self.q)));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("n_grid must be a nonempty strictly increasing list of positive integers".into()));
        }
        if self.t_grid_size < 2 {
            return Err(Error::Domain(format!("t_grid_size must be at least 2, got {}", self.t_grid_size)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(Error::Domain(format!("rel_tol must lie in (0, 1e-3], got {}", self.rel_tol)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Domain(format!("rho must be positive, got {}", self.rho)));
        }
        Ok(())
    }

    fn quad_tol(&self) -> f64 {
        (self.rel_tol * self.p.min(1.0)).max(1e-13)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    /// Conjunction: any failure fails, otherwise any doubt is inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fails, _) | (_, Fails) => Fails,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Holds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Kind {
    Min,
    Max,
    Minmax,
}

/// A grid point where an inequality was evaluated, with both sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub label: String,
    pub at: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Witness {
    fn new(label: &str, at: f64, lhs: f64, rhs: f64) -> Self {
        Self {
            label: label.into(),
            at,
            lhs,
            rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub verdict: Verdict,
    pub anchor: String,
    pub certification: &'static str,
    pub constants: BTreeMap<String, f64>,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl ConditionResult {
    fn new(verdict: Verdict, anchor: &str) -> Self {
        Self {
            verdict,
            anchor: anchor.into(),
            certification: CERTIFICATION,
            constants: BTreeMap::new(),
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.into(), value);
        self
    }

    fn witness(mut self, w: Witness) -> Self {
        self.witnesses.push(w);
        self
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }
}

/// Span of the `t` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpan {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperReport {
    pub kind: Kind,
    pub dist: String,
    pub p: f64,
    pub q: f64,
    pub t_grid: GridSpan,
    pub c_empirical: Option<f64>,
    pub c_argmax_n: Option<u64>,
    pub ratios: Vec<(u64, f64)>,
    pub sigma: Option<f64>,
    pub conditions: BTreeMap<String, ConditionResult>,
    pub implications: BTreeMap<String, ConditionResult>,
    pub notes: Vec<String>,
}

impl HyperReport {
    /// Conjunction of all condition and implication verdicts.
    pub fn verdict(&self) -> Verdict {
        self.conditions
            .values()
            .chain(self.implications.values())
            .fold(Verdict::Holds, |v, c| v.and(c.verdict))
    }

    pub fn condition(&self, key: &str) -> Option<&ConditionResult> {
        self.conditions.get(key)
    }
}

mod anchors {
    pub const MIN_I: &str = "||m_n||_q <= C ||m_n||_p";
    pub const MIN_II: &str = "P(X <= tau t) <= (1/2) P(X <= t), t <= rho ||X||_p";
    pub const MIN_III: &str = "P(X <= tau t) <= eps P(X <= t), t <= rho ||X||_p";
    pub const MIN_IV: &str = "(E(t ∧ sigma X)^q)^(1/q) <= (E(t ∧ X)^p)^(1/p)";
    pub const MAX_I: &str = "||M_n||_q <= C ||M_n||_p";
    pub const MAX_II: &str = "E X^q I(X > t) <= B^q t^q P(X > t), t >= rho ||X||_p";
    pub const MAX_III: &str = "D^q P(X > D t) <= eps P(X > t), t >= rho ||X||_p";
    pub const MAX_IV: &str = "(E(t ∨ sigma X)^q)^(1/q) <= (E(t ∨ X)^p)^(1/p)";
    pub const CLIP: &str = "(E(s ∨ sigma X ∧ t)^q)^(1/q) <= (E(s ∨ X ∧ t)^p)^(1/p)";
    pub const IV_I: &str = "||W_n||_q <= sigma^(-1) ||W_n||_p";
    pub const III_II: &str = "B^q <= D^q / (1 - eps)";
    pub const II_III: &str = "D = exp(B^(2q) / (q eps)) satisfies D^q P(X > D t) <= eps P(X > t)";
    pub const WORD: &str = "||W(X)||_q <= sigma^(-1) ||W(X)||_p";
}

// ---------------------------------------------------------------- ratios

/// `ln ‖W‖_p` and `ln ‖W‖_q` for `W = op_n(X)`.
fn ln_norms(spec: &DistributionSpec, word: &Word, params: &HyperParams) -> Result<(f64, f64)> {
    let w = compose_cdf(spec, word);
    let tol = params.quad_tol();
    Ok((
        log_moment(&w, params.p, tol)? / params.p,
        log_moment(&w, params.q, tol)? / params.q,
    ))
}

/// `‖W‖_q / ‖W‖_p` for `W = op_n(X)`.
pub fn hyper_ratio(spec: &DistributionSpec, op: Op, n: u64, params: &HyperParams) -> Result<f64> {
    let (lp, lq) = ln_norms(spec, &Word::single(op, n), params)?;
    Ok((lq - lp).exp())
}

fn ratio_profile(spec: &DistributionSpec, op: Op, params: &HyperParams) -> Vec<(u64, Result<f64>)> {
    par::map_slice(&params.n_grid, |&n| (n, hyper_ratio(spec, op, n, params)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperConstant {
    pub c: f64,
    pub argmax_n: u64,
    pub ratios: Vec<(u64, f64)>,
}

fn check_nonzero(spec: &DistributionSpec) -> Result<()> {
    if spec.tail(0.0) == 0.0 {
        return Err(Error::Domain(format!("{} is identically zero", spec.name())));
    }
    Ok(())
}

fn check_q_moment(spec: &DistributionSpec, q: f64) -> Result<()> {
    if spec.q_moment_finite(q) {
        Ok(())
    } else {
        Err(Error::InfiniteMoment {
            dist: spec.name().to_string(),
            r: q,
        })
    }
}

fn argmax(ratios: &[(u64, f64)]) -> Option<(u64, f64)> {
    ratios.iter().fold(None, |best: Option<(u64, f64)>, &(n, r)| match best {
        Some((_, b)) if b >= r => best,
        _ => Some((n, r)),
    })
}

/// `max_n ‖op_n(X)‖_q / ‖op_n(X)‖_p` over the n grid and its arg-max.
pub fn empirical_hyper_constant(spec: &DistributionSpec, params: &HyperParams, op: Op) -> Result<HyperConstant> {
    params.validate()?;
    check_nonzero(spec)?;
    if op == Op::Max {
        check_q_moment(spec, params.q)?;
    }
    let ratios = ratio_profile(spec, op, params)
        .into_iter()
        .map(|(n, r)| r.map(|r| (n, r)))
        .collect::<Result<Vec<_>>>()?;
    let (argmax_n, c) = argmax(&ratios).expect("n_grid is nonempty");
    Ok(HyperConstant { c, argmax_n, ratios })
}

// ---------------------------------------------------------------- grids

fn t_grid(spec: &DistributionSpec, size: usize) -> Vec<f64> {
    let a0 = spec.atom_at_zero();
    let lo = spec.quantile(a0 + GRID_QUANTILE * (1.0 - a0)).max(1e-300);
    let hi = spec.quantile_upper(GRID_QUANTILE * (1.0 - a0)).max(lo);
    let mut v = log_grid(lo, hi, size);
    v.dedup();
    v
}

fn span(ts: &[f64]) -> GridSpan {
    GridSpan {
        lo: ts[0],
        hi: *ts.last().expect("grid is nonempty"),
        points: ts.len(),
    }
}

fn norm_p(spec: &DistributionSpec, params: &HyperParams) -> Result<f64> {
    Ok((log_moment(spec, params.p, params.quad_tol())? / params.p).exp())
}

/// Relative accuracy of clip-moment corrections for this law.
fn clip_accuracy(spec: &DistributionSpec) -> f64 {
    // tables, alone or with an atom at zero, are integrated exactly; other
    // compositions of them go through quadrature
    if spec.table_backed() && crate::moments::table_view(spec).is_none() {
        1e3 * effective_tol(spec, 1e-12)
    } else {
        1e-9
    }
}

// ---------------------------------------------------------------- searches

/// Result of a monotone bisection on `σ ∈ [FLOOR, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaFit {
    /// Largest σ found to hold at every grid point.
    pub sigma: Option<f64>,
    /// Smallest σ seen to fail, with its witness.
    pub tight: Option<(f64, Witness)>,
}

/// Bisect σ against `check(σ, point)`, which returns a witness on
/// violation. The violated set must grow with σ.
pub fn sigma_search<P, F>(points: &[P], check: F, rel_tol: f64) -> Result<SigmaFit>
where
    P: Sync,
    F: Fn(f64, &P) -> Result<Option<Witness>> + Sync + Send,
{
    let mut hint: Option<usize> = None;
    let mut violation = |sigma: f64| -> Result<Option<Witness>> {
        if let Some(i) = hint {
            if let Some(w) = check(sigma, &points[i])? {
                return Ok(Some(w));
            }
        }
        let found = par::find_first(points.len(), |i| match check(sigma, &points[i]) {
            Ok(None) => None,
            Ok(Some(w)) => Some(Ok(w)),
            Err(e) => Some(Err(e)),
        });
        match found {
            None => Ok(None),
            Some((i, r)) => {
                hint = Some(i);
                r.map(Some)
            }
        }
    };
    let Some(mut tight) = violation(1.0)? else {
        return Ok(SigmaFit {
            sigma: Some(1.0),
            tight: None,
        });
    };
    if let Some(w) = violation(FLOOR)? {
        return Ok(SigmaFit {
            sigma: None,
            tight: Some((FLOOR, w)),
        });
    }
    let (mut lo, mut hi) = (FLOOR, 1.0);
    while hi > lo * (1.0 + 10.0 * rel_tol) {
        let mid = (lo * hi).sqrt();
        match violation(mid)? {
            None => lo = mid,
            Some(w) => {
                hi = mid;
                tight = w;
            }
        }
    }
    Ok(SigmaFit {
        sigma: Some(lo),
        tight: Some((hi, tight)),
    })
}

#[derive(Debug, Clone, PartialEq)]
struct TauFit {
    tau: Option<f64>,
    witness: Option<Witness>,
}

fn tau_violation(spec: &DistributionSpec, ts: &[f64], tau: f64, ln_eps: f64) -> Option<Witness> {
    par::find_first(ts.len(), |i| {
        let t = ts[i];
        let lc = spec.log_cdf(t);
        if lc == f64::NEG_INFINITY {
            return None;
        }
        let l = spec.log_cdf(tau * t);
        (l > ln_eps + lc + LOG_SLACK).then(|| Witness::new("t", t, l.exp(), (ln_eps + lc).exp()))
    })
    .map(|(_, w)| w)
}

/// Largest τ with `P(X ≤ τt) ≤ ε P(X ≤ t)` on `ts`.
fn fit_tau(spec: &DistributionSpec, ts: &[f64], eps: f64) -> TauFit {
    let ln_eps = eps.ln();
    let Some(mut last) = tau_violation(spec, ts, 1.0, ln_eps) else {
        return TauFit {
            tau: Some(1.0),
            witness: None,
        };
    };
    if let Some(w) = tau_violation(spec, ts, FLOOR, ln_eps) {
        return TauFit {
            tau: None,
            witness: Some(w),
        };
    }
    let (mut lo, mut hi) = (FLOOR, 1.0);
    while hi > lo * (1.0 + TAU_REL_TOL) {
        let mid = (lo * hi).sqrt();
        match tau_violation(spec, ts, mid, ln_eps) {
            None => lo = mid,
            Some(w) => {
                hi = mid;
                last = w;
            }
        }
    }
    TauFit {
        tau: Some(lo),
        witness: Some(last),
    }
}

/// `ln P(X > Dt)` with `ln D` given; beyond the largest double the tail
/// is extended through the tail index, or taken as zero for lighter tails.
fn log_tail_scaled(spec: &DistributionSpec, t: f64, lt: f64, ln_d: f64) -> f64 {
    let x = (ln_d + t.ln()).exp();
    if x.is_finite() {
        return spec.log_tail(x);
    }
    match spec.tail_index() {
        Some(beta) => lt - beta * ln_d,
        None => f64::NEG_INFINITY,
    }
}

fn d_violation(spec: &DistributionSpec, ts: &[(f64, f64)], ln_d: f64, q: f64, ln_eps: f64) -> Option<Witness> {
    par::find_first(ts.len(), |i| {
        let (t, lt) = ts[i];
        let lhs = q * ln_d + log_tail_scaled(spec, t, lt, ln_d);
        (lhs > ln_eps + lt + LOG_SLACK).then(|| Witness::new("t", t, lhs.exp(), (ln_eps + lt).exp()))
    })
    .map(|(_, w)| w)
}

#[derive(Debug, Clone, PartialEq)]
struct DFit {
    d: Option<f64>,
    witness: Option<Witness>,
}

/// Smallest `D = 2^{k/8}` with `D^q P(X > Dt) ≤ ε P(X > t)` on `ts`.
fn fit_d(spec: &DistributionSpec, ts: &[(f64, f64)], q: f64, eps: f64) -> DFit {
    let ln_eps = eps.ln();
    let mut witness = None;
    for k in 1..=160 {
        let d = 2f64.powf(k as f64 / 8.0);
        match d_violation(spec, ts, d.ln(), q, ln_eps) {
            None => {
                return DFit {
                    d: Some(d),
                    witness: None,
                }
            }
            Some(w) => witness = Some(w),
        }
    }
    DFit { d: None, witness }
}

/// Points `(t, ln P(X > t))` of `ts` with `t ≥ from` and positive tail.
fn tail_points(spec: &DistributionSpec, ts: &[f64], from: f64) -> Vec<(f64, f64)> {
    ts.iter()
        .filter(|&&t| t >= from)
        .map(|&t| (t, spec.log_tail(t)))
        .filter(|&(_, lt)| lt > f64::NEG_INFINITY)
        .collect()
}

// ---------------------------------------------------------------- min

fn min_tau_conditions(spec: &DistributionSpec, small: &[f64]) -> (ConditionResult, ConditionResult) {
    let fit = |eps: f64| {
        let f = fit_tau(spec, small, eps);
        let vacuous = f.tau == Some(1.0) && f.witness.is_none();
        (f, vacuous)
    };
    let (f, vacuous) = fit(0.5);
    let mut ii = match f.tau {
        Some(tau) => ConditionResult::new(Verdict::Holds, anchors::MIN_II)
            .constant("eps", 0.5)
            .constant("tau", tau),
        None => ConditionResult::new(Verdict::Fails, anchors::MIN_II).constant("eps", 0.5),
    };
    if let Some(w) = f.witness {
        ii = ii.witness(w);
    }
    if vacuous {
        ii = ii.note("P(X <= t) = 0 on the whole grid; the condition is vacuous");
    }
    let mut iii = ConditionResult::new(Verdict::Holds, anchors::MIN_III);
    for eps in EPS_MIN {
        let (f, _) = fit(eps);
        match f.tau {
            Some(tau) => iii = iii.constant(&format!("tau@eps={eps}"), tau),
            None => {
                iii.verdict = Verdict::Fails;
                iii = iii.note(format!("no tau >= {FLOOR:e} for eps = {eps}"));
                if let Some(w) = f.witness {
                    iii = iii.witness(w);
                }
            }
        }
    }
    (ii, iii)
}

fn atom_conditions(spec: &DistributionSpec, params: &HyperParams) -> [(String, ConditionResult); 3] {
    let p0 = spec.atom_at_zero();
    let atom = |anchor: &str, eps: f64| {
        ConditionResult::new(Verdict::Fails, anchor)
            .witness(Witness::new("atom", 0.0, p0, eps * p0))
            .note(format!("P(X = 0) = {p0}, so P(X <= tau t) / P(X <= t) -> 1 as t -> 0"))
    };
    let cont = 1.0 - p0;
    let iv = ConditionResult::new(Verdict::Fails, anchors::MIN_IV)
        .witness(Witness::new(
            "t->0, both sides divided by t",
            0.0,
            cont.powf(1.0 / params.q),
            cont.powf(1.0 / params.p),
        ))
        .note("the limit ratio does not depend on sigma, so no sigma > 0 works");
    [
        ("ii".into(), atom(anchors::MIN_II, 0.5)),
        ("iii".into(), atom(anchors::MIN_III, 0.01)),
        ("iv".into(), iv),
    ]
}

struct ClipPoint {
    s: f64,
    t: f64,
    rhs: LogClip,
}

fn clip_points(spec: &DistributionSpec, pairs: Vec<(f64, f64)>, p: f64) -> Result<Vec<ClipPoint>> {
    par::map_slice(&pairs, |&(s, t)| {
        Ok(ClipPoint {
            s,
            t,
            rhs: log_clip_moment(spec, s, t, 1.0, p)?,
        })
    })
    .into_iter()
    .collect()
}

fn clip_check<'a>(spec: &'a DistributionSpec, q: f64, label: &'static str) -> impl Fn(f64, &ClipPoint) -> Result<Option<Witness>> + Sync + Send + 'a {
    let rel = clip_accuracy(spec);
    move |sigma: f64, pt: &ClipPoint| {
        let lhs = log_clip_moment(spec, pt.s, pt.t, sigma, q)?;
        let (gap, slack) = norm_gap(&lhs, &pt.rhs, rel);
        let at = if label == "s" { pt.s } else { pt.t };
        Ok((gap > slack).then(|| Witness::new(label, at, lhs.ln_norm().exp(), pt.rhs.ln_norm().exp())))
    }
}

fn sigma_condition(fit: &SigmaFit, anchor: &str) -> ConditionResult {
    let mut c = match fit.sigma {
        Some(s) => ConditionResult::new(Verdict::Holds, anchor).constant("sigma", s),
        None => ConditionResult::new(Verdict::Fails, anchor).note(format!("fails already at sigma = {FLOOR:e}")),
    };
    if let Some((s, w)) = &fit.tight {
        c = c.constant("sigma_fail", *s).witness(w.clone());
    }
    c
}

/// Relative slack for comparing quadrature moments of this law.
fn moment_slack(spec: &DistributionSpec, params: &HyperParams) -> f64 {
    if spec.table_backed() {
        100.0 * effective_tol(spec, params.rel_tol)
    } else {
        params.rel_tol
    }
}

/// Relative resolution of the σ bisection for this law.
fn sigma_tol(spec: &DistributionSpec, params: &HyperParams) -> f64 {
    if spec.table_backed() {
        params.rel_tol.max(1e-5)
    } else {
        params.rel_tol
    }
}

/// `‖W_n‖_q ≤ σ^{-1}‖W_n‖_p` on the n grid.
fn sigma_implies_ratio(ratios: &[(u64, f64)], sigma: f64, rel_tol: f64) -> ConditionResult {
    let bound = 1.0 / sigma;
    let mut c = ConditionResult::new(Verdict::Holds, anchors::IV_I).constant("bound", bound);
    for &(n, r) in ratios {
        if r > bound * (1.0 + rel_tol) {
            c.verdict = Verdict::Fails;
            c = c.witness(Witness::new("n", n as f64, r, bound));
        }
    }
    c
}

struct Profile {
    ratios: Vec<(u64, f64)>,
    skipped: Vec<String>,
}

fn profile(spec: &DistributionSpec, op: Op, params: &HyperParams) -> Result<Profile> {
    let mut out = Profile {
        ratios: Vec::new(),
        skipped: Vec::new(),
    };
    for (n, r) in ratio_profile(spec, op, params) {
        match r {
            Ok(r) => out.ratios.push((n, r)),
            Err(e @ Error::Underflow { .. }) => out.skipped.push(format!("n = {n}: {e}")),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn ratio_condition(prof: &Profile, anchor: &str, sigma: Option<f64>, sub_fails: bool) -> ConditionResult {
    let mut c = ConditionResult::new(Verdict::Inconclusive, anchor);
    if let Some((n, r)) = argmax(&prof.ratios) {
        c = c.constant("C", r).constant("argmax_n", n as f64);
        if sub_fails {
            let (n_last, r_last) = *prof.ratios.last().expect("nonempty");
            c = c.witness(Witness::new("n", n_last as f64, r_last, r));
        }
    }
    c.verdict = if sub_fails {
        Verdict::Fails
    } else if sigma.is_some() {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    for s in &prof.skipped {
        c = c.note(format!("skipped {s}"));
    }
    c
}

fn base_report(kind: Kind, spec: &DistributionSpec, params: &HyperParams, ts: &[f64], prof: &Profile) -> HyperReport {
    let best = argmax(&prof.ratios);
    HyperReport {
        kind,
        dist: spec.name().to_string(),
        p: params.p,
        q: params.q,
        t_grid: span(ts),
        c_empirical: best.map(|b| b.1),
        c_argmax_n: best.map(|b| b.0),
        ratios: prof.ratios.clone(),
        sigma: None,
        conditions: BTreeMap::new(),
        implications: BTreeMap::new(),
        notes: Vec::new(),
    }
}

/// The four equivalent min-side conditions on the grids of `params`.
pub fn check_min_conditions(spec: &DistributionSpec, params: &HyperParams) -> Result<HyperReport> {
    params.validate()?;
    check_nonzero(spec)?;
    check_q_moment(spec, params.q)?;
    let ts = t_grid(spec, params.t_grid_size);
    let prof = profile(spec, Op::Min, params)?;
    let mut rep = base_report(Kind::Min, spec, params, &ts, &prof);

    if spec.atom_at_zero() > 0.0 {
        for (k, c) in atom_conditions(spec, params) {
            rep.conditions.insert(k, c);
        }
        rep.conditions.insert("i".into(), ratio_condition(&prof, anchors::MIN_I, None, true));
        rep.notes.push("atom at zero: min-side conditions fail".into());
        return Ok(rep);
    }

    let t0 = params.rho * norm_p(spec, params)?;
    let small: Vec<f64> = ts.iter().copied().filter(|&t| t <= t0).collect();
    let (ii, iii) = min_tau_conditions(spec, &small);
    let sub_fails = iii.verdict == Verdict::Fails;

    let mut pairs: Vec<(f64, f64)> = ts.iter().map(|&t| (0.0, t)).collect();
    pairs.push((0.0, f64::INFINITY));
    let points = clip_points(spec, pairs, params.p)?;
    let fit = sigma_search(&points, clip_check(spec, params.q, "t"), sigma_tol(spec, params))?;
    let mut iv = sigma_condition(&fit, anchors::MIN_IV);
    rep.sigma = fit.sigma;

    let mut i = ratio_condition(&prof, anchors::MIN_I, fit.sigma, sub_fails);
    if sub_fails && fit.sigma.is_some() {
        iv.verdict = Verdict::Inconclusive;
        iv = iv.note("a sigma holds on the grid although the probability condition fails; the grid does not reach the failing regime");
        i.verdict = Verdict::Inconclusive;
    }
    if let Some(sigma) = fit.sigma {
        rep.implications
            .insert("iv=>i".into(), sigma_implies_ratio(&prof.ratios, sigma, moment_slack(spec, params)));
    }
    rep.conditions.insert("i".into(), i);
    rep.conditions.insert("ii".into(), ii);
    rep.conditions.insert("iii".into(), iii);
    rep.conditions.insert("iv".into(), iv);
    Ok(rep)
}

// ---------------------------------------------------------------- max

/// `B(t) = (E X^q I(X>t) / (t^q P(X>t)))^{1/q}` at each point.
fn fit_b(spec: &DistributionSpec, pts: &[(f64, f64)], q: f64, tol: f64) -> Result<Vec<f64>> {
    par::map_slice(pts, |&(t, lt)| {
        let excess = log_upper_integral(spec, q, t, tol)?;
        Ok(((excess - q * t.ln() - lt).exp().ln_1p() / q).exp())
    })
    .into_iter()
    .collect()
}

/// The four equivalent max-side conditions on the grids of `params`.
pub fn check_max_conditions(spec: &DistributionSpec, params: &HyperParams) -> Result<HyperReport> {
    params.validate()?;
    check_nonzero(spec)?;
    check_q_moment(spec, params.q)?;
    let q = params.q;
    let ts = t_grid(spec, params.t_grid_size);
    let prof = profile(spec, Op::Max, params)?;
    let mut rep = base_report(Kind::Max, spec, params, &ts, &prof);

    let t0 = params.rho * norm_p(spec, params)?;
    let big = tail_points(spec, &ts, t0);

    let bs = fit_b(spec, &big, q, effective_tol(spec, params.quad_tol().max(1e-10)))?;
    let b_best = bs
        .iter()
        .zip(&big)
        .fold(None, |acc: Option<(f64, f64)>, (&b, &(t, _))| match acc {
            Some((bb, _)) if bb >= b => acc,
            _ => Some((b, t)),
        });
    let ii = match b_best {
        Some((b, t)) => ConditionResult::new(Verdict::Holds, anchors::MAX_II)
            .constant("B", b)
            .witness(Witness::new("t", t, b.powf(q), b.powf(q))),
        None => ConditionResult::new(Verdict::Holds, anchors::MAX_II)
            .constant("B", 1.0)
            .note("P(X > t) = 0 on the whole grid; the condition is vacuous"),
    };
    let b_fit = b_best.map_or(1.0, |b| b.0);

    let mut iii = ConditionResult::new(Verdict::Holds, anchors::MAX_III);
    let mut iii_ii = ConditionResult::new(Verdict::Holds, anchors::III_II).constant("B_fit", b_fit);
    let mut super_fails = false;
    for eps in EPS_MAX {
        let f = fit_d(spec, &big, q, eps);
        match f.d {
            Some(d) => {
                iii = iii.constant(&format!("D@eps={eps}"), d);
                let b_rec = d * (1.0 - eps).powf(-1.0 / q);
                iii_ii = iii_ii.constant(&format!("B_rec@eps={eps}"), b_rec);
                if b_fit > b_rec * (1.0 + 1e-9) {
                    iii_ii.verdict = Verdict::Fails;
                    iii_ii = iii_ii.witness(Witness::new("eps", eps, b_fit, b_rec));
                }
            }
            None => {
                super_fails = true;
                iii.verdict = Verdict::Fails;
                iii = iii.note(format!("no D <= {D_LIMIT:e} for eps = {eps}"));
                if let Some(w) = f.witness {
                    iii = iii.witness(w);
                }
            }
        }
    }

    let mut ii_iii = ConditionResult::new(Verdict::Holds, anchors::II_III);
    for eps in EPS_MAX {
        let ln_d = b_fit.powf(2.0 * q) / (q * eps);
        ii_iii = ii_iii.constant(&format!("lnD@eps={eps}"), ln_d);
        if let Some(w) = d_violation(spec, &big, ln_d, q, eps.ln()) {
            ii_iii.verdict = Verdict::Fails;
            ii_iii = ii_iii.witness(w);
        }
    }

    let mut pairs: Vec<(f64, f64)> = ts.iter().map(|&t| (t, f64::INFINITY)).collect();
    pairs.insert(0, (0.0, f64::INFINITY));
    let points = clip_points(spec, pairs, params.p)?;
    let fit = sigma_search(&points, clip_check(spec, q, "s"), sigma_tol(spec, params))?;
    let mut iv = sigma_condition(&fit, anchors::MAX_IV);
    rep.sigma = fit.sigma;

    let mut i = ratio_condition(&prof, anchors::MAX_I, fit.sigma, super_fails);
    if super_fails && fit.sigma.is_some() {
        iv.verdict = Verdict::Inconclusive;
        iv = iv.note("a sigma holds on the grid although the tail condition fails; the grid does not reach the failing regime");
        i.verdict = Verdict::Inconclusive;
    }
    if let Some(sigma) = fit.sigma {
        rep.implications
            .insert("iv=>i".into(), sigma_implies_ratio(&prof.ratios, sigma, moment_slack(spec, params)));
    }
    rep.implications.insert("iii=>ii".into(), iii_ii);
    rep.implications.insert("ii=>iii".into(), ii_iii);
    rep.conditions.insert("i".into(), i);
    rep.conditions.insert("ii".into(), ii);
    rep.conditions.insert("iii".into(), iii);
    rep.conditions.insert("iv".into(), iv);
    Ok(rep)
}

// ---------------------------------------------------------------- two-sided

fn subregular_both(spec: &DistributionSpec, params: &HyperParams) -> Result<()> {
    if spec.atom_at_zero() > 0.0 {
        return Err(Error::NotSubregular(format!("{} has an atom at zero", spec.name())));
    }
    check_q_moment(spec, params.q)?;
    let ts = t_grid(spec, params.t_grid_size);
    let t0 = params.rho * norm_p(spec, params)?;
    let small: Vec<f64> = ts.iter().copied().filter(|&t| t <= t0).collect();
    for eps in EPS_MIN {
        let f = fit_tau(spec, &small, eps);
        if f.tau.is_none() {
            let at = f.witness.map_or(f64::NAN, |w| w.at);
            return Err(Error::NotSubregular(format!(
                "P(X <= tau t) <= {eps} P(X <= t) fails at t = {at:e} for every tau >= {FLOOR:e}"
            )));
        }
    }
    let big = tail_points(spec, &ts, t0);
    for eps in EPS_MAX {
        let f = fit_d(spec, &big, params.q, eps);
        if f.d.is_none() {
            let at = f.witness.map_or(f64::NAN, |w| w.at);
            return Err(Error::NotSubregular(format!(
                "D^q P(X > D t) <= {eps} P(X > t) fails at t = {at:e} for every D <= {D_LIMIT:e}"
            )));
        }
    }
    Ok(())
}

/// Largest σ with `(E(s ∨ σX ∧ t)^q)^{1/q} ≤ (E(s ∨ X ∧ t)^p)^{1/p}` on the
/// two-sided grid: `s ∈ {0} ∪ grid`, `t ∈ grid ∪ {∞}`, `s < t`.
pub fn clip_sigma_search(spec: &DistributionSpec, params: &HyperParams) -> Result<SigmaFit> {
    params.validate()?;
    check_nonzero(spec)?;
    subregular_both(spec, params)?;
    let ts = t_grid(spec, CLIP_GRID);
    let mut lows = vec![0.0];
    lows.extend(&ts);
    let mut highs = ts.clone();
    highs.push(f64::INFINITY);
    let pairs: Vec<(f64, f64)> = lows
        .iter()
        .flat_map(|&s| highs.iter().filter(move |&&t| t > s).map(move |&t| (s, t)))
        .collect();
    let points = clip_points(spec, pairs, params.p)?;
    sigma_search(&points, clip_check(spec, params.q, "s"), sigma_tol(spec, params))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordCheck {
    pub word: Word,
    pub ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IteratedReport {
    pub dist: String,
    pub sigma: f64,
    pub d: f64,
    pub anchor: &'static str,
    pub certification: &'static str,
    pub words: Vec<WordCheck>,
}

impl IteratedReport {
    pub fn all_hold(&self) -> bool {
        self.words.iter().all(|w| w.holds)
    }
}

/// Words `M_{n_1} m_{k_1} … M_{n_l} m_{k_l}` with `1 ≤ l ≤ max_blocks` and
/// every count drawn from `counts`.
pub fn block_words(max_blocks: usize, counts: &[u64]) -> Vec<Word> {
    let mut out = Vec::new();
    let mut prefixes: Vec<Vec<(Op, u64)>> = vec![Vec::new()];
    for _ in 0..max_blocks {
        let mut next = Vec::new();
        for pre in &prefixes {
            for &n in counts {
                for &k in counts {
                    let mut steps = pre.clone();
                    steps.push((Op::Max, n));
                    steps.push((Op::Min, k));
                    next.push(steps);
                }
            }
        }
        out.extend(next.iter().map(|s| Word { steps: s.clone() }));
        prefixes = next;
    }
    out
}

/// `‖W(X)‖_q ≤ σ^{-1}‖W(X)‖_p` for every word, by exact composition.
pub fn iterated_hyper_check(
    spec: &DistributionSpec,
    params: &HyperParams,
    sigma: f64,
    words: &[Word],
) -> Result<IteratedReport> {
    params.validate()?;
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::Domain(format!("sigma must lie in (0, 1], got {sigma}")));
    }
    let d = 1.0 / sigma;
    let slack = moment_slack(spec, params);
    let checks = par::map_slice(words, |w| {
        let (lp, lq) = ln_norms(spec, w, params)?;
        let ratio = (lq - lp).exp();
        Ok(WordCheck {
            word: w.clone(),
            ratio,
            holds: ratio <= d * (1.0 + slack),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(IteratedReport {
        dist: spec.name().to_string(),
        sigma,
        d,
        anchor: anchors::WORD,
        certification: CERTIFICATION,
        words: checks,
    })
}

/// Min-side, max-side and two-sided checks in one report. Keys are prefixed
/// with `min.`, `max.` and `clip`.
pub fn check_minmax(spec: &DistributionSpec, params: &HyperParams) -> Result<HyperReport> {
    let min = check_min_conditions(spec, params)?;
    let max = check_max_conditions(spec, params)?;
    let mut rep = HyperReport {
        kind: Kind::Minmax,
        c_empirical: None,
        c_argmax_n: None,
        ratios: Vec::new(),
        sigma: None,
        conditions: BTreeMap::new(),
        implications: BTreeMap::new(),
        notes: Vec::new(),
        ..min.clone()
    };
    for (side, r) in [("min", &min), ("max", &max)] {
        for (k, c) in &r.conditions {
            rep.conditions.insert(format!("{side}.{k}"), c.clone());
        }
        for (k, c) in &r.implications {
            rep.implications.insert(format!("{side}.{k}"), c.clone());
        }
        rep.notes.extend(r.notes.iter().map(|n| format!("{side}: {n}")));
    }
    match clip_sigma_search(spec, params) {
        Ok(fit) => {
            rep.sigma = fit.sigma;
            let clip = sigma_condition(&fit, anchors::CLIP);
            if let Some(sigma) = fit.sigma {
                let words = block_words(2, &[2, 4, 8]);
                let it = iterated_hyper_check(spec, params, sigma, &words)?;
                let mut c = ConditionResult::new(Verdict::Holds, anchors::WORD).constant("D", it.d);
                for w in it.words.iter().filter(|w| !w.holds) {
                    c.verdict = Verdict::Fails;
                    c = c.witness(Witness::new(&w.word.to_string(), 0.0, w.ratio, it.d));
                }
                rep.implications.insert("clip=>words".into(), c);
            }
            rep.conditions.insert("clip".into(), clip);
        }
        Err(Error::NotSubregular(msg)) => {
            rep.conditions.insert(
                "clip".into(),
                ConditionResult::new(Verdict::Fails, anchors::CLIP).note(msg),
            );
        }
        Err(e) => return Err(e),
    }
    Ok(rep)
}

// ---------------------------------------------------------------- constants

/// Truncation level `α = 2^{1/(q-p)} C^{q/(q-p)}`: under `‖W‖_q ≤ C‖W‖_p`,
/// `E W^p ≤ 2 E W^p I(W ≤ α‖W‖_p)`.
pub fn truncation_alpha(c: f64, p: f64, q: f64) -> f64 {
    2f64.powf(1.0 / (q - p)) * c.powf(q / (q - p))
}

/// Paley–Zygmund lower bound `((1-λ^p) C^{-p})^{q/(q-p)}` on
/// `P(W > λ‖W‖_p)`.
pub fn paley_zygmund_bound(c: f64, p: f64, q: f64, lambda: f64) -> f64 {
    ((1.0 - lambda.powf(p)) * c.powf(-p)).powf(q / (q - p))
}

/// Halving constant `K = 2^{(2q-p)/(p(q-p))} C^{q/(q-p)}` with
/// `‖m_n‖_p ≤ K‖m_{2n}‖_p`.
pub fn halving_constant(c: f64, p: f64, q: f64) -> f64 {
    2f64.powf((2.0 * q - p) / (p * (q - p))) * c.powf(q / (q - p))
}

/// Small-ball domination constants: `P(X ≤ τt) ≤ δ P(Y ≤ t)` for
/// `t ≤ ρ‖X‖_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallBallConstants {
    pub d: f64,
    pub k: f64,
    pub tau: f64,
    pub delta: f64,
    pub rho: f64,
    pub n: u32,
}

/// Constants for `X` min-hypercontractive with constant `c` and
/// `‖m_n(Y)‖_q ≤ b‖m_n(X)‖_p`, given `λ ∈ (0,1)` and `β ∈ (p/q, 1)`.
pub fn small_ball_constants(c: f64, b: f64, p: f64, q: f64, lambda: f64, beta: f64) -> Result<SmallBallConstants> {
    if !(c >= 1.0 && b > 0.0 && p > 0.0 && p < q) {
        return Err(Error::Domain(format!("need C >= 1, B > 0, 0 < p < q; got C = {c}, B = {b}, p = {p}, q = {q}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if !(beta > p / q && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (p/q, 1), got {beta}")));
    }
    let d = ((1.0 - lambda.powf(p)) * c.powf(-p)).powf(q / (p * (q - p)));
    let k = halving_constant(c, p, q);
    let tau = lambda * d / (k * b);
    let delta = 0.5 * (p / (q * beta) + 1.0);
    let need = (q - p) * d.ln() / beta.ln();
    let n = if need <= 1.0 { 0 } else { need.log2().ceil() as u32 };
    let rho = (b / d).min(lambda * k.powi(-(n as i32)) / tau);
    Ok(SmallBallConstants { d, k, tau, delta, rho, n })
}

/// Tail domination constants: `E Y^q I(Y > At) ≤ B^q t^q P(X > t)` for
/// `t ≥ t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailConstants {
    pub a: f64,
    pub b: f64,
    pub t0: f64,
}

/// Constants for `X` max-hypercontractive with constant `c` and
/// `‖M_n(Y)‖_q ≤ d‖M_n(X)‖_q`, given `λ ∈ (0,1)` and `‖Y‖_p`.
pub fn tail_constants(c: f64, d: f64, p: f64, q: f64, lambda: f64, y_norm_p: f64) -> Result<TailConstants> {
    if !(c >= 1.0 && d >= 0.0 && p > 0.0 && p < q) {
        return Err(Error::Domain(format!("need C >= 1, D >= 0, 0 < p < q; got C = {c}, D = {d}, p = {p}, q = {q}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let a = 2f64.powf((q + 1.0) / q) * c * d / lambda;
    let b = a * (c.powf(p) / (1.0 - lambda.powf(p))).powf(1.0 / (q - p));
    Ok(TailConstants {
        a,
        b,
        t0: lambda * y_norm_p,
    })
}

/// Small-ball regularity constant `R(b) = 3 / (b √(1-b))`.
pub fn regularity_constant(b: f64) -> f64 {
    3.0 / (b * (1.0 - b).sqrt())
}

/// `(δ, R, β)` from the ratio `r ∈ (0, 1)`: `δ = 1 - √r`, `R = r^{-1/2}`,
/// `β = ln r / (2 ln δ)`.
pub fn integral_constants(r: f64) -> Result<(f64, f64, f64)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("r must lie in (0, 1), got {r}")));
    }
    let delta = 1.0 - r.sqrt();
    Ok((delta, 1.0 / r.sqrt(), r.ln() / (2.0 * delta.ln())))
}

/// `B` from `D` and `ε` of the tail condition: `B^q = D^q / (1-ε)`.
pub fn b_from_d(d: f64, eps: f64, q: f64) -> f64 {
    d * (1.0 - eps).powf(-1.0 / q)
}

/// `D` from `B` and `ε`: `D = exp(B^{2q} / (qε))`.
pub fn d_from_b(b: f64, eps: f64, q: f64) -> f64 {
    (b.powf(2.0 * q) / (q * eps)).exp()
}

/// `x ≥ β^{p/(q-p)}` and `y^{1/q} ≤ x^{1/p}` imply
/// `1 - x ≤ β^{-1}(p/q)(1 - y)`. True whenever the premise fails.
pub fn mean_value_bound_holds(x: f64, y: f64, beta: f64, p: f64, q: f64) -> bool {
    let premise = x >= beta.powf(p / (q - p)) && y.powf(1.0 / q) <= x.powf(1.0 / p);
    !premise || (1.0 - x) <= (p / (q * beta)) * (1.0 - y) * (1.0 + 1e-12) + 1e-15
}

/// `(p/q)x ≥ y` implies `(1-x)^{1/q} ≤ (1-y)^{1/p}`.
pub fn power_bound_holds(x: f64, y: f64, p: f64, q: f64) -> bool {
    let premise = (p / q) * x >= y;
    !premise || (1.0 - x).powf(1.0 / q) <= (1.0 - y).powf(1.0 / p) * (1.0 + 1e-12)
}

/// Inputs for [`ConstantsLedger`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantInputs {
    pub c: f64,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub beta: f64,
    pub b_dom: f64,
    pub d_dom: f64,
    pub y_norm_p: f64,
    pub b_small_ball: f64,
    pub r: f64,
}

impl Default for ConstantInputs {
    fn default() -> Self {
        Self {
            c: 2.0,
            p: 1.0,
            q: 2.0,
            lambda: 0.5,
            beta: 0.75,
            b_dom: 1.0,
            d_dom: 1.0,
            y_norm_p: 1.0,
            b_small_ball: 0.5,
            r: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralConstants {
    pub delta: f64,
    pub r_const: f64,
    pub beta: f64,
}

/// Every constructive constant evaluated at one set of inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsLedger {
    pub inputs: ConstantInputs,
    pub truncation_alpha: f64,
    pub pz_lower: f64,
    pub halving_k: f64,
    pub small_ball: SmallBallConstants,
    pub tail: TailConstants,
    pub regularity_r: f64,
    pub integral: IntegralConstants,
}

impl ConstantsLedger {
    pub fn compute(inputs: ConstantInputs) -> Result<Self> {
        let ConstantInputs { c, p, q, lambda, .. } = inputs;
        if !(c >= 1.0) {
            return Err(Error::Domain(format!("C must be >= 1, got {c}")));
        }
        if !(inputs.b_small_ball > 0.0 && inputs.b_small_ball < 1.0) {
            return Err(Error::Domain(format!("b must lie in (0, 1), got {}", inputs.b_small_ball)));
        }
        let (delta, r_const, beta) = integral_constants(inputs.r)?;
        Ok(Self {
            inputs,
            truncation_alpha: truncation_alpha(c, p, q),
            pz_lower: paley_zygmund_bound(c, p, q, lambda),
            halving_k: halving_constant(c, p, q),
            small_ball: small_ball_constants(c, inputs.b_dom, p, q, lambda, inputs.beta)?,
            tail: tail_constants(c, inputs.d_dom, p, q, lambda, inputs.y_norm_p)?,
            regularity_r: regularity_constant(inputs.b_small_ball),
            integral: IntegralConstants { delta, r_const, beta },
        })
    }
}

// ---------------------------------------------------------------- Paley–Zygmund

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PzEntry {
    pub n: u64,
    pub c_n: f64,
    pub prob: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PzReport {
    pub dist: String,
    pub op: Op,
    pub lambda: f64,
    pub entries: Vec<PzEntry>,
    pub skipped: Vec<u64>,
}

impl PzReport {
    pub fn holds(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }
}

/// `P(W > λ‖W‖_p) ≥ ((1-λ^p) C_n^{-p})^{q/(q-p)}` for `W = op_n(X)`, with
/// `C_n = ‖W‖_q/‖W‖_p` and the probability from the composed law.
pub fn paley_zygmund_check(spec: &DistributionSpec, params: &HyperParams, op: Op, lambda: f64) -> Result<PzReport> {
    params.validate()?;
    check_nonzero(spec)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    let rows = par::map_slice(&params.n_grid, |&n| -> Result<Option<PzEntry>> {
        let word = Word::single(op, n);
        let (lp, lq) = match ln_norms(spec, &word, params) {
            Ok(v) => v,
            Err(Error::Underflow { .. } | Error::InfiniteMoment { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let w = compose_cdf(spec, &word);
        let c_n = (lq - lp).exp();
        let prob = w.tail(lambda * lp.exp());
        let bound = paley_zygmund_bound(c_n, params.p, params.q, lambda);
        let slack = if spec.table_backed() {
            (n as f64 * spec.cdf_accuracy()).min(1.0)
        } else {
            1e-12 * bound
        };
        Ok(Some(PzEntry {
            n,
            c_n,
            prob,
            bound,
            holds: prob >= bound - slack,
        }))
    });
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (row, &n) in rows.into_iter().zip(&params.n_grid) {
        match row? {
            Some(e) => entries.push(e),
            None => skipped.push(n),
        }
    }
    Ok(PzReport {
        dist: spec.name().to_string(),
        op,
        lambda,
        entries,
        skipped,
    })
}

// ---------------------------------------------------------------- class F

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassFResult {
    pub member: bool,
    pub violation: Option<(f64, String)>,
    pub mass_needed: f64,
    pub f0: f64,
}

/// Membership of a C² function in the clip-mixture class from samples
/// `(x, f, f', f'')` on an increasing positive grid: `0 ≤ x f' ≤ f`
/// pointwise and `f(0) ≥ ∫ x (f'' ∨ 0) dx`.
pub fn class_f_membership(xs: &[f64], f: &[f64], df: &[f64], d2f: &[f64], f0: f64) -> Result<ClassFResult> {
    let n = xs.len();
    if n < 3 || f.len() != n || df.len() != n || d2f.len() != n {
        return Err(Error::Domain("need at least 3 grid points and equal-length samples".into()));
    }
    if xs[0] <= 0.0 || xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("grid must be positive and strictly increasing".into()));
    }
    for i in 1..n - 1 {
        let fd = (f[i + 1] - f[i - 1]) / (xs[i + 1] - xs[i - 1]);
        let deviation = (fd - df[i]).abs() / df[i].abs().max(1.0);
        if deviation > 1e-4 {
            return Err(Error::GridTooCoarse { x: xs[i], deviation });
        }
    }
    let mass_needed: f64 = xs
        .windows(2)
        .zip(d2f.windows(2))
        .map(|(x, d)| 0.5 * (x[1] - x[0]) * (x[0] * d[0].max(0.0) + x[1] * d[1].max(0.0)))
        .sum();
    let mut violation = None;
    for i in 0..n {
        let (x, xf) = (xs[i], xs[i] * df[i]);
        let tol = 1e-12 * f[i].abs().max(1.0);
        if xf < -tol {
            violation = Some((x, format!("x f'(x) = {xf:e} < 0")));
            break;
        }
        if xf > f[i] + tol {
            violation = Some((x, format!("x f'(x) = {xf:e} > f(x) = {:e}", f[i])));
            break;
        }
    }
    if violation.is_none() && f0 < mass_needed - 1e-6 * (1.0 + mass_needed) {
        violation = Some((0.0, format!("f(0) = {f0:e} < {mass_needed:e} = ∫ x (f'' ∨ 0)")));
    }
    Ok(ClassFResult {
        member: violation.is_none(),
        violation,
        mass_needed,
        f0,
    })
}

// ---------------------------------------------------------------- functional

/// Coordinatewise functions for the functional inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE", tag = "h")]
pub enum Functional {
    /// `min_i x_i`.
    MinAll,
    /// `Σ_i √x_i`.
    ConcaveSample,
    /// `Σ_i s ∨ x_i ∧ t`.
    ClipSample { s: f64, t: f64 },
}

impl Functional {
    /// Clip sample at the quartiles of `spec`.
    pub fn clip_at_quartiles(spec: &DistributionSpec) -> Self {
        Functional::ClipSample {
            s: spec.quantile(0.25),
            t: spec.quantile(0.75),
        }
    }

    pub fn eval(&self, xs: &[f64]) -> f64 {
        match *self {
            Functional::MinAll => xs.iter().copied().fold(f64::INFINITY, f64::min),
            Functional::ConcaveSample => xs.iter().map(|x| x.sqrt()).sum(),
            Functional::ClipSample { s, t } => xs.iter().map(|&x| s.max(x.min(t))).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalCheck {
    pub h: Functional,
    pub sigma: f64,
    pub q: f64,
    pub replicates: usize,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub holds: bool,
}

fn mc_functional(specs: &[DistributionSpec], h: Functional, scale: f64, power: f64, replicates: usize, seed: u64, part: u64) -> MeanVar {
    let batches = mc::run_batches(seed, mc::part_base(part), replicates, |rng, count| {
        let mut acc = MeanVar::default();
        let mut xs = vec![0.0; specs.len()];
        for _ in 0..count {
            for (x, s) in xs.iter_mut().zip(specs) {
                *x = scale * s.sample(rng);
            }
            acc.push(h.eval(&xs).powf(power));
        }
        acc
    });
    batches.iter().fold(MeanVar::default(), |mut a, b| {
        a.merge(b);
        a
    })
}

/// Monte Carlo check of `(E h^q(σX_1,…,σX_n))^{1/q} ≤ E h(X_1,…,X_n)` with
/// `lhs ≤ rhs + 4·stderr`.
pub fn functional_hyper_check(
    specs: &[DistributionSpec],
    h: Functional,
    sigma: f64,
    q: f64,
    replicates: usize,
    seed: u64,
) -> Result<FunctionalCheck> {
    if specs.is_empty() {
        return Err(Error::Domain("need at least one coordinate".into()));
    }
    if !((0.0..=1.0).contains(&sigma) && q >= 1.0 && replicates >= 2) {
        return Err(Error::Domain(format!("need 0 <= sigma <= 1, q >= 1, replicates >= 2; got {sigma}, {q}, {replicates}")));
    }
    let left = mc_functional(specs, h, sigma, q, replicates, seed, 0);
    let right = mc_functional(specs, h, 1.0, 1.0, replicates, seed, 1);
    let lhs = left.mean.powf(1.0 / q);
    let lhs_stderr = if left.mean > 0.0 {
        lhs / (q * left.mean) * left.stderr()
    } else {
        0.0
    };
    let (rhs, rhs_stderr) = (right.mean, right.stderr());
    let combined = (lhs_stderr * lhs_stderr + rhs_stderr * rhs_stderr).sqrt();
    Ok(FunctionalCheck {
        h,
        sigma,
        q,
        replicates,
        lhs,
        lhs_stderr,
        rhs,
        rhs_stderr,
        holds: lhs <= rhs + 4.0 * combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::parse_spec;
    use proptest::prelude::*;

    fn spec(s: &str) -> DistributionSpec {
        parse_spec(s).unwrap()
    }

    #[test]
    fn exp_min_constant_is_sqrt2() {
        let hc = empirical_hyper_constant(&spec("exp(1)"), &HyperParams::default(), Op::Min).unwrap();
        assert!((hc.c - 2f64.sqrt()).abs() < 1e-7, "{}", hc.c);
        let lo = hc.ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        assert!(hc.c - lo < 1e-7);
    }

    #[test]
    fn degenerate_constant_is_one() {
        let c = spec("constant(3)");
        for op in [Op::Min, Op::Max] {
            let hc = empirical_hyper_constant(&c, &HyperParams::default(), op).unwrap();
            assert!((hc.c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pareto_max_moment_boundary() {
        let p = spec("pareto(3,1)");
        let hc = empirical_hyper_constant(&p, &HyperParams::default(), Op::Max).unwrap();
        assert!(hc.c.is_finite() && hc.c > 1.0);
        let p3 = HyperParams::new(1.0, 3.0).unwrap();
        assert!(matches!(
            empirical_hyper_constant(&p, &p3, Op::Max),
            Err(Error::InfiniteMoment { .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(HyperParams::new(2.0, 1.0).is_err());
        let h = HyperParams {
            n_grid: vec![1, 1],
            ..HyperParams::default()
        };
        assert!(h.validate().is_err());
    }

    #[test]
    fn golden_constants() {
        assert!((truncation_alpha(2.0, 1.0, 2.0) - 8.0).abs() < 1e-12);
        assert!((halving_constant(2f64.sqrt(), 1.0, 2.0) - 16.0).abs() < 1e-12);
        assert!((halving_constant(1.0, 1.0, 2.0) - 8.0).abs() < 1e-12);
        assert!((regularity_constant(0.5) - 6.0 * 2f64.sqrt()).abs() < 1e-12);
        let (d, r, b) = integral_constants(0.25).unwrap();
        assert!((d - 0.5).abs() < 1e-12 && (r - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        assert_eq!(paley_zygmund_bound(3.0, 1.0, 2.0, 1.0), 0.0);
        assert_eq!(paley_zygmund_bound(1.0, 0.5, 1.5, 0.0), 1.0);
    }

    #[test]
    fn ledger_is_positive_and_idempotent() {
        let a = ConstantsLedger::compute(ConstantInputs::default()).unwrap();
        let b = ConstantsLedger::compute(a.inputs).unwrap();
        assert_eq!(a, b);
        let sb = a.small_ball;
        for v in [a.truncation_alpha, a.pz_lower, a.halving_k, sb.tau, sb.delta, sb.rho, a.tail.a, a.tail.b, a.tail.t0] {
            assert!(v > 0.0 && v.is_finite());
        }
        assert!(sb.delta > 1.0 / (2.0 * 0.75) && sb.delta < 1.0);
        let beta_pow = 0.75f64.powf(2f64.powi(sb.n as i32) / 1.0);
        assert!(sb.d >= beta_pow * (1.0 - 1e-12));
    }

    #[test]
    fn halving_constant_bounds_exp_minima() {
        let e = spec("exp(1)");
        let params = HyperParams::default();
        let k = halving_constant(2f64.sqrt(), 1.0, 2.0);
        for &n in &params.n_grid[..30] {
            let a = hyper_norm(&e, n, &params);
            let b = hyper_norm(&e, 2 * n, &params);
            assert!(a <= k * b);
        }
    }

    fn hyper_norm(s: &DistributionSpec, n: u64, params: &HyperParams) -> f64 {
        ln_norms(s, &Word::single(Op::Min, n), params).unwrap().0.exp()
    }

    #[test]
    fn verdict_conjunction() {
        use Verdict::*;
        assert_eq!(Holds.and(Inconclusive), Inconclusive);
        assert_eq!(Inconclusive.and(Fails), Fails);
        assert_eq!(Holds.and(Holds), Holds);
    }

    #[test]
    fn sigma_search_finds_threshold() {
        let points: Vec<f64> = vec![0.3, 0.7, 0.5];
        let fit = sigma_search(
            &points,
            |s, &p| Ok((s > p).then(|| Witness::new("p", p, s, p))),
            1e-8,
        )
        .unwrap();
        let s = fit.sigma.unwrap();
        assert!(s <= 0.3 && s > 0.3 * (1.0 - 1e-6));
        let (hi, w) = fit.tight.unwrap();
        assert!(hi <= s * (1.0 + 1e-7) && hi > 0.3);
        assert_eq!(w.at, 0.3);
    }

    #[test]
    fn min_conditions_exp() {
        let rep = check_min_conditions(&spec("exp(1)"), &HyperParams::default()).unwrap();
        for k in ["i", "ii", "iii", "iv"] {
            assert_eq!(rep.conditions[k].verdict, Verdict::Holds, "{k}: {:?}", rep.conditions[k]);
        }
        let sigma = rep.sigma.unwrap();
        assert!(sigma > 0.0 && sigma < 1.0);
        assert!(1.0 / sigma >= 2f64.sqrt() * (1.0 - 1e-8));
        assert_eq!(rep.implications["iv=>i"].verdict, Verdict::Holds);
        // near 0 the exponential cdf is linear, so tau tends to eps
        let tau = rep.conditions["iii"].constants["tau@eps=0.01"];
        assert!(tau < 0.01 && tau > 0.005, "{tau}");
    }

    #[test]
    fn min_conditions_atom_fails() {
        let rep = check_min_conditions(&spec("atomzero(0.3, exp(1))"), &HyperParams::default()).unwrap();
        let iii = &rep.conditions["iii"];
        assert_eq!(iii.verdict, Verdict::Fails);
        assert!(!iii.witnesses.is_empty());
        assert_eq!(rep.verdict(), Verdict::Fails);
    }

    #[test]
    fn min_conditions_loglight_fails() {
        let rep = check_min_conditions(&spec("loglight()"), &HyperParams::default()).unwrap();
        let iii = &rep.conditions["iii"];
        assert_eq!(iii.verdict, Verdict::Fails, "{iii:?}");
        let w = &iii.witnesses[0];
        assert!(w.lhs > w.rhs);
    }

    #[test]
    fn max_conditions_pareto_d_is_two() {
        let rep = check_max_conditions(&spec("pareto(3,1)"), &HyperParams::default()).unwrap();
        assert_eq!(rep.conditions["iii"].constants["D@eps=0.5"], 2.0);
        for k in ["ii", "iii", "iv"] {
            assert_eq!(rep.conditions[k].verdict, Verdict::Holds, "{k}");
        }
        assert_eq!(rep.implications["iii=>ii"].verdict, Verdict::Holds);
    }

    #[test]
    fn max_b_for_exp_is_tail_ratio() {
        // E X^2 I(X>t) = e^{-t}(t^2 + 2t + 2)
        let e = spec("exp(1)");
        let pts: Vec<(f64, f64)> = [0.5, 2.0, 10.0].iter().map(|&t| (t, -t)).collect();
        let b = fit_b(&e, &pts, 2.0, 1e-10).unwrap();
        for (&(t, _), b) in pts.iter().zip(b) {
            let want = ((t * t + 2.0 * t + 2.0) / (t * t)).sqrt();
            assert!((b - want).abs() < 1e-8 * want);
        }
    }

    #[test]
    fn clip_search_constant_is_one() {
        let fit = clip_sigma_search(&spec("constant(2)"), &HyperParams::default()).unwrap();
        assert_eq!(fit.sigma, Some(1.0));
    }

    #[test]
    fn clip_search_rejects_atom() {
        assert!(matches!(
            clip_sigma_search(&spec("atomzero(0.3, exp(1))"), &HyperParams::default()),
            Err(Error::NotSubregular(_))
        ));
    }

    #[test]
    fn block_word_count() {
        let w = block_words(2, &[2, 4, 8]);
        assert_eq!(w.len(), 90);
        assert_eq!(w[0].to_string(), "max2.min2");
    }

    #[test]
    fn iterated_identity_and_constant() {
        let params = HyperParams::default();
        let r = iterated_hyper_check(&spec("constant(5)"), &params, 1.0, &block_words(1, &[2, 8])).unwrap();
        assert!(r.all_hold());
        let e = spec("exp(1)");
        let r = iterated_hyper_check(&e, &params, 0.5, &[Word::identity()]).unwrap();
        assert!((r.words[0].ratio - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn paley_zygmund_exp() {
        let params = HyperParams::default();
        for op in [Op::Min, Op::Max] {
            let r = paley_zygmund_check(&spec("exp(1)"), &params, op, 0.5).unwrap();
            assert!(r.holds(), "{r:?}");
            assert_eq!(r.entries.len(), 31);
        }
    }

    fn smooth_clip(s: f64, t: f64, k: f64, xs: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        // E[S ∨ x ∧ T] for logistic S, T centred at s, t with scale k
        let sp = |z: f64| if z > 30.0 { z } else { z.exp().ln_1p() };
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let f = |x: f64| x + k * sp((s - x) / k) - k * sp((x - t) / k);
        let df = |x: f64| 1.0 - sig((s - x) / k) - sig((x - t) / k);
        let d2 = |x: f64| {
            let a = sig((s - x) / k);
            let b = sig((x - t) / k);
            (a * (1.0 - a) - b * (1.0 - b)) / k
        };
        (
            xs.iter().map(|&x| f(x)).collect(),
            xs.iter().map(|&x| df(x)).collect(),
            xs.iter().map(|&x| d2(x)).collect(),
            f(0.0),
        )
    }

    #[test]
    fn class_f_examples() {
        let xs: Vec<f64> = (1..=20000).map(|i| i as f64 * 5e-4).collect();
        let (f, df, d2, f0) = smooth_clip(1.0, 3.0, 0.05, &xs);
        assert!(class_f_membership(&xs, &f, &df, &d2, f0).unwrap().member);

        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let dsq: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let d2sq = vec![2.0; xs.len()];
        let r = class_f_membership(&xs, &sq, &dsq, &d2sq, 0.0).unwrap();
        assert!(!r.member);

        let (f, df, d2, f0) = smooth_clip(-50.0, 1.0, 0.02, &xs);
        let f1: Vec<f64> = f.iter().map(|v| v + 1.0).collect();
        assert!(class_f_membership(&xs, &f1, &df, &d2, f0 + 1.0).unwrap().member);
    }

    #[test]
    fn class_f_grid_too_coarse() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let f = [1.0, 4.0, 9.0, 16.0];
        let df = [0.0, 0.0, 0.0, 0.0];
        let d2 = [2.0; 4];
        assert!(matches!(
            class_f_membership(&xs, &f, &df, &d2, 0.0),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn functional_sigma_zero_and_min() {
        let e = spec("exp(1)");
        let specs = vec![e.clone(); 4];
        let c = functional_hyper_check(&specs, Functional::MinAll, 0.0, 2.0, 20_000, 3).unwrap();
        assert!(c.holds && c.lhs == 0.0);
        let c = functional_hyper_check(&specs, Functional::ConcaveSample, 0.6, 2.0, 50_000, 3).unwrap();
        assert!(c.holds, "{c:?}");
    }

    proptest! {
        #[test]
        fn mean_value_bound(x in 0.001f64..0.999, y in 0.001f64..0.999, beta in 0.01f64..0.99, p in 0.2f64..3.0, gap in 0.1f64..3.0) {
            prop_assert!(mean_value_bound_holds(x, y, beta, p, p + gap));
        }

        #[test]
        fn power_bound(x in 0.001f64..0.999, y in 0.001f64..0.999, p in 0.2f64..3.0, gap in 0.1f64..3.0) {
            prop_assert!(power_bound_holds(x, y, p, p + gap));
        }
    }
}
