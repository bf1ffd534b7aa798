//! Two-law comparisons derived from moment domination of minima and maxima:
//! small-ball and tail comparison, the two-sided distributional comparison,
//! and the Bernoulli-thinning equivalence for tail domination.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::distributions::{DistributionSpec, Law};
use crate::error::{Error, Result};
use crate::hyper::{
    check_max_conditions, check_min_conditions, small_ball_constants, tail_constants, HyperParams, Verdict, Witness,
    CERTIFICATION, GRID_QUANTILE,
};
use crate::moments::{compose_cdf, log_moment, log_upper_integral, Op, Word};
use crate::numeric::log_grid;
use crate::par;

/// Search range `[2^-20, 2^20]` for the two-sided scale.
pub const D_RANGE: (f64, f64) = (1.0 / 1_048_576.0, 1_048_576.0);

const LOG_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    SmallBall,
    Tail,
    TwoSided,
}

/// `sup_n ‖op_n(Y)‖_q / ‖op_n(X)‖_q` with its arg-max.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Domination {
    pub op: Op,
    pub b: f64,
    pub argmax_n: u64,
    pub ratios: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonVerdict {
    pub direction: Direction,
    pub dist_x: String,
    pub dist_y: String,
    pub verdict: Verdict,
    pub anchor: String,
    pub certification: &'static str,
    /// Constants from the constructive recipe.
    pub constants: BTreeMap<String, f64>,
    /// Best constants the grid admits, for comparison with the recipe.
    pub empirical: BTreeMap<String, f64>,
    pub t_range: Option<(f64, f64)>,
    pub witnesses: Vec<Witness>,
    pub domination: Option<Domination>,
    pub notes: Vec<String>,
}

impl ComparisonVerdict {
    fn new(direction: Direction, x: &DistributionSpec, y: &DistributionSpec, anchor: &str) -> Self {
        Self {
            direction,
            dist_x: x.name().to_string(),
            dist_y: y.name().to_string(),
            verdict: Verdict::Holds,
            anchor: anchor.into(),
            certification: CERTIFICATION,
            constants: BTreeMap::new(),
            empirical: BTreeMap::new(),
            t_range: None,
            witnesses: Vec::new(),
            domination: None,
            notes: Vec::new(),
        }
    }

    fn fail(&mut self, w: Witness) {
        self.verdict = Verdict::Fails;
        if self.witnesses.len() < 8 {
            self.witnesses.push(w);
        }
    }
}

fn ln_norm(spec: &DistributionSpec, op: Op, n: u64, r: f64, params: &HyperParams) -> Result<f64> {
    let w = compose_cdf(spec, &Word::single(op, n));
    Ok(log_moment(&w, r, params.rel_tol.max(1e-13))? / r)
}

/// `sup_n ‖op_n(Y)‖_q / ‖op_n(X)‖_q` over the n grid.
pub fn domination(x: &DistributionSpec, y: &DistributionSpec, params: &HyperParams, op: Op) -> Result<Domination> {
    params.validate()?;
    if x.tail(0.0) == 0.0 {
        return Err(Error::Domain(format!("{} is identically zero", x.name())));
    }
    let q = params.q;
    let ratios = par::map_slice(&params.n_grid, |&n| -> Result<(u64, f64)> {
        let ly = if y.tail(0.0) == 0.0 {
            f64::NEG_INFINITY
        } else {
            ln_norm(y, op, n, q, params)?
        };
        Ok((n, (ly - ln_norm(x, op, n, q, params)?).exp()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (argmax_n, b) = ratios
        .iter()
        .fold((ratios[0].0, ratios[0].1), |best, &(n, r)| if r > best.1 { (n, r) } else { best });
    Ok(Domination {
        op,
        b,
        argmax_n,
        ratios,
    })
}

/// `sup_n ‖m_n(Y)‖_q / ‖m_n(X)‖_q`.
pub fn min_domination_b(x: &DistributionSpec, y: &DistributionSpec, params: &HyperParams) -> Result<Domination> {
    domination(x, y, params, Op::Min)
}

/// Log grid spanning the extreme quantiles of both laws.
fn joint_grid(x: &DistributionSpec, y: &DistributionSpec, size: usize) -> Vec<f64> {
    let mut pts = Vec::new();
    for s in [x, y] {
        if s.tail(0.0) == 0.0 {
            continue;
        }
        let a0 = s.atom_at_zero();
        let lo = s.quantile(a0 + GRID_QUANTILE * (1.0 - a0)).max(1e-300);
        let hi = s.quantile_upper(GRID_QUANTILE * (1.0 - a0)).max(lo);
        pts.extend(log_grid(lo, hi, size));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn min_constant(x: &DistributionSpec, params: &HyperParams) -> Result<f64> {
    let rep = check_min_conditions(x, params)?;
    if rep.condition("iii").is_some_and(|c| c.verdict == Verdict::Fails) {
        return Err(Error::HypothesisFailed(format!("{} is not min-hypercontractive", x.name())));
    }
    rep.c_empirical
        .ok_or_else(|| Error::HypothesisFailed(format!("no min-hypercontractivity constant for {}", x.name())))
}

fn max_constant(x: &DistributionSpec, params: &HyperParams) -> Result<f64> {
    let rep = check_max_conditions(x, params)?;
    if rep.condition("iii").is_some_and(|c| c.verdict == Verdict::Fails) {
        return Err(Error::HypothesisFailed(format!("{} is not max-hypercontractive", x.name())));
    }
    rep.c_empirical
        .ok_or_else(|| Error::HypothesisFailed(format!("no max-hypercontractivity constant for {}", x.name())))
}

fn norm_p(spec: &DistributionSpec, params: &HyperParams) -> Result<f64> {
    if spec.tail(0.0) == 0.0 {
        return Ok(0.0);
    }
    Ok((log_moment(spec, params.p, params.rel_tol.max(1e-13))? / params.p).exp())
}

/// Largest `τ ∈ [lo, hi]` with `pred(τ)` true, for `pred` true below and
/// false above the threshold.
fn bisect_log(lo: f64, hi: f64, rel: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    while hi > lo * (1.0 + rel) {
        let mid = (lo * hi).sqrt();
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Small-ball comparison `P(X ≤ τt) ≤ δ P(Y ≤ t)` for `t ≤ ρ‖X‖_p` with the
/// constructive constants, checked on the grid. `beta` defaults to the
/// midpoint of `(p/q, 1)`.
pub fn small_ball_comparison(
    x: &DistributionSpec,
    y: &DistributionSpec,
    params: &HyperParams,
    lambda: f64,
    beta: Option<f64>,
) -> Result<ComparisonVerdict> {
    params.validate()?;
    let (p, q) = (params.p, params.q);
    let beta = beta.unwrap_or(0.5 * (p / q + 1.0));
    let c = min_constant(x, params)?;
    let dom = min_domination_b(x, y, params)?;
    let k = small_ball_constants(c, dom.b.max(f64::MIN_POSITIVE), p, q, lambda, beta)?;
    let t0 = k.rho * norm_p(x, params)?;

    let mut v = ComparisonVerdict::new(Direction::SmallBall, x, y, "P(X <= tau t) <= delta P(Y <= t), t <= rho ||X||_p");
    for (name, val) in [
        ("C", c),
        ("B", dom.b),
        ("D", k.d),
        ("K", k.k),
        ("tau", k.tau),
        ("delta", k.delta),
        ("rho", k.rho),
        ("n", k.n as f64),
        ("lambda", lambda),
        ("beta", beta),
        ("t0", t0),
    ] {
        v.constants.insert(name.into(), val);
    }

    let mut ts: Vec<f64> = joint_grid(x, y, params.t_grid_size)
        .into_iter()
        .filter(|&t| t <= t0)
        .collect();
    if t0 > 0.0 {
        ts.push(t0);
    }
    ts.dedup();
    let ln_delta = k.delta.ln();
    let check = |tau: f64| -> Option<Witness> {
        par::find_first(ts.len(), |i| {
            let t = ts[i];
            let lhs = x.log_cdf(tau * t);
            let rhs = ln_delta + y.log_cdf(t);
            (lhs > rhs + LOG_SLACK * rhs.abs().max(1.0)).then(|| Witness {
                label: "t".into(),
                at: t,
                lhs: lhs.exp(),
                rhs: rhs.exp(),
            })
        })
        .map(|(_, w)| w)
    };
    if let Some(w) = check(k.tau) {
        v.fail(w);
    }
    let best = if check(1e6).is_none() {
        1e6
    } else if check(1e-12).is_some() {
        0.0
    } else {
        bisect_log(1e-12, 1e6, 1e-6, |tau| check(tau).is_none())
    };
    v.empirical.insert("tau".into(), best);
    v.t_range = ts.first().map(|&lo| (lo, t0));
    v.domination = Some(dom);
    Ok(v)
}

/// Tail comparison `E Y^q I(Y > At) ≤ B^q t^q P(X > t)` and
/// `P(Y > At) ≤ B^q P(X > t)` for `t ≥ t0` with the constructive
/// constants, checked on the grid.
pub fn tail_comparison(
    x: &DistributionSpec,
    y: &DistributionSpec,
    params: &HyperParams,
    lambda: f64,
) -> Result<ComparisonVerdict> {
    params.validate()?;
    let (p, q) = (params.p, params.q);
    let c = max_constant(x, params)?;
    let dom = domination(x, y, params, Op::Max)?;
    let k = tail_constants(c, dom.b, p, q, lambda, norm_p(y, params)?)?;

    let mut v = ComparisonVerdict::new(
        Direction::Tail,
        x,
        y,
        "E Y^q I(Y > A t) <= B^q t^q P(X > t) and P(Y > A t) <= B^q P(X > t), t >= t0",
    );
    for (name, val) in [("C", c), ("D", dom.b), ("A", k.a), ("B", k.b), ("t0", k.t0), ("lambda", lambda)] {
        v.constants.insert(name.into(), val);
    }
    let mut ts: Vec<f64> = joint_grid(x, y, params.t_grid_size)
        .into_iter()
        .filter(|&t| t >= k.t0 && t > 0.0)
        .collect();
    if k.t0 > 0.0 {
        ts.insert(0, k.t0);
    }
    ts.dedup();

    let ln_bq = q * k.b.ln();
    let y_zero = y.tail(0.0) == 0.0;
    let rows = par::map_slice(&ts, |&t| -> Result<(f64, f64, f64, f64)> {
        let at = k.a * t;
        let lx = x.log_tail(t);
        let (l_moment, l_tail) = if y_zero {
            (f64::NEG_INFINITY, f64::NEG_INFINITY)
        } else {
            let ly = y.log_tail(at);
            let excess = log_upper_integral(y, q, at, params.rel_tol.max(1e-10))?;
            (crate::numeric::logaddexp(q * at.ln() + ly, excess), ly)
        };
        Ok((t, l_moment, l_tail, lx))
    });
    let mut emp_moment = 0.0f64;
    let mut emp_tail = 0.0f64;
    for row in rows {
        let (t, l_moment, l_tail, lx) = row?;
        let rhs_moment = ln_bq + q * t.ln() + lx;
        let rhs_tail = ln_bq + lx;
        if l_moment > rhs_moment + LOG_SLACK * rhs_moment.abs().max(1.0) {
            v.fail(Witness {
                label: "t (moment display)".into(),
                at: t,
                lhs: l_moment.exp(),
                rhs: rhs_moment.exp(),
            });
        }
        if l_tail > rhs_tail + LOG_SLACK * rhs_tail.abs().max(1.0) {
            v.fail(Witness {
                label: "t (tail display)".into(),
                at: t,
                lhs: l_tail.exp(),
                rhs: rhs_tail.exp(),
            });
        }
        if lx > f64::NEG_INFINITY {
            emp_moment = emp_moment.max(((l_moment - q * t.ln() - lx) / q).exp());
            emp_tail = emp_tail.max(((l_tail - lx) / q).exp());
        }
    }
    v.empirical.insert("B_moment".into(), emp_moment);
    v.empirical.insert("B_tail".into(), emp_tail);
    v.t_range = ts.first().map(|&lo| (lo, *ts.last().expect("nonempty")));
    v.domination = Some(dom);
    Ok(v)
}

/// Smallest `D` with `P(Y ≤ t) ≥ P(X ≤ t/D)` on the joint grid.
pub fn two_sided_comparison(x: &DistributionSpec, y: &DistributionSpec, params: &HyperParams) -> Result<ComparisonVerdict> {
    params.validate()?;
    min_constant(x, params)?;
    max_constant(x, params)?;
    let b_min = min_domination_b(x, y, params)?;
    let b_max = domination(x, y, params, Op::Max)?;
    if !(b_min.b.is_finite() && b_max.b.is_finite()) {
        return Err(Error::HypothesisFailed("moment domination constants are not finite".into()));
    }
    let ts = joint_grid(x, y, params.t_grid_size);
    let violation = |d: f64| -> Option<Witness> {
        par::find_first(ts.len(), |i| {
            let t = ts[i];
            let ly = y.log_cdf(t);
            let lx = x.log_cdf(t / d);
            (lx > ly + LOG_SLACK * ly.abs().max(1.0)).then(|| Witness {
                label: "t".into(),
                at: t,
                lhs: ly.exp(),
                rhs: lx.exp(),
            })
        })
        .map(|(_, w)| w)
    };
    let (lo, hi) = D_RANGE;
    if violation(hi).is_some() {
        return Err(Error::NoFiniteD { limit: hi });
    }
    let mut v = ComparisonVerdict::new(Direction::TwoSided, x, y, "P(Y <= t) >= P(D X <= t)");
    let d = if violation(lo).is_none() {
        v.notes.push(format!("holds already at the bottom of the search range, D = {lo:e}"));
        lo
    } else {
        // smallest holding D: bisect on 1/D so the helper keeps the holding end
        1.0 / bisect_log(1.0 / hi, 1.0 / lo, 10.0 * params.rel_tol, |inv| violation(1.0 / inv).is_none())
    };
    if let Some(w) = violation(d * (1.0 + 20.0 * params.rel_tol)) {
        v.fail(w);
    }
    v.constants.insert("D".into(), d);
    v.constants.insert("B_min".into(), b_min.b);
    v.constants.insert("B_max".into(), b_max.b);
    v.t_range = ts.first().map(|&lo| (lo, *ts.last().expect("nonempty")));
    v.domination = Some(b_min);
    Ok(v)
}

/// One row of the thinning check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinningRow {
    pub n: u64,
    /// `‖M_n(δY)‖_p`.
    pub thinned_norm: f64,
    /// `‖M_n(X)‖_p`.
    pub x_norm: f64,
    /// `E M_n(δY)^p`.
    pub thinned_moment: f64,
    /// `C^{-1} E M_n(Y)^p`.
    pub y_moment_over_c: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinningReport {
    pub dist_x: String,
    pub dist_y: String,
    pub c_tail: f64,
    pub c_fitted: bool,
    pub thinned: String,
    pub rows: Vec<ThinningRow>,
    pub cdf_display: Verdict,
    pub cdf_witnesses: Vec<Witness>,
    /// Tail comparison run when `X` is max-hypercontractive.
    pub reverse: Option<ComparisonVerdict>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// `sup_t P(Y > t) / P(X > t)` on the joint grid, at least 1.
pub fn fit_tail_constant(x: &DistributionSpec, y: &DistributionSpec, params: &HyperParams) -> f64 {
    joint_grid(x, y, params.t_grid_size)
        .into_iter()
        .map(|t| {
            let ly = y.log_tail(t);
            if ly == f64::NEG_INFINITY {
                0.0
            } else {
                (ly - x.log_tail(t)).exp()
            }
        })
        .fold(1.0, f64::max)
}

/// Tail domination `P(Y > t) ≤ C P(X > t)` against domination of maxima,
/// through the thinned law `δY` with `P(δ = 1) = 1/C`.
pub fn thinning_equivalence(
    x: &DistributionSpec,
    y: &DistributionSpec,
    params: &HyperParams,
    c_tail: Option<f64>,
    lambda: f64,
) -> Result<ThinningReport> {
    params.validate()?;
    let p = params.p;
    let (c, fitted) = match c_tail {
        Some(c) if c >= 1.0 => (c, false),
        Some(c) => return Err(Error::Domain(format!("C_tail must be >= 1, got {c}"))),
        None => (fit_tail_constant(x, y, params), true),
    };
    let mut notes = Vec::new();
    if !c.is_finite() {
        return Err(Error::HypothesisFailed(format!(
            "P({} > t) / P({} > t) is unbounded on the grid",
            y.name(),
            x.name()
        )));
    }
    let p0 = 1.0 - 1.0 / c;
    let thinned = DistributionSpec::new(
        format!("atomzero({},{})", p0, y.name()),
        Law::AtomZero { p0, base: y.clone() },
    );

    let tol = params.rel_tol.max(1e-13);
    let rows = par::map_slice(&params.n_grid, |&n| -> Result<ThinningRow> {
        let word = Word::single(Op::Max, n);
        let lt = log_moment(&compose_cdf(&thinned, &word), p, tol)?;
        let lx = log_moment(&compose_cdf(x, &word), p, tol)?;
        let ly = log_moment(&compose_cdf(y, &word), p, tol)?;
        let slack = 10.0 * params.rel_tol;
        let norm_ok = lt / p <= lx / p + slack;
        let mean_ok = lt >= ly - c.ln() - slack;
        Ok(ThinningRow {
            n,
            thinned_norm: (lt / p).exp(),
            x_norm: (lx / p).exp(),
            thinned_moment: lt.exp(),
            y_moment_over_c: (ly - c.ln()).exp(),
            holds: norm_ok && mean_ok,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut cdf_display = Verdict::Holds;
    let mut cdf_witnesses = Vec::new();
    let ts = joint_grid(x, y, params.t_grid_size);
    for &t in &ts {
        let (sy, sx) = (y.tail(t), x.tail(t));
        if sy > c * sx {
            continue;
        }
        // (1 - S_Y/C)^n >= (1 - S_X)^n is the n = 1 inequality raised to n
        let lhs = (-sy / c).ln_1p();
        let rhs = (-sx).ln_1p();
        if lhs < rhs - LOG_SLACK * rhs.abs().max(1e-300) {
            cdf_display = Verdict::Fails;
            cdf_witnesses.push(Witness {
                label: "t".into(),
                at: t,
                lhs: lhs.exp(),
                rhs: rhs.exp(),
            });
        }
    }

    let reverse = match tail_comparison(x, y, params, lambda) {
        Ok(v) => Some(v),
        Err(Error::HypothesisFailed(msg)) => {
            notes.push(format!("reverse direction skipped: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    let mut verdict = cdf_display;
    if rows.iter().any(|r| !r.holds) {
        verdict = Verdict::Fails;
    }
    if let Some(r) = &reverse {
        verdict = verdict.and(r.verdict);
    }
    Ok(ThinningReport {
        dist_x: x.name().to_string(),
        dist_y: y.name().to_string(),
        c_tail: c,
        c_fitted: fitted,
        thinned: thinned.name().to_string(),
        rows,
        cdf_display,
        cdf_witnesses,
        reverse,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::parse_spec;

    fn spec(s: &str) -> DistributionSpec {
        parse_spec(s).unwrap()
    }

    fn small_params() -> HyperParams {
        HyperParams {
            n_grid: (0..=20).map(|k| 1u64 << k).collect(),
            t_grid_size: 120,
            ..HyperParams::default()
        }
    }

    #[test]
    fn domination_examples() {
        let params = small_params();
        let e = spec("exp(1)");
        assert!((min_domination_b(&e, &e, &params).unwrap().b - 1.0).abs() < 1e-9);
        let q1 = HyperParams {
            p: 0.5,
            q: 1.0,
            ..small_params()
        };
        let d = min_domination_b(&e, &spec("exp(2)"), &q1).unwrap();
        assert!((d.b - 0.5).abs() < 1e-8, "{}", d.b);
        let u = min_domination_b(&spec("uniform(0,1)"), &spec("constant(0.5)"), &params).unwrap();
        assert!(u.b.is_finite() && u.b > 1.0);
    }

    #[test]
    fn small_ball_identity_holds() {
        let e = spec("exp(1)");
        let v = small_ball_comparison(&e, &e, &small_params(), 0.5, None).unwrap();
        assert_eq!(v.verdict, Verdict::Holds, "{v:?}");
        let delta = v.constants["delta"];
        // near 0 the ratio P(X <= tau t)/P(X <= t) tends to tau
        assert!(v.empirical["tau"] <= delta && v.empirical["tau"] > 0.5 * delta);
        assert!(v.constants["tau"] <= v.empirical["tau"]);
        let c = spec("constant(1)");
        let v = small_ball_comparison(&c, &c, &small_params(), 0.5, None).unwrap();
        assert_eq!(v.verdict, Verdict::Holds);
        assert!(v.t_range.is_some());
    }

    #[test]
    fn small_ball_rejects_atom() {
        let a = spec("atomzero(0.3, exp(1))");
        assert!(matches!(
            small_ball_comparison(&a, &spec("exp(1)"), &small_params(), 0.5, None),
            Err(Error::HypothesisFailed(_))
        ));
    }

    #[test]
    fn tail_comparison_examples() {
        let params = small_params();
        let e = spec("exp(1)");
        let v = tail_comparison(&e, &e, &params, 0.5).unwrap();
        assert_eq!(v.verdict, Verdict::Holds, "{v:?}");
        let c = v.constants["C"];
        let d = v.constants["D"];
        let a = 2f64.powf(1.5) * c * d / 0.5;
        assert!((v.constants["A"] - a).abs() < 1e-12 * a);
        assert!((v.constants["B"] - a * (c / 0.5)).abs() < 1e-9 * a);

        let z = tail_comparison(&e, &spec("constant(0)"), &params, 0.5).unwrap();
        assert_eq!(z.verdict, Verdict::Holds);

        let v = tail_comparison(&spec("pareto(3,1)"), &spec("pareto(3,2)"), &params, 0.5).unwrap();
        assert_eq!(v.verdict, Verdict::Holds, "{v:?}");
    }

    #[test]
    fn tail_constant_b_increases_past_balance_point() {
        // for p = 1, q = 2 the balance point of B(λ) is λ = 1/2
        let mut prev = 0.0;
        for i in 0..40 {
            let lambda = 0.5 + 0.0124 * i as f64;
            let b = tail_constants(1.3, 1.1, 1.0, 2.0, lambda, 1.0).unwrap().b;
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn two_sided_examples() {
        let params = small_params();
        let e = spec("exp(1)");
        let v = two_sided_comparison(&e, &e, &params).unwrap();
        assert!((v.constants["D"] - 1.0).abs() < 1e-6, "{v:?}");
        // P(Y <= t) = P(X <= 2t) for Y ~ exp(2): the display holds from D = 1/2
        let v = two_sided_comparison(&e, &spec("exp(2)"), &params).unwrap();
        assert!((v.constants["D"] - 0.5).abs() < 1e-6, "{v:?}");
        let v = two_sided_comparison(&e, &spec("halfnormal(1)"), &params).unwrap();
        assert!(v.constants["D"].is_finite());
        assert_eq!(v.verdict, Verdict::Holds);
    }

    #[test]
    fn thinning_identity_and_scaled() {
        let params = small_params();
        let e = spec("exp(1)");
        let r = thinning_equivalence(&e, &e, &params, Some(1.0), 0.5).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
        for row in &r.rows {
            assert!((row.thinned_norm - row.x_norm).abs() < 1e-7 * row.x_norm);
        }
        let r = thinning_equivalence(&e, &e, &params, Some(2.0), 0.5).unwrap();
        assert!(r.rows.iter().all(|row| row.holds));
        let first = &r.rows[0];
        assert_eq!(first.n, 1);
        assert!((first.thinned_moment - first.y_moment_over_c).abs() < 1e-8);
        assert_eq!(r.cdf_display, Verdict::Holds);
    }

    #[test]
    fn thinning_fits_unit_constant() {
        let params = small_params();
        let r = thinning_equivalence(&spec("exp(1)"), &spec("exp(2)"), &params, None, 0.5).unwrap();
        assert!(r.c_fitted && (r.c_tail - 1.0).abs() < 1e-6);
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
        assert!(r.reverse.is_some());
    }
}
