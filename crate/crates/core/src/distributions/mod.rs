//! Nonnegative scalar laws with exact tail, CDF and quantile functions.
//!
//! Every law answers in two registers: plain probabilities (`tail`, `cdf`)
//! and their logarithms (`log_tail`, `log_cdf`). Iterated minima and maxima
//! are built on the log forms, which is what lets `P(m_n > t) = P(X > t)^n`
//! stay meaningful for `n` up to `2^30` and beyond.

mod parse;
pub mod stable;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::moments::Op;
use crate::numeric::{halfnormal_lower_quantile, halfnormal_upper_quantile, ln_erfc, log1mexp, logaddexp};

pub use parse::parse_spec;
use stable::StableTable;

/// An immutable nonnegative law. Cloning is cheap.
#[derive(Clone)]
pub struct DistributionSpec {
    name: String,
    law: Arc<Law>,
}

pub(crate) enum Law {
    Exp { rate: f64 },
    Uniform { a: f64, b: f64 },
    Pareto { beta: f64, xm: f64 },
    Weibull { shape: f64, scale: f64 },
    HalfNormal { sigma: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Constant { c: f64 },
    AtomZero { p0: f64, base: DistributionSpec },
    LogLight,
    StableMod { alpha: f64, table: Arc<StableTable> },
    Composed { inner: DistributionSpec, op: Op, count: u64 },
}

impl fmt::Debug for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("DistributionSpec").field(&self.name).finish()
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl DistributionSpec {
    pub(crate) fn new(name: String, law: Law) -> Self {
        Self {
            name,
            law: Arc::new(law),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub(crate) fn law(&self) -> &Law {
        &self.law
    }

    /// Law of the minimum (`Op::Min`) or maximum (`Op::Max`) of `count`
    /// independent copies.
    pub fn iterate(&self, op: Op, count: u64) -> DistributionSpec {
        assert!(count >= 1, "iterated statistic needs count >= 1");
        let name = format!("{}{}({})", op.symbol(), count, self.name);
        Self::new(
            name,
            Law::Composed {
                inner: self.clone(),
                op,
                count,
            },
        )
    }

    /// `P(X > t)`.
    pub fn tail(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match self.law() {
            Law::Exp { rate } => (-rate * t).exp(),
            Law::Weibull { shape, scale } => (-(t / scale).powf(*shape)).exp(),
            Law::Uniform { a, b } => ((b - t) / (b - a)).clamp(0.0, 1.0),
            Law::Pareto { beta, xm } => {
                if t < *xm {
                    1.0
                } else {
                    (xm / t).powf(*beta)
                }
            }
            Law::HalfNormal { sigma } => statrs::function::erf::erfc(t / (sigma * std::f64::consts::SQRT_2)),
            Law::LogNormal { mu, sigma } => {
                if t == 0.0 {
                    return 1.0;
                }
                let z = (t.ln() - mu) / sigma;
                0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
            }
            Law::Constant { c } => {
                if t < *c {
                    1.0
                } else {
                    0.0
                }
            }
            Law::AtomZero { p0, base } => (1.0 - p0) * base.tail(t),
            Law::LogLight => {
                if t >= 1.0 {
                    0.0
                } else if t == 0.0 {
                    1.0
                } else {
                    let l = -t.ln();
                    l / (1.0 + l)
                }
            }
            Law::StableMod { table, .. } => table.probabilities(t).1,
            Law::Composed { .. } => self.log_tail(t).exp(),
        }
    }

    /// `P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self.law() {
            Law::Exp { rate } => -(-rate * t).exp_m1(),
            Law::Weibull { shape, scale } => -(-(t / scale).powf(*shape)).exp_m1(),
            Law::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            Law::Pareto { beta, xm } => {
                if t < *xm {
                    0.0
                } else {
                    -(beta * (xm / t).ln()).exp_m1()
                }
            }
            Law::HalfNormal { sigma } => statrs::function::erf::erf(t / (sigma * std::f64::consts::SQRT_2)),
            Law::LogNormal { mu, sigma } => {
                if t == 0.0 {
                    return 0.0;
                }
                let z = (t.ln() - mu) / sigma;
                0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
            }
            Law::Constant { c } => {
                if t < *c {
                    0.0
                } else {
                    1.0
                }
            }
            Law::AtomZero { p0, base } => p0 + (1.0 - p0) * base.cdf(t),
            Law::LogLight => {
                if t >= 1.0 {
                    1.0
                } else if t == 0.0 {
                    0.0
                } else {
                    1.0 / (1.0 - t.ln())
                }
            }
            Law::StableMod { table, .. } => table.probabilities(t).0,
            Law::Composed { op, .. } => match op {
                Op::Max => self.log_cdf(t).exp(),
                Op::Min => -self.log_tail(t).exp_m1(),
            },
        }
    }

    /// `ln P(X > t)`.
    pub fn log_tail(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self.law() {
            Law::Exp { rate } => -rate * t,
            Law::Weibull { shape, scale } => -(t / scale).powf(*shape),
            Law::Pareto { beta, xm } => {
                if t < *xm {
                    0.0
                } else {
                    beta * (xm / t).ln()
                }
            }
            Law::HalfNormal { sigma } => {
                let x = t / (sigma * std::f64::consts::SQRT_2);
                if x < 0.5 {
                    (-statrs::function::erf::erf(x)).ln_1p()
                } else {
                    ln_erfc(x)
                }
            }
            Law::LogNormal { mu, sigma } => {
                if t == 0.0 {
                    return 0.0;
                }
                let z = (t.ln() - mu) / sigma;
                if z < 0.0 {
                    (-0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)).ln_1p()
                } else {
                    ln_erfc(z / std::f64::consts::SQRT_2) - std::f64::consts::LN_2
                }
            }
            Law::AtomZero { p0, base } => (-p0).ln_1p() + base.log_tail(t),
            Law::Uniform { a, b } => {
                if t <= *a {
                    0.0
                } else if t >= *b {
                    f64::NEG_INFINITY
                } else if t - a < b - t {
                    (-(t - a) / (b - a)).ln_1p()
                } else {
                    ((b - t) / (b - a)).ln()
                }
            }
            Law::LogLight => {
                if t >= 1.0 {
                    f64::NEG_INFINITY
                } else if t == 0.0 {
                    0.0
                } else {
                    let l = -t.ln();
                    l.ln() - l.ln_1p()
                }
            }
            Law::StableMod { table, .. } => table.log_tail(t),
            Law::Composed { inner, op, count } => {
                let n = *count as f64;
                match op {
                    Op::Min => n * inner.log_tail(t),
                    Op::Max => log1mexp(n * inner.log_cdf(t)),
                }
            }
            Law::Constant { .. } => self.tail(t).ln(),
        }
    }

    /// `ln P(X <= t)`.
    pub fn log_cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::NEG_INFINITY;
        }
        match self.law() {
            Law::Exp { .. } | Law::Weibull { .. } | Law::Pareto { .. } => log1mexp(self.log_tail(t)),
            Law::HalfNormal { sigma } => {
                let x = t / (sigma * std::f64::consts::SQRT_2);
                if x < 0.5 {
                    statrs::function::erf::erf(x).ln()
                } else {
                    (-statrs::function::erf::erfc(x)).ln_1p()
                }
            }
            Law::LogNormal { mu, sigma } => {
                if t == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (t.ln() - mu) / sigma;
                if z > 0.0 {
                    (-0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)).ln_1p()
                } else {
                    ln_erfc(-z / std::f64::consts::SQRT_2) - std::f64::consts::LN_2
                }
            }
            Law::AtomZero { p0, base } => {
                let tail = self.tail(t);
                if tail < 0.5 {
                    return (-tail).ln_1p();
                }
                let base_part = (-p0).ln_1p() + base.log_cdf(t);
                if *p0 == 0.0 {
                    base_part
                } else {
                    logaddexp(p0.ln(), base_part)
                }
            }
            Law::LogLight => {
                if t >= 1.0 {
                    0.0
                } else if t == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -(-t.ln()).ln_1p()
                }
            }
            Law::StableMod { table, .. } => {
                let (cdf, tail) = table.probabilities(t);
                if cdf > 0.5 {
                    (-tail).ln_1p()
                } else {
                    cdf.ln()
                }
            }
            Law::Composed { inner, op, count } => {
                let n = *count as f64;
                match op {
                    Op::Max => n * inner.log_cdf(t),
                    Op::Min => log1mexp(n * inner.log_tail(t)),
                }
            }
            Law::Uniform { a, b } => {
                if t >= *b {
                    0.0
                } else if t <= *a {
                    f64::NEG_INFINITY
                } else if b - t < t - a {
                    (-(b - t) / (b - a)).ln_1p()
                } else {
                    ((t - a) / (b - a)).ln()
                }
            }
            Law::Constant { .. } => self.cdf(t).ln(),
        }
    }

    /// `inf{t >= 0 : cdf(t) >= u}`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return self.quantile_log(0.0, f64::NEG_INFINITY);
        }
        let (lu, ls) = if u < 0.5 {
            (u.ln(), (-u).ln_1p())
        } else {
            ((-(1.0 - u)).ln_1p(), (1.0 - u).ln())
        };
        self.quantile_log(lu, ls)
    }

    /// `inf{t >= 0 : tail(t) <= s}`, for upper-tail probabilities too small
    /// to pass through `1 - s`.
    pub fn quantile_upper(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        if s <= 0.0 {
            return self.quantile_log(0.0, f64::NEG_INFINITY);
        }
        self.quantile_log_upper(s.ln())
    }

    /// [`quantile_upper`](Self::quantile_upper) with `ln s` supplied.
    pub fn quantile_log_upper(&self, log_s: f64) -> f64 {
        if log_s >= 0.0 {
            return 0.0;
        }
        self.quantile_log(log1mexp(log_s), log_s)
    }

    /// Quantile from the pair `(ln u, ln(1-u))`; callers keep both accurate.
    pub(crate) fn quantile_log(&self, lu: f64, ls: f64) -> f64 {
        if lu == f64::NEG_INFINITY {
            return 0.0;
        }
        match self.law() {
            Law::Exp { rate } => -ls / rate,
            Law::Weibull { shape, scale } => scale * (-ls).powf(1.0 / shape),
            Law::Pareto { beta, xm } => xm * (-ls / beta).exp(),
            Law::Uniform { a, b } => {
                if lu < ls {
                    a + lu.exp() * (b - a)
                } else {
                    b - ls.exp() * (b - a)
                }
            }
            Law::HalfNormal { sigma } => {
                if lu < ls {
                    sigma * halfnormal_lower_quantile(lu.exp())
                } else {
                    sigma * halfnormal_upper_quantile(ls)
                }
            }
            Law::LogNormal { mu, sigma } => {
                let z = if lu < ls {
                    -halfnormal_upper_quantile(lu + std::f64::consts::LN_2) / std::f64::consts::SQRT_2
                } else {
                    halfnormal_upper_quantile(ls + std::f64::consts::LN_2) / std::f64::consts::SQRT_2
                };
                (mu + sigma * z * std::f64::consts::SQRT_2).exp()
            }
            Law::Constant { c } => *c,
            Law::AtomZero { p0, base } => {
                if *p0 > 0.0 && lu <= p0.ln() {
                    return 0.0;
                }
                let ls_base = ls - (-p0).ln_1p();
                if ls_base >= 0.0 {
                    return 0.0;
                }
                base.quantile_log(log1mexp(ls_base), ls_base)
            }
            Law::LogLight => {
                if ls == f64::NEG_INFINITY {
                    return 1.0;
                }
                if lu < ls {
                    (1.0 - (-lu).exp()).exp()
                } else {
                    (-(ls - lu).exp()).exp()
                }
            }
            Law::StableMod { table, .. } => table.quantile_log(lu, ls),
            Law::Composed { inner, op, count } => {
                let n = *count as f64;
                match op {
                    Op::Max => {
                        let lu_in = lu / n;
                        inner.quantile_log(lu_in, log1mexp(lu_in))
                    }
                    Op::Min => {
                        let ls_in = ls / n;
                        inner.quantile_log(log1mexp(ls_in), ls_in)
                    }
                }
            }
        }
    }

    /// One draw. Iterated statistics are sampled by literal tournaments.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.law() {
            Law::Exp { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Law::Weibull { shape, scale } => {
                let e: f64 = Exp1.sample(rng);
                scale * e.powf(1.0 / shape)
            }
            Law::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Law::Pareto { beta, xm } => {
                let e: f64 = Exp1.sample(rng);
                xm * (e / beta).exp()
            }
            Law::HalfNormal { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (sigma * z).abs()
            }
            Law::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            Law::Constant { c } => *c,
            Law::AtomZero { p0, base } => {
                if rng.random::<f64>() < *p0 {
                    0.0
                } else {
                    base.sample(rng)
                }
            }
            Law::LogLight => {
                let u = 1.0 - rng.random::<f64>();
                self.quantile(u)
            }
            Law::StableMod { alpha, .. } => stable::symmetric_stable(*alpha, rng).abs(),
            Law::Composed { inner, op, count } => {
                let first = inner.sample(rng);
                (1..*count).fold(first, |acc, _| {
                    let x = inner.sample(rng);
                    match op {
                        Op::Min => acc.min(x),
                        Op::Max => acc.max(x),
                    }
                })
            }
        }
    }

    /// Power-law tail index `β` when `P(X > t) ~ c t^{-β}`, `None` for
    /// lighter tails.
    pub fn tail_index(&self) -> Option<f64> {
        match self.law() {
            Law::Pareto { beta, .. } => Some(*beta),
            Law::StableMod { alpha, .. } if *alpha < 2.0 => Some(*alpha),
            Law::AtomZero { base, .. } => base.tail_index(),
            Law::Composed { inner, op, count } => inner.tail_index().map(|b| match op {
                Op::Min => b * *count as f64,
                Op::Max => b,
            }),
            _ => None,
        }
    }

    /// Whether `E X^r < ∞`, from the declared tail index.
    pub fn q_moment_finite(&self, r: f64) -> bool {
        self.tail_index().is_none_or(|b| r < b)
    }

    /// `P(X = 0)`.
    pub fn atom_at_zero(&self) -> f64 {
        self.cdf(0.0)
    }

    /// Locations of point masses.
    pub fn atoms(&self) -> Vec<f64> {
        match self.law() {
            Law::Constant { c } => vec![*c],
            Law::AtomZero { p0, base } => {
                let mut v = base.atoms();
                if *p0 > 0.0 {
                    v.push(0.0);
                }
                v
            }
            Law::Composed { inner, .. } => inner.atoms(),
            _ => Vec::new(),
        }
    }

    /// Points where the tail is discontinuous or has a kink; used as
    /// quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = match self.law() {
            Law::Uniform { a, b } => vec![*a, *b],
            Law::Pareto { xm, .. } => vec![*xm],
            Law::LogLight => vec![1.0],
            Law::AtomZero { base, .. } => base.breakpoints(),
            Law::Composed { inner, .. } => inner.breakpoints(),
            _ => Vec::new(),
        };
        v.extend(self.atoms());
        v.retain(|x| *x > 0.0);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Whether the law rests on an empirical table rather than a closed form.
    pub fn table_backed(&self) -> bool {
        match self.law() {
            Law::StableMod { .. } => true,
            Law::AtomZero { base, .. } => base.table_backed(),
            Law::Composed { inner, .. } => inner.table_backed(),
            _ => false,
        }
    }

    /// Absolute accuracy of `cdf`: zero for closed forms, the table
    /// accuracy for empirical laws.
    pub fn cdf_accuracy(&self) -> f64 {
        if self.table_backed() {
            stable::TABLE_ACCURACY
        } else {
            0.0
        }
    }

    /// Right end of the support (`∞` when unbounded).
    pub fn support_max(&self) -> f64 {
        match self.law() {
            Law::Uniform { b, .. } => *b,
            Law::Constant { c } => *c,
            Law::LogLight => 1.0,
            Law::AtomZero { base, .. } => base.support_max(),
            Law::Composed { inner, .. } => inner.support_max(),
            _ => f64::INFINITY,
        }
    }
}

/// `P(m_n > t) = P(X > t)^n`, evaluated as `exp(n · ln P(X > t))`.
pub fn tail_power(spec: &DistributionSpec, t: f64, n: u64) -> f64 {
    if n == 1 {
        return spec.tail(t);
    }
    (n as f64 * spec.log_tail(t)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    fn closed_forms() -> Vec<DistributionSpec> {
        [
            "exp(1)",
            "exp(2.5)",
            "uniform(0,1)",
            "uniform(0.5,3)",
            "pareto(3,1)",
            "weibull(2,1)",
            "weibull(0.5,2)",
            "halfnormal(1)",
            "lognormal(0,1)",
            "atomzero(0.3, exp(1))",
            "loglight()",
        ]
        .iter()
        .map(|s| parse_spec(s).unwrap())
        .collect()
    }

    #[test]
    fn tail_plus_cdf_is_one() {
        for d in closed_forms() {
            for i in 0..400 {
                let t = 1e-4 * 1.04f64.powi(i);
                let s = d.tail(t) + d.cdf(t);
                assert!((s - 1.0).abs() <= 2.0 * f64::EPSILON, "{d} at {t}: {s}");
            }
        }
    }

    #[test]
    fn log_tail_agrees_with_tail() {
        for d in closed_forms() {
            for i in 0..400 {
                let t = 1e-4 * 1.04f64.powi(i);
                let tail = d.tail(t);
                if tail > 1e-300 {
                    let rel = (d.log_tail(t).exp() - tail).abs() / tail;
                    assert!(rel <= 1e-12, "{d} at {t}: rel {rel}");
                }
                let cdf = d.cdf(t);
                if cdf > 1e-300 {
                    let rel = (d.log_cdf(t).exp() - cdf).abs() / cdf;
                    assert!(rel <= 1e-12, "{d} cdf at {t}: rel {rel}");
                }
            }
        }
    }

    #[test]
    fn quantile_round_trip_at_continuity_points() {
        for d in closed_forms() {
            let atom = d.atom_at_zero();
            for i in 1..1000 {
                let u = i as f64 / 1000.0;
                if u <= atom {
                    assert_eq!(d.quantile(u), 0.0);
                    continue;
                }
                let x = d.quantile(u);
                if x < 1e-300 {
                    // below the smallest normal double (loglight near 0)
                    continue;
                }
                assert!((d.cdf(x) - u).abs() <= 1e-10, "{d}: u={u} x={x} cdf={}", d.cdf(x));
            }
        }
    }

    #[test]
    fn quantile_is_left_inverse() {
        for d in closed_forms() {
            for i in 1..200 {
                let t = 0.01 * i as f64;
                let u = d.cdf(t);
                if u > 0.0 && u < 1.0 {
                    assert!(d.quantile(u) <= t * (1.0 + 1e-12) + 1e-15, "{d} t={t}");
                }
            }
        }
    }

    #[test]
    fn monotone_tails() {
        for d in closed_forms() {
            let mut prev = d.tail(0.0);
            assert!((prev - (1.0 - d.atom_at_zero())).abs() < 1e-15);
            for i in 0..500 {
                let t = 1e-3 * 1.03f64.powi(i);
                let cur = d.tail(t);
                assert!(cur <= prev, "{d}");
                prev = cur;
            }
        }
    }

    #[test]
    fn atomzero_cdf_at_zero_is_exact() {
        let d = parse_spec("atomzero(0.3, exp(1))").unwrap();
        assert_eq!(d.cdf(0.0), 0.3);
        assert_eq!(d.atom_at_zero(), 0.3);
    }

    #[test]
    fn tail_power_examples() {
        let e = parse_spec("exp(1)").unwrap();
        assert!((tail_power(&e, 1.0, 3) - (-3.0f64).exp()).abs() < 1e-16);
        let u = parse_spec("uniform(0,1)").unwrap();
        assert!((tail_power(&u, 0.5, 20) - 0.5f64.powi(20)).abs() < 1e-20);
        for d in closed_forms() {
            assert_eq!(tail_power(&d, 0.7, 1), d.tail(0.7));
        }
        // no underflow in the exponent for n = 2^30
        let p = tail_power(&e, 1e-9, 1 << 30);
        assert!((p - (-((1u64 << 30) as f64) * 1e-9).exp()).abs() < 1e-15);
    }

    #[test]
    fn composed_min_of_exponentials_is_exponential() {
        let e = parse_spec("exp(1)").unwrap();
        let m = e.iterate(Op::Min, 7);
        let e7 = parse_spec("exp(7)").unwrap();
        for i in 0..100 {
            let t = 0.01 * i as f64;
            assert!((m.tail(t) - e7.tail(t)).abs() < 1e-12);
            assert!((m.cdf(t) - e7.cdf(t)).abs() < 1e-12);
        }
        assert!((m.quantile(0.3) - e7.quantile(0.3)).abs() < 1e-12);
    }

    #[test]
    fn composed_quantile_in_deep_tail() {
        let e = parse_spec("exp(1)").unwrap();
        let m = e.iterate(Op::Max, 1 << 20);
        // P(M > t) = 1e-14 -> (1 - e^{-t})^n = 1 - 1e-14
        let t = m.quantile_upper(1e-14);
        let back = m.log_tail(t);
        assert!((back - 1e-14f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn moment_finiteness_from_tail_index() {
        let p = parse_spec("pareto(3,1)").unwrap();
        assert!(p.q_moment_finite(2.0));
        assert!(!p.q_moment_finite(3.0));
        assert!(p.iterate(Op::Min, 2).q_moment_finite(5.0));
        assert!(!p.iterate(Op::Max, 2).q_moment_finite(3.0));
        assert!(parse_spec("exp(1)").unwrap().q_moment_finite(50.0));
    }

    #[test]
    fn samplers_follow_cdf_dkw() {
        // DKW band at confidence 0.999 for 10^6 draws
        let n = 1_000_000usize;
        let eps = ((2.0f64 / 0.001).ln() / (2.0 * n as f64)).sqrt();
        for d in closed_forms() {
            let mut rng = stream_rng(42, 0);
            let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            // compare at the last draw of each run of ties, where the
            // empirical CDF is right-continuous like the model CDF
            let mut worst = 0.0f64;
            for i in 0..n {
                if i + 1 < n && xs[i + 1] == xs[i] {
                    continue;
                }
                let ecdf = (i + 1) as f64 / n as f64;
                worst = worst.max((d.cdf(xs[i]) - ecdf).abs());
            }
            assert!(worst <= eps, "{d}: {worst} > {eps}");
        }
    }

    #[test]
    fn loglight_cdf_values() {
        let d = parse_spec("loglight()").unwrap();
        let t = 0.1f64;
        assert!((d.cdf(t) - 1.0 / (std::f64::consts::E / t).ln()).abs() < 1e-15);
        assert_eq!(d.cdf(1.0), 1.0);
    }
}
