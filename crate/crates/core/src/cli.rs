//! Command-line driver: one subcommand per checker, each emitting a
//! versioned JSON report (or a short text summary) and an exit code.
//!
//! Exit codes: 0 every assertion holds, 1 an assertion fails, 2 the result
//! is inconclusive, 3 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::comparison::{
    small_ball_comparison, tail_comparison, thinning_equivalence, two_sided_comparison, ComparisonVerdict,
};
use crate::distributions::{parse_spec, DistributionSpec};
use crate::error::{Error, Result};
use crate::gauss_stable::{
    correlation_check, default_shifts, default_t_grid, integral_equivalence, kanter_bound_check, min_moment_hypothesis,
    regularity_check, slepian_sqrt2_check, small_ball, ConvexSet, LawSpec, VectorLaw,
};
use crate::hyper::{
    block_words, check_max_conditions, check_min_conditions, check_minmax, iterated_hyper_check, ConstantInputs,
    ConstantsLedger, HyperParams, Verdict,
};
use crate::moments::{
    compose_cdf, log_moment, max_moment_bounds, mc_moment, moment_norm, tail_sandwich, MomentQuery, Op, Word,
};
use crate::numeric::log_grid;
use crate::par;

/// Version of the JSON report layout.
pub const SCHEMA: u32 = 1;
/// Environment variable read when `--seed` is absent.
pub const SEED_ENV: &str = "MINMAX_HYPER_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "minmax-hyper", version, about = "Hypercontractivity of minima and maxima: exact checks and Monte Carlo verification")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random stream [default: $MINMAX_HYPER_SEED, else 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Omit the timestamp so identical runs give identical bytes
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args, Clone)]
pub struct HyperArgs {
    /// Distribution, e.g. "exp(1)" or "atomzero(0.3, exp(1))"
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// n grid is 2^0..=2^k
    #[arg(long, default_value_t = 30)]
    pub n_max_log2: u32,
    /// Points of the t grid
    #[arg(long, default_value_t = 400)]
    pub t_grid: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    /// Small/large t threshold as a multiple of ||X||_p
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
}

impl HyperArgs {
    fn params(&self) -> Result<HyperParams> {
        if self.n_max_log2 > 62 {
            return Err(Error::Domain(format!("n_max_log2 must be at most 62, got {}", self.n_max_log2)));
        }
        let h = HyperParams {
            p: self.p,
            q: self.q,
            n_grid: (0..=self.n_max_log2).map(|k| 1u64 << k).collect(),
            t_grid_size: self.t_grid,
            rel_tol: self.rel_tol,
            rho: self.rho,
        };
        h.validate()?;
        Ok(h)
    }
}

#[derive(Debug, Args, Clone)]
pub struct LawArgs {
    /// Law as JSON, a path to a JSON file, or one of
    /// gaussian | stable-subgaussian | stable-indep
    #[arg(long, default_value = "gaussian")]
    pub law: String,
    /// Stability index for the keyword laws
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Covariance, row-major, comma separated [default: identity]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cov: Option<Vec<f64>>,
    /// Dimension when no covariance is given
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Convex set(s) as JSON object/array or a path [default: Euclidean unit ball]
    #[arg(long)]
    pub sets: Option<String>,
    /// Monte Carlo samples per estimate
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    SmallBall,
    Tail,
    TwoSided,
    Thinning,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ||W(X)||_r for a word of maxima and minima
    Moments {
        #[arg(long)]
        dist: String,
        /// Word such as "max2.min3" (outermost first) or "id"
        #[arg(long, default_value = "id")]
        word: String,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
        /// Also estimate by Monte Carlo tournaments with this many replicates
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Moment and tail sandwiches for maxima
    Bounds {
        #[arg(long)]
        dist: String,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,10000")]
        n: Vec<u64>,
    },
    /// Min-side conditions and constants
    HyperMin(HyperArgs),
    /// Max-side conditions and constants
    HyperMax(HyperArgs),
    /// Both sides, the clip sigma and the block-word sweep
    HyperMinmax(HyperArgs),
    /// Closed-form constants ledger
    Constants {
        #[arg(long = "C", default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
        /// Moment domination constant of minima
        #[arg(long, default_value_t = 1.0)]
        b_dom: f64,
        /// Moment domination constant of maxima
        #[arg(long, default_value_t = 1.0)]
        d_dom: f64,
        #[arg(long, default_value_t = 1.0)]
        y_norm: f64,
        /// Small-ball mass level b
        #[arg(long, default_value_t = 0.5)]
        b: f64,
        /// Integral ratio r
        #[arg(long, default_value_t = 0.25)]
        r: f64,
    },
    /// Comparison of two laws through their minima and maxima
    Compare {
        #[arg(long)]
        dist_x: String,
        #[arg(long)]
        dist_y: String,
        #[arg(long, value_enum, default_value_t = DirectionArg::All)]
        direction: DirectionArg,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long)]
        beta: Option<f64>,
        /// Tail domination constant; fitted when absent
        #[arg(long)]
        c_tail: Option<f64>,
        #[arg(long, default_value_t = 20)]
        n_max_log2: u32,
        #[arg(long, default_value_t = 200)]
        t_grid: usize,
    },
    /// Small-ball probabilities over a radius grid
    SmallBall {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2")]
        radii: Vec<f64>,
        /// Shift vector [default: 0]
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        shift: Option<Vec<f64>>,
    },
    /// Concentration bound for shifted dilates
    Kanter {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.25,0.5,1")]
        kappa: Vec<f64>,
    },
    /// Small-ball regularity in the radius
    Regularity {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 0.5)]
        b: f64,
        /// Dilate the set to this mass first
        #[arg(long)]
        target: Option<f64>,
    },
    /// Correlation inequality for Gaussian measures
    Correlation {
        #[command(flatten)]
        law: LawArgs,
        /// Dilation of the intersection
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// E max_l ||G||_l against E max_l ||G_l||_l
    Slepian {
        #[command(flatten)]
        law: LawArgs,
    },
    /// Ratio profile of minima of maxima of norms (reported only)
    #[command(name = "min-moment-hypothesis", alias = "hyp62")]
    MinMomentHypothesis {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        /// n grid is 2^0..=2^k
        #[arg(long, default_value_t = 8)]
        n_max_log2: u32,
        /// Replicates at the largest n
        #[arg(long, default_value_t = 4096)]
        replicates: usize,
    },
    /// Integral form of small-ball regularity
    #[command(name = "integral-equivalence", alias = "integral72")]
    IntegralEquivalence {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 0.5)]
        b: f64,
        #[arg(long)]
        target: Option<f64>,
    },
    /// Estimates for open questions; never asserted
    ExploreConjectures {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,1.05,1.1,1.25,1.5")]
        scales: Vec<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Moments { .. } => "moments",
            Command::Bounds { .. } => "bounds",
            Command::HyperMin(_) => "hyper-min",
            Command::HyperMax(_) => "hyper-max",
            Command::HyperMinmax(_) => "hyper-minmax",
            Command::Constants { .. } => "constants",
            Command::Compare { .. } => "compare",
            Command::SmallBall { .. } => "small-ball",
            Command::Kanter { .. } => "kanter",
            Command::Regularity { .. } => "regularity",
            Command::Correlation { .. } => "correlation",
            Command::Slepian { .. } => "slepian",
            Command::MinMomentHypothesis { .. } => "min-moment-hypothesis",
            Command::IntegralEquivalence { .. } => "integral-equivalence",
            Command::ExploreConjectures { .. } => "explore-conjectures",
        }
    }
}

/// A finished report and its verdict.
pub struct Outcome {
    pub report: Value,
    pub verdict: Verdict,
}

fn outcome<T: Serialize>(report: &T, verdict: Verdict) -> Result<Outcome> {
    Ok(Outcome {
        report: serde_json::to_value(report).map_err(|e| Error::Domain(e.to_string()))?,
        verdict,
    })
}

fn spec(text: &str) -> Result<DistributionSpec> {
    parse_spec(text)
}

/// JSON given inline, or read from a file path.
fn json_arg(text: &str) -> Result<Value> {
    let trimmed = text.trim_start();
    let raw = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).map_err(|e| Error::Domain(format!("cannot read {text}: {e}")))?
    };
    serde_json::from_str(&raw).map_err(|e| Error::Domain(format!("invalid JSON in {text}: {e}")))
}

impl LawArgs {
    fn law(&self, seed: u64) -> Result<VectorLaw> {
        let cov_dim = |cov: &Vec<f64>| -> Result<usize> {
            let d = (cov.len() as f64).sqrt().round() as usize;
            if d * d != cov.len() {
                return Err(Error::Domain(format!("covariance has {} entries, not a square", cov.len())));
            }
            Ok(d)
        };
        let gaussian_parts = || -> Result<(usize, Vec<f64>)> {
            match &self.cov {
                Some(c) => Ok((cov_dim(c)?, c.clone())),
                None => Ok((self.dim, crate::gauss_stable::identity(self.dim))),
            }
        };
        let alpha = || self.alpha.ok_or_else(|| Error::Domain("--alpha is required for stable laws".into()));
        let spec = match self.law.as_str() {
            "gaussian" => {
                let (dimension, cov) = gaussian_parts()?;
                LawSpec::Gaussian { dimension, cov }
            }
            "stable-subgaussian" => {
                let (dimension, cov) = gaussian_parts()?;
                LawSpec::StableSubgaussian {
                    alpha: alpha()?,
                    dimension,
                    cov,
                }
            }
            "stable-indep" => LawSpec::StableIndep {
                alpha: alpha()?,
                scales: vec![1.0; self.dim],
            },
            other => serde_json::from_value(json_arg(other)?).map_err(|e| Error::Domain(format!("invalid law: {e}")))?,
        };
        VectorLaw::new(&spec, seed)
    }

    fn sets(&self) -> Result<Vec<ConvexSet>> {
        let Some(text) = &self.sets else {
            return Ok(vec![ConvexSet::euclidean_ball(1.0)]);
        };
        let v = json_arg(text)?;
        let sets = if v.is_array() {
            serde_json::from_value(v)
        } else {
            serde_json::from_value(v).map(|s| vec![s])
        };
        sets.map_err(|e| Error::Domain(format!("invalid set: {e}")))
    }

    fn one_set(&self) -> Result<ConvexSet> {
        let mut s = self.sets()?;
        if s.len() != 1 {
            return Err(Error::Domain(format!("expected one set, got {}", s.len())));
        }
        Ok(s.remove(0))
    }
}

/// One row of the max-moment sandwich.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub n: u64,
    pub b_n: f64,
    pub lower: f64,
    /// `E M_N^r` by quadrature of the composed law.
    pub exact: f64,
    pub upper: f64,
    pub holds: bool,
}

/// One point of the tail sandwich.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub n: u64,
    pub t: f64,
    pub lower: f64,
    /// `P(M_N > t)` from the composed law.
    pub exact: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub dist: String,
    pub r: f64,
    pub moment_anchor: &'static str,
    pub tail_anchor: &'static str,
    pub moments: Vec<BoundsRow>,
    pub tails: Vec<TailRow>,
    pub verdict: Verdict,
}

/// Quadrature tolerance of the sandwich checks.
const BOUNDS_TOL: f64 = 1e-10;

/// Moment sandwich around `b_N` and the tail sandwich on a quantile grid,
/// each against the composed law `M_N`.
pub fn bounds_report(spec: &DistributionSpec, r: f64, ns: &[u64]) -> Result<BoundsReport> {
    let moments = par::map_slice(ns, |&n| -> Result<BoundsRow> {
        let b = max_moment_bounds(spec, n, r, BOUNDS_TOL)?;
        let exact = log_moment(&compose_cdf(spec, &Word::single(Op::Max, n)), r, BOUNDS_TOL)?.exp();
        let slack = 1e-7 * exact;
        Ok(BoundsRow {
            n,
            b_n: b.b_n,
            lower: b.lower,
            exact,
            upper: b.upper,
            holds: b.lower <= exact + slack && exact <= b.upper + slack,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = (1..=24).map(|k| spec.quantile_upper(10f64.powf(-k as f64 / 2.0))).collect();
    let mut tails = Vec::new();
    for &n in ns {
        let m = compose_cdf(spec, &Word::single(Op::Max, n));
        for &t in &ts {
            let s = tail_sandwich(spec.tail(t), n);
            let exact = m.tail(t);
            let slack = 1e-12 * exact.max(1e-300);
            tails.push(TailRow {
                n,
                t,
                lower: s.lower,
                exact,
                upper: s.upper,
                holds: s.lower <= exact + slack && exact <= s.upper + slack,
            });
        }
    }
    let ok = moments.iter().all(|r| r.holds) && tails.iter().all(|r| r.holds);
    Ok(BoundsReport {
        dist: spec.name().to_string(),
        r,
        moment_anchor: "(b_N^r + N r int_{b_N}^inf u^(r-1) P(X>u) du)/2 <= E M_N^r <= b_N^r + N r int_{b_N}^inf ...",
        tail_anchor: "N P(X>t) / (1 + N P(X>t)) <= P(M_N > t) <= min(N P(X>t), 1)",
        moments,
        tails,
        verdict: if ok { Verdict::Holds } else { Verdict::Fails },
    })
}

fn compare(
    x: &DistributionSpec,
    y: &DistributionSpec,
    params: &HyperParams,
    direction: DirectionArg,
    lambda: f64,
    beta: Option<f64>,
    c_tail: Option<f64>,
) -> Result<Outcome> {
    let want = |d: DirectionArg| direction == d || direction == DirectionArg::All;
    let mut out = serde_json::Map::new();
    let mut verdict = Verdict::Holds;
    let mut record = |key: &str, r: Result<ComparisonVerdict>, verdict: &mut Verdict| -> Result<()> {
        match r {
            Ok(v) => {
                *verdict = verdict.and(v.verdict);
                out.insert(key.into(), serde_json::to_value(&v).map_err(|e| Error::Domain(e.to_string()))?);
            }
            // with several directions requested, an unmet hypothesis is reported, not fatal
            Err(e @ (Error::HypothesisFailed(_) | Error::NoFiniteD { .. })) if direction == DirectionArg::All => {
                *verdict = verdict.and(Verdict::Inconclusive);
                out.insert(key.into(), json!({ "error": e.to_string() }));
            }
            Err(e) => return Err(e),
        }
        Ok(())
    };
    if want(DirectionArg::SmallBall) {
        record("small_ball", small_ball_comparison(x, y, params, lambda, beta), &mut verdict)?;
    }
    if want(DirectionArg::Tail) {
        record("tail", tail_comparison(x, y, params, lambda), &mut verdict)?;
    }
    if want(DirectionArg::TwoSided) {
        record("two_sided", two_sided_comparison(x, y, params), &mut verdict)?;
    }
    if want(DirectionArg::Thinning) {
        let t = thinning_equivalence(x, y, params, c_tail, lambda)?;
        verdict = verdict.and(t.verdict);
        out.insert("thinning".into(), serde_json::to_value(&t).map_err(|e| Error::Domain(e.to_string()))?);
    }
    Ok(Outcome {
        report: Value::Object(out),
        verdict,
    })
}

/// `Γ(1+q)^{1/q} / Γ(1+p)^{1/p}`, the min-hypercontractivity constant of
/// a law with small-ball behavior `P(Y < s) ~ K s`.
pub fn linear_small_ball_constant(p: f64, q: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    (ln_gamma(1.0 + q) / q - ln_gamma(1.0 + p) / p).exp()
}

fn explore(law: &VectorLaw, sets: &[ConvexSet], p: f64, q: f64, scales: &[f64], samples: usize) -> Result<Outcome> {
    if !(p > 0.0 && p < q) {
        return Err(Error::Domain(format!("need 0 < p < q, got p = {p}, q = {q}")));
    }
    // ‖m_n(Y)‖_q / ‖m_n(Y)‖_p for Y = ‖X‖, from tournament minima
    let grid: Vec<u64> = (0..=8).map(|k| 1 << k).collect();
    let replicates = (samples / 256).max(64);
    let norm = &sets[..1];
    let hq = min_moment_hypothesis(law, norm, &grid, q, replicates)?;
    let hp = min_moment_hypothesis(law, norm, &grid, p, replicates)?;
    let ratios: Vec<(u64, f64)> = hq.rows.iter().zip(&hp.rows).map(|(a, b)| (a.n, a.y_norm / b.y_norm)).collect();
    let sup = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut sweep = Vec::new();
    if law.is_gaussian() {
        for &s in scales {
            let c = correlation_check(law, sets, s, samples)?;
            sweep.push(json!({
                "scale": s,
                "lhs": c.lhs,
                "rhs": c.rhs,
                "stderr": c.stderr,
                "holds_within_ci": c.verdict == Verdict::Holds,
            }));
        }
    }
    let report = json!({
        "asserted": false,
        "gaussian_norm_constant": {
            "anchor": "best C in ||m_n(||X||)||_q <= C ||m_n(||X||)||_p",
            "ratios": ratios,
            "sup_estimate": sup,
            "linear_small_ball_value": linear_small_ball_constant(p, q),
            "replicates_at_largest_n": replicates,
        },
        "dilated_correlation_sweep": sweep,
    });
    Ok(Outcome {
        report,
        verdict: Verdict::Holds,
    })
}

/// Evaluate a parsed command.
pub fn execute(cmd: &Command, seed: u64) -> Result<Outcome> {
    match cmd {
        Command::Moments {
            dist,
            word,
            r,
            rel_tol,
            samples,
        } => {
            let s = spec(dist)?;
            let w: Word = word.parse()?;
            let norm = moment_norm(&MomentQuery::new(s.clone(), w.clone(), *r).with_rel_tol(*rel_tol))?;
            let mut report = json!({
                "dist": s.name(),
                "word": w.to_string(),
                "r": r,
                "rel_tol": rel_tol,
                "norm": norm,
                "moment": norm.powf(*r),
            });
            let mut verdict = Verdict::Holds;
            if let Some(n) = samples {
                let mc = mc_moment(&s, &w, *r, *n, seed);
                let z = (mc.mean - norm.powf(*r)) / mc.stderr();
                if z.abs() > 4.0 {
                    verdict = Verdict::Fails;
                }
                report["monte_carlo"] = json!({
                    "replicates": n,
                    "moment": mc.mean,
                    "stderr": mc.stderr(),
                    "z": z,
                    "agrees": z.abs() <= 4.0,
                });
            }
            Ok(Outcome { report, verdict })
        }
        Command::Bounds { dist, r, n } => {
            let rep = bounds_report(&spec(dist)?, *r, n)?;
            outcome(&rep, rep.verdict)
        }
        Command::HyperMin(a) => {
            let rep = check_min_conditions(&spec(&a.dist)?, &a.params()?)?;
            outcome(&rep, rep.verdict())
        }
        Command::HyperMax(a) => {
            let rep = check_max_conditions(&spec(&a.dist)?, &a.params()?)?;
            outcome(&rep, rep.verdict())
        }
        Command::HyperMinmax(a) => {
            let s = spec(&a.dist)?;
            let params = a.params()?;
            let rep = check_minmax(&s, &params)?;
            let words = match rep.sigma {
                Some(sigma) => Some(iterated_hyper_check(&s, &params, sigma, &block_words(2, &[2, 4, 8]))?),
                None => None,
            };
            outcome(&json!({ "report": rep, "words": words }), rep.verdict())
        }
        Command::Constants {
            c,
            p,
            q,
            lambda,
            beta,
            b_dom,
            d_dom,
            y_norm,
            b,
            r,
        } => {
            let ledger = ConstantsLedger::compute(ConstantInputs {
                c: *c,
                p: *p,
                q: *q,
                lambda: *lambda,
                beta: *beta,
                b_dom: *b_dom,
                d_dom: *d_dom,
                y_norm_p: *y_norm,
                b_small_ball: *b,
                r: *r,
            })?;
            outcome(&ledger, Verdict::Holds)
        }
        Command::Compare {
            dist_x,
            dist_y,
            direction,
            p,
            q,
            lambda,
            beta,
            c_tail,
            n_max_log2,
            t_grid,
        } => {
            let params = HyperArgs {
                dist: String::new(),
                p: *p,
                q: *q,
                n_max_log2: *n_max_log2,
                t_grid: *t_grid,
                rel_tol: 1e-8,
                rho: 0.5,
            }
            .params()?;
            compare(&spec(dist_x)?, &spec(dist_y)?, &params, *direction, *lambda, *beta, *c_tail)
        }
        Command::SmallBall { law, radii, shift } => {
            let l = law.law(seed)?;
            let y = shift.clone().unwrap_or_else(|| vec![0.0; l.dimension]);
            let est = small_ball(&l, &law.one_set()?, &y, radii, law.samples)?;
            outcome(&est, Verdict::Holds)
        }
        Command::Kanter { law, kappa } => {
            let l = law.law(seed)?;
            let set = law.one_set()?;
            let rep = kanter_bound_check(&l, &set, &default_shifts(&set, l.dimension), kappa, law.samples)?;
            outcome(&rep, rep.verdict)
        }
        Command::Regularity { law, b, target } => {
            let rep = regularity_check(&law.law(seed)?, &law.one_set()?, *b, *target, &default_t_grid(), law.samples)?;
            outcome(&rep, rep.verdict)
        }
        Command::Correlation { law, scale } => {
            let rep = correlation_check(&law.law(seed)?, &law.sets()?, *scale, law.samples)?;
            // unproven configurations are reported, never failed
            let verdict = if rep.asserted { rep.verdict } else { Verdict::Holds };
            outcome(&rep, verdict)
        }
        Command::Slepian { law } => {
            let rep = slepian_sqrt2_check(&law.law(seed)?, &law.sets()?, law.samples)?;
            outcome(&rep, rep.verdict)
        }
        Command::MinMomentHypothesis {
            law,
            q,
            n_max_log2,
            replicates,
        } => {
            let grid: Vec<u64> = (0..=*n_max_log2).map(|k| 1u64 << k).collect();
            let rep = min_moment_hypothesis(&law.law(seed)?, &law.sets()?, &grid, *q, *replicates)?;
            outcome(&rep, Verdict::Holds)
        }
        Command::IntegralEquivalence { law, b, target } => {
            let grid = log_grid(0.01, 1.0, 20);
            let rep = integral_equivalence(&law.law(seed)?, &law.one_set()?, *b, *target, &grid, law.samples)?;
            outcome(&rep, rep.verdict)
        }
        Command::ExploreConjectures { law, p, q, scales } => {
            explore(&law.law(seed)?, &law.sets()?, *p, *q, scales, law.samples)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Domain(_) | Error::InfiniteMoment { .. } | Error::CovarianceNotPsd { .. } => {
            EXIT_USAGE
        }
        Error::HypothesisFailed(_) | Error::NoFiniteD { .. } | Error::NotSubregular(_) => EXIT_FAIL,
        _ => EXIT_INCONCLUSIVE,
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Holds => EXIT_OK,
        Verdict::Fails => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn resolve_seed(flag: Option<u64>) -> std::result::Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got {v:?}")),
        Err(_) => Ok(0),
    }
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn text_summary(command: &str, env: &Value) -> String {
    let mut s = format!("{command}: {}\n", env["verdict"].as_str().unwrap_or("?"));
    if let Some(obj) = env["report"].as_object() {
        for (k, v) in obj {
            let shown = match v {
                Value::Number(_) | Value::String(_) | Value::Bool(_) | Value::Null => v.to_string(),
                Value::Array(a) => format!("[{} entries]", a.len()),
                Value::Object(o) => format!("{{{} fields}}", o.len()),
            };
            s.push_str(&format!("  {k}: {shown}\n"));
        }
    }
    s
}

/// Parse `args` (including the program name), run, write the report and
/// return the exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let seed = match resolve_seed(cli.common.seed) {
        Ok(s) => s,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let command = cli.command.name();
    let result = par::with_threads(cli.common.threads, || execute(&cli.command, seed));
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let mut env = json!({
        "schema": SCHEMA,
        "command": command,
        "seed": seed,
        "verdict": outcome.verdict,
        "report": outcome.report,
    });
    if !cli.common.no_timestamp {
        env["timestamp"] = json!(timestamp());
    }
    let text = match cli.common.format {
        Format::Json => serde_json::to_string_pretty(&env).expect("report serializes") + "\n",
        Format::Text => text_summary(command, &env),
    };
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_USAGE;
    }
    verdict_code(outcome.verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["minmax-hyper"];
        full.extend_from_slice(args);
        let code = run_from(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn report(args: &[&str]) -> (i32, Value) {
        let (code, out, err) = run(args);
        assert!(err.is_empty() || code != 0, "{err}");
        (code, serde_json::from_str(&out).unwrap_or(Value::Null))
    }

    #[test]
    fn constants_golden() {
        let (code, v) = report(&["constants", "--C", "2", "--p", "1", "--q", "2", "--no-timestamp"]);
        assert_eq!(code, 0);
        assert_eq!(v["schema"], 1);
        assert!((v["report"]["truncation_alpha"].as_f64().unwrap() - 8.0).abs() < 1e-12);
        assert!(v.get("timestamp").is_none());
        let (_, v) = report(&["constants", "--C", "1.4142135623730951", "--p", "1", "--q", "2"]);
        assert!((v["report"]["halving_k"].as_f64().unwrap() - 16.0).abs() < 1e-12);
        assert!(v["timestamp"].is_u64());
    }

    #[test]
    fn usage_errors_exit_three() {
        assert_eq!(run(&["hyper-min"]).0, EXIT_USAGE);
        assert_eq!(run(&["moments", "--dist", "gamma(2)"]).0, EXIT_USAGE);
        assert_eq!(run(&["moments", "--dist", "exp(1)", "--word", "M2x"]).0, EXIT_USAGE);
        let (code, _, err) = run(&["hyper-max", "--dist", "pareto(3,1)", "--q", "3"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("infinite"));
        assert_eq!(run(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn moments_word_and_text_format() {
        let (code, v) = report(&["moments", "--dist", "exp(1)", "--word", "min4", "--r", "1"]);
        assert_eq!(code, 0);
        assert!((v["report"]["norm"].as_f64().unwrap() - 0.25).abs() < 1e-9);
        let (code, out, _) = run(&["moments", "--dist", "exp(1)", "--format", "text"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("moments: holds"), "{out}");
    }

    #[test]
    fn aliases_resolve() {
        let parsed = Cli::try_parse_from(["x", "hyp62", "--samples", "10"]).unwrap();
        assert_eq!(parsed.command.name(), "min-moment-hypothesis");
        let parsed = Cli::try_parse_from(["x", "integral72"]).unwrap();
        assert_eq!(parsed.command.name(), "integral-equivalence");
    }

    #[test]
    fn law_and_set_arguments() {
        let la = LawArgs {
            law: r#"{"kind": "stable_indep", "alpha": 1.0, "scales": [1, 2]}"#.into(),
            alpha: None,
            cov: None,
            dim: 2,
            sets: Some(r#"[{"kind": "slab", "u": [1, 0], "width": 1}, {"kind": "lpball", "p_norm": "inf", "radius": 2}]"#.into()),
            samples: 10,
        };
        assert_eq!(la.law(0).unwrap().alpha(), 1.0);
        assert_eq!(la.sets().unwrap().len(), 2);
        assert!(la.one_set().is_err());
        let la = LawArgs {
            law: "stable-subgaussian".into(),
            cov: Some(vec![1.0, 0.5, 0.5, 1.0]),
            ..la
        };
        assert!(la.law(0).is_err());
        let la = LawArgs { alpha: Some(1.5), ..la };
        assert_eq!(la.law(0).unwrap().dimension, 2);
    }

    #[test]
    fn bounds_hold_for_exponential() {
        let rep = bounds_report(&parse_spec("exp(1)").unwrap(), 1.0, &[1, 10, 100, 10_000]).unwrap();
        assert_eq!(rep.verdict, Verdict::Holds);
        // E M_10 = H_10
        let h10: f64 = (1..=10).map(|k| 1.0 / k as f64).sum();
        assert!((rep.moments[1].exact - h10).abs() < 1e-8);
    }

    #[test]
    fn linear_small_ball_constant_matches_exponential() {
        assert!((linear_small_ball_constant(1.0, 2.0) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn seed_env_fallback() {
        assert_eq!(resolve_seed(Some(5)).unwrap(), 5);
    }
}
