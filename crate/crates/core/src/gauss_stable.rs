//! Monte Carlo checks for Gaussian and symmetric stable vectors in `R^d`:
//! small-ball probabilities of symmetric convex sets, their regularity in the
//! radius, the Kanter-type concentration bound, correlation inequalities,
//! the Slepian `√2` comparison and the min-moment hypothesis for maxima of
//! norms.
//!
//! Every estimate draws from counter-based streams ([`crate::mc`]) keyed by
//! the law's seed and a fixed part number per quantity, so reports do not
//! depend on the worker count. An assertion holds when
//! `lhs ≤ rhs + 4·stderr` at every grid point.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize};

use crate::distributions::stable::{positive_stable, symmetric_stable};
use crate::error::{Error, Result};
use crate::hyper::{integral_constants, regularity_constant, Verdict, Witness};
use crate::mc::{self, part_base};
use crate::numeric::{log_grid, wilson_interval, MeanVar};

/// Largest supported dimension.
pub const MAX_DIM: usize = 64;
/// Normal quantile of the two-sided 0.999 interval.
pub const Z999: f64 = 3.290_526_731_491_926;
/// Standard errors of slack in every assertion.
pub const SLACK_SE: f64 = 4.0;
/// Margin, in standard errors, below which a verdict is rerun at
/// [`ESCALATED_SAMPLES`].
pub const ESCALATE_SE: f64 = 8.0;
pub const ESCALATED_SAMPLES: usize = 10_000_000;
/// Smallest `ν̂(B)` for which the regularity bounds are meaningful.
pub const MIN_SET_MASS: f64 = 0.01;
pub const CERTIFICATION: &str = "monte-carlo-0.999";

const PART_SAMPLE: u64 = 1;
const PART_RESCALE: u64 = 2;
const PART_SMALL_BALL: u64 = 3;
const PART_KANTER: u64 = 16;
const PART_CORRELATION: u64 = 64;
const PART_SLEPIAN: u64 = 65;
const PART_HYPOTHESIS: u64 = 66;
const PART_INTEGRAL: u64 = 67;
const PART_CHECK: u64 = 68;
/// Escalated reruns draw from a disjoint family of parts.
const PART_ESCALATE: u64 = 1 << 20;

/// Textual law description, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawSpec {
    Gaussian { dimension: usize, cov: Vec<f64> },
    StableSubgaussian { alpha: f64, dimension: usize, cov: Vec<f64> },
    StableIndep { alpha: f64, scales: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LawKind {
    Gaussian,
    StableSubgaussian { alpha: f64 },
    StableIndep { alpha: f64, scales: Vec<f64> },
}

/// A centered Gaussian or symmetric stable vector in `R^d`.
///
/// Sub-Gaussian stable vectors are `√A·G` with `G ~ N(0, Σ)` and `A` positive
/// `(α/2)`-stable with `E e^{-sA} = e^{-s^{α/2}}`, so that
/// `E e^{i⟨u,X⟩} = exp(-(u'Σu/2)^{α/2})`. Independent-coordinate vectors
/// have coordinates `scale_i·S_i` with `E e^{iuS} = e^{-|u|^α}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorLaw {
    pub dimension: usize,
    pub kind: LawKind,
    /// Covariance, row-major; empty for independent coordinates.
    pub cov: Vec<f64>,
    pub seed: u64,
    #[serde(skip)]
    chol: Vec<f64>,
}

/// Lower-triangular `L` with `LL' = Σ` for positive semidefinite `Σ`;
/// numerically null pivots give zero columns.
fn cholesky(cov: &[f64], d: usize) -> Result<Vec<f64>> {
    let scale = (0..d).map(|i| cov[i * d + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    for i in 0..d {
        for j in 0..i {
            let (a, b) = (cov[i * d + j], cov[j * d + i]);
            if (a - b).abs() > 1e-12 * scale {
                return Err(Error::Domain(format!("covariance is not symmetric at ({i}, {j}): {a} vs {b}")));
            }
        }
    }
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut v = cov[j * d + j];
        for k in 0..j {
            v -= l[j * d + k] * l[j * d + k];
        }
        if v < -tol {
            return Err(Error::CovarianceNotPsd { pivot: j, value: v });
        }
        if v <= tol {
            // null direction: every later entry of this column must vanish too
            for i in j + 1..d {
                let mut w = cov[i * d + j];
                for k in 0..j {
                    w -= l[i * d + k] * l[j * d + k];
                }
                if w.abs() > 1e-6 * scale {
                    return Err(Error::CovarianceNotPsd { pivot: j, value: v });
                }
            }
            continue;
        }
        let root = v.sqrt();
        l[j * d + j] = root;
        for i in j + 1..d {
            let mut w = cov[i * d + j];
            for k in 0..j {
                w -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = w / root;
        }
    }
    Ok(l)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::Domain(format!("dimension must lie in 1..={MAX_DIM}, got {d}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    Ok(())
}

/// Row-major `d × d` identity.
pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

impl VectorLaw {
    pub fn new(spec: &LawSpec, seed: u64) -> Result<Self> {
        match spec {
            LawSpec::Gaussian { dimension, cov } => Self::gaussian(*dimension, cov.clone(), seed),
            LawSpec::StableSubgaussian { alpha, dimension, cov } => {
                Self::stable_subgaussian(*alpha, *dimension, cov.clone(), seed)
            }
            LawSpec::StableIndep { alpha, scales } => Self::stable_indep(*alpha, scales.clone(), seed),
        }
    }

    pub fn gaussian(dimension: usize, cov: Vec<f64>, seed: u64) -> Result<Self> {
        check_dim(dimension)?;
        if cov.len() != dimension * dimension {
            return Err(Error::Domain(format!(
                "covariance has {} entries, expected {}",
                cov.len(),
                dimension * dimension
            )));
        }
        let chol = cholesky(&cov, dimension)?;
        Ok(Self {
            dimension,
            kind: LawKind::Gaussian,
            cov,
            seed,
            chol,
        })
    }

    pub fn stable_subgaussian(alpha: f64, dimension: usize, cov: Vec<f64>, seed: u64) -> Result<Self> {
        check_alpha(alpha)?;
        let mut law = Self::gaussian(dimension, cov, seed)?;
        if alpha < 2.0 {
            law.kind = LawKind::StableSubgaussian { alpha };
        }
        Ok(law)
    }

    pub fn stable_indep(alpha: f64, scales: Vec<f64>, seed: u64) -> Result<Self> {
        check_alpha(alpha)?;
        check_dim(scales.len())?;
        if scales.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::Domain("scales must be finite and >= 0".into()));
        }
        let d = scales.len();
        if alpha == 2.0 {
            // e^{-u^2 s^2} is N(0, 2 s^2)
            let mut cov = vec![0.0; d * d];
            for (i, s) in scales.iter().enumerate() {
                cov[i * d + i] = 2.0 * s * s;
            }
            return Self::gaussian(d, cov, seed);
        }
        Ok(Self {
            dimension: d,
            kind: LawKind::StableIndep { alpha, scales },
            cov: Vec::new(),
            seed,
            chol: Vec::new(),
        })
    }

    /// Stability index, 2 for Gaussian laws.
    pub fn alpha(&self) -> f64 {
        match &self.kind {
            LawKind::Gaussian => 2.0,
            LawKind::StableSubgaussian { alpha } | LawKind::StableIndep { alpha, .. } => *alpha,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        self.kind == LawKind::Gaussian
    }

    /// Write one draw into `out`, using `z` as scratch of length `d`.
    pub fn draw(&self, rng: &mut ChaCha8Rng, out: &mut [f64], z: &mut [f64]) {
        let d = self.dimension;
        match &self.kind {
            LawKind::StableIndep { alpha, scales } => {
                for (o, s) in out.iter_mut().zip(scales) {
                    *o = s * symmetric_stable(*alpha, rng);
                }
            }
            kind => {
                let amp = match kind {
                    LawKind::StableSubgaussian { alpha } => positive_stable(alpha / 2.0, rng).sqrt(),
                    _ => 1.0,
                };
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                for i in 0..d {
                    let row = &self.chol[i * d..i * d + i + 1];
                    out[i] = amp * row.iter().zip(&z[..=i]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    }

    /// Evaluate `f` on `n` draws from part `part` in batches, returning the
    /// per-batch accumulators in batch order.
    fn batches<A, F>(&self, part: u64, n: usize, f: F) -> Vec<A>
    where
        A: Send,
        F: Fn(&mut dyn FnMut(&mut [f64]), usize) -> A + Sync + Send,
    {
        let d = self.dimension;
        mc::run_batches(self.seed, part_base(part), n, |rng, count| {
            let mut z = vec![0.0; d];
            let mut draw = |out: &mut [f64]| self.draw(rng, out, &mut z);
            f(&mut draw, count)
        })
    }

    /// Gauge values `g(X_i - y)` of `n` draws from part `part`.
    fn gauges(&self, set: &ConvexSet, y: &[f64], part: u64, n: usize) -> Vec<f64> {
        let d = self.dimension;
        self.batches(part, n, |draw, count| {
            let mut x = vec![0.0; d];
            (0..count)
                .map(|_| {
                    draw(&mut x);
                    for (xi, yi) in x.iter_mut().zip(y) {
                        *xi -= yi;
                    }
                    set.gauge(&x)
                })
                .collect::<Vec<f64>>()
        })
        .concat()
    }
}

/// `n` draws as an `n × d` row-major matrix, from stream `stream` of the
/// law's seed.
pub fn sample(law: &VectorLaw, n: usize, stream: u64) -> Result<Vec<f64>> {
    if n > 1_000_000_000 {
        return Err(Error::Domain(format!("at most 10^9 samples per run, got {n}")));
    }
    let d = law.dimension;
    Ok(law
        .batches(PART_SAMPLE + (stream << 8), n, |draw, count| {
            let mut m = vec![0.0; count * d];
            for row in m.chunks_mut(d) {
                draw(row);
            }
            m
        })
        .concat())
}

fn deserialize_p_norm<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum P {
        Num(f64),
        Text(String),
    }
    match P::deserialize(de)? {
        P::Num(x) => Ok(x),
        P::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
        P::Text(s) => Err(serde::de::Error::custom(format!("p_norm must be a number or \"inf\", got {s:?}"))),
    }
}

fn serialize_p_norm<S: serde::Serializer>(p: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if p.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*p)
    }
}

/// Closed symmetric convex set given by its Minkowski functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    /// `{x : |⟨x,u⟩| ≤ width}`.
    Slab { u: Vec<f64>, width: f64 },
    /// `{x : x'Qx ≤ 1}`, `Q` row-major positive semidefinite.
    Ellipsoid { q: Vec<f64> },
    /// `{x : ‖x‖_p ≤ radius}`, `p ≥ 1` or `"inf"`.
    Lpball {
        #[serde(deserialize_with = "deserialize_p_norm", serialize_with = "serialize_p_norm")]
        p_norm: f64,
        radius: f64,
    },
    Intersection { sets: Vec<ConvexSet> },
}

impl ConvexSet {
    pub fn euclidean_ball(radius: f64) -> Self {
        ConvexSet::Lpball { p_norm: 2.0, radius }
    }

    pub fn cube(half_width: f64) -> Self {
        ConvexSet::Lpball {
            p_norm: f64::INFINITY,
            radius: half_width,
        }
    }

    /// Slab `{|x_i| ≤ width}` along coordinate `i` of `R^d`.
    pub fn coordinate_slab(d: usize, i: usize, width: f64) -> Self {
        let mut u = vec![0.0; d];
        u[i] = 1.0;
        ConvexSet::Slab { u, width }
    }

    /// Check parameters against dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            ConvexSet::Slab { u, width } => {
                if u.len() != d {
                    return Err(Error::Domain(format!("slab normal has length {}, expected {d}", u.len())));
                }
                if !(*width > 0.0) || u.iter().all(|&x| x == 0.0) {
                    return Err(Error::Domain("slab needs width > 0 and a nonzero normal".into()));
                }
            }
            ConvexSet::Ellipsoid { q } => {
                if q.len() != d * d {
                    return Err(Error::Domain(format!("ellipsoid matrix has {} entries, expected {}", q.len(), d * d)));
                }
                cholesky(q, d).map_err(|_| Error::Domain("ellipsoid matrix is not positive semidefinite".into()))?;
            }
            ConvexSet::Lpball { p_norm, radius } => {
                if !(*p_norm >= 1.0) || !(*radius > 0.0) {
                    return Err(Error::Domain(format!(
                        "lpball needs p >= 1 and radius > 0, got ({p_norm}, {radius})"
                    )));
                }
                if radius.is_infinite() {
                    return Err(Error::Domain("the whole space is not a valid set".into()));
                }
            }
            ConvexSet::Intersection { sets } => {
                if sets.is_empty() {
                    return Err(Error::Domain("empty intersection is the whole space".into()));
                }
                for s in sets {
                    s.validate(d)?;
                }
            }
        }
        Ok(())
    }

    /// Minkowski functional `‖x‖_set = inf{λ > 0 : x ∈ λ·set}`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        match self {
            ConvexSet::Slab { u, width } => x.iter().zip(u).map(|(a, b)| a * b).sum::<f64>().abs() / width,
            ConvexSet::Ellipsoid { q } => {
                let d = x.len();
                let mut s = 0.0;
                for i in 0..d {
                    let row = &q[i * d..(i + 1) * d];
                    s += x[i] * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
                s.max(0.0).sqrt()
            }
            ConvexSet::Lpball { p_norm, radius } => {
                let norm = if p_norm.is_infinite() {
                    x.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
                } else if *p_norm == 2.0 {
                    x.iter().map(|v| v * v).sum::<f64>().sqrt()
                } else if *p_norm == 1.0 {
                    x.iter().map(|v| v.abs()).sum()
                } else {
                    // scale by the largest entry so |x_i|^p cannot overflow
                    let m = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
                    if m == 0.0 {
                        0.0
                    } else {
                        m * x.iter().map(|v| (v.abs() / m).powf(*p_norm)).sum::<f64>().powf(1.0 / p_norm)
                    }
                };
                norm / radius
            }
            ConvexSet::Intersection { sets } => sets.iter().map(|s| s.gauge(x)).fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) <= 1.0
    }

    /// The dilate `c·set`.
    pub fn scaled(&self, c: f64) -> ConvexSet {
        match self {
            ConvexSet::Slab { u, width } => ConvexSet::Slab {
                u: u.clone(),
                width: width * c,
            },
            ConvexSet::Ellipsoid { q } => ConvexSet::Ellipsoid {
                q: q.iter().map(|v| v / (c * c)).collect(),
            },
            ConvexSet::Lpball { p_norm, radius } => ConvexSet::Lpball {
                p_norm: *p_norm,
                radius: radius * c,
            },
            ConvexSet::Intersection { sets } => ConvexSet::Intersection {
                sets: sets.iter().map(|s| s.scaled(c)).collect(),
            },
        }
    }

    pub fn is_slab(&self) -> bool {
        matches!(self, ConvexSet::Slab { .. })
    }
}

/// Result of sampling symmetry, convexity and gauge consistency of a set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetCheck {
    pub pairs: usize,
    pub symmetric: bool,
    pub convex: bool,
    pub gauge_consistent: bool,
}

impl SetCheck {
    pub fn ok(&self) -> bool {
        self.symmetric && self.convex && self.gauge_consistent
    }
}

/// Check `g(x) = g(-x)`, `g((x+y)/2) ≤ 1` for members `x, y`, and
/// `g(x/g(x)) = 1` within `1e-9` on `pairs` random Gaussian directions.
pub fn check_set(set: &ConvexSet, d: usize, pairs: usize, seed: u64) -> Result<SetCheck> {
    set.validate(d)?;
    let law = VectorLaw::gaussian(d, identity(d), seed)?;
    let flags = law.batches(PART_CHECK, pairs, |draw, count| {
        let (mut x, mut y, mut mid, mut neg) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let mut ok = [true; 3];
        for i in 0..count {
            draw(&mut x);
            draw(&mut y);
            let (gx, gy) = (set.gauge(&x), set.gauge(&y));
            for k in 0..d {
                neg[k] = -x[k];
            }
            ok[0] &= (set.gauge(&neg) - gx).abs() <= 1e-12 * gx.max(1e-300);
            if gx > 0.0 && gy > 0.0 {
                // members on or inside the boundary at radii in (0, 1]
                let (sx, sy) = (((i % 97) as f64 + 1.0) / 97.0, ((i % 89) as f64 + 1.0) / 89.0);
                for k in 0..d {
                    mid[k] = 0.5 * (sx * x[k] / gx + sy * y[k] / gy);
                }
                ok[1] &= set.gauge(&mid) <= 1.0 + 1e-12;
                for k in 0..d {
                    mid[k] = x[k] / gx;
                }
                ok[2] &= (set.gauge(&mid) - 1.0).abs() <= 1e-9;
            }
        }
        ok
    });
    let all = |i: usize| flags.iter().all(|f| f[i]);
    Ok(SetCheck {
        pairs,
        symmetric: all(0),
        convex: all(1),
        gauge_consistent: all(2),
    })
}

fn prepare(law: &VectorLaw, set: &ConvexSet, n: usize) -> Result<()> {
    set.validate(law.dimension)?;
    if n == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    Ok(())
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|&t| !(t >= 0.0 && t.is_finite())) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("radii must be finite, nonnegative and strictly increasing".into()));
    }
    Ok(())
}

/// `#{g ≤ t}` for sorted gauges.
fn count_le(sorted: &[f64], t: f64) -> u64 {
    sorted.partition_point(|&g| g <= t) as u64
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Estimates of `ν(t·set + y)` over a radius grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallBallEstimate {
    pub radii: Vec<f64>,
    pub estimates: Vec<f64>,
    pub counts: Vec<u64>,
    /// Wilson 0.999 intervals.
    pub ci: Vec<(f64, f64)>,
    pub sample_count: usize,
    pub seed: u64,
}

impl SmallBallEstimate {
    fn from_gauges(sorted: &[f64], radii: &[f64], seed: u64) -> Self {
        let n = sorted.len();
        let counts: Vec<u64> = radii.iter().map(|&t| count_le(sorted, t)).collect();
        Self {
            radii: radii.to_vec(),
            estimates: counts.iter().map(|&c| c as f64 / n as f64).collect(),
            ci: counts.iter().map(|&c| wilson_interval(c, n as u64, Z999)).collect(),
            counts,
            sample_count: n,
            seed,
        }
    }

    /// Standard error of the estimate at index `i`.
    pub fn stderr(&self, i: usize) -> f64 {
        let p = self.estimates[i];
        (p * (1.0 - p) / self.sample_count as f64).sqrt()
    }
}

/// `ν̂(t·set + y)` for each radius, from one sample pass counting
/// `g(X - y) ≤ t`.
pub fn small_ball(law: &VectorLaw, set: &ConvexSet, y: &[f64], radii: &[f64], n: usize) -> Result<SmallBallEstimate> {
    prepare(law, set, n)?;
    check_radii(radii)?;
    if y.len() != law.dimension {
        return Err(Error::Domain(format!("shift has length {}, expected {}", y.len(), law.dimension)));
    }
    let g = sorted(law.gauges(set, y, PART_SMALL_BALL, n));
    Ok(SmallBallEstimate::from_gauges(&g, radii, law.seed))
}

/// Standard error of `1{g ≤ t} - c·1{g ≤ 1}` for nested events with
/// probabilities `p_t ≤ p_1`.
fn nested_stderr(p_t: f64, p_1: f64, c: f64, n: usize) -> f64 {
    let mean = p_t - c * p_1;
    let second = p_t * (1.0 - c).powi(2) + (p_1 - p_t).max(0.0) * c * c;
    ((second - mean * mean).max(0.0) / n as f64).sqrt()
}

/// One grid point of a Monte Carlo inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McPoint {
    pub at: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub holds: bool,
}

impl McPoint {
    fn new(at: f64, lhs: f64, rhs: f64, stderr: f64) -> Self {
        Self {
            at,
            lhs,
            rhs,
            stderr,
            holds: lhs <= rhs + SLACK_SE * stderr,
        }
    }

    fn near_boundary(&self) -> bool {
        self.rhs - self.lhs < ESCALATE_SE * self.stderr
    }

    fn witness(&self, label: &str) -> Witness {
        Witness {
            label: label.into(),
            at: self.at,
            lhs: self.lhs,
            rhs: self.rhs,
        }
    }
}

fn verdict_of<'a>(points: impl IntoIterator<Item = &'a McPoint>) -> Verdict {
    if points.into_iter().all(|p| p.holds) {
        Verdict::Holds
    } else {
        Verdict::Fails
    }
}

/// Run `f` at `n` samples and once more at [`ESCALATED_SAMPLES`] when its
/// verdict lies within [`ESCALATE_SE`] standard errors of the boundary.
fn escalate<R>(n: usize, f: impl Fn(usize, u64) -> Result<(R, bool)>) -> Result<(R, usize, bool)> {
    let (r, near) = f(n, 0)?;
    if near && n < ESCALATED_SAMPLES {
        let (r, _) = f(ESCALATED_SAMPLES, PART_ESCALATE)?;
        return Ok((r, ESCALATED_SAMPLES, true));
    }
    Ok((r, n, false))
}

/// One shift of the Kanter-type bound check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KanterShift {
    pub y: Vec<f64>,
    pub points: Vec<McPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KanterReport {
    pub alpha: f64,
    pub anchor: &'static str,
    pub certification: &'static str,
    pub set_mass: f64,
    pub set_mass_ci: (f64, f64),
    pub kappa_grid: Vec<f64>,
    pub shifts: Vec<KanterShift>,
    pub samples: usize,
    pub escalated: bool,
    pub seed: u64,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
}

/// Shifts `0`, a point inside the set and a point outside it, along the
/// first coordinate.
pub fn default_shifts(set: &ConvexSet, d: usize) -> Vec<Vec<f64>> {
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let g = set.gauge(&e1);
    let edge = if g > 0.0 { 1.0 / g } else { 1.0 };
    let along = |c: f64| {
        let mut y = vec![0.0; d];
        y[0] = c * edge;
        y
    };
    vec![vec![0.0; d], along(0.5), along(3.0)]
}

/// `ν(κB + y) ≤ (3/2) κ^{α/2} / √(1 - ν(B))` over `κ` and shifts `y`.
///
/// The bound is evaluated at the upper 0.999 Wilson limit of `ν̂(B)`.
pub fn kanter_bound_check(
    law: &VectorLaw,
    set: &ConvexSet,
    shifts: &[Vec<f64>],
    kappa_grid: &[f64],
    n: usize,
) -> Result<KanterReport> {
    prepare(law, set, n)?;
    check_radii(kappa_grid)?;
    if shifts.iter().any(|y| y.len() != law.dimension) {
        return Err(Error::Domain("every shift must have the law's dimension".into()));
    }
    let alpha = law.alpha();
    let run = |n: usize, esc: u64| -> Result<(KanterReport, bool)> {
        let base = sorted(law.gauges(set, &vec![0.0; law.dimension], PART_KANTER + esc, n));
        let mass_count = count_le(&base, 1.0);
        let set_mass = mass_count as f64 / n as f64;
        let set_mass_ci = wilson_interval(mass_count, n as u64, Z999);
        if set_mass_ci.1 >= 1.0 {
            return Err(Error::Domain(format!("nu(B) is not below 1 with margin: estimate {set_mass}")));
        }
        let denom = (1.0 - set_mass_ci.1).sqrt();
        let mut near = false;
        let mut out = Vec::new();
        for (j, y) in shifts.iter().enumerate() {
            let g = sorted(law.gauges(set, y, PART_KANTER + 1 + j as u64 + esc, n));
            let est = SmallBallEstimate::from_gauges(&g, kappa_grid, law.seed);
            let points: Vec<McPoint> = kappa_grid
                .iter()
                .enumerate()
                .map(|(i, &k)| McPoint::new(k, est.estimates[i], 1.5 * k.powf(alpha / 2.0) / denom, est.stderr(i)))
                .collect();
            near |= points.iter().any(McPoint::near_boundary);
            out.push(KanterShift { y: y.clone(), points });
        }
        let verdict = verdict_of(out.iter().flat_map(|s| &s.points));
        let witnesses = out
            .iter()
            .flat_map(|s| s.points.iter().filter(|p| !p.holds).map(|p| p.witness("kappa")))
            .take(8)
            .collect();
        Ok((
            KanterReport {
                alpha,
                anchor: "nu(kappa B + y) <= (3/2) kappa^(alpha/2) / sqrt(1 - nu(B))",
                certification: CERTIFICATION,
                set_mass,
                set_mass_ci,
                kappa_grid: kappa_grid.to_vec(),
                shifts: out,
                samples: n,
                escalated: false,
                seed: law.seed,
                verdict,
                witnesses,
            },
            near,
        ))
    };
    let (mut r, samples, escalated) = escalate(n, run)?;
    r.samples = samples;
    r.escalated = escalated;
    Ok(r)
}

/// Set rescaled so that its estimated mass is a target level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rescaled {
    pub set: ConvexSet,
    pub factor: f64,
    pub target: f64,
}

/// Dilate `set` by the empirical `target`-quantile of its gauge, making
/// `ν(set) ≈ target`.
pub fn rescale_to_mass(law: &VectorLaw, set: &ConvexSet, target: f64, n: usize) -> Result<Rescaled> {
    prepare(law, set, n)?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::RescaleFailed(format!("target mass must lie in (0, 1), got {target}")));
    }
    let mut g = law.gauges(set, &vec![0.0; law.dimension], PART_RESCALE, n);
    let k = ((target * n as f64).ceil() as usize).clamp(1, n) - 1;
    let (_, &mut factor, _) = g.select_nth_unstable_by(k, f64::total_cmp);
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::RescaleFailed(format!("gauge quantile {factor} cannot rescale the set")));
    }
    Ok(Rescaled {
        set: set.scaled(factor),
        factor,
        target,
    })
}

/// Rescale when the target is given, then require `ν̂(set) ≤ b`.
fn set_under_b(
    law: &VectorLaw,
    set: &ConvexSet,
    b: f64,
    target: Option<f64>,
    n: usize,
) -> Result<(ConvexSet, Option<Rescaled>)> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!("b must lie in (0, 1), got {b}")));
    }
    let rescaled = match target {
        Some(t) => {
            if t > b {
                return Err(Error::RescaleFailed(format!("target mass {t} exceeds b = {b}")));
            }
            Some(rescale_to_mass(law, set, t, n)?)
        }
        None => None,
    };
    let set = rescaled.as_ref().map_or_else(|| set.clone(), |r| r.set.clone());
    Ok((set, rescaled))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub alpha: f64,
    pub anchor: &'static str,
    pub certification: &'static str,
    pub b: f64,
    /// `R(b) = 3 b^{-1} (1-b)^{-1/2}`.
    pub r_b: f64,
    /// `R' = 3 ν(B/2)^{-1} (1-ν(B/2))^{-1/2}`, reported.
    pub r_prime: f64,
    pub rescaled: Option<Rescaled>,
    pub set_mass: f64,
    pub set_mass_ci: (f64, f64),
    pub points: Vec<McPoint>,
    /// Least-squares slope of `ln ν̂(tB)` against `ln t`.
    pub fitted_exponent: Option<f64>,
    pub proven_exponent: f64,
    pub conjectured_exponent: f64,
    pub samples: usize,
    pub escalated: bool,
    pub seed: u64,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

/// Least-squares slope of `ln p` on `ln t` over points with at least 30
/// hits and `t < 1`.
fn fit_exponent(est: &SmallBallEstimate) -> Option<f64> {
    let pts: Vec<(f64, f64)> = est
        .radii
        .iter()
        .zip(&est.counts)
        .zip(&est.estimates)
        .filter(|((&t, &c), _)| c >= 30 && t < 1.0)
        .map(|((&t, _), &p)| (t.ln(), p.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Default radius grid: 20 log-spaced points in `[0.01, 1]`.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(0.01, 1.0, 20)
}

/// `ν(tB) ≤ R(b) t^{α/2} ν(B)` for `t` in the grid, with the set first
/// dilated to mass `target` when given.
pub fn regularity_check(
    law: &VectorLaw,
    set: &ConvexSet,
    b: f64,
    target: Option<f64>,
    t_grid: &[f64],
    n: usize,
) -> Result<RegularityReport> {
    prepare(law, set, n)?;
    check_radii(t_grid)?;
    if t_grid.iter().any(|&t| t <= 0.0 || t > 1.0) {
        return Err(Error::Domain("radii must lie in (0, 1]".into()));
    }
    let (set, rescaled) = set_under_b(law, set, b, target, n)?;
    let alpha = law.alpha();
    let r_b = regularity_constant(b);
    let run = |n: usize, esc: u64| -> Result<(RegularityReport, bool)> {
        let g = sorted(law.gauges(&set, &vec![0.0; law.dimension], PART_SMALL_BALL + esc, n));
        let mass_count = count_le(&g, 1.0);
        let p1 = mass_count as f64 / n as f64;
        let ci = wilson_interval(mass_count, n as u64, Z999);
        if ci.0 > b {
            return Err(Error::RescaleFailed(format!("nu(B) = {p1} cannot be brought under b = {b}")));
        }
        let est = SmallBallEstimate::from_gauges(&g, t_grid, law.seed);
        let points: Vec<McPoint> = t_grid
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let c = r_b * t.powf(alpha / 2.0);
                McPoint::new(t, est.estimates[i], c * p1, nested_stderr(est.estimates[i], p1, c, n))
            })
            .collect();
        let half = count_le(&g, 0.5) as f64 / n as f64;
        let r_prime = 3.0 / (half * (1.0 - half).sqrt());
        let mut notes = Vec::new();
        let mut verdict = verdict_of(&points);
        if p1 < MIN_SET_MASS {
            notes.push(format!("nu(B) = {p1} is below {MIN_SET_MASS}; the bound degenerates"));
            if verdict == Verdict::Holds {
                verdict = Verdict::Inconclusive;
            }
        }
        let near = points.iter().any(McPoint::near_boundary);
        let witnesses = points.iter().filter(|p| !p.holds).map(|p| p.witness("t")).take(8).collect();
        Ok((
            RegularityReport {
                alpha,
                anchor: "nu(tB) <= R(b) t^(alpha/2) nu(B) whenever nu(B) <= b",
                certification: CERTIFICATION,
                b,
                r_b,
                r_prime,
                rescaled: rescaled.clone(),
                set_mass: p1,
                set_mass_ci: ci,
                fitted_exponent: fit_exponent(&est),
                proven_exponent: alpha / 2.0,
                conjectured_exponent: 1.0,
                points,
                samples: n,
                escalated: false,
                seed: law.seed,
                verdict,
                witnesses,
                notes,
            },
            near,
        ))
    };
    let (mut r, samples, escalated) = escalate(n, run)?;
    r.samples = samples;
    r.escalated = escalated;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub anchor: &'static str,
    pub certification: &'static str,
    pub alpha_scale: f64,
    /// `μ(α ∩ A_i)`.
    pub lhs: f64,
    /// `∏ μ(A_i)`.
    pub rhs: f64,
    pub set_masses: Vec<f64>,
    pub stderr: f64,
    /// Whether a proven case applies (one set, at most one non-slab, or
    /// `d ≤ 2`); otherwise the verdict is exploratory.
    pub asserted: bool,
    pub samples: usize,
    pub escalated: bool,
    pub seed: u64,
    pub verdict: Verdict,
}

/// `μ(α·∩A_i) ≥ ∏ μ(A_i)` for a Gaussian law, both sides from shared
/// samples.
pub fn correlation_check(law: &VectorLaw, sets: &[ConvexSet], alpha_scale: f64, n: usize) -> Result<CorrelationReport> {
    if !law.is_gaussian() {
        return Err(Error::Domain("correlation_check needs a Gaussian law".into()));
    }
    if sets.is_empty() || sets.len() > 8 {
        return Err(Error::Domain(format!("need 1 to 8 sets, got {}", sets.len())));
    }
    if !(alpha_scale >= 1.0) {
        return Err(Error::Domain(format!("alpha_scale must be >= 1, got {alpha_scale}")));
    }
    for s in sets {
        prepare(law, s, n)?;
    }
    let l = sets.len();
    let non_slabs = sets.iter().filter(|s| !s.is_slab()).count();
    let asserted = l == 1 || non_slabs <= 1 || law.dimension <= 2;
    let d = law.dimension;
    let run = |n: usize, esc: u64| -> Result<(CorrelationReport, bool)> {
        // joint membership patterns: bit i for A_i, bit l for α·∩A_i
        let per_batch = law.batches(PART_CORRELATION + esc, n, |draw, count| {
            let mut counts = vec![0u64; 1 << (l + 1)];
            let mut x = vec![0.0; d];
            for _ in 0..count {
                draw(&mut x);
                let mut bits = 0usize;
                let mut worst = 0.0f64;
                for (i, s) in sets.iter().enumerate() {
                    let g = s.gauge(&x);
                    worst = worst.max(g);
                    if g <= 1.0 {
                        bits |= 1 << i;
                    }
                }
                if worst <= alpha_scale {
                    bits |= 1 << l;
                }
                counts[bits] += 1;
            }
            counts
        });
        let mut counts = vec![0u64; 1 << (l + 1)];
        for c in &per_batch {
            for (a, b) in counts.iter_mut().zip(c) {
                *a += b;
            }
        }
        let nf = n as f64;
        let prob = |bit: usize| counts.iter().enumerate().filter(|(k, _)| k & (1 << bit) != 0).map(|(_, &c)| c).sum::<u64>() as f64 / nf;
        let masses: Vec<f64> = (0..l).map(prob).collect();
        let lhs = prob(l);
        let rhs: f64 = masses.iter().product();
        // influence function of lhs - ∏ p_i
        let weights: Vec<f64> = (0..l)
            .map(|i| masses.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| p).product())
            .collect();
        let value = |k: usize| {
            let mut v = if k & (1 << l) != 0 { 1.0 } else { 0.0 };
            for (i, w) in weights.iter().enumerate() {
                if k & (1 << i) != 0 {
                    v -= w;
                }
            }
            v
        };
        let mean: f64 = counts.iter().enumerate().map(|(k, &c)| c as f64 * value(k)).sum::<f64>() / nf;
        let var: f64 = counts.iter().enumerate().map(|(k, &c)| c as f64 * (value(k) - mean).powi(2)).sum::<f64>() / nf;
        let stderr = (var / nf).sqrt();
        let point = McPoint::new(alpha_scale, rhs, lhs, stderr);
        let verdict = if point.holds { Verdict::Holds } else { Verdict::Fails };
        Ok((
            CorrelationReport {
                anchor: "mu(alpha * intersection A_i) >= prod mu(A_i)",
                certification: CERTIFICATION,
                alpha_scale,
                lhs,
                rhs,
                set_masses: masses,
                stderr,
                asserted,
                samples: n,
                escalated: false,
                seed: law.seed,
                verdict,
            },
            point.near_boundary(),
        ))
    };
    let (mut r, samples, escalated) = escalate(n, run)?;
    r.samples = samples;
    r.escalated = escalated;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlepianReport {
    pub anchor: &'static str,
    pub certification: &'static str,
    pub sets: usize,
    /// `E max_l ‖G‖_l`.
    pub lhs: f64,
    /// `E max_l ‖G_l‖_l`.
    pub rhs: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub samples: usize,
    pub escalated: bool,
    pub seed: u64,
    pub verdict: Verdict,
}

fn max_gauges(sets: &[ConvexSet], draw: &mut dyn FnMut(&mut [f64]), x: &mut [f64], shared: bool) -> f64 {
    if shared {
        draw(x);
    }
    let mut m = 0.0f64;
    for s in sets {
        if !shared {
            draw(x);
        }
        m = m.max(s.gauge(x));
    }
    m
}

fn merged(parts: &[MeanVar]) -> MeanVar {
    let mut acc = MeanVar::default();
    for p in parts {
        acc.merge(p);
    }
    acc
}

fn check_norm_sets(law: &VectorLaw, sets: &[ConvexSet], max: usize) -> Result<()> {
    if !law.is_gaussian() {
        return Err(Error::Domain("needs a Gaussian law".into()));
    }
    if sets.is_empty() || sets.len() > max {
        return Err(Error::Domain(format!("need 1 to {max} norms, got {}", sets.len())));
    }
    for s in sets {
        s.validate(law.dimension)?;
    }
    Ok(())
}

/// `E max_l ‖G‖_l ≤ √2 · E max_l ‖G_l‖_l` with independent copies `G_l`.
pub fn slepian_sqrt2_check(law: &VectorLaw, sets: &[ConvexSet], n: usize) -> Result<SlepianReport> {
    check_norm_sets(law, sets, 16)?;
    let d = law.dimension;
    let run = |n: usize, esc: u64| -> Result<(SlepianReport, bool)> {
        let per_batch = law.batches(PART_SLEPIAN + esc, n, |draw, count| {
            let mut x = vec![0.0; d];
            let (mut y, mut xs) = (MeanVar::default(), MeanVar::default());
            for _ in 0..count {
                y.push(max_gauges(sets, draw, &mut x, true));
                xs.push(max_gauges(sets, draw, &mut x, false));
            }
            (y, xs)
        });
        let y = merged(&per_batch.iter().map(|p| p.0).collect::<Vec<_>>());
        let x = merged(&per_batch.iter().map(|p| p.1).collect::<Vec<_>>());
        let stderr = (y.stderr().powi(2) + 2.0 * x.stderr().powi(2)).sqrt();
        let point = McPoint::new(0.0, y.mean, std::f64::consts::SQRT_2 * x.mean, stderr);
        Ok((
            SlepianReport {
                anchor: "E max_l ||G||_l <= sqrt(2) E max_l ||G_l||_l",
                certification: CERTIFICATION,
                sets: sets.len(),
                lhs: y.mean,
                rhs: x.mean,
                ratio: y.mean / x.mean,
                stderr,
                samples: n,
                escalated: false,
                seed: law.seed,
                verdict: if point.holds { Verdict::Holds } else { Verdict::Fails },
            },
            point.near_boundary(),
        ))
    };
    let (mut r, samples, escalated) = escalate(n, run)?;
    r.samples = samples;
    r.escalated = escalated;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisRow {
    pub n: u64,
    pub replicates: usize,
    /// `‖m_n(Y)‖_q`.
    pub y_norm: f64,
    /// `‖m_n(X)‖_q`.
    pub x_norm: f64,
    pub ratio: f64,
    pub ratio_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub anchor: &'static str,
    pub certification: &'static str,
    pub q: f64,
    pub sets: usize,
    pub rows: Vec<HypothesisRow>,
    pub sup_ratio: f64,
    pub argmax_n: u64,
    pub base_draws: usize,
    pub seed: u64,
    /// Always reported, never asserted.
    pub asserted: bool,
}

/// Ratio profile `‖m_n(Y)‖_q / ‖m_n(X)‖_q` for `Y = max_l ‖G‖_l` and
/// `X = max_l ‖G_l‖_l`, from tournament minima over `replicates·n_max`
/// draws. `n_grid` must be powers of two up to [`mc::BATCH`].
pub fn min_moment_hypothesis(
    law: &VectorLaw,
    sets: &[ConvexSet],
    n_grid: &[u64],
    q: f64,
    replicates: usize,
) -> Result<HypothesisReport> {
    check_norm_sets(law, sets, 16)?;
    if !(q > 0.0) || replicates < 2 {
        return Err(Error::Domain("need q > 0 and at least 2 replicates".into()));
    }
    if n_grid.is_empty() || n_grid.iter().any(|&n| !n.is_power_of_two() || n as usize > mc::BATCH) {
        return Err(Error::Domain(format!("n_grid must be powers of two up to {}", mc::BATCH)));
    }
    let n_max = *n_grid.iter().max().expect("nonempty");
    let levels = n_max.trailing_zeros() as usize + 1;
    let base = replicates * n_max as usize;
    let d = law.dimension;
    // batch sizes are multiples of n_max, so tournaments never cross batches
    let per_batch = law.batches(PART_HYPOTHESIS, base, |draw, count| {
        let mut x = vec![0.0; d];
        let mut ys: Vec<f64> = Vec::with_capacity(count);
        let mut xs: Vec<f64> = Vec::with_capacity(count);
        for _ in 0..count {
            ys.push(max_gauges(sets, draw, &mut x, true));
            xs.push(max_gauges(sets, draw, &mut x, false));
        }
        let mut acc = vec![(MeanVar::default(), MeanVar::default()); levels];
        for lvl in acc.iter_mut() {
            for (a, b) in ys.iter().zip(&xs) {
                lvl.0.push(a.powf(q));
                lvl.1.push(b.powf(q));
            }
            ys = ys.chunks(2).map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect();
            xs = xs.chunks(2).map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect();
        }
        acc
    });
    let mut rows = Vec::new();
    for &n in n_grid {
        let k = n.trailing_zeros() as usize;
        let y = merged(&per_batch.iter().map(|b| b[k].0).collect::<Vec<_>>());
        let x = merged(&per_batch.iter().map(|b| b[k].1).collect::<Vec<_>>());
        let ratio = (y.mean / x.mean).powf(1.0 / q);
        let rel = ((y.stderr() / y.mean).powi(2) + (x.stderr() / x.mean).powi(2)).sqrt() / q;
        rows.push(HypothesisRow {
            n,
            replicates: y.count as usize,
            y_norm: y.mean.powf(1.0 / q),
            x_norm: x.mean.powf(1.0 / q),
            ratio,
            ratio_stderr: ratio * rel,
        });
    }
    let (argmax_n, sup_ratio) = rows
        .iter()
        .fold((rows[0].n, rows[0].ratio), |b, r| if r.ratio > b.1 { (r.n, r.ratio) } else { b });
    Ok(HypothesisReport {
        anchor: "||m_n(Y)||_q <= C ||m_n(X)||_q",
        certification: CERTIFICATION,
        q,
        sets: sets.len(),
        rows,
        sup_ratio,
        argmax_n,
        base_draws: base,
        seed: law.seed,
        asserted: false,
    })
}

/// `∫_0^t F(s) ds / (t F(t))` for the empirical CDF of sorted gauges;
/// `None` when `F(t) = 0`.
pub fn integral_ratio(sorted: &[f64], t: f64) -> Option<f64> {
    let k = count_le(sorted, t) as usize;
    if k == 0 || t <= 0.0 {
        return None;
    }
    // ∫_0^t F̂ = mean of (t - g)^+
    let integral: f64 = sorted[..k].iter().map(|g| t - g).sum::<f64>() / sorted.len() as f64;
    Some(integral / (t * k as f64 / sorted.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralReport {
    pub anchor: &'static str,
    pub certification: &'static str,
    pub b: f64,
    pub rescaled: Option<Rescaled>,
    pub set_mass: f64,
    /// `(t, ∫_0^t μ(sB)ds / (t μ(tB)))` on the grid.
    pub ratios: Vec<(f64, f64)>,
    /// `r = max` of the ratios.
    pub r_fitted: f64,
    /// `(δ, R, β)` from `r`.
    pub delta: f64,
    pub r_const: f64,
    pub beta: f64,
    /// `μ(δtB) ≤ r^{1/2} μ(tB)` on the grid.
    pub halving: Vec<McPoint>,
    /// `μ(tB) ≤ R t^β μ(B)` on the grid.
    pub power: Vec<McPoint>,
    pub samples: usize,
    pub seed: u64,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

/// Fit `r` in `∫_0^t μ(sB)ds ≤ r t μ(tB)` over `t` in the grid, derive
/// `(δ, R, β)` and cross-check `μ(tB) ≤ R t^β μ(B)`.
pub fn integral_equivalence(
    law: &VectorLaw,
    set: &ConvexSet,
    b: f64,
    target: Option<f64>,
    t_grid: &[f64],
    n: usize,
) -> Result<IntegralReport> {
    prepare(law, set, n)?;
    check_radii(t_grid)?;
    if t_grid.iter().any(|&t| t <= 0.0 || t > 1.0) {
        return Err(Error::Domain("radii must lie in (0, 1]".into()));
    }
    let (set, rescaled) = set_under_b(law, set, b, target, n)?;
    let g = sorted(law.gauges(&set, &vec![0.0; law.dimension], PART_INTEGRAL, n));
    integral_from_gauges(&g, b, rescaled, t_grid, law.seed)
}

/// [`integral_equivalence`] on a given sorted gauge sample.
pub fn integral_from_gauges(
    g: &[f64],
    b: f64,
    rescaled: Option<Rescaled>,
    t_grid: &[f64],
    seed: u64,
) -> Result<IntegralReport> {
    let n = g.len();
    let mass = |t: f64| count_le(g, t) as f64 / n as f64;
    let p1 = mass(1.0);
    let mut notes = Vec::new();
    if p1 > b {
        notes.push(format!("nu(B) = {p1} exceeds b = {b}"));
    }
    let ratios: Vec<(f64, f64)> = t_grid.iter().filter_map(|&t| integral_ratio(g, t).map(|r| (t, r))).collect();
    let r_fitted = ratios.iter().map(|p| p.1).fold(0.0, f64::max);
    if !(r_fitted > 0.0 && r_fitted < 1.0) {
        return Err(Error::Domain(format!("fitted r = {r_fitted} is not in (0, 1)")));
    }
    let (delta, r_const, beta) = integral_constants(r_fitted)?;
    let half = r_fitted.sqrt();
    let halving: Vec<McPoint> = t_grid
        .iter()
        .map(|&t| {
            let (lo, hi) = (mass(delta * t), mass(t));
            McPoint::new(t, lo, half * hi, nested_stderr(lo, hi, half, n))
        })
        .collect();
    let power: Vec<McPoint> = t_grid
        .iter()
        .map(|&t| {
            let c = r_const * t.powf(beta);
            let pt = mass(t);
            McPoint::new(t, pt, c * p1, nested_stderr(pt, p1, c, n))
        })
        .collect();
    let verdict = verdict_of(halving.iter().chain(&power));
    let witnesses = halving
        .iter()
        .chain(&power)
        .filter(|p| !p.holds)
        .map(|p| p.witness("t"))
        .take(8)
        .collect();
    Ok(IntegralReport {
        anchor: "int_0^t mu(sB) ds <= r t mu(tB)  =>  mu(tB) <= R t^beta mu(B)",
        certification: CERTIFICATION,
        b,
        rescaled,
        set_mass: p1,
        ratios,
        r_fitted,
        delta,
        r_const,
        beta,
        halving,
        power,
        samples: n,
        seed,
        verdict,
        witnesses,
        notes,
    })
}

/// Random ellipsoid `{x'Qx ≤ 1}` with `Q = AA' + I/10`, `A` standard
/// Gaussian.
pub fn random_ellipsoid<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ConvexSet {
    let a: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
    let mut q = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            q[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum::<f64>() / d as f64;
        }
        q[i * d + i] += 0.1;
    }
    ConvexSet::Ellipsoid { q }
}

/// Row-major 2 × 2 correlation matrix with off-diagonal `rho`.
pub fn correlated_2d(rho: f64) -> Vec<f64> {
    vec![1.0, rho, rho, 1.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::normal_cdf;
    use rand::SeedableRng;

    fn gauss(d: usize, seed: u64) -> VectorLaw {
        VectorLaw::gaussian(d, identity(d), seed).unwrap()
    }

    #[test]
    fn cholesky_psd_and_errors() {
        let l = cholesky(&[4.0, 2.0, 2.0, 2.0], 2).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-15 && (l[2] - 1.0).abs() < 1e-15 && (l[3] - 1.0).abs() < 1e-15);
        // rank one is allowed
        assert!(cholesky(&[1.0, 1.0, 1.0, 1.0], 2).is_ok());
        assert!(matches!(
            VectorLaw::gaussian(2, vec![1.0, 2.0, 2.0, 1.0], 0),
            Err(Error::CovarianceNotPsd { .. })
        ));
        assert!(VectorLaw::gaussian(65, identity(65), 0).is_err());
    }

    #[test]
    fn alpha_two_collapses_to_gaussian() {
        let s = VectorLaw::stable_subgaussian(2.0, 2, identity(2), 3).unwrap();
        assert!(s.is_gaussian());
        assert_eq!(s, gauss(2, 3));
        let i = VectorLaw::stable_indep(2.0, vec![1.0, 1.0], 3).unwrap();
        assert!(i.is_gaussian());
        assert_eq!(i.cov, vec![2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn gaussian_mean_and_cauchy_quartiles() {
        let n = 1_000_000;
        let m = sample(&gauss(1, 5), n, 0).unwrap();
        let mean = m.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());

        let c = VectorLaw::stable_indep(1.0, vec![1.0, 1.0], 9).unwrap();
        let m = sample(&c, 200_000, 0).unwrap();
        let first: Vec<f64> = m.chunks(2).map(|r| r[0]).collect();
        let above = first.iter().filter(|v| v.abs() > 1.0).count() as f64 / first.len() as f64;
        let se = (0.25 / first.len() as f64).sqrt();
        assert!((above - 0.5).abs() < 4.0 * se, "{above}");
        let mut s = first.clone();
        s.sort_by(f64::total_cmp);
        assert!(s[s.len() / 2].abs() < 0.02);
    }

    #[test]
    fn sampling_is_thread_independent() {
        let law = VectorLaw::stable_subgaussian(1.3, 3, identity(3), 17).unwrap();
        let a = sample(&law, 40_000, 2).unwrap();
        let b = crate::par::sequential(|| sample(&law, 40_000, 2).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn gauges_and_set_checks() {
        let sets = [
            ConvexSet::euclidean_ball(1.5),
            ConvexSet::cube(0.7),
            ConvexSet::Lpball { p_norm: 3.0, radius: 2.0 },
            ConvexSet::Lpball { p_norm: 1.0, radius: 1.0 },
            ConvexSet::coordinate_slab(3, 1, 0.5),
            ConvexSet::Ellipsoid {
                q: vec![2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5],
            },
            ConvexSet::Intersection {
                sets: vec![ConvexSet::coordinate_slab(3, 0, 1.0), ConvexSet::euclidean_ball(2.0)],
            },
        ];
        for s in &sets {
            let c = check_set(s, 3, 10_000, 1).unwrap();
            assert!(c.ok(), "{s:?}: {c:?}");
            let x = [0.3, -0.4, 1.1];
            assert!((s.scaled(2.0).gauge(&x) - s.gauge(&x) / 2.0).abs() < 1e-12);
        }
        assert!(ConvexSet::Lpball {
            p_norm: 2.0,
            radius: f64::INFINITY
        }
        .validate(2)
        .is_err());
        let json = r#"{"kind": "lpball", "p_norm": "inf", "radius": 1}"#;
        let s: ConvexSet = serde_json::from_str(json).unwrap();
        assert_eq!(s, ConvexSet::cube(1.0));
        assert!(serde_json::to_string(&s).unwrap().contains("\"inf\""));
    }

    #[test]
    fn small_ball_chi_square() {
        let law = gauss(2, 11);
        let radii = [0.0, 0.25, 0.5, 1.0, 2.0];
        let est = small_ball(&law, &ConvexSet::euclidean_ball(1.0), &[0.0, 0.0], &radii, 1_000_000).unwrap();
        assert_eq!(est.estimates[0], 0.0);
        for (i, &t) in radii.iter().enumerate().skip(1) {
            let exact = 1.0 - (-t * t / 2.0f64).exp();
            let (lo, hi) = est.ci[i];
            assert!(lo <= exact && exact <= hi, "t = {t}: {exact} not in ({lo}, {hi})");
        }
        let big = small_ball(&law, &ConvexSet::euclidean_ball(1e6), &[0.0, 0.0], &[1.0], 10_000).unwrap();
        assert_eq!(big.estimates[0], 1.0);
    }

    #[test]
    fn kanter_gaussian_example() {
        let law = gauss(2, 21);
        let ball = ConvexSet::euclidean_ball(1.0);
        let shifts = default_shifts(&ball, 2);
        let r = kanter_bound_check(&law, &ball, &shifts, &[0.05, 0.25, 0.5, 1.0], 200_000).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        let p = &r.shifts[0].points[2];
        assert!((p.lhs - (1.0 - (-0.125f64).exp())).abs() < 0.003);
        assert!((p.rhs - 0.963).abs() < 0.01, "{}", p.rhs);
        // the far shift sees almost nothing
        assert!(r.shifts[2].points[0].lhs < 1e-3);
    }

    #[test]
    fn regularity_constant_and_one_dim_normal() {
        assert!((regularity_constant(0.5) - 6.0 * 2f64.sqrt()).abs() < 1e-12);
        let law = gauss(1, 4);
        // ν([-a, a]) = 1/2 at a = Φ^{-1}(3/4)
        let a = 0.674_489_750_196_081_7;
        assert!((2.0 * normal_cdf(a) - 1.0 - 0.5).abs() < 1e-9);
        let slab = ConvexSet::Slab { u: vec![1.0], width: a };
        let r = regularity_check(&law, &slab, 0.5, None, &default_t_grid(), 1_000_000).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{:?}", r.witnesses);
        assert!((r.set_mass - 0.5).abs() < 0.003);
        // ν(tB) ≈ t·2aφ(0)... in one dimension the exponent is 1
        assert!((r.fitted_exponent.unwrap() - 1.0).abs() < 0.05);
        let last = r.points.last().unwrap();
        assert_eq!(last.at, 1.0);
        assert!(last.holds);
    }

    #[test]
    fn rescale_hits_target() {
        let law = VectorLaw::stable_subgaussian(1.0, 2, identity(2), 8).unwrap();
        let rs = rescale_to_mass(&law, &ConvexSet::euclidean_ball(1.0), 0.4, 200_000).unwrap();
        let est = small_ball(&law, &rs.set, &[0.0, 0.0], &[1.0], 200_000).unwrap();
        assert!((est.estimates[0] - 0.4).abs() < 0.01);
        assert!(matches!(
            regularity_check(&law, &ConvexSet::euclidean_ball(1.0), 0.5, Some(0.6), &[1.0], 1000),
            Err(Error::RescaleFailed(_))
        ));
    }

    #[test]
    fn correlation_product_and_single() {
        let law = gauss(2, 2);
        let slabs = [ConvexSet::coordinate_slab(2, 0, 1.0), ConvexSet::coordinate_slab(2, 1, 1.0)];
        let r = correlation_check(&law, &slabs, 1.0, 1_000_000).unwrap();
        let exact = (2.0 * normal_cdf(1.0) - 1.0).powi(2);
        assert!((r.lhs - exact).abs() < 4.0 * r.stderr.max(5e-4));
        assert!(r.asserted);
        assert_eq!(r.verdict, Verdict::Holds);
        let one = correlation_check(&law, &slabs[..1], 1.5, 100_000).unwrap();
        assert!(one.lhs >= one.rhs);
        assert!(correlation_check(&VectorLaw::stable_indep(1.0, vec![1.0, 1.0], 0).unwrap(), &slabs, 1.0, 10).is_err());
    }

    #[test]
    fn slepian_trivial_cases() {
        let law = gauss(3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = random_ellipsoid(3, &mut rng);
        let single = slepian_sqrt2_check(&law, std::slice::from_ref(&e), 200_000).unwrap();
        assert!((single.ratio - 1.0).abs() < 0.02);
        assert_eq!(single.verdict, Verdict::Holds);
        let same = slepian_sqrt2_check(&law, &[e.clone(), e.clone(), e], 200_000).unwrap();
        assert!(same.ratio < 1.0);
    }

    #[test]
    fn hypothesis_single_norm_ratio_one() {
        let law = gauss(2, 12);
        let grid: Vec<u64> = (0..=6).map(|k| 1 << k).collect();
        let r = min_moment_hypothesis(&law, &[ConvexSet::euclidean_ball(1.0)], &grid, 2.0, 4096).unwrap();
        assert!(!r.asserted);
        for row in &r.rows {
            assert!((row.ratio - 1.0).abs() < 5.0 * row.ratio_stderr.max(1e-3), "{row:?}");
        }
        assert_eq!(r.rows[6].replicates, 4096);
        assert!(min_moment_hypothesis(&law, &[ConvexSet::euclidean_ball(1.0)], &[3], 2.0, 10).is_err());
    }

    #[test]
    fn integral_constants_and_linear_law() {
        let (delta, r, beta) = integral_constants(0.25).unwrap();
        assert!((delta - 0.5).abs() < 1e-12 && (r - 2.0).abs() < 1e-12 && (beta - 1.0).abs() < 1e-12);
        // gauges uniform on [0, 2]: μ(sB) = s/2 is linear, ratio 1/2
        let n = 100_000;
        let g: Vec<f64> = (0..n).map(|i| 2.0 * (i as f64 + 0.5) / n as f64).collect();
        for t in [0.1, 0.5, 1.0] {
            assert!((integral_ratio(&g, t).unwrap() - 0.5).abs() < 1e-3);
        }
        let rep = integral_from_gauges(&g, 0.5, None, &default_t_grid(), 0).unwrap();
        assert!((rep.r_fitted - 0.5).abs() < 1e-3);
        assert_eq!(rep.verdict, Verdict::Holds);
    }

    #[test]
    fn integral_gaussian_small_t() {
        let law = gauss(1, 13);
        let slab = ConvexSet::Slab { u: vec![1.0], width: 1.0 };
        let rep = integral_equivalence(&law, &slab, 0.7, None, &[0.05, 0.5, 1.0], 1_000_000).unwrap();
        assert!((rep.ratios[0].1 - 0.5).abs() < 0.01, "{:?}", rep.ratios);
        assert_eq!(rep.verdict, Verdict::Holds);
    }

    #[test]
    fn anderson_shift_decreases_mass() {
        let law = VectorLaw::gaussian(2, correlated_2d(0.5), 31).unwrap();
        let set = ConvexSet::Intersection {
            sets: vec![ConvexSet::coordinate_slab(2, 0, 1.0), ConvexSet::cube(1.5)],
        };
        let n = 200_000;
        let base = small_ball(&law, &set, &[0.0, 0.0], &[1.0], n).unwrap();
        for y in [[0.3, 0.0], [0.5, -0.5], [1.0, 1.0]] {
            let s = small_ball(&law, &set, &y, &[1.0], n).unwrap();
            assert!(s.estimates[0] <= base.estimates[0] + 4.0 * (s.stderr(0) + base.stderr(0)));
        }
    }
}
