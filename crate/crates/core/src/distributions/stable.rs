//! Stable variates (Chambers–Mallows–Stuck) and the empirical CDF table for
//! the modulus of a symmetric stable scalar.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::mc;

/// Symmetric α-stable variate with characteristic function `exp(-|u|^α)`.
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    if alpha == 1.0 {
        return v.tan();
    }
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Positive stable variate of index `a ∈ (0, 1]` with Laplace transform
/// `E exp(-s A) = exp(-s^a)`; `a = 1` is the point mass at 1.
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    // U in (0, π): avoid the endpoints where sin(U) = 0
    let u = PI * (1.0 - rng.random::<f64>());
    let u = u.clamp(f64::MIN_POSITIVE, PI - 1e-300);
    let e: f64 = Exp1.sample(rng);
    let head = (a * u).sin() / u.sin().powf(1.0 / a);
    let tail = (((1.0 - a) * u).sin() / e).powf((1.0 - a) / a);
    head * tail
}

/// Samples used to build each table.
pub const TABLE_SAMPLES: usize = 10_000_000;
/// Interpolation knots at `u = i / TABLE_RESOLUTION`.
pub const TABLE_RESOLUTION: usize = 100_000;
/// Declared absolute accuracy of the tabulated CDF.
pub const TABLE_ACCURACY: f64 = 2e-3;
const TABLE_SEED: u64 = 0x5eed_57ab_1e00_0001;

/// Monotone piecewise-linear CDF of `|S|` on `[0, knots.last()]` with a
/// power-law tail `P(|S| > t) = (1/RES)·(t/t_last)^{-α}` beyond.
#[derive(Debug)]
pub struct StableTable {
    pub alpha: f64,
    knots: Vec<f64>,
    sums: Mutex<HashMap<u64, Arc<PowerSums>>>,
}

/// Cumulative segment means of `u^r`: `lower[i]` sums segments `0..i`,
/// `upper[i]` sums segments `i..`, each in units of `1/RES` mass.
#[derive(Debug)]
struct PowerSums {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// `(1/(b-a)) ∫_a^b u^r du` for `0 <= a <= b`.
fn segment_mean(a: f64, b: f64, r: f64) -> f64 {
    if b <= a {
        return a.powf(r);
    }
    if a == 0.0 {
        return b.powf(r) / (r + 1.0);
    }
    let h = (b - a) / a;
    a.powf(r) * ((r + 1.0) * h.ln_1p()).exp_m1() / ((r + 1.0) * h)
}

impl StableTable {
    fn build(alpha: f64) -> Self {
        let chunks = mc::run_batches(TABLE_SEED, alpha.to_bits() >> 12, TABLE_SAMPLES, |rng, count| {
            (0..count)
                .map(|_| symmetric_stable(alpha, rng).abs())
                .collect::<Vec<f64>>()
        });
        let mut samples: Vec<f64> = chunks.into_iter().flatten().collect();
        samples.sort_unstable_by(f64::total_cmp);
        let n = samples.len();
        let mut knots = Vec::with_capacity(TABLE_RESOLUTION);
        knots.push(0.0);
        for i in 1..TABLE_RESOLUTION {
            let rank = (i * n).div_ceil(TABLE_RESOLUTION);
            knots.push(samples[rank - 1]);
        }
        Self {
            alpha,
            knots,
            sums: Mutex::new(HashMap::new()),
        }
    }

    fn power_sums(&self, r: f64) -> Arc<PowerSums> {
        if let Some(p) = self.sums.lock().expect("sums cache").get(&r.to_bits()) {
            return Arc::clone(p);
        }
        let means: Vec<f64> = self.knots.windows(2).map(|w| segment_mean(w[0], w[1], r)).collect();
        let mut lower = Vec::with_capacity(means.len() + 1);
        lower.push(0.0);
        for m in &means {
            lower.push(lower.last().expect("nonempty") + m);
        }
        let mut upper = vec![0.0; means.len() + 1];
        for i in (0..means.len()).rev() {
            upper[i] = upper[i + 1] + means[i];
        }
        let sums = Arc::new(PowerSums { lower, upper });
        Arc::clone(self.sums.lock().expect("sums cache").entry(r.to_bits()).or_insert(sums))
    }

    /// `E[X^r; a < X ≤ b]` over the tabulated body `[0, knots.last()]`.
    fn body_moment_between(&self, r: f64, a: f64, b: f64) -> f64 {
        let last = self.last();
        let (a, b) = (a.clamp(0.0, last), b.clamp(0.0, last));
        if b <= a {
            return 0.0;
        }
        let sums = self.power_sums(r);
        let res = TABLE_RESOLUTION as f64;
        let seg = |x: f64| (self.knots.partition_point(|&k| k <= x).max(1) - 1).min(self.knots.len() - 2);
        let (i, j) = (seg(a), seg(b));
        let part = |k: usize, lo: f64, hi: f64| {
            let (k0, k1) = (self.knots[k], self.knots[k + 1]);
            if k1 <= k0 || hi <= lo {
                return 0.0;
            }
            (hi - lo) / (k1 - k0) * segment_mean(lo, hi, r)
        };
        if i == j {
            return part(i, a, b) / res;
        }
        // whole segments i+1..j, summed from whichever end is nearer
        let whole = if j < self.knots.len() / 2 {
            sums.lower[j] - sums.lower[i + 1]
        } else {
            sums.upper[i + 1] - sums.upper[j]
        };
        (part(i, a, self.knots[i + 1]) + whole + part(j, self.knots[j], b)) / res
    }

    /// `E[X^r; a < X ≤ b]` for `0 ≤ a ≤ b ≤ ∞`; infinite when `b = ∞` and
    /// `r ≥ α`.
    pub fn partial_moment(&self, r: f64, a: f64, b: f64) -> f64 {
        let last = self.last();
        let mut total = self.body_moment_between(r, a, b);
        if b > last {
            // power tail: density α τ L^α u^{-α-1} on (L, ∞)
            let lo = a.max(last);
            let (alpha, tau) = (self.alpha, self.tail_at_last());
            let coef = alpha * tau * last.powf(alpha);
            let piece = if b == f64::INFINITY {
                if r >= alpha {
                    return f64::INFINITY;
                }
                coef * lo.powf(r - alpha) / (alpha - r)
            } else if (r - alpha).abs() < 1e-12 {
                coef * (b / lo).ln()
            } else {
                coef * (b.powf(r - alpha) - lo.powf(r - alpha)) / (r - alpha)
            };
            total += piece;
        }
        total
    }

    fn last(&self) -> f64 {
        *self.knots.last().expect("table has knots")
    }

    fn tail_at_last(&self) -> f64 {
        1.0 / TABLE_RESOLUTION as f64
    }

    /// `(cdf, tail)` at `t`, each computed directly.
    pub fn probabilities(&self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, 1.0);
        }
        let last = self.last();
        if t >= last {
            let tail = self.tail_at_last() * (t / last).powf(-self.alpha);
            return (1.0 - tail, tail);
        }
        // knots[i] <= t < knots[i+1]
        let i = self.knots.partition_point(|&k| k <= t) - 1;
        let (lo, hi) = (self.knots[i], self.knots[i + 1]);
        let frac = if hi > lo { (t - lo) / (hi - lo) } else { 1.0 };
        let res = TABLE_RESOLUTION as f64;
        let cdf = (i as f64 + frac) / res;
        let tail = ((TABLE_RESOLUTION - i) as f64 - frac) / res;
        (cdf, tail)
    }

    pub fn log_tail(&self, t: f64) -> f64 {
        let last = self.last();
        if t >= last {
            self.tail_at_last().ln() - self.alpha * (t / last).ln()
        } else {
            self.probabilities(t).1.ln()
        }
    }

    /// `inf{t : cdf(t) >= u}` from `(ln u, ln(1-u))`.
    pub fn quantile_log(&self, log_lower: f64, log_upper: f64) -> f64 {
        let tail_last = self.tail_at_last();
        if log_upper <= tail_last.ln() {
            return self.last() * ((log_upper - tail_last.ln()) / -self.alpha).exp();
        }
        let u = log_lower.exp();
        let pos = u * TABLE_RESOLUTION as f64;
        let i = (pos.floor() as usize).min(TABLE_RESOLUTION - 2);
        let frac = (pos - i as f64).clamp(0.0, 1.0);
        self.knots[i] + frac * (self.knots[i + 1] - self.knots[i])
    }
}

/// Shared table for `alpha`, built once per process.
pub fn table(alpha: f64) -> Arc<StableTable> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<StableTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("table cache").get(&alpha.to_bits()) {
        return Arc::clone(t);
    }
    // build outside the lock; a racing builder produces the identical table
    let built = Arc::new(StableTable::build(alpha));
    let mut guard = cache.lock().expect("table cache");
    Arc::clone(guard.entry(alpha.to_bits()).or_insert(built))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    #[test]
    fn segment_means_and_partial_moments() {
        assert!((segment_mean(1.0, 2.0, 2.0) - 7.0 / 3.0).abs() < 1e-14);
        assert!((segment_mean(0.0, 2.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((segment_mean(1.0, 1.0 + 1e-9, 1.5) - 1.0).abs() < 1e-8);
        let t = table(1.5);
        // splitting the range adds up, and the full range is E X^r
        let (a, m, b) = (0.3, 1.1, 40.0);
        let whole = t.partial_moment(1.2, a, b);
        let split = t.partial_moment(1.2, a, m) + t.partial_moment(1.2, m, b);
        assert!((whole - split).abs() < 1e-12 * whole);
        let full = t.partial_moment(1.0, 0.0, f64::INFINITY);
        // E|S| for exp(-|u|^1.5): 2Γ(1 - 1/α)/π
        let exact = 2.0 * statrs::function::gamma::gamma(1.0 - 1.0 / 1.5) / std::f64::consts::PI;
        assert!((full - exact).abs() < 5e-3 * exact, "{full} vs {exact}");
        assert_eq!(t.partial_moment(1.5, 0.0, f64::INFINITY), f64::INFINITY);
        assert_eq!(t.partial_moment(1.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn cauchy_quartiles() {
        let mut rng = stream_rng(1, 0);
        let n = 200_000;
        let above = (0..n).filter(|_| symmetric_stable(1.0, &mut rng).abs() > 1.0).count();
        let p = above as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{p}");
    }

    #[test]
    fn positive_stable_laplace_transform() {
        let mut rng = stream_rng(2, 0);
        let n = 200_000;
        for &a in &[0.4, 0.75] {
            let m: f64 = (0..n).map(|_| (-positive_stable(a, &mut rng)).exp()).sum::<f64>() / n as f64;
            let expected = (-1.0f64).exp();
            assert!((m - expected).abs() < 5e-3, "a={a}: {m} vs {expected}");
        }
        assert_eq!(positive_stable(1.0, &mut rng), 1.0);
    }

    #[test]
    fn symmetric_stable_characteristic_function() {
        let mut rng = stream_rng(3, 0);
        let n = 200_000;
        for &alpha in &[0.8, 1.5, 2.0] {
            let m: f64 = (0..n).map(|_| symmetric_stable(alpha, &mut rng).cos()).sum::<f64>() / n as f64;
            assert!((m - (-1.0f64).exp()).abs() < 6e-3, "alpha={alpha}: {m}");
        }
    }

    #[test]
    fn stable_sampler_handles_half_pi_boundary() {
        // v close to ±π/2 gives cos(v) ~ 0; the variate is huge but finite
        let v: f64 = std::f64::consts::FRAC_PI_2 - 1e-12;
        let a = (1.5 * v).sin() / v.cos().powf(1.0 / 1.5);
        assert!(a.is_finite());
    }
}
