//! Small numerical helpers shared across modules.

use statrs::function::erf;

/// Two-sided standard normal quantile at confidence 0.999.
pub const Z_999: f64 = 3.290_526_731_491_926;

/// `ln(1 - e^x)` for `x <= 0`, accurate across the whole range.
pub fn log1mexp(x: f64) -> f64 {
    if x > 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(e^a + e^b)`.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(erfc(x))` without underflow for large `x`.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 26.0 {
        return erf::erfc(x).ln();
    }
    // asymptotic series; relative error of the bracket < 1e-16 for x >= 26
    let x2 = x * x;
    let inv = 1.0 / (2.0 * x2);
    let series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv + 105.0 * inv.powi(4);
    -x2 - x.ln() - 0.5 * std::f64::consts::PI.ln() + series.ln()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Quantile of the half-normal with unit scale from an upper-tail probability
/// given in log space.
pub fn halfnormal_upper_quantile(log_upper: f64) -> f64 {
    let s = log_upper.exp();
    if s <= 0.0 {
        // below the smallest double; solve ln erfc(x) = log_upper asymptotically
        let mut x = (-log_upper).sqrt();
        for _ in 0..50 {
            let f = ln_erfc(x) - log_upper;
            // d/dx ln erfc(x) ~ -2x - 1/x for large x
            let df = -2.0 * x - 1.0 / x;
            let step = f / df;
            x -= step;
            if step.abs() <= 1e-15 * x {
                break;
            }
        }
        return x * std::f64::consts::SQRT_2;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let x = if s > 0.5 { erf::erf_inv(1.0 - s) } else { erf::erfc_inv(s) };
    polish_erfc(x, s) * std::f64::consts::SQRT_2
}

/// Newton steps on `erfc(x) = s`; the library inverse is good to ~1e-12.
fn polish_erfc(mut x: f64, s: f64) -> f64 {
    for _ in 0..2 {
        let slope = -2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp();
        if slope == 0.0 {
            break;
        }
        x -= (erf::erfc(x) - s) / slope;
    }
    x
}

/// Newton steps on `erf(x) = u`.
fn polish_erf(mut x: f64, u: f64) -> f64 {
    for _ in 0..2 {
        let slope = 2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp();
        if slope == 0.0 {
            break;
        }
        x -= (erf::erf(x) - u) / slope;
    }
    x
}

/// Quantile of the half-normal with unit scale from a lower probability.
pub fn halfnormal_lower_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let x = if u > 0.5 {
        polish_erfc(erf::erfc_inv(1.0 - u), 1.0 - u)
    } else {
        polish_erf(erf::erf_inv(u), u)
    };
    x * std::f64::consts::SQRT_2
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `points` values geometrically spaced on `[lo, hi]`, both ends included.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && points >= 1);
    if points == 1 || hi == lo {
        return vec![lo; points];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                (a + step * i as f64).exp()
            }
        })
        .collect()
}

/// Running mean/variance accumulator (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanVar {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log1mexp_matches_naive_in_safe_range() {
        for &x in &[-1e-3, -0.5, -1.0, -5.0, -40.0] {
            let naive = (1.0 - f64::exp(x)).ln();
            assert!((log1mexp(x) - naive).abs() <= 1e-15 + 1e-9 * naive.abs());
        }
        assert_eq!(log1mexp(0.0), f64::NEG_INFINITY);
        assert!((log1mexp(-1e-20) - (1e-20f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_erfc_is_continuous_at_switch() {
        let below = erf::erfc(25.999).ln();
        let above = ln_erfc(26.0);
        let slope = -2.0 * 26.0;
        assert!((above - below - slope * 0.001).abs() < 1e-3);
        let direct = erf::erfc(26.0).ln();
        assert!((ln_erfc(26.0) - direct).abs() < 1e-12 * direct.abs());
    }

    #[test]
    fn halfnormal_quantiles_invert() {
        for &u in &[1e-6, 0.1, 0.5, 0.9] {
            let x = halfnormal_lower_quantile(u);
            let back = erf::erf(x / std::f64::consts::SQRT_2);
            assert!((back - u).abs() < 1e-12);
        }
        for &ls in &[-1.0f64, -30.0, -700.0, -800.0] {
            let x = halfnormal_upper_quantile(ls);
            let back = ln_erfc(x / std::f64::consts::SQRT_2);
            assert!((back - ls).abs() < 1e-9 * ls.abs(), "{ls} {back}");
        }
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(393, 1000, Z_999);
        assert!(lo < 0.393 && 0.393 < hi);
        let (lo, hi) = wilson_interval(0, 1000, Z_999);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.02);
    }

    #[test]
    fn meanvar_merge_equals_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = MeanVar::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = MeanVar::default();
        let mut b = MeanVar::default();
        xs[..40].iter().for_each(|&x| a.push(x));
        xs[40..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-14);
        assert!((a.variance() - all.variance()).abs() < 1e-13);
    }
}
