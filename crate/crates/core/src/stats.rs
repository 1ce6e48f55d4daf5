//! Empirical distributions, confidence intervals and goodness-of-fit tests.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Sorted sample with a right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        EmpiricalDistribution { sorted: samples }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// F(x) = #{samples ≤ x}/n.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        let count = self.sorted.partition_point(|&s| s <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// P(X ≥ x), the convention used for rate CCDFs.
    pub fn ccdf_inclusive(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        let below = self.sorted.partition_point(|&s| s < x);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }

    /// Nearest-rank percentile: the ⌈p·n⌉-th smallest sample, p in (0, 1].
    pub fn percentile(&self, p: f64) -> f64 {
        if self.sorted.is_empty() {
            return f64::NAN;
        }
        let n = self.sorted.len();
        let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[rank - 1]
    }

    /// Distribution-free 95% interval for the p-quantile from binomial order
    /// statistics; returns the half-width of [x_lo, x_hi].
    pub fn percentile_ci_half_width(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        if n < 2 {
            return f64::INFINITY;
        }
        let nf = n as f64;
        let spread = Z95 * (nf * p * (1.0 - p)).sqrt();
        let lo = ((nf * p - spread).floor() as isize).clamp(1, n as isize) as usize;
        let hi = ((nf * p + spread).ceil() as isize).clamp(1, n as isize) as usize;
        0.5 * (self.sorted[hi - 1] - self.sorted[lo - 1])
    }

    pub fn mean(&self) -> f64 {
        mean(&self.sorted)
    }

    /// Step points (value, F(value)) at every distinct sample.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// 95% half-width of a binomial proportion estimated from n trials.
pub fn binomial_ci_half_width(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    Z95 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Half-width of the 95% Wilson score interval; stays positive at p = 0 or 1.
pub fn wilson_half_width(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt()
}

/// 95% half-width of a mean of i.i.d. batches.
pub fn mean_ci_half_width(batches: &[f64]) -> f64 {
    let n = batches.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let m = mean(batches);
    let var = batches.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Z95 * (var / n as f64).sqrt()
}

/// Ratio estimator Σy/Σx with a 95% half-width from the linearized variance
/// across batches.
pub fn ratio_estimate(numerators: &[f64], denominators: &[f64]) -> (f64, f64) {
    assert_eq!(numerators.len(), denominators.len());
    let total_y: f64 = numerators.iter().sum();
    let total_x: f64 = denominators.iter().sum();
    if total_x == 0.0 {
        return (f64::NAN, f64::INFINITY);
    }
    let ratio = total_y / total_x;
    let n = numerators.len();
    if n < 2 {
        return (ratio, f64::INFINITY);
    }
    let mean_x = total_x / n as f64;
    let ss: f64 = numerators
        .iter()
        .zip(denominators)
        .map(|(y, x)| (y - ratio * x).powi(2))
        .sum();
    let var = ss / ((n - 1) as f64 * n as f64 * mean_x * mean_x);
    (ratio, Z95 * var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    }
}

/// Q_KS(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²).
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper regularized incomplete gamma Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let ln_pre = -x + a * x.ln() - crate::specfun::ln_gamma_signed(a).0;
    if x < a + 1.0 {
        let mut sum = 1.0 / a;
        let mut term = sum;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (1.0 - sum * ln_pre.exp()).clamp(0.0, 1.0)
    } else {
        // Lentz continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (ln_pre.exp() * h).clamp(0.0, 1.0)
    }
}

/// Pearson chi-square goodness of fit against equal expected counts.
pub fn chi_square_uniform(counts: &[u64]) -> KsResult {
    let total: u64 = counts.iter().sum();
    let k = counts.len();
    let expected = total as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let df = (k - 1) as f64;
    KsResult {
        statistic: stat,
        p_value: gamma_q(df / 2.0, stat / 2.0),
    }
}
