//! Stochastic-geometry rate formulas under complete intra-cluster nulling.
//!
//! The interference seen by a typical user comes from a PPP of base stations
//! outside its cluster disc of radius R_c, each contributing Γ(K, 1) fading
//! power. Its Laplace transform has the closed form
//! `exp(2πλ(Ψ_I(s) − Ψ_II(s)))`, which drives both the rate-CCDF upper bound
//! and the ergodic per-BS sum rate.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    derive, enumerate_operating_points, DerivedParams, OperatingPoint, SystemParams,
};
use crate::error::{Error, Result};
use crate::specfun::{
    expect_over_nearest_distance, hyp2f1, integrate_semi_infinite, QuadratureSpec, Transform,
};

/// Everything needed to evaluate the formulas at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticContext {
    pub params: SystemParams,
    pub op: OperatingPoint,
    pub derived: DerivedParams,
    pub quad: QuadratureSpec,
}

impl AnalyticContext {
    pub fn new(params: SystemParams, op: OperatingPoint) -> Result<Self> {
        Self::with_quadrature(params, op, QuadratureSpec::default())
    }

    pub fn with_quadrature(
        params: SystemParams,
        op: OperatingPoint,
        quad: QuadratureSpec,
    ) -> Result<Self> {
        quad.validate()?;
        let derived = derive(&params, &op)?;
        Ok(AnalyticContext {
            params,
            op,
            derived,
            quad,
        })
    }

    /// Overrides the cluster radius while keeping every other derived value.
    pub fn with_cluster_radius(mut self, radius_m: f64) -> Self {
        self.derived.cluster_radius_m = radius_m;
        self.derived.mean_cluster_size = self.params.bs_density * PI * radius_m * radius_m;
        self
    }

    /// F(r) = 1 − exp(−λπr²), the serving-distance CDF.
    pub fn f_rmin_cdf(&self, r: f64) -> f64 {
        -(-self.params.bs_density * PI * r * r).exp_m1()
    }

    fn cluster_edge(&self) -> f64 {
        1.0 + self.derived.cluster_radius_m / self.params.reference_distance_m
    }

    fn hyp_argument(&self, s: f64) -> f64 {
        -s * self.derived.per_user_snr * self.cluster_edge().powf(-self.params.pathloss_exponent)
    }

    pub fn psi_one(&self, s: f64) -> Result<f64> {
        let d0 = self.params.reference_distance_m;
        let delta = 2.0 / self.params.pathloss_exponent;
        let edge = self.cluster_edge();
        let f = hyp2f1(
            self.op.multiplexing as f64,
            -delta,
            1.0 - delta,
            self.hyp_argument(s),
        )?;
        Ok(0.5 * d0 * d0 * edge * edge * (1.0 - f))
    }

    pub fn psi_two(&self, s: f64) -> Result<f64> {
        let d0 = self.params.reference_distance_m;
        let delta = 1.0 / self.params.pathloss_exponent;
        let f = hyp2f1(
            self.op.multiplexing as f64,
            -delta,
            1.0 - delta,
            self.hyp_argument(s),
        )?;
        Ok(d0 * d0 * self.cluster_edge() * (1.0 - f))
    }

    /// E[exp(−s·I)] for the inter-cluster interference I (powers scaled by ρ).
    pub fn interference_laplace(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(1.0);
        }
        let exponent = 2.0 * PI * self.params.bs_density * (self.psi_one(s)? - self.psi_two(s)?);
        Ok(exponent.exp().min(1.0))
    }

    /// Upper bound on P(w·R ≥ κ).
    pub fn rate_ccdf_upper(&self, kappa: f64) -> Result<f64> {
        if kappa.is_nan() || kappa < 0.0 {
            return Err(Error::validation(
                "kappa",
                format!("must be >= 0, got {kappa}"),
            ));
        }
        if kappa == 0.0 {
            return Ok(1.0);
        }
        let zeta = self.op.diversity;
        let w = self.derived.schedule_fraction;
        let threshold = (kappa / w).exp2() - 1.0;
        if !threshold.is_finite() {
            return Ok(0.0);
        }
        let mu = (-ln_factorial(zeta) / zeta as f64).exp();
        let base = mu * self.derived.snr_gap / self.derived.per_user_snr * threshold;
        let coefficients = binomial_row(zeta);
        let d0 = self.params.reference_distance_m;
        let alpha = self.params.pathloss_exponent;

        let mut failure = None;
        let q = expect_over_nearest_distance(
            |r| {
                let s1 = base * (1.0 + r / d0).powf(alpha);
                if s1 > 745.0 {
                    return 0.0;
                }
                let mut terms = Vec::with_capacity(zeta);
                for (j, coeff) in coefficients.iter().enumerate().skip(1) {
                    let s = s1 * j as f64;
                    let lt = match self.interference_laplace(s) {
                        Ok(v) => v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            return f64::NAN;
                        }
                    };
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    terms.push(sign * coeff * (-s).exp() * lt);
                }
                alternating_sum(&terms)
            },
            self.params.bs_density,
            &self.quad,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(q?.value.clamp(0.0, 1.0))
    }

    pub fn rate_ccdf_curve(&self, thresholds: &[f64]) -> Result<RateCcdfCurve> {
        let mut ccdf = Vec::with_capacity(thresholds.len());
        let mut running = 1.0f64;
        for &k in thresholds {
            let v = self.rate_ccdf_upper(k)?;
            // Keep the curve monotone against quadrature-level wiggle.
            running = running.min(v);
            ccdf.push(running);
        }
        Ok(RateCcdfCurve {
            thresholds_bps_hz: thresholds.to_vec(),
            ccdf_upper: ccdf,
        })
    }

    /// E_r[(1 + zρβ(r))^−ζ], the Laplace transform of the received signal power.
    pub fn signal_laplace(&self, z: f64) -> Result<f64> {
        let rho = self.derived.per_user_snr;
        let zeta = self.op.diversity as f64;
        let q = expect_over_nearest_distance(
            |r| (-zeta * (z * rho * self.params.pathloss(r)).ln_1p()).exp(),
            self.params.bs_density,
            &self.quad,
        )?;
        Ok(q.value)
    }

    /// E_r[1 − (1 + zρβ(r))^−ζ], computed without cancellation at small z.
    fn signal_complement(&self, z: f64) -> Result<f64> {
        let rho = self.derived.per_user_snr;
        let zeta = self.op.diversity as f64;
        let q = expect_over_nearest_distance(
            |r| -(-zeta * (z * rho * self.params.pathloss(r)).ln_1p()).exp_m1(),
            self.params.bs_density,
            &relative_only(self.quad),
        )?;
        Ok(q.value)
    }

    /// Integrand of the ergodic sum rate in nats/s/Hz, without the factor K.
    pub fn sum_rate_integrand(&self, z: f64) -> Result<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        let tau = self.derived.snr_gap;
        let decay = (-z * tau).exp();
        if decay == 0.0 {
            return Ok(0.0);
        }
        Ok(decay / z * self.interference_laplace(z * tau)? * self.signal_complement(z)?)
    }

    /// Per-BS ergodic sum rate in bits/s/Hz.
    pub fn ergodic_sum_rate(&self) -> Result<f64> {
        let spec = self.quad.with_transform(Transform::RationalMap);
        // z = c·u, with c placing the integrand's bulk near u = 1 in both the
        // interference- and noise-limited regimes.
        let typical = 0.5 / self.params.bs_density.sqrt();
        let typical_snr = self.derived.per_user_snr * self.params.pathloss(typical);
        let c = 1.0 / typical_snr.max(self.derived.snr_gap);
        let mut failure = None;
        let q = integrate_semi_infinite(
            |u| match self.sum_rate_integrand(c * u) {
                Ok(v) => c * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            &spec,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(self.op.multiplexing as f64 * q?.value / LN_2)
    }
}

/// Rate CCDF bound sampled on a κ grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCcdfCurve {
    pub thresholds_bps_hz: Vec<f64>,
    pub ccdf_upper: Vec<f64>,
}

/// The integrand is non-negative and may be arbitrarily small, so only the
/// relative tolerance is meaningful.
fn relative_only(mut spec: QuadratureSpec) -> QuadratureSpec {
    spec.abs_tol = f64::MIN_POSITIVE;
    spec
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for j in 1..n {
        row[j] = row[j - 1] * (n - j + 1) as f64 / j as f64;
    }
    row
}

// Adjacent terms are paired first (their signs differ), then the pair sums
// are added from largest magnitude down; Neumaier compensation for long rows.
fn alternating_sum(terms: &[f64]) -> f64 {
    let mut pairs: Vec<f64> = terms.chunks(2).map(|c| c.iter().sum()).collect();
    pairs.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    if terms.len() <= 40 {
        return pairs.iter().sum();
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in &pairs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sum rate at every operating point for M antennas, in enumeration order.
pub fn sum_rate_table(
    params: &SystemParams,
    antennas: usize,
) -> Result<Vec<(OperatingPoint, f64)>> {
    enumerate_operating_points(antennas)
        .into_par_iter()
        .map(|op| {
            let ctx = AnalyticContext::new(*params, op)?;
            ctx.ergodic_sum_rate()
                .map(|rate| (op, rate))
                .map_err(|e| Error::AtOperatingPoint {
                    point: op.to_string(),
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Maximizer of the ergodic sum rate over all (K, ζ, O) for M antennas.
/// Ties go to the smaller K, then the smaller O.
pub fn argmax_sum_rate(params: &SystemParams, antennas: usize) -> Result<(OperatingPoint, f64)> {
    if antennas == 0 {
        return Err(Error::validation("antennas", "must be >= 1"));
    }
    let table = sum_rate_table(params, antennas)?;
    Ok(best_of(&table))
}

/// Largest entry of a sum-rate table; ties keep the earlier entry.
pub fn best_of(table: &[(OperatingPoint, f64)]) -> (OperatingPoint, f64) {
    let mut best = table[0];
    for &(op, rate) in &table[1..] {
        if rate > best.1 {
            best = (op, rate);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn reference_ctx(m: usize, k: usize, o: usize) -> AnalyticContext {
        AnalyticContext::new(
            SystemParams::reference(),
            OperatingPoint::new(m, k, o).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn serving_distance_cdf() {
        let ctx = reference_ctx(15, 10, 0);
        assert_eq!(ctx.f_rmin_cdf(0.0), 0.0);
        assert!((ctx.f_rmin_cdf(1e6) - 1.0).abs() < 1e-15);
        let median = 500.0 * 2f64.ln().sqrt();
        assert!((ctx.f_rmin_cdf(median) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn psi_vanishes_at_zero() {
        let ctx = reference_ctx(15, 3, 9);
        assert_eq!(ctx.psi_one(0.0).unwrap(), 0.0);
        assert_eq!(ctx.psi_two(0.0).unwrap(), 0.0);
    }

    #[test]
    fn laplace_matches_direct_integral() {
        // K = 3 with B̄ = 4.
        let params = SystemParams::reference();
        let op = OperatingPoint::from_triple(3, 4, 9).unwrap();
        let ctx = AnalyticContext::new(params, op).unwrap();
        assert!((ctx.derived.mean_cluster_size - 4.0).abs() < 1e-15);
        for &s in &[1e-3, 0.1, 1.0, 10.0, 1e3] {
            let closed = ctx.interference_laplace(s).unwrap();
            let direct = oracle::laplace_step_c(
                s,
                3,
                ctx.derived.per_user_snr,
                params.bs_density,
                ctx.derived.cluster_radius_m,
                params.reference_distance_m,
                params.pathloss_exponent,
            );
            assert!(
                (closed - direct).abs() < 1e-6,
                "s={s}: {closed} vs {direct}"
            );
            assert!(closed > 0.0 && closed <= 1.0);
        }
    }

    #[test]
    fn laplace_non_increasing_on_log_grid() {
        let ctx = reference_ctx(15, 8, 2);
        let mut prev = 1.0;
        for i in 0..60 {
            let s = 10f64.powf(-6.0 + i as f64 * 0.2);
            let v = ctx.interference_laplace(s).unwrap();
            assert!(v <= prev + 1e-14, "s={s}");
            prev = v;
        }
    }

    #[test]
    fn ccdf_endpoints() {
        let ctx = AnalyticContext::new(
            SystemParams::reference().with_users_per_cell(21),
            OperatingPoint::from_triple(3, 4, 9).unwrap(),
        )
        .unwrap();
        assert_eq!(ctx.rate_ccdf_upper(0.0).unwrap(), 1.0);
        assert!(ctx.rate_ccdf_upper(60.0).unwrap() < 1e-9);
        assert!(ctx.rate_ccdf_upper(-1.0).is_err());
    }

    #[test]
    fn ccdf_non_increasing() {
        let ctx = AnalyticContext::new(
            SystemParams::reference().with_users_per_cell(21),
            OperatingPoint::from_triple(3, 4, 15).unwrap(),
        )
        .unwrap();
        let mut prev = 1.0;
        for i in 0..=30 {
            let kappa = i as f64 * 0.1;
            let v = ctx.rate_ccdf_upper(kappa).unwrap();
            assert!(v <= prev + 1e-8, "kappa={kappa}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn unit_diversity_bound_is_exact_exponential() {
        // At ζ = 1 the bound equals E_r[e^{−θ(r)} L(θ(r))] with no slack.
        let params = SystemParams::reference().with_users_per_cell(21);
        let op = OperatingPoint::from_triple(3, 1, 9).unwrap();
        let ctx = AnalyticContext::new(params, op).unwrap();
        let w = ctx.derived.schedule_fraction;
        for &kappa in &[0.05, 0.2, 0.5, 1.0] {
            let bound = ctx.rate_ccdf_upper(kappa).unwrap();
            let theta0 =
                ctx.derived.snr_gap / ctx.derived.per_user_snr * ((kappa / w).exp2() - 1.0);
            let exact = oracle::expect_nearest(params.bs_density, |r| {
                let theta =
                    theta0 * (1.0 + r / params.reference_distance_m).powf(params.pathloss_exponent);
                if theta > 700.0 {
                    return 0.0;
                }
                (-theta).exp()
                    * oracle::laplace_step_c(
                        theta,
                        3,
                        ctx.derived.per_user_snr,
                        params.bs_density,
                        ctx.derived.cluster_radius_m,
                        params.reference_distance_m,
                        params.pathloss_exponent,
                    )
            });
            assert!(
                (bound - exact).abs() < 1e-6,
                "kappa={kappa}: {bound} vs {exact}"
            );
        }
    }

    #[test]
    fn signal_laplace_matches_trapezoid() {
        let ctx = reference_ctx(15, 10, 0);
        for &z in &[1e-9, 1e-4, 0.01, 0.3, 2.0] {
            let v = ctx.signal_laplace(z).unwrap();
            let rho = ctx.derived.per_user_snr;
            let lambda = ctx.params.bs_density;
            let oracle = oracle::trapezoid(
                |r| {
                    let density = 2.0 * PI * lambda * r * (-PI * lambda * r * r).exp();
                    density
                        * (1.0 + z * rho * ctx.params.pathloss(r)).powf(-(ctx.op.diversity as f64))
                },
                0.0,
                4000.0,
                4_000_000,
            );
            assert!((v - oracle).abs() < 1e-6, "z={z}: {v} vs {oracle}");
        }
    }

    #[test]
    fn sum_rate_vanishes_without_power() {
        let mut params = SystemParams::reference();
        params.max_power_dbm = -150.0;
        let ctx = AnalyticContext::new(params, OperatingPoint::new(4, 1, 0).unwrap()).unwrap();
        assert!(ctx.ergodic_sum_rate().unwrap() < 1e-3);
    }

    #[test]
    fn noise_limited_matches_single_link() {
        let mut params = SystemParams::reference();
        params.max_power_dbm = -60.0;
        let op = OperatingPoint::new(15, 8, 2).unwrap();
        let ctx = AnalyticContext::new(params, op).unwrap();
        let analytic = ctx.ergodic_sum_rate().unwrap();
        let rho = ctx.derived.per_user_snr;
        let tau = ctx.derived.snr_gap;
        let single_link = 8.0
            * oracle::expect_nearest_log(params.bs_density, |r| {
                let snr = rho * params.pathloss(r) / tau;
                oracle::expect_gamma(op.diversity as u32, |g| (snr * g).ln_1p() / LN_2)
            });
        assert!(
            (analytic - single_link).abs() / single_link < 1e-3,
            "{analytic} vs {single_link}"
        );
    }

    #[test]
    fn sum_rate_saturates_at_high_power() {
        let rate = |dbm: f64| {
            let mut params = SystemParams::reference();
            params.max_power_dbm = dbm;
            AnalyticContext::new(params, OperatingPoint::new(15, 8, 2).unwrap())
                .unwrap()
                .ergodic_sum_rate()
                .unwrap()
        };
        let (a, b) = (rate(300.0), rate(400.0));
        assert!(a > rate(43.0));
        assert!((a - b).abs() / b < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn isolated_cell_limit() {
        // Pushing the cluster edge far out removes nearly all interference, so
        // the sum rate tends to K·E[log2(1 + ρβγ/τ)] with γ ~ Γ(ζ, 1).
        let params = SystemParams::reference();
        let op = OperatingPoint::new(4, 1, 0).unwrap();
        let ctx = AnalyticContext::new(params, op)
            .unwrap()
            .with_cluster_radius(200_000.0);
        let analytic = ctx.ergodic_sum_rate().unwrap();
        let rho = ctx.derived.per_user_snr;
        let tau = ctx.derived.snr_gap;
        let zeta = op.diversity as u32;
        let single_link = oracle::expect_nearest(params.bs_density, |r| {
            let snr = rho * params.pathloss(r) / tau;
            oracle::expect_gamma(zeta, |g| (1.0 + snr * g).log2())
        });
        assert!(analytic <= single_link * (1.0 + 1e-6));
        assert!(
            (analytic - single_link).abs() / single_link < 1e-3,
            "{analytic} vs {single_link}"
        );
    }

    #[test]
    fn sum_rate_strictly_decreasing_in_nulling_at_k10() {
        let params = SystemParams::reference();
        let rates: Vec<f64> = (0..=5)
            .map(|o| {
                AnalyticContext::new(params, OperatingPoint::new(15, 10, o).unwrap())
                    .unwrap()
                    .ergodic_sum_rate()
                    .unwrap()
            })
            .collect();
        for pair in rates.windows(2) {
            assert!(pair[0] > pair[1], "{rates:?}");
        }
    }

    #[test]
    fn alternating_sum_small_rows() {
        // Σ_{j=1}^{n} C(n,j)(−1)^{j+1} = 1
        for n in 1..=30 {
            let row = binomial_row(n);
            let terms: Vec<f64> = (1..=n)
                .map(|j| if j % 2 == 1 { row[j] } else { -row[j] })
                .collect();
            assert!((alternating_sum(&terms) - 1.0).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn best_of_prefers_earlier_on_ties() {
        let a = OperatingPoint::new(4, 1, 0).unwrap();
        let b = OperatingPoint::new(4, 2, 0).unwrap();
        assert_eq!(best_of(&[(a, 1.0), (b, 1.0)]).0, a);
        assert_eq!(best_of(&[(a, 1.0), (b, 2.0)]).0, b);
    }
}
