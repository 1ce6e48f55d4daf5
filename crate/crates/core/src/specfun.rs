//! Special functions and quadrature used by the analytic engine.
//!
//! * [`hyp2f1`]: Gauss hypergeometric function for real parameters and
//!   non-positive argument.
//! * [`gamma_ccdf`] / [`sample_gamma`]: integer-shape, unit-scale Gamma law.
//! * [`integrate`] / [`integrate_semi_infinite`]: adaptive Gauss–Kronrod
//!   (7/15) quadrature with optional variable changes for [0, ∞).

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

const HYP_TERM_CAP: usize = 500;
const HYP_REL_TOL: f64 = 1e-12;
// Integer b − a has no two-term connection formula; the slow Pfaff series is
// allowed to run longer instead.
const HYP_DEGENERATE_CAP: usize = 100_000;

/// ln|Γ(x)| and the sign of Γ(x). Poles yield `(inf, 0.0)`.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x <= 0.0 && x == x.floor() {
        return (f64::INFINITY, 0.0);
    }
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π / sin(πx)
        let s = (PI * x).sin();
        let (lg, sg) = ln_gamma_signed(1.0 - x);
        return ((PI / s.abs()).ln() - lg, s.signum() * sg);
    }
    (ln_gamma_lanczos(x), 1.0)
}

// Lanczos approximation, g = 7, n = 9; valid for x >= 0.5.
fn ln_gamma_lanczos(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn gamma(x: f64) -> f64 {
    let (lg, s) = ln_gamma_signed(x);
    if s == 0.0 {
        f64::NAN
    } else {
        s * lg.exp()
    }
}

// Plain power series; Err carries the number of terms used.
fn hyp_series(a: f64, b: f64, c: f64, x: f64) -> std::result::Result<f64, usize> {
    hyp_series_capped(a, b, c, x, HYP_TERM_CAP)
}

fn hyp_series_capped(
    a: f64,
    b: f64,
    c: f64,
    x: f64,
    cap: usize,
) -> std::result::Result<f64, usize> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut quiet = 0;
    for n in 0..cap {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * x;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() <= 1e-17 * sum.abs() {
            quiet += 1;
            if quiet >= 2 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    let last = term.abs() / sum.abs().max(f64::MIN_POSITIVE);
    if last <= HYP_REL_TOL {
        Ok(sum)
    } else {
        Err(cap)
    }
}

/// Γ(p1)Γ(p2)/(Γ(q1)Γ(q2)) with signs; zero when a denominator argument is a pole.
fn gamma_ratio(p1: f64, p2: f64, q1: f64, q2: f64) -> f64 {
    let (lq1, sq1) = ln_gamma_signed(q1);
    let (lq2, sq2) = ln_gamma_signed(q2);
    if sq1 == 0.0 || sq2 == 0.0 {
        return 0.0;
    }
    let (lp1, sp1) = ln_gamma_signed(p1);
    let (lp2, sp2) = ln_gamma_signed(p2);
    sp1 * sp2 * sq1 * sq2 * (lp1 + lp2 - lq1 - lq2).exp()
}

/// Gauss hypergeometric function ₂F₁(a, b; c; z) for z ≤ 0.
///
/// For |z| ≤ 1 the series is summed after the Pfaff transformation, whose
/// argument z/(z − 1) lies in [0, 1/2]. For |z| > 1 the two-term connection
/// formula in w = 1/(1 − z) ∈ (0, 1/2) is used, which needs b − a to be
/// non-integer; otherwise the Pfaff series is summed with a larger term cap.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && z.is_finite()) {
        return Err(Error::validation(
            "hyp2f1",
            format!("non-finite argument ({a}, {b}; {c}; {z})"),
        ));
    }
    if c <= 0.0 && c == c.floor() {
        return Err(Error::validation(
            "hyp2f1",
            format!("c = {c} is a non-positive integer"),
        ));
    }
    if z > 0.0 {
        return Err(Error::validation(
            "hyp2f1",
            format!("argument z = {z} must be <= 0"),
        ));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let fail = |terms| Error::Hyp2f1NonConvergence { a, b, c, z, terms };
    let b_minus_a = b - a;
    if z >= -1.0 {
        return pfaff(a, b, c, z, HYP_TERM_CAP).map_err(fail);
    }
    if b_minus_a == b_minus_a.round() {
        return pfaff(a, b, c, z, HYP_DEGENERATE_CAP).map_err(fail);
    }

    let w = 1.0 / (1.0 - z);
    let first = gamma_ratio(c, b_minus_a, b, c - a);
    let second = gamma_ratio(c, -b_minus_a, a, c - b);
    let mut value = 0.0;
    if first != 0.0 {
        value += first * w.powf(a) * hyp_series(a, c - b, 1.0 - b_minus_a, w).map_err(fail)?;
    }
    if second != 0.0 {
        value += second * w.powf(b) * hyp_series(b, c - a, 1.0 + b_minus_a, w).map_err(fail)?;
    }
    Ok(value)
}

fn pfaff(a: f64, b: f64, c: f64, z: f64, cap: usize) -> std::result::Result<f64, usize> {
    let x = z / (z - 1.0);
    // Prefer the variant whose series has only positive terms.
    if a > 0.0 && c - b > 0.0 && c > 0.0 {
        Ok((1.0 - z).powf(-a) * hyp_series_capped(a, c - b, c, x, cap)?)
    } else if b > 0.0 && c - a > 0.0 && c > 0.0 {
        Ok((1.0 - z).powf(-b) * hyp_series_capped(b, c - a, c, x, cap)?)
    } else {
        Ok((1.0 - z).powf(-a) * hyp_series_capped(a, c - b, c, x, cap)?)
    }
}

/// P(X ≥ x) for X ~ Γ(shape, 1) with integer shape: e^{−x} Σ_{k<shape} x^k/k!.
pub fn gamma_ccdf(shape: u32, x: f64) -> f64 {
    assert!(shape >= 1, "gamma shape must be >= 1");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let ln_x = x.ln();
    let mut ln_fact = 0.0;
    let mut sum = 0.0;
    for k in 0..shape {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        sum += (k as f64 * ln_x - x - ln_fact).exp();
    }
    sum.clamp(0.0, 1.0)
}

/// One Γ(shape, 1) draw as a sum of `shape` unit exponentials.
pub fn sample_gamma<R: Rng + ?Sized>(shape: u32, rng: &mut R) -> f64 {
    assert!(shape >= 1, "gamma shape must be >= 1");
    (0..shape).map(|_| rng.sample::<f64, _>(Exp1)).sum()
}

/// Variable change applied before integrating over [0, ∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// Integrate [0, 1], [1, 2], [2, 4], ... until the panels fall below tolerance.
    None,
    /// u = F(x) with F(x) = 1 − exp(−λπx²), truncated at F = 1 − 1e−10.
    CdfWeighted { bs_density: f64 },
    /// x = u/(1 − u).
    RationalMap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub transform: Transform,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_subdivisions: 1000,
            transform: Transform::RationalMap,
        }
    }
}

impl QuadratureSpec {
    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::validation("quadrature", "tolerances must be > 0"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::validation(
                "quadrature",
                "max_subdivisions must be >= 1",
            ));
        }
        if let Transform::CdfWeighted { bs_density } = self.transform {
            if !(bs_density > 0.0) {
                return Err(Error::validation(
                    "quadrature",
                    "cdf_weighted needs bs_density > 0",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Upper truncation of the CDF-weighted transform.
pub const CDF_TRUNCATION: f64 = 1.0 - 1e-10;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive Gauss–Kronrod on a finite interval; bisects the panel with the
/// largest error estimate until the total error meets the tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Quadrature> {
    spec.validate()?;
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut intervals = 1;
    loop {
        if !total.is_finite() {
            return Err(Error::QuadratureTolerance {
                value: total,
                error: total_err,
                intervals,
            });
        }
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if intervals >= spec.max_subdivisions {
            return Err(Error::QuadratureTolerance {
                value: total,
                error: total_err,
                intervals,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point; accept it as is.
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            total_err -= worst.error;
            continue;
        }
        let (lv, le) = gk15(&mut f, worst.a, mid);
        let (rv, re) = gk15(&mut f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
        intervals += 1;
    }
    // Re-sum to shed drift from the incremental updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(Quadrature {
        value,
        error,
        intervals,
    })
}

/// Inverse of F(r) = 1 − exp(−λπr²).
pub fn nearest_distance_quantile(u: f64, bs_density: f64) -> f64 {
    (-(-u).ln_1p() / (bs_density * PI)).sqrt()
}

/// ∫₀^∞ f(x) dx under the transform selected in `spec`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    spec: &QuadratureSpec,
) -> Result<Quadrature> {
    spec.validate()?;
    match spec.transform {
        Transform::RationalMap => integrate(
            |u| {
                let one_minus = 1.0 - u;
                f(u / one_minus) / (one_minus * one_minus)
            },
            0.0,
            1.0,
            spec,
        ),
        Transform::CdfWeighted { bs_density } => {
            let scale = bs_density * PI;
            integrate(
                |u| {
                    let x = nearest_distance_quantile(u, bs_density);
                    let density = 2.0 * scale * x * (1.0 - u);
                    f(x) / density
                },
                0.0,
                CDF_TRUNCATION,
                spec,
            )
        }
        Transform::None => {
            let mut total = 0.0;
            let mut error = 0.0;
            let mut intervals = 0;
            let mut lo = 0.0;
            let mut hi = 1.0;
            let mut quiet = 0;
            for _ in 0..128 {
                let panel = integrate(&mut f, lo, hi, spec)?;
                total += panel.value;
                error += panel.error;
                intervals += panel.intervals;
                let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
                if panel.value.abs() <= 0.1 * tol {
                    quiet += 1;
                    if quiet >= 3 {
                        return Ok(Quadrature {
                            value: total,
                            error,
                            intervals,
                        });
                    }
                } else {
                    quiet = 0;
                }
                lo = hi;
                hi *= 2.0;
            }
            Err(Error::QuadratureTolerance {
                value: total,
                error,
                intervals,
            })
        }
    }
}

/// E[h(r)] for r distributed as the nearest-BS distance of a PPP of the given
/// density, via u = F(r) on [0, 1 − 1e−10].
pub fn expect_over_nearest_distance<F: FnMut(f64) -> f64>(
    mut h: F,
    bs_density: f64,
    spec: &QuadratureSpec,
) -> Result<Quadrature> {
    integrate(
        |u| h(nearest_distance_quantile(u, bs_density)),
        0.0,
        CDF_TRUNCATION,
        spec,
    )
}
