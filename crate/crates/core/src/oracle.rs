//! Brute-force reference computations for tests. Deliberately independent of
//! the production special functions and adaptive quadrature.

#![allow(dead_code)]

use std::f64::consts::PI;

const GL_POINTS: usize = 20;

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
fn gauss_legendre() -> ([f64; GL_POINTS], [f64; GL_POINTS]) {
    let n = GL_POINTS;
    let mut x = [0.0; GL_POINTS];
    let mut w = [0.0; GL_POINTS];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Composite 20-point Gauss–Legendre on `panels` equal panels of [a, b].
pub fn gauss_panels<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for i in 0..GL_POINTS {
            s += w[i] * f(mid + 0.5 * h * x[i]);
        }
        total += 0.5 * h * s;
    }
    total
}

pub fn trapezoid<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}

/// 1 − (1 + x)^−K without cancellation.
fn one_minus_power(x: f64, k: f64) -> f64 {
    -(-k * x.ln_1p()).exp_m1()
}

/// ∫_{u0}^∞ [1 − (1 + c·u^−α)^−K] · φ(u) du in log coordinates, with an
/// analytic tail for the far field where the bracket is ≈ K·c·u^−α.
fn far_field_integral<P: Fn(f64) -> f64>(
    c: f64,
    k: f64,
    alpha: f64,
    u0: f64,
    phi: P,
    tail_power: f64,
) -> f64 {
    let t0 = u0.ln();
    let span = 60.0;
    let body = gauss_panels(
        |t| {
            let u = t.exp();
            one_minus_power(c * u.powf(-alpha), k) * phi(u) * u
        },
        t0,
        t0 + span,
        240,
    );
    let u_end = (t0 + span).exp();
    // ∫_{U}^∞ K c u^{p−α} du = K c U^{p+1−α}/(α−p−1)
    let tail = k * c * u_end.powf(tail_power + 1.0 - alpha) / (alpha - tail_power - 1.0);
    body + tail
}

/// ∫_{R_c}^∞ [1 − (1 + sρ(1 + v/d0)^−α)^−K] v dv.
pub fn step_c_integral(
    s: f64,
    k: usize,
    rho: f64,
    cluster_radius: f64,
    d0: f64,
    alpha: f64,
) -> f64 {
    let u0 = 1.0 + cluster_radius / d0;
    // v = d0(u − 1), dv = d0 du
    d0 * d0 * far_field_integral(s * rho, k as f64, alpha, u0, |u| u - 1.0, 1.0)
}

/// exp(−2πλ ∫_{R_c}^∞ [1 − (1 + sρ(1 + v/d0)^−α)^−K] v dv).
pub fn laplace_step_c(
    s: f64,
    k: usize,
    rho: f64,
    lambda: f64,
    cluster_radius: f64,
    d0: f64,
    alpha: f64,
) -> f64 {
    (-2.0 * PI * lambda * step_c_integral(s, k, rho, cluster_radius, d0, alpha)).exp()
}

/// ₂F₁(K, −m/α; 1 − m/α; −c) = 1 + m ∫_1^∞ [1 − (1 + c u^−α)^−K] u^{m−1} du.
pub fn hyp2f1_integral(k: f64, m: f64, alpha: f64, c: f64) -> f64 {
    1.0 + m * far_field_integral(c, k, alpha, 1.0, |u| u.powf(m - 1.0), m - 1.0)
}

/// E[h(r)] for r with density 2πλr·exp(−πλr²), via r = √(t/(πλ)), t ~ Exp(1).
pub fn expect_nearest<F: FnMut(f64) -> f64>(lambda: f64, mut h: F) -> f64 {
    gauss_panels(
        |t| h((t / (PI * lambda)).sqrt()) * (-t).exp(),
        0.0,
        40.0,
        320,
    )
}

/// Same expectation in log-distance coordinates, for integrands concentrated
/// at sub-metre distances.
pub fn expect_nearest_log<F: FnMut(f64) -> f64>(lambda: f64, mut h: F) -> f64 {
    let upper = (40.0 / (PI * lambda)).sqrt().ln();
    gauss_panels(
        |s| {
            let r = s.exp();
            h(r) * 2.0 * PI * lambda * r * r * (-PI * lambda * r * r).exp()
        },
        (1e-6f64).ln(),
        upper,
        600,
    )
}

/// E[h(g)] for g ~ Γ(shape, 1).
pub fn expect_gamma<F: FnMut(f64) -> f64>(shape: u32, mut h: F) -> f64 {
    let k = shape as f64;
    let ln_norm: f64 = (1..shape).map(|i| (i as f64).ln()).sum();
    let upper = k + 60.0;
    gauss_panels(
        |g| {
            if g <= 0.0 {
                return 0.0;
            }
            h(g) * ((k - 1.0) * g.ln() - g - ln_norm).exp()
        },
        0.0,
        upper,
        (upper * 8.0) as usize,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let v = gauss_panels(|x| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1);
        assert!((v - (1024.0 / 10.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn hyp2f1_integral_closed_form() {
        // K = 1, m/α = 1/2: ₂F₁(1, −1/2; 1/2; −c) = 1 + √c·atan(√c)
        for &c in &[0.01f64, 1.0, 50.0] {
            let expected = 1.0 + c.sqrt() * c.sqrt().atan();
            assert!(
                (hyp2f1_integral(1.0, 2.0, 4.0, c) - expected).abs() < 1e-9,
                "c={c}"
            );
        }
    }
}
