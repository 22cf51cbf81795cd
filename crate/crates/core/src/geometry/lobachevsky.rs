//! Clausen function `Cl2` and the Lobachevsky function.
//!
//! On `[0, pi]` we use
//!
//! ```text
//! Cl2(x) = x - x ln x + sum_{n>=1} zeta(2n) / (n (2n+1)) * x^(2n+1) / (2 pi)^(2n)
//! ```
//!
//! whose ratio `(x / 2pi)^2 <= 1/4` gives geometric convergence; terms are
//! added until a bound on the remaining tail falls below `1e-17`.

use std::f64::consts::PI;
use std::sync::OnceLock;

const MAX_TERMS: usize = 40;
const TAIL_BOUND: f64 = 1e-17;

/// `zeta(2n) / (n (2n+1))` for `n = 1..=MAX_TERMS`.
fn coefficients() -> &'static [f64; MAX_TERMS] {
    static TABLE: OnceLock<[f64; MAX_TERMS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = [0.0; MAX_TERMS];
        for (idx, c) in out.iter_mut().enumerate() {
            let n = idx + 1;
            let zeta = match n {
                1 => PI.powi(2) / 6.0,
                2 => PI.powi(4) / 90.0,
                3 => PI.powi(6) / 945.0,
                _ => {
                    // tail beyond 10^4 is below 1e-27 for n >= 4
                    let s = 2 * n as i32;
                    (1..=10_000u32).rev().map(|k| (k as f64).powi(-s)).sum()
                }
            };
            *c = zeta / (n as f64 * (2 * n + 1) as f64);
        }
        out
    })
}

fn clausen2_reduced(x: f64) -> f64 {
    // x in [0, pi]
    if x == 0.0 {
        return 0.0;
    }
    let r = (x / (2.0 * PI)).powi(2);
    let coef = coefficients();
    let mut sum = x - x * x.ln();
    let mut power = x;
    for (idx, &c) in coef.iter().enumerate() {
        power *= r;
        sum += c * power;
        let n = (idx + 2) as f64;
        // remaining terms are bounded by zeta(2) * x * r^n / (n (2n+1) (1 - r))
        let tail = coef[0] * 3.0 * power * r / (n * (2.0 * n + 1.0) * (1.0 - r));
        if tail < TAIL_BOUND {
            break;
        }
    }
    sum
}

/// Clausen function of order two, `Cl2(x) = sum_k sin(kx) / k^2`.
pub fn clausen2(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x.rem_euclid(two_pi);
    let mut sign = 1.0;
    if y > PI {
        y = two_pi - y;
        sign = -1.0;
    }
    sign * clausen2_reduced(y)
}

/// Lobachevsky function `-int_0^theta ln|2 sin t| dt = Cl2(2 theta) / 2`.
/// Odd and `pi`-periodic.
pub fn lobachevsky(theta: f64) -> f64 {
    0.5 * clausen2(2.0 * theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Catalan's constant
    const CATALAN: f64 = 0.915_965_594_177_219_015_054_603_514_932_384_110_774;

    #[test]
    fn zeros() {
        assert_eq!(lobachevsky(0.0), 0.0);
        assert!(lobachevsky(PI / 2.0).abs() < 1e-15);
        assert!(lobachevsky(PI).abs() < 1e-15);
    }

    #[test]
    fn catalan_value() {
        assert!((clausen2(PI / 2.0) - CATALAN).abs() < 1e-15);
        assert!((lobachevsky(PI / 4.0) - CATALAN / 2.0).abs() < 1e-15);
    }

    #[test]
    fn max_at_pi_over_six() {
        // Lobachevsky attains its max 0.5074708... at pi/6
        let m = lobachevsky(PI / 6.0);
        assert!((m - 0.507_470_803_204_826_8).abs() < 1e-13);
        assert!(lobachevsky(PI / 6.0 + 1e-3) < m && lobachevsky(PI / 6.0 - 1e-3) < m);
    }

    #[test]
    fn odd_and_periodic() {
        for &t in &[0.1, 0.7, 1.3, 2.9, -4.0, 11.0] {
            assert!((lobachevsky(-t) + lobachevsky(t)).abs() < 1e-15);
            assert!((lobachevsky(t + PI) - lobachevsky(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn slow_series_agrees() {
        // truncated Fourier series; the tail is O(1 / (n^2 x))
        for &x in &[0.3, 1.0, 2.0, 3.0] {
            let n = 200_000;
            let s: f64 = (1..=n).map(|k| (k as f64 * x).sin() / (k as f64).powi(2)).sum();
            assert!((s - clausen2(x)).abs() < 1e-8, "x = {x}");
        }
    }
}
