//! Logarithm of the modified Bessel function of the first kind.
//!
//! The ascending series `I_ν(x) = (x/2)^ν Σ_k (x²/4)^k / (k! Γ(ν+k+1))` has
//! only positive terms, so it is summed without cancellation. Terms are kept
//! in a rescaled linear domain so that arguments up to 1e4 (where `I_ν`
//! overflows an f64 by thousands of orders of magnitude) stay representable.

use statrs::function::gamma::ln_gamma;

const RESCALE_AT: f64 = 1e200;
const LN_RESCALE: f64 = 460.517_018_598_809_1; // ln(1e200)

/// `ln I_ν(x)` for `ν ≥ 0`, `x > 0`.
///
/// Returns `-inf` for `x == 0` and `ν > 0`, and `0` for `x == ν == 0`.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    debug_assert!(nu >= 0.0 && x >= 0.0);
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let q = 0.25 * x * x;
    // Terms grow while q > (k+1)(ν+k+1); locate the peak to bound the loop.
    let peak = 0.5 * (-(nu + 2.0) + ((nu + 2.0).powi(2) - 4.0 * (nu + 1.0 - q)).max(0.0).sqrt());
    let peak = peak.max(0.0);

    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut scale = 0.0f64; // ln of the factor removed from `term` and `sum`
    let mut k = 0.0f64;
    loop {
        term *= q / ((k + 1.0) * (nu + k + 1.0));
        k += 1.0;
        sum += term;
        if term > RESCALE_AT {
            term /= RESCALE_AT;
            sum /= RESCALE_AT;
            scale += LN_RESCALE;
        }
        if k > peak && term <= sum * 1e-17 {
            break;
        }
    }
    nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + sum.ln() + scale
}

/// Exponentially scaled `I_ν(x)·e^{-x}`; finite wherever `ln I_ν(x) − x` is.
pub fn bessel_i_scaled(nu: f64, x: f64) -> f64 {
    (log_bessel_i(nu, x) - x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `I_n(x) = (1/π) ∫_0^π e^{x cos θ} cos(nθ) dθ` for integer n, integrated
    /// with composite Simpson on a fine grid. Scaled by e^{-x} for range.
    fn integral_oracle_scaled(n: u32, x: f64) -> f64 {
        let m = 20_000usize;
        let h = PI / m as f64;
        let f = |t: f64| (x * (t.cos() - 1.0)).exp() * (n as f64 * t).cos();
        let mut s = f(0.0) + f(PI);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0 / PI
    }

    #[test]
    fn half_order_closed_form() {
        // I_{1/2}(x) = sqrt(2/(πx)) sinh x
        for &x in &[1e-3, 0.1, 1.0, 10.0, 100.0, 700.0] {
            let exact = 0.5 * (2.0 / (PI * x)).ln() + x + (-(-2.0 * x).exp_m1()).ln() - 2f64.ln();
            let got = log_bessel_i(0.5, x);
            assert!((got - exact).abs() < 1e-12 * exact.abs().max(1.0), "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn integer_orders_match_quadrature() {
        for &n in &[0u32, 1, 5, 31] {
            for &x in &[0.5, 3.0, 25.0, 80.0] {
                let oracle = integral_oracle_scaled(n, x);
                if oracle < 1e-8 {
                    continue;
                }
                let got = bessel_i_scaled(n as f64, x);
                assert!(((got - oracle) / oracle).abs() < 1e-10, "n={n} x={x}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn large_arguments_stay_finite() {
        for &nu in &[0.5, 31.0, 511.0] {
            for &x in &[1e3, 5e3, 1e4] {
                let v = log_bessel_i(nu, x);
                assert!(v.is_finite());
                // Leading asymptotic: ln I ≈ x − ½ ln(2πx) for x ≫ ν².
                if x > 100.0 * nu * nu {
                    assert!((v - (x - 0.5 * (2.0 * PI * x).ln())).abs() < 1e-2);
                }
            }
        }
    }

    #[test]
    fn recurrence_holds_at_high_order() {
        // I_{ν−1}(x) − I_{ν+1}(x) = (2ν/x) I_ν(x)
        for &(nu, x) in &[(31.0, 50.0), (255.0, 300.0), (511.0, 9000.0)] {
            let lm = log_bessel_i(nu - 1.0, x);
            let l0 = log_bessel_i(nu, x);
            let lp = log_bessel_i(nu + 1.0, x);
            let lhs = (lm - l0).exp() - (lp - l0).exp();
            let rhs = 2.0 * nu / x;
            assert!(((lhs - rhs) / rhs).abs() < 1e-9, "nu={nu} x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn zero_argument() {
        assert_eq!(log_bessel_i(0.0, 0.0), 0.0);
        assert_eq!(log_bessel_i(1.5, 0.0), f64::NEG_INFINITY);
    }
}
