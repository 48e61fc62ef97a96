//! Chi-square CDF and quantile via the regularized incomplete gamma
//! function (series expansion plus continued fraction, Lanczos log-gamma).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChiSquareError {
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("degrees of freedom must be at least 1")]
    ZeroDf,
}

// Lanczos g = 7, nine coefficients.
const LANCZOS: [f64; 8] = [
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in LANCZOS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_ITMAX: usize = 500;

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..GAMMA_ITMAX {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cont_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_ITMAX {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_fraction(a, x)
    }
}

/// P(chi2_df <= x).
pub fn chi2_cdf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    reg_lower_gamma(df as f64 / 2.0, x / 2.0)
}

/// Quantile of the chi-square distribution: the q with P(chi2_df <= q) = prob.
///
/// Bracketed bisection on the CDF; the bracket is grown geometrically first,
/// then halved until the interval is at relative machine width.
pub fn chi2_quantile(prob: f64, df: usize) -> Result<f64, ChiSquareError> {
    if df == 0 {
        return Err(ChiSquareError::ZeroDf);
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(ChiSquareError::ProbabilityOutOfRange(prob));
    }
    let d = df as f64;
    let mut lo = 0.0;
    let mut hi = d + 10.0 * (2.0 * d).sqrt() + 10.0;
    while chi2_cdf(hi, df) < prob {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, df) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle for even df: P(chi2_2k <= q) = 1 - e^{-q/2} sum_{j<k} (q/2)^j / j!,
    /// inverted by bisection. Shares nothing with the incomplete-gamma route.
    fn even_df_quantile(prob: f64, df: usize) -> f64 {
        assert!(df % 2 == 0);
        let k = df / 2;
        let cdf = |q: f64| {
            let t = q / 2.0;
            let mut term = 1.0;
            let mut sum = 1.0;
            for j in 1..k {
                term *= t / j as f64;
                sum += term;
            }
            1.0 - (-t).exp() * sum
        };
        let (mut lo, mut hi) = (0.0, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn chi2_median_df2_is_two_ln_two() {
        let q = chi2_quantile(0.5, 2).unwrap();
        assert!((q - 2.0 * 2.0f64.ln()).abs() < 1e-10);
        assert!((q - 1.3862943611).abs() < 1e-9);
    }

    #[test]
    fn chi2_upper_quantiles_match_independent_inversion() {
        // frozen from the closed-form even-df oracle
        let q2 = chi2_quantile(0.975, 2).unwrap();
        assert!((q2 - 7.3777589082).abs() < 1e-9);
        assert!((q2 - even_df_quantile(0.975, 2)).abs() < 1e-9);

        let q4 = chi2_quantile(0.975, 4).unwrap();
        assert!((q4 - 11.1432868).abs() < 1e-6);
        assert!((q4 - even_df_quantile(0.975, 4)).abs() < 1e-9);
    }

    #[test]
    fn quantile_cdf_roundtrip() {
        for df in [1usize, 2, 3, 4, 7, 12, 30] {
            for &p in &[1e-6, 0.01, 0.1, 0.5, 0.9, 0.975, 0.999, 1.0 - 1e-9] {
                let q = chi2_quantile(p, df).unwrap();
                assert!(
                    (chi2_cdf(q, df) - p).abs() <= 1e-9,
                    "roundtrip failed at df={df}, p={p}"
                );
            }
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        assert!(chi2_quantile(0.0, 2).is_err());
        assert!(chi2_quantile(1.0, 2).is_err());
        assert!(chi2_quantile(-0.5, 2).is_err());
        assert!(chi2_quantile(0.5, 0).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }
}
