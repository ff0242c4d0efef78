//! Normal distribution and regularized incomplete beta function.

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn poly(coef: &[f64; 8], r: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * r + c)
}

/// Inverse standard normal CDF (Wichura's AS241, PPND16), accurate to
/// about 1e-16 relative over the whole open unit interval.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfDomain(format!(
            "normal quantile needs p in (0, 1), got {p}"
        )));
    }
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        1.331_416_678_917_843_8e2,
        1.971_590_950_306_551_4e3,
        1.373_169_376_550_946e4,
        4.592_195_393_154_987e4,
        6.726_577_092_700_87e4,
        3.343_057_558_358_813e4,
        2.509_080_928_730_122_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091e1,
        6.871_870_074_920_579e2,
        5.394_196_021_424_751e3,
        2.121_379_430_158_659_7e4,
        3.930_789_580_009_271e4,
        2.872_908_573_572_194_3e4,
        5.226_495_278_852_854e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_5,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        2.417_807_251_774_506e-1,
        2.272_384_498_926_918_4e-2,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        6.897_673_349_851e-1,
        1.481_039_764_274_800_8e-1,
        1.519_866_656_361_645_7e-2,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_9e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        2.965_605_718_285_048_7e-1,
        2.653_218_952_657_612_4e-2,
        1.242_660_947_388_078_4e-3,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879e-1,
        1.369_298_809_227_358e-1,
        1.487_536_129_085_061_5e-2,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_7e-15,
    ];

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return Ok(q * poly(&A, r) / poly(&B, r));
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    Ok(if q < 0.0 { -z } else { z })
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Continued fraction evaluated with the modified Lentz method, using the
/// reflection `I_x(a,b) = 1 - I_{1-x}(b,a)` past the mean so the fraction
/// always converges quickly.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::OutOfDomain(format!(
            "incomplete beta needs a, b > 0, got a = {a}, b = {b}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(format!(
            "incomplete beta needs x in [0, 1], got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return Ok(1.0 - beta_fraction(1.0 - x, b, a));
    }
    Ok(beta_fraction(x, a, b))
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 2000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp() / a;

    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - (a + b) * x / (a + 1.0));
    let mut f = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let even = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        d = 1.0 / guard(1.0 + even * d);
        c = guard(1.0 + even / c);
        f *= c * d;

        let odd = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 / guard(1.0 + odd * d);
        c = guard(1.0 + odd / c);
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    front * f
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on the erfc-based CDF; shares nothing with AS241.
    fn quantile_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut s = f(a) + f(b);
        for k in 1..panels {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn quantile_known_points() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let z975 = quantile_by_bisection(0.975);
        assert!((z975 - 1.959_964).abs() < 1e-6);
        assert!((normal_quantile(0.975).unwrap() - z975).abs() < 1e-9);
        let z95 = quantile_by_bisection(0.95);
        assert!((z95 - 1.644_854).abs() < 1e-6);
        assert!((normal_quantile(0.95).unwrap() - z95).abs() < 1e-9);
        assert!((normal_quantile(0.75).unwrap() - 0.674_490).abs() < 1e-6);
    }

    #[test]
    fn quantile_matches_bisection_across_range() {
        for k in 1..2000 {
            let p = k as f64 / 2000.0;
            let z = normal_quantile(p).unwrap();
            assert!((z - quantile_by_bisection(p)).abs() < 1e-9, "p = {p}");
        }
        for p in [1e-300, 1e-100, 1e-20, 1e-10, 1e-5] {
            let z = normal_quantile(p).unwrap();
            assert!(
                ((z - quantile_by_bisection(p)) / z).abs() < 1e-12,
                "p = {p}"
            );
        }
    }

    #[test]
    fn quantile_round_trips_cdf() {
        let mut z = -6.0;
        while z <= 6.0 {
            let back = normal_quantile(normal_cdf(z)).unwrap();
            assert!((back - z).abs() < 1e-7, "z = {z}");
            z += 0.01;
        }
    }

    #[test]
    fn quantile_rejects_out_of_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(normal_quantile(p), Err(Error::OutOfDomain(_))));
        }
    }

    #[test]
    fn incomplete_beta_endpoints_and_closed_form() {
        for (a, b) in [(0.5, 0.5), (1.0, 3.0), (7.5, 0.5)] {
            assert_eq!(regularized_incomplete_beta(1.0, a, b).unwrap(), 1.0);
            assert_eq!(regularized_incomplete_beta(0.0, a, b).unwrap(), 0.0);
        }
        // I_x(1, 1/2) = 1 - sqrt(1 - x).
        let v = regularized_incomplete_beta(0.75, 1.0, 0.5).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
        for k in 1..100 {
            let x = k as f64 / 100.0;
            let v = regularized_incomplete_beta(x, 1.0, 0.5).unwrap();
            let exact = 1.0 - (1.0 - x).sqrt();
            assert!(((v - exact) / exact).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn incomplete_beta_matches_quadrature() {
        let (a, b, x) = (2.5, 0.5, 0.3);
        let kernel = |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        let partial = simpson(kernel, 0.0, x, 20_000);
        // t = 1 - s^2 removes the endpoint singularity of the full integral.
        let full = simpson(|s: f64| 2.0 * (1.0 - s * s).powf(a - 1.0), 0.0, 1.0, 20_000);
        let oracle = partial / full;
        let v = regularized_incomplete_beta(x, a, b).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn incomplete_beta_symmetry() {
        for (x, a, b) in [(0.2, 3.0, 4.5), (0.9, 0.7, 12.0), (0.5, 50.0, 0.5)] {
            let lhs = regularized_incomplete_beta(x, a, b).unwrap();
            let rhs = 1.0 - regularized_incomplete_beta(1.0 - x, b, a).unwrap();
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn incomplete_beta_rejects_out_of_domain() {
        assert!(regularized_incomplete_beta(1.2, 1.0, 1.0).is_err());
        assert!(regularized_incomplete_beta(0.5, 0.0, 1.0).is_err());
        assert!(regularized_incomplete_beta(0.5, 1.0, -1.0).is_err());
    }
}
