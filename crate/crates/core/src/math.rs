//! Small numeric helpers: factorials, binomials, the inverse standard-normal
//! CDF, and transcendental shims that route to `std` or `libm`.

/// Largest `n` for which `n!` fits in an `f64`.
pub const MAX_FACTORIAL: usize = 170;

const FACTORIALS: [f64; MAX_FACTORIAL + 1] = build_factorials();

const fn build_factorials() -> [f64; MAX_FACTORIAL + 1] {
    let mut table = [1.0f64; MAX_FACTORIAL + 1];
    let mut n = 1;
    while n <= MAX_FACTORIAL {
        table[n] = table[n - 1] * n as f64;
        n += 1;
    }
    table
}

/// `n!` as `f64`. Exact up to `n = 18`, correctly rounded beyond.
#[inline]
pub fn factorial(n: usize) -> f64 {
    FACTORIALS[n]
}

/// Binomial coefficient `C(n, k)` as `f64`.
#[inline]
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    FACTORIALS[n] / (FACTORIALS[k] * FACTORIALS[n - k])
}

/// Probability of `k` successes in `n` Bernoulli trials with success
/// probability `p` (binomial thinning weight).
#[inline]
pub fn binomial_pmf(k: usize, n: usize, p: f64) -> f64 {
    binomial(n, k) * powi(p, k as i32) * powi(1.0 - p, (n - k) as i32)
}

/// Binary Shannon entropy `-p log2 p - (1-p) log2 (1-p)` with the usual
/// convention `0 log 0 = 0`. Clamps to `[0, 1]` outside the domain.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * log2(p) - (1.0 - p) * log2(1.0 - p)
}

/// Inverse CDF of the standard normal distribution.
///
/// Wichura's PPND16 rational approximation (algorithm AS 241), accurate to
/// about 1e-16 relative over the full open interval. Returns `-INFINITY` /
/// `INFINITY` at the endpoints and NaN outside `[0, 1]`.
pub fn inv_norm_cdf(p: f64) -> f64 {
    if p.is_nan() || p < 0.0 || p > 1.0 {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }

    let q = p - 0.5;
    if abs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(r, &A_CENTRAL) / horner(r, &B_CENTRAL);
    }

    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = sqrt(-ln(r));
    let value = if r <= 5.0 {
        let r = r - 1.6;
        horner(r, &A_TAIL) / horner(r, &B_TAIL)
    } else {
        let r = r - 5.0;
        horner(r, &A_FAR_TAIL) / horner(r, &B_FAR_TAIL)
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

#[inline]
fn horner(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

// AS 241 coefficient sets, lowest order first.
const A_CENTRAL: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B_CENTRAL: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const A_TAIL: [f64; 8] = [
    1.423_437_110_749_683_577_3e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605e0,
    1.270_458_252_452_368_382_6e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_3e-2,
    7.745_450_142_783_414_076_4e-4,
];
const B_TAIL: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_9e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_7e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_2e-9,
];
const A_FAR_TAIL: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_2e-5,
    2.010_334_399_292_288_132_6e-7,
];
const B_FAR_TAIL: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_377e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_3e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_6e-15,
];

// Transcendental shims. With `std` these are the intrinsics; without it they
// come from `libm` so the crate stays `no_std`-compatible.

macro_rules! float_shim {
    ($(($name:ident, $std:ident, $libm:path)),* $(,)?) => {
        $(
            #[inline]
            pub fn $name(x: f64) -> f64 {
                #[cfg(feature = "std")]
                {
                    x.$std()
                }
                #[cfg(not(feature = "std"))]
                {
                    $libm(x)
                }
            }
        )*
    };
}

float_shim!(
    (exp, exp, libm::exp),
    (ln, ln, libm::log),
    (log2, log2, libm::log2),
    (sqrt, sqrt, libm::sqrt),
    (abs, abs, libm::fabs),
    (asin, asin, libm::asin),
    (acos, acos, libm::acos),
    (cos, cos, libm::cos),
    (sin, sin, libm::sin),
);

/// `base^exp` for integer exponents.
#[inline]
pub fn powi(base: f64, exp: i32) -> f64 {
    #[cfg(feature = "std")]
    {
        base.powi(exp)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(base, exp as f64)
    }
}

/// `base^exp` for real exponents.
#[inline]
pub fn powf(base: f64, exp: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        base.powf(exp)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(base, exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_exact_small() {
        assert_eq!(factorial(0), 1.0);
        assert_eq!(factorial(5), 120.0);
        assert_eq!(factorial(18), 6_402_373_705_728_000.0);
    }

    #[test]
    fn binomial_symmetry_and_edges() {
        assert_eq!(binomial(10, 0), 1.0);
        assert_eq!(binomial(10, 10), 1.0);
        assert_eq!(binomial(10, 3), binomial(10, 7));
        assert_eq!(binomial(40, 20), 137_846_528_820.0);
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn binomial_pmf_normalizes() {
        for &p in &[0.0, 0.3, 0.75, 1.0] {
            let total: f64 = (0..=25).map(|k| binomial_pmf(k, 25, p)).sum();
            assert!((total - 1.0).abs() < 1e-14, "p={p}: {total}");
        }
    }

    #[test]
    fn inv_norm_cdf_known_points() {
        assert_eq!(inv_norm_cdf(0.5), 0.0);
        // Phi^-1(1 - 1e-7), the quantile the default failure probability uses.
        assert!((inv_norm_cdf(1.0 - 1e-7) - 5.199_337_582_290_661).abs() < 1e-9);
        assert!((inv_norm_cdf(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((inv_norm_cdf(0.025) + 1.959_963_984_540_054).abs() < 1e-12);
        assert_eq!(inv_norm_cdf(0.0), f64::NEG_INFINITY);
        assert_eq!(inv_norm_cdf(1.0), f64::INFINITY);
        assert!(inv_norm_cdf(-0.1).is_nan());
    }

    #[test]
    fn inv_norm_cdf_matches_statrs() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut p = 1e-12;
        while p < 1.0 {
            let ours = inv_norm_cdf(p);
            let reference = normal.inverse_cdf(p);
            assert!(
                (ours - reference).abs() <= 1e-8 * (1.0 + reference.abs()),
                "p={p}: {ours} vs {reference}"
            );
            p *= 1.7;
        }
    }
}
