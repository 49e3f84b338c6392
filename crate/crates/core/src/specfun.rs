//! Log-gamma, digamma and trigamma for positive real arguments.
//!
//! All three shift the argument upward with the standard recurrences until it
//! is large enough for the Stirling-type asymptotic series to converge to
//! double precision, then evaluate the series.

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Argument above which the asymptotic series are used directly.
const ASYMPTOTIC_FROM: f64 = 15.0;

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} requires a finite x > 0, got {x}")))
    }
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    let mut z = x;
    let mut shift = 1.0;
    while z < ASYMPTOTIC_FROM {
        shift *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // B_{2k} / (2k (2k - 1) z^{2k - 1})
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series - shift.ln()
}

/// ψ(x) = d/dx ln Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    let mut z = x;
    let mut acc = 0.0;
    while z < ASYMPTOTIC_FROM {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    acc + z.ln() - 0.5 / z - series
}

/// ψ'(x), the first derivative of the digamma function, for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive("trigamma", x)?;
    Ok(trigamma_unchecked(x))
}

pub(crate) fn trigamma_unchecked(x: f64) -> f64 {
    let mut z = x;
    let mut acc = 0.0;
    while z < ASYMPTOTIC_FROM {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // 1/z + 1/(2z^2) + sum B_{2k} / z^{2k+1}
    let series = inv
        * (1.0
            + 0.5 * inv
            + inv2
                * (1.0 / 6.0
                    - inv2
                        * (1.0 / 30.0
                            - inv2
                                * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0)))))));
    acc + series
}

#[cfg(test)]
mod tests {
    use super::*;

    /// (x, ln Γ(x), ψ(x), ψ'(x)) evaluated with 40-digit arbitrary precision.
    const REFERENCE: &[(f64, f64, f64, f64)] = &[
        (
            0.001,
            6.907_178_885_383_853_7,
            -1000.575_571_931_810_3,
            1_000_001.642_533_195_9,
        ),
        (
            0.01,
            4.599_479_878_042_021_7,
            -100.560_885_457_868_67,
            10_001.621_213_528_313,
        ),
        (
            0.5,
            0.572_364_942_924_700_09,
            -1.963_510_026_021_423_5,
            4.934_802_200_544_679_3,
        ),
        (1.0, 0.0, -0.577_215_664_901_532_86, 1.644_934_066_848_226_4),
        (2.0, 0.0, 0.422_784_335_098_467_14, 0.644_934_066_848_226_44),
        (
            3.7,
            1.428_072_326_665_387_9,
            1.167_153_539_361_511_4,
            0.310_037_857_670_038_32,
        ),
        (
            7.5,
            7.534_364_236_758_733,
            1.946_757_484_246_086_8,
            0.142_615_896_696_703_8,
        ),
        (
            10.0,
            12.801_827_480_081_47,
            2.251_752_589_066_721_1,
            0.105_166_335_681_685_75,
        ),
        (
            25.3,
            55.746_181_183_584_59,
            3.210_911_380_182_535_9,
            0.040_317_120_341_256_497,
        ),
        (
            123.4,
            469.336_097_442_190_56,
            4.811_373_775_116_277_4,
            0.008_136_651_610_865_263_7,
        ),
        (
            1000.0,
            5905.220_423_209_181,
            6.907_255_195_648_812,
            0.001_000_500_166_666_633_3,
        ),
        (
            1e5,
            1_051_287.708_973_656_9,
            11.512_920_464_961_895,
            1.000_005_000_016_666_7e-5,
        ),
        (
            1e6,
            12_815_504.569_147_612,
            13.815_510_057_964_191,
            1.000_000_500_000_166_7e-6,
        ),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for &(x, lg, dg, tg) in REFERENCE {
            let got = log_gamma(x).unwrap();
            // ln Γ grows like x ln x; at 1e6 a single ulp is already ~2e-9.
            let tol = 1e-12_f64.max(lg.abs() * 4.0 * f64::EPSILON);
            assert!((got - lg).abs() <= tol, "log_gamma({x}) = {got}, want {lg}");
            let got = digamma(x).unwrap();
            assert!((got - dg).abs() <= 1e-10 * dg.abs(), "digamma({x}) = {got}, want {dg}");
            let got = trigamma(x).unwrap();
            assert!((got - tg).abs() <= 1e-10 * tg.abs(), "trigamma({x}) = {got}, want {tg}");
        }
    }

    #[test]
    fn named_values() {
        assert_eq!(log_gamma(1.0).unwrap().abs() < 1e-14, true);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-12);
        // Γ(1/2) = √π
        let half = 0.5 * std::f64::consts::PI.ln();
        assert!((log_gamma(0.5).unwrap() - half).abs() < 1e-12);
        assert!((digamma(2.0).unwrap() - digamma(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((digamma(1000.0).unwrap() - 1000f64.ln() + 0.0005).abs() < 1e-7);
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((trigamma(1.0).unwrap() - pi2_6).abs() < 1e-12);
        assert!((trigamma(2.0).unwrap() - (trigamma(1.0).unwrap() - 1.0)).abs() < 1e-12);
        assert!((trigamma(1e6).unwrap() * 1e6 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn digamma_near_its_root() {
        // ψ has its only positive root at x0 ≈ 1.46163; relative error is
        // meaningless there, so check the absolute error instead.
        let x0 = 1.461_632_144_968_362_3;
        assert!(digamma(x0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn rejects_non_positive() {
        for bad in [0.0, -1.0, -0.5, f64::NAN, f64::INFINITY] {
            assert!(log_gamma(bad).is_err());
            assert!(digamma(bad).is_err());
            assert!(trigamma(bad).is_err());
        }
    }

    fn log_grid() -> impl Iterator<Item = f64> {
        (0..=80).map(|i| 10f64.powf(-3.0 + 8.0 * i as f64 / 80.0))
    }

    #[test]
    fn recurrences_hold() {
        for x in log_grid() {
            let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
            assert!(
                (d - 1.0 / x).abs() <= 1e-10 * (1.0 / x).max(1.0),
                "psi recurrence at {x}"
            );
            let l = log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap();
            let scale = log_gamma(x + 1.0).unwrap().abs().max(1.0);
            assert!((l - x.ln()).abs() <= 1e-10 * scale, "lgamma recurrence at {x}");
            let t = trigamma(x).unwrap() - trigamma(x + 1.0).unwrap();
            assert!((t - 1.0 / (x * x)).abs() <= 1e-10 * (1.0 / (x * x)).max(1.0));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for i in 0..=40 {
            let x = 0.5 * (200f64).powf(i as f64 / 40.0);
            let h = 1e-5 * x;
            let fd = (log_gamma(x + h).unwrap() - log_gamma(x - h).unwrap()) / (2.0 * h);
            let psi = digamma(x).unwrap();
            assert!((fd - psi).abs() <= 1e-6 * psi.abs().max(1e-2), "digamma vs fd at {x}");
            let fd = (digamma(x + h).unwrap() - digamma(x - h).unwrap()) / (2.0 * h);
            let tri = trigamma(x).unwrap();
            assert!((fd - tri).abs() <= 1e-6 * tri.abs(), "trigamma vs fd at {x}");
        }
    }
}
