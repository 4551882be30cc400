//! Gamma-family functions on the real line.
//!
//! `log_gamma` combines a 14-term Lanczos sum (g = 671/128) with Taylor
//! expansions of ln Γ around 1 and 2, where ln Γ vanishes and the Lanczos
//! sum alone cannot deliver a small relative error. Arguments below 1/2
//! go through the reflection formula.

use std::f64::consts::PI;

use crate::error::{GpiError, Result};

const LANCZOS_SHIFT: f64 = 5.242_187_5;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_1;
const LANCZOS_COEF: [f64; 14] = [
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ζ(2), ζ(3), …, ζ(40).
const ZETA: [f64; 39] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_3,
    1.082_323_233_711_138_2,
    1.036_927_755_143_37,
    1.017_343_061_984_449_1,
    1.008_349_277_381_922_8,
    1.004_077_356_197_944_3,
    1.002_008_392_826_082_2,
    1.000_994_575_127_818,
    1.000_494_188_604_119_5,
    1.000_246_086_553_308,
    1.000_122_713_347_578_5,
    1.000_061_248_135_058_7,
    1.000_030_588_236_307,
    1.000_015_282_259_408_7,
    1.000_007_637_197_637_9,
    1.000_003_817_293_265,
    1.000_001_908_212_716_6,
    1.000_000_953_962_033_9,
    1.000_000_476_932_986_8,
    1.000_000_238_450_502_7,
    1.000_000_119_219_926,
    1.000_000_059_608_189,
    1.000_000_029_803_503_5,
    1.000_000_014_901_554_8,
    1.000_000_007_450_711_8,
    1.000_000_003_725_334,
    1.000_000_001_862_659_7,
    1.000_000_000_931_327_4,
    1.000_000_000_465_662_9,
    1.000_000_000_232_831_2,
    1.000_000_000_116_415_5,
    1.000_000_000_058_207_7,
    1.000_000_000_029_103_8,
    1.000_000_000_014_551_9,
    1.000_000_000_007_276,
    1.000_000_000_003_638,
    1.000_000_000_001_819,
    1.000_000_000_000_909_5,
];

/// Width of the Taylor windows around 1 and 2.
const TAYLOR_RADIUS: f64 = 0.2;

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(GpiError::Domain(format!(
            "log_gamma requires a finite positive argument, got {x}"
        )));
    }
    Ok(ln_gamma_pos(x))
}

/// ln Γ(1 + eps) for |eps| < 0.2.
fn ln_gamma_1p_taylor(eps: f64) -> f64 {
    // ln Γ(1+ε) = −γε + Σ_{k≥2} (−1)^k ζ(k) ε^k / k
    let mut sum = 0.0;
    let mut pow = -eps;
    for (i, zeta) in ZETA.iter().enumerate() {
        let k = (i + 2) as f64;
        // pow = (−ε)^k
        pow *= -eps;
        sum += zeta * pow / k;
    }
    -EULER_GAMMA * eps + sum
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    let tmp = x + LANCZOS_SHIFT;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = LANCZOS_C0;
    let mut y = x;
    for c in LANCZOS_COEF {
        y += 1.0;
        ser += c / y;
    }
    tmp + (SQRT_2PI * ser / x).ln()
}

pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection; 1 − x lands in (1/2, 1]
        return (PI / sin_pi(x)).ln() - ln_gamma_pos(1.0 - x);
    }
    if (x - 1.0).abs() < TAYLOR_RADIUS {
        return ln_gamma_1p_taylor(x - 1.0);
    }
    if (x - 2.0).abs() < TAYLOR_RADIUS {
        let eps = x - 2.0;
        return eps.ln_1p() + ln_gamma_1p_taylor(eps);
    }
    ln_gamma_lanczos(x)
}

/// Γ(x) for x > 0.
pub(crate) fn gamma_pos(x: f64) -> f64 {
    ln_gamma_pos(x).exp()
}

/// sin(πx) with argument reduction so that integers map to exact zeros.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    // r in [-1, 1]
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r.abs() <= 0.25 {
        (PI * r).sin()
    } else if r > 0.0 {
        if r <= 0.75 {
            (PI * (0.5 - r)).cos()
        } else {
            (PI * (1.0 - r)).sin()
        }
    } else if r >= -0.75 {
        -(PI * (0.5 + r)).cos()
    } else {
        -(PI * (1.0 + r)).sin()
    }
}

pub(crate) fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// 1/Γ(x) on the whole real line (zero at the poles of Γ).
pub(crate) fn rgamma(x: f64) -> f64 {
    if x > 0.0 {
        (-ln_gamma_pos(x)).exp()
    } else if is_nonpositive_integer(x) {
        0.0
    } else {
        // 1/Γ(x) = sin(πx) Γ(1−x) / π
        sin_pi(x) * gamma_pos(1.0 - x) / PI
    }
}

/// Γ(x) for any real x that is not a pole.
pub(crate) fn gamma_real(x: f64) -> f64 {
    if x > 0.0 {
        gamma_pos(x)
    } else {
        1.0 / rgamma(x)
    }
}

/// Digamma ψ(x) = d/dx ln Γ(x).
pub(crate) fn digamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.0 {
        // ψ(x) = ψ(1−x) − π cot(πx)
        let cot = cos_pi(x) / sin_pi(x);
        return digamma(1.0 - x) - PI * cot;
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // Bernoulli tail of the asymptotic expansion
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + y.ln() - 0.5 * inv - tail
}

fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

/// Rising factorial (α)_n = α(α+1)…(α+n−1), with (α)_0 = 1.
pub fn pochhammer(alpha: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (alpha + k as f64))
}
