//! Gauss hypergeometric function 2F1(a, b; c; z) for real parameters and
//! real z in [−1, 1].
//!
//! Evaluation regimes:
//!
//! | z                 | route                                                        |
//! |-------------------|--------------------------------------------------------------|
//! | a or b ∈ {0,−1,…} | terminating polynomial, any z                                |
//! | [−1/2, 1/2]       | direct power series                                          |
//! | [−1, −1/2)        | Pfaff: (1−z)^{−a} F(a, c−b; c; z/(z−1))                      |
//! | (1/2, 0.9]        | Euler: (1−z)^{c−a−b} F(c−a, c−b; c; z)                       |
//! | (0.9, 1)          | connection to 1−z (logarithmic form when c−a−b is integral) |
//! | 1                 | Gauss summation, requires c−a−b > 0                          |

use serde::{Deserialize, Serialize};

use super::gamma::{digamma, gamma_real, is_nonpositive_integer, ln_gamma_pos, rgamma};
use crate::error::{GpiError, Result};

/// Maximum number of series terms before giving up.
pub const SERIES_TERM_CAP: usize = 10_000;
/// Relative size of a term at which the series is considered converged.
pub const SERIES_REL_TOL: f64 = 1e-16;

const EULER_REGIME_START: f64 = 0.5;
const CONNECTION_REGIME_START: f64 = 0.9;
/// Distance from an integer below which c−a−b is treated as "nearly integral".
const NEAR_INTEGER: f64 = 1e-3;
const INTERP_STEP: f64 = 2.5e-3;

/// Parameters of F(a, b; c; z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

impl HyperParams {
    pub fn new(a: f64, b: f64, c: f64, z: f64) -> Result<Self> {
        let p = HyperParams { a, b, c, z };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if ![self.a, self.b, self.c, self.z].iter().all(|v| v.is_finite()) {
            return Err(GpiError::Domain(format!("non-finite 2F1 parameter in {self:?}")));
        }
        if is_nonpositive_integer(self.c) {
            return Err(GpiError::Domain(format!(
                "2F1 lower parameter c = {} is a non-positive integer",
                self.c
            )));
        }
        if self.z.abs() > 1.0 {
            return Err(GpiError::Domain(format!("2F1 argument |z| = {} exceeds 1", self.z.abs())));
        }
        Ok(())
    }

    /// c − a − b, the exponent governing behaviour at z = 1.
    pub fn excess(&self) -> f64 {
        self.c - self.a - self.b
    }
}

/// F(a, b; c; z).
pub fn gauss_2f1(p: &HyperParams) -> Result<f64> {
    p.validate()?;
    eval(p.a, p.b, p.c, p.z)
}

/// F(a, b; c; 1) = Γ(c)Γ(c−a−b) / (Γ(c−a)Γ(c−b)), valid for c − a − b > 0.
pub fn gauss_2f1_at_one(a: f64, b: f64, c: f64) -> Result<f64> {
    if a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    let s = c - a - b;
    if !(s > 0.0) {
        return Err(GpiError::Domain(format!(
            "2F1 diverges at z = 1 unless c − a − b > 0 (got {s})"
        )));
    }
    if is_nonpositive_integer(c) {
        return Err(GpiError::Domain(format!("2F1 lower parameter c = {c} is a non-positive integer")));
    }
    let (ca, cb) = (c - a, c - b);
    if c > 0.0 && ca > 0.0 && cb > 0.0 {
        Ok((ln_gamma_pos(c) + ln_gamma_pos(s) - ln_gamma_pos(ca) - ln_gamma_pos(cb)).exp())
    } else {
        Ok(gamma_real(c) * gamma_real(s) * rgamma(ca) * rgamma(cb))
    }
}

/// d/dz F(a, b; c; z) = (ab/c) F(a+1, b+1; c+1; z).
pub fn d_gauss_2f1_dz(p: &HyperParams) -> Result<f64> {
    p.validate()?;
    if p.a == 0.0 || p.b == 0.0 {
        return Ok(0.0);
    }
    let shifted = HyperParams::new(p.a + 1.0, p.b + 1.0, p.c + 1.0, p.z)?;
    Ok(p.a * p.b / p.c * gauss_2f1(&shifted)?)
}

fn terminating_degree(a: f64, b: f64) -> Option<u32> {
    let deg = |x: f64| is_nonpositive_integer(x).then(|| (-x) as u32);
    match (deg(a), deg(b)) {
        (Some(m), Some(n)) => Some(m.min(n)),
        (Some(m), None) | (None, Some(m)) => Some(m),
        (None, None) => None,
    }
}

fn eval(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(1.0);
    }
    if let Some(m) = terminating_degree(a, b) {
        return Ok(polynomial(a, b, c, z, m));
    }
    if z == 1.0 {
        return gauss_2f1_at_one(a, b, c);
    }
    if z < -EULER_REGIME_START {
        // Pfaff: maps [−1, −1/2) into (1/3, 1/2]
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * series_or_polynomial(a, c - b, c, w)?);
    }
    if z <= EULER_REGIME_START {
        return series(a, b, c, z);
    }
    if z <= CONNECTION_REGIME_START {
        return Ok((1.0 - z).powf(c - a - b) * series_or_polynomial(c - a, c - b, c, z)?);
    }
    near_one(a, b, c, z)
}

fn series_or_polynomial(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    match terminating_degree(a, b) {
        Some(m) => Ok(polynomial(a, b, c, z, m)),
        None => series(a, b, c, z),
    }
}

/// Exact sum of the m+1 terms of a terminating series.
fn polynomial(a: f64, b: f64, c: f64, z: f64, m: u32) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..m {
        let k = n as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
    }
    sum
}

fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..SERIES_TERM_CAP {
        let k = n as f64;
        let ratio = (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        term *= ratio;
        sum += term;
        if term.abs() <= SERIES_REL_TOL * sum.abs() && ratio.abs() < 1.0 {
            return Ok(sum);
        }
    }
    Err(GpiError::numeric(
        format!("2F1 series ({a}, {b}; {c}; {z}) did not converge in {SERIES_TERM_CAP} terms"),
        sum,
    ))
}

/// z in (0.9, 1): expand around z = 1 in powers of w = 1 − z.
fn near_one(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let w = 1.0 - z;
    let m = c - a - b;
    let k = m.round();
    let eps = m - k;
    if eps == 0.0 {
        return integral_excess(a, b, c, w, k);
    }
    if eps.abs() >= NEAR_INTEGER {
        return generic_excess(a, b, c, w);
    }
    // Nearly integral excess: the two terms of the generic formula each blow
    // up like 1/eps. Interpolate in a through nodes where the excess is
    // exactly k or at least INTERP_STEP away from it.
    let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0].map(|j: f64| j * INTERP_STEP);
    let mut values = [0.0; 5];
    for (v, &e) in values.iter_mut().zip(nodes.iter()) {
        let a_node = c - b - (k + e);
        *v = if e == 0.0 {
            integral_excess(a_node, b, c, w, k)?
        } else {
            generic_excess(a_node, b, c, w)?
        };
    }
    Ok(lagrange(&nodes, &values, eps))
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut total = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut basis = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                basis *= (x - xj) / (xi - xj);
            }
        }
        total += basis * yi;
    }
    total
}

/// Connection formula for non-integral m = c − a − b.
fn generic_excess(a: f64, b: f64, c: f64, w: f64) -> Result<f64> {
    let m = c - a - b;
    let first = gamma_real(c) * gamma_real(m) * rgamma(c - a) * rgamma(c - b);
    let second = gamma_real(c) * gamma_real(-m) * rgamma(a) * rgamma(b);
    let mut total = 0.0;
    if first != 0.0 {
        total += first * series_or_polynomial(a, b, 1.0 - m, w)?;
    }
    if second != 0.0 {
        total += second * w.powf(m) * series_or_polynomial(c - a, c - b, m + 1.0, w)?;
    }
    Ok(total)
}

/// Logarithmic connection formula for integral m = c − a − b.
fn integral_excess(a: f64, b: f64, c: f64, w: f64, m: f64) -> Result<f64> {
    if m < 0.0 {
        // Euler flips the sign of the excess
        return Ok(w.powf(m) * integral_excess(c - a, c - b, c, w, -m)?);
    }
    let k = m as u32;
    let mut total = 0.0;

    if k > 0 {
        // Γ(k)Γ(c)/(Γ(a+k)Γ(b+k)) Σ_{n<k} (a)_n (b)_n / (n! (1−k)_n) wⁿ
        let pre = gamma_real(m) * gamma_real(c) * rgamma(a + m) * rgamma(b + m);
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 0..k.saturating_sub(1) {
            let x = n as f64;
            term *= (a + x) * (b + x) / ((x + 1.0) * (1.0 - m + x)) * w;
            sum += term;
        }
        total += pre * sum;
    }

    let pre = gamma_real(c) * rgamma(a) * rgamma(b);
    if pre == 0.0 {
        return Ok(total);
    }
    // −(−w)^k Γ(c)/(Γ(a)Γ(b)) Σ (a+k)_n (b+k)_n / (n! (n+k)!) wⁿ
    //     × [ln w − ψ(n+1) − ψ(n+k+1) + ψ(a+n+k) + ψ(b+n+k)]
    let ln_w = w.ln();
    let mut psi_n1 = digamma(1.0);
    let mut psi_nk1 = digamma(m + 1.0);
    let mut psi_a = digamma(a + m);
    let mut psi_b = digamma(b + m);
    let mut coef = rgamma(m + 1.0); // 1/(0! k!)
    let mut sum = 0.0;
    let mut converged = false;
    for n in 0..SERIES_TERM_CAP {
        let x = n as f64;
        let bracket = ln_w - psi_n1 - psi_nk1 + psi_a + psi_b;
        let term = coef * bracket;
        sum += term;
        if n > 0 && term.abs() <= SERIES_REL_TOL * sum.abs() {
            converged = true;
            break;
        }
        coef *= (a + m + x) * (b + m + x) / ((x + 1.0) * (x + m + 1.0)) * w;
        psi_n1 += 1.0 / (x + 1.0);
        psi_nk1 += 1.0 / (x + m + 1.0);
        psi_a += 1.0 / (a + m + x);
        psi_b += 1.0 / (b + m + x);
    }
    if !converged {
        return Err(GpiError::numeric("logarithmic 2F1 expansion did not converge", sum));
    }
    let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
    total += sign * w.powi(k as i32) * pre * sum;
    Ok(total)
}
