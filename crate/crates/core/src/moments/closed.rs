use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{GpiError, Result};
use crate::linalg::SymMatrix;
use crate::specfun::{gauss_2f1, ln_gamma_pos, HyperParams};

/// Largest Σ m_i accepted by [`isserlis_even_moment`].
pub const ISSERLIS_DEGREE_CAP: u32 = 12;

/// E|X|^α for X ~ N(0, variance): (2·variance)^{α/2} Γ((α+1)/2) / √π.
pub fn abs_moment_1d(alpha: f64, variance: f64) -> Result<f64> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(GpiError::Domain(format!("E|X|^α is infinite for α = {alpha} ≤ −1")));
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(GpiError::Domain(format!("variance must be positive, got {variance}")));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let log = 0.5 * alpha * (2.0 * variance).ln() + ln_gamma_pos(0.5 * (alpha + 1.0)) - 0.5 * PI.ln();
    Ok(log.exp())
}

/// E[|Y₂|^{α₂}|Y₃|^{α₃}] for a centred bivariate normal with the given
/// variances and correlation ρ:
/// E|Y₂|^{α₂} · E|Y₃|^{α₃} · ₂F₁(−α₂/2, −α₃/2; 1/2; ρ²).
pub fn nabeya_bivariate(alpha2: f64, alpha3: f64, var2: f64, var3: f64, rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0) {
        return Err(GpiError::Domain(format!("correlation {rho} outside [−1, 1]")));
    }
    let m2 = abs_moment_1d(alpha2, var2)?;
    let m3 = abs_moment_1d(alpha3, var3)?;
    let f = gauss_2f1(&HyperParams::new(-0.5 * alpha2, -0.5 * alpha3, 0.5, rho * rho)?)?;
    Ok(m2 * m3 * f)
}

/// E[∏ X_i^{2 m_i}] for X ~ N(0, Σ) by the Wick recursion
/// E[x_a P] = Σ_b σ_ab E[∂P/∂x_b], memoised over degree vectors.
/// Σ is assumed positive semi-definite.
pub fn isserlis_even_moment(sigma: &SymMatrix, m: &[u32]) -> Result<f64> {
    if m.len() != sigma.n() {
        return Err(GpiError::Invalid(format!("{} exponents for a {}x{} matrix", m.len(), sigma.n(), sigma.n())));
    }
    let total: u32 = m.iter().sum();
    if total > ISSERLIS_DEGREE_CAP {
        return Err(GpiError::Limit(format!(
            "Isserlis degree Σm = {total} exceeds the cap {ISSERLIS_DEGREE_CAP}"
        )));
    }
    let degrees: Vec<u8> = m.iter().map(|&k| (2 * k) as u8).collect();
    let mut memo = HashMap::new();
    Ok(wick(sigma, degrees, &mut memo))
}

fn wick(sigma: &SymMatrix, mut d: Vec<u8>, memo: &mut HashMap<Vec<u8>, f64>) -> f64 {
    let Some(a) = d.iter().position(|&k| k > 0) else {
        return 1.0;
    };
    if let Some(&v) = memo.get(&d) {
        return v;
    }
    let key = d.clone();
    d[a] -= 1;
    let mut acc = 0.0;
    for b in 0..d.len() {
        if d[b] == 0 {
            continue;
        }
        let s = sigma.get(a, b);
        if s == 0.0 {
            continue;
        }
        let mult = d[b] as f64;
        let mut next = d.clone();
        next[b] -= 1;
        acc += s * mult * wick(sigma, next, memo);
    }
    memo.insert(key, acc);
    acc
}
