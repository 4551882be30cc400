//! Mixed absolute moments E[∏ |X_j|^{α_j}] of centred Gaussian vectors by
//! closed forms, the Gamma-integral quadrature, and Monte Carlo.

mod closed;
mod monte_carlo;
mod tilt;

use serde::{Deserialize, Serialize};

use crate::error::{GpiError, Result};
use crate::linalg::{CorrelationMatrix, Matrix, SymMatrix};

pub use closed::{abs_moment_1d, isserlis_even_moment, nabeya_bivariate, ISSERLIS_DEGREE_CAP};
pub use monte_carlo::{mc_mixed_moment, STDERR_UNRELIABLE};
pub use tilt::{gamma_representation_1d, tilted, tilted_var_last, TiltedGaussian};

use tilt::{default_tolerances, Inner, TiltIntegral, MAX_TILT_AXES};

/// Per-coordinate exponents, each > −1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ExponentVector(Vec<f64>);

impl TryFrom<Vec<f64>> for ExponentVector {
    type Error = GpiError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ExponentVector::new(v)
    }
}

impl From<ExponentVector> for Vec<f64> {
    fn from(e: ExponentVector) -> Self {
        e.0
    }
}

impl ExponentVector {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        for (i, a) in alphas.iter().enumerate() {
            if !a.is_finite() || *a <= -1.0 {
                return Err(GpiError::Domain(format!("exponent α_{} = {a} must be finite and > −1", i + 1)));
            }
        }
        Ok(ExponentVector(alphas))
    }

    /// Parses a comma-separated list such as "-0.5,1,1".
    pub fn parse(s: &str) -> Result<Self> {
        let v = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| GpiError::Invalid(format!("bad exponent {p:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        ExponentVector::new(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn select(&self, idx: &[usize]) -> ExponentVector {
        ExponentVector(idx.iter().map(|&i| self.0[i]).collect())
    }

    pub fn negative_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i] < 0.0).collect()
    }

    /// Indices of strictly positive even integers.
    pub fn even_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i] > 0.0 && is_even_integer(self.0[i])).collect()
    }

    /// Indices of positive entries that are not even integers.
    pub fn general_positive_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i] > 0.0 && !is_even_integer(self.0[i])).collect()
    }

    /// m with α = 2m when every entry is a non-negative even integer.
    pub fn even_halves(&self) -> Option<Vec<u32>> {
        even_halves(&self.0)
    }
}

fn is_even_integer(a: f64) -> bool {
    a >= 0.0 && a <= 1e6 && a.fract() == 0.0 && (a as u64) % 2 == 0
}

pub(crate) fn even_halves(alphas: &[f64]) -> Option<Vec<u32>> {
    alphas.iter().map(|&a| is_even_integer(a).then(|| (a / 2.0) as u32)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Closed,
    Nabeya,
    Isserlis,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Closed => "closed",
            Method::Nabeya => "nabeya",
            Method::Isserlis => "isserlis",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// A moment value with its provenance and error: a deterministic absolute
/// tolerance, or the standard error for Monte Carlo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub method: Method,
    pub err: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl MomentEstimate {
    pub(crate) fn exact(value: f64, method: Method, rel: f64) -> Self {
        MomentEstimate { value, method, err: rel * value.abs(), samples: None, seed: None, flags: Vec::new() }
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.value *= factor;
        self.err *= factor;
        self
    }

    pub fn stderr_reliable(&self) -> bool {
        !self.flags.iter().any(|f| f == STDERR_UNRELIABLE)
    }
}

const CLOSED_REL: f64 = 1e-14;
const ISSERLIS_REL: f64 = 1e-13;
const NABEYA_REL: f64 = 1e-11;

/// E[|X₁|^{−α₁} ∏_{i≥2} |X_i|^{β_i}] with the negative power on the first
/// coordinate and `rest` covering coordinates 2..n. The remaining moment
/// must be all-even (Isserlis) or have at most two non-zero exponents.
pub fn mixed_moment_one_negative(sigma: &CorrelationMatrix, alpha1: f64, rest: &ExponentVector) -> Result<MomentEstimate> {
    let n = sigma.n();
    if rest.len() + 1 != n {
        return Err(GpiError::Invalid(format!("{} remaining exponents for a {n}x{n} matrix", rest.len())));
    }
    if rest.as_slice().iter().any(|&b| b < 0.0) {
        return Err(GpiError::Invalid("remaining exponents must be non-negative".into()));
    }
    let pos: Vec<(usize, f64)> = (0..rest.len()).filter(|&i| rest.get(i) != 0.0).map(|i| (i + 1, rest.get(i))).collect();
    let ti = TiltIntegral::new(sigma, &[(0, alpha1)], &pos)?;
    run_tilt(&ti)
}

/// E[∏_{i≤k} |X_i|^{−α_i} · |Xₙ|^{αₙ}] for negated exponents α_i ∈ (0, 1) on
/// the first k coordinates and an optional positive exponent on the last;
/// without it Σ must be k×k.
pub fn mixed_moment_multi_negative(sigma: &CorrelationMatrix, neg: &[f64], pos_last: Option<f64>) -> Result<MomentEstimate> {
    let n = sigma.n();
    let k = neg.len();
    if k + pos_last.is_some() as usize != n {
        return Err(GpiError::Invalid(format!("{k} negative exponents and {pos_last:?} do not fit a {n}x{n} matrix")));
    }
    if k == 0 || k > MAX_TILT_AXES {
        return Err(GpiError::Capability(format!(
            "{k} negative exponents: quadrature handles 1..={MAX_TILT_AXES}, use Monte Carlo"
        )));
    }
    let (n_axes, pos) = match pos_last {
        Some(a) if a > 0.0 => (k, vec![(n - 1, a)]),
        Some(a) => return Err(GpiError::Invalid(format!("last exponent {a} must be positive"))),
        // the last negative power is a closed-form 1-D moment under the tilt
        None if k >= 2 => (k - 1, vec![(k - 1, -neg[k - 1])]),
        None => (k, Vec::new()),
    };
    let axes: Vec<(usize, f64)> = (0..n_axes).map(|i| (i, neg[i])).collect();
    run_tilt(&TiltIntegral::new(sigma, &axes, &pos)?)
}

fn run_tilt(ti: &TiltIntegral) -> Result<MomentEstimate> {
    let (value, err) = ti.evaluate(&default_tolerances(ti.axes()))?;
    Ok(MomentEstimate { value, method: Method::Quadrature, err, samples: None, seed: None, flags: Vec::new() })
}

/// Quadrature for any exponent pattern the tilt reduction supports on a
/// correlation matrix with no zero exponents.
fn quadrature_moment(sigma: &CorrelationMatrix, alphas: &[f64]) -> Result<MomentEstimate> {
    let mut neg: Vec<(usize, f64)> = (0..alphas.len()).filter(|&i| alphas[i] < 0.0).map(|i| (i, -alphas[i])).collect();
    let mut pos: Vec<(usize, f64)> = (0..alphas.len()).filter(|&i| alphas[i] > 0.0).map(|i| (i, alphas[i])).collect();
    if neg.is_empty() {
        return Err(GpiError::Capability("quadrature needs at least one negative exponent".into()));
    }
    if pos.is_empty() {
        let (i, a) = neg.pop().expect("non-empty");
        pos.push((i, -a));
        if neg.is_empty() {
            let v = abs_moment_1d(-a, 1.0)?;
            return Ok(MomentEstimate::exact(v, Method::Closed, CLOSED_REL));
        }
    }
    Inner::classify(&pos.iter().map(|p| p.1).collect::<Vec<_>>())?;
    run_tilt(&TiltIntegral::new(sigma, &neg, &pos)?)
}

/// Which evaluator [`moment`] should use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Auto,
    Closed,
    Nabeya,
    Isserlis,
    Quadrature,
    MonteCarlo,
}

impl std::str::FromStr for MethodChoice {
    type Err = GpiError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodChoice::Auto),
            "closed" => Ok(MethodChoice::Closed),
            "nabeya" => Ok(MethodChoice::Nabeya),
            "isserlis" => Ok(MethodChoice::Isserlis),
            "quad" | "quadrature" => Ok(MethodChoice::Quadrature),
            "mc" | "monte_carlo" => Ok(MethodChoice::MonteCarlo),
            other => Err(GpiError::Invalid(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions { samples: 200_000, seed: 0 }
    }
}

/// E[∏ |X_j|^{α_j}] for X ~ N(0, cov). Deterministic evaluators work on the
/// standardised problem and rescale by ∏ σ_jj^{α_j/2}; `Auto` tries closed
/// forms, Isserlis, Nabeya and quadrature in turn and falls back to Monte Carlo.
pub fn moment(cov: &SymMatrix, alphas: &ExponentVector, choice: MethodChoice, mc: McOptions) -> Result<MomentEstimate> {
    moment_with(cov, alphas, choice, Some(mc))
}

/// `Auto` without the Monte Carlo fallback: a capability error when no
/// deterministic evaluator applies.
pub fn deterministic_moment(cov: &SymMatrix, alphas: &ExponentVector) -> Result<MomentEstimate> {
    moment_with(cov, alphas, MethodChoice::Auto, None)
}

fn moment_with(cov: &SymMatrix, alphas: &ExponentVector, choice: MethodChoice, mc: Option<McOptions>) -> Result<MomentEstimate> {
    let n = cov.n();
    if alphas.len() != n {
        return Err(GpiError::Invalid(format!("{} exponents for a {n}x{n} matrix", alphas.len())));
    }
    if cov.diagonal().iter().any(|v| !(*v > 0.0)) {
        return Err(GpiError::Invalid("covariance diagonal must be positive".into()));
    }
    if choice == MethodChoice::MonteCarlo {
        let mc = mc.unwrap_or_default();
        return mc_mixed_moment(cov, alphas, mc.samples, mc.seed);
    }
    let idx: Vec<usize> = (0..n).filter(|&i| alphas.get(i) != 0.0).collect();
    let a = alphas.select(&idx);
    let sub = cov.select(&idx);
    let sd: Vec<f64> = sub.diagonal().iter().map(|v| v.sqrt()).collect();
    let scale: f64 = sd.iter().zip(a.as_slice()).map(|(s, a)| s.powf(*a)).product();
    let m = idx.len();
    let mut r = Matrix::identity(m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                r[(i, j)] = (sub.get(i, j) / (sd[i] * sd[j])).clamp(-1.0, 1.0);
            }
        }
    }
    let r = SymMatrix::symmetrize(&r)?;
    let closed = || -> Result<MomentEstimate> {
        match m {
            0 => Ok(MomentEstimate::exact(1.0, Method::Closed, 0.0)),
            1 => Ok(MomentEstimate::exact(abs_moment_1d(a.get(0), 1.0)?, Method::Closed, CLOSED_REL)),
            _ => Err(GpiError::Capability(format!("no closed form for {m} coordinates"))),
        }
    };
    let isserlis = || -> Result<MomentEstimate> {
        let halves = a
            .even_halves()
            .ok_or_else(|| GpiError::Capability("Isserlis needs even integer exponents".into()))?;
        Ok(MomentEstimate::exact(isserlis_even_moment(&r, &halves)?, Method::Isserlis, ISSERLIS_REL))
    };
    let nabeya = || -> Result<MomentEstimate> {
        match m {
            0 | 1 => closed(),
            2 => Ok(MomentEstimate::exact(
                nabeya_bivariate(a.get(0), a.get(1), 1.0, 1.0, r.get(0, 1))?,
                Method::Nabeya,
                NABEYA_REL,
            )),
            _ => Err(GpiError::Capability(format!("Nabeya's formula is bivariate, got {m} coordinates"))),
        }
    };
    let quadrature = || -> Result<MomentEstimate> {
        let corr = CorrelationMatrix::new(r.clone())?;
        quadrature_moment(&corr, a.as_slice())
    };
    let est = match choice {
        MethodChoice::Closed => closed(),
        MethodChoice::Isserlis => isserlis(),
        MethodChoice::Nabeya => nabeya(),
        MethodChoice::Quadrature => quadrature(),
        MethodChoice::MonteCarlo => unreachable!(),
        MethodChoice::Auto => {
            let mut result = Err(GpiError::Capability("no method applies".into()));
            for attempt in [&closed as &dyn Fn() -> Result<MomentEstimate>, &isserlis, &nabeya, &quadrature] {
                result = attempt();
                match &result {
                    Err(e) if e.is_capability() => continue,
                    _ => break,
                }
            }
            match result {
                Err(e) if e.is_capability() => match mc {
                    Some(mc) => return mc_mixed_moment(cov, alphas, mc.samples, mc.seed),
                    None => Err(e),
                },
                other => other,
            }
        }
    }?;
    Ok(est.scaled(scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(rows: &[&[f64]]) -> CorrelationMatrix {
        CorrelationMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn exponent_vector_metadata() {
        let e = ExponentVector::parse("-0.5, 2, 1.5, 0, 4").unwrap();
        assert_eq!(e.negative_indices(), vec![0]);
        assert_eq!(e.even_indices(), vec![1, 4]);
        assert_eq!(e.general_positive_indices(), vec![2]);
        assert_eq!(e.even_halves(), None);
        assert_eq!(ExponentVector::parse("2,0,6").unwrap().even_halves(), Some(vec![1, 0, 3]));
        assert!(ExponentVector::parse("-1,2").is_err());
        assert!(ExponentVector::parse("x").is_err());
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, "[-0.5,2.0,1.5,0.0,4.0]");
        assert!(serde_json::from_str::<ExponentVector>("[-2.0]").is_err());
    }

    #[test]
    fn gamma_representation_reproduces_1d_moment() {
        for i in 1..10 {
            let a = i as f64 / 10.0;
            let (v, _) = gamma_representation_1d(a).unwrap();
            let want = abs_moment_1d(-a, 1.0).unwrap();
            assert!((v - want).abs() < 1e-9 * want, "α = {a}: {v} vs {want}");
        }
    }

    #[test]
    fn one_negative_conditional_decomposition() {
        // X₂ = ρX₁ + √(1−ρ²)Z gives E|X₁|^{−1/2}X₂² = (1−ρ²)E|X|^{−1/2} + ρ²E|X|^{3/2}
        for rho in [0.0, 0.3, -0.7, 0.95] {
            let s = CorrelationMatrix::bivariate(rho).unwrap();
            let est = mixed_moment_one_negative(&s, 0.5, &ExponentVector::new(vec![2.0]).unwrap()).unwrap();
            let want = (1.0 - rho * rho) * abs_moment_1d(-0.5, 1.0).unwrap() + rho * rho * abs_moment_1d(1.5, 1.0).unwrap();
            assert!((est.value - want).abs() < 1e-8 * want, "ρ = {rho}: {} vs {want}", est.value);
            assert_eq!(est.method, Method::Quadrature);
        }
    }

    #[test]
    fn one_negative_independence() {
        let s = CorrelationMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.4], vec![0.0, 0.4, 1.0]]).unwrap();
        let est = mixed_moment_one_negative(&s, 0.3, &ExponentVector::new(vec![1.2, 0.7]).unwrap()).unwrap();
        let want = abs_moment_1d(-0.3, 1.0).unwrap() * nabeya_bivariate(1.2, 0.7, 1.0, 1.0, 0.4).unwrap();
        assert!((est.value - want).abs() < 1e-8 * want);
    }

    #[test]
    fn multi_negative_matches_nabeya() {
        for rho in [0.2, -0.6, 0.9] {
            let s = CorrelationMatrix::bivariate(rho).unwrap();
            let est = mixed_moment_multi_negative(&s, &[0.4], Some(1.3)).unwrap();
            let want = nabeya_bivariate(-0.4, 1.3, 1.0, 1.0, rho).unwrap();
            assert!((est.value - want).abs() < 1e-6 * want, "{} vs {want}", est.value);
        }
    }

    #[test]
    fn multi_negative_diagonal_is_product() {
        let s = CorrelationMatrix::identity(3);
        let est = mixed_moment_multi_negative(&s, &[0.2, 0.6], Some(2.5)).unwrap();
        let want = abs_moment_1d(-0.2, 1.0).unwrap() * abs_moment_1d(-0.6, 1.0).unwrap() * abs_moment_1d(2.5, 1.0).unwrap();
        assert!((est.value - want).abs() < 1e-6 * want, "{} vs {want}", est.value);
        let est = mixed_moment_multi_negative(&s, &[0.2, 0.6, 0.5], None).unwrap();
        let want = want / abs_moment_1d(2.5, 1.0).unwrap() * abs_moment_1d(-0.5, 1.0).unwrap();
        assert!((est.value - want).abs() < 1e-6 * want);
    }

    #[test]
    fn multi_negative_limits() {
        let s = CorrelationMatrix::identity(5);
        assert!(mixed_moment_multi_negative(&s, &[0.5; 4], Some(1.0)).unwrap_err().is_capability());
    }

    #[test]
    fn monte_carlo_examples() {
        let s = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let est = mc_mixed_moment(&s, &ExponentVector::new(vec![2.0, 2.0]).unwrap(), 400_000, 7).unwrap();
        assert!((est.value - 1.5).abs() < 4.0 * est.err, "{est:?}");
        let zero = mc_mixed_moment(&s, &ExponentVector::new(vec![0.0, 0.0]).unwrap(), 1000, 7).unwrap();
        assert_eq!((zero.value, zero.err), (1.0, 0.0));
        let again = mc_mixed_moment(&s, &ExponentVector::new(vec![2.0, 2.0]).unwrap(), 400_000, 7).unwrap();
        assert_eq!(est, again);
        let flagged = mc_mixed_moment(&s, &ExponentVector::new(vec![-0.6, 1.0]).unwrap(), 1000, 1).unwrap();
        assert!(!flagged.stderr_reliable());
        let singular = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(mc_mixed_moment(&singular, &ExponentVector::new(vec![1.0, 1.0]).unwrap(), 100, 0).is_err());
    }

    #[test]
    fn dispatcher_scales_general_covariance() {
        let cov = SymMatrix::from_rows(&[vec![4.0, 1.2], vec![1.2, 9.0]]).unwrap();
        let a = ExponentVector::new(vec![-0.3, 1.7]).unwrap();
        let est = moment(&cov, &a, MethodChoice::Auto, McOptions::default()).unwrap();
        assert_eq!(est.method, Method::Nabeya);
        let want = 2f64.powf(-0.3) * 3f64.powf(1.7) * nabeya_bivariate(-0.3, 1.7, 1.0, 1.0, 0.2).unwrap();
        assert!((est.value - want).abs() < 1e-12 * want);
        let q = moment(&cov, &a, MethodChoice::Quadrature, McOptions::default()).unwrap();
        assert!((q.value - want).abs() < 1e-6 * want);
    }

    #[test]
    fn dispatcher_routes() {
        let s = corr(&[&[1.0, 0.3, 0.1], &[0.3, 1.0, -0.2], &[0.1, -0.2, 1.0]]);
        let cov = s.sym().clone();
        let route = |a: &[f64]| moment(&cov, &ExponentVector::new(a.to_vec()).unwrap(), MethodChoice::Auto, McOptions { samples: 1000, seed: 1 }).unwrap().method;
        assert_eq!(route(&[2.0, 4.0, 2.0]), Method::Isserlis);
        assert_eq!(route(&[0.0, 1.5, 0.0]), Method::Closed);
        assert_eq!(route(&[1.5, 0.0, 0.5]), Method::Nabeya);
        assert_eq!(route(&[-0.5, 1.0, 1.0]), Method::Quadrature);
        assert_eq!(route(&[1.5, 0.5, 2.5]), Method::MonteCarlo);
        let err = moment(&cov, &ExponentVector::new(vec![1.5, 0.5, 2.5]).unwrap(), MethodChoice::Quadrature, McOptions::default());
        assert!(err.unwrap_err().is_capability());
    }

    #[test]
    fn nabeya_accepts_degenerate_correlation() {
        let ones = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let est = moment(&ones, &ExponentVector::new(vec![-0.3, 1.0]).unwrap(), MethodChoice::Auto, McOptions::default()).unwrap();
        assert!((est.value - abs_moment_1d(0.7, 1.0).unwrap()).abs() < 1e-11);
    }
}
