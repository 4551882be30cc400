//! Both sides of every inequality under test. Evaluators return values and
//! errors only; deciding pass/fail is the verifier's job.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GpiError, Result};
use crate::linalg::{cholesky, CorrelationMatrix};
use crate::moments::{
    abs_moment_1d, deterministic_moment, isserlis_even_moment, mc_mixed_moment, moment, ExponentVector, McOptions,
    Method, MethodChoice, MomentEstimate,
};
use crate::specfun::gauss_2f1_at_one;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "thm1_1")]
    Thm1_1,
    #[serde(rename = "thm1_2")]
    Thm1_2,
    #[serde(rename = "remark_eq2")]
    RemarkEq2,
    #[serde(rename = "prop1_3")]
    Prop1_3,
    #[serde(rename = "prop1_4")]
    Prop1_4,
    #[serde(rename = "prop1_5")]
    Prop1_5,
    #[serde(rename = "wei_a3")]
    WeiA3,
    #[serde(rename = "opposite_n2")]
    OppositeN2,
    #[serde(rename = "gpi_n2")]
    GpiN2,
    #[serde(rename = "even_gpi_1_6")]
    EvenGpi1_6,
    #[serde(rename = "even_gpi_subset_1_7")]
    EvenGpiSubset1_7,
}

impl Kind {
    pub const ALL: [Kind; 11] = [
        Kind::Thm1_1,
        Kind::Thm1_2,
        Kind::RemarkEq2,
        Kind::Prop1_3,
        Kind::Prop1_4,
        Kind::Prop1_5,
        Kind::WeiA3,
        Kind::OppositeN2,
        Kind::GpiN2,
        Kind::EvenGpi1_6,
        Kind::EvenGpiSubset1_7,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Thm1_1 => "thm1_1",
            Kind::Thm1_2 => "thm1_2",
            Kind::RemarkEq2 => "remark_eq2",
            Kind::Prop1_3 => "prop1_3",
            Kind::Prop1_4 => "prop1_4",
            Kind::Prop1_5 => "prop1_5",
            Kind::WeiA3 => "wei_a3",
            Kind::OppositeN2 => "opposite_n2",
            Kind::GpiN2 => "gpi_n2",
            Kind::EvenGpi1_6 => "even_gpi_1_6",
            Kind::EvenGpiSubset1_7 => "even_gpi_subset_1_7",
        }
    }

    pub fn uses_split(&self) -> bool {
        matches!(self, Kind::WeiA3 | Kind::EvenGpiSubset1_7)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = GpiError;
    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| GpiError::Invalid(format!("unknown inequality kind {s:?}")))
    }
}

/// One inequality instance. Exponents are signed: a negative power is
/// written as its negative value, e.g. (−0.5, 2, 2) for `thm1_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCase {
    pub kind: Kind,
    pub sigma: CorrelationMatrix,
    pub alphas: ExponentVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<usize>,
}

fn in_neg_unit(a: f64) -> bool {
    a > -1.0 && a < 0.0
}

fn is_pos_even(a: f64) -> bool {
    a > 0.0 && a.fract() == 0.0 && (a as u64) % 2 == 0
}

impl InequalityCase {
    pub fn new(kind: Kind, sigma: CorrelationMatrix, alphas: ExponentVector, split: Option<usize>) -> Result<Self> {
        let case = InequalityCase { kind, sigma, alphas, split };
        case.validate()?;
        Ok(case)
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }

    /// The split index k (1-based count of leading coordinates), defaulting to 1.
    pub fn split_or_default(&self) -> usize {
        self.split.unwrap_or(1)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let a = self.alphas.as_slice();
        let bad = |why: &str| Err(GpiError::Invalid(format!("{}: {why} (α = {a:?})", self.kind)));
        if a.len() != n {
            return bad(&format!("{} exponents for a {n}x{n} matrix", a.len()));
        }
        if n < 2 {
            return bad("needs at least two coordinates");
        }
        if self.split.is_some() && !self.kind.uses_split() {
            return bad("takes no split index");
        }
        if self.kind.uses_split() {
            let k = self.split_or_default();
            if k == 0 || k >= n {
                return bad(&format!("split k = {k} outside 1..{}", n - 1));
            }
        }
        let last = a[n - 1];
        let head = &a[..n - 1];
        let ok = match self.kind {
            Kind::Thm1_1 => in_neg_unit(a[0]) && a[1..].iter().all(|&x| x == 2.0),
            Kind::Thm1_2 => head.iter().all(|&x| in_neg_unit(x)) && last > 0.0,
            Kind::RemarkEq2 => head.iter().all(|&x| in_neg_unit(x)) && last == 1.0,
            Kind::Prop1_3 => n == 4 && in_neg_unit(a[0]) && a[1..].iter().all(|&x| is_pos_even(x) && x <= 6.0),
            Kind::Prop1_4 => n == 3 && in_neg_unit(a[0]) && a[1] > 0.0 && a[2] > 0.0,
            Kind::Prop1_5 => n == 3 && in_neg_unit(a[0]) && in_neg_unit(a[1]) && a[2] > 0.0,
            Kind::WeiA3 => a.iter().all(|&x| in_neg_unit(x)),
            Kind::OppositeN2 => n == 2 && in_neg_unit(a[0]) && a[1] > 0.0,
            Kind::GpiN2 => n == 2 && a[0] > 0.0 && a[1] > 0.0,
            Kind::EvenGpi1_6 => a.iter().all(|&x| is_pos_even(x)) && (n == 3 || a.iter().all(|&x| x == 2.0)),
            Kind::EvenGpiSubset1_7 => a.iter().all(|&x| is_pos_even(x)),
        };
        if !ok {
            return bad("exponents outside the hypothesis");
        }
        if self.kind == Kind::EvenGpiSubset1_7 {
            for i in 0..n {
                for j in 0..i {
                    if self.sigma.rho(i, j) < 0.0 {
                        return bad("needs non-negative correlations");
                    }
                }
            }
        }
        Ok(())
    }
}

/// A bound value and its absolute error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Side {
    pub value: f64,
    pub err: f64,
    /// `err` is a Monte Carlo standard error rather than a deterministic tolerance.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub monte_carlo: bool,
}

impl Side {
    fn exact(value: f64) -> Self {
        Side { value, err: 0.0, monte_carlo: false }
    }

    fn scaled(est: &MomentEstimate, factor: f64) -> Self {
        Side { value: est.value * factor, err: est.err * factor.abs(), monte_carlo: est.method == Method::MonteCarlo }
    }
}

/// Internals of the `prop1_5` lower-bound argument for Σ = [[1,a,b],[a,1,c],[b,c,1]].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop15Diagnostics {
    /// K = 2b² + 2c² − 4abc.
    pub k: f64,
    /// I₁ = 2K − 4(1−c²)b² + 4c²(1−b²), which reduces to 8c² − 8abc.
    pub i1: f64,
    /// I₂ = 4K(1−b²) − 8 det(Σ) b², which reduces to 8(ab − c)².
    pub i2: f64,
    /// 4K(1−c²) − 8 det(Σ) c², which reduces to 8(ac − b)².
    pub g_slope: f64,
    /// Largest |Δ| of the quadratic in c over the probe tilts.
    pub discriminant: f64,
    /// sup g = (1−a²)/(2 det Σ) − 1/2.
    pub g_limit: f64,
    /// det(Σ)/(1−a²), the floor of Var(Y₃).
    pub var_floor: f64,
}

impl Prop15Diagnostics {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        let det = 1.0 - a * a - b * b - c * c + 2.0 * a * b * c;
        let k = 2.0 * b * b + 2.0 * c * c - 4.0 * a * b * c;
        let i1 = 2.0 * k - 4.0 * (1.0 - c * c) * b * b + 4.0 * c * c * (1.0 - b * b);
        let i2 = 4.0 * k * (1.0 - b * b) - 8.0 * det * b * b;
        let g_slope = 4.0 * k * (1.0 - c * c) - 8.0 * det * c * c;
        let discriminant = [0.5, 1.0, 2.0].iter().map(|&u| prop15_discriminant(a, b, u).abs()).fold(0.0, f64::max);
        Prop15Diagnostics {
            k,
            i1,
            i2,
            g_slope,
            discriminant,
            g_limit: (1.0 - a * a) / (2.0 * det) - 0.5,
            var_floor: det / (1.0 - a * a),
        }
    }

    pub fn from_sigma(sigma: &CorrelationMatrix) -> Self {
        Prop15Diagnostics::new(sigma.rho(0, 1), sigma.rho(0, 2), sigma.rho(1, 2))
    }
}

/// Δ of the quadratic (1+4u+4u²)c² − (4abu + 8abu²)c + 4a²b²u² at u = t₁^{2/α₁}.
pub fn prop15_discriminant(a: f64, b: f64, u: f64) -> f64 {
    let lin = -4.0 * a * b * u - 8.0 * a * b * u * u;
    lin * lin - 4.0 * (1.0 + 4.0 * u + 4.0 * u * u) * 4.0 * a * a * b * b * u * u
}

/// C_{α₂,α₃} = ₂F₁(−α₂/2, −α₃/2; 1/2; 1).
pub fn prop14_constant(alpha2: f64, alpha3: f64) -> Result<f64> {
    gauss_2f1_at_one(-0.5 * alpha2, -0.5 * alpha3, 0.5)
}

/// Left-hand side and bound(s) of one case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: Kind,
    pub lhs: MomentEstimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Prop15Diagnostics>,
}

/// How moments inside bound evaluations are computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Use Monte Carlo when no deterministic evaluator applies.
    pub mc_fallback: bool,
    pub mc: McOptions,
    /// Moments needing more quadrature axes than this go to Monte Carlo.
    pub max_quadrature_axes: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { mc_fallback: true, mc: McOptions::default(), max_quadrature_axes: 2 }
    }
}

/// Integration axes the tilt representation needs for these exponents.
pub fn quadrature_axes(a: &[f64]) -> usize {
    let neg = a.iter().filter(|&&x| x < 0.0).count();
    let pos = a.iter().filter(|&&x| x > 0.0).count();
    if pos == 0 {
        neg.saturating_sub(1)
    } else {
        neg
    }
}

fn estimate(sigma: &CorrelationMatrix, a: &[f64], opts: &EvalOptions) -> Result<MomentEstimate> {
    let alphas = ExponentVector::new(a.to_vec())?;
    let active = a.iter().filter(|&&x| x != 0.0).count();
    let det = if active >= 3 && quadrature_axes(a) > opts.max_quadrature_axes {
        Err(GpiError::Capability(format!("{} quadrature axes exceed the configured limit", quadrature_axes(a))))
    } else {
        deterministic_moment(sigma.sym(), &alphas)
    };
    match det {
        Err(e) if e.is_capability() && opts.mc_fallback => {
            mc_mixed_moment(sigma.sym(), &alphas, opts.mc.samples, opts.mc.seed)
        }
        other => other,
    }
}

fn marginal(a: f64) -> Result<f64> {
    abs_moment_1d(a, 1.0)
}

fn marginals(a: &[f64]) -> Result<f64> {
    a.iter().map(|&x| marginal(x)).product()
}

fn expect_kind(case: &InequalityCase, kind: Kind) -> Result<()> {
    if case.kind != kind {
        return Err(GpiError::Invalid(format!("case of kind {} passed to the {kind} evaluator", case.kind)));
    }
    case.validate()
}

fn report(case: &InequalityCase, lhs: MomentEstimate, lower: Option<Side>, upper: Option<Side>) -> BoundReport {
    BoundReport { kind: case.kind, lhs, lower, upper, constant: None, diagnostics: None }
}

/// lhs ≥ ∏_{i≥2}(1−ρ_{1i}²) · E|X₁|^{α₁} · ∏ E[X_i²].
pub fn thm1_1_bound(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    expect_kind(case, Kind::Thm1_1)?;
    let a = case.alphas.as_slice();
    let lhs = estimate(&case.sigma, a, opts)?;
    let shrink: f64 = (1..case.n()).map(|i| 1.0 - case.sigma.rho(0, i).powi(2)).product();
    let lower = shrink * marginal(a[0])?;
    Ok(report(case, lhs, Some(Side::exact(lower)), None))
}

/// lhs ≤ E[∏_{k<n}|X_k|^{α_k}] · E|Xₙ|^{αₙ}.
pub fn thm1_2_bound(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    expect_kind(case, Kind::Thm1_2)?;
    thm1_2_like(case, opts)
}

fn thm1_2_like(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    let a = case.alphas.as_slice();
    let n = case.n();
    let lhs = estimate(&case.sigma, a, opts)?;
    let head: Vec<usize> = (0..n - 1).collect();
    let neg = estimate(&case.sigma.select(&head), &a[..n - 1], opts)?;
    let upper = Side::scaled(&neg, marginal(a[n - 1])?);
    Ok(report(case, lhs, None, Some(upper)))
}

/// lhs ≤ ∏_{j<n}(1/m_jj)^{|α_j|} · ∏_{j<n} E|X_j|^{α_j} · E|Xₙ|, with M the Cholesky factor of Σ.
pub fn remark_eq2_bound(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    expect_kind(case, Kind::RemarkEq2)?;
    let a = case.alphas.as_slice();
    let n = case.n();
    let lhs = estimate(&case.sigma, a, opts)?;
    let m = cholesky(case.sigma.sym())?.diagonal();
    let mut upper = marginal(1.0)?;
    for j in 0..n - 1 {
        upper *= m[j].powf(a[j]) * marginal(a[j])?;
    }
    Ok(report(case, lhs, None, Some(Side::exact(upper))))
}

fn shrunk_product(case: &InequalityCase) -> Result<f64> {
    let a = case.alphas.as_slice();
    let mut v = marginal(a[0])?;
    for i in 1..case.n() {
        v *= (1.0 - case.sigma.rho(0, i).powi(2)).powf(0.5 * a[i]) * marginal(a[i])?;
    }
    Ok(v)
}

/// lhs ≥ ∏_{i=2..4}(1−ρ_{1i}²)^{α_i/2} · E|X₁|^{α₁} · ∏ E|X_i|^{α_i}.
pub fn prop1_3_bound(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    expect_kind(case, Kind::Prop1_3)?;
    let lhs = estimate(&case.sigma, case.alphas.as_slice(), opts)?;
    Ok(report(case, lhs, Some(Side::exact(shrunk_product(case)?)), None))
}

/// ∏(1−ρ_{1i}²)^{α_i/2} ∏E|X_i|^{α_i} ≤ lhs ≤ C_{α₂,α₃} ∏E|X_i|^{α_i}.
pub fn prop1_4_bounds(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    expect_kind(case, Kind::Prop1_4)?;
    let a = case.alphas.as_slice();
    let lhs = estimate(&case.sigma, a, opts)?;
    let c = prop14_constant(a[1], a[2])?;
    let upper = c * marginals(a)?;
    let mut r = report(case, lhs, Some(Side::exact(shrunk_product(case)?)), Some(Side::exact(upper)));
    r.constant = Some(c);
    Ok(r)
}

/// floor^{max(1, α₃/2)} ∏E|X_i|^{α_i} ≤ lhs ≤ E[|X₁|^{α₁}|X₂|^{α₂}] E|X₃|^{α₃},
/// floor = det(Σ)/(1−a²). The first power of the floor alone fails for α₃ > 2.
pub fn prop1_5_bounds(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    expect_kind(case, Kind::Prop1_5)?;
    let a = case.alphas.as_slice();
    let lhs = estimate(&case.sigma, a, opts)?;
    let diag = Prop15Diagnostics::from_sigma(&case.sigma);
    let lower = diag.var_floor.powf(prop15_floor_power(a[2])) * marginals(a)?;
    let pair = estimate(&case.sigma.select(&[0, 1]), &a[..2], opts)?;
    let upper = Side::scaled(&pair, marginal(a[2])?);
    let mut r = report(case, lhs, Some(Side::exact(lower)), Some(upper));
    r.diagnostics = Some(diag);
    Ok(r)
}

/// Exponent applied to the `prop1_5` variance floor.
pub fn prop15_floor_power(alpha3: f64) -> f64 {
    (0.5 * alpha3).max(1.0)
}

/// lhs ≥ E[∏_{j≤k}|X_j|^{α_j}] · E[∏_{j>k}|X_j|^{α_j}], all α ∈ (−1, 0).
pub fn wei_a3_bound(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    expect_kind(case, Kind::WeiA3)?;
    split_bound(case, opts)
}

fn split_bound(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    let a = case.alphas.as_slice();
    let n = case.n();
    let k = case.split_or_default();
    let lhs = estimate(&case.sigma, a, opts)?;
    let first: Vec<usize> = (0..k).collect();
    let second: Vec<usize> = (k..n).collect();
    let p = estimate(&case.sigma.select(&first), &a[..k], opts)?;
    let q = estimate(&case.sigma.select(&second), &a[k..], opts)?;
    let lower = Side {
        value: p.value * q.value,
        err: p.err * q.value.abs() + q.err * p.value.abs(),
        monte_carlo: p.method == Method::MonteCarlo || q.method == Method::MonteCarlo,
    };
    Ok(report(case, lhs, Some(lower), None))
}

/// lhs ≤ E|X₁|^{α₁} E|X₂|^{α₂} for α₁ ∈ (−1, 0) < α₂; lhs by quadrature.
pub fn opposite_n2_bound(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    expect_kind(case, Kind::OppositeN2)?;
    let a = case.alphas.as_slice();
    let lhs = match moment(case.sigma.sym(), &case.alphas, MethodChoice::Quadrature, opts.mc) {
        Err(e) if e.is_capability() => estimate(&case.sigma, a, opts)?,
        other => other?,
    };
    Ok(report(case, lhs, None, Some(Side::exact(marginals(a)?))))
}

/// lhs ≥ E|X₁|^{α₁} E|X₂|^{α₂} for positive exponents.
pub fn gpi_n2_bound(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    expect_kind(case, Kind::GpiN2)?;
    let a = case.alphas.as_slice();
    let lhs = estimate(&case.sigma, a, opts)?;
    Ok(report(case, lhs, Some(Side::exact(marginals(a)?)), None))
}

/// Even-moment GPI against the product of marginals (`even_gpi_1_6`), or
/// against the product over a split (`even_gpi_subset_1_7`).
pub fn even_gpi_bound(case: &InequalityCase, _opts: &EvalOptions) -> Result<BoundReport> {
    case.validate()?;
    let a = case.alphas.as_slice();
    let halves = case.alphas.even_halves().ok_or_else(|| GpiError::Invalid("even exponents required".into()))?;
    let lhs_value = isserlis_even_moment(case.sigma.sym(), &halves)?;
    let lhs = MomentEstimate { value: lhs_value, method: Method::Isserlis, err: 1e-13 * lhs_value, samples: None, seed: None, flags: Vec::new() };
    let lower = match case.kind {
        Kind::EvenGpi1_6 => marginals(a)?,
        Kind::EvenGpiSubset1_7 => {
            let k = case.split_or_default();
            let n = case.n();
            let first: Vec<usize> = (0..k).collect();
            let second: Vec<usize> = (k..n).collect();
            isserlis_even_moment(case.sigma.select(&first).sym(), &halves[..k])?
                * isserlis_even_moment(case.sigma.select(&second).sym(), &halves[k..])?
        }
        other => return Err(GpiError::Invalid(format!("case of kind {other} passed to the even-GPI evaluator"))),
    };
    Ok(report(case, lhs, Some(Side { value: lower, err: 1e-13 * lower, monte_carlo: false }), None))
}

/// Dispatches on the case kind.
pub fn evaluate(case: &InequalityCase, opts: &EvalOptions) -> Result<BoundReport> {
    match case.kind {
        Kind::Thm1_1 => thm1_1_bound(case, opts),
        Kind::Thm1_2 => thm1_2_bound(case, opts),
        Kind::RemarkEq2 => remark_eq2_bound(case, opts),
        Kind::Prop1_3 => prop1_3_bound(case, opts),
        Kind::Prop1_4 => prop1_4_bounds(case, opts),
        Kind::Prop1_5 => prop1_5_bounds(case, opts),
        Kind::WeiA3 => wei_a3_bound(case, opts),
        Kind::OppositeN2 => opposite_n2_bound(case, opts),
        Kind::GpiN2 => gpi_n2_bound(case, opts),
        Kind::EvenGpi1_6 | Kind::EvenGpiSubset1_7 => even_gpi_bound(case, opts),
    }
}
