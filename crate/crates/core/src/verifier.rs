//! Randomized inequality sweeps, the GPI counterexample hunter and report
//! output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{evaluate, quadrature_axes, EvalOptions, InequalityCase, Kind, Prop15Diagnostics};
use crate::error::{GpiError, Result};
use crate::linalg::{shrink_to_pd, CorrelationMatrix, Matrix, SymMatrix};
use crate::moments::{
    abs_moment_1d, mc_mixed_moment, ExponentVector, McOptions, Method, ISSERLIS_DEGREE_CAP, STDERR_UNRELIABLE,
};

const MAX_ATTEMPTS: usize = 100;
const FALLBACK_SHRINK: f64 = 10.0;
const NEAR_SINGULAR_SHRINK: f64 = 200.0;
const BOUNDARY_MARGIN: f64 = 1e-3;
/// Below −1/2 the Monte Carlo integrand has infinite variance.
const MC_NEGATIVE_FLOOR: f64 = -0.45;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFamily {
    /// WW′ rescaled to unit diagonal, W with i.i.d. N(0, 1) entries.
    #[default]
    GramNormalized,
    /// Constant off-diagonal ρ ∈ (−1/(n−1), 1).
    Equicorrelated,
    /// A Gram matrix dominated by a rank-one term, pulled back inside the cone.
    NearSingular,
    /// Gram matrix of a W with non-negative entries; every ρ ≥ 0.
    NonnegEntries,
}

impl MatrixFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatrixFamily::GramNormalized => "gram_normalized",
            MatrixFamily::Equicorrelated => "equicorrelated",
            MatrixFamily::NearSingular => "near_singular",
            MatrixFamily::NonnegEntries => "nonneg_entries",
        }
    }
}

impl FromStr for MatrixFamily {
    type Err = GpiError;
    fn from_str(s: &str) -> Result<Self> {
        [
            MatrixFamily::GramNormalized,
            MatrixFamily::Equicorrelated,
            MatrixFamily::NearSingular,
            MatrixFamily::NonnegEntries,
        ]
        .into_iter()
        .find(|f| f.as_str() == s)
        .ok_or_else(|| GpiError::Invalid(format!("unknown matrix family {s:?}")))
    }
}

fn normalize_gram(g: &Matrix) -> SymMatrix {
    let n = g.nrows();
    let d: Vec<f64> = (0..n).map(|i| g[(i, i)].sqrt()).collect();
    let mut out = Matrix::identity(n);
    for i in 0..n {
        for j in 0..i {
            let r = (g[(i, j)] / (d[i] * d[j])).clamp(-1.0, 1.0);
            out[(i, j)] = r;
            out[(j, i)] = r;
        }
    }
    SymMatrix::new(out).expect("square by construction")
}

fn gram<R: Rng>(n: usize, rng: &mut R, nonneg: bool) -> Matrix {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            w[(i, j)] = if nonneg { z.abs() } else { z };
        }
    }
    w.matmul(&w.transpose())
}

fn draw<R: Rng>(n: usize, family: MatrixFamily, rng: &mut R) -> Result<CorrelationMatrix> {
    match family {
        MatrixFamily::GramNormalized => CorrelationMatrix::new(normalize_gram(&gram(n, rng, false))),
        MatrixFamily::NonnegEntries => CorrelationMatrix::new(normalize_gram(&gram(n, rng, true))),
        MatrixFamily::Equicorrelated => {
            let lo = -1.0 / (n - 1) as f64 + BOUNDARY_MARGIN;
            let rho = rng.random_range(lo..1.0 - BOUNDARY_MARGIN);
            let mut m = Matrix::identity(n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        m[(i, j)] = rho;
                    }
                }
            }
            CorrelationMatrix::new(SymMatrix::new(m)?)
        }
        MatrixFamily::NearSingular => {
            let mut g = gram(n, rng, false);
            let u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let weight = 50.0 * n as f64;
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] += weight * u[i] * u[j];
                }
            }
            shrink_to_pd(&normalize_gram(&g), NEAR_SINGULAR_SHRINK)
        }
    }
}

/// A random n×n correlation matrix from `family`, bitwise reproducible for a
/// given seed. Draws that fail the positive-definiteness check are redrawn;
/// after 100 failures the last draw is shrunk towards the identity.
pub fn random_correlation(n: usize, family: MatrixFamily, seed: u64) -> Result<CorrelationMatrix> {
    if n < 2 {
        return Err(GpiError::Invalid(format!("random correlation matrices need n ≥ 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Ok(c) = draw(n, family, &mut rng) {
            return Ok(c);
        }
    }
    shrink_to_pd(&normalize_gram(&gram(n, &mut rng, family == MatrixFamily::NonnegEntries)), FALLBACK_SHRINK)
}

/// Ranges the exponent samplers draw from. Negative exponents come from
/// `negative`, general positive ones from `positive`, and even integers
/// from `even`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaGrid {
    pub negative: (f64, f64),
    pub positive: (f64, f64),
    pub even: Vec<u32>,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        AlphaGrid {
            negative: (-1.0 + BOUNDARY_MARGIN, -BOUNDARY_MARGIN),
            positive: (BOUNDARY_MARGIN, 4.0),
            even: vec![2, 4, 6],
        }
    }
}

impl AlphaGrid {
    fn validate(&self) -> Result<()> {
        let (nl, nh) = self.negative;
        let (pl, ph) = self.positive;
        if !(nl > -1.0 && nl <= nh && nh < 0.0) {
            return Err(GpiError::Invalid(format!("negative range {:?} must lie in (−1, 0)", self.negative)));
        }
        if !(pl > 0.0 && pl <= ph && ph.is_finite()) {
            return Err(GpiError::Invalid(format!("positive range {:?} must lie in (0, ∞)", self.positive)));
        }
        if self.even.is_empty() || self.even.iter().any(|&e| e == 0 || e % 2 == 1) {
            return Err(GpiError::Invalid(format!("even exponents {:?} must be positive even integers", self.even)));
        }
        Ok(())
    }

    fn negative<R: Rng>(&self, rng: &mut R) -> f64 {
        uniform(rng, self.negative)
    }

    fn positive<R: Rng>(&self, rng: &mut R) -> f64 {
        uniform(rng, self.positive)
    }

    fn even<R: Rng>(&self, rng: &mut R, max: u32) -> f64 {
        let allowed: Vec<u32> = self.even.iter().copied().filter(|&e| e <= max).collect();
        let pool = if allowed.is_empty() { vec![2] } else { allowed };
        pool[rng.random_range(0..pool.len())] as f64
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub kinds: Vec<Kind>,
    /// Inclusive dimension range for kinds whose dimension is free.
    pub n_range: (usize, usize),
    pub trials: usize,
    /// Per-kind overrides of `default_alphas`.
    pub alpha_grids: BTreeMap<Kind, AlphaGrid>,
    pub default_alphas: AlphaGrid,
    pub matrix_family: MatrixFamily,
    pub master_seed: u64,
    pub tolerance_abs: f64,
    pub mc_fallback: bool,
    pub mc_samples: u64,
    /// Standard errors granted to Monte Carlo estimates.
    pub mc_sigmas: f64,
    /// Moments needing more quadrature axes than this go to Monte Carlo.
    pub max_quadrature_axes: usize,
    /// Lowest negative exponent drawn for cases that will be estimated by
    /// Monte Carlo.
    pub mc_negative_floor: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            kinds: Kind::ALL.to_vec(),
            n_range: (2, 3),
            trials: 20,
            alpha_grids: BTreeMap::new(),
            default_alphas: AlphaGrid::default(),
            matrix_family: MatrixFamily::GramNormalized,
            master_seed: 0,
            tolerance_abs: 1e-7,
            mc_fallback: true,
            mc_samples: 50_000,
            mc_sigmas: 4.0,
            max_quadrature_axes: 2,
            mc_negative_floor: MC_NEGATIVE_FLOOR,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance_abs > 0.0) {
            return Err(GpiError::Invalid(format!("tolerance_abs must be positive, got {}", self.tolerance_abs)));
        }
        let (lo, hi) = self.n_range;
        if lo < 2 || lo > hi {
            return Err(GpiError::Invalid(format!("n_range {:?} must satisfy 2 ≤ lo ≤ hi", self.n_range)));
        }
        if self.mc_samples < 2 {
            return Err(GpiError::Invalid("mc_samples must be at least 2".into()));
        }
        if !(self.mc_negative_floor > -1.0 && self.mc_negative_floor < 0.0) {
            return Err(GpiError::Invalid(format!("mc_negative_floor must lie in (−1, 0), got {}", self.mc_negative_floor)));
        }
        if !(self.mc_sigmas >= 0.0) {
            return Err(GpiError::Invalid(format!("mc_sigmas must be non-negative, got {}", self.mc_sigmas)));
        }
        self.default_alphas.validate()?;
        for g in self.alpha_grids.values() {
            g.validate()?;
        }
        Ok(())
    }

    fn grid(&self, kind: Kind) -> &AlphaGrid {
        self.alpha_grids.get(&kind).unwrap_or(&self.default_alphas)
    }

    fn eval_options(&self, mc_seed: u64) -> EvalOptions {
        EvalOptions {
            mc_fallback: self.mc_fallback,
            mc: McOptions { samples: self.mc_samples, seed: mc_seed },
            max_quadrature_axes: self.max_quadrature_axes,
        }
    }

    pub fn check_options(&self, mc_seed: u64) -> CheckOptions {
        CheckOptions {
            tolerance_abs: self.tolerance_abs,
            mc_sigmas: self.mc_sigmas,
            eval: self.eval_options(mc_seed),
            corruption: None,
        }
    }
}

/// A fixed dimension for kinds that have one.
fn fixed_dimension(kind: Kind) -> Option<usize> {
    match kind {
        Kind::Prop1_3 => Some(4),
        Kind::Prop1_4 | Kind::Prop1_5 => Some(3),
        Kind::OppositeN2 | Kind::GpiN2 => Some(2),
        _ => None,
    }
}

/// Largest dimension sampled for kinds whose moments are all-negative and
/// would otherwise leave the deterministic evaluators.
fn max_dimension(kind: Kind) -> usize {
    match kind {
        Kind::WeiA3 => 3,
        _ => usize::MAX,
    }
}

/// Draws one random case of `kind` from the sweep's samplers.
pub fn generate_case(kind: Kind, config: &SweepConfig, seed: u64) -> Result<InequalityCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = config.n_range;
    let cap = max_dimension(kind);
    let n = fixed_dimension(kind).unwrap_or_else(|| rng.random_range(lo.min(cap)..=hi.min(cap)));
    let family = if kind == Kind::EvenGpiSubset1_7 { MatrixFamily::NonnegEntries } else { config.matrix_family };
    let sigma = random_correlation(n, family, rng.next_u64())?;
    let g = config.grid(kind);
    let mut a = vec![0.0; n];
    let mut split = None;
    match kind {
        Kind::Thm1_1 => {
            a[0] = g.negative(&mut rng);
            a[1..].fill(2.0);
        }
        Kind::Thm1_2 | Kind::RemarkEq2 => {
            for x in &mut a[..n - 1] {
                *x = g.negative(&mut rng);
            }
            a[n - 1] = if kind == Kind::RemarkEq2 { 1.0 } else { g.positive(&mut rng) };
        }
        Kind::Prop1_3 => {
            a[0] = g.negative(&mut rng);
            for x in &mut a[1..] {
                *x = g.even(&mut rng, 6);
            }
        }
        Kind::Prop1_4 | Kind::OppositeN2 => {
            a[0] = g.negative(&mut rng);
            for x in &mut a[1..] {
                *x = g.positive(&mut rng);
            }
        }
        Kind::Prop1_5 => {
            a[0] = g.negative(&mut rng);
            a[1] = g.negative(&mut rng);
            a[2] = g.positive(&mut rng);
        }
        Kind::WeiA3 => {
            for x in &mut a {
                *x = g.negative(&mut rng);
            }
            split = Some(rng.random_range(1..n));
        }
        Kind::GpiN2 => {
            for x in &mut a {
                *x = g.positive(&mut rng);
            }
        }
        Kind::EvenGpi1_6 | Kind::EvenGpiSubset1_7 => {
            if kind == Kind::EvenGpi1_6 && n != 3 {
                a.fill(2.0);
            } else {
                for x in &mut a {
                    *x = g.even(&mut rng, u32::MAX);
                }
                if a.iter().sum::<f64>() > 2.0 * ISSERLIS_DEGREE_CAP as f64 {
                    a.fill(2.0);
                }
            }
            if kind == Kind::EvenGpiSubset1_7 {
                split = Some(rng.random_range(1..n));
            }
        }
    }
    if a.iter().filter(|&&x| x != 0.0).count() >= 3 && quadrature_axes(&a) > config.max_quadrature_axes {
        let lo = g.negative.0.max(config.mc_negative_floor);
        let range = (lo, g.negative.1.max(lo));
        for x in a.iter_mut().filter(|x| **x < 0.0) {
            *x = uniform(&mut rng, range);
        }
    }
    InequalityCase::new(kind, sigma, ExponentVector::new(a)?, split)
}

/// Tolerance policy and evaluation settings for one check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOptions {
    pub tolerance_abs: f64,
    pub mc_sigmas: f64,
    pub eval: EvalOptions,
    /// Harness self-test: lower bounds are multiplied and upper bounds
    /// divided by this factor before the comparison.
    pub corruption: Option<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        SweepConfig::default().check_options(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub kind: String,
    pub sigma: CorrelationMatrix,
    pub alphas: ExponentVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<usize>,
    pub lhs: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub slack_lower: Option<f64>,
    pub slack_upper: Option<f64>,
    pub method: String,
    /// Error allowance before `tolerance_abs`: deterministic tolerances plus
    /// the configured multiple of any Monte Carlo standard error.
    pub err: f64,
    pub pass: bool,
    pub skipped: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Prop15Diagnostics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl CaseResult {
    fn empty(kind: &str, sigma: CorrelationMatrix, alphas: ExponentVector, split: Option<usize>, seed: u64) -> Self {
        CaseResult {
            case_id: String::new(),
            kind: kind.to_string(),
            sigma,
            alphas,
            split,
            lhs: None,
            lower: None,
            upper: None,
            slack_lower: None,
            slack_upper: None,
            method: String::new(),
            err: 0.0,
            pass: false,
            skipped: false,
            seed,
            constant: None,
            diagnostics: None,
            flags: Vec::new(),
            message: None,
        }
    }

    pub fn failed(&self) -> bool {
        !self.pass && !self.skipped
    }
}

/// Evaluates both sides of `case` and applies the tolerance policy:
/// a side passes when its slack is ≥ −(err + tolerance_abs).
/// Capability errors mark the case skipped; other errors fail it.
pub fn check_case(case: &InequalityCase, opts: &CheckOptions) -> CaseResult {
    let mut out = CaseResult::empty(case.kind.as_str(), case.sigma.clone(), case.alphas.clone(), case.split, opts.eval.mc.seed);
    let r = match evaluate(case, &opts.eval) {
        Ok(r) => r,
        Err(e) => {
            out.skipped = e.is_capability();
            out.method = if out.skipped { "skipped".into() } else { "error".into() };
            out.message = Some(e.to_string());
            return out;
        }
    };
    let mc = |is_mc: bool| if is_mc { opts.mc_sigmas } else { 1.0 };
    let lhs_err = mc(r.lhs.method == Method::MonteCarlo) * r.lhs.err;
    let factor = opts.corruption.unwrap_or(1.0);
    let mut err: f64 = lhs_err;
    if let Some(l) = r.lower {
        let v = l.value * factor;
        out.lower = Some(v);
        out.slack_lower = Some(r.lhs.value - v);
        err = err.max(lhs_err + mc(l.monte_carlo) * l.err * factor);
    }
    if let Some(u) = r.upper {
        let v = u.value / factor;
        out.upper = Some(v);
        out.slack_upper = Some(v - r.lhs.value);
        err = err.max(lhs_err + mc(u.monte_carlo) * u.err / factor);
    }
    let allowance = -(err + opts.tolerance_abs);
    out.pass = [out.slack_lower, out.slack_upper].into_iter().flatten().all(|s| s >= allowance);
    // the standard error of a heavy-tailed sample mean supports no verdict
    if !r.lhs.stderr_reliable() {
        out.pass = false;
        out.skipped = true;
        out.message = Some(format!("{STDERR_UNRELIABLE}: Monte Carlo estimate is inconclusive"));
    }
    out.lhs = Some(r.lhs.value);
    out.method = r.lhs.method.as_str().to_string();
    out.err = err;
    out.constant = r.constant;
    out.diagnostics = r.diagnostics;
    out.flags = r.lhs.flags;
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl Summary {
    pub fn of(results: &[CaseResult]) -> Self {
        let passed = results.iter().filter(|r| r.pass).count();
        let skipped = results.iter().filter(|r| r.skipped).count();
        Summary { total: results.len(), passed, failed: results.len() - passed - skipped, skipped }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: serde_json::Value,
    pub results: Vec<CaseResult>,
    pub summary: Summary,
}

impl Report {
    pub fn new<C: Serialize>(config: &C, results: Vec<CaseResult>) -> Result<Self> {
        let summary = Summary::of(&results);
        Ok(Report { config: serde_json::to_value(config)?, results, summary })
    }
}

fn case_seed(master: u64, index: usize) -> u64 {
    master ^ index as u64
}

/// One result per (kind, trial), in that order. Cases run concurrently but
/// each draws only from its own seed, so the report does not depend on
/// scheduling.
pub fn sweep(config: &SweepConfig) -> Result<Report> {
    sweep_with(config, None)
}

/// [`sweep`] with an optional bound corruption factor, for self-tests.
pub fn sweep_with(config: &SweepConfig, corruption: Option<f64>) -> Result<Report> {
    config.validate()?;
    let trials = config.trials;
    let total = config.kinds.len() * trials;
    let results: Vec<CaseResult> = (0..total)
        .into_par_iter()
        .map(|i| {
            let kind = config.kinds[i / trials];
            let seed = case_seed(config.master_seed, i);
            let mut res = match generate_case(kind, config, seed) {
                Ok(case) => {
                    let mut opts = config.check_options(seed.rotate_left(32));
                    opts.corruption = corruption;
                    check_case(&case, &opts)
                }
                Err(e) => {
                    let mut r = CaseResult::empty(kind.as_str(), CorrelationMatrix::identity(2), ExponentVector::new(vec![0.0, 0.0]).expect("valid"), None, seed);
                    r.method = "error".into();
                    r.message = Some(format!("case generation failed: {e}"));
                    r
                }
            };
            res.case_id = format!("{kind}-{:05}", i % trials);
            res.seed = seed;
            res
        })
        .collect();
    Report::new(config, results)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HuntConfig {
    pub n: usize,
    pub trials: usize,
    pub alpha_range: (f64, f64),
    /// Draw exponents from {2, 4} instead, where the inequality is proved.
    pub even_only: bool,
    pub matrix_family: MatrixFamily,
    pub master_seed: u64,
    pub samples: u64,
    pub sigmas: f64,
    pub retest_factor: u64,
}

impl Default for HuntConfig {
    fn default() -> Self {
        HuntConfig {
            n: 3,
            trials: 1000,
            alpha_range: (BOUNDARY_MARGIN, 4.0),
            even_only: false,
            matrix_family: MatrixFamily::GramNormalized,
            master_seed: 0,
            samples: 20_000,
            sigmas: 6.0,
            retest_factor: 100,
        }
    }
}

pub const CANDIDATE: &str = "candidate violation";
pub const RETEST_CONFIRMED: &str = "confirmed on retest";
pub const RETEST_CLEARED: &str = "cleared on retest";

impl HuntConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n != 3 {
            return Err(GpiError::Invalid(format!("the hunter runs in dimension 3 only, got {}", self.n)));
        }
        let (lo, hi) = self.alpha_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(GpiError::Invalid(format!("alpha_range {:?} must lie in (0, ∞)", self.alpha_range)));
        }
        if self.samples < 2 || self.retest_factor < 1 {
            return Err(GpiError::Invalid("samples must be ≥ 2 and retest_factor ≥ 1".into()));
        }
        Ok(())
    }
}

fn is_even_integer(a: f64) -> bool {
    a.fract() == 0.0 && (a as u64) % 2 == 0
}

/// Searches for E[∏|X_j|^{α_j}] < ∏E|X_j|^{α_j} with positive exponents by
/// Monte Carlo. A case whose estimate sits more than `sigmas` standard errors
/// below the product is a candidate and is re-estimated with
/// `retest_factor` times the samples; it fails only if the retest agrees.
pub fn hunt_gpi(config: &HuntConfig) -> Result<Report> {
    hunt_gpi_with(config, &[])
}

/// [`hunt_gpi`] with (trial, factor) pairs multiplying the product of
/// marginals of the given trials, for self-tests.
pub fn hunt_gpi_with(config: &HuntConfig, inject: &[(usize, f64)]) -> Result<Report> {
    config.validate()?;
    let results = (0..config.trials)
        .into_par_iter()
        .map(|i| hunt_one(config, i, inject.iter().find(|(t, _)| *t == i).map_or(1.0, |&(_, f)| f)))
        .collect::<Result<Vec<_>>>()?;
    Report::new(config, results)
}

fn hunt_one(config: &HuntConfig, index: usize, factor: f64) -> Result<CaseResult> {
    let seed = case_seed(config.master_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = random_correlation(config.n, config.matrix_family, rng.next_u64())?;
    let mut a = vec![0.0; config.n];
    for x in &mut a {
        *x = if config.even_only {
            [2.0, 4.0][rng.random_range(0..2)]
        } else {
            loop {
                let v = uniform(&mut rng, config.alpha_range);
                if !is_even_integer(v) {
                    break v;
                }
            }
        };
    }
    let alphas = ExponentVector::new(a.clone())?;
    let rhs = factor * a.iter().map(|&x| abs_moment_1d(x, 1.0)).product::<Result<f64>>()?;
    let mc_seed = rng.next_u64();
    let est = mc_mixed_moment(sigma.sym(), &alphas, config.samples, mc_seed)?;
    let mut out = CaseResult::empty("gpi", sigma.clone(), alphas.clone(), None, seed);
    out.case_id = format!("gpi-{index:05}");
    out.method = est.method.as_str().to_string();
    out.lhs = Some(est.value);
    out.lower = Some(rhs);
    out.slack_lower = Some(est.value - rhs);
    out.err = config.sigmas * est.err;
    out.pass = true;
    if est.value + config.sigmas * est.err < rhs {
        out.flags.push(CANDIDATE.into());
        let again = mc_mixed_moment(sigma.sym(), &alphas, config.samples * config.retest_factor, mc_seed ^ 0x9e37_79b9_7f4a_7c15)?;
        if again.value + config.sigmas * again.err < rhs {
            out.flags.push(RETEST_CONFIRMED.into());
            out.pass = false;
        } else {
            out.flags.push(RETEST_CLEARED.into());
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = GpiError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(GpiError::Invalid(format!("unknown report format {s:?} (expected json or csv)"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

pub const CSV_COLUMNS: [&str; 13] = [
    "case_id", "kind", "n", "alphas", "lhs", "lower", "upper", "slack_lower", "slack_upper", "method", "err", "pass", "seed",
];

fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_report<W: Write>(report: &Report, format: ReportFormat, mut w: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, report)?;
            writeln!(w)?;
        }
        ReportFormat::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(CSV_COLUMNS)?;
            for r in &report.results {
                let alphas: Vec<String> = r.alphas.as_slice().iter().map(|&a| num(a)).collect();
                csv.write_record([
                    r.case_id.clone(),
                    r.kind.clone(),
                    r.sigma.n().to_string(),
                    alphas.join(";"),
                    opt(r.lhs),
                    opt(r.lower),
                    opt(r.upper),
                    opt(r.slack_lower),
                    opt(r.slack_upper),
                    r.method.clone(),
                    num(r.err),
                    if r.skipped { "skipped".into() } else { r.pass.to_string() },
                    r.seed.to_string(),
                ])?;
            }
            csv.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the report to `path`.
pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| GpiError::Io(format!("{}: {e}", path.display())))?;
    write_report(report, format, BufWriter::new(file))
}
