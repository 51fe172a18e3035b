//! Bergman-space moments `<z^a, z^b> = int_Omega z^a conj(z)^b dv`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condition_d::{exact_omega_k_moment, power_decay_membership};
use crate::domain::{DomainSpec, Shape};
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::profile::ProfileFunction;
use crate::quadrature::integrate_to_infinity;
use crate::sampling::{check_rate, Sampler};
use crate::scalar::{ln_factorial, Scalar};

/// How a moment was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl MomentMethod {
    pub fn is_deterministic(self) -> bool {
        !matches!(self, MomentMethod::MonteCarlo)
    }
}

/// Requested evaluation route. `Auto` prefers closed forms, then
/// quadrature, then Monte Carlo.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodRequest {
    #[default]
    Auto,
    MonteCarlo,
    Quadrature,
}

impl FromStr for MethodRequest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodRequest::Auto),
            "mc" | "monte_carlo" => Ok(MethodRequest::MonteCarlo),
            "quad" | "quadrature" => Ok(MethodRequest::Quadrature),
            other => Err(Error::InvalidDomain(format!("unknown method '{other}'"))),
        }
    }
}

/// A moment value with its uncertainty.
///
/// `std_error` is zero for deterministic methods; quadrature reports its
/// absolute error estimate in `abs_tolerance` instead.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    #[serde(with = "complex_parts")]
    pub value: Complex64,
    #[serde(rename = "se")]
    pub std_error: f64,
    pub method: MomentMethod,
    /// Proposals for Monte Carlo, function evaluations for quadrature.
    pub effort: u64,
    #[serde(rename = "tol")]
    pub abs_tolerance: f64,
}

mod complex_parts {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Parts {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        Parts { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let p = Parts::deserialize(d)?;
        Ok(Complex64::new(p.re, p.im))
    }
}

impl MomentEstimate {
    fn exact(value: f64) -> Self {
        MomentEstimate {
            value: Complex64::new(value, 0.0),
            std_error: 0.0,
            method: MomentMethod::ClosedForm,
            effort: 0,
            abs_tolerance: 0.0,
        }
    }

    fn conj(&self) -> Self {
        MomentEstimate {
            value: self.value.conj(),
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub method: MethodRequest,
    /// Monte Carlo proposals drawn from the enclosure.
    pub budget: u64,
    pub seed: u64,
    /// Cut-off radius for unbounded coordinates (Monte Carlo only).
    pub truncation: Option<f64>,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            method: MethodRequest::Auto,
            budget: 2_000_000,
            seed: 0,
            truncation: None,
        }
    }
}

/// `||z^a||^2` over the ball of radius `radius` in `C^n`:
/// `radius^(2|a| + 2n) pi^n a! / (n + |a|)!`.
pub fn ball_norm_closed_form<T: Scalar>(n: usize, radius: T, alpha: &MultiIndex) -> T {
    let deg = u64::from(alpha.degree());
    let ln_alpha_fact = alpha
        .exps()
        .iter()
        .fold(T::zero(), |s, &a| s + ln_factorial::<T>(u64::from(a)));
    let ln_ratio = ln_alpha_fact - ln_factorial::<T>(n as u64 + deg);
    let power = T::of_usize(2 * deg as usize + 2 * n);
    radius.powf(power) * T::PI().powi(n as i32) * ln_ratio.exp()
}

/// `||z^a||^2` over the polydisk: `prod_j pi r_j^(2 a_j + 2) / (a_j + 1)`.
pub fn polydisk_norm_closed_form<T: Scalar>(radii: &[T], alpha: &MultiIndex) -> T {
    radii
        .iter()
        .zip(alpha.exps())
        .fold(T::one(), |acc, (&r, &a)| {
            let a = T::of(f64::from(a));
            acc * T::PI() * r.powf(T::of(2.0) * a + T::of(2.0)) / (a + T::one())
        })
}

/// Moments of `{|z2| < f(|z1|)}` by radial quadrature.
///
/// Off-diagonal moments vanish identically (the domain is Reinhardt);
/// diagonal ones reduce to
/// `(2 pi)^2 int_0^inf r^(2 a1 + 1) f(r)^(2 a2 + 2) / (2 a2 + 2) dr`.
pub fn profile_moment_quadrature(
    f: &ProfileFunction,
    alpha: &MultiIndex,
    beta: &MultiIndex,
) -> Result<MomentEstimate> {
    for m in [alpha, beta] {
        if m.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: m.len(),
            });
        }
    }
    if alpha != beta {
        return Ok(MomentEstimate {
            method: MomentMethod::Quadrature,
            ..MomentEstimate::exact(0.0)
        });
    }
    let a1 = alpha.exps()[0] as i32;
    let fpow = 2 * alpha.exps()[1] as i32 + 2;
    let integrand = |r: f64| {
        let fr = f.eval(r);
        if fr <= 0.0 {
            0.0
        } else {
            r.powi(2 * a1 + 1) * fr.powi(fpow)
        }
    };
    let tail = integrate_to_infinity(integrand, 1e-12, 1e-14)?;
    let scale = 4.0 * PI * PI / f64::from(fpow);
    Ok(MomentEstimate {
        value: Complex64::new(scale * tail.value, 0.0),
        std_error: 0.0,
        method: MomentMethod::Quadrature,
        effort: tail.evaluations as u64,
        abs_tolerance: scale * tail.abs_error,
    })
}

/// Analytic `L^2` check for monomials over profile domains.
pub(crate) fn check_integrable(spec: &DomainSpec, alpha: &MultiIndex) -> Result<()> {
    let Shape::Profile { f } = spec.shape() else {
        return Ok(());
    };
    let Some(p) = f.power_decay_exponent() else {
        return Ok(());
    };
    let (a1, a2) = (alpha.exps()[0], alpha.exps()[1]);
    // z1^a1 z2^a2 is square integrable iff 2 a1 + 2 < p (2 a2 + 2).
    let ok = if a2 == 0 {
        let c = f.eval(1e8) * 1e8f64.powf(p);
        power_decay_membership(p, c, c, a1)
    } else {
        f64::from(a1) < p * (f64::from(a2) + 1.0) - 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NotIntegrable {
            monomial: alpha.to_string(),
            reason: format!("profile decays like r^-{p:.4}"),
        })
    }
}

/// Deterministic value when the shape admits one.
fn closed_form_moment(spec: &DomainSpec, alpha: &MultiIndex, beta: &MultiIndex) -> Option<f64> {
    let diagonal = alpha == beta;
    let value = match spec.shape() {
        Shape::Polydisk { radii } => diagonal.then(|| polydisk_norm_closed_form(radii, alpha)),
        Shape::Ball { radius } | Shape::PuncturedBall { radius, .. } => {
            diagonal.then(|| ball_norm_closed_form(spec.dim(), *radius, alpha))
        }
        Shape::PolydiskDifference { outer, inner } => diagonal.then(|| {
            polydisk_norm_closed_form(outer, alpha) - polydisk_norm_closed_form(inner, alpha)
        }),
        Shape::ExpProfileFamily { k } => {
            diagonal.then(|| exact_omega_k_moment(*k, alpha.exps()[0], alpha.exps()[1]))
        }
        _ => return None,
    };
    Some(value.unwrap_or(0.0))
}

fn has_closed_form(spec: &DomainSpec) -> bool {
    matches!(
        spec.shape(),
        Shape::Polydisk { .. }
            | Shape::Ball { .. }
            | Shape::PuncturedBall { .. }
            | Shape::PolydiskDifference { .. }
            | Shape::ExpProfileFamily { .. }
    )
}

/// The route a request resolves to for this domain.
pub fn resolve_method(spec: &DomainSpec, request: MethodRequest) -> Result<MomentMethod> {
    let deterministic = if has_closed_form(spec) {
        Some(MomentMethod::ClosedForm)
    } else if matches!(spec.shape(), Shape::Profile { .. }) {
        Some(MomentMethod::Quadrature)
    } else {
        None
    };
    match (request, deterministic) {
        (MethodRequest::MonteCarlo, _) => Ok(MomentMethod::MonteCarlo),
        (_, Some(m)) => Ok(m),
        (MethodRequest::Auto, None) => Ok(MomentMethod::MonteCarlo),
        (MethodRequest::Quadrature, None) => Err(Error::NoDeterministicRoute(spec.describe())),
    }
}

fn deterministic_moment(
    spec: &DomainSpec,
    method: MomentMethod,
    alpha: &MultiIndex,
    beta: &MultiIndex,
) -> Result<MomentEstimate> {
    match (method, spec.shape()) {
        (MomentMethod::Quadrature, Shape::Profile { f }) => profile_moment_quadrature(f, alpha, beta),
        (MomentMethod::ClosedForm, _) => closed_form_moment(spec, alpha, beta)
            .map(MomentEstimate::exact)
            .ok_or_else(|| Error::NoDeterministicRoute(spec.describe())),
        _ => Err(Error::NoDeterministicRoute(spec.describe())),
    }
}

fn check_lengths(spec: &DomainSpec, m: &MultiIndex) -> Result<()> {
    if m.len() == spec.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: m.len(),
        })
    }
}

/// `<z^alpha, z^beta>` over `spec`.
pub fn inner_product(
    spec: &DomainSpec,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    opts: &MomentOptions,
) -> Result<MomentEstimate> {
    check_lengths(spec, alpha)?;
    check_lengths(spec, beta)?;
    check_integrable(spec, alpha)?;
    check_integrable(spec, beta)?;
    let method = resolve_method(spec, opts.method)?;
    if method.is_deterministic() {
        return deterministic_moment(spec, method, alpha, beta);
    }
    let cloud = monte_carlo_moments(spec, &[alpha.clone(), beta.clone()], &[(0, 1)], opts)?;
    Ok(cloud.estimates[0])
}

/// Shared-sample Monte Carlo estimates for a list of monomial pairs.
pub(crate) struct MonteCarloMoments {
    pub estimates: Vec<MomentEstimate>,
}

#[derive(Clone)]
struct PairSums {
    sum: Vec<Complex64>,
    sum_sq: Vec<f64>,
    values: Vec<Complex64>,
    powers: Vec<Vec<Complex64>>,
}

pub(crate) fn monte_carlo_moments(
    spec: &DomainSpec,
    monomials: &[MultiIndex],
    pairs: &[(usize, usize)],
    opts: &MomentOptions,
) -> Result<MonteCarloMoments> {
    if opts.budget < 2 {
        return Err(Error::InvalidDomain("Monte Carlo budget must be at least 2".into()));
    }
    let sampler = Sampler::new(spec, opts.seed, opts.truncation)?;
    let n = spec.dim();
    let max_exp: Vec<usize> = (0..n)
        .map(|j| monomials.iter().map(|m| m.exps()[j] as usize).max().unwrap_or(0))
        .collect();
    let init = || PairSums {
        sum: vec![Complex64::new(0.0, 0.0); pairs.len()],
        sum_sq: vec![0.0; pairs.len()],
        values: vec![Complex64::new(0.0, 0.0); monomials.len()],
        powers: max_exp.iter().map(|&e| vec![Complex64::new(1.0, 0.0); e + 1]).collect(),
    };
    let visit = |acc: &mut PairSums, z: &[Complex64]| {
        for (j, table) in acc.powers.iter_mut().enumerate() {
            for e in 1..table.len() {
                table[e] = table[e - 1] * z[j];
            }
        }
        for (v, m) in acc.values.iter_mut().zip(monomials) {
            *v = m
                .exps()
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |p, (j, &e)| p * acc.powers[j][e as usize]);
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let (a, b) = (acc.values[i], acc.values[j]);
            let h = if i == j {
                Complex64::new(a.norm_sqr(), 0.0)
            } else {
                a * b.conj()
            };
            acc.sum[k] += h;
            acc.sum_sq[k] += a.norm_sqr() * b.norm_sqr();
        }
    };
    let batches = sampler.fold_batches(opts.budget, init, visit);
    let accepted: u64 = batches.iter().map(|b| b.accepted).sum();
    check_rate(accepted, opts.budget)?;
    let mut total = init();
    for b in &batches {
        for k in 0..pairs.len() {
            total.sum[k] += b.acc.sum[k];
            total.sum_sq[k] += b.acc.sum_sq[k];
        }
    }
    let m = opts.budget as f64;
    let volume = sampler.box_volume();
    let estimates = (0..pairs.len())
        .map(|k| {
            let mean = total.sum[k] / m;
            let second = total.sum_sq[k] / m;
            let var = (second - mean.norm_sqr()).max(0.0);
            MomentEstimate {
                value: mean * volume,
                std_error: volume * (var / (m - 1.0)).sqrt(),
                method: MomentMethod::MonteCarlo,
                effort: opts.budget,
                abs_tolerance: 0.0,
            }
        })
        .collect();
    Ok(MonteCarloMoments { estimates })
}

/// Truncated Gram data `{<z^a, z^b> : |a|, |b| <= N}`.
///
/// Only the upper triangle is computed; the lower one is its conjugate, so
/// Hermitian symmetry holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct GramData {
    degree_bound: u32,
    indices: Vec<MultiIndex>,
    entries: Vec<MomentEstimate>,
}

impl GramData {
    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn dim(&self) -> usize {
        self.indices.first().map_or(0, MultiIndex::len)
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, i: usize, j: usize) -> &MomentEstimate {
        &self.entries[i * self.indices.len() + j]
    }

    pub fn entry(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Option<&MomentEstimate> {
        let i = self.indices.iter().position(|m| m == alpha)?;
        let j = self.indices.iter().position(|m| m == beta)?;
        Some(self.get(i, j))
    }

    /// `<1, 1>`, the (estimated) volume.
    pub fn volume(&self) -> f64 {
        self.get(0, 0).value.re
    }

    /// Unordered off-diagonal pairs `(i, j)`, `i < j`.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.indices.len();
        (0..m).flat_map(move |i| (i + 1..m).map(move |j| (i, j)))
    }

    fn from_upper(degree_bound: u32, indices: Vec<MultiIndex>, upper: Vec<MomentEstimate>) -> Self {
        let m = indices.len();
        let mut entries = vec![MomentEstimate::exact(0.0); m * m];
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                let mut e = upper[k];
                if i == j {
                    e.value.im = 0.0;
                }
                // Adding +0.0 turns a negative zero into +0.0 so serialized output never shows "-0".
                e.value.re += 0.0;
                e.value.im += 0.0;
                let mut lower = e.conj();
                lower.value.im += 0.0;
                entries[i * m + j] = e;
                if i != j {
                    entries[j * m + i] = lower;
                }
                k += 1;
            }
        }
        GramData {
            degree_bound,
            indices,
            entries,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GramRepr::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        GramData::try_from(serde_json::from_str::<GramRepr>(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct GramEntryRepr {
    alpha: MultiIndex,
    beta: MultiIndex,
    re: f64,
    im: f64,
    se: f64,
    method: MomentMethod,
    effort: u64,
    tol: f64,
}

#[derive(Serialize, Deserialize)]
struct GramRepr {
    #[serde(rename = "N")]
    degree_bound: u32,
    entries: Vec<GramEntryRepr>,
}

impl From<&GramData> for GramRepr {
    fn from(g: &GramData) -> Self {
        let m = g.indices.len();
        let entries = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| {
                let e = g.get(i, j);
                GramEntryRepr {
                    alpha: g.indices[i].clone(),
                    beta: g.indices[j].clone(),
                    re: e.value.re,
                    im: e.value.im,
                    se: e.std_error,
                    method: e.method,
                    effort: e.effort,
                    tol: e.abs_tolerance,
                }
            })
            .collect();
        GramRepr {
            degree_bound: g.degree_bound,
            entries,
        }
    }
}

impl Serialize for GramData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GramRepr::from(self).serialize(s)
    }
}

impl TryFrom<GramRepr> for GramData {
    type Error = Error;

    fn try_from(repr: GramRepr) -> Result<Self> {
        let n = repr
            .entries
            .first()
            .map(|e| e.alpha.len())
            .ok_or_else(|| Error::Serialization("empty Gram data".into()))?;
        let indices = MultiIndex::up_to_degree(n, repr.degree_bound);
        let m = indices.len();
        if repr.entries.len() != m * m {
            return Err(Error::Serialization(format!(
                "expected {} entries for N = {}, found {}",
                m * m,
                repr.degree_bound,
                repr.entries.len()
            )));
        }
        let mut entries = vec![None; m * m];
        for e in repr.entries {
            let locate = |x: &MultiIndex| {
                indices
                    .iter()
                    .position(|m| m == x)
                    .ok_or_else(|| Error::Serialization(format!("multi-index {x} outside degree bound")))
            };
            let (i, j) = (locate(&e.alpha)?, locate(&e.beta)?);
            entries[i * m + j] = Some(MomentEstimate {
                value: Complex64::new(e.re, e.im),
                std_error: e.se,
                method: e.method,
                effort: e.effort,
                abs_tolerance: e.tol,
            });
        }
        let entries: Vec<MomentEstimate> = entries
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Serialization("duplicate Gram entries".into()))?;
        for i in 0..m {
            for j in i..m {
                if entries[j * m + i].value != entries[i * m + j].value.conj() {
                    return Err(Error::Serialization(format!("entries ({i},{j}) are not Hermitian")));
                }
            }
        }
        Ok(GramData {
            degree_bound: repr.degree_bound,
            indices,
            entries,
        })
    }
}

impl<'de> Deserialize<'de> for GramData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = GramRepr::deserialize(d)?;
        GramData::try_from(repr).map_err(serde::de::Error::custom)
    }
}

/// All moments with `|a|, |b| <= degree_bound`. Monte Carlo entries share a
/// single point cloud, so their errors are correlated but each entry is
/// unbiased.
pub fn gram(spec: &DomainSpec, degree_bound: u32, opts: &MomentOptions) -> Result<GramData> {
    let indices = MultiIndex::up_to_degree(spec.dim(), degree_bound);
    for m in &indices {
        check_integrable(spec, m)?;
    }
    let m = indices.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let method = resolve_method(spec, opts.method)?;
    let upper = if method.is_deterministic() {
        pairs
            .par_iter()
            .map(|&(i, j)| deterministic_moment(spec, method, &indices[i], &indices[j]))
            .collect::<Result<Vec<_>>>()?
    } else {
        monte_carlo_moments(spec, &indices, &pairs, opts)?.estimates
    };
    Ok(GramData::from_upper(degree_bound, indices, upper))
}

/// Significance thresholds for calling a moment non-zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub abs_tol: f64,
    pub sigma_factor: f64,
}

impl Policy {
    /// `abs_tol = 1e-3 * volume`, five standard errors.
    pub fn scaled_to_volume(volume: f64) -> Self {
        Policy {
            abs_tol: 1e-3 * volume,
            sigma_factor: 5.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Nonzero,
    Zero,
    Inconclusive,
}

pub fn decide_nonzero(est: &MomentEstimate, policy: &Policy) -> Decision {
    let magnitude = est.value.norm();
    let noise = if est.method.is_deterministic() {
        0.0
    } else {
        policy.sigma_factor * est.std_error
    };
    if magnitude > policy.abs_tol.max(noise) {
        Decision::Nonzero
    } else if magnitude + noise < policy.abs_tol {
        Decision::Zero
    } else {
        Decision::Inconclusive
    }
}
