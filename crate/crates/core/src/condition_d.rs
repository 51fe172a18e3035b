//! Condition D: divergence of `sum_k ||z_j^k||^(-1/k)` per coordinate.
//!
//! Bounded coordinates satisfy it trivially. For unbounded ones the series
//! is examined through its terms `a_k = ||z_j^k||^(-1/k)`: the decay
//! exponent `p` in `a_k ~ C k^-p` is fitted on the window `[K/2, K]` and
//! compared with the thresholds. This is a heuristic and is labelled as such.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, Shape};
use crate::error::{Error, Result};
use crate::moments::{
    check_integrable, monte_carlo_moments, profile_moment_quadrature, resolve_method, MomentMethod,
    MomentOptions,
};
use crate::multi_index::MultiIndex;

/// Natural log of an arbitrary-precision integer.
fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// `ln ||z1^a1 z2^a2||^2` over `Omega_k = {|z2| < exp(-|z1|^(1/2^k))}`.
///
/// With `j = 2 a1`, `m = 2 a2` and `N = 2^k (j + 2)` the squared norm is
/// `2^(k+2) pi^2 (N - 1)! / (m + 2)^(N + 1)`.
pub fn exact_omega_k_log_moment(k: u32, a1: u32, a2: u32) -> f64 {
    let j = 2 * u64::from(a1);
    let m = 2 * u64::from(a2);
    let big_n = (1u64 << k) * (j + 2);
    f64::from(k + 2) * std::f64::consts::LN_2 + 2.0 * PI.ln() + ln_biguint(&factorial(big_n - 1))
        - (big_n + 1) as f64 * ((m + 2) as f64).ln()
}

/// `||z1^a1 z2^a2||^2` over `Omega_k`, `k in {0, 1}`.
pub fn exact_omega_k_moment(k: u32, a1: u32, a2: u32) -> f64 {
    exact_omega_k_log_moment(k, a1, a2).exp()
}

/// `z_1^j in L^2` for `{|z2| < f(|z1|)}` when `C1 r^-p <= f(r) <= C2 r^-p`
/// far out: the norm integral diverges exactly when `j >= p - 1`.
pub fn power_decay_membership(p: f64, c1: f64, c2: f64, j: u32) -> bool {
    assert!(p > 0.0 && c1 > 0.0 && c2 > 0.0, "p, C1, C2 must be positive");
    f64::from(j) < p - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSource {
    ExactFormula,
    Quadrature,
    MonteCarlo,
}

/// `ln ||z_j^k||` for `k = 1..=K`. Stored in log space: `(4K + 3)!`
/// overflows `f64` long before `K = 200`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSequence {
    pub coordinate: usize,
    pub log_norms: Vec<f64>,
    pub source: NormSource,
}

impl NormSequence {
    pub fn new(coordinate: usize, log_norms: Vec<f64>, source: NormSource) -> Result<Self> {
        if let Some(k) = log_norms.iter().position(|x| !x.is_finite()) {
            return Err(Error::NotIntegrable {
                monomial: format!("z{coordinate}^{}", k + 1),
                reason: "norm is not a positive finite number".into(),
            });
        }
        Ok(NormSequence {
            coordinate,
            log_norms,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.log_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_norms.is_empty()
    }

    /// `(k, ||z_j^k||)`; norms beyond `f64` range come back as infinity.
    pub fn terms(&self) -> Vec<(u32, f64)> {
        self.log_norms
            .iter()
            .enumerate()
            .map(|(i, l)| (i as u32 + 1, l.exp()))
            .collect()
    }

    /// `a_k = ||z_j^k||^(-1/k)`.
    pub fn series_terms(&self) -> Vec<f64> {
        self.log_norms
            .iter()
            .enumerate()
            .map(|(i, l)| (-l / (i as f64 + 1.0)).exp())
            .collect()
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        self.series_terms()
            .iter()
            .scan(0.0, |s, a| {
                *s += a;
                Some(*s)
            })
            .collect()
    }

    /// CSV with header `k,norm,a_k,partial_sum`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,norm,a_k,partial_sum\n");
        for (i, ((l, a), s)) in self
            .log_norms
            .iter()
            .zip(self.series_terms())
            .zip(self.partial_sums())
            .enumerate()
        {
            writeln!(out, "{},{},{:e},{:e}", i + 1, format_from_ln(*l), a, s).expect("string write");
        }
        out
    }
}

/// `exp(l)` in scientific notation, also past the `f64` range.
fn format_from_ln(l: f64) -> String {
    let v = l.exp();
    if v.is_finite() && v > 0.0 {
        return format!("{v:e}");
    }
    let log10 = l / std::f64::consts::LN_10;
    let exponent = log10.floor();
    let mantissa = 10f64.powf(log10 - exponent);
    format!("{mantissa:.15}e{exponent}")
}

fn log_closed_form_norm_sq(spec: &DomainSpec, alpha: &MultiIndex) -> Option<f64> {
    let ln_fact = |n: u64| (2..=n).map(|i| (i as f64).ln()).sum::<f64>();
    let ln_polydisk = |radii: &[f64]| -> f64 {
        radii
            .iter()
            .zip(alpha.exps())
            .map(|(r, &a)| PI.ln() + (2.0 * f64::from(a) + 2.0) * r.ln() - (f64::from(a) + 1.0).ln())
            .sum()
    };
    match spec.shape() {
        Shape::Polydisk { radii } => Some(ln_polydisk(radii)),
        Shape::Ball { radius } | Shape::PuncturedBall { radius, .. } => {
            let n = spec.dim() as u64;
            let deg = u64::from(alpha.degree());
            let ln_alpha: f64 = alpha.exps().iter().map(|&a| ln_fact(u64::from(a))).sum();
            Some((2 * deg + 2 * n) as f64 * radius.ln() + n as f64 * PI.ln() + ln_alpha - ln_fact(n + deg))
        }
        Shape::PolydiskDifference { outer, inner } => {
            let (lo, li) = (ln_polydisk(outer), ln_polydisk(inner));
            Some(lo + (-(li - lo).exp()).ln_1p())
        }
        Shape::ExpProfileFamily { k } => {
            Some(exact_omega_k_log_moment(*k, alpha.exps()[0], alpha.exps()[1]))
        }
        _ => None,
    }
}

/// `ln ||z_j^k||` for `k = 1..=terms`, using the exact formula where the
/// shape has one, quadrature for profile domains and Monte Carlo otherwise.
pub fn norm_sequence(
    spec: &DomainSpec,
    coordinate: usize,
    terms: usize,
    opts: &MomentOptions,
) -> Result<NormSequence> {
    let n = spec.dim();
    if coordinate == 0 || coordinate > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: coordinate,
        });
    }
    let monomials: Vec<MultiIndex> = (1..=terms as u32).map(|k| MultiIndex::axis(n, coordinate, k)).collect();
    for m in &monomials {
        check_integrable(spec, m)?;
    }
    match resolve_method(spec, opts.method)? {
        MomentMethod::ClosedForm => {
            let logs = monomials
                .iter()
                .map(|m| 0.5 * log_closed_form_norm_sq(spec, m).expect("closed-form shape"))
                .collect();
            NormSequence::new(coordinate, logs, NormSource::ExactFormula)
        }
        MomentMethod::Quadrature => {
            let Shape::Profile { f } = spec.shape() else {
                return Err(Error::NoDeterministicRoute(spec.describe()));
            };
            let logs = monomials
                .iter()
                .map(|m| profile_moment_quadrature(f, m, m).map(|e| 0.5 * e.value.re.ln()))
                .collect::<Result<Vec<_>>>()?;
            NormSequence::new(coordinate, logs, NormSource::Quadrature)
        }
        MomentMethod::MonteCarlo => {
            let pairs: Vec<(usize, usize)> = (0..terms).map(|i| (i, i)).collect();
            let mc = monte_carlo_moments(spec, &monomials, &pairs, opts)?;
            let logs = mc.estimates.iter().map(|e| 0.5 * e.value.re.ln()).collect();
            NormSequence::new(coordinate, logs, NormSource::MonteCarlo)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateVerdict {
    HoldsBounded,
    HoldsDivergent,
    FailsConvergent,
    Inconclusive,
}

impl CoordinateVerdict {
    pub fn holds(self) -> bool {
        matches!(self, CoordinateVerdict::HoldsBounded | CoordinateVerdict::HoldsDivergent)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `p` below this: the series is taken to diverge.
    pub divergent_below: f64,
    /// `p` above this: the series is taken to converge.
    pub convergent_above: f64,
    pub min_terms: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            divergent_below: 1.2,
            convergent_above: 1.6,
            min_terms: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub p: f64,
    pub std_error: f64,
    pub window_start: usize,
    pub window_end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateConditionD {
    pub coordinate: usize,
    pub verdict: CoordinateVerdict,
    pub heuristic: bool,
    pub fit: Option<ExponentFit>,
    pub source: Option<NormSource>,
    pub partial_sums: Vec<f64>,
}

impl CoordinateConditionD {
    pub fn bounded(coordinate: usize) -> Self {
        CoordinateConditionD {
            coordinate,
            verdict: CoordinateVerdict::HoldsBounded,
            heuristic: false,
            fit: None,
            source: None,
            partial_sums: Vec::new(),
        }
    }
}

/// Fits `ln a_k = c0 - p ln k + c1 (ln k)/k + c2 / k` on `k in [ceil(K/2), K]`.
///
/// The two `1/k` terms absorb the Stirling corrections of factorial-type
/// moment growth (`ln ||z^k||^2 = c k ln k + d k + e ln k + f + ...`), which
/// otherwise bias a plain log-log slope by `O(ln K / K)`. For exact power
/// laws they vanish and `p` is recovered exactly.
pub fn fit_decay_exponent(series_terms: &[f64]) -> Option<ExponentFit> {
    let big_k = series_terms.len();
    let start = big_k.div_ceil(2).max(1);
    let rows: Vec<(f64, f64)> = (start..=big_k)
        .map(|k| (k as f64, series_terms[k - 1].ln()))
        .collect();
    if rows.len() < 6 || rows.iter().any(|(_, y)| !y.is_finite()) {
        return None;
    }
    let design: Vec<[f64; 4]> = rows
        .iter()
        .map(|&(k, _)| [1.0, k.ln(), k.ln() / k, 1.0 / k])
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (coef, se) = least_squares(&design, &y)?;
    Some(ExponentFit {
        p: -coef[1],
        std_error: se[1],
        window_start: start,
        window_end: big_k,
    })
}

/// Householder QR least squares with column scaling; returns coefficients
/// and their standard errors.
#[allow(clippy::needless_range_loop)]
fn least_squares<const P: usize>(x: &[[f64; P]], y: &[f64]) -> Option<([f64; P], [f64; P])> {
    let m = x.len();
    let mut scale = [0.0; P];
    for (c, s) in scale.iter_mut().enumerate() {
        *s = x.iter().map(|r| r[c] * r[c]).sum::<f64>().sqrt();
        if *s == 0.0 {
            return None;
        }
    }
    let mut a: Vec<[f64; P]> = x
        .iter()
        .map(|r| std::array::from_fn(|c| r[c] / scale[c]))
        .collect();
    let mut b = y.to_vec();
    for c in 0..P {
        let norm = (c..m).map(|i| a[i][c] * a[i][c]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[c][c] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (c..m).map(|i| a[i][c]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for cc in c..P {
            let dot: f64 = (c..m).map(|i| v[i - c] * a[i][cc]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in c..m {
                a[i][cc] -= f * v[i - c];
            }
        }
        let dot: f64 = (c..m).map(|i| v[i - c] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in c..m {
            b[i] -= f * v[i - c];
        }
    }
    let mut coef = [0.0; P];
    for c in (0..P).rev() {
        if a[c][c].abs() < 1e-13 {
            return None;
        }
        let s: f64 = (c + 1..P).map(|cc| a[c][cc] * coef[cc]).sum();
        coef[c] = (b[c] - s) / a[c][c];
    }
    let rss: f64 = b[P..].iter().map(|t| t * t).sum();
    let dof = (m - P).max(1) as f64;
    let sigma2 = rss / dof;
    // (R^T R)^-1 diagonal = squared row norms of R^-1.
    let mut rinv = [[0.0; P]; P];
    for c in 0..P {
        rinv[c][c] = 1.0 / a[c][c];
        for r in (0..c).rev() {
            let s: f64 = (r + 1..=c).map(|k| a[r][k] * rinv[k][c]).sum();
            rinv[r][c] = -s / a[r][r];
        }
    }
    let mut se = [0.0; P];
    for r in 0..P {
        let q: f64 = (0..P).map(|c| rinv[r][c] * rinv[r][c]).sum();
        se[r] = (sigma2 * q).sqrt() / scale[r];
        coef[r] /= scale[r];
    }
    Some((coef, se))
}

/// Verdict for one coordinate from its norm sequence.
pub fn condition_d_verdict(seq: &NormSequence, bounded: bool, thresholds: &Thresholds) -> CoordinateConditionD {
    let partial_sums = seq.partial_sums();
    if bounded {
        return CoordinateConditionD {
            partial_sums,
            source: Some(seq.source),
            ..CoordinateConditionD::bounded(seq.coordinate)
        };
    }
    let fit = if seq.len() >= thresholds.min_terms {
        fit_decay_exponent(&seq.series_terms())
    } else {
        None
    };
    let verdict = match fit {
        Some(f) if f.p < thresholds.divergent_below => CoordinateVerdict::HoldsDivergent,
        Some(f) if f.p > thresholds.convergent_above => CoordinateVerdict::FailsConvergent,
        _ => CoordinateVerdict::Inconclusive,
    };
    CoordinateConditionD {
        coordinate: seq.coordinate,
        verdict,
        heuristic: true,
        fit,
        source: Some(seq.source),
        partial_sums,
    }
}

/// Per-coordinate Condition D verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionDVerdict {
    pub per_coordinate: BTreeMap<usize, CoordinateConditionD>,
}

impl ConditionDVerdict {
    pub fn all_hold(&self) -> bool {
        self.per_coordinate.values().all(|c| c.verdict.holds())
    }

    pub fn any_heuristic(&self) -> bool {
        self.per_coordinate.values().any(|c| c.heuristic)
    }
}

/// Condition D for every coordinate; bounded ones never touch the budget.
pub fn evaluate_condition_d(
    spec: &DomainSpec,
    terms: usize,
    opts: &MomentOptions,
    thresholds: &Thresholds,
) -> Result<ConditionDVerdict> {
    let mut per_coordinate = BTreeMap::new();
    for (j, &bounded) in spec.bounded_coords().iter().enumerate() {
        let coordinate = j + 1;
        let v = if bounded {
            CoordinateConditionD::bounded(coordinate)
        } else {
            let seq = norm_sequence(spec, coordinate, terms, opts)?;
            condition_d_verdict(&seq, false, thresholds)
        };
        per_coordinate.insert(coordinate, v);
    }
    Ok(ConditionDVerdict { per_coordinate })
}
