//! End-to-end analysis and the forward geometric checks.

use serde::Serialize;

use crate::condition_d::{evaluate_condition_d, ConditionDVerdict, CoordinateVerdict, Thresholds};
use crate::domain::{DomainSpec, Shape};
use crate::error::{Error, Result};
use crate::moments::{gram, inner_product, resolve_method, GramData, MomentEstimate, MomentMethod, MomentOptions, Policy};
use crate::multi_index::{DifferenceVector, MultiIndex};
use crate::sampling::{sample_accepted, stream_rng, uniform_in_disk, uniform_on_circle, Stream};
use crate::symmetry::{classify, difference_set, integer_kernel, DifferenceSet, SymmetryClassification};
use crate::torus::{apply_unchecked, eval_g, g_is_trivial, TorusAction};
use crate::{Complex64, Point, TorusPoint};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Radius at which unbounded coordinates are cut for the sampling-based
/// geometric checks. Membership is tested on the untruncated domain.
pub const GEOMETRIC_TRUNCATION: f64 = 8.0;

const MAX_WITNESSES: usize = 10;

/// Default degree bound: 4 in `C^2` (and `C^1`), 3 in `C^3`, 2 beyond.
pub fn default_degree(n: usize) -> u32 {
    match n {
        0..=2 => 4,
        3 => 3,
        _ => 2,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    /// `None` picks [`default_degree`].
    pub degree_bound: Option<u32>,
    pub moments: MomentOptions,
    pub policy_abs_tol: Option<f64>,
    pub policy_sigma: Option<f64>,
    /// Number of terms `K` of the Condition D series.
    pub terms: usize,
    pub thresholds: Thresholds,
    /// Samples for the star-shapedness check of Reinhardt results; 0 skips it.
    pub star_samples: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            degree_bound: None,
            moments: MomentOptions::default(),
            policy_abs_tol: None,
            policy_sigma: None,
            terms: 40,
            thresholds: Thresholds::default(),
            star_samples: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainSummary {
    pub kind: String,
    pub dim: usize,
    pub description: String,
    pub bounded_coords: Vec<bool>,
}

impl DomainSummary {
    fn of(spec: &DomainSpec) -> Self {
        DomainSummary {
            kind: spec.kind().to_string(),
            dim: spec.dim(),
            description: spec.describe(),
            bounded_coords: spec.bounded_coords().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GramStats {
    pub monomials: usize,
    pub off_diagonal_pairs: usize,
    pub nonzero: usize,
    pub zero: usize,
    pub inconclusive: usize,
    pub volume: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunParameters {
    pub degree_bound: u32,
    pub method: Option<MomentMethod>,
    pub seed: u64,
    pub budget: u64,
    pub truncation: Option<f64>,
    pub terms: usize,
    pub policy: Option<Policy>,
    pub star_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub z: Point,
    /// Torus parameters or polydisk multipliers that moved `z` out.
    pub parameters: TorusPoint,
}

/// Outcome of a sampled geometric check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationReport {
    pub samples: usize,
    pub violations: usize,
    pub violation_rate: f64,
    pub seed: u64,
    pub truncation: Option<f64>,
    pub witnesses: Vec<Witness>,
}

/// Result of the full pipeline. Field order is the JSON order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub domain: DomainSummary,
    pub parameters: RunParameters,
    pub gram: Option<GramStats>,
    pub differences: Option<DifferenceSet>,
    pub detected_action: Option<TorusAction>,
    pub classification: Option<SymmetryClassification>,
    pub condition_d: Option<ConditionDVerdict>,
    pub theorem_statement: String,
    pub star_shaped: Option<ViolationReport>,
    pub caveats: Vec<String>,
    pub error: Option<String>,
}

impl SymmetryReport {
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// `Omega = int(closure(Omega))` is known for every catalog shape except
/// the punctured ball; predicates are unknown.
fn equals_interior_of_closure(spec: &DomainSpec) -> bool {
    !matches!(spec.shape(), Shape::PuncturedBall { .. } | Shape::Predicate(_))
}

fn policy_for(gram: &GramData, opts: &AnalysisOptions) -> Policy {
    let base = Policy::scaled_to_volume(gram.volume());
    Policy {
        abs_tol: opts.policy_abs_tol.unwrap_or(base.abs_tol),
        sigma_factor: opts.policy_sigma.unwrap_or(base.sigma_factor),
    }
}

fn gram_stats(gram: &GramData, diffs: &DifferenceSet, policy: &Policy) -> GramStats {
    let pairs: Vec<(usize, usize)> = gram.off_diagonal().collect();
    let nonzero = pairs
        .iter()
        .filter(|&&(i, j)| crate::moments::decide_nonzero(gram.get(i, j), policy) == crate::moments::Decision::Nonzero)
        .count();
    GramStats {
        monomials: gram.indices().len(),
        off_diagonal_pairs: pairs.len(),
        nonzero,
        zero: pairs.len() - nonzero - diffs.inconclusive_count(),
        inconclusive: diffs.inconclusive_count(),
        volume: gram.volume(),
    }
}

fn theorem_statement(
    spec: &DomainSpec,
    degree: u32,
    action: &TorusAction,
    diffs: &DifferenceSet,
    cond: &ConditionDVerdict,
) -> String {
    if action.rank() == 0 {
        return format!("No torus symmetry detected at degree {degree}; no invariance conclusion is drawn.");
    }
    let failing: Vec<String> = cond
        .per_coordinate
        .values()
        .filter(|c| !c.verdict.holds())
        .map(|c| c.coordinate.to_string())
        .collect();
    let mut unmet = Vec::new();
    if !failing.is_empty() {
        unmet.push(format!("Condition D is not established for coordinate(s) {}", failing.join(", ")));
    }
    if diffs.inconclusive_count() > 0 {
        unmet.push(format!(
            "{} moment pair(s) are inconclusive, so non-orthogonality is only partly confirmed",
            diffs.inconclusive_count()
        ));
    }
    if !unmet.is_empty() {
        return format!(
            "Hypotheses not met: {}. Every significantly non-zero moment pair up to degree {degree} has trivial character under rho_A with A = {action}, but no invariance conclusion for int(closure(Omega)) is drawn.",
            unmet.join("; ")
        );
    }
    let mut s = format!(
        "Condition D holds in every coordinate and every significantly non-zero moment pair up to degree {degree} has trivial character under rho_A with A = {action}; hence int(closure(Omega)) is rho_A-invariant."
    );
    if equals_interior_of_closure(spec) {
        s.push_str(" For this domain Omega = int(closure(Omega)), so Omega itself is rho_A-invariant.");
    } else {
        s.push_str(" Omega itself may differ from int(closure(Omega)) and is not claimed to be invariant.");
    }
    s
}

fn shape_caveats(spec: &DomainSpec) -> Vec<String> {
    match spec.shape() {
        Shape::PuncturedBall { removed, .. } => {
            let at_origin = removed.iter().all(|z| z.norm() == 0.0);
            let mut v = vec![
                "Omega differs from int(closure(Omega)) by the removed point; moments cannot see it, so every symmetry statement concerns int(closure(Omega)), the full ball.".to_string(),
            ];
            if !at_origin {
                v.push("With the removed point off the origin, Omega itself is neither Reinhardt, circular nor Hartogs.".into());
            }
            v
        }
        Shape::Predicate(_) => vec![
            "Omega = int(closure(Omega)) is not known for predicate domains; conclusions concern int(closure(Omega)).".into(),
        ],
        _ => Vec::new(),
    }
}

/// Runs gram, differences, lattice, classification, Condition D and, for
/// Reinhardt results, the star-shapedness check. Sub-failures stop the
/// pipeline and are recorded in `error` with the fields computed so far.
pub fn analyze(spec: &DomainSpec, opts: &AnalysisOptions) -> SymmetryReport {
    let degree = opts.degree_bound.unwrap_or_else(|| default_degree(spec.dim()));
    let mut report = SymmetryReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        domain: DomainSummary::of(spec),
        parameters: RunParameters {
            degree_bound: degree,
            method: resolve_method(spec, opts.moments.method).ok(),
            seed: opts.moments.seed,
            budget: opts.moments.budget,
            truncation: opts.moments.truncation,
            terms: opts.terms,
            policy: None,
            star_samples: opts.star_samples,
        },
        gram: None,
        differences: None,
        detected_action: None,
        classification: None,
        condition_d: None,
        theorem_statement: "Analysis incomplete; no conclusion is drawn.".into(),
        star_shaped: None,
        caveats: shape_caveats(spec),
        error: None,
    };
    if let Err(e) = run_pipeline(spec, opts, degree, &mut report) {
        report.error = Some(e.to_string());
    }
    report
}

fn run_pipeline(spec: &DomainSpec, opts: &AnalysisOptions, degree: u32, report: &mut SymmetryReport) -> Result<()> {
    let g = gram(spec, degree, &opts.moments)?;
    let policy = policy_for(&g, opts);
    report.parameters.policy = Some(policy);
    let diffs = difference_set(&g, &policy);
    report.gram = Some(gram_stats(&g, &diffs, &policy));
    if diffs.inconclusive_count() > 0 {
        let pairs: Vec<String> = diffs
            .inconclusive_pairs()
            .iter()
            .map(|(a, b)| format!("<z^{a}, z^{b}>"))
            .collect();
        report.caveats.push(format!(
            "Inconclusive moments excluded from the difference set: {}. The detected action is maximal with respect to confirmed non-orthogonality.",
            pairs.join(", ")
        ));
    }
    if opts.moments.truncation.is_some() && !spec.is_bounded() && !g.get(0, 0).method.is_deterministic() {
        report.caveats.push("Monte Carlo moments on unbounded coordinates are computed on the truncated domain.".into());
    }
    let action = integer_kernel(&diffs, spec.dim())?;
    let classification = classify(&action);
    report.caveats.extend(classification.caveats.iter().cloned());
    report.differences = Some(diffs);
    report.detected_action = Some(action.clone());
    report.classification = Some(classification.clone());

    let cond = evaluate_condition_d(spec, opts.terms, &opts.moments, &opts.thresholds)?;
    for c in cond.per_coordinate.values().filter(|c| c.heuristic) {
        report.caveats.push(format!(
            "Condition D for coordinate {} rests on a fitted decay exponent of ||z_{}^k||^(-1/k), a heuristic verdict.",
            c.coordinate, c.coordinate
        ));
    }
    if let Shape::ExpProfileFamily { k } = spec.shape() {
        let expected = if *k == 0 { CoordinateVerdict::HoldsDivergent } else { CoordinateVerdict::FailsConvergent };
        if cond.per_coordinate.get(&1).is_some_and(|c| c.verdict == expected) {
            report.caveats.push(format!(
                "For this family ||z_1^k||^(-1/k) decays like k^-{}, confirming the coordinate 1 verdict.",
                1u32 << k
            ));
        }
    }
    report.theorem_statement = theorem_statement(spec, degree, &action, report.differences.as_ref().expect("set above"), &cond);
    report.condition_d = Some(cond);

    if classification.is_reinhardt {
        report.caveats.push(
            "Whether the monomials form an orthogonal basis and whether Omega is a domain of holomorphy cannot be verified from finitely many moments.".into(),
        );
        if opts.star_samples > 0 {
            report.star_shaped = Some(check_complete_reinhardt(spec, opts.star_samples, opts.moments.seed)?);
        }
    }
    Ok(())
}

fn geometric_truncation(spec: &DomainSpec) -> Option<f64> {
    (!spec.is_bounded()).then_some(GEOMETRIC_TRUNCATION)
}

fn sampled_check(
    spec: &DomainSpec,
    sample_count: usize,
    seed: u64,
    stream: Stream,
    mut transform: impl FnMut(&mut rand_chacha::ChaCha8Rng, &[Complex64]) -> (Point, TorusPoint),
) -> Result<ViolationReport> {
    let truncation = geometric_truncation(spec);
    let samples = sample_accepted(spec, seed, sample_count, truncation)?;
    let mut rng = stream_rng(seed, stream, 0);
    let mut violations = 0;
    let mut witnesses = Vec::new();
    for z in &samples.points {
        let (image, parameters) = transform(&mut rng, z);
        if !spec.contains(&image) {
            violations += 1;
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(Witness { z: z.clone(), parameters });
            }
        }
    }
    Ok(ViolationReport {
        samples: sample_count,
        violations,
        violation_rate: violations as f64 / sample_count.max(1) as f64,
        seed,
        truncation,
        witnesses,
    })
}

/// Fraction of sampled `(z, lambda)`, `z` uniform in `Omega` and `lambda`
/// uniform on the torus, with `rho_A(lambda) z` outside `Omega`.
pub fn verify_invariance(
    spec: &DomainSpec,
    action: &TorusAction,
    sample_count: usize,
    seed: u64,
) -> Result<ViolationReport> {
    if action.n() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: action.n(),
        });
    }
    sampled_check(spec, sample_count, seed, Stream::TorusParameters, |rng, z| {
        let lambda: TorusPoint = (0..action.rank()).map(|_| uniform_on_circle(rng)).collect();
        (apply_unchecked(action, &lambda, z), lambda)
    })
}

/// Fraction of sampled `(z, mu)`, `z` uniform in `Omega` and `mu` uniform in
/// the unit polydisk, with `(mu_1 z_1, ..., mu_n z_n)` outside `Omega`.
pub fn check_complete_reinhardt(spec: &DomainSpec, sample_count: usize, seed: u64) -> Result<ViolationReport> {
    let origin = Complex64::new(0.0, 0.0);
    sampled_check(spec, sample_count, seed, Stream::Multipliers, |rng, z| {
        let mu: Vec<Complex64> = z.iter().map(|_| uniform_in_disk(rng, origin, 1.0)).collect();
        (z.iter().zip(&mu).map(|(a, b)| a * b).collect(), mu)
    })
}

/// Numerical check of `<z^a, z^b> = g_{a,b}(lambda) <z^a, z^b>` for an
/// action the domain is invariant under.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalculationCheck {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub moment: MomentEstimate,
    pub character_trivial: bool,
    pub lambda_samples: usize,
    /// `max |m - g(lambda) m|` over the sampled `lambda`.
    pub max_residual: f64,
    /// `4 (1 + 1) SE`.
    pub residual_bound: f64,
    pub passed: bool,
}

pub fn verify_calculation_identity(
    spec: &DomainSpec,
    action: &TorusAction,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    lambda_samples: usize,
    opts: &MomentOptions,
) -> Result<CalculationCheck> {
    let moment = inner_product(spec, alpha, beta, opts)?;
    let d = DifferenceVector::between(alpha, beta)?;
    let trivial = g_is_trivial(action, &d);
    let mut rng = stream_rng(opts.seed, Stream::TorusParameters, 1);
    let mut max_residual: f64 = 0.0;
    for _ in 0..lambda_samples {
        let lambda: TorusPoint = (0..action.rank()).map(|_| uniform_on_circle(&mut rng)).collect();
        let g = eval_g(action, alpha, beta, &lambda)?;
        max_residual = max_residual.max((moment.value - g * moment.value).norm());
    }
    let residual_bound = 4.0 * 2.0 * moment.std_error;
    let small_moment = trivial || moment.value.norm() <= 4.0 * moment.std_error;
    Ok(CalculationCheck {
        alpha: alpha.clone(),
        beta: beta.clone(),
        moment,
        character_trivial: trivial,
        lambda_samples,
        max_residual,
        residual_bound,
        passed: max_residual <= residual_bound && small_moment,
    })
}
