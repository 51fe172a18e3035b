//! Domain descriptions, membership oracles and the built-in catalog.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profile::ProfileFunction;
use crate::torus::TorusAction;

/// Membership predicate of a user-defined domain.
pub type MembershipFn = Arc<dyn Fn(&[Complex64]) -> bool + Send + Sync>;

/// Per-coordinate enclosure of the projection `pi_j(Omega)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoordBound {
    Disk { center: Complex64, radius: f64 },
    Unbounded,
}

#[derive(Clone)]
pub struct PredicateDomain {
    pub label: String,
    pub membership: MembershipFn,
    pub bounds: Vec<CoordBound>,
}

impl fmt::Debug for PredicateDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredicateDomain")
            .field("label", &self.label)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum Shape {
    Polydisk { radii: Vec<f64> },
    Ball { radius: f64 },
    /// `T(B)` for the unit ball `B`; the inverse is cached for membership.
    LinearImageBall {
        matrix: Vec<Vec<Complex64>>,
        inverse: Vec<Vec<Complex64>>,
    },
    /// `{|z2| < f(|z1|)}` in `C^2`.
    Profile { f: ProfileFunction },
    /// `{|z2| < exp(-|z1|^(1/2^k))}`, `k in {0, 1}`.
    ExpProfileFamily { k: u32 },
    TranslatedDiskProduct { center: Complex64, r1: f64, r2: f64 },
    /// `{|z1^2 - z2| < 1, |z1| < 2}`.
    QuasiCircularCubic,
    /// `{|z1^2 - z2| < 1, |z1| < 2, |z3| < 1}`.
    MixedQuasiReinhardt,
    /// `P(outer) \ closure(P(inner))`.
    PolydiskDifference { outer: Vec<f64>, inner: Vec<f64> },
    PuncturedBall { radius: f64, removed: Vec<Complex64> },
    Predicate(PredicateDomain),
}

/// A domain in `C^n` together with test-only ground truth.
#[derive(Clone, Debug)]
pub struct DomainSpec {
    dim: usize,
    shape: Shape,
    declared_action: Option<TorusAction>,
    bounded_coords: Vec<bool>,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidDomain(format!("{name} must be positive and finite, got {x}")))
    }
}

impl DomainSpec {
    pub fn polydisk(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidDomain("polydisk needs at least one radius".into()));
        }
        for &r in &radii {
            positive("polydisk radius", r)?;
        }
        let n = radii.len();
        Ok(Self::catalog(n, Shape::Polydisk { radii }, Some(TorusAction::identity(n))))
    }

    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDomain("dimension must be >= 1".into()));
        }
        positive("ball radius", radius)?;
        Ok(Self::catalog(n, Shape::Ball { radius }, Some(TorusAction::identity(n))))
    }

    /// Image of the unit ball under an invertible complex matrix (row-major).
    /// Linear images of the ball are circular.
    pub fn linear_image_ball(matrix: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidDomain("matrix must be square and non-empty".into()));
        }
        let inverse = invert(&matrix)
            .ok_or_else(|| Error::InvalidDomain("matrix is singular".into()))?;
        let circular = TorusAction::new(n, vec![vec![1; n]]).expect("(1,...,1) is primitive");
        Ok(Self::catalog(n, Shape::LinearImageBall { matrix, inverse }, Some(circular)))
    }

    /// `[[1, 1], [0, 1]]` applied to the unit ball of `C^2`.
    pub fn sheared_ball() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::linear_image_ball(vec![vec![one, one], vec![zero, one]]).expect("shear is invertible")
    }

    pub fn profile(f: ProfileFunction) -> Self {
        let mut spec = Self::catalog(2, Shape::Profile { f }, Some(TorusAction::identity(2)));
        spec.bounded_coords = vec![false, true];
        spec
    }

    pub fn exp_profile(k: u32) -> Result<Self> {
        if k > 1 {
            return Err(Error::InvalidDomain(format!("exp profile family index must be 0 or 1, got {k}")));
        }
        let mut spec = Self::catalog(2, Shape::ExpProfileFamily { k }, Some(TorusAction::identity(2)));
        spec.bounded_coords = vec![false, true];
        Ok(spec)
    }

    pub fn translated_disk_product(center: Complex64, r1: f64, r2: f64) -> Result<Self> {
        positive("r1", r1)?;
        positive("r2", r2)?;
        let hartogs2 = if center == Complex64::new(0.0, 0.0) {
            TorusAction::identity(2)
        } else {
            TorusAction::new(2, vec![vec![0, 1]]).expect("e2 is primitive")
        };
        Ok(Self::catalog(
            2,
            Shape::TranslatedDiskProduct { center, r1, r2 },
            Some(hartogs2),
        ))
    }

    pub fn quasi_circular_cubic() -> Self {
        let weights = TorusAction::new(2, vec![vec![1, 2]]).expect("(1,2) is primitive");
        Self::catalog(2, Shape::QuasiCircularCubic, Some(weights))
    }

    pub fn mixed_quasi_reinhardt() -> Self {
        let action = TorusAction::new(3, vec![vec![1, 2, 0], vec![0, 0, 1]]).expect("saturated");
        Self::catalog(3, Shape::MixedQuasiReinhardt, Some(action))
    }

    pub fn polydisk_difference(outer: Vec<f64>, inner: Vec<f64>) -> Result<Self> {
        if outer.is_empty() || outer.len() != inner.len() {
            return Err(Error::InvalidDomain(
                "outer and inner radii must be non-empty and of equal length".into(),
            ));
        }
        for (&o, &i) in outer.iter().zip(&inner) {
            positive("outer radius", o)?;
            positive("inner radius", i)?;
        }
        if outer.iter().zip(&inner).all(|(o, i)| i >= o) {
            return Err(Error::InvalidDomain("inner polydisk covers the outer one".into()));
        }
        let n = outer.len();
        Ok(Self::catalog(
            n,
            Shape::PolydiskDifference { outer, inner },
            Some(TorusAction::identity(n)),
        ))
    }

    /// The ball minus one point. Only a puncture at the origin keeps it
    /// Reinhardt; otherwise no ground-truth action is declared.
    pub fn punctured_ball(radius: f64, removed: Vec<Complex64>) -> Result<Self> {
        let n = removed.len();
        if n == 0 {
            return Err(Error::InvalidDomain("removed point must have at least one coordinate".into()));
        }
        positive("ball radius", radius)?;
        let declared = removed
            .iter()
            .all(|z| z.norm() == 0.0)
            .then(|| TorusAction::identity(n));
        Ok(Self::catalog(n, Shape::PuncturedBall { radius, removed }, declared))
    }

    /// Escape hatch: an arbitrary membership predicate with an explicit
    /// per-coordinate enclosure.
    pub fn predicate(
        label: impl Into<String>,
        bounds: Vec<CoordBound>,
        membership: impl Fn(&[Complex64]) -> bool + Send + Sync + 'static,
    ) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidDomain("predicate domain needs at least one coordinate".into()));
        }
        for b in &bounds {
            if let CoordBound::Disk { radius, .. } = b {
                positive("bound radius", *radius)?;
            }
        }
        let bounded_coords = bounds.iter().map(|b| matches!(b, CoordBound::Disk { .. })).collect();
        Ok(DomainSpec {
            dim: bounds.len(),
            shape: Shape::Predicate(PredicateDomain {
                label: label.into(),
                membership: Arc::new(membership),
                bounds,
            }),
            declared_action: None,
            bounded_coords,
        })
    }

    pub fn with_declared_action(mut self, action: TorusAction) -> Result<Self> {
        if action.n() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: action.n(),
            });
        }
        self.declared_action = Some(action);
        Ok(self)
    }

    fn catalog(dim: usize, shape: Shape, declared_action: Option<TorusAction>) -> Self {
        DomainSpec {
            dim,
            shape,
            declared_action,
            bounded_coords: vec![true; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Ground truth for tests. The analyzer never reads this.
    pub fn declared_action(&self) -> Option<&TorusAction> {
        self.declared_action.as_ref()
    }

    pub fn bounded_coords(&self) -> &[bool] {
        &self.bounded_coords
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded_coords.iter().all(|&b| b)
    }

    pub fn kind(&self) -> &'static str {
        match &self.shape {
            Shape::Polydisk { .. } => "polydisk",
            Shape::Ball { .. } => "ball",
            Shape::LinearImageBall { .. } => "linear_image_ball",
            Shape::Profile { .. } => "profile",
            Shape::ExpProfileFamily { .. } => "exp_profile",
            Shape::TranslatedDiskProduct { .. } => "translated_disk_product",
            Shape::QuasiCircularCubic => "quasi_circular_cubic",
            Shape::MixedQuasiReinhardt => "mixed_quasi_reinhardt",
            Shape::PolydiskDifference { .. } => "polydisk_difference",
            Shape::PuncturedBall { .. } => "punctured_ball",
            Shape::Predicate(_) => "predicate",
        }
    }

    /// Human-readable parameter summary, stable across runs.
    pub fn describe(&self) -> String {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let clist = |v: &[Complex64]| v.iter().map(fmt_complex).collect::<Vec<_>>().join(",");
        match &self.shape {
            Shape::Polydisk { radii } => format!("polydisk radii=({})", list(radii)),
            Shape::Ball { radius } => format!("ball n={} radius={radius}", self.dim),
            Shape::LinearImageBall { matrix, .. } => format!(
                "linear image of the unit ball, matrix=[{}]",
                matrix.iter().map(|r| clist(r)).collect::<Vec<_>>().join("; ")
            ),
            Shape::Profile { f } => format!("{{|z2| < f(|z1|)}}, f(r) = {}", f.source()),
            Shape::ExpProfileFamily { k } => {
                format!("{{|z2| < exp(-|z1|^(1/{}))}}", 1u32 << k)
            }
            Shape::TranslatedDiskProduct { center, r1, r2 } => format!(
                "{{|z1 - {}| < {r1}, |z2| < {r2}}}",
                fmt_complex(center)
            ),
            Shape::QuasiCircularCubic => "{|z1^2 - z2| < 1, |z1| < 2}".into(),
            Shape::MixedQuasiReinhardt => "{|z1^2 - z2| < 1, |z1| < 2, |z3| < 1}".into(),
            Shape::PolydiskDifference { outer, inner } => format!(
                "P({}) minus closure of P({})",
                list(outer),
                list(inner)
            ),
            Shape::PuncturedBall { radius, removed } => format!(
                "ball n={} radius={radius} minus the point ({})",
                self.dim,
                clist(removed)
            ),
            Shape::Predicate(p) => format!("predicate '{}'", p.label),
        }
    }

    /// `z in Omega`, assuming `z.len() == dim`.
    pub(crate) fn contains(&self, z: &[Complex64]) -> bool {
        match &self.shape {
            Shape::Polydisk { radii } => z.iter().zip(radii).all(|(zj, &r)| zj.norm_sqr() < r * r),
            Shape::Ball { radius } => in_ball(z, *radius),
            Shape::LinearImageBall { inverse, .. } => {
                let w2: f64 = inverse
                    .iter()
                    .map(|row| row.iter().zip(z).map(|(a, zj)| a * zj).sum::<Complex64>().norm_sqr())
                    .sum();
                w2 < 1.0
            }
            Shape::Profile { f } => z[1].norm() < f.eval(z[0].norm()),
            Shape::ExpProfileFamily { k } => {
                let r = z[0].norm();
                let root = if *k == 0 { r } else { r.sqrt() };
                z[1].norm() < (-root).exp()
            }
            Shape::TranslatedDiskProduct { center, r1, r2 } => {
                (z[0] - center).norm_sqr() < r1 * r1 && z[1].norm_sqr() < r2 * r2
            }
            Shape::QuasiCircularCubic => quasi_cubic(z[0], z[1]),
            Shape::MixedQuasiReinhardt => quasi_cubic(z[0], z[1]) && z[2].norm_sqr() < 1.0,
            Shape::PolydiskDifference { outer, inner } => {
                let in_outer = z.iter().zip(outer).all(|(zj, &r)| zj.norm_sqr() < r * r);
                let in_inner_closure = z.iter().zip(inner).all(|(zj, &r)| zj.norm_sqr() <= r * r);
                in_outer && !in_inner_closure
            }
            Shape::PuncturedBall { radius, removed } => {
                in_ball(z, *radius) && z.iter().zip(removed).any(|(a, b)| a != b)
            }
            Shape::Predicate(p) => (p.membership)(z),
        }
    }

    /// Enclosing disk per coordinate; unbounded coordinates are cut at
    /// `truncation`. Errors when a coordinate is unbounded and no
    /// truncation was given.
    pub fn enclosure(&self, truncation: Option<f64>) -> Result<Vec<(Complex64, f64)>> {
        let origin = Complex64::new(0.0, 0.0);
        let cut = |coordinate: usize| -> Result<f64> {
            match truncation {
                Some(t) => positive("truncation radius", t),
                None => Err(Error::TruncationRequired { coordinate }),
            }
        };
        let disks = |radii: &[f64]| radii.iter().map(|&r| (origin, r)).collect::<Vec<_>>();
        Ok(match &self.shape {
            Shape::Polydisk { radii } => disks(radii),
            Shape::Ball { radius } | Shape::PuncturedBall { radius, .. } => {
                vec![(origin, *radius); self.dim]
            }
            Shape::LinearImageBall { matrix, .. } => matrix
                .iter()
                .map(|row| (origin, row.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()))
                .collect(),
            Shape::Profile { f } => {
                let r = cut(1)?;
                vec![(origin, r), (origin, f.sup_on(r))]
            }
            Shape::ExpProfileFamily { .. } => vec![(origin, cut(1)?), (origin, 1.0)],
            Shape::TranslatedDiskProduct { center, r1, r2 } => vec![(*center, *r1), (origin, *r2)],
            Shape::QuasiCircularCubic => vec![(origin, 2.0), (origin, 5.0)],
            Shape::MixedQuasiReinhardt => vec![(origin, 2.0), (origin, 5.0), (origin, 1.0)],
            Shape::PolydiskDifference { outer, .. } => disks(outer),
            Shape::Predicate(p) => p
                .bounds
                .iter()
                .enumerate()
                .map(|(j, b)| match b {
                    CoordBound::Disk { center, radius } => Ok((*center, *radius)),
                    CoordBound::Unbounded => cut(j + 1).map(|r| (origin, r)),
                })
                .collect::<Result<_>>()?,
        })
    }

    /// Volume of the product of enclosing disks.
    pub fn enclosure_volume(&self, truncation: Option<f64>) -> Result<f64> {
        Ok(self
            .enclosure(truncation)?
            .iter()
            .map(|(_, r)| PI * r * r)
            .product())
    }
}

fn in_ball(z: &[Complex64], radius: f64) -> bool {
    z.iter().map(Complex64::norm_sqr).sum::<f64>() < radius * radius
}

fn quasi_cubic(z1: Complex64, z2: Complex64) -> bool {
    (z1 * z1 - z2).norm_sqr() < 1.0 && z1.norm_sqr() < 4.0
}

pub(crate) fn fmt_complex(z: &Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// `z in Omega`; pure and deterministic.
pub fn membership(spec: &DomainSpec, z: &[Complex64]) -> Result<bool> {
    if z.len() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            found: z.len(),
        });
    }
    Ok(spec.contains(z))
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
fn invert(m: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let n = m.len();
    let scale = m.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
    let mut a: Vec<Vec<Complex64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| Complex64::new(f64::from(u8::from(i == j)), 0.0)));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[pivot][col].norm() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        let inv = a[col][col].inv();
        for x in a[col].iter_mut() {
            *x *= inv;
        }
        for i in 0..n {
            if i != col {
                let factor = a[i][col];
                if factor != Complex64::new(0.0, 0.0) {
                    let pivot_row = a[col].clone();
                    for (x, p) in a[i].iter_mut().zip(pivot_row) {
                        *x -= factor * p;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}
