use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice;
use crate::multi_index::{DifferenceVector, MultiIndex};
use crate::scalar::Scalar;

/// Diagonal torus action `rho_A` given by an integer weight matrix
/// `A in Z^{n x r}`, stored by columns.
///
/// `lambda in (S^1)^r` acts by `z_j -> (prod_k lambda_k^{a_jk}) z_j`. The
/// columns are linearly independent and span a saturated lattice; `r = 0`
/// is the trivial action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ActionRepr", into = "ActionRepr")]
pub struct TorusAction {
    n: usize,
    columns: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct ActionRepr {
    n: usize,
    r: usize,
    columns: Vec<Vec<i64>>,
}

impl TryFrom<ActionRepr> for TorusAction {
    type Error = Error;

    fn try_from(repr: ActionRepr) -> Result<Self> {
        if repr.r != repr.columns.len() {
            return Err(Error::InvalidAction(format!(
                "r = {} but {} columns given",
                repr.r,
                repr.columns.len()
            )));
        }
        TorusAction::new(repr.n, repr.columns)
    }
}

impl From<TorusAction> for ActionRepr {
    fn from(a: TorusAction) -> Self {
        ActionRepr {
            n: a.n,
            r: a.columns.len(),
            columns: a.columns,
        }
    }
}

impl TorusAction {
    pub fn new(n: usize, columns: Vec<Vec<i64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidAction("ambient dimension must be >= 1".into()));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.len(),
            });
        }
        let big = lattice::to_big(&columns);
        if lattice::rank(&big) != columns.len() {
            return Err(Error::InvalidAction("columns are linearly dependent".into()));
        }
        if !lattice::is_saturated(&big, n) {
            return Err(Error::InvalidAction(
                "columns do not span a saturated lattice".into(),
            ));
        }
        Ok(TorusAction { n, columns })
    }

    /// Canonical action for a lattice already known to be saturated.
    pub(crate) fn from_hnf(n: usize, hnf: &lattice::IntMatrix) -> Result<Self> {
        Ok(TorusAction {
            n,
            columns: lattice::to_i64(hnf)?,
        })
    }

    /// The full `n`-torus (Reinhardt action, `A = I`).
    pub fn identity(n: usize) -> Self {
        let columns = (0..n)
            .map(|j| (0..n).map(|k| i64::from(j == k)).collect())
            .collect();
        TorusAction { n, columns }
    }

    pub fn trivial(n: usize) -> Self {
        TorusAction {
            n,
            columns: Vec::new(),
        }
    }

    /// Parses the column-major flag form `"1,0;0,1"` (one column per `;`).
    pub fn parse_columns(text: &str) -> Result<Self> {
        let columns: Vec<Vec<i64>> = text
            .split(';')
            .map(|col| {
                col.split(',')
                    .map(|x| {
                        x.trim().parse::<i64>().map_err(|_| {
                            Error::InvalidAction(format!("'{}' is not an integer", x.trim()))
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = columns.first().map_or(0, Vec::len);
        TorusAction::new(n, columns)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<i64>] {
        &self.columns
    }

    pub fn weight(&self, j: usize, k: usize) -> i64 {
        self.columns[k][j]
    }

    pub(crate) fn hnf(&self) -> lattice::IntMatrix {
        lattice::hermite_normal_form(&lattice::to_big(&self.columns))
    }

    /// Same lattice, canonical (HNF) basis.
    pub fn canonical(&self) -> Self {
        TorusAction::from_hnf(self.n, &self.hnf()).expect("HNF of an i64 basis of a saturated lattice stays small")
    }

    /// Whether both actions generate the same lattice of weights.
    pub fn same_lattice(&self, other: &TorusAction) -> bool {
        self.n == other.n && self.hnf() == other.hnf()
    }

    /// Whether every weight vector of `other` lies in this lattice.
    pub fn contains_lattice(&self, other: &TorusAction) -> bool {
        let hnf = self.hnf();
        other.columns.iter().all(|c| {
            let v: Vec<BigInt> = c.iter().map(|&x| BigInt::from(x)).collect();
            lattice::contains(&hnf, &v)
        })
    }

    /// Exponents `A^T d` in exact integer arithmetic.
    pub fn character_exponents(&self, d: &DifferenceVector) -> Vec<i128> {
        self.columns
            .iter()
            .map(|col| {
                col.iter()
                    .zip(d.entries())
                    .map(|(&a, &x)| i128::from(a) * i128::from(x))
                    .sum()
            })
            .collect()
    }
}

impl fmt::Display for TorusAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.columns.is_empty() {
            return write!(f, "trivial");
        }
        let cols: Vec<String> = self
            .columns
            .iter()
            .map(|c| c.iter().map(i64::to_string).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "span{{({})}}", cols.join("),("))
    }
}

fn torus_tolerance<T: Scalar>() -> T {
    T::of(1e-12).max(T::epsilon() * T::of(16.0))
}

fn check_on_torus<T: Scalar>(lambda: &[Complex<T>], r: usize) -> Result<()> {
    if lambda.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: lambda.len(),
        });
    }
    for (index, l) in lambda.iter().enumerate() {
        let modulus = l.norm();
        if (modulus - T::one()).abs() > torus_tolerance::<T>() {
            return Err(Error::OffTorus {
                index,
                modulus: modulus.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

fn character<T: Scalar>(lambda: &[Complex<T>], exponents: impl Iterator<Item = i128>) -> Complex<T> {
    lambda
        .iter()
        .zip(exponents)
        .fold(Complex::new(T::one(), T::zero()), |acc, (l, e)| {
            // Unit modulus: the inverse is the conjugate.
            let base = if e < 0 { l.conj() } else { *l };
            acc * int_pow(base, e.unsigned_abs())
        })
}

fn int_pow<T: Scalar>(mut base: Complex<T>, mut e: u128) -> Complex<T> {
    let mut acc = Complex::new(T::one(), T::zero());
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

/// `rho_A(lambda) z`.
pub fn apply_torus<T: Scalar>(
    action: &TorusAction,
    lambda: &[Complex<T>],
    z: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    if z.len() != action.n {
        return Err(Error::DimensionMismatch {
            expected: action.n,
            found: z.len(),
        });
    }
    check_on_torus(lambda, action.rank())?;
    Ok(apply_unchecked(action, lambda, z))
}

pub(crate) fn apply_unchecked<T: Scalar>(
    action: &TorusAction,
    lambda: &[Complex<T>],
    z: &[Complex<T>],
) -> Vec<Complex<T>> {
    z.iter()
        .enumerate()
        .map(|(j, zj)| {
            let factor = character(lambda, action.columns.iter().map(|c| i128::from(c[j])));
            factor * zj
        })
        .collect()
}

/// Torus character `g_{a,b}(lambda) = prod_k lambda_k^{sum_j a_jk (a_j - b_j)}`.
pub fn eval_g<T: Scalar>(
    action: &TorusAction,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    lambda: &[Complex<T>],
) -> Result<Complex<T>> {
    check_on_torus(lambda, action.rank())?;
    let d = DifferenceVector::between(alpha, beta)?;
    if d.len() != action.n {
        return Err(Error::DimensionMismatch {
            expected: action.n,
            found: d.len(),
        });
    }
    Ok(character(lambda, action.character_exponents(&d).into_iter()))
}

/// `A^T d = 0`, i.e. `g` is identically one for pairs with difference `d`.
pub fn g_is_trivial(action: &TorusAction, d: &DifferenceVector) -> bool {
    action.character_exponents(d).iter().all(|&e| e == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn apply_examples() {
        let id = TorusAction::identity(2);
        let out = apply_torus(&id, &[c(0.0, 1.0), c(-1.0, 0.0)], &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!(close(&out, &[c(0.0, 1.0), c(-2.0, 0.0)]));

        let circ = TorusAction::new(2, vec![vec![1, 1]]).unwrap();
        let out = apply_torus(&circ, &[c(-1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!(close(&out, &[c(-1.0, 0.0), c(0.0, -1.0)]));

        let quasi = TorusAction::new(2, vec![vec![1, 2]]).unwrap();
        let out = apply_torus(&quasi, &[c(0.0, 1.0)], &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(close(&out, &[c(0.0, 1.0), c(-1.0, 0.0)]));
    }

    #[test]
    fn off_torus_rejected() {
        let id = TorusAction::identity(1);
        assert!(matches!(
            apply_torus(&id, &[c(1.0 + 1e-9, 0.0)], &[c(1.0, 0.0)]),
            Err(Error::OffTorus { index: 0, .. })
        ));
        assert!(apply_torus(&id, &[c(1.0 + 1e-13, 0.0)], &[c(1.0, 0.0)]).is_ok());
    }

    #[test]
    fn eval_g_examples() {
        let id = TorusAction::identity(2);
        let a = MultiIndex::new(vec![1, 0]);
        let b = MultiIndex::new(vec![0, 1]);
        let g = eval_g(&id, &a, &b, &[c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert!((g - c(0.0, 1.0)).norm() < 1e-15);

        let circ = TorusAction::new(2, vec![vec![1, 1]]).unwrap();
        let g = eval_g(&circ, &MultiIndex::new(vec![2, 0]), &MultiIndex::new(vec![1, 1]), &[c(-1.0, 0.0)]).unwrap();
        assert!((g - c(1.0, 0.0)).norm() < 1e-15);

        let quasi = TorusAction::new(2, vec![vec![1, 2]]).unwrap();
        let theta: f64 = 0.731;
        let g = eval_g(&quasi, &MultiIndex::new(vec![2, 0]), &MultiIndex::new(vec![0, 1]), &[c(theta.cos(), theta.sin())]).unwrap();
        assert!((g - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn triviality_examples() {
        let d = |v: &[i64]| DifferenceVector::from_entries(v.to_vec());
        assert!(g_is_trivial(&TorusAction::identity(2), &d(&[0, 0])));
        let circ = TorusAction::new(2, vec![vec![1, 1]]).unwrap();
        assert!(g_is_trivial(&circ, &d(&[1, -1])));
        let quasi = TorusAction::new(2, vec![vec![1, 2]]).unwrap();
        assert!(!g_is_trivial(&quasi, &d(&[1, -1])));
    }

    #[test]
    fn construction_validates() {
        assert!(TorusAction::new(2, vec![vec![2, 0]]).is_err());
        assert!(TorusAction::new(2, vec![vec![1, 1], vec![2, 2]]).is_err());
        assert!(TorusAction::new(2, vec![vec![1]]).is_err());
        let a = TorusAction::parse_columns("1,0;0,1").unwrap();
        assert_eq!(a, TorusAction::identity(2));
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"n":2,"r":2,"columns":[[1,0],[0,1]]}"#);
        let back: TorusAction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<TorusAction>(r#"{"n":2,"r":1,"columns":[[2,0]]}"#).is_err());
    }

    #[test]
    fn single_precision_kernel() {
        let quasi = TorusAction::new(2, vec![vec![1, 2]]).unwrap();
        let l = Complex::new(0.0f32, 1.0);
        let out = apply_torus(&quasi, &[l], &[Complex::new(1.0f32, 0.0), Complex::new(1.0, 0.0)]).unwrap();
        assert!((out[1] - Complex::new(-1.0f32, 0.0)).norm() < 1e-6);
    }

    fn unit(theta: f64) -> Complex64 {
        Complex64::from_polar(1.0, theta)
    }

    proptest! {
        #[test]
        fn preserves_moduli_and_composes(
            a in proptest::collection::vec(-4i64..=4, 3),
            t1 in 0.0f64..std::f64::consts::TAU,
            t2 in 0.0f64..std::f64::consts::TAU,
            z in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 3),
        ) {
            prop_assume!(a.iter().any(|&x| x != 0));
            let g = a.iter().fold(0i64, |g, &x| num_integer::gcd(g, x));
            let col: Vec<i64> = a.iter().map(|x| x / g).collect();
            let action = TorusAction::new(3, vec![col]).unwrap();
            let z: Vec<Complex64> = z.into_iter().map(|(re, im)| c(re, im)).collect();
            let once = apply_torus(&action, &[unit(t1)], &z).unwrap();
            for (w, zj) in once.iter().zip(&z) {
                prop_assert!((w.norm() - zj.norm()).abs() <= 1e-12 * zj.norm().max(1.0));
            }
            let twice = apply_torus(&action, &[unit(t2)], &once).unwrap();
            let composed = apply_torus(&action, &[unit(t1) * unit(t2)], &z).unwrap();
            for (x, y) in twice.iter().zip(&composed) {
                prop_assert!((x - y).norm() <= 1e-12 * 10.0);
            }
        }

        #[test]
        fn character_trivial_iff_exponents_vanish(
            alpha in proptest::collection::vec(0u32..4, 2),
            beta in proptest::collection::vec(0u32..4, 2),
        ) {
            let quasi = TorusAction::new(2, vec![vec![1, 2]]).unwrap();
            let a = MultiIndex::new(alpha);
            let b = MultiIndex::new(beta);
            let d = DifferenceVector::between(&a, &b).unwrap();
            let trivial = g_is_trivial(&quasi, &d);
            // Angles with irrational ratios to pi.
            let mut max_dev: f64 = 0.0;
            for k in 1..=100 {
                let theta = (k as f64) * 2.0_f64.sqrt();
                let g = eval_g(&quasi, &a, &b, &[unit(theta)]).unwrap();
                assert_relative_eq!(g.norm(), 1.0, epsilon = 1e-12);
                max_dev = max_dev.max((g - c(1.0, 0.0)).norm());
            }
            if trivial {
                prop_assert!(max_dev < 1e-12);
            } else {
                prop_assert!(max_dev > 0.1);
            }
        }
    }
}
