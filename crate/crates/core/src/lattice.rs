//! Exact integer lattice algebra over arbitrary-precision integers.
//!
//! Lattices are represented by row bases. The canonical form is the row
//! Hermite normal form: echelon, positive pivots, entries above each pivot
//! reduced into `[0, pivot)`. Two bases span the same lattice iff their HNFs
//! are equal.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type IntMatrix = Vec<Vec<BigInt>>;

pub fn to_big(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

pub fn to_i64(rows: &IntMatrix) -> Result<Vec<Vec<i64>>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|x| x.to_i64().ok_or(Error::LatticeOverflow))
                .collect()
        })
        .collect()
}

fn sub_multiple(target: &mut [BigInt], source: &[BigInt], q: &BigInt) {
    for (t, s) in target.iter_mut().zip(source) {
        *t -= q * s;
    }
}

/// Unimodular row reduction of the first `width` columns to echelon form.
///
/// All row operations are applied to the full rows, so trailing columns
/// record the transformation when the caller augments with an identity.
/// Returns the number of non-zero echelon rows (the rank of the leading
/// block); those rows come first.
fn echelonize(rows: &mut IntMatrix, width: usize) -> usize {
    let mut pivot_row = 0;
    for col in 0..width {
        if pivot_row == rows.len() {
            break;
        }
        // Euclid on the column below pivot_row until one non-zero remains.
        loop {
            let mut best: Option<usize> = None;
            for i in pivot_row..rows.len() {
                if !rows[i][col].is_zero()
                    && best.is_none_or(|b| rows[i][col].abs() < rows[b][col].abs())
                {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            rows.swap(pivot_row, b);
            let mut done = true;
            for i in pivot_row + 1..rows.len() {
                if !rows[i][col].is_zero() {
                    let q = rows[i][col].div_floor(&rows[pivot_row][col]);
                    let (head, tail) = rows.split_at_mut(i);
                    sub_multiple(&mut tail[0], &head[pivot_row], &q);
                    if !rows[i][col].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if !rows[pivot_row][col].is_zero() {
            if rows[pivot_row][col].is_negative() {
                for x in rows[pivot_row].iter_mut() {
                    *x = -&*x;
                }
            }
            pivot_row += 1;
        }
    }
    pivot_row
}

/// Row Hermite normal form of the lattice spanned by `rows`; zero rows dropped.
pub fn hermite_normal_form(rows: &IntMatrix) -> IntMatrix {
    let Some(width) = rows.first().map(Vec::len) else {
        return Vec::new();
    };
    let mut m = rows.clone();
    let rank = echelonize(&mut m, width);
    m.truncate(rank);
    // Reduce entries above each pivot into [0, pivot).
    for i in 0..rank {
        let col = pivot_column(&m[i]).expect("echelon rows are non-zero");
        for k in 0..i {
            let q = m[k][col].div_floor(&m[i][col]);
            if !q.is_zero() {
                let (head, tail) = m.split_at_mut(i);
                sub_multiple(&mut head[k], &tail[0], &q);
            }
        }
    }
    m
}

fn pivot_column(row: &[BigInt]) -> Option<usize> {
    row.iter().position(|x| !x.is_zero())
}

/// Basis (in HNF) of `{m in Z^n : m . d = 0 for every row d}`.
///
/// Computed from a unimodular `U` with `U D^T` in echelon form: the rows of
/// `U` opposite the zero rows of the echelon form span the integer kernel,
/// which is saturated by construction.
pub fn kernel_basis(rows: &IntMatrix, n: usize) -> IntMatrix {
    let m = rows.len();
    let mut aug: IntMatrix = (0..n)
        .map(|j| {
            let mut row: Vec<BigInt> = rows.iter().map(|d| d[j].clone()).collect();
            row.extend((0..n).map(|k| if k == j { BigInt::one() } else { BigInt::zero() }));
            row
        })
        .collect();
    let rank = echelonize(&mut aug, m);
    let kernel: IntMatrix = aug[rank..].iter().map(|r| r[m..].to_vec()).collect();
    hermite_normal_form(&kernel)
}

pub fn rank(rows: &IntMatrix) -> usize {
    hermite_normal_form(rows).len()
}

/// `v` is an integer combination of the rows of `hnf` (which must be in HNF).
pub fn contains(hnf: &IntMatrix, v: &[BigInt]) -> bool {
    let mut rest = v.to_vec();
    for row in hnf {
        let col = pivot_column(row).expect("HNF rows are non-zero");
        let (q, r) = rest[col].div_rem(&row[col]);
        if !r.is_zero() {
            return false;
        }
        if !q.is_zero() {
            sub_multiple(&mut rest, row, &q);
        }
    }
    rest.iter().all(Zero::is_zero)
}

/// Saturation `(L tensor Q) cap Z^n` of the lattice spanned by `rows`.
pub fn saturation(rows: &IntMatrix, n: usize) -> IntMatrix {
    kernel_basis(&kernel_basis(rows, n), n)
}

pub fn is_saturated(rows: &IntMatrix, n: usize) -> bool {
    hermite_normal_form(rows) == saturation(rows, n)
}

pub fn gcd_of(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}
