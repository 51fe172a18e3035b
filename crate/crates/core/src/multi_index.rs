use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent tuple `(a_1, ..., a_n)` of a holomorphic monomial `z^a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        MultiIndex(exps)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// `k * e_j` with a 1-based coordinate `j`.
    pub fn axis(n: usize, j: usize, k: u32) -> Self {
        let mut exps = vec![0; n];
        exps[j - 1] = k;
        MultiIndex(exps)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// All multi-indices in `n` variables of total degree at most `max_degree`,
    /// graded by degree and ordered lexicographically (descending) within a
    /// degree: `1, z1, z2, z1^2, z1 z2, z2^2, ...`.
    pub fn up_to_degree(n: usize, max_degree: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for d in 0..=max_degree {
            let mut current = vec![0u32; n];
            compositions(d, 0, &mut current, &mut out);
        }
        out
    }
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let n = current.len();
    if n == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        compositions(remaining - v, pos + 1, current, out);
    }
    current[pos] = 0;
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Integer difference `a - b` of two multi-indices of equal length.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DifferenceVector(Vec<i64>);

impl DifferenceVector {
    pub fn between(alpha: &MultiIndex, beta: &MultiIndex) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                found: beta.len(),
            });
        }
        Ok(DifferenceVector(
            alpha
                .exps()
                .iter()
                .zip(beta.exps())
                .map(|(&a, &b)| i64::from(a) - i64::from(b))
                .collect(),
        ))
    }

    /// Raw constructor for lattice computations and tests.
    pub fn from_entries(entries: Vec<i64>) -> Self {
        DifferenceVector(entries)
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn negated(&self) -> Self {
        DifferenceVector(self.0.iter().map(|x| -x).collect())
    }

    /// Representative of `{d, -d}` whose first non-zero entry is positive.
    pub fn canonical(&self) -> Self {
        match self.0.iter().find(|&&x| x != 0) {
            Some(&x) if x < 0 => self.negated(),
            _ => self.clone(),
        }
    }
}

impl fmt::Display for DifferenceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}
