//! From significant Gram entries to the maximal torus action they allow.
//!
//! A non-zero `<z^a, z^b>` forces every torus weight `m` of a symmetry to
//! satisfy `m . (a - b) = 0`. The detected action is the integer kernel of
//! all such differences, and the classification reads off which standard
//! weights lie in that lattice.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice;
use crate::moments::{decide_nonzero, Decision, GramData, Policy};
use crate::multi_index::{DifferenceVector, MultiIndex};
use crate::torus::TorusAction;

/// Coefficient bound of the positive weight search.
pub const WEIGHT_SEARCH_BOUND: i64 = 12;

/// Largest number of coefficient combinations the weight search visits.
const WEIGHT_SEARCH_LIMIT: u64 = 4_000_000;

/// Differences `a - b` of significantly non-orthogonal monomial pairs, one
/// representative per `{d, -d}`, with the pairs that witnessed them.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DifferenceSet {
    n: usize,
    provenance: BTreeMap<DifferenceVector, Vec<(MultiIndex, MultiIndex)>>,
    inconclusive: Vec<(MultiIndex, MultiIndex)>,
}

impl DifferenceSet {
    pub fn empty(n: usize) -> Self {
        DifferenceSet {
            n,
            ..DifferenceSet::default()
        }
    }

    /// A set given directly by its vectors; zero vectors are dropped.
    pub fn from_vectors(n: usize, vectors: impl IntoIterator<Item = DifferenceVector>) -> Result<Self> {
        let mut set = DifferenceSet::empty(n);
        for d in vectors {
            if d.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: d.len(),
                });
            }
            if !d.is_zero() {
                set.provenance.entry(d.canonical()).or_default();
            }
        }
        Ok(set)
    }

    fn record(&mut self, alpha: &MultiIndex, beta: &MultiIndex) {
        let d = DifferenceVector::between(alpha, beta).expect("Gram indices share a length");
        if !d.is_zero() {
            self.provenance
                .entry(d.canonical())
                .or_default()
                .push((alpha.clone(), beta.clone()));
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn diffs(&self) -> BTreeSet<DifferenceVector> {
        self.provenance.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    /// Membership up to sign.
    pub fn contains(&self, d: &DifferenceVector) -> bool {
        self.provenance.contains_key(&d.canonical())
    }

    pub fn witnesses(&self, d: &DifferenceVector) -> &[(MultiIndex, MultiIndex)] {
        self.provenance.get(&d.canonical()).map_or(&[], Vec::as_slice)
    }

    pub fn inconclusive_count(&self) -> usize {
        self.inconclusive.len()
    }

    pub fn inconclusive_pairs(&self) -> &[(MultiIndex, MultiIndex)] {
        &self.inconclusive
    }
}

#[derive(Serialize)]
struct DiffEntry<'a> {
    d: &'a DifferenceVector,
    witnesses: &'a [(MultiIndex, MultiIndex)],
}

impl Serialize for DifferenceSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let diffs: Vec<DiffEntry<'_>> = self
            .provenance
            .iter()
            .map(|(d, w)| DiffEntry { d, witnesses: w })
            .collect();
        let mut st = s.serialize_struct("DifferenceSet", 4)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("diffs", &diffs)?;
        st.serialize_field("inconclusive_count", &self.inconclusive.len())?;
        st.serialize_field("inconclusive_pairs", &self.inconclusive)?;
        st.end()
    }
}

/// Differences of all off-diagonal pairs the policy calls non-zero.
/// Inconclusive pairs are kept aside and never enter the set.
pub fn difference_set(gram: &GramData, policy: &Policy) -> DifferenceSet {
    let n = gram.indices().first().map_or(0, MultiIndex::len);
    let mut set = DifferenceSet::empty(n);
    for (i, j) in gram.off_diagonal() {
        let (alpha, beta) = (&gram.indices()[i], &gram.indices()[j]);
        match decide_nonzero(gram.get(i, j), policy) {
            Decision::Nonzero => set.record(alpha, beta),
            Decision::Inconclusive => set.inconclusive.push((alpha.clone(), beta.clone())),
            Decision::Zero => {}
        }
    }
    set
}

/// The saturated lattice `{m in Z^n : m . d = 0 for all d}` as an action.
pub fn integer_kernel(diffs: &DifferenceSet, n: usize) -> Result<TorusAction> {
    if diffs.n != n && !diffs.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: diffs.n,
        });
    }
    let rows: Vec<Vec<i64>> = diffs.provenance.keys().map(|d| d.entries().to_vec()).collect();
    let kernel = lattice::kernel_basis(&lattice::to_big(&rows), n);
    TorusAction::from_hnf(n, &kernel)
}

/// Whether `v` is an integer combination of the columns of `action`.
pub fn lattice_membership(action: &TorusAction, v: &[i64]) -> bool {
    if v.len() != action.n() {
        return false;
    }
    let hnf = action.hnf();
    let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
    lattice::contains(&hnf, &big)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryClassification {
    pub is_reinhardt: bool,
    pub is_circular: bool,
    /// 1-based coordinates `j` with `e_j` in the lattice.
    pub hartogs_coords: Vec<usize>,
    pub quasi_circular_weights: Option<Vec<i64>>,
    pub detected_action: TorusAction,
    pub caveats: Vec<String>,
}

/// Labels of the lattice spanned by `action`.
pub fn classify(action: &TorusAction) -> SymmetryClassification {
    let n = action.n();
    let r = action.rank();
    let hartogs_coords = (1..=n)
        .filter(|&j| {
            let e: Vec<i64> = (1..=n).map(|k| i64::from(k == j)).collect();
            lattice_membership(action, &e)
        })
        .collect();
    let is_circular = lattice_membership(action, &vec![1; n]);
    let (weights, bound) = positive_weight(action);
    let mut caveats = Vec::new();
    if r == 0 {
        caveats.push("no torus symmetry detected".to_string());
    } else if weights.is_none() {
        caveats.push(format!("no positive weight vector found (coefficient bound {bound})"));
    }
    SymmetryClassification {
        is_reinhardt: r == n,
        is_circular,
        hartogs_coords,
        quasi_circular_weights: weights,
        detected_action: action.clone(),
        caveats,
    }
}

/// Smallest (by max entry, then sum, then lexicographically) strictly
/// positive lattice vector among coefficient combinations in `[-B, B]^r`,
/// normalized to gcd 1. Returns the bound actually used.
fn positive_weight(action: &TorusAction) -> (Option<Vec<i64>>, i64) {
    let r = action.rank();
    if r == 0 {
        return (None, WEIGHT_SEARCH_BOUND);
    }
    let mut bound = WEIGHT_SEARCH_BOUND;
    while bound > 1 && ((2 * bound + 1) as u64).checked_pow(r as u32).is_none_or(|c| c > WEIGHT_SEARCH_LIMIT) {
        bound -= 1;
    }
    let key = |v: &Vec<i64>| (*v.iter().max().expect("n >= 1"), v.iter().sum::<i64>(), v.clone());
    let mut best: Option<Vec<i64>> = None;
    let mut consider = |v: Vec<i64>| {
        if v.iter().all(|&x| x > 0) {
            let v = primitive(v);
            if best.as_ref().is_none_or(|b| key(&v) < key(b)) {
                best = Some(v);
            }
        }
    };
    for col in action.columns() {
        consider(col.clone());
        consider(col.iter().map(|x| -x).collect());
    }
    let n = action.n();
    let mut coeffs = vec![-bound; r];
    loop {
        let v: Vec<i64> = (0..n)
            .map(|j| coeffs.iter().zip(action.columns()).map(|(c, col)| c * col[j]).sum())
            .collect();
        consider(v);
        let mut k = 0;
        while k < r && coeffs[k] == bound {
            coeffs[k] = -bound;
            k += 1;
        }
        if k == r {
            break;
        }
        coeffs[k] += 1;
    }
    (best, bound)
}

fn primitive(v: Vec<i64>) -> Vec<i64> {
    let g = v.iter().fold(0i64, |g, &x| g.gcd(&x));
    if g > 1 {
        v.into_iter().map(|x| x / g).collect()
    } else {
        v
    }
}
