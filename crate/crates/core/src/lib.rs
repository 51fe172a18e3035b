//! Detection of torus (rotational) symmetries of domains in `C^n` from the
//! orthogonality pattern of holomorphic monomials in the Bergman space.
//!
//! The pipeline is:
//!
//! 1. [`moments`] estimates the Gram data `<z^a, z^b>` of a [`DomainSpec`]
//!    (closed form, radial quadrature, or shared-sample Monte Carlo);
//! 2. [`symmetry`] turns the significantly non-zero off-diagonal entries into
//!    a set of integer difference vectors and computes the maximal integer
//!    lattice of torus weights orthogonal to all of them;
//! 3. [`condition_d`] checks the Carleman-type series condition per
//!    coordinate, exactly for the `exp(-|z1|^(1/2^k))` family;
//! 4. [`analyzer`] assembles everything into a [`SymmetryReport`].
//!
//! Numerical kernels (quadrature, closed-form norms, torus characters,
//! profile evaluation) are generic over [`Scalar`]; the end-to-end pipeline
//! runs in `f64` through the aliases defined here.

pub mod analyzer;
pub mod condition_d;
pub mod config;
pub mod domain;
pub mod error;
pub mod lattice;
pub mod moments;
pub mod multi_index;
pub mod profile;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod symmetry;
pub mod torus;

pub use analyzer::{
    analyze, check_complete_reinhardt, verify_calculation_identity, verify_invariance,
    AnalysisOptions, SymmetryReport,
};
pub use condition_d::{
    condition_d_verdict, exact_omega_k_moment, norm_sequence, power_decay_membership,
    ConditionDVerdict, CoordinateVerdict, NormSequence,
};
pub use config::parse_domain_config;
pub use domain::{membership, CoordBound, DomainSpec, Shape};
pub use error::{Error, Result};
pub use moments::{
    ball_norm_closed_form, decide_nonzero, gram, inner_product, polydisk_norm_closed_form,
    profile_moment_quadrature, Decision, GramData, MethodRequest, MomentEstimate, MomentMethod,
    MomentOptions, Policy,
};
pub use multi_index::{DifferenceVector, MultiIndex};
pub use profile::{parse_profile, ProfileFunction};
pub use scalar::Scalar;
pub use symmetry::{
    classify, difference_set, integer_kernel, lattice_membership, DifferenceSet,
    SymmetryClassification,
};
pub use torus::{apply_torus, eval_g, g_is_trivial, TorusAction};

/// Complex scalar used by the `f64` pipeline.
pub type Complex64 = num_complex::Complex<f64>;
/// Complex scalar for single-precision use of the generic kernels.
pub type Complex32 = num_complex::Complex<f32>;
/// A point of `C^n`.
pub type Point = Vec<Complex64>;
/// A point of the `r`-torus, one unit complex number per torus factor.
pub type TorusPoint = Vec<Complex64>;
