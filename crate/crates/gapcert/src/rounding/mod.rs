//! Rounding-scheme analysis for president/citizen threshold predicates.
//!
//! The submodules split along the natural seams of the analysis:
//!
//! * [`operators`] — the three noise operators (independent sign flips,
//!   correlated hyperplane flips, parity selection) acting on monomial
//!   expectation tables, plus the monomial-synthesis demonstration that
//!   composes them.
//! * [`hypergraph`] — labeled single/pair edge patterns and the
//!   direct (injective-enumeration) evaluator for their bias sums.
//! * [`stats`] — connected-statistic closed forms, the identity suite that
//!   rewrites disconnected pattern sums in terms of them, and a fixed-point
//!   integer fast path for large arities.
//! * [`monarchy`] — the degree-3 scheme for `sign((k-2)x_1 + sum x_i)` and
//!   its exact advantage floor.
//! * [`almost`] — the degree-3/5/7 scheme for `sign((k-4)x_1 + sum x_i)`,
//!   the pair-deficit floor, and the threshold search over `k`.
//!
//! Everything on a verification path is exact; Monte Carlo enters only where
//! an expectation has no closed form, and every such estimate carries its
//! seed, sample count, and standard error.

pub mod almost;
pub mod hypergraph;
pub mod monarchy;
pub mod operators;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::matrix::NotPsdError;
use crate::polytope::BiasProfile;
use crate::predicate::{Predicate, PredicateError};
use crate::rat::Rat;

/// Errors shared by the rounding-scheme analyses.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoundingError {
    #[error("noise rate must lie in [0, 1], got {rate}")]
    NoiseRate { rate: Rat },
    #[error("variable index {var} out of range 1..={n}")]
    VarRange { var: u32, n: u32 },
    #[error("operator parts overlap at variable {var}")]
    OverlappingParts { var: u32 },
    #[error("expectation table arity {n} exceeds the cap of {cap}")]
    ArityCap { n: u32, cap: u32 },
    #[error("expectation of mask {mask:#x} lies outside [-1, 1]")]
    ExpectationRange { mask: u32 },
    #[error("unsigned expectation map must give the empty product expectation 1")]
    BaseNotOne,
    #[error("correlation matrix failure: {0}")]
    NotPsd(#[from] NotPsdError),
    #[error("pattern edge pairs vertex {vertex} with itself")]
    SelfPair { vertex: String },
    #[error("the president vertex may carry at most one edge, found {count}")]
    PresidentEdges { count: usize },
    #[error("pattern has {vertices} vertices, cap is {cap}")]
    PatternSize { vertices: usize, cap: usize },
    #[error("direct enumeration capped at {cap} variables, got {k}")]
    DirectEvalCap { k: u32, cap: u32 },
    #[error("no closed form is cataloged for this pattern")]
    NoClosedForm,
    #[error("profile denominator does not divide the fixed-point scale {scale}")]
    ScaleMismatch { scale: i64 },
    #[error("arity {k} below the minimum {min} for this scheme")]
    ArityFloor { k: u32, min: u32 },
    #[error("scheme constant has the wrong sign at k={k}: {name} = {value}")]
    SignPrecondition { k: u32, name: String, value: Rat },
    #[error("first moments lie outside the satisfying hull (separating normal found)")]
    OutsideHull { normal: Vec<Rat>, threshold: Rat },
    #[error("mixture term {index} does not satisfy the predicate (mask {mask:#x})")]
    NonSatisfying { index: usize, mask: u64 },
    #[error("mixture term {index} has a non-positive weight")]
    WeightNotPositive { index: usize },
    #[error("mixture weights sum to zero")]
    WeightSumZero,
    #[error("monomial specification does not use each part exactly once")]
    PartCoverage,
    #[error("scale factor must be positive, got {epsilon}")]
    EpsilonRange { epsilon: Rat },
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Hull(#[from] crate::hull::HullError),
}

/// Which of the two independent evaluation routes to use for a pattern sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalRoute {
    /// Sum over injective vertex images, divided by the pattern automorphisms.
    Direct,
    /// Closed form assembled from connected statistics.
    Aggregate,
}

/// Seed and budget for a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 0x6761_7063,
            samples: 200_000,
        }
    }
}

/// A convex combination of satisfying assignments of a predicate.
///
/// The mixture doubles as its own certificate: the induced first and pairwise
/// moments are a distribution's moments by construction, so no hull membership
/// LP is needed to admit them. Weights must be positive; they are normalized
/// by their sum, so integer weights are fine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatisfyingMixture {
    pub k: u8,
    /// `(assignment bitmask, weight)`; bit `i` set means variable `i+1` is +1.
    pub terms: Vec<(u32, Rat)>,
}

impl SatisfyingMixture {
    /// The point mass on a single assignment.
    pub fn vertex(k: u8, mask: u32) -> Self {
        SatisfyingMixture {
            k,
            terms: vec![(mask, Rat::one())],
        }
    }

    /// Checks every mask satisfies `pred` and weights are positive with a
    /// nonzero total.
    pub fn validate(&self, pred: &Predicate) -> Result<(), RoundingError> {
        assert_eq!(pred.arity(), self.k, "mixture arity mismatch");
        let mut total = Rat::zero();
        for (index, (mask, weight)) in self.terms.iter().enumerate() {
            let value = pred
                .eval_mask(*mask)
                .map_err(|_| RoundingError::NonSatisfying {
                    index,
                    mask: u64::from(*mask),
                })?;
            if value != 1 {
                return Err(RoundingError::NonSatisfying {
                    index,
                    mask: u64::from(*mask),
                });
            }
            if !weight.is_positive() {
                return Err(RoundingError::WeightNotPositive { index });
            }
            total += weight;
        }
        if total.is_zero() {
            return Err(RoundingError::WeightSumZero);
        }
        Ok(())
    }

    /// First and pairwise moments of the normalized mixture.
    pub fn profile(&self) -> BiasProfile {
        let support: Vec<(Vec<i8>, Rat)> = self
            .terms
            .iter()
            .map(|(mask, w)| (mask_to_pm(self.k, *mask), w.clone()))
            .collect();
        BiasProfile::from_distribution(u32::from(self.k), &support)
    }

    /// First moments only (index `i` holds the moment of variable `i+1`).
    pub fn first_moments(&self) -> Vec<Rat> {
        let profile = self.profile();
        (1..=u32::from(self.k))
            .map(|i| profile.single(i).clone())
            .collect()
    }
}

/// Expands a bitmask into a `+1`/`-1` assignment vector (bit `i` = variable `i+1`).
pub fn mask_to_pm(k: u8, mask: u32) -> Vec<i8> {
    (0..k)
        .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// Draws a random convex mixture of satisfying assignments of `pred`:
/// 3 to 6 support masks chosen uniformly from the satisfying set (repeats
/// merge their weight) with integer weights in `1..=40`. Deterministic in
/// `(seed, stream)`, so sweeps can shard by trial index.
pub fn random_satisfying_mixture(
    pred: &Predicate,
    seed: u64,
    stream: u64,
) -> Result<SatisfyingMixture, RoundingError> {
    use rand::Rng;
    use rand::SeedableRng;

    let masks = pred.satisfying_masks()?;
    assert!(!masks.is_empty(), "predicate has no satisfying assignments");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let support = rng.gen_range(3usize..=6);
    let terms = (0..support)
        .map(|_| {
            let mask = masks[rng.gen_range(0..masks.len())];
            let weight = Rat::int(rng.gen_range(1i64..=40));
            (mask, weight)
        })
        .collect();
    Ok(SatisfyingMixture {
        k: pred.arity() as u8,
        terms,
    })
}
