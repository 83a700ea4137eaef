//! Staged construction of a balanced-threshold gap instance.
//!
//! The pipeline runs: a fixed four-variable core with exact moments, linear
//! form surgery for welding constraints into solution sets, permutation
//! gadgets with closed-form moments, unary re-encoding into `{-1,+1}`
//! variables, a balancing doubling step, and finally a row/column merge of
//! two threshold forms into a single one. Every stage carries its own
//! small-parameter verifier; the full-scale composition is only ever sized,
//! never materialized (see [`pipeline_plan`]).

mod balance;
mod core;
mod gadget;
mod merge;
mod pipeline;
mod surgery;
mod transform;
mod unary;

pub use self::balance::{balance_double, tri_balanced_form, BalanceError, BalancedDouble};
pub use self::core::{
    core_instance, solve_core_parameters, verify_core, Core, CoreDefect, CoreParameters,
    CoreReport, CoreSolveError, MomentId,
};
pub use self::gadget::{
    build_gadget, gadget_moments, verify_gadget, Gadget, GadgetError, GadgetMoments, GadgetReport,
    VectorStats,
};
pub use self::merge::{merge_dual, verify_merge, MergeError, MergeOutput, MergeReport, QuadTerm};
pub use self::pipeline::{pipeline_plan, PipelinePlan, StageSizing, UnaryDigest};
pub use self::surgery::{enforce, in_zero_set, zero_set, Enforced, EnforceError, VarDomain};
pub use self::transform::{instance_transform, TransformError, TransformOutput};
pub use self::unary::{unary_encode, AltUnaryFormulas, UnaryEncoding, UnaryError};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rat::Rat;

/// First and second moments for a family of real variables: `mean[i] =
/// E[x_i]`, `square[i] = E[x_i^2]`, and `cross[(i,j)] = E[x_i x_j]` for
/// `i < j` (0-based). Cross entries may be sparse; a missing pair means the
/// moment is unspecified, not zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub mean: Vec<Rat>,
    pub square: Vec<Rat>,
    #[serde(with = "pair_map")]
    pub cross: BTreeMap<(usize, usize), Rat>,
}

/// JSON-friendly encoding for pair-keyed moment maps: a sorted list of
/// `[i, j, value]` entries instead of a map with composite keys.
pub(crate) mod pair_map {
    use std::collections::BTreeMap;

    use serde::de::{Deserialize, Deserializer};
    use serde::ser::Serializer;

    use crate::rat::Rat;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(usize, usize), Rat>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|(&(i, j), v)| (i, j, v.clone())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(usize, usize), Rat>, D::Error> {
        let entries = Vec::<(usize, usize, Rat)>::deserialize(d)?;
        Ok(entries.into_iter().map(|(i, j, v)| ((i, j), v)).collect())
    }
}

/// A variable whose second moment is smaller than the square of its mean;
/// no distribution has such moments.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("variable {var} has E[x]={mean} but E[x^2]={square} < E[x]^2")]
pub struct NonRealizableMoments {
    pub var: usize,
    pub mean: Rat,
    pub square: Rat,
}

impl MomentSpec {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Order-insensitive cross-moment lookup; `i == j` reads the square.
    pub fn pair(&self, i: usize, j: usize) -> Option<&Rat> {
        if i == j {
            self.square.get(i)
        } else {
            let key = (i.min(j), i.max(j));
            self.cross.get(&key)
        }
    }

    /// Exact moments of a finite distribution given as `(point, weight)`
    /// pairs. Weights are normalized by their total.
    pub fn from_distribution(support: &[(Vec<Rat>, Rat)]) -> MomentSpec {
        let n = support.first().map_or(0, |(p, _)| p.len());
        let total: Rat = support.iter().map(|(_, w)| w.clone()).sum();
        let mut mean = vec![Rat::zero(); n];
        let mut square = vec![Rat::zero(); n];
        let mut cross = BTreeMap::new();
        for (point, weight) in support {
            assert_eq!(point.len(), n, "ragged support point");
            for i in 0..n {
                mean[i] += weight * &point[i];
                square[i] += &(weight * &point[i]) * &point[i];
                for j in i + 1..n {
                    let entry = cross.entry((i, j)).or_insert_with(Rat::zero);
                    *entry += &(weight * &point[i]) * &point[j];
                }
            }
        }
        for v in mean.iter_mut().chain(square.iter_mut()) {
            *v /= &total;
        }
        for v in cross.values_mut() {
            *v /= &total;
        }
        MomentSpec {
            mean,
            square,
            cross,
        }
    }

    /// Flags any variable whose listed moments no distribution can attain.
    pub fn validate(&self) -> Result<(), NonRealizableMoments> {
        assert_eq!(self.mean.len(), self.square.len(), "ragged moment spec");
        for i in 0..self.mean.len() {
            if self.square[i] < &self.mean[i] * &self.mean[i] {
                return Err(NonRealizableMoments {
                    var: i,
                    mean: self.mean[i].clone(),
                    square: self.square[i].clone(),
                });
            }
        }
        Ok(())
    }
}

/// An integer-valued variable together with its inclusive range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerVarSpec {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

impl IntegerVarSpec {
    /// Panics unless `lo < hi`; a one-point range has nothing to encode.
    pub fn new(name: impl Into<String>, lo: i64, hi: i64) -> IntegerVarSpec {
        assert!(lo < hi, "integer variable range must satisfy lo < hi");
        IntegerVarSpec {
            name: name.into(),
            lo,
            hi,
        }
    }

    /// Number of `{-1,+1}` digits in the unary encoding of this variable.
    pub fn digits(&self) -> u64 {
        (self.hi - self.lo) as u64
    }
}
