//! Lifts a two-form constraint system onto the merged grid form: every
//! original constraint is replaced by one grid constraint per column (or
//! row) permutation, and the witness data is pulled back along the copy map
//! `x_{uc} = x_u`.

use serde::{Deserialize, Serialize};

use crate::instance::{permutations, Distribution, GapInstance, InstanceError};
use crate::polytope::BiasProfile;
use crate::predicate::{Constraint, Predicate};
use crate::rat::Rat;

use super::merge::{merge_dual, MergeError, MergeOutput};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("the lift needs exactly two predicates, found {0}")]
    PredCount(usize),
    #[error("predicate {0} is not a linear threshold form")]
    NotThreshold(usize),
    #[error("instance has {n} variables but the forms read {k}; the lift needs every constraint to touch every variable")]
    NotSquare { n: u32, k: usize },
    #[error("constraint {0} negates a slot; the lift requires positive literals")]
    NegatedSlot(usize),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// The lifted instance together with the merge certificate that produced
/// its single predicate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformOutput {
    /// Instance over `k*k` variables; variable `(u, c)` (copy `c` of
    /// original variable `u`, both 1-based) has index `(u-1)*k + c`.
    pub instance: GapInstance,
    /// Merged form and its quadratic-term data.
    pub merge: MergeOutput,
    /// `sources[a]` is the input constraint that produced output
    /// constraint `a`; each input yields `k!` consecutive outputs.
    pub sources: Vec<usize>,
}

/// Replaces the two threshold forms of `inst` by the single merged form on
/// the `k x k` grid. A constraint on the first form becomes the `k!`
/// constraints `x -> l3(X P)` over column permutations `P` (grid cell
/// `(i, j)` reads copy `tau(j)` of variable `phi(i)`); a constraint on the
/// second form becomes `x -> l3(P X)` (cell `(i, j)` reads copy `tau(i)`
/// of variable `phi(j)`). Distributions and biases are pulled back along
/// `x_{uc} = x_u`, so each copy class is perfectly correlated; the lifted
/// pair moments `E[x_{uc} x_{u'c'}] = E[x_u x_{u'}]` are recomputed from
/// the lifted supports and checked exactly.
pub fn instance_transform(inst: &GapInstance) -> Result<TransformOutput, TransformError> {
    inst.validate()?;
    if inst.preds.len() != 2 {
        return Err(TransformError::PredCount(inst.preds.len()));
    }
    let l1 = inst.preds[0].form().ok_or(TransformError::NotThreshold(0))?;
    let l2 = inst.preds[1].form().ok_or(TransformError::NotThreshold(1))?;
    let k = l1.arity();
    if inst.n as usize != k {
        return Err(TransformError::NotSquare { n: inst.n, k });
    }
    for (a, c) in inst.constraints.iter().enumerate() {
        if c.signs.iter().any(|&s| s != 1) {
            return Err(TransformError::NegatedSlot(a));
        }
    }

    let merge = merge_dual(&l1, &l2)?;
    let n_lift = (k * k) as u32;
    // Lifted index of copy `c` (1-based) of original variable `u` (1-based).
    let cell = |u: u32, c: usize| -> u32 { (u - 1) * k as u32 + c as u32 };

    let mut bias = BiasProfile::zero(n_lift);
    for u in 1..=inst.n {
        for c in 1..=k {
            bias.set_single(cell(u, c), inst.bias.single(u).clone());
        }
    }
    for u in 1..=inst.n {
        for c in 1..=k {
            for v in u..=inst.n {
                for d in 1..=k {
                    if cell(u, c) >= cell(v, d) {
                        continue;
                    }
                    let m = if u == v {
                        // Two copies of one variable are equal, and the
                        // variables are +-1 valued.
                        Rat::one()
                    } else {
                        inst.bias.pair(u, v).clone()
                    };
                    bias.set_pair(cell(u, c), cell(v, d), m).expect("pair in range");
                }
            }
        }
    }

    let taus = permutations(k);
    let mut constraints = Vec::with_capacity(inst.constraints.len() * taus.len());
    let mut dists = Vec::with_capacity(constraints.capacity());
    let mut sources = Vec::with_capacity(constraints.capacity());
    for (a, c) in inst.constraints.iter().enumerate() {
        // The scope is sorted, so `support[t]` values variable `t+1`;
        // repeating each value `k` times values its copy block.
        let lifted = Distribution {
            support: inst.dists[a]
                .support
                .iter()
                .map(|(x, w)| {
                    let mut point = Vec::with_capacity(x.len() * k);
                    for &v in x {
                        point.extend(std::iter::repeat(v).take(k));
                    }
                    (point, w.clone())
                })
                .collect(),
        };
        check_lifted_moments(k, &inst.dists[a], &lifted);
        for tau in &taus {
            let mut phi = vec![0u32; k * k];
            for i in 0..k {
                for j in 0..k {
                    phi[i * k + j] = if c.pred == 0 {
                        cell(c.phi[i], tau[j] + 1)
                    } else {
                        cell(c.phi[j], tau[i] + 1)
                    };
                }
            }
            constraints.push(Constraint::new(0, phi, vec![1; k * k]));
            dists.push(lifted.clone());
            sources.push(a);
        }
    }

    let instance = GapInstance {
        n: n_lift,
        preds: vec![Predicate::from_form(&merge.form)],
        constraints,
        bias,
        dists,
    };
    instance.validate()?;
    Ok(TransformOutput {
        instance,
        merge,
        sources,
    })
}

/// Exact self-check of the copy map's moment identity: every first and
/// second moment of the lifted support must equal the corresponding base
/// moment (same-variable copy pairs give 1).
fn check_lifted_moments(k: usize, base: &Distribution, lifted: &Distribution) {
    let vars = base.support[0].0.len();
    let base_profile = BiasProfile::from_distribution(vars as u32, &base.support);
    let lift_profile = BiasProfile::from_distribution((vars * k) as u32, &lifted.support);
    for u in 0..vars {
        for c in 0..k {
            let s = (u * k + c) as u32 + 1;
            assert_eq!(
                lift_profile.single(s),
                base_profile.single(u as u32 + 1),
                "copy moment must equal the base first moment"
            );
            for v in u..vars {
                for d in 0..k {
                    let t = (v * k + d) as u32 + 1;
                    if s >= t {
                        continue;
                    }
                    let want = if u == v {
                        Rat::one()
                    } else {
                        base_profile.pair(u as u32 + 1, v as u32 + 1).clone()
                    };
                    assert_eq!(
                        *lift_profile.pair(s, t),
                        want,
                        "lifted pair moment must equal the base pair moment"
                    );
                }
            }
        }
    }
}
