//! Unary re-encoding of bounded integer variables into `{-1,+1}` digits.
//!
//! A variable `x` ranging over `[a, b]` becomes
//! `x = (b+a)/2 · x_one + (1/2) Σ_k y_k` with `b-a` sign digits `y_k` and the
//! always-one variable `x_one`. Given first and second moments of the integer
//! variables, the digit construction (place `x-a` digits at `+1` and `b-x` at
//! `-1`, uniformly at random) induces exact digit moments, tabulated here in
//! closed form:
//!
//! * `E[y] = (2c_i - a_i - b_i)/(b_i - a_i)`,
//! * same-variable pairs `(4c_ii - 4(a+b)c_i + (a+b)^2 - (b-a)) / ((b-a)(b-a-1))`,
//! * cross-variable pairs
//!   `(4c_ij - 2(b_i+a_i)c_j - 2(b_j+a_j)c_i + (b_i+a_i)(b_j+a_j)) / ((b_i-a_i)(b_j-a_j))`.
//!
//! An alternate, superseded set of closed forms is carried alongside for
//! side-by-side diagnostics; the digit-placement oracle rejects that set
//! outside degenerate ranges (see `AltUnaryFormulas`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::construct::{IntegerVarSpec, MomentSpec, NonRealizableMoments};
use crate::predicate::LinearForm;
use crate::rat::{rfrac, rint, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UnaryError {
    #[error("{vars} variables but moment table covers {moments}")]
    ArityMismatch { vars: usize, moments: usize },
    #[error(transparent)]
    NonRealizable(#[from] NonRealizableMoments),
    #[error("variable {var}: implied digit mean {value} lies outside [-1, 1]")]
    MeanOutOfRange { var: usize, value: Rat },
    #[error("variable {var}: implied same-variable digit pair {value} is not attainable")]
    SamePairOutOfRange { var: usize, value: Rat },
    #[error("variables {first},{second}: implied cross pair {value} lies outside [-1, 1]")]
    CrossPairOutOfRange {
        first: usize,
        second: usize,
        value: Rat,
    },
}

/// A superseded set of digit-moment formulas, kept so reports can show both
/// sets side by side. Not validated: outside degenerate ranges (e.g. when a
/// variable's lower bound is nonzero) these disagree with the exhaustive
/// digit-placement oracle and may leave `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AltUnaryFormulas {
    pub digit_mean: Vec<Rat>,
    pub pair_same: Vec<Option<Rat>>,
    #[serde(with = "super::pair_map")]
    pub pair_cross: BTreeMap<(usize, usize), Rat>,
}

/// The digit-moment tables for a list of unary-encoded integer variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnaryEncoding {
    pub vars: Vec<IntegerVarSpec>,
    /// Per variable: mean of any one of its digits.
    pub digit_mean: Vec<Rat>,
    /// Per variable: product of two distinct digits (`None` when the variable
    /// has a single digit and no such pair exists).
    pub pair_same: Vec<Option<Rat>>,
    /// Per variable pair `i < j`: product of one digit of each.
    #[serde(with = "super::pair_map")]
    pub pair_cross: BTreeMap<(usize, usize), Rat>,
    pub alt: AltUnaryFormulas,
}

/// Computes exact digit moments for the unary encoding of `vars` whose
/// integer-level moments are `moments`. Flags moment tables no distribution
/// on the ranges can produce.
pub fn unary_encode(
    vars: &[IntegerVarSpec],
    moments: &MomentSpec,
) -> Result<UnaryEncoding, UnaryError> {
    if vars.len() != moments.len() {
        return Err(UnaryError::ArityMismatch {
            vars: vars.len(),
            moments: moments.len(),
        });
    }
    moments.validate()?;

    let pair = |i: usize, j: usize| -> Rat {
        moments
            .pair(i, j)
            .expect("moment table must cover every pair")
            .clone()
    };

    let mut digit_mean = Vec::with_capacity(vars.len());
    let mut pair_same = Vec::with_capacity(vars.len());
    let mut alt_mean = Vec::with_capacity(vars.len());
    let mut alt_same = Vec::with_capacity(vars.len());
    for (i, var) in vars.iter().enumerate() {
        let (a, b) = (rint(var.lo), rint(var.hi));
        let span = &b - &a; // number of digits, >= 1
        let c1 = moments.mean[i].clone();
        let c2 = moments.square[i].clone();

        let mean = &(&(&rint(2) * &c1) - &(&a + &b)) / &span;
        if mean.abs() > Rat::one() {
            return Err(UnaryError::MeanOutOfRange {
                var: i,
                value: mean,
            });
        }
        digit_mean.push(mean);
        alt_mean.push(&(&(&(&rint(2) * &c1) - &b) + &a) / &span);

        if var.digits() >= 2 {
            let apb = &a + &b;
            let num = &(&(&rint(4) * &c2) - &(&(&rint(4) * &apb) * &c1)) + &(&(&apb * &apb) - &span);
            let den = &span * &(&span - &Rat::one());
            let same = &num / &den;
            // Attainable range for an exchangeable ±1 pair moment.
            let floor = -&(Rat::one() / (&span - &Rat::one()));
            if same > Rat::one() || same < floor {
                return Err(UnaryError::SamePairOutOfRange {
                    var: i,
                    value: same,
                });
            }
            pair_same.push(Some(same));

            let alt_num = &(&(&(&(&rint(2) * &c2) - &(&rint(2) * &c1)) - &(&(&apb * &apb) / &rint(2)))
                + &apb)
                - &(&span / &rint(2));
            alt_same.push(Some(&alt_num / &den));
        } else {
            pair_same.push(None);
            alt_same.push(None);
        }
    }

    let mut pair_cross = BTreeMap::new();
    let mut alt_cross = BTreeMap::new();
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            let (ai, bi) = (rint(vars[i].lo), rint(vars[i].hi));
            let (aj, bj) = (rint(vars[j].lo), rint(vars[j].hi));
            let (si, sj) = (&bi - &ai, &bj - &aj);
            let den = &si * &sj;
            let cij = pair(i, j);
            let head = &(&(&rint(4) * &cij)
                - &(&(&rint(2) * &(&bi + &ai)) * &moments.mean[j]))
                - &(&(&rint(2) * &(&bj + &aj)) * &moments.mean[i]);
            let cross = &(&head + &(&(&bi + &ai) * &(&bj + &aj))) / &den;
            if cross.abs() > Rat::one() {
                return Err(UnaryError::CrossPairOutOfRange {
                    first: i,
                    second: j,
                    value: cross,
                });
            }
            pair_cross.insert((i, j), cross);
            // Alternate form: the product term mixes coordinates.
            let alt = &(&head + &(&(&bi + &ai) * &(&bj + &ai))) / &den;
            alt_cross.insert((i, j), alt);
        }
    }

    Ok(UnaryEncoding {
        vars: vars.to_vec(),
        digit_mean,
        pair_same,
        pair_cross,
        alt: AltUnaryFormulas {
            digit_mean: alt_mean,
            pair_same: alt_same,
            pair_cross: alt_cross,
        },
    })
}

impl UnaryEncoding {
    /// Index of variable `i`'s first digit in the `[x_one, digits…]` layout.
    pub fn digit_offset(&self, i: usize) -> usize {
        1 + self.vars[..i]
            .iter()
            .map(|v| v.digits() as usize)
            .sum::<usize>()
    }

    /// Total ±1 variables: `x_one` plus every digit.
    pub fn total_vars(&self) -> usize {
        1 + self
            .vars
            .iter()
            .map(|v| v.digits() as usize)
            .sum::<usize>()
    }

    /// The substitution for integer variable `i` as a linear form over the
    /// `[x_one, digits…]` layout: `(b+a)/2 · x_one + (1/2) Σ_k y_ik`.
    pub fn substitution(&self, i: usize) -> LinearForm {
        let mut weights = vec![Rat::zero(); self.total_vars()];
        weights[0] = rfrac(self.vars[i].hi + self.vars[i].lo, 2);
        let off = self.digit_offset(i);
        for k in 0..self.vars[i].digits() as usize {
            weights[off + k] = rfrac(1, 2);
        }
        LinearForm::new(weights, Rat::zero())
    }

    /// The full moment table over `[x_one, digits…]`. `x_one` has mean and
    /// square one and correlates with a digit as that digit's mean.
    ///
    /// Materializes all pairs — meant for small instances; large pipelines
    /// should stay with the per-family tables.
    pub fn output_moment_spec(&self) -> MomentSpec {
        let total = self.total_vars();
        let mut mean = vec![Rat::one(); total];
        let square = vec![Rat::one(); total];
        let mut owner = vec![usize::MAX; total]; // variable owning each slot
        for (i, var) in self.vars.iter().enumerate() {
            let off = self.digit_offset(i);
            for k in 0..var.digits() as usize {
                mean[off + k] = self.digit_mean[i].clone();
                owner[off + k] = i;
            }
        }
        let mut cross = BTreeMap::new();
        for u in 0..total {
            for v in u + 1..total {
                let value = if u == 0 {
                    // x_one times a digit.
                    mean[v].clone()
                } else if owner[u] == owner[v] {
                    self.pair_same[owner[u]]
                        .clone()
                        .expect("two digits imply a same-variable pair")
                } else {
                    let key = (owner[u].min(owner[v]), owner[u].max(owner[v]));
                    self.pair_cross[&key].clone()
                };
                cross.insert((u, v), value);
            }
        }
        MomentSpec {
            mean,
            square,
            cross,
        }
    }
}
