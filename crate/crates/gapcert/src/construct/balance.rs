//! Variable doubling that turns a zero-free sign-balanced form into a
//! perfectly balanced one on twice as many variables.
//!
//! The carrier is a family of integer forms `g` on `k = 2^j` tri-valued
//! variables, built by the recursion
//! `g_{j+1}(x, y) = B_j · Σ_t 5^{t-1}(y_t - x_t) + g_j(x)` with
//! `B_j = Σ|coef(g_j)| + 1`, starting from the single variable. Each `g` is
//! perfectly balanced over `{-1, 0, 1}` inputs, vanishes only at the origin,
//! and its smallest nonzero magnitude is 1 (restricting `y = x` collapses
//! `g_{j+1}` to `g_j`, so any value `g_j` attains is attained by `g_{j+1}`).
//!
//! `balance_double` then forms `l' = B'·g({(x_i+y_i)/2}) + l({x_i})` with
//! `B'` beating `max |l|`, so the sign of `l'` is the sign of `g` wherever
//! some `y_i ≠ -x_i`, and the sign of `l` on the diagonal `y = -x`.

use serde::{Deserialize, Serialize};

use crate::predicate::{check_perfectly_balanced, LinearForm, UnbalancedLayer, MAX_TABLE_ARITY};
use crate::rat::{rfrac, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BalanceError {
    #[error("arity {k} is not a power of two")]
    NotPowerOfTwo { k: usize },
    #[error("{vars} doubled variables exceed the balance-certification cap")]
    TooLargeToCertify { vars: usize },
    #[error("carrier coefficients overflow a 64-bit word at arity {k}")]
    CoefficientOverflow { k: usize },
    #[error("doubled form is not perfectly balanced: {0}")]
    Unbalanced(#[from] UnbalancedLayer),
}

/// The balanced carrier form on `k = 2^j` variables (integer weights, no
/// constant term).
pub fn tri_balanced_form(k: usize) -> Result<LinearForm, BalanceError> {
    if !k.is_power_of_two() {
        return Err(BalanceError::NotPowerOfTwo { k });
    }
    let overflow = || BalanceError::CoefficientOverflow { k };
    let mut weights: Vec<i128> = vec![1];
    while weights.len() < k {
        let half = weights.len();
        let b: i128 = weights.iter().map(|w| w.abs()).sum::<i128>() + 1;
        let mut next = vec![0i128; 2 * half];
        let mut ladder: i128 = 1;
        for t in 0..half {
            let step = b.checked_mul(ladder).ok_or_else(overflow)?;
            next[t] = weights[t].checked_sub(step).ok_or_else(overflow)?;
            next[half + t] = step;
            if t + 1 < half {
                ladder = ladder.checked_mul(5).ok_or_else(overflow)?;
            }
        }
        weights = next;
    }
    let as_i64: Result<Vec<i64>, _> = weights.iter().map(|&w| i64::try_from(w)).collect();
    Ok(LinearForm::from_ints(
        &as_i64.map_err(|_| overflow())?,
        0,
    ))
}

/// A perfectly balanced doubling of a linear form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedDouble {
    /// The balanced form on `2k` variables, ordered `[x_1..x_k, y_1..y_k]`.
    pub form: LinearForm,
    /// The carrier `g` on `k` variables.
    pub inner: LinearForm,
    /// The scale `B'` applied to the carrier.
    pub outer_bound: Rat,
}

/// Doubles `l` into a perfectly balanced form and certifies the result.
///
/// The layer test is exhaustive over all `2^(2k)` inputs, so the input arity
/// is capped; it fails — and this returns the offending layer — whenever `l`
/// itself has sign-imbalanced or zero evaluations, which is exactly the
/// precondition the doubling cannot repair.
pub fn balance_double(l: &LinearForm) -> Result<BalancedDouble, BalanceError> {
    let k = l.arity();
    if !k.is_power_of_two() {
        return Err(BalanceError::NotPowerOfTwo { k });
    }
    if 2 * k > MAX_TABLE_ARITY as usize {
        return Err(BalanceError::TooLargeToCertify { vars: 2 * k });
    }
    let inner = tri_balanced_form(k)?;

    // Scale clearing max |l| over the cube; the carrier's smallest nonzero
    // magnitude is 1, so any nonzero carrier value dominates.
    let reach: Rat = l
        .weights
        .iter()
        .map(Rat::abs)
        .sum::<Rat>()
        + l.constant.abs();
    let outer_bound = Rat::from_big(num_rational::BigRational::from_integer(reach.floor_int()))
        + Rat::one();

    let mut weights = vec![Rat::zero(); 2 * k];
    for i in 0..k {
        let half_scaled = &(&outer_bound * &inner.weights[i]) * &rfrac(1, 2);
        weights[i] = &half_scaled + &l.weights[i];
        weights[k + i] = half_scaled;
    }
    let form = LinearForm::new(weights, l.constant.clone());

    // The diagonal restriction y = -x cancels the carrier exactly.
    for i in 0..k {
        let restricted = &form.weights[i] - &form.weights[k + i];
        assert_eq!(restricted, l.weights[i], "diagonal restriction drifted");
    }
    assert_eq!(form.constant, l.constant);

    check_perfectly_balanced(&form)?;
    Ok(BalancedDouble {
        form,
        inner,
        outer_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::check_perfectly_balanced_valued;
    use crate::rat::{rint, Rat};

    #[test]
    fn carrier_forms_match_the_recursion() {
        let g1 = tri_balanced_form(1).unwrap();
        assert_eq!(g1, LinearForm::from_ints(&[1], 0));
        let g2 = tri_balanced_form(2).unwrap();
        assert_eq!(g2, LinearForm::from_ints(&[-1, 2], 0));
        let g4 = tri_balanced_form(4).unwrap();
        assert_eq!(g4, LinearForm::from_ints(&[-5, -18, 4, 20], 0));
        assert!(matches!(
            tri_balanced_form(3),
            Err(BalanceError::NotPowerOfTwo { k: 3 })
        ));
    }

    #[test]
    fn carriers_are_balanced_over_tri_valued_inputs() {
        let values = [rint(-1), rint(0), rint(1)];
        for k in [1usize, 2, 4, 8] {
            let g = tri_balanced_form(k).unwrap();
            check_perfectly_balanced_valued(&g, &values).unwrap();
        }
    }

    #[test]
    fn carriers_vanish_only_at_the_origin() {
        for k in [1usize, 2, 4] {
            let g = tri_balanced_form(k).unwrap();
            let mut zeros = 0u32;
            let total = 3u32.pow(k as u32);
            for code in 0..total {
                let mut c = code;
                let point: Vec<Rat> = (0..k)
                    .map(|_| {
                        let v = rint(c as i64 % 3 - 1);
                        c /= 3;
                        v
                    })
                    .collect();
                if g.eval(&point).is_zero() {
                    zeros += 1;
                    assert!(point.iter().all(Rat::is_zero));
                }
            }
            assert_eq!(zeros, 1, "k = {}", k);
        }
    }

    #[test]
    fn doubling_the_two_variable_example_gives_known_weights() {
        let l = LinearForm::from_ints(&[2, 1], 0);
        let d = balance_double(&l).unwrap();
        assert_eq!(d.outer_bound, rint(4));
        assert_eq!(d.form, LinearForm::from_ints(&[0, 5, -2, 4], 0));
        check_perfectly_balanced(&d.form).unwrap();
    }

    #[test]
    fn doubling_a_four_variable_form_passes_both_checks() {
        // Sign-balanced with odd weight sum, hence zero-free.
        let l = LinearForm::from_ints(&[2, 1, -1, -1], 0);
        let d = balance_double(&l).unwrap();
        assert_eq!(d.form.arity(), 8);
        check_perfectly_balanced(&d.form).unwrap();
        // Exhaustive diagonal check: y = -x reproduces l pointwise.
        for mask in 0u32..16 {
            let x: Vec<Rat> = (0..4)
                .map(|i| rint(if mask >> i & 1 == 1 { 1 } else { -1 }))
                .collect();
            let mut xy = x.clone();
            xy.extend(x.iter().map(|v| -v));
            assert_eq!(d.form.eval(&xy), l.eval(&x));
        }
    }

    #[test]
    fn forms_with_zero_evaluations_are_rejected() {
        // x1 + x2 vanishes on half the cube; the doubled form cannot split
        // the middle layer evenly.
        let l = LinearForm::from_ints(&[1, 1], 0);
        match balance_double(&l) {
            Err(BalanceError::Unbalanced(layer)) => assert_eq!(layer.ones, 2),
            other => panic!("expected layer failure, got {:?}", other),
        }
    }

    #[test]
    fn oversized_inputs_are_rejected_before_enumeration() {
        let l = LinearForm::from_ints(&[1; 16], 0);
        assert!(matches!(
            balance_double(&l),
            Err(BalanceError::TooLargeToCertify { vars: 32 })
        ));
    }
}
