//! Merging two perfectly balanced linear forms into one form on a `k×k`
//! variable grid that simulates both: row-constant inputs reproduce the
//! first form, column-constant inputs the second, and every other input is
//! sign-neutralized under row and column permutations.
//!
//! The construction lays a weight grid whose row sums are the first form's
//! weights and whose column sums are the second's, then adds XOR-indexed
//! four-corner constraint terms `B_yab (x_ab - x_ab' - x_a'b + x_a'b')` with
//! `a' = a ⊕ y`, `b' = b ⊕ y`, ranging over nonzero `y` and cells orthogonal
//! to a canonical pivot coordinate of `y`. The term scales form a geometric
//! ladder: each dominates everything below it plus the grid, so on any input
//! violating a constraint the highest violated term alone decides the sign,
//! and composing with the XOR shift pairs such inputs into sign-opposite
//! twins.

use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::instance::permutations;
use crate::predicate::{check_perfectly_balanced, LinearForm, UnbalancedLayer};
use crate::rat::{rint, Rat};

/// Largest grid side the exhaustive verifier will sweep (`2^(k²)` inputs).
const MAX_VERIFY_SIDE: usize = 4;
/// Largest input arity accepted for construction (balance precheck is
/// exhaustive over `2^k` inputs).
const MAX_BUILD_SIDE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MergeError {
    #[error("arity {k} is not a power of two")]
    NotPowerOfTwo { k: usize },
    #[error("forms have different arities ({left} vs {right})")]
    ArityMismatch { left: usize, right: usize },
    #[error("arity {k} exceeds the construction cap {cap}")]
    InputTooLarge { k: usize, cap: usize },
    #[error("merged forms must have zero constant term")]
    ConstantNotSupported,
    #[error("input {side} is not perfectly balanced: {layer}")]
    NotBalanced { side: u8, layer: UnbalancedLayer },
    #[error("weight totals {left} and {right} have opposite signs or only one is zero")]
    IncompatibleTotals { left: Rat, right: Rat },
    #[error("verification sweep only supported up to side {cap}, got {k}")]
    VerifyCapExceeded { k: usize, cap: usize },
    #[error("merged form has {got} variables, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// One four-corner constraint term with its ladder scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadTerm {
    pub y: usize,
    pub a: usize,
    pub b: usize,
    pub bound: Rat,
}

/// The merged form together with the data that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeOutput {
    /// Form on `k²` variables; cell `(r, c)` is variable `r·k + c`.
    pub form: LinearForm,
    pub grid: Vec<Vec<Rat>>,
    pub terms: Vec<QuadTerm>,
    /// Positive factor applied to the second form's weights so the two
    /// weight totals agree.
    pub scale: Rat,
}

fn floor_plus_one(x: &Rat) -> Rat {
    Rat::from_big(num_rational::BigRational::from_integer(x.floor_int())) + Rat::one()
}

/// Builds the grid form simulating `l1` along rows and `l2` along columns.
///
/// When the two weight totals differ but share a sign, `l2` is rescaled by
/// the positive ratio (recorded in the output); opposite-sign or
/// single-sided-zero totals cannot be reconciled by a positive scale.
pub fn merge_dual(l1: &LinearForm, l2: &LinearForm) -> Result<MergeOutput, MergeError> {
    let k = l1.arity();
    if l2.arity() != k {
        return Err(MergeError::ArityMismatch {
            left: k,
            right: l2.arity(),
        });
    }
    if !k.is_power_of_two() {
        return Err(MergeError::NotPowerOfTwo { k });
    }
    if k > MAX_BUILD_SIDE {
        return Err(MergeError::InputTooLarge {
            k,
            cap: MAX_BUILD_SIDE,
        });
    }
    if !l1.constant.is_zero() || !l2.constant.is_zero() {
        return Err(MergeError::ConstantNotSupported);
    }
    check_perfectly_balanced(l1).map_err(|layer| MergeError::NotBalanced { side: 1, layer })?;
    check_perfectly_balanced(l2).map_err(|layer| MergeError::NotBalanced { side: 2, layer })?;

    let t1: Rat = l1.weights.iter().cloned().sum();
    let t2: Rat = l2.weights.iter().cloned().sum();
    let (w2, scale) = match (t1.signum(), t2.signum()) {
        (0, 0) => (l2.weights.clone(), Rat::one()),
        (s1, s2) if s1 == s2 => {
            let scale = &t1 / &t2;
            let w2: Vec<Rat> = l2.weights.iter().map(|w| &scale * w).collect();
            (w2, scale)
        }
        _ => {
            return Err(MergeError::IncompatibleTotals {
                left: t1,
                right: t2,
            })
        }
    };

    // Canonical grid: first row carries the column targets, the last column
    // absorbs the row targets, one corner reconciles the two.
    let mut grid = vec![vec![Rat::zero(); k]; k];
    let mut head_sum = Rat::zero();
    for j in 0..k - 1 {
        grid[0][j] = w2[j].clone();
        head_sum += &w2[j];
    }
    grid[0][k - 1] = &l1.weights[0] - &head_sum;
    for i in 1..k {
        grid[i][k - 1] = l1.weights[i].clone();
    }

    // Constraint keys: nonzero y, cells orthogonal to y's pivot coordinate
    // (the lowest set bit), ordered y-major then lexicographic in (a, b).
    let mut keys = Vec::new();
    for y in 1..k {
        let pivot = 1usize << y.trailing_zeros();
        for a in (0..k).filter(|a| a & pivot == 0) {
            for b in (0..k).filter(|b| b & pivot == 0) {
                keys.push((y, a, b));
            }
        }
    }

    // Ladder scales, assigned from the bottom of the ordering upward: each
    // must exceed half of (four times everything below plus the grid's
    // total magnitude), so 2B_t > 4·ΣB_below + max|grid form|.
    let max_grid: Rat = grid.iter().flatten().map(Rat::abs).sum();
    let mut bounds = vec![Rat::zero(); keys.len()];
    let mut below = Rat::zero();
    for t in (0..keys.len()).rev() {
        let need = &(&rint(4) * &below) + &max_grid;
        let bound = floor_plus_one(&(&need / &rint(2)));
        below += &bound;
        bounds[t] = bound;
    }

    let mut weights: Vec<Rat> = grid.iter().flatten().cloned().collect();
    let mut terms = Vec::with_capacity(keys.len());
    for (&(y, a, b), bound) in keys.iter().zip(bounds.iter()) {
        weights[a * k + b] += bound;
        weights[a * k + (b ^ y)] -= bound;
        weights[(a ^ y) * k + b] -= bound;
        weights[(a ^ y) * k + (b ^ y)] += bound;
        terms.push(QuadTerm {
            y,
            a,
            b,
            bound: bound.clone(),
        });
    }

    Ok(MergeOutput {
        form: LinearForm::new(weights, Rat::zero()),
        grid,
        terms,
        scale,
    })
}

/// Exhaustive verdict over all `2^(k²)` grid inputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub assignments: u64,
    /// Recorded scale reconciles the two weight totals.
    pub scale_consistent: bool,
    /// Row-constant inputs evaluate to the first form exactly.
    pub row_identity_ok: bool,
    /// Column-constant inputs evaluate to the scaled second form exactly.
    pub col_identity_ok: bool,
    /// Constraint terms all vanish exactly on row- or column-constant inputs.
    pub constraint_equivalence_ok: bool,
    /// Signs over column permutations cancel on every non-row-constant input.
    pub col_perm_average_ok: bool,
    /// Signs over row permutations cancel on every non-column-constant input.
    pub row_perm_average_ok: bool,
    /// The merged form passes the layer balance test.
    pub balanced: bool,
    pub zero_evaluations: u64,
    pub violating_inputs: u64,
}

impl MergeReport {
    pub fn passed(&self) -> bool {
        self.scale_consistent
            && self.row_identity_ok
            && self.col_identity_ok
            && self.constraint_equivalence_ok
            && self.col_perm_average_ok
            && self.row_perm_average_ok
    }
}

/// Permuted-weight tables for the sign sweeps, in integer form when the
/// scaled weights fit a machine word, otherwise exact rationals.
enum SignTables {
    Int {
        base: Vec<i64>,
        col: Vec<Vec<i64>>,
        row: Vec<Vec<i64>>,
    },
    Exact {
        base: Vec<Rat>,
        col: Vec<Vec<Rat>>,
        row: Vec<Vec<Rat>>,
    },
}

impl SignTables {
    fn build(weights: &[Rat], k: usize) -> SignTables {
        let perms = permutations(k);
        let permute_cols = |w: &[Rat], sigma: &[usize]| -> Vec<Rat> {
            let mut out = vec![Rat::zero(); w.len()];
            for i in 0..k {
                for j in 0..k {
                    out[i * k + sigma[j]] = w[i * k + j].clone();
                }
            }
            out
        };
        let permute_rows = |w: &[Rat], sigma: &[usize]| -> Vec<Rat> {
            let mut out = vec![Rat::zero(); w.len()];
            for i in 0..k {
                for j in 0..k {
                    out[sigma[i] * k + j] = w[i * k + j].clone();
                }
            }
            out
        };

        // Common denominator; fall back to rationals if the integerized
        // weights overflow i64.
        let lcm = weights
            .iter()
            .fold(num_bigint::BigInt::from(1), |acc, w| acc.lcm(w.denom()));
        let as_ints: Option<Vec<i64>> = weights
            .iter()
            .map(|w| (w.numer() * (&lcm / w.denom())).to_i64())
            .collect();
        match as_ints {
            Some(base) => {
                let to_int = |w: Vec<Rat>| -> Vec<i64> {
                    w.iter()
                        .map(|r| (r.numer() * (&lcm / r.denom())).to_i64().unwrap())
                        .collect()
                };
                SignTables::Int {
                    col: perms
                        .iter()
                        .map(|s| to_int(permute_cols(weights, s)))
                        .collect(),
                    row: perms
                        .iter()
                        .map(|s| to_int(permute_rows(weights, s)))
                        .collect(),
                    base,
                }
            }
            None => SignTables::Exact {
                base: weights.to_vec(),
                col: perms.iter().map(|s| permute_cols(weights, s)).collect(),
                row: perms.iter().map(|s| permute_rows(weights, s)).collect(),
            },
        }
    }

    fn value_is_zero(&self, mask: u64) -> bool {
        match self {
            SignTables::Int { base, .. } => dot_sign_int(base, mask).0 == 0,
            SignTables::Exact { base, .. } => dot_sign_rat(base, mask).0 == 0,
        }
    }

    /// Sum of sign values of the form over all column (or row) permutations
    /// of the input.
    fn perm_sign_sum(&self, mask: u64, rows: bool) -> i64 {
        match self {
            SignTables::Int { col, row, .. } => {
                let tables = if rows { row } else { col };
                tables.iter().map(|t| dot_sign_int(t, mask).1).sum()
            }
            SignTables::Exact { col, row, .. } => {
                let tables = if rows { row } else { col };
                tables.iter().map(|t| dot_sign_rat(t, mask).1).sum()
            }
        }
    }
}

fn dot_sign_int(weights: &[i64], mask: u64) -> (i64, i64) {
    let mut acc = 0i64;
    for (t, w) in weights.iter().enumerate() {
        if mask >> t & 1 == 1 {
            acc += w;
        } else {
            acc -= w;
        }
    }
    (acc, acc.signum())
}

fn dot_sign_rat(weights: &[Rat], mask: u64) -> (i8, i64) {
    let mut acc = Rat::zero();
    for (t, w) in weights.iter().enumerate() {
        if mask >> t & 1 == 1 {
            acc += w;
        } else {
            acc -= w;
        }
    }
    let s = acc.signum();
    (s, s as i64)
}

/// Sweeps every `±1` assignment of the `k×k` grid and checks the dual
/// simulation exhaustively.
pub fn verify_merge(
    out: &MergeOutput,
    l1: &LinearForm,
    l2: &LinearForm,
    exec: Exec,
) -> Result<MergeReport, MergeError> {
    let k = l1.arity();
    if l2.arity() != k {
        return Err(MergeError::ArityMismatch {
            left: k,
            right: l2.arity(),
        });
    }
    if k > MAX_VERIFY_SIDE {
        return Err(MergeError::VerifyCapExceeded {
            k,
            cap: MAX_VERIFY_SIDE,
        });
    }
    if out.form.arity() != k * k {
        return Err(MergeError::ShapeMismatch {
            expected: k * k,
            got: out.form.arity(),
        });
    }

    let t1: Rat = l1.weights.iter().cloned().sum();
    let t2: Rat = l2.weights.iter().cloned().sum();
    let scale_consistent = if t2.is_zero() {
        t1.is_zero() && out.scale == Rat::one()
    } else {
        &out.scale * &t2 == t1 && out.scale.is_positive()
    };

    // Row- and column-constant identities, checked by exact value.
    let full_row = (1u64 << k) - 1;
    let mut row_identity_ok = true;
    let mut col_identity_ok = true;
    for pattern in 0..1u64 << k {
        let mut row_mask = 0u64;
        let mut col_mask = 0u64;
        for i in 0..k {
            if pattern >> i & 1 == 1 {
                row_mask |= full_row << (i * k);
            }
            col_mask |= pattern << (i * k);
        }
        if out.form.eval_mask(row_mask as u32) != l1.eval_mask(pattern as u32) {
            row_identity_ok = false;
        }
        let scaled = &out.scale * &l2.eval_mask(pattern as u32);
        if out.form.eval_mask(col_mask as u32) != scaled {
            col_identity_ok = false;
        }
    }

    let tables = SignTables::build(&out.form.weights, k);
    let keys: Vec<(usize, usize, usize)> = out.terms.iter().map(|t| (t.y, t.a, t.b)).collect();

    #[derive(Clone)]
    struct Sweep {
        equivalence: bool,
        col_perm: bool,
        row_perm: bool,
        zero_evals: u64,
        violating: u64,
    }
    fn sweep_identity() -> Sweep {
        Sweep {
            equivalence: true,
            col_perm: true,
            row_perm: true,
            zero_evals: 0,
            violating: 0,
        }
    }

    let total = 1u64 << (k * k);
    let sweep = exec.map_reduce(
        0,
        total,
        sweep_identity,
        |mask| {
            let mut s = sweep_identity();
            let sign_at = |a: usize, b: usize| -> i64 {
                if mask >> (a * k + b) & 1 == 1 {
                    1
                } else {
                    -1
                }
            };
            let row_const = (0..k).all(|i| {
                let p = mask >> (i * k) & full_row;
                p == 0 || p == full_row
            });
            let first = mask & full_row;
            let col_const = (0..k).all(|i| mask >> (i * k) & full_row == first);
            let satisfied = keys.iter().all(|&(y, a, b)| {
                sign_at(a, b) - sign_at(a, b ^ y) - sign_at(a ^ y, b) + sign_at(a ^ y, b ^ y) == 0
            });
            if satisfied != (row_const || col_const) {
                s.equivalence = false;
            }
            if !(row_const || col_const) {
                s.violating = 1;
            }
            if tables.value_is_zero(mask) {
                s.zero_evals = 1;
            }
            if !row_const && tables.perm_sign_sum(mask, false) != 0 {
                s.col_perm = false;
            }
            if !col_const && tables.perm_sign_sum(mask, true) != 0 {
                s.row_perm = false;
            }
            s
        },
        |a, b| Sweep {
            equivalence: a.equivalence && b.equivalence,
            col_perm: a.col_perm && b.col_perm,
            row_perm: a.row_perm && b.row_perm,
            zero_evals: a.zero_evals + b.zero_evals,
            violating: a.violating + b.violating,
        },
    );

    let balanced = check_perfectly_balanced(&out.form).is_ok();

    Ok(MergeReport {
        assignments: total,
        scale_consistent,
        row_identity_ok,
        col_identity_ok,
        constraint_equivalence_ok: sweep.equivalence,
        col_perm_average_ok: sweep.col_perm,
        row_perm_average_ok: sweep.row_perm,
        balanced,
        zero_evaluations: sweep.zero_evals,
        violating_inputs: sweep.violating,
    })
}
