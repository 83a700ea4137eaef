//! Permutation gadget: integer constraints whose solution set is exactly
//! "the outputs are a permutation of the input vectors", plus the closed-form
//! moments of a three-stage chain of such gadgets.
//!
//! Variable layout per gadget, for `m` input vectors of dimension `n` and
//! bound `B`:
//!   * outputs `w_ik`   (`m*n` integers in `[-B, B]`),
//!   * indicators `p_ij` (`m^2` booleans; `p_ij = 1` means output `i` copies
//!     input `j`),
//!   * slacks `d⁺_ijk`, `d⁻_ijk` (`2*m^2*n` integers in `[-2B, 2B]`).
//!
//! The equality constraints are: indicator row sums and column sums are 1,
//! `d⁺ - d⁻ = 2(v_jk - w_ik)`, and `d⁺ + d⁻ = 4B·p_ij`. The slack ranges then
//! force `w_ik = v_jk` wherever `p_ij = 1`, so the satisfying assignments are
//! exactly the `m!` permutation copies — `verify_gadget` certifies this by
//! exhausting the whole box.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::construct::MomentSpec;
use crate::exec::Exec;
use crate::instance::permutations;
use crate::predicate::LinearForm;
use crate::rat::{rfrac, rint, Rat};

/// Hard cap on enumerated states for `verify_gadget`.
const MAX_STATES: u128 = 1 << 24;

/// A permutation gadget over fixed integer input vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gadget {
    pub vectors: Vec<Vec<i64>>,
    pub bound: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GadgetError {
    #[error("need at least one input vector")]
    Empty,
    #[error("vector {vector} has length {len}, expected {expected}")]
    DimensionMismatch {
        vector: usize,
        len: usize,
        expected: usize,
    },
    #[error("bound must be positive, got {bound}")]
    BoundNotPositive { bound: i64 },
    #[error("vector {vector} coordinate {coord} is {value}, outside [-{bound}, {bound}]")]
    EntryOutOfRange {
        vector: usize,
        coord: usize,
        value: i64,
        bound: i64,
    },
    #[error("verification needs {states} states, cap is {cap}")]
    CapExceeded { states: u128, cap: u128 },
    #[error("moment chain needs at least three vectors, got {m}")]
    NeedAtLeastThree { m: usize },
    #[error("moment table covers {given} coordinates, vectors have {expected}")]
    MomentArityMismatch { given: usize, expected: usize },
}

pub fn build_gadget(vectors: &[Vec<i64>], bound: i64) -> Result<Gadget, GadgetError> {
    if vectors.is_empty() {
        return Err(GadgetError::Empty);
    }
    if bound <= 0 {
        return Err(GadgetError::BoundNotPositive { bound });
    }
    let n = vectors[0].len();
    for (vi, v) in vectors.iter().enumerate() {
        if v.len() != n {
            return Err(GadgetError::DimensionMismatch {
                vector: vi,
                len: v.len(),
                expected: n,
            });
        }
        for (k, &value) in v.iter().enumerate() {
            if value.abs() > bound {
                return Err(GadgetError::EntryOutOfRange {
                    vector: vi,
                    coord: k,
                    value,
                    bound,
                });
            }
        }
    }
    Ok(Gadget {
        vectors: vectors.to_vec(),
        bound,
    })
}

impl Gadget {
    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    pub fn n(&self) -> usize {
        self.vectors[0].len()
    }

    /// Total number of gadget variables in the `[w, p, d⁺, d⁻]` layout.
    pub fn var_count(&self) -> usize {
        let (m, n) = (self.m(), self.n());
        m * n + m * m + 2 * m * m * n
    }

    pub fn w_index(&self, i: usize, k: usize) -> usize {
        i * self.n() + k
    }

    pub fn p_index(&self, i: usize, j: usize) -> usize {
        self.m() * self.n() + i * self.m() + j
    }

    pub fn dplus_index(&self, i: usize, j: usize, k: usize) -> usize {
        let (m, n) = (self.m(), self.n());
        m * n + m * m + (i * m + j) * n + k
    }

    pub fn dminus_index(&self, i: usize, j: usize, k: usize) -> usize {
        self.dplus_index(i, j, k) + self.m() * self.m() * self.n()
    }

    /// The equality constraints as linear forms over the full variable layout
    /// (a satisfying assignment zeroes every form).
    pub fn constraint_forms(&self) -> Vec<LinearForm> {
        let (m, n) = (self.m(), self.n());
        let total = self.var_count();
        let mut forms = Vec::new();
        let zeroes = || vec![Rat::zero(); total];

        // Indicator row and column sums equal one.
        for i in 0..m {
            let mut w = zeroes();
            for j in 0..m {
                w[self.p_index(i, j)] = Rat::one();
            }
            forms.push(LinearForm::new(w, Rat::int(-1)));
        }
        for j in 0..m {
            let mut w = zeroes();
            for i in 0..m {
                w[self.p_index(i, j)] = Rat::one();
            }
            forms.push(LinearForm::new(w, Rat::int(-1)));
        }

        // d⁺ - d⁻ + 2 w_ik = 2 v_jk  and  d⁺ + d⁻ - 4B p_ij = 0.
        for i in 0..m {
            for j in 0..m {
                for k in 0..n {
                    let mut w = zeroes();
                    w[self.dplus_index(i, j, k)] = Rat::one();
                    w[self.dminus_index(i, j, k)] = Rat::int(-1);
                    w[self.w_index(i, k)] = Rat::int(2);
                    forms.push(LinearForm::new(w, Rat::int(-2 * self.vectors[j][k])));

                    let mut w = zeroes();
                    w[self.dplus_index(i, j, k)] = Rat::one();
                    w[self.dminus_index(i, j, k)] = Rat::one();
                    w[self.p_index(i, j)] = Rat::int(-4 * self.bound);
                    forms.push(LinearForm::new(w, Rat::zero()));
                }
            }
        }
        forms
    }

    /// The full variable assignment realizing output permutation `sigma`
    /// (output `i` copies input `sigma[i]`).
    pub fn assignment_for(&self, sigma: &[usize]) -> Vec<i64> {
        let (m, n) = (self.m(), self.n());
        assert_eq!(sigma.len(), m);
        let mut x = vec![0i64; self.var_count()];
        for i in 0..m {
            for k in 0..n {
                x[self.w_index(i, k)] = self.vectors[sigma[i]][k];
            }
            x[self.p_index(i, sigma[i])] = 1;
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..n {
                    let p = i64::from(sigma[i] == j);
                    let delta = self.vectors[j][k] - x[self.w_index(i, k)];
                    x[self.dplus_index(i, j, k)] = 2 * self.bound * p + delta;
                    x[self.dminus_index(i, j, k)] = 2 * self.bound * p - delta;
                }
            }
        }
        x
    }
}

/// Outcome of exhausting a gadget's search space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetReport {
    pub states_checked: u128,
    pub survivor_count: usize,
    pub expected_count: usize,
    /// True iff the surviving `(outputs, indicators)` pairs are exactly the
    /// permutation copies of the inputs.
    pub matches: bool,
}

/// Enumerates every `(w, p)` box state, derives the unique slacks the equality
/// constraints allow, and keeps states where all slacks stay within
/// `[-2B, 2B]` and the indicator sums hold. The survivor set must equal
/// `{(v ∘ sigma, sigma) : sigma a permutation}` — always `m!` states, even
/// when input vectors repeat.
pub fn verify_gadget(g: &Gadget, exec: Exec) -> Result<GadgetReport, GadgetError> {
    let (m, n) = (g.m(), g.n());
    let radix = 2 * g.bound as u128 + 1;
    let w_states = radix
        .checked_pow((m * n) as u32)
        .filter(|_| m * n <= 40)
        .ok_or(GadgetError::CapExceeded {
            states: u128::MAX,
            cap: MAX_STATES,
        })?;
    let p_states = if m * m >= 64 {
        return Err(GadgetError::CapExceeded {
            states: u128::MAX,
            cap: MAX_STATES,
        });
    } else {
        1u128 << (m * m)
    };
    let states = w_states
        .checked_mul(p_states)
        .ok_or(GadgetError::CapExceeded {
            states: u128::MAX,
            cap: MAX_STATES,
        })?;
    if states > MAX_STATES {
        return Err(GadgetError::CapExceeded {
            states,
            cap: MAX_STATES,
        });
    }

    let decode_w = |mut idx: u64| -> Vec<i64> {
        let mut w = vec![0i64; m * n];
        for slot in w.iter_mut() {
            *slot = (idx % radix as u64) as i64 - g.bound;
            idx /= radix as u64;
        }
        w
    };

    let survivors: Vec<(Vec<i64>, u64)> = exec.map_reduce(
        0,
        w_states as u64,
        Vec::new,
        |w_idx| {
            let w = decode_w(w_idx);
            let mut found = Vec::new();
            'mask: for p_mask in 0..p_states as u64 {
                // Indicator row and column sums.
                for i in 0..m {
                    let row: u32 = (0..m).map(|j| (p_mask >> (i * m + j) & 1) as u32).sum();
                    let col: u32 = (0..m).map(|j| (p_mask >> (j * m + i) & 1) as u32).sum();
                    if row != 1 || col != 1 {
                        continue 'mask;
                    }
                }
                // The equality constraints pin the slacks; keep the state iff
                // every derived slack lies in range.
                for i in 0..m {
                    for j in 0..m {
                        let p = (p_mask >> (i * m + j) & 1) as i64;
                        for k in 0..n {
                            let delta = g.vectors[j][k] - w[i * n + k];
                            let dplus = 2 * g.bound * p + delta;
                            let dminus = 2 * g.bound * p - delta;
                            if dplus.abs() > 2 * g.bound || dminus.abs() > 2 * g.bound {
                                continue 'mask;
                            }
                        }
                    }
                }
                found.push((w.clone(), p_mask));
            }
            found
        },
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    );

    let survivor_set: BTreeSet<(Vec<i64>, u64)> = survivors.iter().cloned().collect();
    let expected_set: BTreeSet<(Vec<i64>, u64)> = permutations(m)
        .into_iter()
        .map(|sigma| {
            let mut w = Vec::with_capacity(m * n);
            let mut mask = 0u64;
            for (i, &s) in sigma.iter().enumerate() {
                w.extend_from_slice(&g.vectors[s]);
                mask |= 1 << (i * m + s);
            }
            (w, mask)
        })
        .collect();

    Ok(GadgetReport {
        states_checked: states,
        survivor_count: survivors.len(),
        expected_count: expected_set.len(),
        matches: survivor_set == expected_set,
    })
}

/// Uniform-choice statistics of a vector family: `mean[k]` is the average of
/// coordinate `k` over the vectors, `pair[k][l]` the average of the product of
/// coordinates `k` and `l`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorStats {
    pub mean: Vec<Rat>,
    pub pair: Vec<Vec<Rat>>,
}

impl VectorStats {
    pub fn from_vectors(vectors: &[Vec<Rat>]) -> VectorStats {
        assert!(!vectors.is_empty(), "no vectors");
        let m = vectors.len();
        let n = vectors[0].len();
        let inv_m = rfrac(1, m as i64);
        let mut mean = vec![Rat::zero(); n];
        let mut pair = vec![vec![Rat::zero(); n]; n];
        for v in vectors {
            assert_eq!(v.len(), n, "ragged vector family");
            for k in 0..n {
                mean[k] += &v[k];
                for l in 0..n {
                    pair[k][l] += &(&v[k] * &v[l]);
                }
            }
        }
        for k in 0..n {
            mean[k] *= &inv_m;
            for l in 0..n {
                pair[k][l] *= &inv_m;
            }
        }
        VectorStats { mean, pair }
    }
}

/// Closed-form moments for a chain of three permutation gadgets whose final
/// first-row output is forced to follow a target distribution.
///
/// Stage outputs are the intermediate vectors after one and two gadgets (both
/// marginally uniform over the family); the final stage is conditioned so its
/// first output row has the target moments `c_k`, `c_ij` while the remaining
/// rows absorb the complement. Only within-family pairs are tabulated here:
/// pairs that mix an indicator with an output depend on the concrete vector
/// entries, not just on the family statistics, so no closed form over
/// `(a, c)` exists for them and none is emitted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetMoments {
    pub m: usize,
    pub n: usize,
    /// E of any single indicator cell, in any of the three gadgets.
    pub indicator_mean: Rat,
    /// E of the product of one indicator cell with itself.
    pub indicator_same_cell: Rat,
    /// E of the product of two distinct cells sharing a row or a column.
    pub indicator_shared_line: Rat,
    /// E of the product of two cells in different rows and columns.
    pub indicator_free: Rat,
    /// Intermediate-stage outputs: mean of coordinate `k` of any output row.
    pub stage_mean: Vec<Rat>,
    /// Pair of coordinates within one output row.
    pub stage_same_vector: Vec<Vec<Rat>>,
    /// Pair of coordinates across two distinct output rows.
    pub stage_cross_vector: Vec<Vec<Rat>>,
    /// Final stage, first row: target mean and pair tables.
    pub final_first_mean: Vec<Rat>,
    pub final_first_pair: Vec<Vec<Rat>>,
    /// Final stage, any later row: mean of coordinate `k`.
    pub final_rest_mean: Vec<Rat>,
    /// `[i][j]`: coordinate `i` of the first row times coordinate `j` of a
    /// later row (not symmetric in `i, j`).
    pub final_first_rest_pair: Vec<Vec<Rat>>,
    /// Pair of coordinates within one later row.
    pub final_same_rest_pair: Vec<Vec<Rat>>,
    /// Pair of coordinates across two distinct later rows.
    pub final_cross_rest_pair: Vec<Vec<Rat>>,
}

/// Evaluates the closed-form moment tables for an `m`-vector family with
/// statistics `stats`, targeting `base` moments on the final first row.
pub fn gadget_moments(
    m: usize,
    base: &MomentSpec,
    stats: &VectorStats,
) -> Result<GadgetMoments, GadgetError> {
    if m < 3 {
        return Err(GadgetError::NeedAtLeastThree { m });
    }
    let n = stats.mean.len();
    if base.len() != n {
        return Err(GadgetError::MomentArityMismatch {
            given: base.len(),
            expected: n,
        });
    }
    let mi = m as i64;
    let rm = rint(mi);
    let inv_m1 = rfrac(1, mi - 1);
    let inv_m12 = rfrac(1, (mi - 1) * (mi - 2));

    let a = &stats.mean;
    let ap = &stats.pair;
    let c: Vec<Rat> = base.mean.clone();
    let cp = |i: usize, j: usize| -> Rat {
        base.pair(i, j)
            .expect("target moment table must cover every pair")
            .clone()
    };

    let stage_cross_vector = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| &(&(&rm * &a[k]) * &a[l]) - &ap[k][l])
                .map(|x| &x * &inv_m1)
                .collect()
        })
        .collect();
    let final_rest_mean: Vec<Rat> = (0..n)
        .map(|k| &(&(&rm * &a[k]) - &c[k]) * &inv_m1)
        .collect();
    let final_first_rest_pair = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| &(&(&(&rm * &a[j]) * &c[i]) - &cp(i, j)) * &inv_m1)
                .collect()
        })
        .collect();
    let final_same_rest_pair = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| &(&(&rm * &ap[i][j]) - &cp(i, j)) * &inv_m1)
                .collect()
        })
        .collect();
    let final_cross_rest_pair = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mm = &rm * &rm;
                    let lead = &(&mm * &a[i]) * &a[j];
                    let t1 = &(&rm * &a[j]) * &c[i];
                    let t2 = &(&rm * &a[i]) * &c[j];
                    let t3 = &rm * &ap[i][j];
                    let t4 = &rint(2) * &cp(i, j);
                    &(&(&(&(&lead - &t1) - &t2) - &t3) + &t4) * &inv_m12
                })
                .collect()
        })
        .collect();

    Ok(GadgetMoments {
        m,
        n,
        indicator_mean: rfrac(1, mi),
        indicator_same_cell: rfrac(1, mi),
        indicator_shared_line: Rat::zero(),
        indicator_free: rfrac(1, mi * (mi - 1)),
        stage_mean: a.clone(),
        stage_same_vector: ap.clone(),
        stage_cross_vector,
        final_first_mean: c,
        final_first_pair: (0..n).map(|i| (0..n).map(|j| cp(i, j)).collect()).collect(),
        final_rest_mean,
        final_first_rest_pair,
        final_same_rest_pair,
        final_cross_rest_pair,
    })
}

impl GadgetMoments {
    /// Flattens the final stage's `m*n` output variables (row-major, first
    /// row first) into a single moment table.
    pub fn output_moment_spec(&self) -> MomentSpec {
        let (m, n) = (self.m, self.n);
        let mean: Vec<Rat> = (0..m * n)
            .map(|v| {
                let (r, k) = (v / n, v % n);
                if r == 0 {
                    self.final_first_mean[k].clone()
                } else {
                    self.final_rest_mean[k].clone()
                }
            })
            .collect();
        let square: Vec<Rat> = (0..m * n)
            .map(|v| {
                let (r, k) = (v / n, v % n);
                if r == 0 {
                    self.final_first_pair[k][k].clone()
                } else {
                    self.final_same_rest_pair[k][k].clone()
                }
            })
            .collect();
        let mut cross = std::collections::BTreeMap::new();
        for u in 0..m * n {
            for v in u + 1..m * n {
                let (r, i) = (u / n, u % n);
                let (s, j) = (v / n, v % n);
                let value = if r == 0 && s == 0 {
                    self.final_first_pair[i][j].clone()
                } else if r == 0 {
                    self.final_first_rest_pair[i][j].clone()
                } else if r == s {
                    self.final_same_rest_pair[i][j].clone()
                } else {
                    self.final_cross_rest_pair[i][j].clone()
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
