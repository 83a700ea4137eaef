//! The fixed four-variable core: four cyclically symmetric linear forms, a
//! 22-vector solution set, and four exactly moment-matched distributions,
//! together with the closed-form parameter solver that produced them.

use serde::{Deserialize, Serialize};

use super::MomentSpec;
use crate::instance::permutations;
use crate::predicate::LinearForm;
use crate::rat::{rfrac, rint, Rat};

/// The core data: forms `l_a`, solution vectors `V`, shared moments, and one
/// distribution per form. `dists[a][v]` is the weight distribution `D_{a+1}`
/// places on `vectors[v]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Core {
    pub forms: Vec<LinearForm>,
    pub vectors: Vec<Vec<Rat>>,
    pub moments: MomentSpec,
    pub dists: Vec<Vec<Rat>>,
}

/// Which moment a [`CoreDefect::MomentMismatch`] refers to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentId {
    Mean(usize),
    Square(usize),
    Cross(usize, usize),
}

/// A single verification failure, naming the offending vector or moment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoreDefect {
    /// A form evaluates to exactly zero on a solution vector.
    ZeroEvaluation { form: usize, vector: usize },
    /// A solution vector does not make exactly half the forms positive.
    PositiveCount { vector: usize, positive: usize },
    /// A distribution puts weight on a vector its form does not accept.
    SupportViolation { dist: usize, vector: usize },
    /// A distribution weight is negative.
    NegativeWeight { dist: usize, vector: usize },
    /// A distribution's weights do not sum to one.
    WeightSum { dist: usize, total: Rat },
    /// A distribution moment differs from the shared moment table.
    MomentMismatch {
        dist: usize,
        moment: MomentId,
        got: Rat,
        want: Rat,
    },
}

/// All defects found by [`verify_core`]; empty means the core checks out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreReport {
    pub defects: Vec<CoreDefect>,
}

impl CoreReport {
    pub fn passed(&self) -> bool {
        self.defects.is_empty()
    }
}

fn side_coefficient() -> Rat {
    // 1.6 / 299 with both factors exact.
    -rfrac(8, 5 * 299)
}

/// Distinct permutations of `pattern`, in ascending lexicographic order.
fn orbit(pattern: [i64; 4]) -> Vec<Vec<Rat>> {
    let mut seen = std::collections::BTreeSet::new();
    for perm in permutations(4) {
        let mut v = [0i64; 4];
        for (slot, &src) in perm.iter().enumerate() {
            v[slot] = pattern[src];
        }
        seen.insert(v);
    }
    seen.into_iter()
        .map(|v| v.iter().map(|&x| rint(x)).collect())
        .collect()
}

/// The published core. Form `l_a` (1-based `a`) reads `x_a + 3/2 -
/// (8/1495)(x_{a+1} + x_{a+2})` with indices cyclic in `[1,4]`; the solution
/// set collects all distinct permutations of `(299,0,0,0)`, `(-1,-1,-7,-7)`,
/// and `(64,-1,-2,-2)`; `D_1` is supported where `l_1 > 0` and the other
/// three distributions are its cyclic rotations.
pub fn core_instance() -> Core {
    let side = side_coefficient();
    let mut forms = Vec::with_capacity(4);
    for a in 0..4usize {
        let mut weights = vec![Rat::zero(); 4];
        weights[a] = Rat::one();
        weights[(a + 1) % 4] = side.clone();
        weights[(a + 2) % 4] = side.clone();
        forms.push(LinearForm::new(weights, rfrac(3, 2)));
    }

    let mut vectors = orbit([299, 0, 0, 0]);
    vectors.extend(orbit([-1, -1, -7, -7]));
    vectors.extend(orbit([64, -1, -2, -2]));

    let d1_weight = |v: &[Rat]| -> Rat {
        let spike = v.iter().filter(|x| **x == rint(299)).count() == 1;
        if spike {
            return if v[0] == rint(299) {
                rfrac(15, 4500)
            } else {
                Rat::zero()
            };
        }
        if v[0] != rint(-1) {
            return Rat::zero();
        }
        if v.iter().any(|x| *x == rint(64)) {
            rfrac(299, 4500)
        } else {
            rfrac(1196, 4500)
        }
    };

    // D_{a+1} assigns to w the weight D_1 assigns to the rotation of w that
    // undoes the cyclic shift sending coordinate 1 to coordinate a+1.
    let mut dists = Vec::with_capacity(4);
    for a in 0..4usize {
        let weights = vectors
            .iter()
            .map(|v| {
                let mut back = vec![Rat::zero(); 4];
                for i in 0..4 {
                    back[i] = v[(i + a) % 4].clone();
                }
                d1_weight(&back)
            })
            .collect();
        dists.push(weights);
    }

    let mut cross = std::collections::BTreeMap::new();
    for i in 0..4 {
        for j in i + 1..4 {
            cross.insert((i, j), Rat::zero());
        }
    }
    Core {
        forms,
        vectors,
        moments: MomentSpec {
            mean: vec![Rat::zero(); 4],
            square: vec![rint(299); 4],
            cross,
        },
        dists,
    }
}

/// Checks the three core conditions exactly: every solution vector makes
/// exactly two of the four forms strictly positive (and none zero), each
/// distribution is supported where its form is positive, and each
/// distribution reproduces the shared moment table.
pub fn verify_core(core: &Core) -> CoreReport {
    let mut defects = Vec::new();

    for (vi, v) in core.vectors.iter().enumerate() {
        let mut positive = 0usize;
        for (fi, form) in core.forms.iter().enumerate() {
            let value = form.eval(v);
            if value.is_zero() {
                defects.push(CoreDefect::ZeroEvaluation {
                    form: fi,
                    vector: vi,
                });
            } else if value.is_positive() {
                positive += 1;
            }
        }
        if positive * 2 != core.forms.len() {
            defects.push(CoreDefect::PositiveCount {
                vector: vi,
                positive,
            });
        }
    }

    for (di, weights) in core.dists.iter().enumerate() {
        let mut total = Rat::zero();
        for (vi, w) in weights.iter().enumerate() {
            if w.is_negative() {
                defects.push(CoreDefect::NegativeWeight {
                    dist: di,
                    vector: vi,
                });
            }
            if !w.is_zero() && !core.forms[di].eval(&core.vectors[vi]).is_positive() {
                defects.push(CoreDefect::SupportViolation {
                    dist: di,
                    vector: vi,
                });
            }
            total += w;
        }
        if total != Rat::one() {
            defects.push(CoreDefect::WeightSum { dist: di, total });
        }

        for i in 0..4usize {
            let mut mean = Rat::zero();
            let mut square = Rat::zero();
            for (vi, w) in weights.iter().enumerate() {
                mean += w * &core.vectors[vi][i];
                square += &(w * &core.vectors[vi][i]) * &core.vectors[vi][i];
            }
            if mean != core.moments.mean[i] {
                defects.push(CoreDefect::MomentMismatch {
                    dist: di,
                    moment: MomentId::Mean(i),
                    got: mean,
                    want: core.moments.mean[i].clone(),
                });
            }
            if square != core.moments.square[i] {
                defects.push(CoreDefect::MomentMismatch {
                    dist: di,
                    moment: MomentId::Square(i),
                    got: square,
                    want: core.moments.square[i].clone(),
                });
            }
            for j in i + 1..4usize {
                let mut cross = Rat::zero();
                for (vi, w) in weights.iter().enumerate() {
                    cross += &(w * &core.vectors[vi][i]) * &core.vectors[vi][j];
                }
                let want = core.moments.cross[&(i, j)].clone();
                if cross != want {
                    defects.push(CoreDefect::MomentMismatch {
                        dist: di,
                        moment: MomentId::Cross(i, j),
                        got: cross,
                        want,
                    });
                }
            }
        }
    }

    CoreReport { defects }
}

/// Solution of the core parameter system for given `(a, c, b)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreParameters {
    pub a: Rat,
    pub b: Rat,
    pub c: Rat,
    pub d: Rat,
    pub e: Rat,
    pub p1: Rat,
    pub p2: Rat,
    pub p3: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoreSolveError {
    /// A denominator in the closed-form chain vanishes; the system has no
    /// solution of the assumed shape.
    #[error("no solution: {stage} is degenerate for these parameters")]
    NoSolution { stage: &'static str },
}

impl CoreParameters {
    /// Residuals of the six moment equations; all must be zero.
    pub fn equation_residuals(&self) -> Vec<Rat> {
        let (a, b, c, d, e) = (&self.a, &self.b, &self.c, &self.d, &self.e);
        let (p1, p2, p3) = (&self.p1, &self.p2, &self.p3);
        let three = rint(3);
        let mean_x1 = -(&three * a) * (p1 + p2) + e * p3;
        let mean_x2 = -((b + b + a) * p1) + (d - (c + c)) * p2;
        let cross_near = a * (b + b + a) * p1 - a * (d - (c + c)) * p2;
        let cross_far = (b * b + (a + a) * b) * p1 + (c * c - (c + c) * d) * p2;
        let var_gap = {
            let lhs = &three * (a * a) * (p1 + p2) + (e * e) * p3;
            let rhs = (b * b + b * b + a * a) * p1 + (c * c + c * c + d * d) * p2;
            lhs - rhs
        };
        let mass = &three * (p1 + p2) + p3 - Rat::one();
        vec![mean_x1, mean_x2, cross_near, cross_far, var_gap, mass]
    }
}

/// Solves the parametric core family exactly. The consistency equation
/// `(2b+a)/(d-2c) = b(b+2a)/(c(2d-c))` determines `d`; back-substitution
/// then yields the spike height `e` and the probabilities `p1, p2, p3`.
pub fn solve_core_parameters(a: i64, c: i64, b: i64) -> Result<CoreParameters, CoreSolveError> {
    let (a, b, c) = (rint(a), rint(b), rint(c));
    let two_b_plus_a = &b + &b + &a;
    let b_weight = &b * (&b + &a + &a);

    let den = (&c + &c) * &two_b_plus_a - &b_weight;
    if den.is_zero() {
        return Err(CoreSolveError::NoSolution { stage: "d" });
    }
    let d = &c * (&c * &two_b_plus_a - (&b_weight + &b_weight)) / den;

    if two_b_plus_a.is_zero() {
        return Err(CoreSolveError::NoSolution { stage: "p1/p2" });
    }
    // rho = p1/p2
    let rho = (&d - (&c + &c)) / &two_b_plus_a;
    let rho1 = &rho + Rat::one();

    let e_den = rint(3) * &a * &rho1;
    if e_den.is_zero() {
        return Err(CoreSolveError::NoSolution { stage: "e" });
    }
    let e_num = (&b * &b + &b * &b + &a * &a) * &rho + (&c * &c + &c * &c + &d * &d)
        - rint(3) * (&a * &a) * &rho1;
    let e = e_num / &e_den;

    let p2_den = rint(3) * &rho1 * (&e + &a);
    if p2_den.is_zero() || e.is_zero() {
        return Err(CoreSolveError::NoSolution { stage: "p2" });
    }
    let p2 = &e / p2_den;
    let p1 = &rho * &p2;
    let p3 = e_den * &p2 / &e;

    Ok(CoreParameters {
        a,
        b,
        c,
        d,
        e,
        p1,
        p2,
        p3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_core_counts_and_moments() {
        let core = core_instance();
        assert_eq!(core.vectors.len(), 22);
        assert_eq!(core.forms.len(), 4);
        assert_eq!(core.moments.square, vec![rint(299); 4]);
        for weights in &core.dists {
            let total: Rat = weights.iter().cloned().sum();
            assert_eq!(total, Rat::one());
        }
        // D_1 splits as 15/4500 + 3*1196/4500 + 3*299/4500.
        let mut sorted: Vec<Rat> = core.dists[0]
            .iter()
            .filter(|w| !w.is_zero())
            .cloned()
            .collect();
        sorted.sort();
        assert_eq!(
            sorted,
            vec![
                rfrac(15, 4500),
                rfrac(299, 4500),
                rfrac(299, 4500),
                rfrac(299, 4500),
                rfrac(1196, 4500),
                rfrac(1196, 4500),
                rfrac(1196, 4500),
            ]
        );
    }

    #[test]
    fn published_core_verifies() {
        let report = verify_core(&core_instance());
        assert!(report.passed(), "unexpected defects: {:?}", report.defects);
    }

    #[test]
    fn spike_vector_splits_forms_two_and_two() {
        let core = core_instance();
        let spike: Vec<Rat> = [299, 0, 0, 0].iter().map(|&x| rint(x)).collect();
        let signs: Vec<i8> = core
            .forms
            .iter()
            .map(|f| f.eval(&spike).signum())
            .collect();
        assert_eq!(signs, vec![1, 1, -1, -1]);
    }

    #[test]
    fn swapped_probability_is_reported_as_moment_failure() {
        let mut core = core_instance();
        let hot: Vec<usize> = core.dists[0]
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, _)| i)
            .collect();
        let (lo, hi) = (hot[0], hot[hot.len() - 1]);
        core.dists[0].swap(lo, hi);
        let report = verify_core(&core);
        assert!(report
            .defects
            .iter()
            .any(|d| matches!(d, CoreDefect::MomentMismatch { dist: 0, .. })));
    }

    #[test]
    fn zeroing_a_weight_breaks_the_weight_sum() {
        let mut core = core_instance();
        let hot = core.dists[2].iter().position(|w| !w.is_zero()).unwrap();
        core.dists[2][hot] = Rat::zero();
        let report = verify_core(&core);
        assert!(report
            .defects
            .iter()
            .any(|d| matches!(d, CoreDefect::WeightSum { dist: 2, .. })));
    }

    #[test]
    fn parameter_solver_reproduces_published_values() {
        let p = solve_core_parameters(1, 2, 7).unwrap();
        assert_eq!(p.d, rint(64));
        assert_eq!(p.e, rint(299));
        assert_eq!(p.p2, rfrac(299, 4500));
        assert_eq!(p.p1, &rint(4) * &p.p2);
        assert_eq!(p.p3, rfrac(15, 4500));
    }

    #[test]
    fn solved_parameters_satisfy_all_six_equations() {
        for (a, c, b) in [(1, 2, 7), (1, 2, 8), (2, 3, 11), (1, 3, 9)] {
            if let Ok(p) = solve_core_parameters(a, c, b) {
                for (i, r) in p.equation_residuals().iter().enumerate() {
                    assert!(
                        r.is_zero(),
                        "equation {} residual {} for ({},{},{})",
                        i,
                        r,
                        a,
                        c,
                        b
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_denominator_is_no_solution() {
        // 2c(2b+a) = b(b+2a) at (a,c,b) = (0,1,4): both sides are 16.
        let err = solve_core_parameters(0, 1, 4).unwrap_err();
        assert!(matches!(err, CoreSolveError::NoSolution { stage: "d" }));
    }

    #[test]
    fn distributions_are_cyclic_rotations() {
        let core = core_instance();
        // D_2's support must sit where l_2 > 0 and mirror D_1's weights.
        let mut d1: Vec<Rat> = core.dists[0].clone();
        let mut d2: Vec<Rat> = core.dists[1].clone();
        d1.sort();
        d2.sort();
        assert_eq!(d1, d2);
    }
}
