//! Perfect integrality gap instances and their end-to-end verification,
//! including the vanishing-measure criterion for small arities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::matrix::{psd_check, PsdResult};
use crate::polytope::{bias_projection, BiasProfile, PolytopeError, PolytopePoint};
use crate::predicate::{fourier_transform, Constraint, ConstraintError, Predicate, PredicateError};
use crate::rat::Rat;

/// Arity cap for the vanishing check; each level sums
/// `C(k,t) * t! * 2^t` terms per constraint.
pub const MAX_VANISH_ARITY: u8 = 6;

/// A distribution over assignments to a constraint's sorted variable set.
/// `support[r].0[t]` is the value of the `t`-th smallest variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distribution {
    pub support: Vec<(Vec<i8>, Rat)>,
}

impl Distribution {
    pub fn uniform(points: Vec<Vec<i8>>) -> Self {
        let w = Rat::one() / Rat::int(points.len() as i64);
        Distribution {
            support: points.into_iter().map(|p| (p, w.clone())).collect(),
        }
    }
}

/// A constraint system with claimed witness data: shared biases and one
/// matching distribution per constraint. Constraints form a multi-set;
/// duplicates contribute weight multiply.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapInstance {
    pub n: u32,
    pub preds: Vec<Predicate>,
    pub constraints: Vec<Constraint>,
    pub bias: BiasProfile,
    pub dists: Vec<Distribution>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("constraint {0} references predicate {1}, but only {2} are defined")]
    PredOutOfRange(usize, usize, usize),
    #[error("bias profile covers {got} variables, instance declares {want}")]
    BiasSize { got: u32, want: u32 },
    #[error("expected one distribution per constraint: {constraints} constraints, {dists} distributions")]
    DistCount { constraints: usize, dists: usize },
    #[error("constraint {0}: {1}")]
    Constraint(usize, ConstraintError),
    #[error("distribution {0} is empty")]
    EmptySupport(usize),
    #[error("distribution {con}, point {point}: assignment has {got} values, constraint has {want} variables")]
    SupportArity { con: usize, point: usize, got: usize, want: usize },
    #[error("distribution {con}, point {point}: values must be ±1")]
    SupportValue { con: usize, point: usize },
    #[error("distribution {con}: negative probability {0}", .prob)]
    NegativeProb { con: usize, prob: Rat },
    #[error("distribution {con}: probabilities sum to {total}, not 1")]
    ProbSum { con: usize, total: Rat },
    #[error("constraints must share one arity, found {0} and {1}")]
    MixedArity(usize, usize),
    #[error("vanishing is defined for a single predicate; constraints reference {0} and {1}")]
    MixedPredicate(usize, usize),
    #[error("arity {0} exceeds the vanishing-check cap of {MAX_VANISH_ARITY}")]
    VanishArity(usize),
    #[error("enumeration requires n <= 16, instance has {0}")]
    TooManyVars(u32),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

impl GapInstance {
    pub fn pred_of(&self, c: &Constraint) -> &Predicate {
        &self.preds[c.pred]
    }

    /// Structural validation: well-formed constraints, one nonempty
    /// distribution per constraint with nonnegative probabilities that sum
    /// to exactly 1, and a bias profile of the right size.
    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.bias.n() != self.n {
            return Err(InstanceError::BiasSize {
                got: self.bias.n(),
                want: self.n,
            });
        }
        for p in &self.preds {
            p.validate()?;
        }
        if self.dists.len() != self.constraints.len() {
            return Err(InstanceError::DistCount {
                constraints: self.constraints.len(),
                dists: self.dists.len(),
            });
        }
        for (a, c) in self.constraints.iter().enumerate() {
            if c.pred >= self.preds.len() {
                return Err(InstanceError::PredOutOfRange(a, c.pred, self.preds.len()));
            }
            c.validate(self.pred_of(c), self.n)
                .map_err(|e| InstanceError::Constraint(a, e))?;
            let d = &self.dists[a];
            if d.support.is_empty() {
                return Err(InstanceError::EmptySupport(a));
            }
            let mut total = Rat::zero();
            for (r, (x, w)) in d.support.iter().enumerate() {
                if x.len() != c.arity() {
                    return Err(InstanceError::SupportArity {
                        con: a,
                        point: r,
                        got: x.len(),
                        want: c.arity(),
                    });
                }
                if x.iter().any(|&v| v != 1 && v != -1) {
                    return Err(InstanceError::SupportValue { con: a, point: r });
                }
                if w.is_negative() {
                    return Err(InstanceError::NegativeProb {
                        con: a,
                        prob: w.clone(),
                    });
                }
                total += w;
            }
            if total != Rat::one() {
                return Err(InstanceError::ProbSum { con: a, total });
            }
        }
        Ok(())
    }
}

/// A distribution moment that disagrees with the shared bias profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentMismatch {
    pub constraint: usize,
    /// One global variable (first moment) or two (pair moment).
    pub vars: Vec<u32>,
    pub got: Rat,
    pub want: Rat,
}

/// A support point that its constraint rejects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportViolation {
    pub constraint: usize,
    pub point: Vec<i8>,
}

/// A nonempty global subset whose summed Fourier weight is nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetResidual {
    pub subset: Vec<u32>,
    pub total: Rat,
}

/// Outcome of the four independent verification clauses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    /// First moment mismatch found, if any (clause: distributions match B).
    pub moment_failure: Option<MomentMismatch>,
    /// First unsatisfied support point, if any.
    pub support_failure: Option<SupportViolation>,
    /// Witness vector with negative quadratic form, if the bordered moment
    /// matrix is not PSD.
    pub psd_failure: Option<Vec<Rat>>,
    /// First nonempty subset with nonzero summed coefficient, if any.
    pub constant_failure: Option<SubsetResidual>,
    /// The constant `c` with `sum_a f_a = c * m`, recovered from the empty
    /// subset; present iff the constant-sum clause passes.
    pub constant: Option<Rat>,
}

impl GapReport {
    pub fn passed(&self) -> bool {
        self.moment_failure.is_none()
            && self.support_failure.is_none()
            && self.psd_failure.is_none()
            && self.constant_failure.is_none()
    }
}

/// Signed sum of mapped local Fourier coefficients per global subset:
/// the coefficient of `prod_{i in T} x_i` in `sum_a f_a`, exactly.
fn global_coefficient_sums(inst: &GapInstance) -> Result<BTreeMap<Vec<u32>, Rat>, InstanceError> {
    let tables: Vec<_> = inst
        .preds
        .iter()
        .map(fourier_transform)
        .collect::<Result<_, _>>()?;
    let mut sums: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
    for c in &inst.constraints {
        let table = &tables[c.pred];
        let k = c.arity();
        for s in 0u32..1 << k {
            let raw = table.numerator(s);
            if raw == 0 {
                continue;
            }
            let mut coef = table.coef(s);
            let mut subset = Vec::with_capacity(s.count_ones() as usize);
            for slot in 0..k {
                if s >> slot & 1 == 1 {
                    subset.push(c.phi[slot]);
                    if c.signs[slot] == -1 {
                        coef = -coef;
                    }
                }
            }
            subset.sort_unstable();
            let entry = sums.entry(subset).or_insert_with(Rat::zero);
            *entry += &coef;
        }
    }
    sums.retain(|_, v| !v.is_zero());
    Ok(sums)
}

/// Runs the four verification clauses and reports each outcome with a
/// counterexample on failure. Structural defects surface as errors first.
pub fn verify_perfect_gap(inst: &GapInstance) -> Result<GapReport, InstanceError> {
    inst.validate()?;
    let mut report = GapReport {
        moment_failure: None,
        support_failure: None,
        psd_failure: None,
        constant_failure: None,
        constant: None,
    };

    // Clause: every distribution reproduces the shared biases exactly.
    'moments: for (a, c) in inst.constraints.iter().enumerate() {
        let vars = c.sorted_vars();
        let local = BiasProfile::from_distribution(vars.len() as u32, &inst.dists[a].support);
        let want = bias_projection(&inst.bias, &vars)?;
        for (t, &v) in vars.iter().enumerate() {
            let got = local.single(t as u32 + 1);
            if *got != *want.single(t + 1) {
                report.moment_failure = Some(MomentMismatch {
                    constraint: a,
                    vars: vec![v],
                    got: got.clone(),
                    want: want.single(t + 1).clone(),
                });
                break 'moments;
            }
        }
        for s in 0..vars.len() {
            for t in s + 1..vars.len() {
                let got = local.pair(s as u32 + 1, t as u32 + 1);
                if *got != *want.pair(s + 1, t + 1) {
                    report.moment_failure = Some(MomentMismatch {
                        constraint: a,
                        vars: vec![vars[s], vars[t]],
                        got: got.clone(),
                        want: want.pair(s + 1, t + 1).clone(),
                    });
                    break 'moments;
                }
            }
        }
    }

    // Clause: supports contain only satisfying assignments.
    'support: for (a, c) in inst.constraints.iter().enumerate() {
        let pred = inst.pred_of(c);
        for (x, w) in &inst.dists[a].support {
            if w.is_zero() {
                continue;
            }
            let value = c
                .eval_on_sorted(pred, x)
                .map_err(|z| InstanceError::Predicate(PredicateError::ZeroOnCube(z)))?;
            if value != 1 {
                report.support_failure = Some(SupportViolation {
                    constraint: a,
                    point: x.clone(),
                });
                break 'support;
            }
        }
    }

    // Clause: the bordered bias matrix is positive semidefinite.
    inst.bias.validate()?;
    if let PsdResult::NotPsd { witness, .. } = psd_check(&inst.bias.bordered_matrix()) {
        report.psd_failure = Some(witness);
    }

    // Clause: sum of the constraints is a constant function, checked through
    // the coefficient of every nonempty monomial.
    let sums = global_coefficient_sums(inst)?;
    let mut constant = Rat::zero();
    for (subset, total) in sums {
        if subset.is_empty() {
            constant = total;
        } else {
            report.constant_failure = Some(SubsetResidual {
                subset,
                total,
            });
            break;
        }
    }
    if report.constant_failure.is_none() {
        report.constant = Some(constant / Rat::int(inst.constraints.len() as i64));
    }
    Ok(report)
}

/// Brute-force cross-check of the constant-sum clause for small `n`:
/// evaluates `sum_a f_a` on every assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstantSumOutcome {
    Constant(Rat),
    NonConstant {
        assignment_a: Vec<i8>,
        value_a: i64,
        assignment_b: Vec<i8>,
        value_b: i64,
    },
}

pub fn enumerate_constant_sum(inst: &GapInstance) -> Result<ConstantSumOutcome, InstanceError> {
    inst.validate()?;
    if inst.n > 16 {
        return Err(InstanceError::TooManyVars(inst.n));
    }
    let mut first: Option<(Vec<i8>, i64)> = None;
    for mask in 0u32..1 << inst.n {
        let assignment: Vec<i8> = (0..inst.n)
            .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        let mut total = 0i64;
        for c in &inst.constraints {
            let vars = c.sorted_vars();
            let values: Vec<i8> = vars.iter().map(|&v| assignment[(v - 1) as usize]).collect();
            let value = c
                .eval_on_sorted(inst.pred_of(c), &values)
                .map_err(|z| InstanceError::Predicate(PredicateError::ZeroOnCube(z)))?;
            total += i64::from(value);
        }
        match &first {
            None => first = Some((assignment, total)),
            Some((x0, v0)) => {
                if total != *v0 {
                    return Ok(ConstantSumOutcome::NonConstant {
                        assignment_a: x0.clone(),
                        value_a: *v0,
                        assignment_b: assignment,
                        value_b: total,
                    });
                }
            }
        }
    }
    let (_, v) = first.expect("at least one assignment");
    Ok(ConstantSumOutcome::Constant(Rat::frac(
        v,
        inst.constraints.len() as i64,
    )))
}

/// An atom of the expanded signed measure with nonzero total weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishAtomFailure {
    /// Projected point coordinates: `t` singles then the lex pair block.
    pub point: Vec<Rat>,
    /// Unnormalized signed weight of the atom.
    pub residual: Rat,
}

/// Vanishing verdict for one level `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishLevel {
    pub t: u8,
    pub vanished: bool,
    pub failure: Option<VanishAtomFailure>,
    /// Verdict under the alternate composition order (signs permuted along
    /// with the coordinates); populated only when the primary reading fails.
    pub alternate_vanished: Option<bool>,
}

/// Levels `1..=k` in order.
pub type VanishReport = Vec<VanishLevel>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum SignOrder {
    /// Permute the projected coordinates, then negate by position: the
    /// coordinate landing at position `i` is multiplied by `z_i`.
    PermuteThenNegate,
    /// Negate by pre-permutation position, then permute: the coordinate
    /// landing at position `i` carries the sign `z_{pi(i)}`.
    NegateThenPermute,
}

pub(crate) fn permutations(t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..t).collect();
    heap_permute(&mut perm, t, &mut out);
    out
}

fn heap_permute(perm: &mut Vec<usize>, h: usize, out: &mut Vec<Vec<usize>>) {
    if h <= 1 {
        out.push(perm.clone());
        return;
    }
    for i in 0..h {
        heap_permute(perm, h - 1, out);
        if h % 2 == 0 {
            perm.swap(i, h - 1);
        } else {
            perm.swap(0, h - 1);
        }
    }
}

/// The bias point of each constraint, pulled back into the predicate's local
/// coordinate frame: slot `i` carries `signs[i] * b_{phi[i]}` and pair
/// `(i,j)` carries `signs[i] signs[j] * b_{phi[i] phi[j]}`.
pub fn instance_bias_points(inst: &GapInstance) -> Vec<PolytopePoint> {
    inst.constraints
        .iter()
        .map(|c| {
            let k = c.arity();
            let mut coords = Vec::with_capacity(PolytopePoint::dimension(k as u8));
            for slot in 0..k {
                let mut v = inst.bias.single(c.phi[slot]).clone();
                if c.signs[slot] == -1 {
                    v = -v;
                }
                coords.push(v);
            }
            for i in 0..k {
                for j in i + 1..k {
                    let mut v = inst.bias.pair(c.phi[i], c.phi[j]).clone();
                    if c.signs[i] * c.signs[j] == -1 {
                        v = -v;
                    }
                    coords.push(v);
                }
            }
            PolytopePoint {
                k: k as u8,
                coords,
            }
        })
        .collect()
}

fn vanish_atoms(
    table: &crate::predicate::FourierTable,
    points: &[PolytopePoint],
    t: usize,
    order: SignOrder,
) -> BTreeMap<Vec<Rat>, Rat> {
    let k = table.arity() as usize;
    let perms = permutations(t);
    let mut atoms: BTreeMap<Vec<Rat>, Rat> = BTreeMap::new();
    for p in points {
        for s_mask in 0u32..1 << k {
            if s_mask.count_ones() as usize != t {
                continue;
            }
            let coef = table.coef(s_mask);
            if coef.is_zero() {
                continue;
            }
            // tau[i] = i-th smallest element of S (1-based coordinates).
            let tau: Vec<usize> = (1..=k).filter(|&i| s_mask >> (i - 1) & 1 == 1).collect();
            for pi in &perms {
                for z_mask in 0u32..1 << t {
                    let z = |i: usize| -> i8 {
                        let idx = match order {
                            SignOrder::PermuteThenNegate => i,
                            SignOrder::NegateThenPermute => pi[i],
                        };
                        if z_mask >> idx & 1 == 1 {
                            1
                        } else {
                            -1
                        }
                    };
                    let mut weight = coef.clone();
                    if z_mask.count_ones() as usize % 2 != t % 2 {
                        // prod z_i is -1 when the count of -1 entries is odd
                        weight = -weight;
                    }
                    let mut atom = Vec::with_capacity(t + t * (t - 1) / 2);
                    for i in 0..t {
                        let mut v = p.single(tau[pi[i]]).clone();
                        if z(i) == -1 {
                            v = -v;
                        }
                        atom.push(v);
                    }
                    for i in 0..t {
                        for j in i + 1..t {
                            let (a, b) = (tau[pi[i]], tau[pi[j]]);
                            let mut v = p.pair(a.min(b), a.max(b)).clone();
                            if z(i) * z(j) == -1 {
                                v = -v;
                            }
                            atom.push(v);
                        }
                    }
                    let entry = atoms.entry(atom).or_insert_with(Rat::zero);
                    *entry += &weight;
                }
            }
        }
    }
    atoms.retain(|_, w| !w.is_zero());
    atoms
}

/// Level-`t` vanishing test for an explicit measure: one unit atom per
/// point, all points in the predicate's local frame. Expands the signed
/// measure by direct summation over `(S, pi, z)`, groups transformed atoms
/// by exact coordinates, and reports whether every group cancels. Residuals
/// are unnormalized signed sums of Fourier weights.
pub fn ktw_vanish_check_points(
    pred: &Predicate,
    points: &[PolytopePoint],
    t: u8,
) -> Result<VanishLevel, InstanceError> {
    let k = pred.arity();
    if k > MAX_VANISH_ARITY {
        return Err(InstanceError::VanishArity(k as usize));
    }
    assert!(t >= 1 && t <= k, "level out of range");
    for p in points {
        assert_eq!(p.k, k, "point arity mismatch");
    }
    let table = fourier_transform(pred)?;
    let atoms = vanish_atoms(&table, points, t as usize, SignOrder::PermuteThenNegate);
    match atoms.into_iter().next() {
        None => Ok(VanishLevel {
            t,
            vanished: true,
            failure: None,
            alternate_vanished: None,
        }),
        Some((point, residual)) => {
            let alt = vanish_atoms(&table, points, t as usize, SignOrder::NegateThenPermute);
            Ok(VanishLevel {
                t,
                vanished: false,
                failure: Some(VanishAtomFailure { point, residual }),
                alternate_vanished: Some(alt.is_empty()),
            })
        }
    }
}

/// Level-`t` vanishing test for the measure carried by an instance: uniform
/// weight on the constraints' pulled-back bias points.
pub fn ktw_vanish_check(inst: &GapInstance, t: u8) -> Result<VanishLevel, InstanceError> {
    inst.validate()?;
    let k = inst.constraints[0].arity();
    let pred_index = inst.constraints[0].pred;
    for c in &inst.constraints {
        if c.arity() != k {
            return Err(InstanceError::MixedArity(k, c.arity()));
        }
        if c.pred != pred_index {
            return Err(InstanceError::MixedPredicate(pred_index, c.pred));
        }
    }
    let points = instance_bias_points(inst);
    ktw_vanish_check_points(&inst.preds[pred_index], &points, t)
}

/// Vanishing verdicts for all levels `1..=max_t`.
pub fn ktw_vanish_report(inst: &GapInstance, max_t: u8) -> Result<VanishReport, InstanceError> {
    (1..=max_t).map(|t| ktw_vanish_check(inst, t)).collect()
}

/// The instance built from the parity predicate: all `2^3` sign patterns of
/// `x_1 x_2 x_3`, zero biases, uniform distributions on each solution set.
pub fn three_xor_instance() -> GapInstance {
    let pred = Predicate::xor3();
    let mut constraints = Vec::new();
    let mut dists = Vec::new();
    for b_mask in 0u32..8 {
        let signs: Vec<i8> = (0..3)
            .map(|i| if b_mask >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        let c = Constraint::new(0, vec![1, 2, 3], signs);
        let sat: Vec<Vec<i8>> = (0u32..8)
            .filter_map(|m| {
                let x: Vec<i8> = (0..3)
                    .map(|i| if m >> i & 1 == 1 { 1 } else { -1 })
                    .collect();
                (c.eval_on_sorted(&pred, &x).unwrap() == 1).then_some(x)
            })
            .collect();
        dists.push(Distribution::uniform(sat));
        constraints.push(c);
    }
    GapInstance {
        n: 3,
        preds: vec![pred],
        constraints,
        bias: BiasProfile::zero(3),
        dists,
    }
}

/// The two-constraint instance `{P(x), P(x_1, -x_2, x_3, x_4)}` with
/// `b_34 = -1` and the two listed solution distributions.
pub fn glst_instance() -> GapInstance {
    let pred = Predicate::glst();
    let mut bias = BiasProfile::zero(4);
    bias.set_pair(3, 4, Rat::int(-1)).expect("pair in range");
    let d1 = Distribution::uniform(vec![
        vec![1, 1, 1, -1],
        vec![1, -1, -1, 1],
        vec![-1, 1, -1, 1],
        vec![-1, -1, 1, -1],
    ]);
    let d2 = Distribution::uniform(vec![
        vec![-1, 1, 1, -1],
        vec![1, -1, 1, -1],
        vec![1, 1, -1, 1],
        vec![-1, -1, -1, 1],
    ]);
    GapInstance {
        n: 4,
        preds: vec![pred],
        constraints: vec![
            Constraint::identity(0, 4),
            Constraint::new(0, vec![1, 2, 3, 4], vec![1, -1, 1, 1]),
        ],
        bias,
        dists: vec![d1, d2],
    }
}

/// The worked example instances, keyed by name.
pub fn builtin_instances() -> Vec<(&'static str, GapInstance)> {
    vec![
        ("three_xor", three_xor_instance()),
        ("glst", glst_instance()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rfrac, rint};

    #[test]
    fn three_xor_passes_all_clauses() {
        let inst = three_xor_instance();
        assert_eq!(inst.constraints.len(), 8);
        let report = verify_perfect_gap(&inst).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.constant, Some(Rat::zero()));
    }

    #[test]
    fn glst_passes_all_clauses() {
        let inst = glst_instance();
        assert_eq!(inst.constraints.len(), 2);
        assert_eq!(*inst.bias.pair(3, 4), rint(-1));
        let report = verify_perfect_gap(&inst).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.constant, Some(Rat::zero()));
    }

    #[test]
    fn deleting_a_constraint_breaks_the_constant_sum() {
        let mut inst = three_xor_instance();
        inst.constraints.pop();
        inst.dists.pop();
        let report = verify_perfect_gap(&inst).unwrap();
        let failure = report.constant_failure.expect("clause must fail");
        assert_eq!(failure.subset, vec![1, 2, 3]);
        assert!(!failure.total.is_zero());
        assert!(report.constant.is_none());
    }

    #[test]
    fn algebraic_constant_matches_enumeration() {
        for (_, inst) in builtin_instances() {
            let report = verify_perfect_gap(&inst).unwrap();
            match enumerate_constant_sum(&inst).unwrap() {
                ConstantSumOutcome::Constant(c) => assert_eq!(Some(c), report.constant),
                ConstantSumOutcome::NonConstant { .. } => panic!("builtins are constant"),
            }
        }
        // And the mutant disagrees in both methods.
        let mut inst = three_xor_instance();
        inst.constraints.remove(3);
        inst.dists.remove(3);
        let report = verify_perfect_gap(&inst).unwrap();
        assert!(report.constant_failure.is_some());
        assert!(matches!(
            enumerate_constant_sum(&inst).unwrap(),
            ConstantSumOutcome::NonConstant { .. }
        ));
    }

    #[test]
    fn moment_mismatch_is_detected() {
        let mut inst = glst_instance();
        inst.bias.set_pair(2, 3, rfrac(1, 2)).unwrap();
        let report = verify_perfect_gap(&inst).unwrap();
        let failure = report.moment_failure.expect("moments must mismatch");
        assert_eq!(failure.vars, vec![2, 3]);
        assert_eq!(failure.want, rfrac(1, 2));
        assert_eq!(failure.got, Rat::zero());
    }

    #[test]
    fn unsatisfied_support_is_detected() {
        let mut inst = three_xor_instance();
        // Swap one support point of the identity-signs constraint (index 7,
        // signs all +1) for a falsifying assignment.
        let c = inst
            .constraints
            .iter()
            .position(|c| c.signs.iter().all(|&s| s == 1))
            .unwrap();
        inst.dists[c].support[0].0 = vec![1, 1, -1];
        let report = verify_perfect_gap(&inst).unwrap();
        let failure = report.support_failure.expect("support must fail");
        assert_eq!(failure.constraint, c);
        assert_eq!(failure.point, vec![1, 1, -1]);
    }

    #[test]
    fn psd_failure_is_witnessed() {
        let mut inst = glst_instance();
        // b_12 = -1 with b_13 = 1 and b_23 = 1 is infeasible for ±1 moments.
        inst.bias.set_pair(1, 2, rint(-1)).unwrap();
        inst.bias.set_pair(1, 3, rint(1)).unwrap();
        inst.bias.set_pair(2, 3, rint(1)).unwrap();
        let report = verify_perfect_gap(&inst).unwrap();
        let witness = report.psd_failure.expect("matrix must fail PSD");
        let m = inst.bias.bordered_matrix();
        assert!(m.quadratic_form(&witness).is_negative());
    }

    #[test]
    fn builtin_vanishing_at_all_levels() {
        let xor = three_xor_instance();
        for level in ktw_vanish_report(&xor, 3).unwrap() {
            assert!(level.vanished, "level {}", level.t);
        }
        let glst = glst_instance();
        for level in ktw_vanish_report(&glst, 4).unwrap() {
            assert!(level.vanished, "level {}", level.t);
        }
    }

    #[test]
    fn perturbed_bias_point_fails_vanishing() {
        let inst = glst_instance();
        let mut points = instance_bias_points(&inst);
        // Bump one coordinate of a single atom of the measure: pair (2,3)
        // of the first constraint's point.
        let idx = points[0].k as usize + crate::polytope::pair_index(4, 2, 3);
        points[0].coords[idx] = rfrac(1, 2);
        let mut failed = 0;
        for t in 1..=4 {
            let level = ktw_vanish_check_points(&inst.preds[0], &points, t).unwrap();
            if !level.vanished {
                failed += 1;
                let f = level.failure.as_ref().expect("failure carries an atom");
                assert!(!f.residual.is_zero());
                assert!(f.point.iter().any(|c| *c == rfrac(1, 2) || *c == rfrac(-1, 2)));
                // Both composition orders agree on the verdict.
                assert_eq!(level.alternate_vanished, Some(false));
            }
        }
        assert!(failed >= 1);
    }

    #[test]
    fn shared_profile_perturbation_still_vanishes() {
        // Changing the shared profile moves every constraint's point in a
        // correlated way; the constant-sum structure still cancels all
        // atoms, so only point-level perturbations can break vanishing.
        let mut inst = glst_instance();
        inst.bias.set_pair(2, 3, rfrac(1, 2)).unwrap();
        for level in ktw_vanish_report(&inst, 4).unwrap() {
            assert!(level.vanished, "level {}", level.t);
        }
    }

    #[test]
    fn constraint_order_is_immaterial() {
        let mut inst = glst_instance();
        let base = verify_perfect_gap(&inst).unwrap();
        let base_vanish = ktw_vanish_report(&inst, 4).unwrap();
        inst.constraints.swap(0, 1);
        inst.dists.swap(0, 1);
        assert_eq!(verify_perfect_gap(&inst).unwrap(), base);
        assert_eq!(ktw_vanish_report(&inst, 4).unwrap(), base_vanish);
    }

    #[test]
    fn verification_is_idempotent_on_recomputed_moments() {
        let inst = three_xor_instance();
        let vars: Vec<u32> = (1..=3).collect();
        let recomputed = BiasProfile::from_distribution(3, &inst.dists[0].support);
        let mut again = inst.clone();
        again.bias = BiasProfile::zero(3);
        for (t, &v) in vars.iter().enumerate() {
            again.bias.set_single(v, recomputed.single(t as u32 + 1).clone());
        }
        for s in 1..=3u32 {
            for t in s + 1..=3 {
                again.bias.set_pair(s, t, recomputed.pair(s, t).clone()).unwrap();
            }
        }
        assert!(verify_perfect_gap(&again).unwrap().passed());
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = glst_instance();
        let js = serde_json::to_string(&inst).unwrap();
        assert_eq!(serde_json::from_str::<GapInstance>(&js).unwrap(), inst);
    }

    #[test]
    fn structural_validation_errors() {
        let mut inst = glst_instance();
        inst.dists[0].support[0].1 = rfrac(1, 2);
        assert!(matches!(
            verify_perfect_gap(&inst),
            Err(InstanceError::ProbSum { con: 0, .. })
        ));
        let mut inst = glst_instance();
        inst.dists.pop();
        assert!(matches!(
            verify_perfect_gap(&inst),
            Err(InstanceError::DistCount { .. })
        ));
    }
}
