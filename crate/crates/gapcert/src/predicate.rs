//! Linear threshold functions, predicates over `{-1,+1}^k`, constraints, and
//! exact Boolean Fourier analysis.
//!
//! Assignments are encoded as bitmasks: bit `i` (0-based) set means variable
//! `x_{i+1} = +1`. Fourier coefficients are exact dyadic rationals held as
//! integer numerators over `2^k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rat::Rat;

/// Hard cap on arity for truth-table materialization (2^24 entries).
pub const MAX_TABLE_ARITY: u8 = 24;

/// A real-weighted linear form `sum_i w_i x_i + c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearForm {
    pub weights: Vec<Rat>,
    pub constant: Rat,
}

/// A linear form evaluated to exactly zero, which has no sign.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("linear form evaluates to zero at {point:?}")]
pub struct ZeroValue {
    pub point: Vec<Rat>,
}

impl LinearForm {
    pub fn new(weights: Vec<Rat>, constant: Rat) -> Self {
        LinearForm { weights, constant }
    }

    pub fn from_ints(weights: &[i64], constant: i64) -> Self {
        LinearForm {
            weights: weights.iter().map(|&w| Rat::int(w)).collect(),
            constant: Rat::int(constant),
        }
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    /// Exact value at an arbitrary rational point.
    pub fn eval(&self, x: &[Rat]) -> Rat {
        assert_eq!(x.len(), self.weights.len(), "arity mismatch");
        let mut acc = self.constant.clone();
        for (w, v) in self.weights.iter().zip(x.iter()) {
            if !w.is_zero() && !v.is_zero() {
                acc += w * v;
            }
        }
        acc
    }

    /// Sign at a point; exact zeros are an error, not a convention.
    pub fn eval_sign(&self, x: &[Rat]) -> Result<i8, ZeroValue> {
        let v = self.eval(x);
        match v.signum() {
            0 => Err(ZeroValue { point: x.to_vec() }),
            s => Ok(s),
        }
    }

    /// Value at a `{-1,+1}` assignment given as a bitmask.
    pub fn eval_mask(&self, mask: u32) -> Rat {
        let mut acc = self.constant.clone();
        for (i, w) in self.weights.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            if mask >> i & 1 == 1 {
                acc += w;
            } else {
                acc -= w;
            }
        }
        acc
    }

    pub fn sign_mask(&self, mask: u32) -> Result<i8, ZeroValue> {
        match self.eval_mask(mask).signum() {
            0 => {
                let point = (0..self.weights.len())
                    .map(|i| Rat::int(if mask >> i & 1 == 1 { 1 } else { -1 }))
                    .collect();
                Err(ZeroValue { point })
            }
            s => Ok(s),
        }
    }
}

/// A layer on which the positive-sign count is not exactly half.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("layer with {ones} coordinates at +1 has {positive} positive points out of {size}")]
pub struct UnbalancedLayer {
    pub ones: u32,
    pub positive: u64,
    pub size: u64,
}

/// Layer test over `{-1,+1}^k`: on every layer with `j` coordinates at +1,
/// `1 <= j <= k-1`, exactly half the points must give a strictly positive
/// value. The two constant layers are exempt.
pub fn check_perfectly_balanced(l: &LinearForm) -> Result<(), UnbalancedLayer> {
    let k = l.arity();
    assert!(k >= 1 && k <= 24, "layer test arity out of range");
    let mut positive = vec![0u64; k + 1];
    let mut size = vec![0u64; k + 1];
    for mask in 0u32..1 << k {
        let ones = mask.count_ones() as usize;
        size[ones] += 1;
        if l.eval_mask(mask).is_positive() {
            positive[ones] += 1;
        }
    }
    for j in 1..k {
        if positive[j] * 2 != size[j] {
            return Err(UnbalancedLayer {
                ones: j as u32,
                positive: positive[j],
                size: size[j],
            });
        }
    }
    Ok(())
}

/// A value-orbit on which positive and negative signs are not equally likely.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("orbit of {orbit:?} has {positive} positive and {negative} negative arrangements")]
pub struct UnbalancedOrbit {
    pub orbit: Vec<Rat>,
    pub positive: u64,
    pub negative: u64,
}

/// Generalized balance test for forms on variables over an arbitrary finite
/// value set: permuting the coordinates of any non-constant input must give
/// positive and negative signs equally often. Enumerates all `|values|^k`
/// inputs, so it is meant for small forms.
pub fn check_perfectly_balanced_valued(
    l: &LinearForm,
    values: &[Rat],
) -> Result<(), UnbalancedOrbit> {
    let k = l.arity();
    let v = values.len();
    assert!(v >= 1);
    assert!((v as f64).powi(k as i32) < 2e7, "orbit enumeration too large");
    // Group arrangements by sorted value multiset.
    let mut orbits: BTreeMap<Vec<Rat>, (u64, u64)> = BTreeMap::new();
    let total = v.pow(k as u32);
    let mut point = vec![Rat::zero(); k];
    for code in 0..total {
        let mut c = code;
        for slot in point.iter_mut() {
            *slot = values[c % v].clone();
            c /= v;
        }
        let mut key = point.clone();
        key.sort();
        if key.first() == key.last() {
            continue; // constant inputs are exempt
        }
        let entry = orbits.entry(key).or_insert((0, 0));
        match l.eval(&point).signum() {
            1 => entry.0 += 1,
            -1 => entry.1 += 1,
            _ => {}
        }
    }
    for (orbit, (positive, negative)) in orbits {
        if positive != negative {
            return Err(UnbalancedOrbit {
                orbit,
                positive,
                negative,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PredicateError {
    #[error("arity {0} exceeds the truth-table cap of {MAX_TABLE_ARITY}")]
    ArityTooLarge(u8),
    #[error("arity must be at least 1")]
    ArityZero,
    #[error("plus_set entry {0} out of range for arity {1}")]
    MaskOutOfRange(u32, u8),
    #[error("plus_set must be strictly increasing")]
    MaskOrder,
    #[error("linear threshold predicate takes the value zero: {0}")]
    ZeroOnCube(ZeroValue),
}

/// A `{-1,+1}`-valued function on `{-1,+1}^k`, stored either as an explicit
/// satisfying-set table or as a lazily evaluated linear threshold function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    /// `plus_set` lists the assignments (as bitmasks, strictly increasing)
    /// where the predicate is +1.
    Table { k: u8, plus_set: Vec<u32> },
    /// `sign(sum w_i x_i + c)`; must never be exactly zero on the cube.
    Ltf { weights: Vec<Rat>, constant: Rat },
}

impl Predicate {
    pub fn from_form(l: &LinearForm) -> Self {
        Predicate::Ltf {
            weights: l.weights.clone(),
            constant: l.constant.clone(),
        }
    }

    pub fn arity(&self) -> u8 {
        match self {
            Predicate::Table { k, .. } => *k,
            Predicate::Ltf { weights, .. } => weights.len() as u8,
        }
    }

    pub fn form(&self) -> Option<LinearForm> {
        match self {
            Predicate::Ltf { weights, constant } => Some(LinearForm {
                weights: weights.clone(),
                constant: constant.clone(),
            }),
            Predicate::Table { .. } => None,
        }
    }

    /// Structural validation; `Ltf` zero-freeness is checked lazily on eval.
    pub fn validate(&self) -> Result<(), PredicateError> {
        let k = self.arity();
        if k == 0 {
            return Err(PredicateError::ArityZero);
        }
        if k > MAX_TABLE_ARITY {
            return Err(PredicateError::ArityTooLarge(k));
        }
        if let Predicate::Table { k, plus_set } = self {
            for w in plus_set.windows(2) {
                if w[0] >= w[1] {
                    return Err(PredicateError::MaskOrder);
                }
            }
            if let Some(&last) = plus_set.last() {
                if last >= 1u32 << k {
                    return Err(PredicateError::MaskOutOfRange(last, *k));
                }
            }
        }
        Ok(())
    }

    /// Value at the assignment encoded by `mask`.
    pub fn eval_mask(&self, mask: u32) -> Result<i8, ZeroValue> {
        match self {
            Predicate::Table { plus_set, .. } => {
                Ok(if plus_set.binary_search(&mask).is_ok() {
                    1
                } else {
                    -1
                })
            }
            Predicate::Ltf { weights, constant } => LinearForm {
                weights: weights.clone(),
                constant: constant.clone(),
            }
            .sign_mask(mask),
        }
    }

    /// Value at a `±1` assignment slice.
    pub fn eval_pm(&self, x: &[i8]) -> Result<i8, ZeroValue> {
        assert_eq!(x.len(), self.arity() as usize);
        let mut mask = 0u32;
        for (i, &v) in x.iter().enumerate() {
            debug_assert!(v == 1 || v == -1);
            if v == 1 {
                mask |= 1 << i;
            }
        }
        self.eval_mask(mask)
    }

    /// Materializes the satisfying set; errors if the arity cap is exceeded
    /// or a threshold form hits zero.
    pub fn satisfying_masks(&self) -> Result<Vec<u32>, PredicateError> {
        self.validate()?;
        match self {
            Predicate::Table { plus_set, .. } => Ok(plus_set.clone()),
            Predicate::Ltf { .. } => {
                let k = self.arity();
                let mut out = Vec::new();
                for mask in 0u32..1 << k {
                    match self.eval_mask(mask) {
                        Ok(1) => out.push(mask),
                        Ok(_) => {}
                        Err(z) => return Err(PredicateError::ZeroOnCube(z)),
                    }
                }
                Ok(out)
            }
        }
    }

    /// The parity predicate `x_1 x_2 x_3`.
    pub fn xor3() -> Self {
        Predicate::Table {
            k: 3,
            plus_set: (0u32..8).filter(|m| m.count_ones() % 2 == 1).collect(),
        }
    }

    /// The 4-ary predicate `-((1-x_1)/2) x_2 x_3 - ((1+x_1)/2) x_2 x_4`:
    /// `-x_2 x_3` when `x_1 = -1` and `-x_2 x_4` when `x_1 = +1`.
    pub fn glst() -> Self {
        let mut plus = Vec::new();
        for mask in 0u32..16 {
            let x = |i: u32| if mask >> i & 1 == 1 { 1i8 } else { -1 };
            let v = if x(0) == 1 {
                -x(1) * x(3)
            } else {
                -x(1) * x(2)
            };
            if v == 1 {
                plus.push(mask);
            }
        }
        Predicate::Table { k: 4, plus_set: plus }
    }

    /// `sign((k-2) x_1 + x_2 + ... + x_k)`.
    pub fn monarchy(k: u8) -> Self {
        assert!(k >= 3);
        let mut weights = vec![Rat::int(1); k as usize];
        weights[0] = Rat::int(i64::from(k) - 2);
        Predicate::Ltf {
            weights,
            constant: Rat::zero(),
        }
    }

    /// `sign((k-4) x_1 + x_2 + ... + x_k)`.
    pub fn almost_monarchy(k: u8) -> Self {
        assert!(k >= 5);
        let mut weights = vec![Rat::int(1); k as usize];
        weights[0] = Rat::int(i64::from(k) - 4);
        Predicate::Ltf {
            weights,
            constant: Rat::zero(),
        }
    }
}

/// An application of a predicate to global variables: slot `i` reads
/// `signs[i] * x_{phi[i]}` (variables are 1-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    /// Index into the owning instance's predicate list.
    pub pred: usize,
    pub phi: Vec<u32>,
    pub signs: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("constraint maps {got} slots but the predicate has arity {arity}")]
    ArityMismatch { got: usize, arity: usize },
    #[error("variable map is not injective (variable {0} repeats)")]
    NotInjective(u32),
    #[error("variable index {0} out of range 1..={1}")]
    VarOutOfRange(u32, u32),
    #[error("sign entries must be +1 or -1, found {0}")]
    BadSign(i8),
}

impl Constraint {
    pub fn new(pred: usize, phi: Vec<u32>, signs: Vec<i8>) -> Self {
        Constraint { pred, phi, signs }
    }

    /// Identity application on variables `1..=k` with all-positive signs.
    pub fn identity(pred: usize, k: u8) -> Self {
        Constraint {
            pred,
            phi: (1..=u32::from(k)).collect(),
            signs: vec![1; k as usize],
        }
    }

    pub fn arity(&self) -> usize {
        self.phi.len()
    }

    pub fn validate(&self, pred: &Predicate, n_vars: u32) -> Result<(), ConstraintError> {
        let arity = pred.arity() as usize;
        if self.phi.len() != arity || self.signs.len() != arity {
            return Err(ConstraintError::ArityMismatch {
                got: self.phi.len().max(self.signs.len()),
                arity,
            });
        }
        let mut seen = self.phi.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(ConstraintError::NotInjective(w[0]));
            }
        }
        for &v in &self.phi {
            if v == 0 || v > n_vars {
                return Err(ConstraintError::VarOutOfRange(v, n_vars));
            }
        }
        for &s in &self.signs {
            if s != 1 && s != -1 {
                return Err(ConstraintError::BadSign(s));
            }
        }
        Ok(())
    }

    /// The constraint's variable set in increasing order.
    pub fn sorted_vars(&self) -> Vec<u32> {
        let mut v = self.phi.clone();
        v.sort_unstable();
        v
    }

    /// Evaluates the constraint on an assignment to its sorted variable set:
    /// `values[t]` is the value of the `t`-th smallest variable.
    pub fn eval_on_sorted(&self, pred: &Predicate, values: &[i8]) -> Result<i8, ZeroValue> {
        let vars = self.sorted_vars();
        assert_eq!(values.len(), vars.len());
        let mut local = vec![0i8; self.phi.len()];
        for (slot, &var) in self.phi.iter().enumerate() {
            let pos = vars.binary_search(&var).expect("var in own set");
            local[slot] = self.signs[slot] * values[pos];
        }
        pred.eval_pm(&local)
    }
}

/// Exact Fourier expansion of a `±1`-valued predicate: coefficient of the
/// character `prod_{i in S} x_i` is `num[S] / 2^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierTable {
    k: u8,
    num: Vec<i64>,
}

impl FourierTable {
    pub fn arity(&self) -> u8 {
        self.k
    }

    /// Coefficient of the subset encoded by `mask`, as an exact rational.
    pub fn coef(&self, mask: u32) -> Rat {
        Rat::frac(self.num[mask as usize], 1i64 << self.k)
    }

    /// Raw numerator over `2^k`.
    pub fn numerator(&self, mask: u32) -> i64 {
        self.num[mask as usize]
    }

    pub fn empty_coef(&self) -> Rat {
        self.coef(0)
    }

    /// `sum_S coef(S)^2`, exactly. Equals 1 for `±1`-valued functions.
    pub fn parseval_sum(&self) -> Rat {
        let mut acc: i128 = 0;
        for &n in &self.num {
            acc += i128::from(n) * i128::from(n);
        }
        let denom = (1i128 << self.k) * (1i128 << self.k);
        // Reduce through BigInt to keep exactness for any k.
        Rat::from_big(num_rational::BigRational::new(acc.into(), denom.into()))
    }

    /// Reconstructs the function value at `mask` from the expansion.
    pub fn invert_at(&self, mask: u32) -> Rat {
        let mut acc: i64 = 0;
        for (s, &n) in self.num.iter().enumerate() {
            // chi_S(x) = (-1)^{|S| - |S & x|}
            let s = s as u32;
            let sign = (s.count_ones() + (s & mask).count_ones()) % 2;
            acc += if sign == 0 { n } else { -n };
        }
        Rat::frac(acc, 1i64 << self.k)
    }
}

/// Exact Walsh-Hadamard transform of the predicate's `±1` truth table.
pub fn fourier_transform(p: &Predicate) -> Result<FourierTable, PredicateError> {
    p.validate()?;
    let k = p.arity();
    let size = 1usize << k;
    let mut buf = vec![0i64; size];
    match p {
        Predicate::Table { plus_set, .. } => {
            for v in buf.iter_mut() {
                *v = -1;
            }
            for &m in plus_set {
                buf[m as usize] = 1;
            }
        }
        Predicate::Ltf { .. } => {
            for (mask, v) in buf.iter_mut().enumerate() {
                match p.eval_mask(mask as u32) {
                    Ok(s) => *v = i64::from(s),
                    Err(z) => return Err(PredicateError::ZeroOnCube(z)),
                }
            }
        }
    }
    // In-place butterfly: afterwards buf[S] = sum_x f(x) (-1)^{|S & x|}.
    let mut h = 1usize;
    while h < size {
        for chunk in buf.chunks_mut(2 * h) {
            for i in 0..h {
                let a = chunk[i];
                let b = chunk[i + h];
                chunk[i] = a + b;
                chunk[i + h] = a - b;
            }
        }
        h *= 2;
    }
    // coef(S) = (-1)^{|S|} buf[S] / 2^k.
    for (s, v) in buf.iter_mut().enumerate() {
        if (s as u32).count_ones() % 2 == 1 {
            *v = -*v;
        }
    }
    Ok(FourierTable { k, num: buf })
}

/// Subset shapes for the closed-form coefficients of the almost-monarchy
/// threshold function `sign((k-4) x_1 + x_2 + ... + x_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourierClass {
    /// `a` citizens, president excluded; `a` odd.
    Citizens(u32),
    /// The president alone.
    President,
    /// President plus `a` citizens; `a` even, at least 2.
    PresidentCitizens(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClosedFormError {
    #[error("closed forms require k >= 5, got {0}")]
    KTooSmall(u8),
    #[error("citizen count {0} invalid for class (parity or range)")]
    BadClass(u32),
}

/// Closed-form Fourier coefficients of `sign((k-4) x_1 + sum_{i>=2} x_i)`.
/// All remaining subset shapes have coefficient zero by oddness.
pub fn fourier_closed_form(k: u8, class: FourierClass) -> Result<Rat, ClosedFormError> {
    if k < 5 {
        return Err(ClosedFormError::KTooSmall(k));
    }
    let kk = i64::from(k);
    let pow = Rat::int(2).pow(u32::from(k) - 2);
    match class {
        FourierClass::Citizens(a) => {
            if a % 2 == 0 || a == 0 || a > u32::from(k) - 1 {
                return Err(ClosedFormError::BadClass(a));
            }
            Ok(Rat::int(kk - 2 * i64::from(a)) / &pow)
        }
        FourierClass::President => Ok(Rat::one() - Rat::int(kk) / &pow),
        FourierClass::PresidentCitizens(a) => {
            if a % 2 == 1 || a < 2 || a > u32::from(k) - 1 {
                return Err(ClosedFormError::BadClass(a));
            }
            Ok(Rat::int(2 * i64::from(a) - kk) / &pow)
        }
    }
}

/// Probability a uniformly random assignment satisfies the predicate,
/// computed from the empty Fourier coefficient.
pub fn random_sat_prob(p: &Predicate) -> Result<Rat, PredicateError> {
    let t = fourier_transform(p)?;
    Ok((t.empty_coef() + Rat::one()) / Rat::int(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rfrac, rint};

    #[test]
    fn ltf_sign_and_zero() {
        let l = LinearForm::from_ints(&[1, 1], 0);
        assert_eq!(l.eval_sign(&[rint(1), rint(1)]).unwrap(), 1);
        assert!(l.eval_sign(&[rint(1), rint(-1)]).is_err());
    }

    #[test]
    fn core_form_sign_at_large_point() {
        // x_1 + 3/2 - (8/5)(x_2 + x_3)/299, evaluated off the cube.
        let w = rfrac(-8, 5 * 299);
        let l = LinearForm::new(vec![rint(1), w.clone(), w, Rat::zero()], rfrac(3, 2));
        let v = [rint(299), rint(0), rint(0), rint(0)];
        assert_eq!(l.eval_sign(&v).unwrap(), 1);
    }

    #[test]
    fn layer_balance_examples() {
        assert!(check_perfectly_balanced(&LinearForm::from_ints(&[2, 1, -1, -1], 0)).is_ok());
        assert!(check_perfectly_balanced(&LinearForm::from_ints(&[2, 1], 0)).is_ok());
        let err = check_perfectly_balanced(&LinearForm::from_ints(&[1, 1, 1, 1], 0)).unwrap_err();
        assert_eq!(err.size, 4);
    }

    #[test]
    fn xor3_fourier_is_a_single_character() {
        let t = fourier_transform(&Predicate::xor3()).unwrap();
        for s in 0u32..8 {
            let expect = if s == 7 { Rat::one() } else { Rat::zero() };
            assert_eq!(t.coef(s), expect, "subset {s:#b}");
        }
    }

    #[test]
    fn glst_fourier_matches_known_expansion() {
        let t = fourier_transform(&Predicate::glst()).unwrap();
        let mask = |bits: &[u32]| bits.iter().fold(0u32, |m, b| m | 1 << (b - 1));
        assert_eq!(t.coef(mask(&[2, 3])), rfrac(-1, 2));
        assert_eq!(t.coef(mask(&[2, 4])), rfrac(-1, 2));
        assert_eq!(t.coef(mask(&[1, 2, 3])), rfrac(1, 2));
        assert_eq!(t.coef(mask(&[1, 2, 4])), rfrac(-1, 2));
        assert_eq!(t.coef(0), Rat::zero());
        assert_eq!(t.parseval_sum(), Rat::one());
    }

    #[test]
    fn monarchy_transform_matches_direct_sum() {
        let p = Predicate::monarchy(5);
        let t = fourier_transform(&p).unwrap();
        for s in 0u32..32 {
            // Direct definition: 2^{-k} sum_x f(x) chi_S(x).
            let mut acc = 0i64;
            for x in 0u32..32 {
                let chi = if (s.count_ones() + (s & x).count_ones()) % 2 == 0 {
                    1
                } else {
                    -1
                };
                acc += i64::from(p.eval_mask(x).unwrap()) * chi;
            }
            assert_eq!(t.coef(s), Rat::frac(acc, 32), "subset {s:#b}");
        }
    }

    #[test]
    fn closed_forms_at_k8() {
        assert_eq!(
            fourier_closed_form(8, FourierClass::Citizens(1)).unwrap(),
            rfrac(6, 64)
        );
        assert_eq!(
            fourier_closed_form(8, FourierClass::President).unwrap(),
            rfrac(7, 8)
        );
    }

    #[test]
    fn sat_prob_of_odd_predicates_is_half() {
        assert_eq!(random_sat_prob(&Predicate::xor3()).unwrap(), rfrac(1, 2));
        assert_eq!(random_sat_prob(&Predicate::glst()).unwrap(), rfrac(1, 2));
    }

    #[test]
    fn monarchy_sat_prob_counts_assignments() {
        let p = Predicate::monarchy(5);
        let count = p.satisfying_masks().unwrap().len() as i64;
        assert_eq!(random_sat_prob(&p).unwrap(), Rat::frac(count, 32));
    }

    #[test]
    fn predicate_json_round_trip() {
        let p = Predicate::monarchy(4);
        let js = serde_json::to_string(&p).unwrap();
        assert!(js.contains("\"kind\":\"ltf\""), "{js}");
        assert_eq!(serde_json::from_str::<Predicate>(&js).unwrap(), p);

        let t = Predicate::xor3();
        let js = serde_json::to_string(&t).unwrap();
        assert!(js.contains("\"kind\":\"table\""), "{js}");
        assert_eq!(serde_json::from_str::<Predicate>(&js).unwrap(), t);
    }

    #[test]
    fn constraint_validation() {
        let p = Predicate::xor3();
        let good = Constraint::new(0, vec![2, 1, 3], vec![1, -1, 1]);
        assert!(good.validate(&p, 3).is_ok());
        let dup = Constraint::new(0, vec![1, 1, 3], vec![1, 1, 1]);
        assert!(matches!(
            dup.validate(&p, 3),
            Err(ConstraintError::NotInjective(1))
        ));
        let oob = Constraint::new(0, vec![1, 2, 9], vec![1, 1, 1]);
        assert!(matches!(
            oob.validate(&p, 3),
            Err(ConstraintError::VarOutOfRange(9, 3))
        ));
    }

    #[test]
    fn constraint_eval_respects_phi_and_signs() {
        // xor3 applied through phi = (3,1,2) with a flip on slot 0:
        // value = P(-x_3, x_1, x_2) = -x_1 x_2 x_3.
        let p = Predicate::xor3();
        let c = Constraint::new(0, vec![3, 1, 2], vec![-1, 1, 1]);
        // values indexed by sorted vars (1,2,3)
        assert_eq!(c.eval_on_sorted(&p, &[1, 1, 1]).unwrap(), -1);
        assert_eq!(c.eval_on_sorted(&p, &[1, -1, 1]).unwrap(), 1);
    }
}
