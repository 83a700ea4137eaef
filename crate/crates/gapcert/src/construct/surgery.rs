//! Linear-form surgery: zero sets over finite box domains, and the
//! two-sided enforcement that welds a constraint's zero set into a pair of
//! threshold forms agreeing exactly on that set.

use serde::{Deserialize, Serialize};

use crate::predicate::LinearForm;
use crate::rat::{rint, Rat};

/// Enumeration guard for domain sweeps.
const MAX_DOMAIN_POINTS: u64 = 1 << 24;

/// The finite set of integer values one variable may take.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDomain(Vec<i64>);

impl VarDomain {
    /// The two-point domain `{-1, +1}`.
    pub fn pm_one() -> VarDomain {
        VarDomain(vec![-1, 1])
    }

    /// All integers in `[lo, hi]`.
    pub fn range(lo: i64, hi: i64) -> VarDomain {
        assert!(lo <= hi, "empty domain range");
        VarDomain((lo..=hi).collect())
    }

    /// An explicit value set; deduplicated and sorted.
    pub fn values(vals: &[i64]) -> VarDomain {
        assert!(!vals.is_empty(), "empty domain");
        let mut v = vals.to_vec();
        v.sort_unstable();
        v.dedup();
        VarDomain(v)
    }

    pub fn points(&self) -> &[i64] {
        &self.0
    }
}

fn domain_size(domain: &[VarDomain]) -> u64 {
    domain
        .iter()
        .try_fold(1u64, |acc, d| acc.checked_mul(d.0.len() as u64))
        .filter(|&n| n <= MAX_DOMAIN_POINTS)
        .expect("domain too large to enumerate")
}

fn for_each_point(domain: &[VarDomain], mut f: impl FnMut(&[i64])) {
    let total = domain_size(domain);
    let mut point: Vec<i64> = domain.iter().map(|d| d.0[0]).collect();
    let mut index = vec![0usize; domain.len()];
    for _ in 0..total {
        f(&point);
        for pos in (0..domain.len()).rev() {
            index[pos] += 1;
            if index[pos] < domain[pos].0.len() {
                point[pos] = domain[pos].0[index[pos]];
                break;
            }
            index[pos] = 0;
            point[pos] = domain[pos].0[0];
        }
    }
}

/// Exact membership in `Z(l) = {x : l(x) = 0}`.
pub fn in_zero_set(l: &LinearForm, point: &[i64]) -> bool {
    let rats: Vec<Rat> = point.iter().map(|&v| rint(v)).collect();
    l.eval(&rats).is_zero()
}

/// Enumerates `Z(l)` over a finite box domain, in mixed-radix order.
pub fn zero_set(l: &LinearForm, domain: &[VarDomain]) -> Vec<Vec<i64>> {
    assert_eq!(l.arity(), domain.len(), "arity mismatch");
    let mut out = Vec::new();
    for_each_point(domain, |point| {
        if in_zero_set(l, point) {
            out.push(point.to_vec());
        }
    });
    out
}

/// The enforcement pair `l'_1 = B*l_c + l_r`, `l'_2 = -B*l_c + l_r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enforced {
    pub plus: LinearForm,
    pub minus: LinearForm,
    pub bound: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnforceError {
    #[error("constraint form is identically zero on the domain")]
    ConstraintVanishes,
    #[error("forms have different arities ({constraint} vs {remainder})")]
    ArityMismatch { constraint: usize, remainder: usize },
}

fn combine(l_c: &LinearForm, l_r: &LinearForm, b: &Rat) -> LinearForm {
    let weights = l_c
        .weights
        .iter()
        .zip(l_r.weights.iter())
        .map(|(wc, wr)| &(b * wc) + wr)
        .collect();
    LinearForm::new(weights, &(b * &l_c.constant) + &l_r.constant)
}

/// Builds the pair of forms whose signs agree (and equal `sign(l_r)`) exactly
/// on `Z(l_c)` and strictly disagree everywhere else on the domain.
///
/// `B = floor(b/a) + 1`, where `a` is the smallest nonzero `|l_c|` over the
/// domain (found by enumeration) and `b` is the largest `|l_r|` (found by
/// per-coordinate extremization, exact on box domains). Then `B*a > b`, so
/// off the zero set `(B l_c + l_r)(-B l_c + l_r) = l_r^2 - B^2 l_c^2 < 0`.
pub fn enforce(
    l_c: &LinearForm,
    l_r: &LinearForm,
    domain: &[VarDomain],
) -> Result<Enforced, EnforceError> {
    if l_c.arity() != l_r.arity() {
        return Err(EnforceError::ArityMismatch {
            constraint: l_c.arity(),
            remainder: l_r.arity(),
        });
    }
    assert_eq!(l_c.arity(), domain.len(), "arity mismatch with domain");

    let mut min_nonzero: Option<Rat> = None;
    for_each_point(domain, |point| {
        let rats: Vec<Rat> = point.iter().map(|&v| rint(v)).collect();
        let mag = l_c.eval(&rats).abs();
        if !mag.is_zero() && min_nonzero.as_ref().map_or(true, |m| mag < *m) {
            min_nonzero = Some(mag);
        }
    });
    let a = min_nonzero.ok_or(EnforceError::ConstraintVanishes)?;

    let mut hi = l_r.constant.clone();
    let mut lo = l_r.constant.clone();
    for (w, dom) in l_r.weights.iter().zip(domain.iter()) {
        let contributions: Vec<Rat> = dom.0.iter().map(|&v| w * &rint(v)).collect();
        hi += contributions.iter().max().unwrap();
        lo += contributions.iter().min().unwrap();
    }
    let b = hi.abs().max(lo.abs());

    let ratio = &b / &a;
    let bound =
        Rat::from_big(num_rational::BigRational::from_integer(ratio.floor_int())) + Rat::one();
    Ok(Enforced {
        plus: combine(l_c, l_r, &bound),
        minus: combine(l_c, l_r, &(-&bound)),
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::LinearForm;

    fn pm(n: usize) -> Vec<VarDomain> {
        vec![VarDomain::pm_one(); n]
    }

    #[test]
    fn zero_set_of_five_variable_form_matches_sign_and_parity_rule() {
        // x1 + x2 + x3 - 2 x4 - x5: the zero set pins x4 to the majority of
        // the first three variables and x5 to their product.
        let l = LinearForm::from_ints(&[1, 1, 1, -2, -1], 0);
        let z = zero_set(&l, &pm(5));
        assert_eq!(z.len(), 8);
        for p in &z {
            let s = p[0] + p[1] + p[2];
            assert_eq!(p[3], s.signum());
            assert_eq!(p[4], p[0] * p[1] * p[2]);
        }
        // And conversely: all 8 such points appear.
        let mut expected = 0;
        for mask in 0..32u32 {
            let p: Vec<i64> = (0..5).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
            if p[3] == (p[0] + p[1] + p[2]).signum() && p[4] == p[0] * p[1] * p[2] {
                expected += 1;
                assert!(in_zero_set(&l, &p));
            }
        }
        assert_eq!(expected, 8);
    }

    #[test]
    fn zero_form_vanishes_everywhere() {
        let l = LinearForm::from_ints(&[0, 0], 0);
        assert_eq!(zero_set(&l, &pm(2)).len(), 4);
    }

    #[test]
    fn odd_coefficient_sum_gives_empty_zero_set() {
        let l = LinearForm::from_ints(&[1, 1, 1], 0);
        assert!(zero_set(&l, &pm(3)).is_empty());
        let l = LinearForm::from_ints(&[3, 1, 1, 2], 0);
        assert!(zero_set(&l, &pm(4)).is_empty());
    }

    #[test]
    fn enforce_two_variable_example() {
        let l_c = LinearForm::from_ints(&[1, -1], 0);
        let l_r = LinearForm::from_ints(&[1, 1], 0);
        let enc = enforce(&l_c, &l_r, &pm(2)).unwrap();
        assert_eq!(enc.bound, rint(2));
        // Off-diagonal inputs get strictly opposite signs.
        for p in [[1i64, -1], [-1, 1]] {
            let rats: Vec<Rat> = p.iter().map(|&v| rint(v)).collect();
            let prod = &enc.plus.eval(&rats) * &enc.minus.eval(&rats);
            assert!(prod.is_negative());
        }
        // Diagonal inputs: both signs equal sign(l_r).
        for p in [[1i64, 1], [-1, -1]] {
            let rats: Vec<Rat> = p.iter().map(|&v| rint(v)).collect();
            let want = l_r.eval(&rats).signum();
            assert_eq!(enc.plus.eval(&rats).signum(), want);
            assert_eq!(enc.minus.eval(&rats).signum(), want);
        }
    }

    #[test]
    fn membership_and_split_are_exclusive_everywhere() {
        // For every domain point, exactly one of "in Z(l_c)" and
        // "the pair splits signs" holds.
        let l_c = LinearForm::from_ints(&[1, 1, -2], 0);
        let l_r = LinearForm::from_ints(&[2, -1, 3], 1);
        let domain = [
            VarDomain::range(-2, 2),
            VarDomain::pm_one(),
            VarDomain::range(0, 3),
        ];
        let enc = enforce(&l_c, &l_r, &domain).unwrap();
        let mut checked = 0u32;
        for a in -2..=2i64 {
            for b in [-1i64, 1] {
                for c in 0..=3i64 {
                    let p = [a, b, c];
                    let rats: Vec<Rat> = p.iter().map(|&v| rint(v)).collect();
                    let split = (&enc.plus.eval(&rats) * &enc.minus.eval(&rats)).is_negative();
                    assert!(in_zero_set(&l_c, &p) ^ split, "point {:?}", p);
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 40);
    }

    #[test]
    fn stacked_constraints_carve_the_intersection() {
        // Z(B*l1 + l2) = Z(l1) ∩ Z(l2) once B clears the bound.
        let l1 = LinearForm::from_ints(&[1, 1, 1, -2, -1], 0);
        let l2 = LinearForm::from_ints(&[1, -1, 0, 0, 0], 0);
        let domain = pm(5);
        // Reuse the enforcement bound computation: B = floor(max|l2|/min|l1|)+1.
        let enc = enforce(&l1, &l2, &domain).unwrap();
        let stacked = {
            let weights = l1
                .weights
                .iter()
                .zip(l2.weights.iter())
                .map(|(w1, w2)| &(&enc.bound * w1) + w2)
                .collect();
            LinearForm::new(weights, Rat::zero())
        };
        let z_stacked = zero_set(&stacked, &domain);
        let z_both: Vec<Vec<i64>> = zero_set(&l1, &domain)
            .into_iter()
            .filter(|p| in_zero_set(&l2, p))
            .collect();
        assert_eq!(z_stacked, z_both);
        assert_eq!(z_stacked.len(), 4);
    }

    #[test]
    fn identically_zero_constraint_is_rejected() {
        let l_c = LinearForm::from_ints(&[0, 0], 0);
        let l_r = LinearForm::from_ints(&[1, 1], 0);
        assert!(matches!(
            enforce(&l_c, &l_r, &pm(2)),
            Err(EnforceError::ConstraintVanishes)
        ));
    }
}
