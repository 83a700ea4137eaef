//! Advantage analysis for the monarchy threshold `sign((k-2)x_1 + Σ_{i≥2} x_i)`.
//!
//! The rounding scheme biases each variable by `ε` times its first moment
//! and adds a degree-3 correction: every triple gets `C·ε` times the sign
//! of its moment product scaled by the smallest magnitude (the realizable
//! degree-3 bias rule, [`signed_min_triple`]). The advantage over random,
//! to leading order in `ε`, is then a linear functional of four Fourier
//! coefficients of the threshold, with the gain `C` fixed so that the one
//! satisfying assignment with a dissenting president is exactly tight.

use serde::{Deserialize, Serialize};

use super::{mask_to_pm, RoundingError, SatisfyingMixture};
use crate::hull::{hull_member, HullResult};
use crate::predicate::{fourier_transform, Predicate};
use crate::rat::Rat;

/// Largest `k` for which the hull-membership route enumerates satisfying
/// assignments (the certified-mixture route has no such cap).
pub const HULL_ROUTE_MAX_K: u8 = 12;

/// Fourier data of the monarchy threshold at arity `k`, with the derived
/// degree-3 gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonarchyScheme {
    pub k: u8,
    /// Coefficient of the president variable.
    pub fhat_president: Rat,
    /// Coefficient of any single citizen.
    pub fhat_citizen: Rat,
    /// Coefficient of a citizen triple; must be positive for the scheme.
    pub fhat_citizen_triple: Rat,
    /// Coefficient of the president with two citizens; must be negative.
    pub fhat_president_citizen_pair: Rat,
    /// Degree-3 gain, chosen so the dissenting-president vertex is tight.
    pub c: Rat,
}

/// Computes the scheme constants for arity `k` from the transform of the
/// truth table, checking the two sign preconditions the gain relies on.
pub fn monarchy_scheme(k: u8) -> Result<MonarchyScheme, RoundingError> {
    if k < 5 {
        return Err(RoundingError::ArityFloor {
            k: k.into(),
            min: 5,
        });
    }
    let table = fourier_transform(&Predicate::monarchy(k))?;
    // Bit 0 is the president; bits 1.. are citizens.
    let fhat_president = table.coef(0b0001);
    let fhat_citizen = table.coef(0b0010);
    let fhat_citizen_triple = table.coef(0b1110);
    let fhat_president_citizen_pair = table.coef(0b0111);
    if !fhat_citizen_triple.is_positive() {
        return Err(RoundingError::SignPrecondition {
            k: k.into(),
            name: "citizen-triple coefficient".into(),
            value: fhat_citizen_triple,
        });
    }
    if !fhat_president_citizen_pair.is_negative() {
        return Err(RoundingError::SignPrecondition {
            k: k.into(),
            name: "president-citizen-pair coefficient".into(),
            value: fhat_president_citizen_pair,
        });
    }
    let m = i64::from(k) - 1;
    let citizen_triples = Rat::int(m * (m - 1) * (m - 2) / 6);
    let president_pairs = Rat::int(m * (m - 1) / 2);
    let c = (&fhat_president - Rat::int(i64::from(k) - 2) * &fhat_citizen)
        / (&fhat_citizen_triple * &citizen_triples
            - &fhat_president_citizen_pair * &president_pairs);
    Ok(MonarchyScheme {
        k,
        fhat_president,
        fhat_citizen,
        fhat_citizen_triple,
        fhat_president_citizen_pair,
        c,
    })
}

/// The realizable degree-3 bias rule: the sign of the product times the
/// smallest magnitude. Zero whenever any moment vanishes.
pub fn signed_min_triple(u: &Rat, v: &Rat, w: &Rat) -> Rat {
    let sign = i32::from(u.signum()) * i32::from(v.signum()) * i32::from(w.signum());
    if sign == 0 {
        return Rat::zero();
    }
    let mut m = u.abs();
    for cand in [v.abs(), w.abs()] {
        if cand < m {
            m = cand;
        }
    }
    Rat::int(sign.into()) * m
}

/// The two aggregate triple sums the advantage depends on: over citizen
/// triples, and over president-with-citizen-pair triples. `b[0]` is the
/// president's first moment.
pub fn min_triple_sums(b: &[Rat]) -> (Rat, Rat) {
    let k = b.len();
    let mut citizen_triples = Rat::zero();
    for i in 1..k {
        for j in (i + 1)..k {
            for l in (j + 1)..k {
                citizen_triples += signed_min_triple(&b[i], &b[j], &b[l]);
            }
        }
    }
    let mut president_pairs = Rat::zero();
    for i in 1..k {
        for j in (i + 1)..k {
            president_pairs += signed_min_triple(&b[0], &b[i], &b[j]);
        }
    }
    (citizen_triples, president_pairs)
}

/// Leading-order advantage of the biased rounding at one moment vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonarchyReport {
    pub scheme: MonarchyScheme,
    pub epsilon: Rat,
    /// President first moment.
    pub alpha: Rat,
    /// Sum of the citizen first moments.
    pub beta: Rat,
    pub citizen_triple_sum: Rat,
    pub president_pair_sum: Rat,
    pub advantage_per_epsilon: Rat,
    pub advantage: Rat,
}

fn check_epsilon(epsilon: &Rat) -> Result<(), RoundingError> {
    if !epsilon.is_positive() {
        return Err(RoundingError::EpsilonRange {
            epsilon: epsilon.clone(),
        });
    }
    Ok(())
}

fn advantage_from_moments(scheme: MonarchyScheme, b: &[Rat], epsilon: &Rat) -> MonarchyReport {
    let alpha = b[0].clone();
    let beta: Rat = b[1..].iter().sum();
    let (citizen_triple_sum, president_pair_sum) = min_triple_sums(b);
    let advantage_per_epsilon = &scheme.fhat_president * &alpha
        + &scheme.fhat_citizen * &beta
        + &scheme.c
            * (&scheme.fhat_citizen_triple * &citizen_triple_sum
                + &scheme.fhat_president_citizen_pair * &president_pair_sum);
    let advantage = &advantage_per_epsilon * epsilon;
    MonarchyReport {
        scheme,
        epsilon: epsilon.clone(),
        alpha,
        beta,
        citizen_triple_sum,
        president_pair_sum,
        advantage_per_epsilon,
        advantage,
    }
}

/// Degree-1 coordinates of every satisfying assignment, for hull queries.
fn satisfying_points(k: u8) -> Result<Vec<Vec<Rat>>, RoundingError> {
    let masks = Predicate::monarchy(k).satisfying_masks()?;
    Ok(masks
        .iter()
        .map(|&m| {
            mask_to_pm(k, m)
                .into_iter()
                .map(|s| Rat::int(s.into()))
                .collect()
        })
        .collect())
}

/// Advantage at a bare first-moment vector. Membership in the convex hull
/// of satisfying assignments is established by an exact LP over the
/// enumerated vertices, so `b.len()` is capped at [`HULL_ROUTE_MAX_K`];
/// use [`monarchy_advantage_certified`] to supply a distribution instead.
pub fn monarchy_advantage(b: &[Rat], epsilon: &Rat) -> Result<MonarchyReport, RoundingError> {
    let k = b.len() as u32;
    if k < 5 {
        return Err(RoundingError::ArityFloor { k, min: 5 });
    }
    if k > u32::from(HULL_ROUTE_MAX_K) {
        return Err(RoundingError::DirectEvalCap {
            k,
            cap: HULL_ROUTE_MAX_K.into(),
        });
    }
    check_epsilon(epsilon)?;
    let scheme = monarchy_scheme(k as u8)?;
    let points = satisfying_points(k as u8)?;
    match hull_member(b, &points)? {
        HullResult::Inside { .. } => {}
        HullResult::Outside { normal, threshold } => {
            return Err(RoundingError::OutsideHull { normal, threshold });
        }
    }
    Ok(advantage_from_moments(scheme, b, epsilon))
}

/// Advantage at the moment vector of an explicit distribution over
/// satisfying assignments; the mixture is its own membership certificate.
pub fn monarchy_advantage_certified(
    mix: &SatisfyingMixture,
    epsilon: &Rat,
) -> Result<MonarchyReport, RoundingError> {
    let k = mix.k;
    if k < 5 {
        return Err(RoundingError::ArityFloor {
            k: k.into(),
            min: 5,
        });
    }
    check_epsilon(epsilon)?;
    mix.validate(&Predicate::monarchy(k))?;
    let scheme = monarchy_scheme(k)?;
    let b = mix.first_moments();
    Ok(advantage_from_moments(scheme, &b, epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::check_certificate;
    use crate::rat::{rfrac, rint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k5_constants_match_the_brute_force_table() {
        let s = monarchy_scheme(5).unwrap();
        assert_eq!(s.fhat_president, rfrac(7, 8));
        assert_eq!(s.fhat_citizen, rfrac(1, 8));
        assert_eq!(s.fhat_citizen_triple, rfrac(1, 8));
        assert_eq!(s.fhat_president_citizen_pair, rfrac(-1, 8));
        assert_eq!(s.c, rfrac(2, 5));
    }

    #[test]
    fn scheme_constants_exist_through_k10() {
        for k in 5..=10u8 {
            let s = monarchy_scheme(k).unwrap();
            assert!(s.fhat_citizen_triple.is_positive(), "k={k}");
            assert!(s.fhat_president_citizen_pair.is_negative(), "k={k}");
            assert!(s.c.is_positive(), "k={k}");
        }
        assert!(matches!(
            monarchy_scheme(4),
            Err(RoundingError::ArityFloor { k: 4, min: 5 })
        ));
    }

    #[test]
    fn all_ones_vertex_at_k5() {
        let mix = SatisfyingMixture::vertex(5, 0b11111);
        let report = monarchy_advantage_certified(&mix, &Rat::one()).unwrap();
        assert_eq!(report.alpha, Rat::one());
        assert_eq!(report.beta, rint(4));
        assert_eq!(report.citizen_triple_sum, rint(4));
        assert_eq!(report.president_pair_sum, rint(6));
        assert_eq!(report.advantage_per_epsilon, rfrac(51, 40));
        assert_eq!(report.advantage, rfrac(51, 40));
    }

    #[test]
    fn dissenting_president_vertex_is_exactly_tight() {
        for k in 5..=10u8 {
            // The only satisfying assignment with president -1: all
            // citizens +1. The gain is calibrated to make it tight.
            let mask = ((1u32 << k) - 1) & !1;
            let mix = SatisfyingMixture::vertex(k, mask);
            let report = monarchy_advantage_certified(&mix, &Rat::one()).unwrap();
            assert_eq!(
                report.advantage_per_epsilon, report.scheme.fhat_citizen,
                "k={k}"
            );
        }
    }

    #[test]
    fn every_vertex_clears_the_citizen_coefficient() {
        for k in 5..=7u8 {
            let scheme = monarchy_scheme(k).unwrap();
            for mask in Predicate::monarchy(k).satisfying_masks().unwrap() {
                let mix = SatisfyingMixture::vertex(k, mask);
                let report = monarchy_advantage_certified(&mix, &Rat::one()).unwrap();
                assert!(
                    report.advantage_per_epsilon >= scheme.fhat_citizen,
                    "k={k} mask={mask:b}: {}",
                    report.advantage_per_epsilon
                );
            }
        }
    }

    #[test]
    fn hull_route_agrees_with_certified_mixtures() {
        let k = 6u8;
        let masks = Predicate::monarchy(k).satisfying_masks().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x6ca7);
        let eps = rfrac(1, 3);
        for _ in 0..20 {
            let terms: Vec<(u32, Rat)> = (0..3)
                .map(|_| {
                    let mask = masks[rng.gen_range(0..masks.len())];
                    (mask, rint(rng.gen_range(1..5)))
                })
                .collect();
            let mix = SatisfyingMixture { k, terms };
            let certified = monarchy_advantage_certified(&mix, &eps).unwrap();
            let hull = monarchy_advantage(&mix.first_moments(), &eps).unwrap();
            assert_eq!(certified, hull);
        }
    }

    #[test]
    fn the_all_negative_point_is_separated() {
        let b: Vec<Rat> = (0..6).map(|_| -Rat::one()).collect();
        match monarchy_advantage(&b, &Rat::one()) {
            Err(RoundingError::OutsideHull { normal, threshold }) => {
                let points = satisfying_points(6).unwrap();
                let cert = HullResult::Outside { normal, threshold };
                assert!(check_certificate(&b, &points, &cert));
            }
            other => panic!("expected a separating certificate, got {other:?}"),
        }
    }

    #[test]
    fn epsilon_scales_and_must_be_positive() {
        let mix = SatisfyingMixture::vertex(5, 0b11111);
        let r = monarchy_advantage_certified(&mix, &rfrac(1, 10)).unwrap();
        assert_eq!(r.advantage, rfrac(51, 400));
        assert!(matches!(
            monarchy_advantage_certified(&mix, &Rat::zero()),
            Err(RoundingError::EpsilonRange { .. })
        ));
        let big: Vec<Rat> = (0..13).map(|_| Rat::one()).collect();
        assert!(matches!(
            monarchy_advantage(&big, &Rat::one()),
            Err(RoundingError::DirectEvalCap { k: 13, cap: 12 })
        ));
    }

    #[test]
    fn triple_bias_rule_has_the_scheme_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5173);
        let rat = |rng: &mut ChaCha8Rng| {
            let num = rng.gen_range(-4i64..=4);
            let den = rng.gen_range(1i64..=4);
            rfrac(num, den)
        };
        for _ in 0..200 {
            let u = rat(&mut rng);
            let v = rat(&mut rng);
            let w = rat(&mut rng);
            let base = signed_min_triple(&u, &v, &w);
            // Invariant under permuting the arguments.
            assert_eq!(base, signed_min_triple(&v, &w, &u));
            assert_eq!(base, signed_min_triple(&w, &v, &u));
            // Odd under sign flips: flipping any subset of arguments
            // multiplies the value by the product of the flipped signs.
            for s in 0..8u32 {
                let f = |bit: u32, x: &Rat| {
                    if s >> bit & 1 == 1 {
                        -x.clone()
                    } else {
                        x.clone()
                    }
                };
                let flipped = signed_min_triple(&f(0, &u), &f(1, &v), &f(2, &w));
                let expect = if s.count_ones() % 2 == 1 {
                    -base.clone()
                } else {
                    base.clone()
                };
                assert_eq!(flipped, expect, "flip set {s:03b}");
            }
        }
    }
}
