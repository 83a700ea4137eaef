//! Advantage analysis for the almost-monarchy threshold
//! `sign((k-4)x_1 + Σ_{i≥2} x_i)`.
//!
//! The rounding scheme biases every odd tuple of variables up to degree 7
//! by a symmetric product of first and pairwise moments ([`symmetric_bias`]).
//! Aggregated over all tuples, the leading-order advantage becomes an exact
//! rational functional of nine disconnected pattern sums (the `S` values of
//! the statistics module), with prefactors in the gain `C` and the pair-sum
//! normalizer `E` that telescope cleanly in `Δ = pair_sum/E − 1`.
//!
//! Two independent evaluation routes back the pattern sums — injective
//! enumeration (small arity) and closed forms over connected statistics —
//! and [`threshold_search`] scans arities for the point from which the
//! advantage stays positive over all satisfying assignments and sampled
//! mixtures.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::{
    identity_patterns, s_hypergraph_sum, s_values_from_stats, ConnectedStats, DenseProfile,
};
use super::{EvalRoute, RoundingError, SatisfyingMixture};
use crate::exec::Exec;
use crate::polytope::BiasProfile;
use crate::predicate::{fourier_closed_form, FourierClass, Predicate};
use crate::rat::Rat;

/// Arity floor of the machinery: the normalizer `E` vanishes at `k = 6`.
pub const MACHINERY_MIN_K: u8 = 7;
/// Arity floor of the certified public advantage.
pub const CERTIFIED_MIN_K: u8 = 15;

/// Closed-form constants of the scheme at arity `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostConstants {
    pub k: u8,
    /// Pair-sum normalizer `(k-3)(k-6)/2`.
    pub e: Rat,
    /// Bias gain.
    pub c: Rat,
    pub fhat_president: Rat,
    pub fhat_citizen: Rat,
    pub fhat_citizen_triple: Rat,
    pub fhat_citizen_quintuple: Rat,
    pub fhat_citizen_septuple: Rat,
    pub fhat_president_citizen_pair: Rat,
    pub fhat_president_citizen_quad: Rat,
    pub fhat_president_citizen_hex: Rat,
}

/// Computes the scheme constants from the closed-form Fourier expressions.
pub fn scheme_constants(k: u8) -> Result<AlmostConstants, RoundingError> {
    if k < MACHINERY_MIN_K {
        return Err(RoundingError::ArityFloor {
            k: k.into(),
            min: MACHINERY_MIN_K.into(),
        });
    }
    assert!(k <= 62, "arity too large for 64-bit powers of two");
    let kk = i64::from(k);
    let e = Rat::frac((kk - 3) * (kk - 6), 2);
    let c = Rat::frac(
        (1i64 << (k - 2)) - kk - (kk - 4) * (kk - 2),
        (kk - 2) * (kk - 3),
    );
    let citizens = |a: u32| -> Rat {
        if a > u32::from(k) - 1 {
            // No subset of this shape exists at this arity; the matching
            // pattern sum is vacuous, so zero keeps the constants total.
            return Rat::zero();
        }
        fourier_closed_form(k, FourierClass::Citizens(a)).expect("odd citizen class in range")
    };
    let president_citizens = |a: u32| -> Rat {
        fourier_closed_form(k, FourierClass::PresidentCitizens(a))
            .expect("even president class in range")
    };
    Ok(AlmostConstants {
        k,
        e,
        c,
        fhat_president: fourier_closed_form(k, FourierClass::President)
            .expect("president class is always valid"),
        fhat_citizen: citizens(1),
        fhat_citizen_triple: citizens(3),
        fhat_citizen_quintuple: citizens(5),
        fhat_citizen_septuple: citizens(7),
        fhat_president_citizen_pair: president_citizens(2),
        fhat_president_citizen_quad: president_citizens(4),
        fhat_president_citizen_hex: president_citizens(6),
    })
}

/// The degree-`d` bias rule at one index tuple (`d` odd, at least 3): the
/// symmetric sum over every split of the tuple into one singleton, taking
/// a first moment, and `(d-1)/2` unordered pairs, each taking a pairwise
/// moment. Permutation invariance is built in; flipping the sign of any
/// tuple variable flips exactly one factor of every term.
pub fn symmetric_bias(profile: &BiasProfile, tuple: &[u32]) -> Rat {
    assert!(
        tuple.len() % 2 == 1 && tuple.len() >= 3,
        "tuple length must be odd and at least 3"
    );
    let mut total = Rat::zero();
    for s in 0..tuple.len() {
        let rest: Vec<u32> = tuple
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != s)
            .map(|(_, &v)| v)
            .collect();
        let single = profile.single(tuple[s]);
        for_each_pairing(&rest, &mut |pairs| {
            let mut term = single.clone();
            for &(a, b) in pairs {
                term = term * profile.pair(a, b);
            }
            total += term;
        });
    }
    total
}

/// Enumerates the perfect matchings of an even-length list.
fn for_each_pairing(items: &[u32], f: &mut dyn FnMut(&[(u32, u32)])) {
    fn rec(rem: &mut Vec<u32>, acc: &mut Vec<(u32, u32)>, f: &mut dyn FnMut(&[(u32, u32)])) {
        if rem.is_empty() {
            f(acc);
            return;
        }
        let first = rem.remove(0);
        for i in 0..rem.len() {
            let other = rem.remove(i);
            acc.push((first, other));
            rec(rem, acc, f);
            acc.pop();
            rem.insert(i, other);
        }
        rem.insert(0, first);
    }
    rec(&mut items.to_vec(), &mut Vec::new(), f);
}

/// Leading-order advantage of the scheme at one moment profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostReport {
    pub constants: AlmostConstants,
    pub epsilon: Rat,
    /// President first moment.
    pub alpha: Rat,
    /// Citizen first-moment sum.
    pub beta: Rat,
    /// Citizen pairwise-moment sum.
    pub pair_sum: Rat,
    /// Relative deviation of the pair sum from its normalizer.
    pub delta: Rat,
    /// Slack of the moment bound `(k-4)α + β ≥ 1/3 + (k-6)|Δ|/3`.
    pub lemma_slack: Rat,
    /// The nine disconnected pattern sums, in catalog order.
    pub s_values: [Rat; 9],
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

fn assemble_report(
    constants: AlmostConstants,
    epsilon: &Rat,
    alpha: Rat,
    beta: Rat,
    pair_sum: Rat,
    s: [Rat; 9],
) -> AlmostReport {
    let e = &constants.e;
    let c = &constants.c;
    let u = &pair_sum / e;
    let delta = &u - Rat::one();
    // The degree-wise prefactors below are one telescoping split of
    // 3u - 3u^2 + u^3 = 1 + (u-1)^3; assert the identity on the actual
    // value so the plumbing around it stays honest.
    let lhs = Rat::int(3) * &u - Rat::int(3) * (&u * &u) + u.pow(3);
    let rhs = Rat::one() + delta.pow(3);
    assert_eq!(lhs, rhs, "telescoping identity must hold identically");

    let deg3 = Rat::int(3) * c / e
        * (&constants.fhat_citizen_triple * &s[0]
            + &constants.fhat_president_citizen_pair * (&s[1] + &s[2]));
    let deg5 = Rat::int(6) * c / e.pow(2)
        * (&constants.fhat_citizen_quintuple * &s[3]
            + &constants.fhat_president_citizen_quad * (&s[4] + &s[5]));
    let deg7 = Rat::int(6) * c / e.pow(3)
        * (&constants.fhat_citizen_septuple * &s[6]
            + &constants.fhat_president_citizen_hex * (&s[7] + &s[8]));
    let advantage_per_epsilon = &constants.fhat_president * &alpha
        + &constants.fhat_citizen * &beta
        + deg3
        - deg5
        + deg7;

    let kk = i64::from(constants.k);
    let lemma_slack = Rat::int(kk - 4) * &alpha + &beta
        - Rat::frac(1, 3)
        - Rat::int(kk - 6) * delta.abs() / Rat::int(3);
    let advantage = &advantage_per_epsilon * epsilon;
    AlmostReport {
        constants,
        epsilon: epsilon.clone(),
        alpha,
        beta,
        pair_sum,
        delta,
        lemma_slack,
        s_values: s,
        advantage_per_epsilon,
        advantage,
    }
}

/// Advantage at a moment profile by the chosen pattern-sum route. The
/// direct route enumerates injective placements and carries the usual
/// 12-variable cap; the aggregate route is polynomial in the arity.
pub fn advantage_profile(
    profile: &BiasProfile,
    epsilon: &Rat,
    route: EvalRoute,
) -> Result<AlmostReport, RoundingError> {
    let k = profile.n();
    if k < MACHINERY_MIN_K.into() {
        return Err(RoundingError::ArityFloor {
            k,
            min: MACHINERY_MIN_K.into(),
        });
    }
    check_epsilon(epsilon)?;
    let constants = scheme_constants(k as u8)?;
    match route {
        EvalRoute::Aggregate => {
            let stats = ConnectedStats::compute(&DenseProfile::from_profile(profile));
            let s = s_values_from_stats(&stats);
            Ok(assemble_report(
                constants,
                epsilon,
                stats.alpha,
                stats.beta,
                stats.p_sum,
                s,
            ))
        }
        EvalRoute::Direct => {
            let patterns = identity_patterns();
            let mut s = Vec::with_capacity(patterns.len());
            for pattern in &patterns {
                s.push(s_hypergraph_sum(pattern, profile, EvalRoute::Direct)?);
            }
            let s: [Rat; 9] = s.try_into().expect("nine cataloged patterns");
            let alpha = profile.single(1).clone();
            let beta: Rat = (2..=k).map(|i| profile.single(i)).sum();
            let mut pair_sum = Rat::zero();
            for i in 2..=k {
                for j in (i + 1)..=k {
                    pair_sum += profile.pair(i, j);
                }
            }
            Ok(assemble_report(constants, epsilon, alpha, beta, pair_sum, s))
        }
    }
}

/// Advantage at a certified distribution over satisfying assignments, for
/// arities where the gain and normalizer are in their useful range.
pub fn almost_monarchy_advantage(
    mix: &SatisfyingMixture,
    epsilon: &Rat,
) -> Result<AlmostReport, RoundingError> {
    if mix.k < CERTIFIED_MIN_K {
        return Err(RoundingError::ArityFloor {
            k: mix.k.into(),
            min: CERTIFIED_MIN_K.into(),
        });
    }
    check_epsilon(epsilon)?;
    mix.validate(&Predicate::almost_monarchy(mix.k))?;
    advantage_profile(&mix.profile(), epsilon, EvalRoute::Aggregate)
}

/// Exact evaluation of the pair-deviation floor at one assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaFloorReport {
    pub k: u8,
    /// Value of the threshold's linear form at the assignment.
    pub margin: Rat,
    pub delta: Rat,
    /// `1/3 + (k-6)|Δ|/3`.
    pub floor: Rat,
    pub holds: bool,
}

/// Checks `(k-4)x_1 + Σ_{i≥2} x_i ≥ 1/3 + (k-6)|Δ|/3` exactly at a single
/// satisfying assignment, where `Δ` is its own pair-sum deviation.
pub fn delta_floor_check(x: &[i8]) -> Result<DeltaFloorReport, RoundingError> {
    let k = x.len();
    if k < usize::from(MACHINERY_MIN_K) {
        return Err(RoundingError::ArityFloor {
            k: k as u32,
            min: MACHINERY_MIN_K.into(),
        });
    }
    assert!(k <= 62, "arity too large");
    assert!(
        x.iter().all(|&v| v == 1 || v == -1),
        "entries must be +-1"
    );
    let kk = k as i64;
    let s: i64 = x[1..].iter().map(|&v| i64::from(v)).sum();
    let margin_int = (kk - 4) * i64::from(x[0]) + s;
    // The weights total 2k - 5, which is odd, so the form is never zero.
    if margin_int < 0 {
        let mask = x
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &v)| if v == 1 { m | 1 << i } else { m });
        return Err(RoundingError::NonSatisfying { index: 0, mask });
    }
    let e = Rat::frac((kk - 3) * (kk - 6), 2);
    let pair_sum = Rat::frac(s * s - (kk - 1), 2);
    let delta = pair_sum / e - Rat::one();
    let floor = Rat::frac(1, 3) + Rat::int(kk - 6) * delta.abs() / Rat::int(3);
    let margin = Rat::int(margin_int);
    let holds = margin >= floor;
    Ok(DeltaFloorReport {
        k: k as u8,
        margin,
        delta,
        floor,
        holds,
    })
}

/// One orbit of satisfying assignments under citizen permutations: the
/// president's sign and the number of dissenting citizens determine every
/// statistic of the assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexClass {
    pub president: i8,
    pub dissenters: u32,
}

fn class_margin(k: u32, class: VertexClass) -> i64 {
    let kk = i64::from(k);
    (kk - 4) * i64::from(class.president) + (kk - 1 - 2 * i64::from(class.dissenters))
}

/// All satisfying classes at arity `k`: every dissent count up to `k-3`
/// with the president in favor, and at most one dissenter against a
/// dissenting president.
pub fn satisfying_classes(k: u32) -> Vec<VertexClass> {
    let mut out = Vec::new();
    for dissenters in 0..=(k - 3) {
        out.push(VertexClass {
            president: 1,
            dissenters,
        });
    }
    for dissenters in 0..=1 {
        out.push(VertexClass {
            president: -1,
            dissenters,
        });
    }
    debug_assert!(out.iter().all(|&c| class_margin(k, c) > 0));
    out
}

/// The canonical representative of a class: dissenting citizens first.
pub fn class_assignment(k: u32, class: VertexClass) -> Vec<i8> {
    let mut x = vec![1i8; k as usize];
    x[0] = class.president;
    for slot in x.iter_mut().take(1 + class.dissenters as usize).skip(1) {
        *slot = -1;
    }
    x
}

/// Sampling and execution knobs for [`threshold_search`].
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub vertex_samples: u64,
    pub mixture_samples: u64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            vertex_samples: 10_000,
            mixture_samples: 1_000,
            seed: 0x616c_6d6f,
            exec: Exec::default(),
        }
    }
}

/// Scan result at a single arity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KScan {
    pub k: u32,
    /// Exact advantage-per-epsilon minimum over every satisfying class.
    pub min_class_advantage: Rat,
    pub worst_class: VertexClass,
    /// Minimum over the sampled mixtures of satisfying assignments.
    pub min_mixture_advantage: Rat,
    pub worst_mixture_trial: u64,
    /// Pair-deviation floor held at every satisfying class.
    pub floor_ok: bool,
    pub passes: bool,
}

/// Outcome of the arity scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub k_min: u32,
    pub k_max: u32,
    pub vertex_samples: u64,
    pub mixture_samples: u64,
    pub seed: u64,
    /// Smallest scanned arity from which every scan up to `k_max` passes.
    pub k_star: Option<u32>,
    pub per_k: Vec<KScan>,
}

/// A uniformly random satisfying assignment, by rejection from the cube.
fn sample_assignment<R: Rng>(k: u32, rng: &mut R) -> Vec<i8> {
    loop {
        let bits: u64 = rng.gen();
        let president = if bits & 1 == 1 { 1i8 } else { -1 };
        let mut x = vec![0i8; k as usize];
        x[0] = president;
        let mut s = 0i64;
        for (i, slot) in x.iter_mut().enumerate().skip(1) {
            let v = if bits >> i & 1 == 1 { 1i8 } else { -1 };
            *slot = v;
            s += i64::from(v);
        }
        if (i64::from(k) - 4) * i64::from(president) + s > 0 {
            return x;
        }
    }
}

fn scan_k(k: u32, cfg: &SearchConfig) -> Result<KScan, RoundingError> {
    let constants = scheme_constants(k as u8)?;
    // Exact pass over every satisfying class, via fixed-point statistics.
    let mut class_advantage: HashMap<VertexClass, Rat> = HashMap::new();
    let mut min_class: Option<(Rat, VertexClass)> = None;
    let mut floor_ok = true;
    for class in satisfying_classes(k) {
        let x = class_assignment(k, class);
        let stats = ConnectedStats::compute(&DenseProfile::from_assignment(&x)).to_rats(1);
        let s = s_values_from_stats(&stats);
        let report = assemble_report(
            constants.clone(),
            &Rat::one(),
            stats.alpha,
            stats.beta,
            stats.p_sum,
            s,
        );
        if !delta_floor_check(&x)?.holds {
            floor_ok = false;
        }
        let advantage = report.advantage_per_epsilon;
        if min_class.as_ref().map_or(true, |(m, _)| advantage < *m) {
            min_class = Some((advantage.clone(), class));
        }
        class_advantage.insert(class, advantage);
    }
    let (min_class_advantage, worst_class) = min_class.expect("at least one satisfying class");

    // Sampled vertices resolve to their class, whose advantage is exact.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::from(k) << 32 | 0xFFFF_FFFF);
    let mut sampled_positive = true;
    for _ in 0..cfg.vertex_samples {
        let x = sample_assignment(k, &mut rng);
        let class = VertexClass {
            president: x[0],
            dissenters: x[1..].iter().filter(|&&v| v == -1).count() as u32,
        };
        if !class_advantage[&class].is_positive() {
            sampled_positive = false;
        }
    }

    // Sampled mixtures: a few satisfying assignments with integer weights,
    // evaluated exactly through the fixed-point aggregate route. The merge
    // breaks ties by trial index, so the result is independent of how the
    // range was split across workers.
    assert!(cfg.mixture_samples >= 1, "need at least one mixture trial");
    type Acc = Option<(Rat, u64)>;
    let worst = cfg.exec.map_reduce(
        0,
        cfg.mixture_samples,
        || None,
        |trial| -> Acc {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::from(k) << 32 | trial);
            let support = rng.gen_range(3..=6);
            let terms: Vec<(Vec<i8>, i64)> = (0..support)
                .map(|_| (sample_assignment(k, &mut rng), rng.gen_range(1i64..=40)))
                .collect();
            let (dense, scale) = DenseProfile::from_weighted_assignments(k as usize, &terms)
                .expect("weights are positive");
            let stats = ConnectedStats::compute(&dense).to_rats(scale);
            let s = s_values_from_stats(&stats);
            let report = assemble_report(
                constants.clone(),
                &Rat::one(),
                stats.alpha,
                stats.beta,
                stats.p_sum,
                s,
            );
            Some((report.advantage_per_epsilon, trial))
        },
        |a, b| match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => {
                if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) {
                    Some(y)
                } else {
                    Some(x)
                }
            }
        },
    );
    let (min_mixture_advantage, worst_mixture_trial) =
        worst.expect("at least one mixture trial ran");

    let passes = min_class_advantage.is_positive()
        && sampled_positive
        && min_mixture_advantage.is_positive()
        && floor_ok;
    Ok(KScan {
        k,
        min_class_advantage,
        worst_class,
        min_mixture_advantage,
        worst_mixture_trial,
        floor_ok,
        passes,
    })
}

/// Scans arities `k_min..=k_max` and reports the smallest arity from which
/// every scan passes: positive advantage at every satisfying class, every
/// sampled vertex, and every sampled mixture, with the pair-deviation
/// floor holding throughout. Nothing about the answer is assumed; a scan
/// that fails everywhere reports `k_star = None` with the worst witnesses.
pub fn threshold_search(
    k_min: u32,
    k_max: u32,
    cfg: &SearchConfig,
) -> Result<ThresholdReport, RoundingError> {
    assert!(k_min <= k_max, "empty arity range");
    let mut per_k = Vec::with_capacity((k_max - k_min + 1) as usize);
    for k in k_min..=k_max {
        per_k.push(scan_k(k, cfg)?);
    }
    let mut k_star = None;
    for scan in per_k.iter().rev() {
        if scan.passes {
            k_star = Some(scan.k);
        } else {
            break;
        }
    }
    Ok(ThresholdReport {
        k_min,
        k_max,
        vertex_samples: cfg.vertex_samples,
        mixture_samples: cfg.mixture_samples,
        seed: cfg.seed,
        k_star,
        per_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::fourier_transform;
    use crate::rat::{rfrac, rint};
    use crate::rounding::stats::random_small_profile;

    #[test]
    fn constants_at_k15_and_the_arity_floor() {
        let c = scheme_constants(15).unwrap();
        assert_eq!(c.e, rint(54));
        assert_eq!(c.c, rfrac(8034, 156));
        assert!(matches!(
            scheme_constants(6),
            Err(RoundingError::ArityFloor { k: 6, min: 7 })
        ));
    }

    #[test]
    fn closed_form_constants_match_the_transform_at_k9() {
        let table = fourier_transform(&Predicate::almost_monarchy(9)).unwrap();
        let c = scheme_constants(9).unwrap();
        assert_eq!(c.fhat_president, table.coef(0b1));
        assert_eq!(c.fhat_citizen, table.coef(0b10));
        assert_eq!(c.fhat_citizen_triple, table.coef(0b1110));
        assert_eq!(c.fhat_citizen_quintuple, table.coef(0b11_1110));
        assert_eq!(c.fhat_citizen_septuple, table.coef(0b1111_1110));
        assert_eq!(c.fhat_president_citizen_pair, table.coef(0b111));
        assert_eq!(c.fhat_president_citizen_quad, table.coef(0b1_1111));
        assert_eq!(c.fhat_president_citizen_hex, table.coef(0b111_1111));
    }

    #[test]
    fn aggregate_route_matches_direct_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xa66);
        let eps = rfrac(1, 7);
        for k in [9u32, 10] {
            for _ in 0..2 {
                let profile = random_small_profile(k, &mut rng);
                let direct = advantage_profile(&profile, &eps, EvalRoute::Direct).unwrap();
                let aggregate = advantage_profile(&profile, &eps, EvalRoute::Aggregate).unwrap();
                assert_eq!(direct, aggregate, "k={k}");
            }
        }
    }

    #[test]
    fn direct_route_keeps_the_enumeration_cap() {
        let profile = BiasProfile::zero(13);
        assert!(matches!(
            advantage_profile(&profile, &Rat::one(), EvalRoute::Direct),
            Err(RoundingError::DirectEvalCap { k: 13, cap: 12 })
        ));
    }

    #[test]
    fn all_ones_vertex_delta_and_slack_at_k20() {
        let profile = SatisfyingMixture::vertex(20, (1 << 20) - 1).profile();
        let report = advantage_profile(&profile, &Rat::one(), EvalRoute::Aggregate).unwrap();
        // pair_sum = C(19, 2) = 171 against E = 119.
        assert_eq!(report.pair_sum, rint(171));
        assert_eq!(report.delta, rfrac(52, 119));
        assert!(report.lemma_slack.is_positive());
        assert!(report.advantage_per_epsilon.is_positive());
    }

    #[test]
    fn minimal_margin_vertex_statistics_at_k20() {
        // President in favor, all but two citizens dissent: margin exactly 1.
        let class = VertexClass {
            president: 1,
            dissenters: 17,
        };
        let x = class_assignment(20, class);
        let floor = delta_floor_check(&x).unwrap();
        assert_eq!(floor.margin, Rat::one());
        assert!(floor.holds);
        let profile = SatisfyingMixture::vertex(
            20,
            x.iter()
                .enumerate()
                .fold(0u32, |m, (i, &v)| if v == 1 { m | 1 << i } else { m }),
        )
        .profile();
        let report = advantage_profile(&profile, &Rat::one(), EvalRoute::Aggregate).unwrap();
        // (k^2 - 11k + 26)/2 at k = 20.
        assert_eq!(report.pair_sum, rint(103));
    }

    #[test]
    fn dissenting_president_floor_and_rejection_at_k20() {
        let one_dissenter = class_assignment(
            20,
            VertexClass {
                president: -1,
                dissenters: 1,
            },
        );
        let floor = delta_floor_check(&one_dissenter).unwrap();
        assert_eq!(floor.margin, Rat::one());
        assert!(floor.holds);
        let two_dissenters = class_assignment(
            20,
            VertexClass {
                president: -1,
                dissenters: 2,
            },
        );
        assert!(matches!(
            delta_floor_check(&two_dissenters),
            Err(RoundingError::NonSatisfying { .. })
        ));
    }

    #[test]
    fn bias_rule_counts_and_symmetries() {
        // On the all-ones profile the rule counts its symmetric terms:
        // one split per singleton choice and pairing of the rest.
        let ones = SatisfyingMixture::vertex(9, (1 << 9) - 1).profile();
        assert_eq!(symmetric_bias(&ones, &[2, 3, 4]), rint(3));
        assert_eq!(symmetric_bias(&ones, &[2, 3, 4, 5, 6]), rint(15));
        assert_eq!(symmetric_bias(&ones, &[2, 3, 4, 5, 6, 7, 8]), rint(105));

        let mut rng = ChaCha8Rng::seed_from_u64(0xb1a5);
        let profile = random_small_profile(9, &mut rng);
        for tuple in [vec![2u32, 5, 7], vec![2u32, 3, 5, 7, 8]] {
            let base = symmetric_bias(&profile, &tuple);
            // Permutation invariance.
            let mut rotated = tuple.clone();
            rotated.rotate_left(1);
            assert_eq!(base, symmetric_bias(&profile, &rotated));
            let mut swapped = tuple.clone();
            swapped.swap(0, tuple.len() - 1);
            assert_eq!(base, symmetric_bias(&profile, &swapped));
            // Odd covariance under sign flips of any argument subset.
            for flips in 1u32..1 << tuple.len() {
                let mut flipped = profile.clone();
                for (pos, &v) in tuple.iter().enumerate() {
                    if flips >> pos & 1 == 1 {
                        flipped.set_single(v, -flipped.single(v).clone());
                        // Negating every pair at v twice, once per flipped
                        // endpoint, restores pairs inside the flip set —
                        // exactly the sign rule for flipping a variable.
                        for w in 1..=9u32 {
                            if w != v {
                                let (a, b) = if w < v { (w, v) } else { (v, w) };
                                flipped.set_pair(a, b, -flipped.pair(a, b).clone()).unwrap();
                            }
                        }
                    }
                }
                let sign = if flips.count_ones() % 2 == 1 { -1 } else { 1 };
                let expect = Rat::int(sign) * &base;
                assert_eq!(
                    symmetric_bias(&flipped, &tuple),
                    expect,
                    "flip set {flips:b}"
                );
            }
        }
    }

    #[test]
    fn certified_route_validates_and_gates() {
        let low = SatisfyingMixture::vertex(10, (1 << 10) - 1);
        assert!(matches!(
            almost_monarchy_advantage(&low, &Rat::one()),
            Err(RoundingError::ArityFloor { k: 10, min: 15 })
        ));
        let k = 16u8;
        let all_ones = SatisfyingMixture::vertex(k, (1u32 << k) - 1);
        let report = almost_monarchy_advantage(&all_ones, &rfrac(1, 5)).unwrap();
        assert!(report.advantage_per_epsilon.is_positive());
        assert_eq!(
            report.advantage,
            &report.advantage_per_epsilon * &rfrac(1, 5)
        );
        // President +1 with every citizen dissenting does not satisfy.
        let bad = SatisfyingMixture::vertex(k, 0b1);
        assert!(matches!(
            almost_monarchy_advantage(&bad, &Rat::one()),
            Err(RoundingError::NonSatisfying { .. })
        ));
        assert!(matches!(
            almost_monarchy_advantage(&all_ones, &Rat::zero()),
            Err(RoundingError::EpsilonRange { .. })
        ));
    }

    #[test]
    fn threshold_scan_structure_and_determinism() {
        let cfg = SearchConfig {
            vertex_samples: 100,
            mixture_samples: 5,
            seed: 0x5eed,
            exec: Exec::Parallel,
        };
        let report = threshold_search(15, 17, &cfg).unwrap();
        assert_eq!(report.per_k.len(), 3);
        assert_eq!(report.per_k[0].k, 15);
        // k_star marks the start of the passing suffix, whatever it is.
        match report.k_star {
            Some(v) => {
                assert!(report.per_k.iter().filter(|s| s.k >= v).all(|s| s.passes));
                if v > 15 {
                    assert!(!report.per_k.iter().find(|s| s.k == v - 1).unwrap().passes);
                }
            }
            None => assert!(!report.per_k.last().unwrap().passes),
        }
        let sequential = SearchConfig {
            exec: Exec::Sequential,
            ..cfg
        };
        assert_eq!(report, threshold_search(15, 17, &sequential).unwrap());
    }
}
