//! The rounding-operator algebra on monomial expectation tables.
//!
//! A rounding scheme is described by what it does to every monomial
//! expectation `E[x_I]`. Starting from the all-ones scheme (every variable
//! set to `+1`, so every expectation is 1), three operators compose:
//!
//! * [`apply_chi_single`] — independent per-variable sign flips with mean
//!   `alpha * b_i`; its effect on every monomial is exact.
//! * [`apply_chi_pair`] — a random-hyperplane sign assignment driven by the
//!   Gram vectors of `alpha*B + (1-alpha)*Id`; overlap 0/1/2 with the
//!   operator's variables has a closed form, higher overlaps are estimated
//!   by seeded Monte Carlo with a reported standard error.
//! * [`apply_parity`] — a signed average over part-wise sign flips that keeps
//!   exactly the monomials hitting every part an odd number of times.
//!
//! [`synthesize_monomial`] composes these per the standard recipe to realize
//! a target monomial in the (pairwise) biases at leading order in `alpha`,
//! and reports both the on-target comparison and an empirical decay check
//! for the off-target monomials.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{McConfig, RoundingError};
use crate::matrix::{ldl_factor, SymMatrix};
use crate::polytope::BiasProfile;
use crate::rat::Rat;

/// Largest arity an expectation table will materialize (`2^n` entries).
pub const EXPECTATION_ARITY_CAP: u32 = 16;

/// An expected monomial value: exact where the operator algebra is exact,
/// real with a standard error once real arithmetic or Monte Carlo enters.
/// Deterministic real values carry standard error zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    Exact { value: Rat },
    Real { value: f64, std_error: f64 },
}

impl Expectation {
    pub fn exact(value: Rat) -> Self {
        Expectation::Exact { value }
    }

    pub fn real(value: f64, std_error: f64) -> Self {
        Expectation::Real { value, std_error }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Expectation::Exact { value } => value.to_f64(),
            Expectation::Real { value, .. } => *value,
        }
    }

    pub fn std_error(&self) -> f64 {
        match self {
            Expectation::Exact { .. } => 0.0,
            Expectation::Real { std_error, .. } => *std_error,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Expectation::Exact { value } if value.is_zero())
    }

    /// Multiplies by an exact rational factor, staying exact where possible.
    fn mul_exact(&self, m: &Rat) -> Expectation {
        if m.is_zero() {
            return Expectation::exact(Rat::zero());
        }
        match self {
            Expectation::Exact { value } => Expectation::exact(value * m),
            Expectation::Real { value, std_error } => {
                let mf = m.to_f64();
                Expectation::real(value * mf, std_error * mf.abs())
            }
        }
    }

    /// Multiplies by a real factor with its own standard error; errors
    /// combine in quadrature. A factor that is exactly zero with no
    /// uncertainty, or an exactly zero input, collapses to exact zero.
    fn mul_noisy(&self, m: f64, m_se: f64) -> Expectation {
        if self.is_exact_zero() || (m == 0.0 && m_se == 0.0) {
            return Expectation::exact(Rat::zero());
        }
        let v = self.to_f64();
        let v_se = self.std_error();
        let se = ((v * m_se).powi(2) + (m * v_se).powi(2)).sqrt();
        Expectation::real(v * m, se)
    }
}

/// Seed and sample count of one Monte Carlo estimation pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McRecord {
    pub seed: u64,
    pub samples: u64,
}

/// Expected values of every monomial `x_I` over `n` variables, indexed by
/// the subset bitmask (bit `i` is variable `i + 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationMap {
    n: u32,
    values: Vec<Expectation>,
    /// Signed linear combinations of schemes (the parity operator, mixture
    /// combination) need not keep `E[x_empty] = 1`.
    signed: bool,
    records: Vec<McRecord>,
}

impl ExpectationMap {
    /// The trivial scheme fixing every variable to `+1`: every expectation 1.
    pub fn all_ones(n: u32) -> Result<Self, RoundingError> {
        if n > EXPECTATION_ARITY_CAP {
            return Err(RoundingError::ArityCap {
                n,
                cap: EXPECTATION_ARITY_CAP,
            });
        }
        Ok(ExpectationMap {
            n,
            values: vec![Expectation::exact(Rat::one()); 1usize << n],
            signed: false,
            records: Vec::new(),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn value(&self, mask: u32) -> &Expectation {
        &self.values[mask as usize]
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn records(&self) -> &[McRecord] {
        &self.records
    }

    /// Checks `E[x_empty] = 1` (unless signed) and that every value lies in
    /// `[-1, 1]`, with three standard errors of slack on stochastic entries.
    pub fn validate(&self) -> Result<(), RoundingError> {
        if !self.signed && *self.value(0) != Expectation::exact(Rat::one()) {
            return Err(RoundingError::BaseNotOne);
        }
        for (mask, v) in self.values.iter().enumerate() {
            let ok = match v {
                Expectation::Exact { value } => value.abs() <= Rat::one(),
                Expectation::Real { value, std_error } => {
                    value.abs() <= 1.0 + 3.0 * std_error + 1e-9
                }
            };
            if !ok {
                return Err(RoundingError::ExpectationRange { mask: mask as u32 });
            }
        }
        Ok(())
    }
}

fn check_vars(n: u32, vars: &[u32]) -> Result<(), RoundingError> {
    for &v in vars {
        if v < 1 || v > n {
            return Err(RoundingError::VarRange { var: v, n });
        }
    }
    Ok(())
}

/// Bitmask of a variable set; errors on repeated variables.
fn vars_mask(n: u32, vars: &[u32]) -> Result<u32, RoundingError> {
    check_vars(n, vars)?;
    let mut mask = 0u32;
    for &v in vars {
        let bit = 1u32 << (v - 1);
        if mask & bit != 0 {
            return Err(RoundingError::OverlappingParts { var: v });
        }
        mask |= bit;
    }
    Ok(mask)
}

fn check_rate(alpha: &Rat) -> Result<(), RoundingError> {
    if alpha.is_negative() || *alpha > Rat::one() {
        return Err(RoundingError::NoiseRate {
            rate: alpha.clone(),
        });
    }
    Ok(())
}

/// Per-variable sign flips: each `i` in `vars` keeps its sign with
/// probability `(1 + alpha*b_i)/2`, so every monomial expectation multiplies
/// by the exact factor `prod_{i in I and vars} alpha*b_i`.
pub fn apply_chi_single(
    map: ExpectationMap,
    alpha: &Rat,
    vars: &[u32],
    profile: &BiasProfile,
) -> Result<ExpectationMap, RoundingError> {
    assert_eq!(map.n(), profile.n(), "map and profile arity mismatch");
    check_rate(alpha)?;
    let vmask = vars_mask(map.n(), vars)?;
    let factor: Vec<Rat> = (0..map.n())
        .map(|i| alpha * profile.single(i + 1))
        .collect();
    let mut map = map;
    for (mask, value) in map.values.iter_mut().enumerate() {
        let mut hit = mask as u32 & vmask;
        while hit != 0 {
            let i = hit.trailing_zeros();
            *value = value.mul_exact(&factor[i as usize]);
            hit &= hit - 1;
        }
    }
    Ok(map)
}

/// The random-hyperplane operator on `left ∪ right`: finds Gram vectors
/// `u_i` with `u_i · u_j = (alpha*B + (1-alpha)*Id)_{ij}`, draws a random
/// direction, and multiplies each touched variable by `sign(w · u_i)`.
///
/// Overlap 0 with `I` leaves the expectation unchanged, overlap 1 zeroes it,
/// overlap 2 at `{i,j}` multiplies by `(2/pi)*arcsin` of the matrix entry,
/// and overlap 3 or more is estimated by Monte Carlo (per-subset generator
/// streams; one record per operator application that sampled).
pub fn apply_chi_pair(
    map: ExpectationMap,
    alpha: &Rat,
    left: &[u32],
    right: &[u32],
    profile: &BiasProfile,
    cfg: &McConfig,
) -> Result<ExpectationMap, RoundingError> {
    assert_eq!(map.n(), profile.n(), "map and profile arity mismatch");
    check_rate(alpha)?;
    let n = map.n();
    let lmask = vars_mask(n, left)?;
    let rmask = vars_mask(n, right)?;
    if lmask & rmask != 0 {
        let var = (lmask & rmask).trailing_zeros() + 1;
        return Err(RoundingError::OverlappingParts { var });
    }
    let umask = lmask | rmask;

    // The full correlation matrix alpha*B + (1-alpha)*Id: unit diagonal
    // (biases of squares are 1), scaled pair moments elsewhere.
    let nn = n as usize;
    let mut corr = SymMatrix::identity(nn);
    for i in 1..=nn {
        for j in (i + 1)..=nn {
            corr.set(i - 1, j - 1, alpha * profile.pair(i as u32, j as u32));
        }
    }
    let factor = ldl_factor(&corr)?;
    let mut gram: Option<Vec<Vec<f64>>> = None;
    let mut sampled = false;

    let mut map = map;
    for (mask, value) in map.values.iter_mut().enumerate() {
        let hit = mask as u32 & umask;
        match hit.count_ones() {
            0 => {}
            1 => *value = Expectation::exact(Rat::zero()),
            2 => {
                let i = hit.trailing_zeros();
                let j = 31 - hit.leading_zeros();
                let entry = alpha * profile.pair(i + 1, j + 1);
                let mult = entry.to_f64().asin() / FRAC_PI_2;
                *value = value.mul_noisy(mult, 0.0);
            }
            _ => {
                if value.is_exact_zero() {
                    continue;
                }
                let rows = gram.get_or_insert_with(|| factor.gram_rows_f64());
                let members: Vec<usize> = (0..n)
                    .filter(|i| hit >> i & 1 == 1)
                    .map(|i| i as usize)
                    .collect();
                let (mean, se) = sign_product_estimate(rows, &members, cfg, mask as u64);
                sampled = true;
                *value = value.mul_noisy(mean, se);
            }
        }
    }
    if sampled {
        map.records.push(McRecord {
            seed: cfg.seed,
            samples: cfg.samples,
        });
    }
    Ok(map)
}

/// Monte Carlo estimate of `E[prod sign(g · u_i)]` over standard normal `g`,
/// with the sample standard error of the mean. `sign(0)` counts as `+1`.
fn sign_product_estimate(
    gram: &[Vec<f64>],
    members: &[usize],
    cfg: &McConfig,
    stream: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let dim = gram[0].len();
    let mut g = vec![0.0f64; dim];
    let mut sum = 0i64;
    for _ in 0..cfg.samples {
        for x in g.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let mut prod = 1i64;
        for &i in members {
            let dot: f64 = gram[i].iter().zip(&g).map(|(a, b)| a * b).sum();
            if dot < 0.0 {
                prod = -prod;
            }
        }
        sum += prod;
    }
    let mean = sum as f64 / cfg.samples as f64;
    let var = (1.0 - mean * mean).max(0.0);
    let denom = cfg.samples.saturating_sub(1).max(1);
    (mean, (var / denom as f64).sqrt())
}

/// The signed part-parity average: keeps `E[x_I]` exactly when `I` meets
/// every part an odd number of times and zeroes it otherwise (the empty
/// monomial included, so the result is a signed map).
pub fn apply_parity(
    map: ExpectationMap,
    parts: &[Vec<u32>],
) -> Result<ExpectationMap, RoundingError> {
    let n = map.n();
    let mut seen = 0u32;
    let mut part_masks = Vec::with_capacity(parts.len());
    for part in parts {
        let pm = vars_mask(n, part)?;
        if seen & pm != 0 {
            let var = (seen & pm).trailing_zeros() + 1;
            return Err(RoundingError::OverlappingParts { var });
        }
        seen |= pm;
        part_masks.push(pm);
    }
    if part_masks.is_empty() {
        return Ok(map);
    }
    let mut map = map;
    for (mask, value) in map.values.iter_mut().enumerate() {
        let odd_everywhere = part_masks
            .iter()
            .all(|pm| (mask as u32 & pm).count_ones() % 2 == 1);
        if !odd_everywhere {
            *value = Expectation::exact(Rat::zero());
        }
    }
    map.signed = true;
    Ok(map)
}

/// One operator in a scheme descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum SchemeOp {
    ChiSingle { alpha: Rat, vars: Vec<u32> },
    ChiPair { alpha: Rat, left: Vec<u32>, right: Vec<u32> },
    Parity { parts: Vec<Vec<u32>> },
}

/// A coefficient together with an operator composition (applied left to
/// right to the all-ones base).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeTerm {
    pub coefficient: f64,
    pub ops: Vec<SchemeOp>,
}

/// A linear combination of rounding schemes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedSchemeMixture {
    pub n: u32,
    pub terms: Vec<SchemeTerm>,
}

impl SignedSchemeMixture {
    /// Evaluates every term from the all-ones base and combines them with
    /// the term coefficients. A single term with coefficient exactly 1 is
    /// returned as-is, preserving exact entries.
    pub fn evaluate(
        &self,
        profile: &BiasProfile,
        cfg: &McConfig,
    ) -> Result<ExpectationMap, RoundingError> {
        assert_eq!(self.n, profile.n(), "scheme and profile arity mismatch");
        let mut maps = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let mut map = ExpectationMap::all_ones(self.n)?;
            for op in &term.ops {
                map = match op {
                    SchemeOp::ChiSingle { alpha, vars } => {
                        apply_chi_single(map, alpha, vars, profile)?
                    }
                    SchemeOp::ChiPair { alpha, left, right } => {
                        apply_chi_pair(map, alpha, left, right, profile, cfg)?
                    }
                    SchemeOp::Parity { parts } => apply_parity(map, parts)?,
                };
            }
            maps.push(map);
        }
        if maps.len() == 1 && self.terms[0].coefficient == 1.0 {
            return Ok(maps.pop().unwrap());
        }
        let mut out = ExpectationMap::all_ones(self.n)?;
        out.signed = maps.iter().any(|m| m.signed);
        for m in &maps {
            out.records.extend(m.records.iter().copied());
        }
        for mask in 0..out.values.len() {
            let mut total = 0.0f64;
            let mut var = 0.0f64;
            let mut all_exact_zero = true;
            for (term, m) in self.terms.iter().zip(&maps) {
                let v = &m.values[mask];
                if !v.is_exact_zero() {
                    all_exact_zero = false;
                }
                total += term.coefficient * v.to_f64();
                var += (term.coefficient * v.std_error()).powi(2);
            }
            out.values[mask] = if all_exact_zero {
                Expectation::exact(Rat::zero())
            } else {
                Expectation::real(total, var.sqrt())
            };
        }
        Ok(out)
    }
}

/// A monomial in part biases: `singles` lists part indices appearing as a
/// first-moment factor, `pairs` lists part-index pairs appearing as a
/// pairwise-moment factor. Every part of the partition must be used exactly
/// once across both lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialSpec {
    pub singles: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
}

impl MonomialSpec {
    /// Total degree: one per factor.
    pub fn degree(&self) -> u32 {
        (self.singles.len() + self.pairs.len()) as u32
    }

    fn check_coverage(&self, part_count: usize) -> Result<(), RoundingError> {
        let mut used = vec![0usize; part_count];
        let mut touch = |a: usize| -> Result<(), RoundingError> {
            if a >= part_count {
                return Err(RoundingError::PartCoverage);
            }
            used[a] += 1;
            Ok(())
        };
        for &a in &self.singles {
            touch(a)?;
        }
        for &(a, c) in &self.pairs {
            if a == c {
                return Err(RoundingError::PartCoverage);
            }
            touch(a)?;
            touch(c)?;
        }
        if used.iter().any(|&u| u != 1) {
            return Err(RoundingError::PartCoverage);
        }
        Ok(())
    }
}

/// On-target comparison at one monomial hitting each part exactly once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub mask: u32,
    /// The scheme's expectation at this monomial.
    pub achieved: Expectation,
    /// `alpha^deg` times the target monomial at this image.
    pub first_order: f64,
    /// Same with each pair factor carrying its `2/pi` constant — the exact
    /// leading coefficient of the composed operators.
    pub leading: f64,
}

/// Two-point decay measurement at one off-target surviving monomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub mask: u32,
    pub at_alpha: Expectation,
    pub at_half: Expectation,
    /// `log2(|at_alpha| / |at_half|)`; the composition promises at least
    /// `degree + 1`. `None` when the half-noise value drowns in Monte Carlo
    /// error (five standard errors) and the ratio would be meaningless.
    pub observed_exponent: Option<f64>,
}

/// Result of composing and probing a monomial synthesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub scheme: SignedSchemeMixture,
    pub alpha: Rat,
    pub degree: u32,
    pub targets: Vec<TargetRow>,
    pub off_target: Vec<RatioRow>,
    pub records: Vec<McRecord>,
}

fn ops_for(spec: &MonomialSpec, partition: &[Vec<u32>], alpha: &Rat) -> Vec<SchemeOp> {
    let mut ops = Vec::new();
    for &a in &spec.singles {
        ops.push(SchemeOp::ChiSingle {
            alpha: alpha.clone(),
            vars: partition[a].clone(),
        });
    }
    for &(a, c) in &spec.pairs {
        ops.push(SchemeOp::ChiPair {
            alpha: alpha.clone(),
            left: partition[a].clone(),
            right: partition[c].clone(),
        });
    }
    ops.push(SchemeOp::Parity {
        parts: partition.to_vec(),
    });
    ops
}

/// Composes the operator recipe for a monomial in the part biases — one
/// sign-flip operator per single factor, one hyperplane operator per pair
/// factor, the parity operator last — and probes the result: every monomial
/// hitting each part exactly once is compared against `alpha^deg` times the
/// target, and every other surviving monomial is measured at `alpha` and
/// `alpha/2` to confirm higher-order decay.
///
/// The parts must partition the whole variable set: a variable outside
/// every part would pass the final parity untouched and contribute
/// surviving monomials with no decay in `alpha`.
pub fn synthesize_monomial(
    spec: &MonomialSpec,
    partition: &[Vec<u32>],
    alpha: &Rat,
    profile: &BiasProfile,
    cfg: &McConfig,
) -> Result<SynthesisReport, RoundingError> {
    check_rate(alpha)?;
    spec.check_coverage(partition.len())?;
    if partition.iter().any(|part| part.is_empty()) {
        return Err(RoundingError::PartCoverage);
    }
    let n = profile.n();
    // Disjointness and ranges are rechecked by the operators; failing early
    // gives the caller one error site.
    let mut seen = 0u32;
    for part in partition {
        let pm = vars_mask(n, part)?;
        if seen & pm != 0 {
            let var = (seen & pm).trailing_zeros() + 1;
            return Err(RoundingError::OverlappingParts { var });
        }
        seen |= pm;
    }
    if seen != (1u32 << n) - 1 {
        return Err(RoundingError::PartCoverage);
    }

    let scheme = SignedSchemeMixture {
        n,
        terms: vec![SchemeTerm {
            coefficient: 1.0,
            ops: ops_for(spec, partition, alpha),
        }],
    };
    let half = alpha / &Rat::int(2);
    let scheme_half = SignedSchemeMixture {
        n,
        terms: vec![SchemeTerm {
            coefficient: 1.0,
            ops: ops_for(spec, partition, &half),
        }],
    };
    let map = scheme.evaluate(profile, cfg)?;
    let map_half = scheme_half.evaluate(profile, cfg)?;

    // Every way of picking one variable from each part, as bitmasks.
    let mut target_masks = vec![0u32];
    for part in partition {
        let mut next = Vec::with_capacity(target_masks.len() * part.len());
        for base in &target_masks {
            for &v in part {
                next.push(base | 1u32 << (v - 1));
            }
        }
        target_masks = next;
    }

    let degree = spec.degree();
    let pair_constant = (2.0 / PI).powi(spec.pairs.len() as i32);
    let mut targets = Vec::with_capacity(target_masks.len());
    for &mask in &target_masks {
        // The variable this monomial picks from a given part.
        let pick = |a: usize| -> u32 {
            let pm: u32 = partition[a].iter().map(|v| 1u32 << (v - 1)).sum();
            (mask & pm).trailing_zeros() + 1
        };
        let mut monomial = Rat::one();
        for &a in &spec.singles {
            monomial = monomial * profile.single(pick(a));
        }
        for &(a, c) in &spec.pairs {
            monomial = monomial * profile.pair(pick(a), pick(c));
        }
        let first_order = (alpha.pow(degree) * monomial).to_f64();
        targets.push(TargetRow {
            mask,
            achieved: map.value(mask).clone(),
            first_order,
            leading: first_order * pair_constant,
        });
    }

    let part_masks: Vec<u32> = partition
        .iter()
        .map(|part| part.iter().map(|v| 1u32 << (v - 1)).sum())
        .collect();
    let mut off_target = Vec::new();
    for mask in 0..1u32 << n {
        if target_masks.contains(&mask) {
            continue;
        }
        let survives = part_masks
            .iter()
            .all(|pm| (mask & pm).count_ones() % 2 == 1);
        if !survives {
            continue;
        }
        let at_alpha = map.value(mask).clone();
        let at_half = map_half.value(mask).clone();
        if at_alpha.is_exact_zero() && at_half.is_exact_zero() {
            continue;
        }
        let va = at_alpha.to_f64().abs();
        let vh = at_half.to_f64().abs();
        let observed_exponent = if vh <= 5.0 * at_half.std_error() || vh == 0.0 {
            None
        } else {
            Some((va / vh).log2())
        };
        off_target.push(RatioRow {
            mask,
            at_alpha,
            at_half,
            observed_exponent,
        });
    }

    let mut records = map.records().to_vec();
    records.extend(map_half.records().iter().copied());
    Ok(SynthesisReport {
        scheme,
        alpha: alpha.clone(),
        degree,
        targets,
        off_target,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rfrac, rint};

    fn profile3() -> BiasProfile {
        let mut p = BiasProfile::zero(3);
        p.set_single(1, rfrac(1, 3));
        p.set_single(2, rfrac(-1, 2));
        p.set_single(3, rfrac(2, 5));
        p.set_pair(1, 2, rfrac(1, 2)).unwrap();
        p.set_pair(1, 3, rfrac(-1, 4)).unwrap();
        p.set_pair(2, 3, rfrac(1, 5)).unwrap();
        p
    }

    #[test]
    fn chi_single_is_the_exact_product_rule() {
        let p = profile3();
        let alpha = rfrac(1, 2);
        let map = ExpectationMap::all_ones(3).unwrap();
        let map = apply_chi_single(map, &alpha, &[1, 2], &p).unwrap();
        // b_1 = 1/3: multiplier 1/6 on any monomial containing x_1.
        assert_eq!(map.value(0b001), &Expectation::exact(rfrac(1, 6)));
        assert_eq!(map.value(0b010), &Expectation::exact(rfrac(-1, 4)));
        assert_eq!(map.value(0b011), &Expectation::exact(rfrac(-1, 24)));
        // Variable 3 is untouched.
        assert_eq!(map.value(0b100), &Expectation::exact(Rat::one()));
        assert_eq!(map.value(0), &Expectation::exact(Rat::one()));
        map.validate().unwrap();

        // alpha = 0 zeroes every touched monomial.
        let zeroed =
            apply_chi_single(ExpectationMap::all_ones(3).unwrap(), &Rat::zero(), &[1], &p).unwrap();
        assert!(zeroed.value(0b001).is_exact_zero());
        assert_eq!(zeroed.value(0b110), &Expectation::exact(Rat::one()));

        let bad = apply_chi_single(
            ExpectationMap::all_ones(3).unwrap(),
            &rint(2),
            &[1],
            &p,
        );
        assert!(matches!(bad, Err(RoundingError::NoiseRate { .. })));
    }

    #[test]
    fn chi_pair_closed_form_cases() {
        let mut p = profile3();
        p.set_pair(1, 2, Rat::zero()).unwrap();
        let alpha = rfrac(1, 2);
        let map = ExpectationMap::all_ones(3).unwrap();
        let map = apply_chi_pair(map, &alpha, &[1], &[2], &p, &McConfig::default()).unwrap();
        // Overlap 0: untouched; overlap 1: zero; overlap 2 with a zero
        // entry: exact zero via arcsin(0).
        assert_eq!(map.value(0b100), &Expectation::exact(Rat::one()));
        assert!(map.value(0b001).is_exact_zero());
        assert!(map.value(0b010).is_exact_zero());
        assert!(map.value(0b011).is_exact_zero());
        assert!(map.records().is_empty(), "no sampling for overlaps <= 2");
    }

    #[test]
    fn chi_pair_multiplier_is_arcsin_with_small_alpha_linearization() {
        let p = profile3();
        let alpha = rfrac(1, 100);
        let map = ExpectationMap::all_ones(3).unwrap();
        let map = apply_chi_pair(map, &alpha, &[1], &[2], &p, &McConfig::default()).unwrap();
        let got = match map.value(0b011) {
            Expectation::Real { value, std_error } => {
                assert_eq!(*std_error, 0.0);
                *value
            }
            other => panic!("expected a deterministic real value, got {other:?}"),
        };
        let entry = (rfrac(1, 100) * rfrac(1, 2)).to_f64();
        assert_eq!(got, entry.asin() / FRAC_PI_2);
        // Linearization: (2/pi) * alpha * b_12 up to O(alpha^3).
        let linear = 2.0 / PI * entry;
        assert!((got - linear).abs() < entry.powi(3));
    }

    #[test]
    fn chi_pair_saturated_entry_gives_exactly_one() {
        // alpha = 1 and b_12 = 1: arcsin(1) scaled back is exactly 1.
        let mut p = profile3();
        p.set_pair(1, 2, Rat::one()).unwrap();
        p.set_pair(1, 3, Rat::zero()).unwrap();
        p.set_pair(2, 3, Rat::zero()).unwrap();
        let map = ExpectationMap::all_ones(3).unwrap();
        let map = apply_chi_pair(map, &Rat::one(), &[1], &[2], &p, &McConfig::default()).unwrap();
        assert_eq!(map.value(0b011), &Expectation::real(1.0, 0.0));
    }

    #[test]
    fn chi_pair_rejects_indefinite_correlations() {
        let mut p = profile3();
        for (i, j) in [(1u32, 2u32), (1, 3), (2, 3)] {
            p.set_pair(i, j, -Rat::one()).unwrap();
        }
        let map = ExpectationMap::all_ones(3).unwrap();
        let err = apply_chi_pair(map, &Rat::one(), &[1, 2], &[3], &p, &McConfig::default());
        assert!(matches!(err, Err(RoundingError::NotPsd(_))));
    }

    #[test]
    fn chi_pair_overlap_three_orthogonal_estimates_zero() {
        let mut p = BiasProfile::zero(3);
        p.set_single(1, Rat::zero());
        // All pair moments zero: the Gram vectors are orthonormal, so the
        // three-sign product has mean zero.
        let cfg = McConfig {
            seed: 0x0eed_cafe,
            samples: 1_000_000,
        };
        let map = ExpectationMap::all_ones(3).unwrap();
        let map = apply_chi_pair(map, &Rat::one(), &[1, 2], &[3], &p, &cfg).unwrap();
        match map.value(0b111) {
            Expectation::Real { value, std_error } => {
                assert!(*std_error > 0.0);
                assert!(
                    value.abs() < 3.0 * std_error,
                    "estimate {value} further than 3 sigma ({std_error}) from zero"
                );
            }
            other => panic!("expected a stochastic value, got {other:?}"),
        }
        assert_eq!(
            map.records(),
            &[McRecord {
                seed: 0x0eed_cafe,
                samples: 1_000_000
            }]
        );
        // Same seed, same estimate: the path is reproducible bit for bit.
        let again = apply_chi_pair(
            ExpectationMap::all_ones(3).unwrap(),
            &Rat::one(),
            &[1, 2],
            &[3],
            &p,
            &cfg,
        )
        .unwrap();
        assert_eq!(map, again);
    }

    #[test]
    fn parity_keeps_exactly_the_all_odd_monomials() {
        let map = ExpectationMap::all_ones(4).unwrap();
        let map = apply_parity(map, &[vec![1], vec![2, 3]]).unwrap();
        // Hitting each part once: kept exactly.
        assert_eq!(map.value(0b0011), &Expectation::exact(Rat::one()));
        assert_eq!(map.value(0b0101), &Expectation::exact(Rat::one()));
        // Missing a part, or two in one part: zero. The empty monomial dies
        // too, so the map is signed.
        assert!(map.value(0b0001).is_exact_zero());
        assert!(map.value(0b0111).is_exact_zero());
        assert!(map.value(0).is_exact_zero());
        assert!(map.is_signed());
        map.validate().unwrap();
        // Variable 4 is outside every part and does not affect parity.
        assert_eq!(map.value(0b1011), &Expectation::exact(Rat::one()));

        let err = apply_parity(
            ExpectationMap::all_ones(4).unwrap(),
            &[vec![1, 2], vec![2, 3]],
        );
        assert!(matches!(
            err,
            Err(RoundingError::OverlappingParts { var: 2 })
        ));
    }

    #[test]
    fn unsigned_validation_requires_unit_base() {
        let map = ExpectationMap::all_ones(2).unwrap();
        let map = apply_chi_single(map, &rfrac(1, 2), &[1, 2], &profile3_restricted()).unwrap();
        map.validate().unwrap();
        let mut broken = map;
        broken.values[0] = Expectation::exact(Rat::zero());
        assert!(matches!(broken.validate(), Err(RoundingError::BaseNotOne)));
        assert!(ExpectationMap::all_ones(17).is_err());
    }

    fn profile3_restricted() -> BiasProfile {
        let mut p = BiasProfile::zero(2);
        p.set_single(1, rfrac(1, 3));
        p.set_single(2, rfrac(-1, 2));
        p.set_pair(1, 2, rfrac(1, 2)).unwrap();
        p
    }

    /// Literal simulation of the per-variable flip process, 10^6 samples.
    #[test]
    fn chi_single_matches_literal_simulation() {
        let p = profile3();
        let alpha = rfrac(1, 2);
        let map = apply_chi_single(
            ExpectationMap::all_ones(3).unwrap(),
            &alpha,
            &[1, 3],
            &p,
        )
        .unwrap();

        let keep_prob: Vec<f64> = [1u32, 3]
            .iter()
            .map(|&i| (Rat::one() + &alpha * p.single(i)).to_f64() / 2.0)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0x11_22_33);
        let samples = 1_000_000u64;
        let mut sums = [0i64; 8];
        for _ in 0..samples {
            let s1 = if rng.gen_bool(keep_prob[0]) { 1i64 } else { -1 };
            let s3 = if rng.gen_bool(keep_prob[1]) { 1i64 } else { -1 };
            let signs = [1i64, s1, 1, s1, s3, s1 * s3, s3, s1 * s3];
            for (mask, sum) in sums.iter_mut().enumerate() {
                *sum += signs[mask];
            }
        }
        for mask in 0..8u32 {
            let mean = sums[mask as usize] as f64 / samples as f64;
            let se = ((1.0 - mean * mean).max(0.0) / (samples - 1) as f64).sqrt();
            let exact = map.value(mask).to_f64();
            assert!(
                (mean - exact).abs() <= 4.0 * se + 1e-12,
                "mask {mask:03b}: simulated {mean} vs exact {exact} (se {se})"
            );
        }
    }

    /// Literal simulation of the signed parity average, 10^6 samples.
    #[test]
    fn parity_matches_literal_simulation() {
        let parts = [vec![1u32, 2], vec![3u32]];
        let map = apply_parity(ExpectationMap::all_ones(3).unwrap(), &parts).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(0x44_55_66);
        let samples = 1_000_000u64;
        let mut sums = [0i64; 8];
        for _ in 0..samples {
            let y1 = if rng.gen_bool(0.5) { 1i64 } else { -1 };
            let y2 = if rng.gen_bool(0.5) { 1i64 } else { -1 };
            let weight = y1 * y2;
            for (mask, sum) in sums.iter_mut().enumerate() {
                let m = mask as u32;
                let x = y1.pow((m & 0b011).count_ones()) * y2.pow((m >> 2).count_ones());
                *sum += weight * x;
            }
        }
        for mask in 0..8u32 {
            let mean = sums[mask as usize] as f64 / samples as f64;
            let se = ((1.0 - mean * mean).max(0.0) / (samples - 1) as f64).sqrt();
            let exact = map.value(mask).to_f64();
            assert!(
                (mean - exact).abs() <= 4.0 * se + 1e-12,
                "mask {mask:03b}: simulated {mean} vs exact {exact} (se {se})"
            );
        }
    }

    #[test]
    fn synthesize_single_factor_is_exact() {
        let p = profile3();
        let alpha = rfrac(1, 4);
        let spec = MonomialSpec {
            singles: vec![0],
            pairs: vec![],
        };
        let report = synthesize_monomial(
            &spec,
            &[vec![1, 2, 3]],
            &alpha,
            &p,
            &McConfig::default(),
        )
        .unwrap();
        assert_eq!(report.degree, 1);
        // One target per variable of the part, each achieved exactly.
        assert_eq!(report.targets.len(), 3);
        for (row, want) in report
            .targets
            .iter()
            .zip([rfrac(1, 12), rfrac(-1, 8), rfrac(1, 10)])
        {
            assert_eq!(row.achieved, Expectation::exact(want.clone()));
            assert_eq!(row.first_order, want.to_f64());
            assert_eq!(row.leading, row.first_order);
        }
        // The only other odd-hitting monomial is the full triple, cubic in
        // alpha: halving alpha divides it by exactly 8.
        assert_eq!(report.off_target.len(), 1);
        let row = &report.off_target[0];
        assert_eq!(row.mask, 0b111);
        assert_eq!(
            row.at_alpha,
            Expectation::exact(alpha.pow(3) * rfrac(1, 3) * rfrac(-1, 2) * rfrac(2, 5))
        );
        let exp = row.observed_exponent.expect("exact values, no noise guard");
        assert!((exp - 3.0).abs() < 1e-12, "cubic decay, got exponent {exp}");
        assert!(report.records.is_empty());
    }

    #[test]
    fn synthesize_pair_factor_achieves_the_arcsin_multiplier() {
        let p = profile3_restricted();
        let alpha = rfrac(1, 4);
        let spec = MonomialSpec {
            singles: vec![],
            pairs: vec![(0, 1)],
        };
        let report = synthesize_monomial(
            &spec,
            &[vec![1], vec![2]],
            &alpha,
            &p,
            &McConfig::default(),
        )
        .unwrap();
        let row = &report.targets[0];
        assert_eq!(row.mask, 0b011);
        let entry = (rfrac(1, 4) * rfrac(1, 2)).to_f64();
        assert_eq!(row.achieved, Expectation::real(entry.asin() / FRAC_PI_2, 0.0));
        assert_eq!(row.leading, 2.0 / PI * entry);
        assert_eq!(row.first_order, entry);
        assert!(report.off_target.is_empty());
    }

    #[test]
    fn synthesize_rejects_bad_part_usage() {
        let p = profile3();
        let alpha = rfrac(1, 4);
        let twice = MonomialSpec {
            singles: vec![0, 0],
            pairs: vec![],
        };
        assert!(matches!(
            synthesize_monomial(&twice, &[vec![1, 2, 3]], &alpha, &p, &McConfig::default()),
            Err(RoundingError::PartCoverage)
        ));
        let unused = MonomialSpec {
            singles: vec![0],
            pairs: vec![],
        };
        assert!(matches!(
            synthesize_monomial(
                &unused,
                &[vec![1, 2, 3], vec![]],
                &alpha,
                &p,
                &McConfig::default()
            ),
            Err(RoundingError::PartCoverage)
        ));
        // Parts that miss a variable leave undamped monomials behind.
        let single = MonomialSpec {
            singles: vec![0],
            pairs: vec![],
        };
        assert!(matches!(
            synthesize_monomial(&single, &[vec![1, 2]], &alpha, &p, &McConfig::default()),
            Err(RoundingError::PartCoverage)
        ));
    }

    #[test]
    fn synthesize_off_target_monomials_decay_faster() {
        // p = b_(part0) * b_(part1, part2) over a five-variable profile with
        // a three-element third part, so one surviving off-target monomial
        // exists: the full set, entered through a four-sign estimate.
        let mut p = BiasProfile::zero(5);
        p.set_single(1, rfrac(2, 3));
        p.set_single(2, rfrac(1, 2));
        p.set_single(3, rfrac(-1, 2));
        p.set_single(4, rfrac(1, 3));
        p.set_single(5, rfrac(-2, 5));
        let pair_vals = [
            ((1u32, 2u32), rfrac(1, 3)),
            ((1, 3), rfrac(-1, 4)),
            ((1, 4), rfrac(1, 5)),
            ((1, 5), rfrac(1, 6)),
            ((2, 3), rfrac(1, 2)),
            ((2, 4), rfrac(-2, 5)),
            ((2, 5), rfrac(1, 4)),
            ((3, 4), rfrac(1, 3)),
            ((3, 5), rfrac(-1, 5)),
            ((4, 5), rfrac(2, 7)),
        ];
        for ((i, j), v) in pair_vals {
            p.set_pair(i, j, v).unwrap();
        }
        let spec = MonomialSpec {
            singles: vec![0],
            pairs: vec![(1, 2)],
        };
        let partition = [vec![1u32], vec![2u32], vec![3u32, 4, 5]];
        let alpha = rfrac(1, 2);
        let cfg = McConfig {
            seed: 0x0ff7_a63e,
            samples: 400_000,
        };
        let report = synthesize_monomial(&spec, &partition, &alpha, &p, &cfg).unwrap();
        assert_eq!(report.degree, 2);
        assert_eq!(report.targets.len(), 3);
        for row in &report.targets {
            // Deterministic at targets; matches first order up to the 2/pi
            // constant and the cubic arcsin correction.
            assert_eq!(row.achieved.std_error(), 0.0);
            assert!((row.achieved.to_f64() - row.leading).abs() < 0.02);
        }
        assert_eq!(report.off_target.len(), 1);
        let row = &report.off_target[0];
        assert_eq!(row.mask, 0b11111);
        match row.observed_exponent {
            Some(exp) => assert!(
                exp > 2.5,
                "off-target exponent {exp} not visibly above the degree"
            ),
            None => {
                // Noise-guarded: acceptable only if the values really are
                // tiny relative to their errors.
                assert!(row.at_half.to_f64().abs() <= 5.0 * row.at_half.std_error());
            }
        }
        assert!(!report.records.is_empty());
    }

    #[test]
    fn mixtures_combine_terms_linearly() {
        let p = profile3();
        let chi = |alpha: Rat, vars: Vec<u32>| SchemeOp::ChiSingle { alpha, vars };
        let mixture = SignedSchemeMixture {
            n: 3,
            terms: vec![
                SchemeTerm {
                    coefficient: 1.0,
                    ops: vec![chi(rfrac(1, 2), vec![1])],
                },
                SchemeTerm {
                    coefficient: -0.5,
                    ops: vec![chi(rfrac(1, 4), vec![1])],
                },
            ],
        };
        let map = mixture.evaluate(&p, &McConfig::default()).unwrap();
        // E[x_1] = 1*(1/2)(1/3) - 0.5*(1/4)(1/3).
        let want = 0.5 / 3.0 - 0.5 * 0.25 / 3.0;
        match map.value(0b001) {
            Expectation::Real { value, std_error } => {
                assert!((value - want).abs() < 1e-15);
                assert_eq!(*std_error, 0.0);
            }
            other => panic!("expected combined real value, got {other:?}"),
        }
        // Monomials untouched by both terms stay exactly zero-error 1.0*0.5.
        assert_eq!(map.value(0b110).to_f64(), 0.5);

        // A lone unit-coefficient term passes its map through unchanged.
        let single = SignedSchemeMixture {
            n: 3,
            terms: vec![SchemeTerm {
                coefficient: 1.0,
                ops: vec![chi(rfrac(1, 2), vec![1])],
            }],
        };
        let map = single.evaluate(&p, &McConfig::default()).unwrap();
        assert_eq!(map.value(0b001), &Expectation::exact(rfrac(1, 6)));
    }

    #[test]
    fn scheme_descriptors_round_trip_through_json() {
        let op = SchemeOp::ChiPair {
            alpha: rfrac(1, 3),
            left: vec![1, 2],
            right: vec![3],
        };
        let json = serde_json::to_string(&op).unwrap();
        assert!(json.contains("\"chi_pair\""));
        assert_eq!(serde_json::from_str::<SchemeOp>(&json).unwrap(), op);
        let e = Expectation::exact(rfrac(-3, 7));
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"exact\""));
        assert_eq!(serde_json::from_str::<Expectation>(&json).unwrap(), e);
    }
}
