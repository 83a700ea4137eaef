//! Implementations of the gapforge subcommands.
//!
//! Each command maps library results onto report clauses. The convention
//! throughout: a domain refusal (bad flag value, unparseable input, a cap
//! exceeded) is an `Err` and exits 2; a verification that ran and said *no*
//! is a failing clause and exits 1.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde_json::Value;

use gapcert::construct::balance::balance_double;
use gapcert::construct::core::{core_instance, solve_core_parameters, verify_core};
use gapcert::construct::gadget::{build_gadget, gadget_moments, verify_gadget, VectorStats};
use gapcert::construct::merge::{merge_dual, verify_merge};
use gapcert::construct::pipeline::pipeline_plan;
use gapcert::construct::unary::unary_encode;
use gapcert::construct::{IntegerVarSpec, MomentSpec};
use gapcert::instance::{
    builtin_instances, ktw_vanish_report, verify_perfect_gap, GapInstance,
};
use gapcert::predicate::{
    check_perfectly_balanced, fourier_transform, LinearForm, Predicate, MAX_TABLE_ARITY,
};
use gapcert::rounding::almost::{class_assignment, threshold_search, SearchConfig};
use gapcert::rounding::monarchy::{monarchy_advantage_certified, monarchy_scheme};
use gapcert::rounding::stats::identity_suite;
use gapcert::rounding::{random_satisfying_mixture, SatisfyingMixture};
use gapcert::{rint, Exec, Rat};

use crate::report::{witness, Clause};

/// What a subcommand hands back to `main` for printing.
pub enum Outcome {
    /// Clauses to wrap into a `Report`, plus the seed if randomness was used.
    Clauses(Vec<Clause>, Option<u64>),
    /// A raw object to print as-is (the `builtin` command).
    Object(Value),
}

/// Settings shared across subcommands, already resolved from the global flags.
pub struct Ctx {
    pub seed: u64,
    pub samples: Option<u64>,
    pub max_k: Option<u32>,
    pub exec: Exec,
}

fn clauses(list: Vec<Clause>) -> anyhow::Result<Outcome> {
    Ok(Outcome::Clauses(list, None))
}

fn seeded(list: Vec<Clause>, seed: u64) -> anyhow::Result<Outcome> {
    Ok(Outcome::Clauses(list, Some(seed)))
}

// ---------------------------------------------------------------- parsing

fn parse_i64_list(text: &str) -> anyhow::Result<Vec<i64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .with_context(|| format!("not an integer: {t:?}"))
        })
        .collect()
}

/// `"a:b"` with `a <= b`.
fn parse_range(text: &str) -> anyhow::Result<(i64, i64)> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("range must look like a:b, got {text:?}"))?;
    let lo: i64 = a.trim().parse().with_context(|| format!("bad bound {a:?}"))?;
    let hi: i64 = b.trim().parse().with_context(|| format!("bad bound {b:?}"))?;
    if lo > hi {
        bail!("empty range {lo}:{hi}");
    }
    Ok((lo, hi))
}

/// Comma list of distinct 1-based indices into `1..=k`, as a bitmask.
fn parse_subset(text: &str, k: usize) -> anyhow::Result<(Vec<u32>, u32)> {
    let mut subset = Vec::new();
    let mut mask = 0u32;
    for part in text.split(',') {
        let i: u32 = part
            .trim()
            .parse()
            .with_context(|| format!("bad index {part:?}"))?;
        if i == 0 || i as usize > k {
            bail!("index {i} outside 1..={k}");
        }
        if mask >> (i - 1) & 1 == 1 {
            bail!("index {i} repeated");
        }
        mask |= 1 << (i - 1);
        subset.push(i);
    }
    subset.sort_unstable();
    Ok((subset, mask))
}

/// Predicate names shared by `fourier` and `builtin`.
fn parse_predicate(name: &str) -> anyhow::Result<Predicate> {
    if name == "xor3" {
        return Ok(Predicate::xor3());
    }
    if name == "glst" {
        return Ok(Predicate::glst());
    }
    if let Some(k) = name.strip_prefix("almost-monarchy-") {
        let k: u8 = k.parse().with_context(|| format!("bad arity in {name:?}"))?;
        return Ok(Predicate::almost_monarchy(k));
    }
    if let Some(k) = name.strip_prefix("monarchy-") {
        let k: u8 = k.parse().with_context(|| format!("bad arity in {name:?}"))?;
        return Ok(Predicate::monarchy(k));
    }
    bail!("unknown predicate {name:?} (try xor3, glst, monarchy-<k>, almost-monarchy-<k>)");
}

/// A linear form given either as a JSON file or inline as comma weights.
fn parse_form(arg: &str) -> anyhow::Result<LinearForm> {
    if Path::new(arg).exists() {
        let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
        let form: LinearForm =
            serde_json::from_str(&text).with_context(|| format!("parsing {arg} as a form"))?;
        return Ok(form);
    }
    let weights = parse_i64_list(arg)
        .with_context(|| format!("{arg:?} is neither a file nor a weight list"))?;
    Ok(LinearForm::from_ints(&weights, 0))
}

fn read_input(path: &str) -> anyhow::Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("reading standard input")?;
        return Ok(buf);
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {path}"))
}

// ---------------------------------------------------------------- fourier

pub fn fourier(ctx: &Ctx, pred: &str, subset: Option<&str>) -> anyhow::Result<Outcome> {
    let p = parse_predicate(pred)?;
    let k = p.arity();
    let table = fourier_transform(&p)?;
    let mut out = Vec::new();

    if let Some(subset) = subset {
        let (indices, mask) = parse_subset(subset, k)?;
        out.push(Clause::pass(
            "coefficient",
            Some(witness(&serde_json::json!({
                "predicate": pred,
                "subset": indices,
                "value": table.coef(mask),
            }))),
        ));
    } else {
        let cap = ctx.max_k.unwrap_or(12) as usize;
        if k > cap {
            bail!("full-table listing is capped at arity {cap}; pass --subset or raise --max-k");
        }
        let rows: Vec<Value> = (0u32..1 << k)
            .filter(|&s| table.numerator(s) != 0)
            .map(|s| {
                let indices: Vec<u32> = (0..k as u32).filter(|i| s >> i & 1 == 1).map(|i| i + 1).collect();
                serde_json::json!({ "subset": indices, "value": table.coef(s) })
            })
            .collect();
        out.push(Clause::pass(
            "coefficients",
            Some(witness(&serde_json::json!({
                "predicate": pred,
                "nonzero": rows.len(),
                "table": rows,
            }))),
        ));
    }

    let parseval = table.parseval_sum();
    out.push(Clause::check(
        "parseval",
        parseval == Rat::one(),
        witness(&serde_json::json!({ "sum_of_squares": parseval })),
    ));
    clauses(out)
}

// ---------------------------------------------------------------- balanced

pub fn balanced(weights: &str, constant: i64) -> anyhow::Result<Outcome> {
    let w = parse_i64_list(weights)?;
    if w.is_empty() || w.len() > MAX_TABLE_ARITY as usize {
        bail!("arity must lie in 1..={MAX_TABLE_ARITY}, got {}", w.len());
    }
    let form = LinearForm::from_ints(&w, constant);
    let clause = match check_perfectly_balanced(&form) {
        Ok(()) => Clause::pass(
            "layers",
            Some(witness(&serde_json::json!({
                "arity": w.len(),
                "form": form,
            }))),
        ),
        Err(layer) => Clause::fail("layers", witness(&layer)),
    };
    clauses(vec![clause])
}

// ---------------------------------------------------------------- instance

fn gap_clauses(inst: &GapInstance) -> anyhow::Result<Vec<Clause>> {
    let report = verify_perfect_gap(inst)?;
    let mut out = Vec::new();
    out.push(match &report.moment_failure {
        None => Clause::pass("first-moments", None),
        Some(m) => Clause::fail("first-moments", witness(m)),
    });
    out.push(match &report.support_failure {
        None => Clause::pass("support-satisfies", None),
        Some(s) => Clause::fail("support-satisfies", witness(s)),
    });
    out.push(match &report.psd_failure {
        None => Clause::pass("bordered-psd", None),
        Some(v) => Clause::fail("bordered-psd", witness(&serde_json::json!({ "vector": v }))),
    });
    out.push(match &report.constant_failure {
        None => Clause::pass(
            "constant-sum",
            Some(witness(&serde_json::json!({ "constant": report.constant }))),
        ),
        Some(sub) => Clause::fail("constant-sum", witness(sub)),
    });
    Ok(out)
}

fn vanish_clauses(inst: &GapInstance, max_t: u8) -> anyhow::Result<Vec<Clause>> {
    let levels = ktw_vanish_report(inst, max_t)?;
    Ok(levels
        .iter()
        .map(|level| {
            let name = format!("vanish-t{}", level.t);
            if level.vanished {
                Clause::pass(&name, None)
            } else {
                Clause::fail(&name, witness(level))
            }
        })
        .collect())
}

pub fn verify_instance(path: &str, vanish_max_t: Option<u8>) -> anyhow::Result<Outcome> {
    let text = read_input(path)?;
    let inst: GapInstance =
        serde_json::from_str(&text).with_context(|| format!("parsing {path} as an instance"))?;
    let mut out = gap_clauses(&inst)?;
    if let Some(t) = vanish_max_t {
        out.extend(vanish_clauses(&inst, t)?);
    }
    clauses(out)
}

pub fn vanish(
    instance: Option<&str>,
    builtin: Option<&str>,
    max_t: Option<u8>,
) -> anyhow::Result<Outcome> {
    let inst = match (instance, builtin) {
        (Some(path), None) => {
            let text = read_input(path)?;
            serde_json::from_str::<GapInstance>(&text)
                .with_context(|| format!("parsing {path} as an instance"))?
        }
        (None, Some(name)) => builtin_instances()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, inst)| inst)
            .ok_or_else(|| anyhow!("no builtin instance named {name:?}"))?,
        _ => bail!("pass exactly one of --instance and --builtin"),
    };
    let arity = inst
        .constraints
        .first()
        .map(|c| c.arity() as u8)
        .ok_or_else(|| anyhow!("instance has no constraints"))?;
    clauses(vanish_clauses(&inst, max_t.unwrap_or(arity))?)
}

// ---------------------------------------------------------------- core

pub fn core_verify() -> anyhow::Result<Outcome> {
    let core = core_instance();
    let report = verify_core(&core);
    let clause = if report.passed() {
        Clause::pass(
            "certificate",
            Some(witness(&serde_json::json!({
                "vectors": core.vectors.len(),
                "forms": core.forms.len(),
                "distributions": core.dists.len(),
            }))),
        )
    } else {
        Clause::fail("certificate", witness(&report.defects))
    };
    clauses(vec![clause])
}

pub fn core_solve(a: i64, c: i64, b: i64) -> anyhow::Result<Outcome> {
    let params = match solve_core_parameters(a, c, b) {
        Ok(p) => p,
        Err(e) => {
            return clauses(vec![Clause::fail(
                "closed-form",
                witness(&serde_json::json!({ "error": e.to_string() })),
            )])
        }
    };
    let residuals = params.equation_residuals();
    let all_zero = residuals.iter().all(Rat::is_zero);
    clauses(vec![
        Clause::pass("closed-form", Some(witness(&params))),
        Clause::check(
            "moment-equations",
            all_zero,
            witness(&serde_json::json!({ "residuals": residuals })),
        ),
    ])
}

// ---------------------------------------------------------------- gadget

fn scalar_family(m: usize, range: &str) -> anyhow::Result<(Vec<Vec<i64>>, i64)> {
    let (lo, hi) = parse_range(range)?;
    let count = (hi - lo + 1) as usize;
    if count != m {
        bail!("--range {lo}:{hi} yields {count} values, but --m is {m}");
    }
    let vectors: Vec<Vec<i64>> = (lo..=hi).map(|v| vec![v]).collect();
    let bound = lo.abs().max(hi.abs()).max(1);
    Ok((vectors, bound))
}

pub fn gadget_verify(ctx: &Ctx, m: usize, range: &str) -> anyhow::Result<Outcome> {
    let (vectors, bound) = scalar_family(m, range)?;
    let gadget = build_gadget(&vectors, bound)?;
    let report = verify_gadget(&gadget, ctx.exec)?;
    clauses(vec![Clause::check(
        "permutation-only",
        report.matches,
        witness(&report),
    )])
}

pub fn gadget_moment_tables(m: usize, range: &str) -> anyhow::Result<Outcome> {
    let (vectors, _) = scalar_family(m, range)?;
    let rat_vectors: Vec<Vec<Rat>> = vectors
        .iter()
        .map(|v| v.iter().map(|&x| rint(x)).collect())
        .collect();
    let stats = VectorStats::from_vectors(&rat_vectors);
    let support: Vec<(Vec<Rat>, Rat)> = rat_vectors
        .iter()
        .map(|v| (v.clone(), Rat::one()))
        .collect();
    let base = MomentSpec::from_distribution(&support);
    let tables = gadget_moments(m, &base, &stats)?;
    let realizable = tables.output_moment_spec().validate();
    clauses(vec![
        Clause::pass("closed-forms", Some(witness(&tables))),
        Clause::check(
            "output-realizable",
            realizable.is_ok(),
            witness(&serde_json::json!({
                "error": realizable.err().map(|e| e.to_string()),
            })),
        ),
    ])
}

// ---------------------------------------------------------------- encode

fn parse_support(text: &str, ranges: &[(i64, i64)]) -> anyhow::Result<Vec<(Vec<Rat>, Rat)>> {
    let mut support = Vec::new();
    for entry in text.split(';') {
        let (point, weight) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("support entry {entry:?} lacks '=weight'"))?;
        let values = parse_i64_list(point)?;
        if values.len() != ranges.len() {
            bail!(
                "support point {point:?} has {} coordinates, expected {}",
                values.len(),
                ranges.len()
            );
        }
        for (i, (&v, &(lo, hi))) in values.iter().zip(ranges).enumerate() {
            if v < lo || v > hi {
                bail!("support point {point:?}: coordinate {} is outside {lo}:{hi}", i + 1);
            }
        }
        let w: i64 = weight
            .trim()
            .parse()
            .with_context(|| format!("bad weight {weight:?}"))?;
        if w <= 0 {
            bail!("support weight must be positive, got {w}");
        }
        support.push((values.into_iter().map(rint).collect(), rint(w)));
    }
    Ok(support)
}

fn uniform_box(ranges: &[(i64, i64)]) -> anyhow::Result<Vec<(Vec<Rat>, Rat)>> {
    let states: u64 = ranges
        .iter()
        .try_fold(1u64, |acc, &(lo, hi)| {
            acc.checked_mul((hi - lo + 1) as u64)
        })
        .filter(|&s| s <= 4096)
        .ok_or_else(|| anyhow!("uniform box exceeds 4096 points; pass --support"))?;
    let mut support = Vec::with_capacity(states as usize);
    let mut point: Vec<i64> = ranges.iter().map(|&(lo, _)| lo).collect();
    loop {
        support.push((point.iter().map(|&v| rint(v)).collect(), Rat::one()));
        let mut idx = ranges.len();
        loop {
            if idx == 0 {
                return Ok(support);
            }
            idx -= 1;
            if point[idx] < ranges[idx].1 {
                point[idx] += 1;
                for slot in idx + 1..ranges.len() {
                    point[slot] = ranges[slot].0;
                }
                break;
            }
        }
    }
}

pub fn encode(ranges: &str, support: Option<&str>) -> anyhow::Result<Outcome> {
    let bounds: Vec<(i64, i64)> = ranges
        .split(',')
        .map(parse_range)
        .collect::<anyhow::Result<_>>()?;
    for &(lo, hi) in &bounds {
        if lo == hi {
            bail!("range {lo}:{hi} has a single point; nothing to encode");
        }
    }
    let dist = match support {
        Some(text) => parse_support(text, &bounds)?,
        None => uniform_box(&bounds)?,
    };
    let vars: Vec<IntegerVarSpec> = bounds
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| IntegerVarSpec::new(format!("x{}", i + 1), lo, hi))
        .collect();
    let moments = MomentSpec::from_distribution(&dist);

    let encoding = match unary_encode(&vars, &moments) {
        Ok(e) => e,
        Err(e) => {
            return clauses(vec![Clause::fail(
                "realizable",
                witness(&serde_json::json!({ "error": e.to_string() })),
            )]);
        }
    };

    // Side-by-side divergence of the superseded closed forms; reported, never
    // substituted into the primary tables.
    let mut divergences: Vec<Value> = Vec::new();
    for (i, (ours, alt)) in encoding
        .digit_mean
        .iter()
        .zip(&encoding.alt.digit_mean)
        .enumerate()
    {
        if ours != alt {
            divergences.push(serde_json::json!({
                "kind": "digit_mean", "var": i + 1, "primary": ours, "superseded": alt,
            }));
        }
    }
    for (i, (ours, alt)) in encoding
        .pair_same
        .iter()
        .zip(&encoding.alt.pair_same)
        .enumerate()
    {
        if ours != alt {
            divergences.push(serde_json::json!({
                "kind": "pair_same", "var": i + 1, "primary": ours, "superseded": alt,
            }));
        }
    }
    let alt_cross: &BTreeMap<(usize, usize), Rat> = &encoding.alt.pair_cross;
    for (key, ours) in &encoding.pair_cross {
        let alt = alt_cross.get(key);
        if alt != Some(ours) {
            divergences.push(serde_json::json!({
                "kind": "pair_cross", "vars": [key.0 + 1, key.1 + 1],
                "primary": ours, "superseded": alt,
            }));
        }
    }

    clauses(vec![
        Clause::pass("realizable", None),
        Clause::pass("digit-moments", Some(witness(&encoding))),
        Clause::pass(
            "superseded-variant",
            Some(witness(&serde_json::json!({
                "diverges": !divergences.is_empty(),
                "entries": divergences,
            }))),
        ),
    ])
}

// ---------------------------------------------------------------- balance

pub fn balance(weights: &str, constant: i64) -> anyhow::Result<Outcome> {
    let w = parse_i64_list(weights)?;
    let form = LinearForm::from_ints(&w, constant);
    match balance_double(&form) {
        Ok(doubled) => clauses(vec![Clause::pass("layers", Some(witness(&doubled)))]),
        Err(gapcert::construct::balance::BalanceError::Unbalanced(layer)) => {
            clauses(vec![Clause::fail("layers", witness(&layer))])
        }
        Err(e) => Err(e.into()),
    }
}

// ---------------------------------------------------------------- merge

pub fn merge(ctx: &Ctx, l1: &str, l2: &str, verify: bool) -> anyhow::Result<Outcome> {
    let form1 = parse_form(l1)?;
    let form2 = parse_form(l2)?;
    let out = merge_dual(&form1, &form2)?;
    let mut list = vec![Clause::pass("construction", Some(witness(&out)))];
    if verify {
        let report = verify_merge(&out, &form1, &form2, ctx.exec)?;
        list.push(Clause::check(
            "row-identity",
            report.row_identity_ok && report.scale_consistent,
            witness(&serde_json::json!({
                "row_identity_ok": report.row_identity_ok,
                "scale_consistent": report.scale_consistent,
            })),
        ));
        list.push(Clause::check(
            "column-identity",
            report.col_identity_ok && report.constraint_equivalence_ok,
            witness(&serde_json::json!({
                "col_identity_ok": report.col_identity_ok,
                "constraint_equivalence_ok": report.constraint_equivalence_ok,
            })),
        ));
        list.push(Clause::check(
            "permutation-averages",
            report.col_perm_average_ok && report.row_perm_average_ok,
            witness(&serde_json::json!({
                "col_perm_average_ok": report.col_perm_average_ok,
                "row_perm_average_ok": report.row_perm_average_ok,
            })),
        ));
        list.push(Clause::check(
            "balanced",
            report.balanced,
            witness(&serde_json::json!({
                "assignments": report.assignments,
                "zero_evaluations": report.zero_evaluations,
                "violating_inputs": report.violating_inputs,
            })),
        ));
    }
    clauses(list)
}

// ---------------------------------------------------------------- pipeline

pub fn pipeline_plan_cmd() -> anyhow::Result<Outcome> {
    let plan = pipeline_plan();
    let mut chain_ok = true;
    let mut breaks: Vec<Value> = Vec::new();
    for pair in plan.stages.windows(2) {
        if pair[1].inputs != pair[0].outputs {
            chain_ok = false;
            breaks.push(serde_json::json!({
                "from": pair[0].stage, "outputs": pair[0].outputs,
                "to": pair[1].stage, "inputs": pair[1].inputs,
            }));
        }
    }
    let core_ok = plan.core_moments.validate();
    let closing_ok = plan.closing_outputs.validate();
    clauses(vec![
        Clause::pass("sizing", Some(witness(&plan))),
        Clause::check(
            "stage-chain",
            chain_ok,
            witness(&serde_json::json!({ "breaks": breaks })),
        ),
        Clause::check(
            "moment-realizability",
            core_ok.is_ok() && closing_ok.is_ok(),
            witness(&serde_json::json!({
                "core": core_ok.err().map(|e| e.to_string()),
                "closing_outputs": closing_ok.err().map(|e| e.to_string()),
            })),
        ),
    ])
}

// ---------------------------------------------------------------- round

pub fn round_monarchy(ctx: &Ctx, k: u8) -> anyhow::Result<Outcome> {
    if !(5..=12).contains(&k) {
        bail!("monarchy rounding is exposed for k in 5..=12, got {k}");
    }
    let samples = ctx.samples.unwrap_or(1000);
    let scheme = match monarchy_scheme(k) {
        Ok(s) => s,
        Err(e @ gapcert::rounding::RoundingError::SignPrecondition { .. }) => {
            return seeded(
                vec![Clause::fail(
                    "sign-preconditions",
                    witness(&serde_json::json!({ "error": e.to_string() })),
                )],
                ctx.seed,
            );
        }
        Err(e) => return Err(e.into()),
    };
    let floor = scheme.fhat_citizen.clone();
    let mut out = vec![Clause::pass("sign-preconditions", Some(witness(&scheme)))];

    let pred = Predicate::monarchy(k);
    let eps = Rat::one();
    let masks = pred.satisfying_masks()?;
    let mut worst: Option<(Rat, u32)> = None;
    for &mask in &masks {
        let report = monarchy_advantage_certified(&SatisfyingMixture::vertex(k, mask), &eps)?;
        let adv = report.advantage_per_epsilon;
        if worst.as_ref().is_none_or(|(w, _)| adv < *w) {
            worst = Some((adv, mask));
        }
    }
    let (min_vertex, worst_mask) = worst.expect("predicate has satisfying assignments");
    out.push(Clause::check(
        "vertex-floor",
        min_vertex >= floor,
        witness(&serde_json::json!({
            "vertices": masks.len(),
            "floor": floor,
            "min_advantage_per_epsilon": min_vertex,
            "worst_mask": worst_mask,
        })),
    ));

    let mut worst_mix: Option<(Rat, u64)> = None;
    for trial in 0..samples {
        let mix = random_satisfying_mixture(&pred, ctx.seed, trial)?;
        let report = monarchy_advantage_certified(&mix, &eps)?;
        let adv = report.advantage_per_epsilon;
        if worst_mix.as_ref().is_none_or(|(w, _)| adv < *w) {
            worst_mix = Some((adv, trial));
        }
    }
    if let Some((min_mix, worst_trial)) = worst_mix {
        out.push(Clause::check(
            "mixture-floor",
            min_mix >= floor,
            witness(&serde_json::json!({
                "samples": samples,
                "floor": floor,
                "min_advantage_per_epsilon": min_mix,
                "worst_trial": worst_trial,
            })),
        ));
    }
    seeded(out, ctx.seed)
}

pub fn round_almost_monarchy(
    ctx: &Ctx,
    k_min: u32,
    k_max: u32,
    mixtures: u64,
) -> anyhow::Result<Outcome> {
    if k_min > k_max {
        bail!("--k-min {k_min} exceeds --k-max {k_max}");
    }
    let cfg = SearchConfig {
        vertex_samples: ctx.samples.unwrap_or(10_000),
        mixture_samples: mixtures,
        seed: ctx.seed,
        exec: ctx.exec,
    };
    let report = threshold_search(k_min, k_max, &cfg)?;

    let floor_breaks: Vec<u32> = report
        .per_k
        .iter()
        .filter(|scan| !scan.floor_ok)
        .map(|scan| scan.k)
        .collect();
    let mut out = vec![Clause::check(
        "delta-floor",
        floor_breaks.is_empty(),
        witness(&serde_json::json!({
            "scanned": report.per_k.len(),
            "violations": floor_breaks,
        })),
    )];

    out.push(match report.k_star {
        Some(k_star) => Clause::pass(
            "threshold-found",
            Some(witness(&serde_json::json!({
                "k_star": k_star,
                "scan": report,
            }))),
        ),
        None => {
            // Name the offending profile: the exact worst vertex class seen.
            let worst = report
                .per_k
                .iter()
                .min_by(|a, b| {
                    a.min_class_advantage
                        .partial_cmp(&b.min_class_advantage)
                        .expect("rationals are totally ordered")
                })
                .expect("scan range is nonempty");
            Clause::fail(
                "threshold-found",
                witness(&serde_json::json!({
                    "k": worst.k,
                    "offending_class": worst.worst_class,
                    "offending_assignment": class_assignment(worst.k, worst.worst_class),
                    "advantage_per_epsilon": worst.min_class_advantage,
                    "scan": report,
                })),
            )
        }
    });
    seeded(out, ctx.seed)
}

// ---------------------------------------------------------------- identities

pub fn identities(ctx: &Ctx, k: u32, trials: u64) -> anyhow::Result<Outcome> {
    let report = identity_suite(k, trials, ctx.seed, ctx.exec)?;
    let clause = if report.passed() {
        Clause::pass(
            "direct-vs-aggregate",
            Some(witness(&serde_json::json!({
                "k": report.k,
                "trials": report.trials,
                "comparisons": report.checked,
            }))),
        )
    } else {
        Clause::fail("direct-vs-aggregate", witness(&report.failures))
    };
    seeded(vec![clause], ctx.seed)
}

// ---------------------------------------------------------------- builtin

pub fn builtin(name: &str) -> anyhow::Result<Outcome> {
    let value = match name {
        "three_xor" => witness(&builtin_instances().remove(0).1),
        "glst" => witness(&builtin_instances().remove(1).1),
        "core" => witness(&core_instance()),
        _ => witness(&parse_predicate(name).map_err(|_| {
            anyhow!("unknown builtin {name:?} (try three_xor, glst, core, monarchy-<k>, almost-monarchy-<k>)")
        })?),
    };
    Ok(Outcome::Object(value))
}
