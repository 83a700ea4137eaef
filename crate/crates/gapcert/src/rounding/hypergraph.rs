//! Labeled edge patterns and the direct evaluator for their bias sums.
//!
//! A pattern is a multiset of arity-1 and arity-2 edges over a distinguished
//! president vertex and up to seven free vertices. Its value against a bias
//! profile is the sum, over all ways of placing the free vertices on distinct
//! citizens, of the product of the corresponding moments — counted once per
//! distinct image, i.e. the raw injective sum divided by the number of
//! pattern automorphisms.
//!
//! The enumeration here is deliberately naive (depth-first over injective
//! maps with an incrementally maintained product): it is the oracle that the
//! closed forms in [`super::stats`] are tested against, so it must stay
//! independent of them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::RoundingError;
use crate::polytope::BiasProfile;
use crate::rat::Rat;

/// Most vertices (president included) a pattern may have.
pub const MAX_PATTERN_VERTICES: usize = 7;
/// Most variables the injective enumeration will walk.
pub const DIRECT_EVAL_MAX_VARS: u32 = 12;

/// A pattern vertex: the president, or a free slot identified by a label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternVertex {
    President,
    Free(u8),
}

/// An edge of arity 1 (a first moment) or arity 2 (a pairwise moment).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternEdge {
    Single(PatternVertex),
    Pair(PatternVertex, PatternVertex),
}

impl PatternEdge {
    fn normalized(self) -> Self {
        match self {
            PatternEdge::Pair(a, b) if b < a => PatternEdge::Pair(b, a),
            other => other,
        }
    }

    fn vertices(&self) -> Vec<PatternVertex> {
        match self {
            PatternEdge::Single(v) => vec![*v],
            PatternEdge::Pair(a, b) => vec![*a, *b],
        }
    }

    pub(crate) fn relabel(&self, f: &dyn Fn(PatternVertex) -> PatternVertex) -> Self {
        match self {
            PatternEdge::Single(v) => PatternEdge::Single(f(*v)),
            PatternEdge::Pair(a, b) => PatternEdge::Pair(f(*a), f(*b)).normalized(),
        }
    }
}

/// A multiset of edges; vertices are implicit (no isolated vertices exist).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypergraphPattern {
    edges: Vec<PatternEdge>,
}

impl HypergraphPattern {
    /// Builds a pattern, normalizing pair orientation and sorting the edge
    /// multiset. Rejects self-pairs, more than one president edge, and
    /// patterns with more than [`MAX_PATTERN_VERTICES`] vertices.
    pub fn new(edges: Vec<PatternEdge>) -> Result<Self, RoundingError> {
        let mut normalized = Vec::with_capacity(edges.len());
        let mut president_edges = 0usize;
        let mut vertices = BTreeSet::new();
        for edge in edges {
            if let PatternEdge::Pair(a, b) = edge {
                if a == b {
                    return Err(RoundingError::SelfPair {
                        vertex: format!("{a:?}"),
                    });
                }
            }
            if edge.vertices().contains(&PatternVertex::President) {
                president_edges += 1;
            }
            for v in edge.vertices() {
                vertices.insert(v);
            }
            normalized.push(edge.normalized());
        }
        if president_edges > 1 {
            return Err(RoundingError::PresidentEdges {
                count: president_edges,
            });
        }
        if vertices.len() > MAX_PATTERN_VERTICES {
            return Err(RoundingError::PatternSize {
                vertices: vertices.len(),
                cap: MAX_PATTERN_VERTICES,
            });
        }
        normalized.sort();
        Ok(HypergraphPattern { edges: normalized })
    }

    pub fn edges(&self) -> &[PatternEdge] {
        &self.edges
    }

    /// Number of moment factors (= number of edges, multiplicity included).
    pub fn degree(&self) -> usize {
        self.edges.len()
    }

    /// Distinct free labels, sorted.
    pub fn free_labels(&self) -> Vec<u8> {
        let mut labels = BTreeSet::new();
        for edge in &self.edges {
            for v in edge.vertices() {
                if let PatternVertex::Free(l) = v {
                    labels.insert(l);
                }
            }
        }
        labels.into_iter().collect()
    }

    /// Total vertex count, president included when it appears.
    pub fn vertex_count(&self) -> usize {
        let mut vertices = BTreeSet::new();
        for edge in &self.edges {
            for v in edge.vertices() {
                vertices.insert(v);
            }
        }
        vertices.len()
    }

    /// Number of free-vertex permutations that fix the edge multiset.
    pub fn automorphism_count(&self) -> u64 {
        let labels = self.free_labels();
        let mut count = 0u64;
        for_each_permutation(labels.len(), &mut |perm| {
            let relabel = |v: PatternVertex| match v {
                PatternVertex::President => PatternVertex::President,
                PatternVertex::Free(l) => {
                    let pos = labels.iter().position(|&x| x == l).unwrap();
                    PatternVertex::Free(labels[perm[pos]])
                }
            };
            let mut mapped: Vec<PatternEdge> =
                self.edges.iter().map(|e| e.relabel(&relabel)).collect();
            mapped.sort();
            if mapped == self.edges {
                count += 1;
            }
        });
        count
    }

    /// Exact pattern sum by depth-first enumeration of injective free-vertex
    /// placements on the citizens `2..=n`, divided by the automorphism count.
    ///
    /// An empty placement set (more free vertices than citizens) gives 0.
    pub fn eval_direct(&self, profile: &BiasProfile) -> Result<Rat, RoundingError> {
        let n = profile.n();
        if n > DIRECT_EVAL_MAX_VARS {
            return Err(RoundingError::DirectEvalCap {
                k: n,
                cap: DIRECT_EVAL_MAX_VARS,
            });
        }
        let labels = self.free_labels();
        // Free labels are placed in sorted order; an edge becomes evaluable at
        // the depth where its last free vertex is placed, and president-only
        // edges form a constant prefix at depth 0.
        let slot_of = |v: PatternVertex| -> Slot {
            match v {
                PatternVertex::President => Slot::President,
                PatternVertex::Free(l) => {
                    Slot::Assigned(labels.iter().position(|&x| x == l).unwrap())
                }
            }
        };
        let mut edges_at: Vec<Vec<CompiledEdge>> = vec![Vec::new(); labels.len() + 1];
        for edge in &self.edges {
            let compiled = match edge {
                PatternEdge::Single(v) => CompiledEdge::Single(slot_of(*v)),
                PatternEdge::Pair(a, b) => CompiledEdge::Pair(slot_of(*a), slot_of(*b)),
            };
            let depth = compiled
                .slots()
                .into_iter()
                .map(|s| match s {
                    Slot::President => 0,
                    Slot::Assigned(i) => i + 1,
                })
                .max()
                .unwrap();
            edges_at[depth].push(compiled);
        }
        let mut prefix = Rat::one();
        for edge in &edges_at[0] {
            prefix = prefix * edge.value(&[], profile);
        }
        let citizens: Vec<u32> = (2..=n).collect();
        let mut total = Rat::zero();
        let mut assignment: Vec<u32> = Vec::with_capacity(labels.len());
        let mut used = vec![false; citizens.len()];
        walk(
            &edges_at,
            profile,
            &citizens,
            &mut used,
            &mut assignment,
            &prefix,
            &mut total,
        );
        let aut = self.automorphism_count();
        Ok(total / Rat::int(aut as i64))
    }
}

/// A pattern vertex resolved for enumeration: the president, or the position
/// of a free label in the placement stack.
#[derive(Clone, Copy)]
enum Slot {
    President,
    Assigned(usize),
}

impl Slot {
    fn index(self, assignment: &[u32]) -> u32 {
        match self {
            Slot::President => 1,
            Slot::Assigned(i) => assignment[i],
        }
    }
}

#[derive(Clone, Copy)]
enum CompiledEdge {
    Single(Slot),
    Pair(Slot, Slot),
}

impl CompiledEdge {
    fn slots(self) -> Vec<Slot> {
        match self {
            CompiledEdge::Single(v) => vec![v],
            CompiledEdge::Pair(a, b) => vec![a, b],
        }
    }

    fn value(self, assignment: &[u32], profile: &BiasProfile) -> Rat {
        match self {
            CompiledEdge::Single(v) => profile.single(v.index(assignment)).clone(),
            CompiledEdge::Pair(a, b) => profile
                .pair(a.index(assignment), b.index(assignment))
                .clone(),
        }
    }
}

fn walk(
    edges_at: &[Vec<CompiledEdge>],
    profile: &BiasProfile,
    citizens: &[u32],
    used: &mut Vec<bool>,
    assignment: &mut Vec<u32>,
    partial: &Rat,
    total: &mut Rat,
) {
    let depth = assignment.len() + 1;
    if depth == edges_at.len() {
        *total += partial;
        return;
    }
    for slot in 0..citizens.len() {
        if used[slot] {
            continue;
        }
        used[slot] = true;
        assignment.push(citizens[slot]);
        let mut product = partial.clone();
        for edge in &edges_at[depth] {
            product = product * edge.value(assignment, profile);
            if product.is_zero() {
                break;
            }
        }
        if !product.is_zero() {
            walk(
                edges_at, profile, citizens, used, assignment, &product, total,
            );
        }
        assignment.pop();
        used[slot] = false;
    }
}

/// Calls `f` with every permutation of `0..n` (n <= 7 in practice).
pub(crate) fn for_each_permutation(n: usize, f: &mut dyn FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    permute_rec(&mut perm, 0, f);
}

fn permute_rec(perm: &mut Vec<usize>, depth: usize, f: &mut dyn FnMut(&[usize])) {
    if depth == perm.len() {
        f(perm);
        return;
    }
    for i in depth..perm.len() {
        perm.swap(depth, i);
        permute_rec(perm, depth + 1, f);
        perm.swap(depth, i);
    }
}
