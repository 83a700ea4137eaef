//! Degree-2 moment polytopes of constraints: assignment embedding, vertex
//! enumeration, bias projection, and exact membership with certificates.
//!
//! A point of arity `k` has `k + k(k-1)/2` coordinates: the degree-1 block
//! followed by the pair block in lexicographic order `(1,2), (1,3), ...,
//! (1,k), (2,3), ...`. All modules and the JSON schema share this ordering.

use serde::{Deserialize, Serialize};

use crate::hull::{hull_member, HullError, HullResult};
use crate::matrix::SymMatrix;
use crate::predicate::{Constraint, Predicate, PredicateError, ZeroValue};
use crate::rat::Rat;

/// Cap on constraint arity for vertex-list membership (2^20 vertices).
pub const MAX_MEMBERSHIP_ARITY: u8 = 20;

/// Index of pair `(i,j)`, `1 <= i < j <= n`, in the lexicographic pair block.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(1 <= i && i < j && j <= n);
    (i - 1) * (2 * n - i) / 2 + (j - i - 1)
}

/// A point in the degree-2 moment space of `k` variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolytopePoint {
    pub k: u8,
    /// Degree-1 block then lexicographic pair block.
    pub coords: Vec<Rat>,
}

impl PolytopePoint {
    pub fn dimension(k: u8) -> usize {
        let k = k as usize;
        k + k * (k - 1) / 2
    }

    pub fn zero(k: u8) -> Self {
        PolytopePoint {
            k,
            coords: vec![Rat::zero(); Self::dimension(k)],
        }
    }

    /// Degree-1 coordinate of variable `i` (1-based).
    pub fn single(&self, i: usize) -> &Rat {
        &self.coords[i - 1]
    }

    /// Pair coordinate of `(i,j)`, `i < j` (1-based).
    pub fn pair(&self, i: usize, j: usize) -> &Rat {
        &self.coords[self.k as usize + pair_index(self.k as usize, i, j)]
    }
}

/// The moment embedding of a `±1` assignment: coordinates, then products.
pub fn embed(x: &[i8]) -> PolytopePoint {
    let k = x.len();
    assert!(k >= 1 && k <= MAX_MEMBERSHIP_ARITY as usize);
    let mut coords = Vec::with_capacity(PolytopePoint::dimension(k as u8));
    for &v in x {
        debug_assert!(v == 1 || v == -1);
        coords.push(Rat::int(i64::from(v)));
    }
    for i in 0..k {
        for j in i + 1..k {
            coords.push(Rat::int(i64::from(x[i]) * i64::from(x[j])));
        }
    }
    PolytopePoint {
        k: k as u8,
        coords,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolytopeError {
    #[error("arity {0} exceeds the membership cap of {MAX_MEMBERSHIP_ARITY}")]
    ArityTooLarge(u8),
    #[error("constraint has no satisfying assignment")]
    Unsatisfiable,
    #[error("index set must be strictly increasing, got {0:?}")]
    NotIncreasing(Vec<u32>),
    #[error("index set size {got} does not match arity {want}")]
    IndexSize { got: usize, want: usize },
    #[error("variable index {index} out of range 1..={n}")]
    IndexOutOfRange { index: u32, n: u32 },
    #[error("bias entry {0} outside [-1, 1]")]
    BiasOutOfRange(Rat),
    #[error("duplicate pair ({0},{1}) in bias profile")]
    DuplicatePair(u32, u32),
    #[error("pair ({0},{1}) must have i < j")]
    PairOrder(u32, u32),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    ZeroValue(#[from] ZeroValue),
    #[error(transparent)]
    Hull(#[from] HullError),
}

/// All `2^k` embedded assignments.
pub fn all_vertices(k: u8) -> Vec<PolytopePoint> {
    assert!(k >= 1 && k <= MAX_MEMBERSHIP_ARITY);
    (0u32..1 << k).map(|m| embed(&mask_to_pm(m, k))).collect()
}

fn mask_to_pm(mask: u32, k: u8) -> Vec<i8> {
    (0..k as usize)
        .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// Vertices of the constraint polytope: embeddings of every assignment to the
/// constraint's sorted variable set that the constraint accepts. Errors if no
/// assignment is accepted.
pub fn ktw_vertices(
    pred: &Predicate,
    c: &Constraint,
) -> Result<Vec<PolytopePoint>, PolytopeError> {
    let k = c.arity() as u8;
    if k > MAX_MEMBERSHIP_ARITY {
        return Err(PolytopeError::ArityTooLarge(k));
    }
    let mut out = Vec::new();
    for mask in 0u32..1 << k {
        let values = mask_to_pm(mask, k);
        if c.eval_on_sorted(pred, &values)? == 1 {
            out.push(embed(&values));
        }
    }
    if out.is_empty() {
        return Err(PolytopeError::Unsatisfiable);
    }
    Ok(out)
}

/// First and second moments of `n` variables; unlisted pairs are 0 and are
/// omitted from the JSON form `{"n":4,"b":[...],"bij":[[i,j,"r"],...]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiasProfile {
    n: u32,
    b: Vec<Rat>,
    pairs: Vec<Rat>,
}

#[derive(Serialize, Deserialize)]
struct BiasProfileWire {
    n: u32,
    b: Vec<Rat>,
    bij: Vec<(u32, u32, Rat)>,
}

impl Serialize for BiasProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut bij = Vec::new();
        for i in 1..=self.n as usize {
            for j in i + 1..=self.n as usize {
                let v = &self.pairs[pair_index(self.n as usize, i, j)];
                if !v.is_zero() {
                    bij.push((i as u32, j as u32, v.clone()));
                }
            }
        }
        BiasProfileWire {
            n: self.n,
            b: self.b.clone(),
            bij,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BiasProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = BiasProfileWire::deserialize(d)?;
        if wire.b.len() != wire.n as usize {
            return Err(serde::de::Error::custom(format!(
                "expected {} first moments, got {}",
                wire.n,
                wire.b.len()
            )));
        }
        let mut p = BiasProfile::zero(wire.n);
        p.b = wire.b;
        for (i, j, v) in wire.bij {
            p.set_pair(i, j, v).map_err(serde::de::Error::custom)?;
        }
        Ok(p)
    }
}

impl BiasProfile {
    pub fn zero(n: u32) -> Self {
        let nn = n as usize;
        BiasProfile {
            n,
            b: vec![Rat::zero(); nn],
            pairs: vec![Rat::zero(); nn * (nn - 1) / 2],
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn single(&self, i: u32) -> &Rat {
        assert!(1 <= i && i <= self.n);
        &self.b[(i - 1) as usize]
    }

    /// Pair moment of `{i,j}`, order-insensitive.
    pub fn pair(&self, i: u32, j: u32) -> &Rat {
        assert!(i != j && 1 <= i.min(j) && i.max(j) <= self.n);
        let (i, j) = (i.min(j) as usize, i.max(j) as usize);
        &self.pairs[pair_index(self.n as usize, i, j)]
    }

    pub fn set_single(&mut self, i: u32, v: Rat) {
        assert!(1 <= i && i <= self.n);
        self.b[(i - 1) as usize] = v;
    }

    pub fn set_pair(&mut self, i: u32, j: u32, v: Rat) -> Result<(), PolytopeError> {
        if i >= j {
            return Err(PolytopeError::PairOrder(i, j));
        }
        if j > self.n {
            return Err(PolytopeError::IndexOutOfRange {
                index: j,
                n: self.n,
            });
        }
        self.pairs[pair_index(self.n as usize, i as usize, j as usize)] = v;
        Ok(())
    }

    /// Range check: every moment must lie in `[-1, 1]`.
    pub fn validate(&self) -> Result<(), PolytopeError> {
        let one = Rat::one();
        let neg = -Rat::one();
        for v in self.b.iter().chain(self.pairs.iter()) {
            if *v > one || *v < neg {
                return Err(PolytopeError::BiasOutOfRange(v.clone()));
            }
        }
        Ok(())
    }

    /// Exact moments of a finitely supported distribution on `{-1,+1}^n`.
    /// Weights need not be normalized in advance; they must sum to a nonzero
    /// total and are divided through.
    pub fn from_distribution(n: u32, support: &[(Vec<i8>, Rat)]) -> Self {
        assert!(!support.is_empty());
        let mut total = Rat::zero();
        let mut p = BiasProfile::zero(n);
        for (x, w) in support {
            assert_eq!(x.len(), n as usize);
            total += w;
            for (i, &v) in x.iter().enumerate() {
                let delta = w * &Rat::int(i64::from(v));
                p.b[i] += &delta;
                for (j, &u) in x.iter().enumerate().skip(i + 1) {
                    p.pairs[pair_index(n as usize, i + 1, j + 1)] +=
                        &(w * &Rat::int(i64::from(v) * i64::from(u)));
                }
            }
        }
        assert!(!total.is_zero(), "distribution has zero mass");
        for v in p.b.iter_mut().chain(p.pairs.iter_mut()) {
            *v = &*v / &total;
        }
        p
    }

    /// The `(n+1) x (n+1)` moment matrix: unit corner and diagonal, first
    /// moments on the border, pair moments in the body.
    pub fn bordered_matrix(&self) -> SymMatrix {
        let n = self.n as usize;
        let mut m = SymMatrix::identity(n + 1);
        for i in 1..=n {
            m.set(0, i, self.b[i - 1].clone());
            for j in i + 1..=n {
                m.set(i, j, self.pairs[pair_index(n, i, j)].clone());
            }
        }
        m
    }
}

/// Restriction of a profile to an increasing index set, laid out in the
/// embedding coordinate order.
pub fn bias_projection(b: &BiasProfile, index_set: &[u32]) -> Result<PolytopePoint, PolytopeError> {
    for w in index_set.windows(2) {
        if w[0] >= w[1] {
            return Err(PolytopeError::NotIncreasing(index_set.to_vec()));
        }
    }
    if let Some(&last) = index_set.last() {
        if last > b.n() {
            return Err(PolytopeError::IndexOutOfRange {
                index: last,
                n: b.n(),
            });
        }
    }
    if index_set.first().map_or(false, |&f| f == 0) {
        return Err(PolytopeError::IndexOutOfRange { index: 0, n: b.n() });
    }
    let k = index_set.len();
    assert!(k >= 1 && k <= MAX_MEMBERSHIP_ARITY as usize);
    let mut coords = Vec::with_capacity(PolytopePoint::dimension(k as u8));
    for &i in index_set {
        coords.push(b.single(i).clone());
    }
    for s in 0..k {
        for t in s + 1..k {
            coords.push(b.pair(index_set[s], index_set[t]).clone());
        }
    }
    Ok(PolytopePoint {
        k: k as u8,
        coords,
    })
}

/// Outcome of a perfect-completeness membership test for one constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdpMembership {
    /// The projected point that was tested.
    pub point: PolytopePoint,
    /// The vertices of the constraint polytope, in enumeration order.
    pub vertices: Vec<PolytopePoint>,
    /// Inside with distribution weights, or outside with a halfspace.
    pub result: HullResult,
}

impl SdpMembership {
    pub fn is_member(&self) -> bool {
        self.result.is_inside()
    }
}

/// Tests whether the profile's projection onto the constraint's variables
/// lies in the constraint polytope. An inside certificate is a distribution
/// on satisfying assignments whose moments reproduce the projection.
pub fn perfect_sdp_check(
    b: &BiasProfile,
    pred: &Predicate,
    c: &Constraint,
) -> Result<SdpMembership, PolytopeError> {
    let vars = c.sorted_vars();
    let point = bias_projection(b, &vars)?;
    let vertices = ktw_vertices(pred, c)?;
    let vertex_coords: Vec<Vec<Rat>> = vertices.iter().map(|v| v.coords.clone()).collect();
    let result = hull_member(&point.coords, &vertex_coords)?;
    Ok(SdpMembership {
        point,
        vertices,
        result,
    })
}

/// Recomputes the moment point of a weighted vertex combination; used to
/// substitution-check inside certificates.
pub fn certified_moments(vertices: &[PolytopePoint], weights: &[Rat]) -> PolytopePoint {
    assert_eq!(vertices.len(), weights.len());
    assert!(!vertices.is_empty());
    let k = vertices[0].k;
    let mut acc = PolytopePoint::zero(k);
    for (v, w) in vertices.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        for (a, c) in acc.coords.iter_mut().zip(v.coords.iter()) {
            *a += &(w * c);
        }
    }
    acc
}
