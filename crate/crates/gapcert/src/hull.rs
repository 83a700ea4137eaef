//! Exact convex-hull membership with constructive certificates.
//!
//! Membership of a query point in the hull of a finite point set is decided by
//! a rational phase-one simplex. The answer is never a bare boolean: a point
//! inside the hull comes with convex weights reproducing it exactly, and a
//! point outside comes with a separating halfspace, so either verdict can be
//! re-checked by substitution.

use serde::{Deserialize, Serialize};

use crate::rat::Rat;

/// Certificate returned by [`hull_member`]. Exactly one variant is possible
/// for any query; both are substitution-checkable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HullResult {
    /// Convex weights over the input points (same order, most entries zero)
    /// with nonnegative entries summing to one and reproducing the query.
    Inside { weights: Vec<Rat> },
    /// A halfspace `normal . q <= threshold` containing every input point,
    /// with `normal . query > threshold`.
    Outside { normal: Vec<Rat>, threshold: Rat },
}

impl HullResult {
    pub fn is_inside(&self) -> bool {
        matches!(self, HullResult::Inside { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HullError {
    #[error("hull membership queried against an empty point set")]
    NoPoints,
    #[error("dimension mismatch: query has {query} coordinates, point {index} has {point}")]
    DimensionMismatch {
        query: usize,
        index: usize,
        point: usize,
    },
}

/// Decides whether `query` lies in the convex hull of `points`.
pub fn hull_member(query: &[Rat], points: &[Vec<Rat>]) -> Result<HullResult, HullError> {
    if points.is_empty() {
        return Err(HullError::NoPoints);
    }
    let d = query.len();
    for (index, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(HullError::DimensionMismatch {
                query: d,
                index,
                point: p.len(),
            });
        }
    }
    // Vertices answer themselves.
    if let Some(hit) = points.iter().position(|p| p.as_slice() == query) {
        let mut weights = vec![Rat::zero(); points.len()];
        weights[hit] = Rat::one();
        return Ok(HullResult::Inside { weights });
    }
    Ok(phase_one(query, points))
}

/// Phase-one simplex for `A w = b, w >= 0` where the columns of `A` are the
/// points extended by a final 1-row, and `b` is the query extended by 1.
/// Bland's rule (smallest eligible index) guarantees termination.
fn phase_one(query: &[Rat], points: &[Vec<Rat>]) -> HullResult {
    let d = query.len();
    let rows = d + 1;
    let m = points.len();
    let width = m + rows + 1; // original columns, artificial columns, rhs

    // Row i of the system; flip rows so the right-hand side is nonnegative.
    let mut flip = vec![false; rows];
    let mut tab: Vec<Vec<Rat>> = Vec::with_capacity(rows);
    for i in 0..rows {
        let b = if i < d { query[i].clone() } else { Rat::one() };
        let neg = b.is_negative();
        flip[i] = neg;
        let sign = if neg { Rat::int(-1) } else { Rat::one() };
        let mut row = Vec::with_capacity(width);
        for p in points {
            let a = if i < d { p[i].clone() } else { Rat::one() };
            row.push(&sign * &a);
        }
        for k in 0..rows {
            row.push(if k == i { sign.clone() } else { Rat::zero() });
        }
        row.push(&sign * &b);
        tab.push(row);
    }

    // Reduced-cost row for minimizing the artificial sum: the artificial
    // columns start basic, so original column j carries -(column sum).
    let mut obj = vec![Rat::zero(); width];
    for j in 0..m {
        let mut s = Rat::zero();
        for row in tab.iter() {
            s += &row[j];
        }
        obj[j] = -s;
    }

    let mut basis: Vec<usize> = (m..m + rows).collect();

    loop {
        // Entering column: smallest original index with a negative reduced
        // cost. Departed artificials never re-enter; if no original column
        // improves, the current dual prices already certify the verdict.
        let enter = match (0..m).find(|&j| obj[j].is_negative()) {
            Some(j) => j,
            None => break,
        };
        // Ratio test over rows with a positive pivot entry; ties broken by the
        // smallest basis variable (Bland).
        let mut leave: Option<(usize, Rat)> = None;
        for r in 0..rows {
            if !tab[r][enter].is_positive() {
                continue;
            }
            let ratio = &tab[r][width - 1] / &tab[r][enter];
            let better = match &leave {
                None => true,
                Some((lr, lratio)) => {
                    ratio < *lratio || (ratio == *lratio && basis[r] < basis[*lr])
                }
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        let (lr, _) = leave.expect("phase-one objective is bounded below by zero");

        // Pivot.
        let pivot = tab[lr][enter].clone();
        for v in tab[lr].iter_mut() {
            *v = &*v / &pivot;
        }
        let pivot_row = tab[lr].clone();
        for r in 0..rows {
            if r == lr || tab[r][enter].is_zero() {
                continue;
            }
            let f = tab[r][enter].clone();
            for (v, pv) in tab[r].iter_mut().zip(pivot_row.iter()) {
                *v -= &f * pv;
            }
        }
        if !obj[enter].is_zero() {
            let f = obj[enter].clone();
            for (v, pv) in obj.iter_mut().zip(pivot_row.iter()) {
                *v -= &f * pv;
            }
        }
        basis[lr] = enter;
    }

    // Residual infeasibility = sum of the basic artificial values.
    let mut residual = Rat::zero();
    for (r, &bv) in basis.iter().enumerate() {
        if bv >= m {
            residual += &tab[r][width - 1];
        }
    }

    if residual.is_zero() {
        let mut weights = vec![Rat::zero(); m];
        for (r, &bv) in basis.iter().enumerate() {
            if bv < m {
                weights[bv] = tab[r][width - 1].clone();
            }
        }
        HullResult::Inside { weights }
    } else {
        // Dual prices from the artificial reduced costs: y_i = 1 - obj[m+i],
        // unflipped back to the original row orientation. They satisfy
        // y . (p_j, 1) <= 0 for every point and y . (query, 1) > 0.
        let mut y = Vec::with_capacity(rows);
        for i in 0..rows {
            let yi = Rat::one() - &obj[m + i];
            y.push(if flip[i] { -yi } else { yi });
        }
        let threshold = -y[d].clone();
        let normal = y[..d].to_vec();
        HullResult::Outside { normal, threshold }
    }
}

/// Substitution check for either certificate; used by tests and callers that
/// want end-to-end validation of a verdict.
pub fn check_certificate(query: &[Rat], points: &[Vec<Rat>], cert: &HullResult) -> bool {
    match cert {
        HullResult::Inside { weights } => {
            if weights.len() != points.len() {
                return false;
            }
            if weights.iter().any(|w| w.is_negative()) {
                return false;
            }
            let total: Rat = weights.iter().sum();
            if total != Rat::one() {
                return false;
            }
            for c in 0..query.len() {
                let mut acc = Rat::zero();
                for (w, p) in weights.iter().zip(points.iter()) {
                    if !w.is_zero() {
                        acc += w * &p[c];
                    }
                }
                if acc != query[c] {
                    return false;
                }
            }
            true
        }
        HullResult::Outside { normal, threshold } => {
            if normal.len() != query.len() {
                return false;
            }
            let dot = |p: &[Rat]| -> Rat {
                normal
                    .iter()
                    .zip(p.iter())
                    .map(|(a, b)| a * b)
                    .sum()
            };
            points.iter().all(|p| dot(p) <= *threshold) && dot(query) > *threshold
        }
    }
}
