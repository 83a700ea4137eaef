//! Closed-form bias statistics and the disconnected-pattern sums built from
//! them.
//!
//! [`HypergraphPattern::eval_direct`](super::hypergraph::HypergraphPattern)
//! enumerates injective placements and is exponential in the pattern size; it
//! is the oracle. This module is the fast path: every pattern that the
//! rounding schemes need is recognized (up to relabeling of free vertices) as
//! either one of 38 cataloged connected statistics with a polynomial closed
//! form, or one of nine disconnected shapes whose values follow from the
//! connected statistics by inclusion–exclusion. All closed forms run in
//! `O(k^3)` scalar operations, so they stay usable far past the direct
//! evaluator's variable cap.
//!
//! Statistics are computed generically over [`StatScalar`] so the same code
//! runs exactly over [`Rat`] and, for profiles with a known common
//! denominator, over fixed-point `i128` — the hot path of the threshold scan,
//! where allocating big rationals per entry would dominate the runtime.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hypergraph::{for_each_permutation, HypergraphPattern, PatternEdge, PatternVertex};
use super::{EvalRoute, RoundingError};
use crate::exec::Exec;
use crate::polytope::BiasProfile;
use crate::rat::Rat;

/// Scalar ring the statistics are computed over. `div_exact` is division that
/// the caller guarantees to be exact (the closed forms only divide by the
/// combinatorial multiplicities 2 and 6, which always divide evenly).
pub trait StatScalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    fn small(v: i64) -> Self;
    fn div_exact(self, d: i64) -> Self;
}

impl StatScalar for Rat {
    fn zero() -> Self {
        Rat::zero()
    }

    fn small(v: i64) -> Self {
        Rat::int(v)
    }

    fn div_exact(self, d: i64) -> Self {
        self / Rat::int(d)
    }
}

impl StatScalar for i128 {
    fn zero() -> Self {
        0
    }

    fn small(v: i64) -> Self {
        i128::from(v)
    }

    fn div_exact(self, d: i64) -> Self {
        let d = i128::from(d);
        debug_assert_eq!(self % d, 0, "inexact scalar division");
        self / d
    }
}

/// A bias profile in dense per-vertex layout: the president's first moment,
/// the citizens' first moments, the president–citizen pair moments, and the
/// full citizen–citizen pair matrix (row-major `(k-1) x (k-1)`, symmetric,
/// zero diagonal). Index `v` stands for citizen variable `v + 2`.
///
/// The `i128` instantiation stores `scale` times each moment; with weights
/// and scale bounded by a few hundred and `k <= 64`, every intermediate in
/// [`ConnectedStats::compute`] stays far below `i128::MAX` (the worst
/// fourth-degree statistic is bounded by `k^4 (scale)^4 <= 2^24 * 2^40`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseProfile<T> {
    pub(crate) k: u32,
    pub(crate) president: T,
    pub(crate) citizen: Vec<T>,
    pub(crate) president_pair: Vec<T>,
    pub(crate) pair: Vec<T>,
}

impl<T> DenseProfile<T> {
    pub fn k(&self) -> u32 {
        self.k
    }
}

impl DenseProfile<Rat> {
    /// Exact dense form of a profile (variable 1 is the president).
    pub fn from_profile(p: &BiasProfile) -> Self {
        let k = p.n();
        assert!(k >= 2, "need a president and at least one citizen");
        let cn = (k - 1) as usize;
        let mut pair = vec![Rat::zero(); cn * cn];
        for v in 0..cn {
            for w in 0..cn {
                if w != v {
                    pair[v * cn + w] = p.pair(v as u32 + 2, w as u32 + 2).clone();
                }
            }
        }
        DenseProfile {
            k,
            president: p.single(1).clone(),
            citizen: (0..cn).map(|v| p.single(v as u32 + 2).clone()).collect(),
            president_pair: (0..cn).map(|v| p.pair(1, v as u32 + 2).clone()).collect(),
            pair,
        }
    }
}

impl DenseProfile<i128> {
    /// Fixed-point dense form: every stored value is `scale` times the exact
    /// moment. Errors if any denominator fails to divide `scale`.
    pub fn scaled(p: &BiasProfile, scale: i64) -> Result<Self, RoundingError> {
        assert!(scale > 0, "scale must be positive");
        let k = p.n();
        assert!(k >= 2, "need a president and at least one citizen");
        let cn = (k - 1) as usize;
        let fix = |r: &Rat| -> Result<i128, RoundingError> {
            let v = r.inner() * &BigRational::from_integer(BigInt::from(scale));
            if !v.is_integer() {
                return Err(RoundingError::ScaleMismatch { scale });
            }
            v.to_integer()
                .to_i128()
                .ok_or(RoundingError::ScaleMismatch { scale })
        };
        let mut pair = vec![0i128; cn * cn];
        for v in 0..cn {
            for w in 0..cn {
                if w != v {
                    pair[v * cn + w] = fix(p.pair(v as u32 + 2, w as u32 + 2))?;
                }
            }
        }
        let mut citizen = Vec::with_capacity(cn);
        let mut president_pair = Vec::with_capacity(cn);
        for v in 0..cn {
            citizen.push(fix(p.single(v as u32 + 2))?);
            president_pair.push(fix(p.pair(1, v as u32 + 2))?);
        }
        Ok(DenseProfile {
            k,
            president: fix(p.single(1))?,
            citizen,
            president_pair,
            pair,
        })
    }

    /// Moments of a single `+1`/`-1` assignment (`x[0]` is the president),
    /// at scale 1.
    pub fn from_assignment(x: &[i8]) -> Self {
        let k = x.len();
        assert!(k >= 2, "need a president and at least one citizen");
        assert!(x.iter().all(|&v| v == 1 || v == -1), "entries must be +-1");
        let cn = k - 1;
        let mut pair = vec![0i128; cn * cn];
        for v in 0..cn {
            for w in 0..cn {
                if w != v {
                    pair[v * cn + w] = i128::from(x[v + 1]) * i128::from(x[w + 1]);
                }
            }
        }
        DenseProfile {
            k: k as u32,
            president: i128::from(x[0]),
            citizen: (0..cn).map(|v| i128::from(x[v + 1])).collect(),
            president_pair: (0..cn)
                .map(|v| i128::from(x[0]) * i128::from(x[v + 1]))
                .collect(),
            pair,
        }
    }

    /// Unnormalized moments of a positively weighted set of assignments,
    /// entirely in integer arithmetic. Returns the profile together with its
    /// scale, the weight total: each stored value is `scale` times the mixture
    /// moment.
    pub fn from_weighted_assignments(
        k: usize,
        terms: &[(Vec<i8>, i64)],
    ) -> Result<(Self, i64), RoundingError> {
        assert!(k >= 2, "need a president and at least one citizen");
        let cn = k - 1;
        let mut scale = 0i64;
        let mut president = 0i128;
        let mut citizen = vec![0i128; cn];
        let mut president_pair = vec![0i128; cn];
        let mut pair = vec![0i128; cn * cn];
        for (index, (x, weight)) in terms.iter().enumerate() {
            assert_eq!(x.len(), k, "assignment length mismatch");
            assert!(x.iter().all(|&v| v == 1 || v == -1), "entries must be +-1");
            if *weight <= 0 {
                return Err(RoundingError::WeightNotPositive { index });
            }
            scale += *weight;
            let w128 = i128::from(*weight);
            president += w128 * i128::from(x[0]);
            for v in 0..cn {
                let xv = i128::from(x[v + 1]);
                citizen[v] += w128 * xv;
                president_pair[v] += w128 * i128::from(x[0]) * xv;
                for w in (v + 1)..cn {
                    let prod = w128 * xv * i128::from(x[w + 1]);
                    pair[v * cn + w] += prod;
                    pair[w * cn + v] += prod;
                }
            }
        }
        if scale == 0 {
            return Err(RoundingError::WeightSumZero);
        }
        Ok((
            DenseProfile {
                k: k as u32,
                president,
                citizen,
                president_pair,
                pair,
            },
            scale,
        ))
    }
}

/// The 38 connected statistics with cataloged closed forms. Sums run over
/// distinct citizens; `b` are citizen first moments, `q` president–citizen
/// pair moments, `M` the citizen pair matrix, and `alpha` the president's
/// first moment. Each value equals its pattern's [`eval_direct`] value (the
/// injective sum divided by pattern automorphisms).
///
/// [`eval_direct`]: super::hypergraph::HypergraphPattern::eval_direct
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectedStats<T> {
    /// `sum_v b_v`
    pub beta: T,
    /// President first moment.
    pub alpha: T,
    /// `sum_v q_v`
    pub q_sum: T,
    /// `sum_{v<w} M_vw`
    pub p_sum: T,
    /// `sum_{v<w} M_vw^2`
    pub d2: T,
    /// `sum_{v<w} M_vw^3`
    pub t3: T,
    /// Wedges: `sum_v e_2(row v)`.
    pub w: T,
    /// `sum_{v != w} b_v M_vw`
    pub ae: T,
    /// `sum_v b_v q_v`
    pub ape: T,
    /// `sum_{v != w} q_v M_vw`
    pub pw: T,
    /// `sum_{distinct (v,u,w)} b_v M_vu M_uw`
    pub ap3: T,
    /// `sum_v b_v e_2(row v)`
    pub as2: T,
    /// `sum_{v != w} b_v M_vw^2`
    pub ad2: T,
    /// `sum_{v != w} b_v M_vw q_w`
    pub apwv: T,
    /// `sum_{v != w} b_v q_v M_vw`
    pub apwc: T,
    /// Three-leaf stars: `sum_v e_3(row v)`.
    pub st3: T,
    /// Triangles.
    pub tr: T,
    /// Paths on four vertices (each counted once).
    pub p3: T,
    /// `sum_{distinct (v,w,x)} M_vw^2 M_vx`
    pub dp: T,
    /// `sum_v b_v e_3(row v)`
    pub ast3c: T,
    /// `sum_{c != l} b_l M_cl e_2(row c without l)`
    pub ast3l: T,
    /// `sum_v b_v (triangles at v)`
    pub atrv: T,
    /// `sum_{distinct (a,v,c,d)} b_v M_av M_vc M_cd` (weight beside an inner
    /// path vertex).
    pub ap3m: T,
    /// `sum_{distinct (a,v,c,d)} b_a M_av M_vc M_cd` (weight on a path end).
    pub a4p1: T,
    /// `sum_{distinct (v,w,x)} b_v M_vw^2 M_vx`
    pub adpc: T,
    /// `sum_{distinct (v,w,x)} b_w M_vw^2 M_vx`
    pub adpp: T,
    /// `sum_{distinct (v,w,x)} b_x M_vw^2 M_vx`
    pub adpl: T,
    /// `sum_{v != w} b_v M_vw^3`
    pub at3: T,
    /// `sum_c q_c e_2(row c)`
    pub pst: T,
    /// `sum_{distinct (c,x,y)} q_c M_cx M_xy`
    pub pp3: T,
    /// `sum_{c != z} q_c M_cz^2`
    pub pdp: T,
    /// `sum_c b_c q_c e_2(row c)`
    pub apst: T,
    /// `sum_{distinct (c,w,x)} b_w q_c M_cw M_cx`
    pub apstl: T,
    /// `sum_{distinct (c,x,y)} b_c q_c M_cx M_xy`
    pub app3a: T,
    /// `sum_{distinct (c,x,y)} b_x q_c M_cx M_xy`
    pub app3b: T,
    /// `sum_{distinct (c,x,y)} b_y q_c M_cx M_xy`
    pub app3c: T,
    /// `sum_{c != z} b_c q_c M_cz^2`
    pub adppr: T,
    /// `sum_{c != z} b_z q_c M_cz^2`
    pub adppr2: T,
}

impl<T: StatScalar> ConnectedStats<T> {
    /// Evaluates every statistic in `O(k^3)` scalar operations, sharing
    /// per-vertex accumulators across the closed forms.
    pub fn compute(p: &DenseProfile<T>) -> Self {
        let cn = p.citizen.len();
        let b = &p.citizen;
        let q = &p.president_pair;
        let m = |v: usize, w: usize| &p.pair[v * cn + w];

        // Per-vertex rows: plain, squared and cubed row sums, and the same
        // rows weighted by the other endpoint's b / q moments.
        let mut r = vec![T::zero(); cn];
        let mut t = vec![T::zero(); cn];
        let mut p3row = vec![T::zero(); cn];
        let mut mq = vec![T::zero(); cn];
        let mut mb = vec![T::zero(); cn];
        let mut bm2 = vec![T::zero(); cn];
        let mut bm3 = vec![T::zero(); cn];
        let mut qm2 = vec![T::zero(); cn];
        for v in 0..cn {
            for w in 0..cn {
                if w == v {
                    continue;
                }
                let e = m(v, w).clone();
                let e2 = e.clone() * e.clone();
                let e3 = e2.clone() * e.clone();
                r[v] += e.clone();
                t[v] += e2.clone();
                p3row[v] += e3.clone();
                mq[v] += e.clone() * q[w].clone();
                mb[v] += e * b[w].clone();
                bm2[v] += e2.clone() * b[w].clone();
                bm3[v] += e3 * b[w].clone();
                qm2[v] += e2 * q[w].clone();
            }
        }
        // Second pass: row sums of neighbors, and the even/divisible row
        // polynomials e_2 = (r^2 - t)/2 and e_3 = (r^3 - 3rt + 2*sum M^3)/6.
        let mut mr = vec![T::zero(); cn];
        for v in 0..cn {
            for w in 0..cn {
                if w != v {
                    mr[v] += m(v, w).clone() * r[w].clone();
                }
            }
        }
        let mut he2 = Vec::with_capacity(cn);
        let mut e3v = Vec::with_capacity(cn);
        for v in 0..cn {
            let r2 = r[v].clone() * r[v].clone();
            he2.push((r2.clone() - t[v].clone()).div_exact(2));
            let cube = r2 * r[v].clone() - T::small(3) * (r[v].clone() * t[v].clone())
                + T::small(2) * p3row[v].clone();
            e3v.push(cube.div_exact(6));
        }
        // Length-2 walk matrices, plain and with a b-weighted midpoint. The
        // zero diagonal of M silently drops the excluded endpoints.
        let mut s2 = vec![T::zero(); cn * cn];
        let mut sb2 = vec![T::zero(); cn * cn];
        for v in 0..cn {
            for u in 0..cn {
                if u == v {
                    continue;
                }
                let mut acc = T::zero();
                let mut accb = T::zero();
                for a in 0..cn {
                    if a == v || a == u {
                        continue;
                    }
                    let prod = m(v, a).clone() * m(a, u).clone();
                    acc += prod.clone();
                    accb += b[a].clone() * prod;
                }
                s2[v * cn + u] = acc;
                sb2[v * cn + u] = accb;
            }
        }

        let mut beta = T::zero();
        let mut q_sum = T::zero();
        let mut sr = T::zero();
        let mut st = T::zero();
        let mut sp3 = T::zero();
        let mut w_ = T::zero();
        let mut ae = T::zero();
        let mut ape = T::zero();
        let mut pw = T::zero();
        let mut ap3 = T::zero();
        let mut as2 = T::zero();
        let mut ad2 = T::zero();
        let mut apwv = T::zero();
        let mut apwc = T::zero();
        let mut st3 = T::zero();
        let mut dp = T::zero();
        let mut ast3c = T::zero();
        let mut ast3l = T::zero();
        let mut adpc = T::zero();
        let mut adpp = T::zero();
        let mut adpl = T::zero();
        let mut at3 = T::zero();
        let mut pst = T::zero();
        let mut pp3 = T::zero();
        let mut pdp = T::zero();
        let mut apst = T::zero();
        let mut apstl = T::zero();
        let mut app3a = T::zero();
        let mut app3b = T::zero();
        let mut app3c = T::zero();
        let mut adppr = T::zero();
        let mut adppr2 = T::zero();
        for v in 0..cn {
            beta += b[v].clone();
            q_sum += q[v].clone();
            sr += r[v].clone();
            st += t[v].clone();
            sp3 += p3row[v].clone();
            w_ += he2[v].clone();
            ae += b[v].clone() * r[v].clone();
            ape += b[v].clone() * q[v].clone();
            pw += q[v].clone() * r[v].clone();
            ap3 += b[v].clone() * (mr[v].clone() - t[v].clone());
            as2 += b[v].clone() * he2[v].clone();
            ad2 += b[v].clone() * t[v].clone();
            apwv += b[v].clone() * mq[v].clone();
            apwc += b[v].clone() * q[v].clone() * r[v].clone();
            st3 += e3v[v].clone();
            dp += t[v].clone() * r[v].clone() - p3row[v].clone();
            ast3c += b[v].clone() * e3v[v].clone();
            ast3l += mb[v].clone() * he2[v].clone() - r[v].clone() * bm2[v].clone()
                + bm3[v].clone();
            adpc += b[v].clone() * (t[v].clone() * r[v].clone() - p3row[v].clone());
            adpp += r[v].clone() * bm2[v].clone() - bm3[v].clone();
            adpl += t[v].clone() * mb[v].clone() - bm3[v].clone();
            at3 += b[v].clone() * p3row[v].clone();
            pst += q[v].clone() * he2[v].clone();
            pp3 += q[v].clone() * (mr[v].clone() - t[v].clone());
            pdp += q[v].clone() * t[v].clone();
            apst += b[v].clone() * q[v].clone() * he2[v].clone();
            apstl += q[v].clone() * (mb[v].clone() * r[v].clone() - bm2[v].clone());
            app3a += b[v].clone() * q[v].clone() * (mr[v].clone() - t[v].clone());
            app3b += b[v].clone() * (mq[v].clone() * r[v].clone() - qm2[v].clone());
            app3c += mb[v].clone() * mq[v].clone();
            adppr += b[v].clone() * q[v].clone() * t[v].clone();
            adppr2 += q[v].clone() * bm2[v].clone();
        }
        app3c -= adppr.clone();

        // Middle-edge forms: triangles, paths on four vertices, and their
        // weighted variants, via the length-2 walk matrices.
        let mut tr6 = T::zero();
        let mut atrv2 = T::zero();
        let mut op3 = T::zero();
        let mut ap3m = T::zero();
        let mut a4p1 = T::zero();
        for v in 0..cn {
            for u in 0..cn {
                if u == v {
                    continue;
                }
                let e = m(v, u).clone();
                let s2vu = s2[v * cn + u].clone();
                let es2 = e.clone() * s2vu.clone();
                tr6 += es2.clone();
                atrv2 += b[v].clone() * es2;
                let rv = r[v].clone() - e.clone();
                let ru = r[u].clone() - e.clone();
                let path_core = rv * ru.clone() - s2vu;
                op3 += e.clone() * path_core.clone();
                ap3m += b[v].clone() * e.clone() * path_core;
                let attach = mb[v].clone() - b[u].clone() * e.clone();
                a4p1 += e * (ru * attach - sb2[v * cn + u].clone());
            }
        }

        ConnectedStats {
            beta,
            alpha: p.president.clone(),
            q_sum,
            p_sum: sr.div_exact(2),
            d2: st.div_exact(2),
            t3: sp3.div_exact(2),
            w: w_,
            ae,
            ape,
            pw,
            ap3,
            as2,
            ad2,
            apwv,
            apwc,
            st3,
            tr: tr6.div_exact(6),
            p3: op3.div_exact(2),
            dp,
            ast3c,
            ast3l,
            atrv: atrv2.div_exact(2),
            ap3m,
            a4p1,
            adpc,
            adpp,
            adpl,
            at3,
            pst,
            pp3,
            pdp,
            apst,
            apstl,
            app3a,
            app3b,
            app3c,
            adppr,
            adppr2,
        }
    }

    /// The statistic a catalog key names.
    pub fn value(&self, key: StatKey) -> &T {
        match key {
            StatKey::Beta => &self.beta,
            StatKey::Alpha => &self.alpha,
            StatKey::QSum => &self.q_sum,
            StatKey::PSum => &self.p_sum,
            StatKey::D2 => &self.d2,
            StatKey::T3 => &self.t3,
            StatKey::W => &self.w,
            StatKey::Ae => &self.ae,
            StatKey::Ape => &self.ape,
            StatKey::Pw => &self.pw,
            StatKey::Ap3 => &self.ap3,
            StatKey::As2 => &self.as2,
            StatKey::Ad2 => &self.ad2,
            StatKey::Apwv => &self.apwv,
            StatKey::Apwc => &self.apwc,
            StatKey::St3 => &self.st3,
            StatKey::Tr => &self.tr,
            StatKey::P3 => &self.p3,
            StatKey::Dp => &self.dp,
            StatKey::Ast3c => &self.ast3c,
            StatKey::Ast3l => &self.ast3l,
            StatKey::Atrv => &self.atrv,
            StatKey::Ap3m => &self.ap3m,
            StatKey::A4p1 => &self.a4p1,
            StatKey::Adpc => &self.adpc,
            StatKey::Adpp => &self.adpp,
            StatKey::Adpl => &self.adpl,
            StatKey::At3 => &self.at3,
            StatKey::Pst => &self.pst,
            StatKey::Pp3 => &self.pp3,
            StatKey::Pdp => &self.pdp,
            StatKey::Apst => &self.apst,
            StatKey::Apstl => &self.apstl,
            StatKey::App3a => &self.app3a,
            StatKey::App3b => &self.app3b,
            StatKey::App3c => &self.app3c,
            StatKey::Adppr => &self.adppr,
            StatKey::Adppr2 => &self.adppr2,
        }
    }
}

impl ConnectedStats<i128> {
    /// Converts fixed-point statistics back to exact rationals by dividing
    /// each statistic by `scale` to the power of its moment degree.
    pub fn to_rats(&self, scale: i64) -> ConnectedStats<Rat> {
        let f = |v: i128, deg: u32| -> Rat {
            Rat::from_big(BigRational::new(
                BigInt::from(v),
                BigInt::from(scale).pow(deg),
            ))
        };
        ConnectedStats {
            beta: f(self.beta, 1),
            alpha: f(self.alpha, 1),
            q_sum: f(self.q_sum, 1),
            p_sum: f(self.p_sum, 1),
            d2: f(self.d2, 2),
            t3: f(self.t3, 3),
            w: f(self.w, 2),
            ae: f(self.ae, 2),
            ape: f(self.ape, 2),
            pw: f(self.pw, 2),
            ap3: f(self.ap3, 3),
            as2: f(self.as2, 3),
            ad2: f(self.ad2, 3),
            apwv: f(self.apwv, 3),
            apwc: f(self.apwc, 3),
            st3: f(self.st3, 3),
            tr: f(self.tr, 3),
            p3: f(self.p3, 3),
            dp: f(self.dp, 3),
            ast3c: f(self.ast3c, 4),
            ast3l: f(self.ast3l, 4),
            atrv: f(self.atrv, 4),
            ap3m: f(self.ap3m, 4),
            a4p1: f(self.a4p1, 4),
            adpc: f(self.adpc, 4),
            adpp: f(self.adpp, 4),
            adpl: f(self.adpl, 4),
            at3: f(self.at3, 4),
            pst: f(self.pst, 3),
            pp3: f(self.pp3, 3),
            pdp: f(self.pdp, 3),
            apst: f(self.apst, 4),
            apstl: f(self.apstl, 4),
            app3a: f(self.app3a, 4),
            app3b: f(self.app3b, 4),
            app3c: f(self.app3c, 4),
            adppr: f(self.adppr, 4),
            adppr2: f(self.adppr2, 4),
        }
    }
}

impl ConnectedStats<Rat> {
    /// Evaluates a recognized pattern form.
    pub fn eval(&self, form: &PatternForm) -> Rat {
        match form {
            PatternForm::Connected(key) => self.value(*key).clone(),
            PatternForm::Disconnected(i) => s_values_from_stats(self)[*i].clone(),
        }
    }
}

/// The nine disconnected sums, assembled from the connected statistics by
/// inclusion–exclusion over coinciding vertices. Indexing matches
/// [`identity_patterns`]: a singleton, a president moment, or a
/// president–citizen edge, together with one, two, or three pairwise-disjoint
/// citizen edges, everything vertex-disjoint.
pub fn s_values_from_stats(st: &ConnectedStats<Rat>) -> [Rat; 9] {
    let b = &st.beta;
    let a = &st.alpha;
    let qq = &st.q_sum;
    let p = &st.p_sum;
    let pp2 = p.pow(2);
    let pp3 = p.pow(3);
    let c = Rat::int;

    let s1 = b * p - &st.ae;
    let s2 = a * p;
    let s3 = b * qq - &st.ape;
    let s4 = (b * &pp2 - c(2) * (&st.ae * p) - c(2) * (b * &st.w) - b * &st.d2
        + c(2) * &st.ap3
        + c(4) * &st.as2
        + c(2) * &st.ad2)
        / c(2);
    let s5 = a * (&pp2 - c(2) * &st.w - &st.d2) / c(2);
    let s6 = b * qq * p - &st.ape * p - &st.ae * qq - b * &st.pw + &st.apwv + c(2) * &st.apwc;
    let s7 = (b * &pp3 - c(3) * (b * &st.d2 * p) - c(6) * (b * &st.w * p)
        + c(2) * (b * &st.t3)
        + c(6) * (b * &st.dp)
        + c(12) * (b * &st.st3)
        + c(12) * (b * &st.tr)
        + c(6) * (b * &st.p3)
        - c(3) * (&st.ae * &pp2)
        + c(3) * (&st.ae * &st.d2)
        + c(6) * (&st.ae * &st.w)
        + c(6) * (&st.ad2 * p)
        + c(12) * (&st.as2 * p)
        + c(6) * (&st.ap3 * p)
        - c(6) * &st.at3
        - c(18) * &st.adpc
        - c(12) * &st.adpp
        - c(6) * &st.adpl
        - c(36) * &st.ast3c
        - c(24) * &st.atrv
        - c(12) * &st.ap3m
        - c(12) * &st.ast3l
        - c(6) * &st.a4p1)
        / c(6);
    let s8 = a
        * (&pp3 - c(6) * (&st.w * p) - c(3) * (&st.d2 * p)
            + c(12) * &st.st3
            + c(12) * &st.tr
            + c(6) * &st.p3
            + c(6) * &st.dp
            + c(2) * &st.t3)
        / c(6);
    let s9 = (b * qq * &pp2
        - &st.ape * &pp2
        - c(2) * (&st.ae * qq * p)
        - c(2) * (b * &st.pw * p)
        - c(2) * (b * qq * &st.w)
        - b * qq * &st.d2
        + c(2) * (&st.apwv * p)
        + c(4) * (&st.apwc * p)
        + c(2) * (&st.ap3 * qq)
        + c(4) * (&st.as2 * qq)
        + c(2) * (&st.ad2 * qq)
        + &st.ape * &st.d2
        + c(2) * (&st.ape * &st.w)
        + c(2) * (&st.ae * &st.pw)
        + c(4) * (b * &st.pst)
        + c(2) * (b * &st.pp3)
        + c(2) * (b * &st.pdp)
        - c(12) * &st.apst
        - c(4) * &st.apstl
        - c(4) * &st.app3a
        - c(4) * &st.app3b
        - c(2) * &st.app3c
        - c(6) * &st.adppr
        - c(4) * &st.adppr2)
        / c(2);
    [s1, s2, s3, s4, s5, s6, s7, s8, s9]
}

/// Catalog keys for the connected statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatKey {
    Beta,
    Alpha,
    QSum,
    PSum,
    D2,
    T3,
    W,
    Ae,
    Ape,
    Pw,
    Ap3,
    As2,
    Ad2,
    Apwv,
    Apwc,
    St3,
    Tr,
    P3,
    Dp,
    Ast3c,
    Ast3l,
    Atrv,
    Ap3m,
    A4p1,
    Adpc,
    Adpp,
    Adpl,
    At3,
    Pst,
    Pp3,
    Pdp,
    Apst,
    Apstl,
    App3a,
    App3b,
    App3c,
    Adppr,
    Adppr2,
}

fn s(l: u8) -> PatternEdge {
    PatternEdge::Single(PatternVertex::Free(l))
}

fn pres() -> PatternEdge {
    PatternEdge::Single(PatternVertex::President)
}

fn e(a: u8, b: u8) -> PatternEdge {
    PatternEdge::Pair(PatternVertex::Free(a), PatternVertex::Free(b))
}

fn pe(l: u8) -> PatternEdge {
    PatternEdge::Pair(PatternVertex::President, PatternVertex::Free(l))
}

impl StatKey {
    pub const ALL: [StatKey; 38] = [
        StatKey::Beta,
        StatKey::Alpha,
        StatKey::QSum,
        StatKey::PSum,
        StatKey::D2,
        StatKey::T3,
        StatKey::W,
        StatKey::Ae,
        StatKey::Ape,
        StatKey::Pw,
        StatKey::Ap3,
        StatKey::As2,
        StatKey::Ad2,
        StatKey::Apwv,
        StatKey::Apwc,
        StatKey::St3,
        StatKey::Tr,
        StatKey::P3,
        StatKey::Dp,
        StatKey::Ast3c,
        StatKey::Ast3l,
        StatKey::Atrv,
        StatKey::Ap3m,
        StatKey::A4p1,
        StatKey::Adpc,
        StatKey::Adpp,
        StatKey::Adpl,
        StatKey::At3,
        StatKey::Pst,
        StatKey::Pp3,
        StatKey::Pdp,
        StatKey::Apst,
        StatKey::Apstl,
        StatKey::App3a,
        StatKey::App3b,
        StatKey::App3c,
        StatKey::Adppr,
        StatKey::Adppr2,
    ];

    /// The edge pattern whose direct value this statistic reproduces.
    pub fn pattern(self) -> HypergraphPattern {
        let edges = match self {
            StatKey::Beta => vec![s(0)],
            StatKey::Alpha => vec![pres()],
            StatKey::QSum => vec![pe(0)],
            StatKey::PSum => vec![e(0, 1)],
            StatKey::D2 => vec![e(0, 1), e(0, 1)],
            StatKey::T3 => vec![e(0, 1), e(0, 1), e(0, 1)],
            StatKey::W => vec![e(0, 1), e(0, 2)],
            StatKey::Ae => vec![s(0), e(0, 1)],
            StatKey::Ape => vec![s(0), pe(0)],
            StatKey::Pw => vec![pe(0), e(0, 1)],
            StatKey::Ap3 => vec![s(0), e(0, 1), e(1, 2)],
            StatKey::As2 => vec![s(0), e(0, 1), e(0, 2)],
            StatKey::Ad2 => vec![s(0), e(0, 1), e(0, 1)],
            StatKey::Apwv => vec![s(0), e(0, 1), pe(1)],
            StatKey::Apwc => vec![s(0), pe(0), e(0, 1)],
            StatKey::St3 => vec![e(0, 1), e(0, 2), e(0, 3)],
            StatKey::Tr => vec![e(0, 1), e(0, 2), e(1, 2)],
            StatKey::P3 => vec![e(0, 1), e(1, 2), e(2, 3)],
            StatKey::Dp => vec![e(0, 1), e(0, 1), e(0, 2)],
            StatKey::Ast3c => vec![s(0), e(0, 1), e(0, 2), e(0, 3)],
            StatKey::Ast3l => vec![s(1), e(0, 1), e(0, 2), e(0, 3)],
            StatKey::Atrv => vec![s(0), e(0, 1), e(0, 2), e(1, 2)],
            StatKey::Ap3m => vec![s(1), e(0, 1), e(1, 2), e(2, 3)],
            StatKey::A4p1 => vec![s(0), e(0, 1), e(1, 2), e(2, 3)],
            StatKey::Adpc => vec![s(0), e(0, 1), e(0, 1), e(0, 2)],
            StatKey::Adpp => vec![s(1), e(0, 1), e(0, 1), e(0, 2)],
            StatKey::Adpl => vec![s(2), e(0, 1), e(0, 1), e(0, 2)],
            StatKey::At3 => vec![s(0), e(0, 1), e(0, 1), e(0, 1)],
            StatKey::Pst => vec![pe(0), e(0, 1), e(0, 2)],
            StatKey::Pp3 => vec![pe(0), e(0, 1), e(1, 2)],
            StatKey::Pdp => vec![pe(0), e(0, 1), e(0, 1)],
            StatKey::Apst => vec![s(0), pe(0), e(0, 1), e(0, 2)],
            StatKey::Apstl => vec![s(1), pe(0), e(0, 1), e(0, 2)],
            StatKey::App3a => vec![s(0), pe(0), e(0, 1), e(1, 2)],
            StatKey::App3b => vec![s(1), pe(0), e(0, 1), e(1, 2)],
            StatKey::App3c => vec![s(2), pe(0), e(0, 1), e(1, 2)],
            StatKey::Adppr => vec![s(0), pe(0), e(0, 1), e(0, 1)],
            StatKey::Adppr2 => vec![s(1), pe(0), e(0, 1), e(0, 1)],
        };
        HypergraphPattern::new(edges).expect("catalog patterns are well formed")
    }
}

/// The nine disconnected shapes of [`s_values_from_stats`], in order.
pub fn identity_patterns() -> Vec<HypergraphPattern> {
    let shapes: Vec<Vec<PatternEdge>> = vec![
        vec![s(0), e(1, 2)],
        vec![pres(), e(0, 1)],
        vec![s(0), pe(1)],
        vec![s(0), e(1, 2), e(3, 4)],
        vec![pres(), e(0, 1), e(2, 3)],
        vec![s(0), pe(1), e(2, 3)],
        vec![s(0), e(1, 2), e(3, 4), e(5, 6)],
        vec![pres(), e(0, 1), e(2, 3), e(4, 5)],
        vec![s(0), pe(1), e(2, 3), e(4, 5)],
    ];
    shapes
        .into_iter()
        .map(|edges| HypergraphPattern::new(edges).expect("identity patterns are well formed"))
        .collect()
}

/// How a pattern will be evaluated on the aggregate route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternForm {
    /// One of the cataloged connected statistics.
    Connected(StatKey),
    /// Index into [`identity_patterns`].
    Disconnected(usize),
}

fn isomorphic(a: &HypergraphPattern, b: &HypergraphPattern) -> bool {
    if a.degree() != b.degree() {
        return false;
    }
    let la = a.free_labels();
    let lb = b.free_labels();
    if la.len() != lb.len() {
        return false;
    }
    let mut found = false;
    for_each_permutation(la.len(), &mut |perm| {
        if found {
            return;
        }
        let map = |v: PatternVertex| match v {
            PatternVertex::President => PatternVertex::President,
            PatternVertex::Free(l) => {
                let pos = la.iter().position(|&x| x == l).unwrap();
                PatternVertex::Free(lb[perm[pos]])
            }
        };
        let mut mapped: Vec<PatternEdge> = a.edges().iter().map(|edge| edge.relabel(&map)).collect();
        mapped.sort();
        if mapped.as_slice() == b.edges() {
            found = true;
        }
    });
    found
}

/// Matches a pattern against the catalog, up to relabeling of free vertices.
pub fn recognize(pattern: &HypergraphPattern) -> Result<PatternForm, RoundingError> {
    for key in StatKey::ALL {
        if isomorphic(pattern, &key.pattern()) {
            return Ok(PatternForm::Connected(key));
        }
    }
    for (i, shape) in identity_patterns().iter().enumerate() {
        if isomorphic(pattern, shape) {
            return Ok(PatternForm::Disconnected(i));
        }
    }
    Err(RoundingError::NoClosedForm)
}

/// Pattern value through the closed forms: recognize, compute the connected
/// statistics once, evaluate.
pub fn eval_aggregate(
    pattern: &HypergraphPattern,
    profile: &BiasProfile,
) -> Result<Rat, RoundingError> {
    let form = recognize(pattern)?;
    let dense = DenseProfile::from_profile(profile);
    let stats = ConnectedStats::compute(&dense);
    Ok(stats.eval(&form))
}

/// Pattern sum over distinct placements, by the requested route. The two
/// routes are independent implementations and agree exactly wherever the
/// direct route's variable cap allows both to run.
pub fn s_hypergraph_sum(
    pattern: &HypergraphPattern,
    profile: &BiasProfile,
    route: EvalRoute,
) -> Result<Rat, RoundingError> {
    match route {
        EvalRoute::Direct => pattern.eval_direct(profile),
        EvalRoute::Aggregate => eval_aggregate(pattern, profile),
    }
}

/// A profile with small random rational entries, numerators in `-3..=3` and
/// denominators in `1..=3`, on every moment. Entries may leave `[-1, 1]`:
/// the pattern-sum identities are polynomial, so their checks do not need
/// realizable moments, and the larger range exercises them harder.
pub fn random_small_profile<R: Rng>(k: u32, rng: &mut R) -> BiasProfile {
    let frac = |rng: &mut R| Rat::frac(rng.gen_range(-3..=3), rng.gen_range(1..=3));
    let mut p = BiasProfile::zero(k);
    for i in 1..=k {
        let v = frac(rng);
        p.set_single(i, v);
    }
    for i in 1..=k {
        for j in (i + 1)..=k {
            let v = frac(rng);
            p.set_pair(i, j, v).expect("i < j");
        }
    }
    p
}

/// One disagreement between the two evaluation routes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityFailure {
    /// Zero-based index into [`identity_patterns`].
    pub identity: usize,
    pub trial: u64,
    pub direct: Rat,
    pub aggregate: Rat,
}

/// Result of the randomized two-route comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentitySuiteReport {
    pub k: u32,
    pub trials: u64,
    pub seed: u64,
    /// Number of (identity, trial) comparisons performed.
    pub checked: u64,
    pub failures: Vec<IdentityFailure>,
}

impl IdentitySuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares all nine disconnected sums on random small profiles, direct
/// enumeration against the closed forms, exactly. Each trial draws its
/// profile from an independent stream of the seeded generator, so the report
/// does not depend on the execution strategy.
pub fn identity_suite(
    k: u32,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<IdentitySuiteReport, RoundingError> {
    use super::hypergraph::DIRECT_EVAL_MAX_VARS;
    if !(2..=DIRECT_EVAL_MAX_VARS).contains(&k) {
        return Err(RoundingError::DirectEvalCap {
            k,
            cap: DIRECT_EVAL_MAX_VARS,
        });
    }
    let patterns = identity_patterns();
    let mut failures = exec.map_reduce(
        0,
        trials,
        Vec::new,
        |trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let profile = random_small_profile(k, &mut rng);
            let dense = DenseProfile::from_profile(&profile);
            let stats = ConnectedStats::compute(&dense);
            let aggregate = s_values_from_stats(&stats);
            let mut bad = Vec::new();
            for (identity, pattern) in patterns.iter().enumerate() {
                let direct = pattern
                    .eval_direct(&profile)
                    .expect("suite arity is within the direct cap");
                if direct != aggregate[identity] {
                    bad.push(IdentityFailure {
                        identity,
                        trial,
                        direct,
                        aggregate: aggregate[identity].clone(),
                    });
                }
            }
            bad
        },
        |mut acc, mut part| {
            acc.append(&mut part);
            acc
        },
    );
    failures.sort_by_key(|f| (f.trial, f.identity));
    Ok(IdentitySuiteReport {
        k,
        trials,
        seed,
        checked: trials * patterns.len() as u64,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rounding::mask_to_pm;

    fn fixed_profile(k: u32, stream: u64) -> BiasProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5374_6174);
        rng.set_stream(stream);
        random_small_profile(k, &mut rng)
    }

    #[test]
    fn every_cataloged_closed_form_matches_direct_enumeration() {
        for stream in 0..3u64 {
            let profile = fixed_profile(7, stream);
            let dense = DenseProfile::from_profile(&profile);
            let stats = ConnectedStats::compute(&dense);
            for key in StatKey::ALL {
                let direct = key.pattern().eval_direct(&profile).unwrap();
                assert_eq!(
                    &direct,
                    stats.value(key),
                    "statistic {key:?} disagrees with its pattern on stream {stream}"
                );
            }
        }
    }

    #[test]
    fn nine_disconnected_sums_match_direct_enumeration() {
        // k = 7 leaves only six citizens, so the three-edge shapes degenerate
        // to zero on both routes; k = 8 and 9 exercise them fully.
        for k in [7u32, 8, 9] {
            let profile = fixed_profile(k, u64::from(k));
            let dense = DenseProfile::from_profile(&profile);
            let stats = ConnectedStats::compute(&dense);
            let aggregate = s_values_from_stats(&stats);
            for (i, pattern) in identity_patterns().iter().enumerate() {
                let direct = pattern.eval_direct(&profile).unwrap();
                assert_eq!(direct, aggregate[i], "sum {i} disagrees at k={k}");
            }
        }
    }

    #[test]
    fn seven_vertex_shapes_are_zero_when_citizens_run_out() {
        let profile = fixed_profile(7, 99);
        let dense = DenseProfile::from_profile(&profile);
        let stats = ConnectedStats::compute(&dense);
        let aggregate = s_values_from_stats(&stats);
        // Shape 6 needs a singleton plus three disjoint edges: 7 citizens.
        assert_eq!(aggregate[6], Rat::zero());
        assert_eq!(
            identity_patterns()[6].eval_direct(&profile).unwrap(),
            Rat::zero()
        );
    }

    #[test]
    fn fixed_point_route_matches_rational_route() {
        // A five-vertex mixture at k = 8 with integer weights.
        let k = 8usize;
        let masks = [0b1011_0101u32, 0b0110_1010, 0b1111_0000, 0b0000_1111, 0b1001_1001];
        let weights = [1i64, 2, 3, 4, 5];
        let terms: Vec<(Vec<i8>, i64)> = masks
            .iter()
            .zip(weights)
            .map(|(m, w)| (mask_to_pm(k as u8, *m), w))
            .collect();
        let (dense_int, scale) = DenseProfile::from_weighted_assignments(k, &terms).unwrap();
        assert_eq!(scale, 15);
        let ints = ConnectedStats::compute(&dense_int).to_rats(scale);

        let support: Vec<(Vec<i8>, Rat)> = terms
            .iter()
            .map(|(x, w)| (x.clone(), Rat::int(*w)))
            .collect();
        let profile = BiasProfile::from_distribution(k as u32, &support);
        let rats = ConnectedStats::compute(&DenseProfile::from_profile(&profile));
        assert_eq!(ints, rats);
        assert_eq!(
            s_values_from_stats(&ints),
            s_values_from_stats(&rats)
        );
    }

    #[test]
    fn scaled_conversion_round_trips_and_rejects_bad_denominators() {
        let mut p = BiasProfile::zero(4);
        p.set_single(1, Rat::frac(1, 3));
        p.set_single(2, Rat::frac(-2, 3));
        p.set_pair(1, 2, Rat::frac(1, 4)).unwrap();
        p.set_pair(2, 3, Rat::frac(-5, 6)).unwrap();
        p.set_pair(3, 4, Rat::frac(1, 12)).unwrap();
        let dense = DenseProfile::scaled(&p, 12).unwrap();
        assert_eq!(dense.president, 4);
        let stats = ConnectedStats::compute(&dense).to_rats(12);
        let exact = ConnectedStats::compute(&DenseProfile::from_profile(&p));
        assert_eq!(stats, exact);

        p.set_pair(1, 3, Rat::frac(1, 7)).unwrap();
        assert!(matches!(
            DenseProfile::scaled(&p, 12),
            Err(RoundingError::ScaleMismatch { scale: 12 })
        ));
    }

    #[test]
    fn single_assignment_profile_has_vertex_statistics() {
        let x = mask_to_pm(5, 0b11111);
        let dense = DenseProfile::from_assignment(&x);
        let stats = ConnectedStats::compute(&dense);
        // All-ones: four citizens, every moment 1.
        assert_eq!(stats.beta, 4);
        assert_eq!(stats.alpha, 1);
        assert_eq!(stats.q_sum, 4);
        assert_eq!(stats.p_sum, 6); // C(4,2)
        assert_eq!(stats.w, 12); // 4 * C(3,2)
        assert_eq!(stats.tr, 4); // C(4,3)
        assert_eq!(stats.st3, 4); // 4 * C(3,3)
        assert_eq!(stats.p3, 12); // 4!/2
    }

    #[test]
    fn weighted_assignment_validation() {
        let x = mask_to_pm(4, 0b1111);
        let err = DenseProfile::from_weighted_assignments(4, &[(x.clone(), 0)]);
        assert!(matches!(
            err,
            Err(RoundingError::WeightNotPositive { index: 0 })
        ));
        let err = DenseProfile::from_weighted_assignments(4, &[]);
        assert!(matches!(err, Err(RoundingError::WeightSumZero)));
    }

    #[test]
    fn recognition_covers_the_catalog_and_rejects_strangers() {
        for key in StatKey::ALL {
            // Shift the labels to prove matching is up to relabeling.
            let shifted: Vec<PatternEdge> = key
                .pattern()
                .edges()
                .iter()
                .map(|edge| {
                    edge.relabel(&|v| match v {
                        PatternVertex::President => PatternVertex::President,
                        PatternVertex::Free(l) => PatternVertex::Free(7 - l),
                    })
                })
                .collect();
            let pattern = HypergraphPattern::new(shifted).unwrap();
            assert_eq!(recognize(&pattern).unwrap(), PatternForm::Connected(key));
        }
        for (i, pattern) in identity_patterns().iter().enumerate() {
            assert_eq!(
                recognize(pattern).unwrap(),
                PatternForm::Disconnected(i)
            );
        }
        let four_cycle = HypergraphPattern::new(vec![e(0, 1), e(1, 2), e(2, 3), e(0, 3)]).unwrap();
        assert!(matches!(
            recognize(&four_cycle),
            Err(RoundingError::NoClosedForm)
        ));
        let bare_disjoint_pair = HypergraphPattern::new(vec![e(0, 1), e(2, 3)]).unwrap();
        assert!(matches!(
            recognize(&bare_disjoint_pair),
            Err(RoundingError::NoClosedForm)
        ));
    }

    #[test]
    fn identity_pattern_automorphisms_match_their_shapes() {
        let expected = [2u64, 2, 1, 8, 8, 2, 48, 48, 8];
        for (pattern, want) in identity_patterns().iter().zip(expected) {
            assert_eq!(pattern.automorphism_count(), want);
        }
    }

    #[test]
    fn aggregate_route_works_past_the_direct_cap() {
        let profile = fixed_profile(20, 5);
        let pattern = StatKey::Ap3m.pattern();
        assert!(pattern.eval_direct(&profile).is_err());
        let via_stats = s_hypergraph_sum(&pattern, &profile, EvalRoute::Aggregate).unwrap();
        let dense = DenseProfile::from_profile(&profile);
        assert_eq!(via_stats, ConnectedStats::compute(&dense).ap3m);
    }

    #[test]
    fn suite_is_deterministic_and_clean_on_valid_forms() {
        let a = identity_suite(8, 3, 77, Exec::Parallel).unwrap();
        let b = identity_suite(8, 3, 77, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checked, 27);
        assert!(a.passed(), "failures: {:?}", a.failures);
        assert!(matches!(
            identity_suite(13, 1, 0, Exec::Sequential),
            Err(RoundingError::DirectEvalCap { k: 13, .. })
        ));
    }
}
