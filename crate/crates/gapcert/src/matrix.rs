//! Symmetric rational matrices and an exact positive-semidefiniteness check.
//!
//! The PSD test is a recursive LDL^T elimination over the rationals. It either
//! certifies the matrix PSD or produces an explicit rational vector `x` with
//! `x^T M x < 0`; the witness is always substitution-checkable.

use serde::{Deserialize, Serialize};

use crate::rat::Rat;

/// Dense symmetric matrix, upper triangle stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    /// Entry `(i, j)` for `i <= j` at offset `i*n - i*(i-1)/2 + (j-i)`.
    upper: Vec<Rat>,
}

impl SymMatrix {
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        SymMatrix {
            n,
            upper: vec![Rat::zero(); n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMatrix::zero(n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    /// Builds from full rows, checking symmetry.
    pub fn from_rows(rows: &[Vec<Rat>]) -> Self {
        let n = rows.len();
        assert!(n >= 1, "matrix dimension must be at least 1");
        assert!(rows.iter().all(|r| r.len() == n), "rows must be square");
        for i in 0..n {
            for j in (i + 1)..n {
                assert_eq!(rows[i][j], rows[j][i], "matrix not symmetric at ({i},{j})");
            }
        }
        let mut m = SymMatrix::zero(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, rows[i][j].clone());
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        // Rows 0..i contribute n, n-1, ..., n-i+1 entries.
        i * self.n - (i * i - i) / 2 + (j - i)
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[self.offset(a, b)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let k = self.offset(a, b);
        self.upper[k] = v;
    }

    /// `x^T M x`, exactly.
    pub fn quadratic_form(&self, x: &[Rat]) -> Rat {
        assert_eq!(x.len(), self.n);
        let mut acc = Rat::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                if x[i].is_zero() || x[j].is_zero() {
                    continue;
                }
                acc += &x[i] * &x[j] * self.get(i, j);
            }
        }
        acc
    }

    /// Determinant by fraction-free elimination (used by the test oracle).
    pub fn determinant(&self) -> Rat {
        let n = self.n;
        let mut a: Vec<Vec<Rat>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut det = Rat::one();
        for col in 0..n {
            // Partial pivot on the first nonzero entry.
            let pivot_row = match (col..n).find(|&r| !a[r][col].is_zero()) {
                Some(r) => r,
                None => return Rat::zero(),
            };
            if pivot_row != col {
                a.swap(pivot_row, col);
                det = -det;
            }
            let pivot = a[col][col].clone();
            det *= &pivot;
            for r in (col + 1)..n {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = &a[r][col] / &pivot;
                for c in col..n {
                    let sub = &factor * &a[col][c];
                    a[r][c] -= sub;
                }
            }
        }
        det
    }

    /// Principal submatrix on the given (strictly increasing) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> SymMatrix {
        assert!(!idx.is_empty());
        assert!(idx.windows(2).all(|w| w[0] < w[1]) && *idx.last().unwrap() < self.n);
        let mut m = SymMatrix::zero(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate().skip(a) {
                m.set(a, b, self.get(i, j).clone());
            }
        }
        m
    }
}

/// Outcome of the exact PSD check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsdResult {
    /// The matrix is positive semidefinite.
    Psd,
    /// A rational direction with strictly negative quadratic form.
    NotPsd { witness: Vec<Rat>, value: Rat },
}

impl PsdResult {
    pub fn is_psd(&self) -> bool {
        matches!(self, PsdResult::Psd)
    }
}

/// Exact PSD decision with a negative-direction certificate on failure.
pub fn psd_check(m: &SymMatrix) -> PsdResult {
    match psd_witness(m) {
        None => PsdResult::Psd,
        Some(witness) => {
            let value = m.quadratic_form(&witness);
            debug_assert!(value.is_negative());
            PsdResult::NotPsd { witness, value }
        }
    }
}

/// Recursive LDL^T elimination; returns a witness vector if one exists.
fn psd_witness(m: &SymMatrix) -> Option<Vec<Rat>> {
    let n = m.dim();
    let d = m.get(0, 0).clone();
    if d.is_negative() {
        let mut w = vec![Rat::zero(); n];
        w[0] = Rat::one();
        return Some(w);
    }
    if d.is_zero() {
        // A zero diagonal entry forces the whole first row to vanish, else the
        // 2x2 block [[0, c], [c, m_jj]] is indefinite.
        if let Some(j) = (1..n).find(|&j| !m.get(0, j).is_zero()) {
            let c = m.get(0, j);
            let mjj = m.get(j, j);
            // x = t*e_0 + e_j gives value 2tc + m_jj; pick t so the value is -1.
            let t = -(mjj + Rat::one()) / (Rat::int(2) * c);
            let mut w = vec![Rat::zero(); n];
            w[0] = t;
            w[j] = Rat::one();
            return Some(w);
        }
        if n == 1 {
            return None;
        }
        let sub = m.principal_submatrix(&(1..n).collect::<Vec<_>>());
        return psd_witness(&sub).map(|wsub| {
            let mut w = vec![Rat::zero()];
            w.extend(wsub);
            w
        });
    }
    if n == 1 {
        return None;
    }
    // d > 0: eliminate the first row/column and recurse on the Schur complement
    // S[i][j] = m[i][j] - m[0][i] m[0][j] / d.
    let mut schur = SymMatrix::zero(n - 1);
    for i in 1..n {
        for j in i..n {
            let v = m.get(i, j) - m.get(0, i) * m.get(0, j) / &d;
            schur.set(i - 1, j - 1, v);
        }
    }
    psd_witness(&schur).map(|wsub| {
        // Lift: choosing x_0 = -(sum_j w_j m[0][j]) / d preserves the value.
        let mut dot = Rat::zero();
        for (t, w) in wsub.iter().enumerate() {
            dot += w * m.get(0, t + 1);
        }
        let mut w = Vec::with_capacity(n);
        w.push(-dot / &d);
        w.extend(wsub);
        w
    })
}

/// Exact `M = L D L^T` factorization of a PSD matrix: `lower` is unit lower
/// triangular (full rows, ones on the diagonal) and `diag` is entrywise
/// nonnegative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdlFactor {
    pub lower: Vec<Vec<Rat>>,
    pub diag: Vec<Rat>,
}

impl LdlFactor {
    /// Rows of `L sqrt(D)` in floating point: vectors `u_i` with
    /// `u_i . u_j = M_ij` up to rounding.
    pub fn gram_rows_f64(&self) -> Vec<Vec<f64>> {
        let roots: Vec<f64> = self.diag.iter().map(|d| d.to_f64().sqrt()).collect();
        self.lower
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&roots)
                    .map(|(l, r)| l.to_f64() * r)
                    .collect()
            })
            .collect()
    }

    /// `L D L^T`, exactly; equals the factored matrix.
    pub fn reassemble(&self) -> SymMatrix {
        let n = self.diag.len();
        let mut m = SymMatrix::zero(n);
        for i in 0..n {
            for j in i..n {
                let mut v = Rat::zero();
                for t in 0..=i {
                    if self.diag[t].is_zero() {
                        continue;
                    }
                    v += &self.lower[i][t] * &self.lower[j][t] * &self.diag[t];
                }
                m.set(i, j, v);
            }
        }
        m
    }
}

/// Failed factorization: the matrix is not PSD. Carries the same
/// substitution-checkable certificate as [`psd_check`].
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("matrix is not positive semidefinite: witness direction attains {value}")]
pub struct NotPsdError {
    pub witness: Vec<Rat>,
    pub value: Rat,
}

/// Exact LDL^T of a positive semidefinite matrix, pivoting in index order.
/// A negative pivot, or a zero pivot with a surviving column entry, proves the
/// matrix indefinite and is reported with a negative-direction witness.
pub fn ldl_factor(m: &SymMatrix) -> Result<LdlFactor, NotPsdError> {
    let n = m.dim();
    let mut lower = vec![vec![Rat::zero(); n]; n];
    let mut diag = vec![Rat::zero(); n];
    for (i, row) in lower.iter_mut().enumerate() {
        row[i] = Rat::one();
    }
    for j in 0..n {
        let mut d = m.get(j, j).clone();
        for t in 0..j {
            d -= &lower[j][t] * &lower[j][t] * &diag[t];
        }
        if d.is_negative() {
            return Err(indefinite_certificate(m));
        }
        // Column entries below the pivot, after eliminating earlier columns.
        let mut col = Vec::with_capacity(n - j - 1);
        for i in (j + 1)..n {
            let mut v = m.get(i, j).clone();
            for t in 0..j {
                v -= &lower[i][t] * &lower[j][t] * &diag[t];
            }
            col.push(v);
        }
        if d.is_zero() {
            if col.iter().any(|v| !v.is_zero()) {
                return Err(indefinite_certificate(m));
            }
            continue;
        }
        for (off, v) in col.into_iter().enumerate() {
            lower[j + 1 + off][j] = v / &d;
        }
        diag[j] = d;
    }
    Ok(LdlFactor { lower, diag })
}

fn indefinite_certificate(m: &SymMatrix) -> NotPsdError {
    match psd_check(m) {
        PsdResult::NotPsd { witness, value } => NotPsdError { witness, value },
        PsdResult::Psd => unreachable!("factorization failed on a PSD matrix"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rfrac, rint};

    fn m2(a: i64, b: i64, d: i64) -> SymMatrix {
        SymMatrix::from_rows(&[
            vec![rint(a), rint(b)],
            vec![rint(b), rint(d)],
        ])
    }

    #[test]
    fn identity_is_psd() {
        assert!(psd_check(&SymMatrix::identity(3)).is_psd());
    }

    #[test]
    fn rank_one_boundary_is_psd() {
        // [[1,-1],[-1,1]] is PSD with a null direction.
        assert!(psd_check(&m2(1, -1, 1)).is_psd());
    }

    #[test]
    fn indefinite_matrix_yields_checked_witness() {
        let m = m2(1, 2, 1);
        match psd_check(&m) {
            PsdResult::NotPsd { witness, value } => {
                assert!(value.is_negative());
                assert_eq!(m.quadratic_form(&witness), value);
                // The canonical witness for this matrix is the (1,-1) direction
                // with value -2, up to the elimination's exact scaling.
                assert_eq!(m.quadratic_form(&[rint(1), rint(-1)]), rint(-2));
            }
            PsdResult::Psd => panic!("[[1,2],[2,1]] declared PSD"),
        }
    }

    #[test]
    fn zero_diagonal_with_coupling_is_caught() {
        let m = SymMatrix::from_rows(&[
            vec![rint(0), rint(1), rint(0)],
            vec![rint(1), rint(5), rint(0)],
            vec![rint(0), rint(0), rint(2)],
        ]);
        match psd_check(&m) {
            PsdResult::NotPsd { witness, value } => {
                assert_eq!(value, rint(-1));
                assert_eq!(m.quadratic_form(&witness), value);
            }
            PsdResult::Psd => panic!("singular coupling declared PSD"),
        }
    }

    #[test]
    fn zero_block_recursion() {
        let m = SymMatrix::from_rows(&[
            vec![rint(0), rint(0)],
            vec![rint(0), rint(-3)],
        ]);
        match psd_check(&m) {
            PsdResult::NotPsd { witness, .. } => {
                assert!(m.quadratic_form(&witness).is_negative());
            }
            PsdResult::Psd => panic!("negative trailing block declared PSD"),
        }
    }

    #[test]
    fn schur_witness_lifts_exactly() {
        let m = SymMatrix::from_rows(&[
            vec![rint(4), rint(2), rint(0)],
            vec![rint(2), rint(1), rint(3)],
            vec![rint(0), rint(3), rint(1)],
        ]);
        match psd_check(&m) {
            PsdResult::NotPsd { witness, value } => {
                assert_eq!(m.quadratic_form(&witness), value);
                assert!(value.is_negative());
            }
            PsdResult::Psd => panic!("expected a witness"),
        }
    }

    #[test]
    fn determinant_matches_known_values() {
        assert_eq!(m2(1, 2, 1).determinant(), rint(-3));
        assert_eq!(SymMatrix::identity(4).determinant(), rint(1));
        let m = SymMatrix::from_rows(&[
            vec![rfrac(1, 2), rint(1)],
            vec![rint(1), rint(2)],
        ]);
        assert_eq!(m.determinant(), rint(0));
    }

    #[test]
    fn ldl_reassembles_psd_matrix() {
        let m = SymMatrix::from_rows(&[
            vec![rint(4), rint(2), rint(-2)],
            vec![rint(2), rint(2), rint(0)],
            vec![rint(-2), rint(0), rint(3)],
        ]);
        let f = ldl_factor(&m).expect("PSD matrix must factor");
        assert!(f.diag.iter().all(|d| !d.is_negative()));
        for (i, row) in f.lower.iter().enumerate() {
            assert_eq!(row[i], rint(1));
            assert!(row[i + 1..].iter().all(|v| v.is_zero()));
        }
        assert_eq!(f.reassemble(), m);
    }

    #[test]
    fn ldl_handles_zero_pivot_rank_deficiency() {
        // Rank-1 PSD: outer product of (1, -1), then a decoupled zero row.
        let m = SymMatrix::from_rows(&[
            vec![rint(1), rint(-1), rint(0)],
            vec![rint(-1), rint(1), rint(0)],
            vec![rint(0), rint(0), rint(0)],
        ]);
        let f = ldl_factor(&m).expect("rank-deficient PSD must factor");
        assert_eq!(f.diag, vec![rint(1), rint(0), rint(0)]);
        assert_eq!(f.reassemble(), m);
    }

    #[test]
    fn ldl_rejects_indefinite_with_witness() {
        let m = m2(1, 2, 1);
        let err = ldl_factor(&m).expect_err("indefinite matrix must not factor");
        assert_eq!(m.quadratic_form(&err.witness), err.value);
        assert!(err.value.is_negative());
    }

    #[test]
    fn ldl_gram_rows_reproduce_entries() {
        let m = SymMatrix::from_rows(&[
            vec![rint(1), rfrac(1, 2)],
            vec![rfrac(1, 2), rint(1)],
        ]);
        let rows = ldl_factor(&m).unwrap().gram_rows_f64();
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        };
        assert!((dot(&rows[0], &rows[0]) - 1.0).abs() < 1e-12);
        assert!((dot(&rows[0], &rows[1]) - 0.5).abs() < 1e-12);
        assert!((dot(&rows[1], &rows[1]) - 1.0).abs() < 1e-12);
    }
}
