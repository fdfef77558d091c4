//! Dense complex matrices and a rank-revealing least-squares solver.

use crate::{Error, Result, C64};

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from equally long columns.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    got: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    /// Builds a matrix from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.cols, x.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * xj;
            }
        }
        Ok(out)
    }

    /// `selfᴴ * y`.
    pub fn adjoint_mul_vec(&self, y: &[C64]) -> Result<Vec<C64>> {
        check_len(self.rows, y.len())?;
        Ok((0..self.cols)
            .map(|j| self.col(j).iter().zip(y).map(|(a, b)| a.conj() * b).sum())
            .collect())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        check_len(self.cols, other.rows)?;
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let c = self.mul_vec(other.col(j))?;
            out.col_mut(j).copy_from_slice(&c);
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Submatrix made of the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<CMatrix> {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            if j >= self.cols {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    len: self.cols,
                });
            }
            data.extend_from_slice(self.col(j));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        })
    }

    /// Submatrix made of the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<CMatrix> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.rows) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.rows,
            });
        }
        Ok(CMatrix::from_fn(idx.len(), self.cols, |i, j| {
            self[(idx[i], j)]
        }))
    }

    pub fn scale(&mut self, factor: f64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    /// Squared Euclidean norm of every column.
    pub fn column_norms_sqr(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| self.col(j).iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Relative rank tolerance of [`least_squares`].
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Unit vector `v` such that `(I - 2 v vᴴ) x = alpha e₀`, together with
/// `alpha`. `v` is `None` when no reflection is needed.
fn householder(x: &[C64]) -> (Option<Vec<C64>>, C64) {
    let sigma = norm(x);
    if sigma == 0.0 {
        return (None, C64::new(0.0, 0.0));
    }
    let x0 = x[0];
    let phase = if x0.norm() == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        x0 / x0.norm()
    };
    let alpha = -phase * sigma;
    let mut v: Vec<C64> = x.to_vec();
    v[0] -= alpha;
    let vn = norm(&v);
    if vn == 0.0 {
        return (None, x0);
    }
    for z in &mut v {
        *z /= vn;
    }
    (Some(v), alpha)
}

/// Applies `I - 2 v vᴴ` to `x` in place.
fn reflect(v: &[C64], x: &mut [C64]) {
    let dot: C64 = v.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
    let k = dot * 2.0;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= vi * k;
    }
}

/// Minimum-norm least-squares solution of `a z ≈ b`.
///
/// Householder QR with column pivoting reveals the numerical rank (diagonal
/// entries below `RANK_TOLERANCE` times the leading one are dropped); a second
/// QR of the trapezoidal factor completes the orthogonal decomposition so the
/// rank-deficient case returns the minimum-norm minimiser.
pub fn least_squares(a: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    check_len(a.rows, b.len())?;
    let (m, n) = (a.rows, a.cols);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut w = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut diag = Vec::with_capacity(steps);

    for j in 0..steps {
        let pivot = (j..n)
            .map(|c| (c, w.col(c)[j..].iter().map(|z| z.norm_sqr()).sum::<f64>()))
            .fold(
                (j, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
            .0;
        if pivot != j {
            for i in 0..m {
                w.data.swap(j * m + i, pivot * m + i);
            }
            perm.swap(j, pivot);
        }
        let (v, alpha) = householder(&w.col(j)[j..]);
        if let Some(v) = v {
            for c in j..n {
                reflect(&v, &mut w.col_mut(c)[j..]);
            }
            reflect(&v, &mut rhs[j..]);
        }
        w[(j, j)] = alpha;
        for i in j + 1..m {
            w[(i, j)] = C64::new(0.0, 0.0);
        }
        diag.push(alpha.norm());
    }

    let lead = diag.first().copied().unwrap_or(0.0);
    let rank = diag
        .iter()
        .take_while(|&&d| lead > 0.0 && d > RANK_TOLERANCE * lead)
        .count();
    let mut z = vec![C64::new(0.0, 0.0); n];
    if rank == 0 {
        return Ok(z);
    }

    if rank == n {
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for k in i + 1..n {
                acc -= w[(i, k)] * z[k];
            }
            z[i] = acc / w[(i, i)];
        }
    } else {
        // R1 = [R11 R12] (rank x n). Factor R1ᴴ = Z T, then R1 = Tᴴ Zᴴ and the
        // minimum-norm solution of R1 z = c is Z [T⁻ᴴ c; 0].
        let mut r1h = CMatrix::from_fn(n, rank, |i, j| {
            if i >= j {
                w[(j, i)].conj()
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut reflectors = Vec::with_capacity(rank);
        for j in 0..rank {
            let (v, alpha) = householder(&r1h.col(j)[j..]);
            if let Some(v) = &v {
                for c in j..rank {
                    reflect(v, &mut r1h.col_mut(c)[j..]);
                }
            }
            r1h[(j, j)] = alpha;
            reflectors.push(v);
        }
        // Tᴴ w = c by forward substitution.
        let mut t = vec![C64::new(0.0, 0.0); n];
        for i in 0..rank {
            let mut acc = rhs[i];
            for k in 0..i {
                acc -= r1h[(k, i)].conj() * t[k];
            }
            t[i] = acc / r1h[(i, i)].conj();
        }
        for (j, v) in reflectors.iter().enumerate().rev() {
            if let Some(v) = v {
                reflect(v, &mut t[j..]);
            }
        }
        z = t;
    }

    let mut x = vec![C64::new(0.0, 0.0); n];
    for (j, &p) in perm.iter().enumerate() {
        x[p] = z[j];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn square_system_is_solved_exactly() {
        let a = CMatrix::from_fn(3, 3, |i, j| {
            c(
                1.0 / (i + j + 1) as f64 + if i == j { 2.0 } else { 0.0 },
                i as f64 - j as f64,
            )
        });
        let x = vec![c(1.0, -1.0), c(0.5, 2.0), c(-3.0, 0.25)];
        let b = a.mul_vec(&x).unwrap();
        let got = least_squares(&a, &b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-12);
        }
    }

    #[test]
    fn overdetermined_residual_is_orthogonal_to_range() {
        let a = CMatrix::from_fn(6, 2, |i, j| {
            c(((i + 1) * (j + 2)) as f64 % 5.0, i as f64 - j as f64)
        });
        let b: Vec<C64> = (0..6).map(|i| c(i as f64, 1.0 - i as f64 * 0.3)).collect();
        let z = least_squares(&a, &b).unwrap();
        let r = sub(&b, &a.mul_vec(&z).unwrap());
        let g = a.adjoint_mul_vec(&r).unwrap();
        assert!(norm(&g) < 1e-10);
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let a = CMatrix::zeros(4, 2);
        let z = least_squares(&a, &[c(1.0, 0.0); 4]).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn duplicated_column_splits_weight_evenly() {
        // Minimum-norm solution spreads the coefficient over identical columns.
        let col = vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)];
        let a = CMatrix::from_columns(3, &[col.clone(), col.clone()]).unwrap();
        let b: Vec<C64> = col.iter().map(|z| z * 2.0).collect();
        let z = least_squares(&a, &b).unwrap();
        assert!((z[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((z[1] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let a = CMatrix::zeros(3, 2);
        assert!(matches!(
            least_squares(&a, &[c(0.0, 0.0); 2]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
