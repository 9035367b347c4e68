//! Small dense linear algebra and LLL reduction for lattices of rank <= 4.

use std::ops::{Index, IndexMut, Mul};

use crate::error::{Error, Result};

/// Square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { n, data })
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        Ok(Matrix::from_rows(cols)?.transpose())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn mul_int_vec(&self, z: &[i64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * z[j] as f64).sum())
            .collect()
    }

    /// LU factorisation with partial pivoting; `None` if singular.
    fn lu(&self) -> Option<(Matrix, Vec<usize>, f64)> {
        let n = self.n;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs()))
                .unwrap();
            if a[(pivot, col)] == 0.0 {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                }
                perm.swap(pivot, col);
                sign = -sign;
            }
            for row in col + 1..n {
                let f = a[(row, col)] / a[(col, col)];
                a[(row, col)] = f;
                for j in col + 1..n {
                    let v = a[(col, j)];
                    a[(row, j)] -= f * v;
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn det(&self) -> f64 {
        match self.lu() {
            None => 0.0,
            Some((lu, _, sign)) => (0..self.n).fold(sign, |acc, i| acc * lu[(i, i)]),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let (lu, perm, _) = self
            .lu()
            .ok_or_else(|| Error::Precondition("singular matrix".into()))?;
        let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= lu[(i, j)] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= lu[(i, j)] * y[j];
            }
            y[i] /= lu[(i, i)];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let cols: Vec<Vec<f64>> = (0..self.n)
            .map(|j| {
                let mut e = vec![0.0; self.n];
                e[j] = 1.0;
                self.solve(&e)
            })
            .collect::<Result<_>>()?;
        Matrix::from_columns(&cols)
    }

    /// Rows in reverse order; for `d = 2` this conjugates a lattice
    /// containing `e_1` into one containing `e_2`.
    pub fn reverse_rows(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(n - 1 - i, j)] = self[(i, j)];
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// A full-rank lattice in `R^d` given by an accurate map from integer
/// coefficients to points.
pub trait LatticeView {
    fn dim(&self) -> usize;
    fn point(&self, z: &[i64]) -> Vec<f64>;

    fn basis_columns(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| {
                let mut e = vec![0i64; self.dim()];
                e[j] = 1;
                self.point(&e)
            })
            .collect()
    }
}

impl LatticeView for Matrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn point(&self, z: &[i64]) -> Vec<f64> {
        self.mul_int_vec(z)
    }
}

/// LLL-reduced basis: `basis[i] = view.point(transform[i])`.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub transform: Vec<Vec<i64>>,
    pub basis: Vec<Vec<f64>>,
}

impl Reduced {
    pub fn matrix(&self) -> Matrix {
        Matrix::from_columns(&self.basis).expect("square")
    }

    /// Coefficients in the original basis of `sum_i c_i basis[i]`.
    pub fn lift(&self, c: &[i64]) -> Result<Vec<i64>> {
        let d = c.len();
        let mut out = vec![0i64; d];
        for (ci, col) in c.iter().zip(&self.transform) {
            for j in 0..d {
                let term = ci
                    .checked_mul(col[j])
                    .ok_or_else(|| Error::Overflow("lattice coefficient".into()))?;
                out[j] = out[j]
                    .checked_add(term)
                    .ok_or_else(|| Error::Overflow("lattice coefficient".into()))?;
            }
        }
        Ok(out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram_schmidt(b: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let n = b.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mut v = b[i].clone();
        for j in 0..i {
            mu[i][j] = dot(&b[i], &star[j]) / norms[j];
            for (x, s) in v.iter_mut().zip(&star[j]) {
                *x -= mu[i][j] * s;
            }
        }
        norms[i] = dot(&v, &v);
        star.push(v);
    }
    (star, mu, norms)
}

/// LLL reduction with parameter `delta`; vectors are re-evaluated through
/// `view.point` after every update so cancellation never accumulates.
pub fn lll(view: &dyn LatticeView, delta: f64) -> Result<Reduced> {
    let d = view.dim();
    let mut transform: Vec<Vec<i64>> = (0..d)
        .map(|j| {
            let mut e = vec![0i64; d];
            e[j] = 1;
            e
        })
        .collect();
    let mut basis = view.basis_columns();
    let overflow = || Error::Overflow("LLL transform".into());
    let mut k = 1;
    let mut guard = 0usize;
    while k < d {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::Precondition("LLL failed to converge".into()));
        }
        for j in (0..k).rev() {
            let (_, mu, _) = gram_schmidt(&basis);
            let r = mu[k][j].round();
            if r != 0.0 {
                if r.abs() > 9.0e15 {
                    return Err(overflow());
                }
                let r = r as i64;
                for idx in 0..d {
                    let v = transform[j][idx]
                        .checked_mul(r)
                        .and_then(|x| transform[k][idx].checked_sub(x))
                        .ok_or_else(overflow)?;
                    transform[k][idx] = v;
                }
                basis[k] = view.point(&transform[k]);
            }
        }
        let (_, mu, norms) = gram_schmidt(&basis);
        if norms[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            transform.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    Ok(Reduced { transform, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn det_and_solve() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((m.det() - 5.0).abs() < 1e-12);
        let x = m.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        let prod = &m * &m.inverse().unwrap();
        assert!(prod.max_abs_diff(&Matrix::identity(2)) < 1e-12);
        let singular = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(singular.det(), 0.0);
        assert!(singular.solve(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn lll_finds_short_vector_of_skewed_basis() {
        // columns (1, 0) and (1000, 1) generate Z^2
        let m = Matrix::from_columns(&[vec![1.0, 0.0], vec![1000.0, 1.0]]).unwrap();
        let red = lll(&m, 0.99).unwrap();
        for b in &red.basis {
            assert!(dot(b, b) <= 1.0 + 1e-12);
        }
        for (b, u) in red.basis.iter().zip(&red.transform) {
            assert_eq!(b, &m.point(u));
        }
    }

    proptest! {
        #[test]
        fn lll_preserves_lattice(a in -50i64..50, c in -5i64..5) {
            // unimodular transform of a fixed basis
            let base = Matrix::from_columns(&[vec![1.3, 0.2], vec![0.1, 0.9]]).unwrap();
            let u = [[1 + a * c, a], [c, 1i64]];
            let cols: Vec<Vec<f64>> = (0..2)
                .map(|j| base.mul_int_vec(&[u[0][j], u[1][j]]))
                .collect();
            let skew = Matrix::from_columns(&cols).unwrap();
            let red = lll(&skew, 0.99).unwrap();
            let det_t = red.transform[0][0] * red.transform[1][1] - red.transform[0][1] * red.transform[1][0];
            prop_assert_eq!(det_t.abs(), 1);
            prop_assert!((red.matrix().det().abs() - base.det().abs()).abs() < 1e-9);
        }
    }
}
