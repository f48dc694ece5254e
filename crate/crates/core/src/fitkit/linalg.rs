//! Dense helpers for the small symmetric systems that appear in least squares.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix is not square");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn scale(&self, s: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    /// `B M Bᵀ` for a rectangular `b` (rows × n).
    pub fn congruence(&self, b: &[Vec<T>]) -> Self {
        let m = b.len();
        let mut out = Self::zeros(m);
        for i in 0..m {
            let bi = self.mul_vec(&b[i]);
            for j in 0..m {
                out[(i, j)] = (0..self.n).map(|k| b[j][k] * bi[k]).sum();
            }
        }
        out
    }
}

impl<T> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Lower Cholesky factor, or `None` if the matrix is not positive definite.
pub fn cholesky<T: Scalar>(a: &SquareMatrix<T>) -> Option<SquareMatrix<T>> {
    let n = a.n;
    let mut l = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor.
pub fn cholesky_solve<T: Scalar>(l: &SquareMatrix<T>, b: &[T]) -> Vec<T> {
    let n = l.n;
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = l[(i, k)] * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let t = l[(k, i)] * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    y
}

pub fn cholesky_inverse<T: Scalar>(a: &SquareMatrix<T>) -> Option<SquareMatrix<T>> {
    let l = cholesky(a)?;
    let n = a.n;
    let mut inv = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col = cholesky_solve(&l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Some(inv)
}

/// Eigenvalues and column eigenvectors of a symmetric matrix (cyclic Jacobi).
pub fn symmetric_eigen<T: Scalar>(a: &SquareMatrix<T>) -> (Vec<T>, SquareMatrix<T>) {
    let n = a.n;
    let mut m = a.clone();
    let mut v = SquareMatrix::identity(n);
    for _sweep in 0..100 {
        let off: T = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)] * m[(i, j)]).sum();
        let scale: T = m.data.iter().map(|&x| x * x).sum();
        if off <= T::epsilon() * T::epsilon() * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (m.diag(), v)
}

/// Moore–Penrose inverse of a symmetric PSD matrix, dropping eigenvalues below
/// `rcond · λ_max`. Returns the inverse and the number of retained directions.
pub fn pseudo_inverse<T: Scalar>(a: &SquareMatrix<T>, rcond: T) -> (SquareMatrix<T>, usize) {
    let n = a.n;
    let (vals, vecs) = symmetric_eigen(a);
    let lmax = vals.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let mut inv = SquareMatrix::zeros(n);
    let mut rank = 0;
    for (k, &lam) in vals.iter().enumerate() {
        if lam > rcond * lmax && lam > T::zero() {
            rank += 1;
            for i in 0..n {
                for j in 0..n {
                    inv[(i, j)] += vecs[(i, k)] * vecs[(j, k)] / lam;
                }
            }
        }
    }
    (inv, rank)
}
