//! Small dense linear algebra for normal-equation solvers.

use std::ops::{Index, IndexMut};

use crate::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows * cols");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// Columns `keep`, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, keep.len());
        for i in 0..self.rows {
            for (jj, &j) in keep.iter().enumerate() {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `X' diag(w) X`, or `X'X` when `w` is `None`.
    pub fn weighted_gram(&self, w: Option<&[T]>) -> Self {
        let p = self.cols;
        let mut g = Self::zeros(p, p);
        for i in 0..self.rows {
            let r = self.row(i);
            let wi = w.map_or(T::one(), |w| w[i]);
            for a in 0..p {
                let ra = r[a] * wi;
                if ra == T::zero() {
                    continue;
                }
                for b in a..p {
                    g.data[a * p + b] += ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g.data[a * p + b] = g.data[b * p + a];
            }
        }
        g
    }

    /// `X' diag(w) v`.
    pub fn weighted_tmul(&self, w: Option<&[T]>, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let s = w.map_or(T::one(), |w| w[i]) * v[i];
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += x * s;
            }
        }
        out
    }

    /// Quadratic form `a' M a`.
    pub fn quad_form(&self, a: &[T]) -> T {
        dot(a, &self.mul_vec(a))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Cholesky factorization `A = P L L' P'` with diagonal pivoting.
///
/// Pivoting stops when the largest remaining diagonal falls below
/// `tol` times the largest initial diagonal; `rank` is the number of pivots
/// taken and `perm[rank..]` are the dependent columns.
#[derive(Debug, Clone)]
pub struct PivotedCholesky<T> {
    l: Matrix<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Scalar> PivotedCholesky<T> {
    pub fn factor(a: &Matrix<T>, tol: T) -> Self {
        let n = a.rows();
        assert_eq!(n, a.cols(), "matrix must be square");
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut l = Matrix::zeros(n, n);
        let scale = (0..n).map(|i| a[(i, i)]).fold(T::zero(), T::max);
        let mut rank = 0;
        for k in 0..n {
            let (piv, best) = (k..n).map(|j| (j, w[(j, j)])).fold((k, -T::infinity()), |acc, x| {
                if x.1 > acc.1 {
                    x
                } else {
                    acc
                }
            });
            if !(best > tol * scale) || best <= T::zero() {
                break;
            }
            if piv != k {
                swap_sym(&mut w, k, piv);
                perm.swap(k, piv);
                for c in 0..k {
                    let tmp = l[(k, c)];
                    l[(k, c)] = l[(piv, c)];
                    l[(piv, c)] = tmp;
                }
            }
            let d = w[(k, k)].sqrt();
            l[(k, k)] = d;
            for i in k + 1..n {
                l[(i, k)] = w[(i, k)] / d;
            }
            for i in k + 1..n {
                for j in k + 1..=i {
                    let v = w[(i, j)] - l[(i, k)] * l[(j, k)];
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
            rank += 1;
        }
        PivotedCholesky { l, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.perm.len()
    }

    /// Original indices of the columns left out of the pivot set.
    pub fn dependent_columns(&self) -> Vec<usize> {
        let mut d = self.perm[self.rank..].to_vec();
        d.sort_unstable();
        d
    }

    /// Solves `A x = b`. Requires full rank.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert!(self.is_full_rank(), "solve requires a full-rank factorization");
        let n = b.len();
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.perm.len();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            inv.set_column(j, &self.solve(&e));
        }
        // symmetrize against rounding
        for i in 0..n {
            for j in 0..i {
                let v = (inv[(i, j)] + inv[(j, i)]) / T::of(2.0);
                inv[(i, j)] = v;
                inv[(j, i)] = v;
            }
        }
        inv
    }
}

fn swap_sym<T: Scalar>(w: &mut Matrix<T>, a: usize, b: usize) {
    let n = w.rows();
    for j in 0..n {
        let tmp = w[(a, j)];
        w[(a, j)] = w[(b, j)];
        w[(b, j)] = tmp;
    }
    for i in 0..n {
        let tmp = w[(i, a)];
        w[(i, a)] = w[(i, b)];
        w[(i, b)] = tmp;
    }
}

/// Default relative pivot tolerance: `sqrt(epsilon)`.
pub fn rank_tolerance<T: Scalar>() -> T {
    T::epsilon().sqrt()
}

/// Factors `X'X` scaled to unit diagonal so that the pivot test reads as
/// `1 - R^2` of each column on the previously pivoted ones.
pub fn column_rank<T: Scalar>(x: &Matrix<T>) -> PivotedCholesky<T> {
    let g = x.weighted_gram(None);
    let p = g.rows();
    let d: Vec<T> = (0..p).map(|i| if g[(i, i)] > T::zero() { g[(i, i)].sqrt() } else { T::one() }).collect();
    let mut s = g.clone();
    for i in 0..p {
        for j in 0..p {
            s[(i, j)] = g[(i, j)] / (d[i] * d[j]);
        }
        if g[(i, i)] <= T::zero() {
            s[(i, i)] = T::zero();
        }
    }
    PivotedCholesky::factor(&s, rank_tolerance())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0, 0.6], vec![2.0, 2.0, 0.5], vec![0.6, 0.5, 3.0]]);
        let ch = PivotedCholesky::factor(&a, 1e-12);
        assert!(ch.is_full_rank());
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0f64, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-12_f64);
        }
        let inv = ch.inverse();
        let id = {
            let mut m = Matrix::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] = (0..3).map(|k| a[(i, k)] * inv[(k, j)]).sum::<f64>();
                }
            }
            m
        };
        for i in 0..3 {
            for j in 0..3 {
                let e: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn detects_collinear_columns() {
        // third column = first + second
        let x = Matrix::from_rows(&[
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 2.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0, 5.0, 6.0],
        ]);
        let ch = column_rank(&x);
        assert_eq!(ch.rank(), 2);
        assert_eq!(ch.dependent_columns().len(), 1);
        let zero_col = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(column_rank(&zero_col).dependent_columns(), vec![1]);
    }

    #[test]
    fn works_in_f32() {
        let a = Matrix::from_rows(&[vec![2.0f32, 1.0], vec![1.0, 2.0]]);
        let x = PivotedCholesky::factor(&a, 1e-6).solve(&[3.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6);
    }
}
