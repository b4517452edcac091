//! Minimal dense matrices over a [`Scalar`].
//!
//! Products skip zero entries, which keeps the exact backend usable on the
//! sparse block-structured matrices produced by the network constructions.

use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
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
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn row_vector(v: Vec<T>) -> Self {
        Matrix { rows: 1, cols: v.len(), data: v }
    }

    pub fn column_vector(v: Vec<T>) -> Self {
        Matrix { rows: v.len(), cols: 1, data: v }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|v| v.clone() * s.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v.clone())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return Err(Error::Dimension(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot_sparse(self.row(i), v)).collect())
    }

    /// `self^T v` without materializing the transpose.
    pub fn tr_matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.rows != v.len() {
            return Err(Error::Dimension(format!(
                "cannot apply transpose of {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![T::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (j, a) in self.row(i).iter().enumerate() {
                if !a.is_zero() {
                    out[j] = out[j].clone() + a.clone() * vi.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn block_diag(blocks: &[Self]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.set(r0 + i, c0 + j, b.get(i, j).clone());
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// Stacks blocks vertically; all must have the same column count.
    pub fn vstack(blocks: &[Self]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::Dimension("vstack column mismatch".into()));
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let data = blocks.iter().flat_map(|b| b.data.iter().cloned()).collect();
        Ok(Matrix { rows, cols, data })
    }

    /// Stacks blocks horizontally; all must have the same row count.
    pub fn hstack(blocks: &[Self]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::Dimension("hstack row mismatch".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c0 = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out.set(i, c0 + j, b.get(i, j).clone());
                }
            }
            c0 += b.cols;
        }
        Ok(out)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    /// Gauss-Jordan inverse with partial pivoting on magnitude.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| !a.get(r, col).is_zero())
                .max_by(|&x, &y| {
                    a.get(x, col)
                        .abs()
                        .partial_cmp(&a.get(y, col).abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .ok_or(Error::Singular)?;
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p = a.get(col, col).clone();
            let p_inv = T::one() / p;
            for j in 0..n {
                a.set(col, j, a.get(col, j).clone() * p_inv.clone());
                inv.set(col, j, inv.get(col, j).clone() * p_inv.clone());
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let av = a.get(r, j).clone() - f.clone() * a.get(col, j).clone();
                    a.set(r, j, av);
                    let iv = inv.get(r, j).clone() - f.clone() * inv.get(col, j).clone();
                    inv.set(r, j, iv);
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Largest absolute row sum (the induced infinity norm).
    pub fn max_row_abs_sum(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |acc, v| acc + v.abs()))
            .fold(T::zero(), |acc, v| if v > acc { v } else { acc })
    }
}

pub fn dot_sparse<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        if x.is_zero() || y.is_zero() {
            continue;
        }
        if x.is_one() {
            acc = acc + y.clone();
        } else if (-x.clone()).is_one() {
            acc = acc - y.clone();
        } else {
            acc = acc + x.clone() * y.clone();
        }
    }
    acc
}

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};

    fn m(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn product_and_transpose() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let b = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(a.matmul(&b).unwrap(), m(&[&[2, 1], &[4, 3]]));
        assert_eq!(a.transpose(), m(&[&[1, 3], &[2, 4]]));
        assert_eq!(a.tr_matvec(&[int(1), int(1)]).unwrap(), vec![int(4), int(6)]);
        assert!(a.matmul(&m(&[&[1, 2, 3]])).is_err());
    }

    #[test]
    fn exact_inverse() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(inv, m(&[&[1, -1], &[-1, 2]]));
        assert_eq!(a.matmul(&inv).unwrap(), Matrix::identity(2));
        let h = Matrix::from_rows(vec![vec![rat(1, 2), rat(1, 3)], vec![rat(1, 3), rat(1, 4)]]).unwrap();
        assert_eq!(h.matmul(&h.inverse().unwrap()).unwrap(), Matrix::identity(2));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).inverse(), Err(Error::Singular));
    }

    #[test]
    fn block_structure() {
        let a = m(&[&[1, -1]]);
        let d = Matrix::block_diag(&[a.clone(), a.clone()]);
        assert_eq!(d, m(&[&[1, -1, 0, 0], &[0, 0, 1, -1]]));
        assert_eq!(Matrix::vstack(&[a.clone(), a.neg()]).unwrap(), m(&[&[1, -1], &[-1, 1]]));
        assert_eq!(Matrix::hstack(&[a.clone(), a]).unwrap(), m(&[&[1, -1, 1, -1]]));
        assert_eq!(m(&[&[1, 5], &[7, 3]]).trace(), int(4));
    }
}
