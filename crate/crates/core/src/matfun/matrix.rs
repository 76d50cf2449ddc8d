use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    order: usize,
    data: Vec<S>,
}

impl<S: Real> Matrix<S> {
    pub fn zeros(order: usize) -> Self {
        Self { order, data: vec![S::zero(); order * order] }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn diagonal(diag: &[S]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from a row-major buffer of length `order²`.
    pub fn from_row_major(order: usize, data: Vec<S>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidMatrix("order must be at least 1".into()));
        }
        if data.len() != order * order {
            return Err(Error::Dimension { expected: order * order, got: data.len() });
        }
        let m = Self { order, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let order = rows.len();
        let mut data = Vec::with_capacity(order * order);
        for row in rows {
            if row.len() != order {
                return Err(Error::Dimension { expected: order, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(order, data)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.order).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                k / self.order,
                k % self.order
            ))),
            None => Ok(()),
        }
    }

    pub fn scaled(&self, c: S) -> Self {
        Self { order: self.order, data: self.data.iter().map(|&v| v * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.order, other.order);
        Self {
            order: self.order,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-S::one()))
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: S, other: &Self) {
        assert_eq!(self.order, other.order);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.order, other.order);
        let n = self.order;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == S::zero() {
                    continue;
                }
                let (orow, brow) = (i * n, k * n);
                for j in 0..n {
                    out.data[orow + j] += a * other.data[brow + j];
                }
            }
        }
        out
    }

    /// Column action `M v`.
    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        let n = self.order;
        (0..n).map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum()).collect()
    }

    /// Row action `v M`.
    pub fn vec_mul(&self, v: &[S]) -> Vec<S> {
        let n = self.order;
        let mut out = vec![S::zero(); n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == S::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.order;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<S> {
        (0..self.order).map(|i| self.row(i).iter().copied().sum()).collect()
    }

    pub fn max_abs_diagonal(&self) -> S {
        (0..self.order).fold(S::zero(), |acc, i| acc.max(self[(i, i)].abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> S {
        (0..self.order).fold(S::zero(), |acc, i| {
            acc.max(self.row(i).iter().map(|v| v.abs()).sum())
        })
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |acc, v| acc.max(v.abs()))
    }

    /// True when every off-diagonal entry is non-negative.
    pub fn is_metzler(&self) -> bool {
        let n = self.order;
        (0..n).all(|i| (0..n).all(|j| i == j || self.data[i * n + j] >= S::zero()))
    }

    /// Sets entries whose magnitude is below the smallest normal number to zero.
    pub fn flush_subnormals(&mut self) {
        for v in &mut self.data {
            if v.abs() < S::min_positive_value() {
                *v = S::zero();
            }
        }
    }

    pub fn lu(&self) -> Result<Lu<S>> {
        Lu::new(self)
    }

    pub fn inverse(&self) -> Result<Self> {
        let lu = self.lu()?;
        let n = self.order;
        let mut out = Self::zeros(n);
        let mut e = vec![S::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = S::zero());
            e[j] = S::one();
            let col = lu.solve(&e);
            for i in 0..n {
                out.data[i * n + j] = col[i];
            }
        }
        Ok(out)
    }

    /// Upper-left, upper-right, lower-left, lower-right blocks of a `2k × 2k` matrix.
    pub fn split_blocks(&self) -> [Self; 4] {
        let k = self.order / 2;
        let block = |r0: usize, c0: usize| {
            let mut b = Self::zeros(k);
            for i in 0..k {
                for j in 0..k {
                    b.data[i * k + j] = self.data[(r0 + i) * self.order + c0 + j];
                }
            }
            b
        };
        [block(0, 0), block(0, k), block(k, 0), block(k, k)]
    }

    /// Assembles `[[a, b], [c, d]]`.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let k = a.order;
        let n = 2 * k;
        let mut out = Self::zeros(n);
        for (blk, r0, c0) in [(a, 0, 0), (b, 0, k), (c, k, 0), (d, k, k)] {
            for i in 0..k {
                for j in 0..k {
                    out.data[(r0 + i) * n + c0 + j] = blk.data[i * k + j];
                }
            }
        }
        out
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.order + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.order + j]
    }
}

impl<S: fmt::Debug> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for row in self.data.chunks(self.order.max(1)) {
            list.entry(&row);
        }
        list.finish()
    }
}

/// LU factorisation with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<S> {
    lu: Matrix<S>,
    perm: Vec<usize>,
}

impl<S: Real> Lu<S> {
    fn new(m: &Matrix<S>) -> Result<Self> {
        let n = m.order;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = m.max_abs();
        if scale == S::zero() {
            return Err(Error::InvalidModel("matrix is singular".into()));
        }
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= scale * S::epsilon() * S::lit(n as f64) {
                return Err(Error::InvalidModel("matrix is singular".into()));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.data.swap(p * n + j, k * n + j);
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != S::zero() {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.order;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let v = x[j];
                x[i] -= self.lu[(i, j)] * v;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = x[j];
                x[i] -= self.lu[(i, j)] * v;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// Solves `x M = b` for a row vector `x`.
    pub fn solve_left(&self, b: &[S]) -> Vec<S> {
        // x M = b  <=>  Mᵀ xᵀ = bᵀ with M = Pᵀ L U
        let n = self.lu.order;
        let mut y = b.to_vec();
        // Uᵀ z = b
        for i in 0..n {
            for j in 0..i {
                let v = y[j];
                y[i] -= self.lu[(j, i)] * v;
            }
            y[i] /= self.lu[(i, i)];
        }
        // Lᵀ w = z
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = y[j];
                y[i] -= self.lu[(j, i)] * v;
            }
        }
        let mut x = vec![S::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}
