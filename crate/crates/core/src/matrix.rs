//! Dense square matrices over a [`Scalar`].

use std::ops::{Add, Mul, Neg, Sub};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix. Lattice operators have power-of-two dimension;
/// auxiliary systems (Vandermonde) may have any size.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<S: Scalar> {
    dim: usize,
    ctx: S::Ctx,
    data: Vec<S>,
}

impl<S: Scalar> SquareMatrix<S> {
    pub fn zeros(dim: usize, ctx: S::Ctx) -> Self {
        SquareMatrix { dim, ctx, data: vec![S::zero(ctx); dim * dim] }
    }

    pub fn identity(dim: usize, ctx: S::Ctx) -> Self {
        Self::scaled_identity(dim, S::one(ctx))
    }

    pub fn scaled_identity(dim: usize, s: S) -> Self {
        let ctx = s.ctx();
        let mut m = Self::zeros(dim, ctx);
        for i in 0..dim {
            m.data[i * dim + i] = s.clone();
        }
        m
    }

    pub fn from_fn(dim: usize, ctx: S::Ctx, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        SquareMatrix { dim, ctx, data }
    }

    pub fn from_rows(ctx: S::Ctx, rows: Vec<Vec<S>>) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "ragged rows");
            data.extend(row);
        }
        SquareMatrix { dim, ctx, data }
    }

    pub fn diagonal(ctx: S::Ctx, diag: &[S]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim, ctx);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * dim + i] = d.clone();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ctx(&self) -> S::Ctx {
        self.ctx
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        SquareMatrix { dim: self.dim, ctx: self.ctx, data: self.data.iter().map(f).collect() }
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|v| v.clone() * s)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &Self, c: &S) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone() * c).collect();
        SquareMatrix { dim: self.dim, ctx: self.ctx, data }
    }

    pub fn axpy_in_place(&mut self, c: &S, other: &Self) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            if !b.is_zero() {
                *a += b.clone() * c;
            }
        }
    }

    pub fn add_identity(&self, c: &S) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += c;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, self.ctx, |i, j| self.get(j, i).clone())
    }

    pub fn trace(&self) -> S {
        let mut t = S::zero(self.ctx);
        for i in 0..self.dim {
            t += self.get(i, i);
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs().to_f64()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b).abs().to_f64())
            .fold(0.0, f64::max)
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    m = m.max(self.get(i, j).abs().to_f64());
                }
            }
        }
        m
    }

    pub fn asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                m = m.max((self.get(i, j).clone() - self.get(j, i)).abs().to_f64());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn row_product(&self, other: &Self, i: usize, out: &mut [S]) {
        let n = self.dim;
        for k in 0..n {
            let a = &self.data[i * n + k];
            if a.is_zero() {
                continue;
            }
            let brow = &other.data[k * n..(k + 1) * n];
            for (o, b) in out.iter_mut().zip(brow) {
                if !b.is_zero() {
                    *o += a.mul_ref(b);
                }
            }
        }
    }

    pub fn mul_sequential(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zeros(self.dim, self.ctx);
        let n = self.dim;
        if n == 0 {
            return out;
        }
        for (i, row) in out.data.chunks_mut(n).enumerate() {
            self.row_product(other, i, row);
        }
        out
    }

    #[cfg(feature = "parallel")]
    pub fn mul_parallel(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zeros(self.dim, self.ctx);
        let n = self.dim;
        if n == 0 {
            return out;
        }
        out.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| self.row_product(other, i, row));
        out
    }

    /// Matrix product; row-parallel when the `parallel` feature is on.
    pub fn matmul(&self, other: &Self) -> Self {
        #[cfg(feature = "parallel")]
        {
            if self.dim >= 16 {
                return self.mul_parallel(other);
            }
        }
        self.mul_sequential(other)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut result = Self::identity(self.dim, self.ctx);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.matmul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn determinant(&self) -> S {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = S::one(self.ctx);
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in (col + 1)..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best.is_zero() {
                return S::zero(self.ctx);
            }
            if piv != col {
                for c in 0..n {
                    a.swap(col * n + c, piv * n + c);
                }
                det = -det;
            }
            let p = a[col * n + col].clone();
            det *= p.clone();
            for r in (col + 1)..n {
                let f = a[r * n + col].clone() / &p;
                if f.is_zero() {
                    continue;
                }
                for c in (col + 1)..n {
                    let t = a[col * n + c].clone() * &f;
                    a[r * n + c] -= t;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = Self::identity(n, self.ctx);
        for col in 0..n {
            let mut piv = col;
            let mut best = a.get(col, col).abs();
            for r in (col + 1)..n {
                let v = a.get(r, col).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best.is_zero() {
                return Err(Error::Singular);
            }
            if piv != col {
                for c in 0..n {
                    a.data.swap(col * n + c, piv * n + c);
                    inv.data.swap(col * n + c, piv * n + c);
                }
            }
            let p = a.get(col, col).recip();
            for c in 0..n {
                a.data[col * n + c] *= p.clone();
                inv.data[col * n + c] *= p.clone();
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let t = a.data[col * n + c].clone() * &f;
                    a.data[r * n + c] -= t;
                    let t = inv.data[col * n + c].clone() * &f;
                    inv.data[r * n + c] -= t;
                }
            }
        }
        Ok(inv)
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|v| v.abs().to_f64()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> SquareMatrix<f64> {
        SquareMatrix { dim: self.dim, ctx: (), data: self.data.iter().map(|v| v.to_f64()).collect() }
    }
}

impl<'a, S: Scalar> Add<&'a SquareMatrix<S>> for &'a SquareMatrix<S> {
    type Output = SquareMatrix<S>;
    fn add(self, rhs: &'a SquareMatrix<S>) -> SquareMatrix<S> {
        assert_eq!(self.dim, rhs.dim);
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() + b).collect();
        SquareMatrix { dim: self.dim, ctx: self.ctx, data }
    }
}

impl<'a, S: Scalar> Sub<&'a SquareMatrix<S>> for &'a SquareMatrix<S> {
    type Output = SquareMatrix<S>;
    fn sub(self, rhs: &'a SquareMatrix<S>) -> SquareMatrix<S> {
        assert_eq!(self.dim, rhs.dim);
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() - b).collect();
        SquareMatrix { dim: self.dim, ctx: self.ctx, data }
    }
}

impl<'a, S: Scalar> Mul<&'a SquareMatrix<S>> for &'a SquareMatrix<S> {
    type Output = SquareMatrix<S>;
    fn mul(self, rhs: &'a SquareMatrix<S>) -> SquareMatrix<S> {
        self.matmul(rhs)
    }
}

impl<S: Scalar> Neg for SquareMatrix<S> {
    type Output = SquareMatrix<S>;
    fn neg(self) -> SquareMatrix<S> {
        self.map(|v| -v.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Bits, Extended};

    fn sample(n: usize) -> SquareMatrix<f64> {
        SquareMatrix::from_fn(n, (), |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5 + if i == j { 4.0 } else { 0.0 })
    }

    #[test]
    fn product_against_naive() {
        let a = sample(6);
        let b = sample(6).transpose();
        let c = a.matmul(&b);
        for i in 0..6 {
            for j in 0..6 {
                let naive: f64 = (0..6).map(|k| a.get(i, k) * b.get(k, j)).sum();
                assert!((c.get(i, j) - naive).abs() < 1e-12);
            }
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_product_matches_sequential() {
        let a = sample(32);
        let b = sample(32).transpose();
        assert_eq!(a.mul_parallel(&b), a.mul_sequential(&b));
    }

    #[test]
    fn determinant_and_inverse() {
        let a = SquareMatrix::from_rows((), vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]]);
        assert!((a.determinant() - 18.0).abs() < 1e-12);
        let inv = a.inverse().unwrap();
        let id = a.matmul(&inv);
        assert!(id.max_abs_diff(&SquareMatrix::identity(3, ())) < 1e-14);
        let singular = SquareMatrix::from_rows((), vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(singular.inverse(), Err(Error::Singular));
    }

    #[test]
    fn determinant_sign_under_row_swap() {
        let a = SquareMatrix::from_rows((), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(a.determinant(), -1.0);
    }

    #[test]
    fn commutator_of_commuting_is_zero() {
        let a = sample(5);
        let a2 = a.matmul(&a);
        assert!(a.commutator(&a2).max_abs() < 1e-10);
        assert_eq!(a.pow(2), a2);
    }

    #[test]
    fn extended_inverse() {
        let ctx = Bits::for_digits(60);
        let a = SquareMatrix::from_fn(4, ctx, |i, j| Extended::from_i64(ctx, 1) / Extended::from_i64(ctx, (i + j + 1) as i64));
        let inv = a.inverse().unwrap();
        let err = a.matmul(&inv).max_abs_diff(&SquareMatrix::identity(4, ctx));
        assert!(err < 1e-50, "{err}");
    }
}
