//! Banded LU factorization without pivoting.
//!
//! Every matrix assembled by the solver is a diagonally dominant M-matrix
//! (identity or positive diagonal plus a scaled Neumann Laplacian), so
//! Doolittle elimination without row exchanges is stable.

use crate::error::{Error, Result};
use crate::num::Real;

/// Square matrix with `bw` sub- and super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    n: usize,
    bw: usize,
    // row-major, each row stores columns i-bw ..= i+bw
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![T::zero(); n * (2 * bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw, "({i}, {j}) outside band");
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if i.abs_diff(j) > self.bw {
            T::zero()
        } else {
            self.data[self.slot(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let s = self.slot(i, j);
        self.data[s] = self.data[s] + v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let mut acc = T::zero();
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc = acc + self.get(i, j) * *xj;
            }
            *yi = acc;
        }
        y
    }

    /// In-place LU factorization. Fails on a zero (or non-finite) pivot.
    pub fn factor(mut self) -> Result<BandLu<T>> {
        let n = self.n;
        let bw = self.bw;
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "singular band matrix: pivot {pivot} at row {k}"
                )));
            }
            let iend = (k + bw).min(n - 1);
            for i in (k + 1)..=iend {
                let s = self.slot(i, k);
                let factor = self.data[s] / pivot;
                self.data[s] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in (k + 1)..=iend {
                    let kj = self.get(k, j);
                    let sij = self.slot(i, j);
                    self.data[sij] = self.data[sij] - factor * kj;
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

/// Packed `L` (unit lower) and `U` factors.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    m: BandMatrix<T>,
}

impl<T: Real> BandLu<T> {
    pub fn size(&self) -> usize {
        self.m.n
    }

    /// Solves `A x = b`, overwriting `b` with `x`.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.m.n;
        let bw = self.m.bw;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut acc = b[i];
            for j in lo..i {
                acc = acc - self.m.get(i, j) * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut acc = b[i];
            for j in (i + 1)..=hi {
                acc = acc - self.m.get(i, j) * b[j];
            }
            b[i] = acc / self.m.get(i, i);
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
