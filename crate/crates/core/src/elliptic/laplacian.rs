//! Second-order Neumann Laplacian with mirror ghost nodes.
//!
//! On boundary nodes the ghost value equals the first interior neighbour, so
//! the boundary row reads `(2 u_1 - 2 u_0) / dx^2`. Together with the
//! half-weight boundary cells this makes `-Delta_h` symmetric and positive
//! semidefinite in the discrete `H` inner product.

use crate::banded::BandMatrix;
use crate::model::{inner_h, Grid, GridFunction};
use crate::num::Real;

#[derive(Debug, Clone, Copy)]
pub struct NeumannLaplacian<'a, T> {
    grid: &'a Grid<T>,
}

impl<'a, T: Real> NeumannLaplacian<'a, T> {
    pub fn new(grid: &'a Grid<T>) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &'a Grid<T> {
        self.grid
    }

    /// Stencil neighbours of node `idx` along `axis` with their coefficient
    /// in `(-Delta_h u)_idx = sum c (u_idx - u_nb)`.
    fn for_each_neighbour(&self, idx: usize, mut f: impl FnMut(usize, T)) {
        let g = self.grid;
        let (i, j) = g.unravel(idx);
        let ext = g.extents();
        for axis in 0..g.dim() {
            let h = g.spacing()[axis];
            let c = T::one() / (h * h);
            let two = T::lit(2.0);
            let (pos, n) = if axis == 0 { (i, ext[0]) } else { (j, ext[1]) };
            let at = |p: usize| if axis == 0 { g.index(p, j) } else { g.index(i, p) };
            if pos == 0 {
                f(at(1), two * c);
            } else if pos == n - 1 {
                f(at(n - 2), two * c);
            } else {
                f(at(pos - 1), c);
                f(at(pos + 1), c);
            }
        }
    }

    /// `-Delta_h u`.
    pub fn apply_neg(&self, u: &GridFunction<T>) -> GridFunction<T> {
        let n = self.grid.len();
        assert_eq!(u.len(), n);
        let mut out = GridFunction::zeros(n);
        for idx in 0..n {
            let mut acc = T::zero();
            let ui = u[idx];
            self.for_each_neighbour(idx, |nb, c| acc = acc + c * (ui - u[nb]));
            out[idx] = acc;
        }
        out
    }

    /// `Delta_h u`.
    pub fn apply(&self, u: &GridFunction<T>) -> GridFunction<T> {
        self.apply_neg(u).map(|v| -v)
    }

    /// `(-Delta_h u, v)_H`.
    pub fn pairing(&self, u: &GridFunction<T>, v: &GridFunction<T>) -> T {
        inner_h(self.grid, &self.apply_neg(u), v)
    }

    /// Band matrix of `diag(d) + scale * (-Delta_h)`.
    pub fn assemble_shifted(&self, d: &[T], scale: T) -> BandMatrix<T> {
        let n = self.grid.len();
        assert_eq!(d.len(), n);
        let bw = if self.grid.dim() == 1 {
            1
        } else {
            self.grid.extents()[0]
        };
        let mut m = BandMatrix::zeros(n, bw);
        for (idx, &di) in d.iter().enumerate() {
            m.add(idx, idx, di);
            self.for_each_neighbour(idx, |nb, c| {
                m.add(idx, idx, scale * c);
                m.add(idx, nb, -scale * c);
            });
        }
        m
    }
}
