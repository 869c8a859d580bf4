//! Discrete inner products and norms of `H = L^2`, `V = H^1` and `V*`.
//!
//! `(u, v)_H = sum_i w_i u_i v_i` with the grid's trapezoid weights. The
//! gradient seminorm is the edge sum that makes the Neumann stencil
//! self-adjoint, so `|u|_{grad}^2 = (-Delta_h u, u)_H` holds exactly. `V*` is
//! realized through `(I - Delta_h)^{-1}`: `||u||_{V*}^2 = (w, u)_H` with
//! `(I - Delta_h) w = u`, which equals `||w||_V^2`.

use crate::num::Real;

use super::{Grid, GridFunction};

pub fn inner_h<T: Real>(grid: &Grid<T>, u: &GridFunction<T>, v: &GridFunction<T>) -> T {
    debug_assert_eq!(u.len(), grid.len());
    debug_assert_eq!(v.len(), grid.len());
    grid.weights()
        .iter()
        .zip(u.iter().zip(v.iter()))
        .map(|(&w, (&a, &b))| w * a * b)
        .sum()
}

pub fn norm_h<T: Real>(grid: &Grid<T>, u: &GridFunction<T>) -> T {
    inner_h(grid, u, u).sqrt()
}

/// `int_Omega u`.
pub fn integral<T: Real>(grid: &Grid<T>, u: &GridFunction<T>) -> T {
    grid.weights()
        .iter()
        .zip(u.iter())
        .map(|(&w, &a)| w * a)
        .sum()
}

pub fn norm_linf<T: Real>(u: &GridFunction<T>) -> T {
    u.max_abs()
}

/// `||grad_h u||_H^2` as a sum of squared edge differences.
pub fn grad_sq<T: Real>(grid: &Grid<T>, u: &GridFunction<T>) -> T {
    let ext = grid.extents();
    let nx = ext[0];
    let ny = if grid.dim() == 2 { ext[1] } else { 1 };
    let mut total = T::zero();
    // x-edges, weighted by the transverse cell width
    let dx = grid.spacing()[0];
    for j in 0..ny {
        let wy = if grid.dim() == 2 {
            grid.axis_weights(1)[j]
        } else {
            T::one()
        };
        let mut line = T::zero();
        for i in 0..nx - 1 {
            let d = (u[grid.index(i + 1, j)] - u[grid.index(i, j)]) / dx;
            line = line + d * d;
        }
        total = total + line * dx * wy;
    }
    if grid.dim() == 2 {
        let dy = grid.spacing()[1];
        for i in 0..nx {
            let wx = grid.axis_weights(0)[i];
            let mut line = T::zero();
            for j in 0..ny - 1 {
                let d = (u[grid.index(i, j + 1)] - u[grid.index(i, j)]) / dy;
                line = line + d * d;
            }
            total = total + line * dy * wx;
        }
    }
    total
}

pub fn norm_v<T: Real>(grid: &Grid<T>, u: &GridFunction<T>) -> T {
    (grad_sq(grid, u) + inner_h(grid, u, u)).sqrt()
}

/// Solves `(I - Delta_h) w = u`.
pub fn riesz_v<T: Real>(grid: &Grid<T>, u: &GridFunction<T>) -> GridFunction<T> {
    GridFunction::from_vec(grid.identity_minus_laplacian().solve(u.values()))
}

/// `(u, v)_{V*} = ((I - Delta_h)^{-1} u, v)_H`.
pub fn inner_vstar<T: Real>(grid: &Grid<T>, u: &GridFunction<T>, v: &GridFunction<T>) -> T {
    inner_h(grid, &riesz_v(grid, u), v)
}

pub fn norm_vstar<T: Real>(grid: &Grid<T>, u: &GridFunction<T>) -> T {
    inner_vstar(grid, u, u).max(T::zero()).sqrt()
}

/// Norm flavours used by time-integrated metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceNorm {
    H,
    V,
    VStar,
}

impl SpaceNorm {
    pub fn inner<T: Real>(self, grid: &Grid<T>, u: &GridFunction<T>, v: &GridFunction<T>) -> T {
        match self {
            SpaceNorm::H => inner_h(grid, u, v),
            SpaceNorm::V => {
                // polarization of the V norm
                let s = u.add(v);
                let d = u.sub(v);
                let q = |w: &GridFunction<T>| grad_sq(grid, w) + inner_h(grid, w, w);
                (q(&s) - q(&d)) / T::lit(4.0)
            }
            SpaceNorm::VStar => inner_vstar(grid, u, v),
        }
    }

    pub fn norm<T: Real>(self, grid: &Grid<T>, u: &GridFunction<T>) -> T {
        match self {
            SpaceNorm::H => norm_h(grid, u),
            SpaceNorm::V => norm_v(grid, u),
            SpaceNorm::VStar => norm_vstar(grid, u),
        }
    }
}
