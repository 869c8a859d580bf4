use std::sync::OnceLock;

use crate::banded::BandLu;
use crate::elliptic::laplacian::NeumannLaplacian;
use crate::error::{Error, Result};
use crate::num::Real;

/// Uniform node-centred grid on a box `(0, L_1) x ... x (0, L_d)`, `d` in {1, 2}.
///
/// Nodes sit on the boundary. Quadrature uses trapezoid cell volumes:
/// boundary nodes carry half weight per axis and the 2D weights are the
/// tensor product of the axis weights, so the weights sum to `|Omega|`.
#[derive(Debug, Clone)]
pub struct Grid<T> {
    extents: Vec<usize>,
    lengths: Vec<T>,
    spacing: Vec<T>,
    axis_weights: Vec<Vec<T>>,
    weights: Vec<T>,
    vstar_lu: OnceLock<BandLu<T>>,
}

impl<T: Real> Grid<T> {
    /// Builds a grid from node counts and side lengths per axis.
    ///
    /// Two nodes per axis is the minimum the stencil can represent;
    /// [`crate::model::validate`] reports anything below three.
    pub fn new(extents: &[usize], lengths: &[T]) -> Result<Self> {
        if extents.is_empty() || extents.len() > 2 {
            return Err(Error::InvalidInput(format!(
                "grid dimension must be 1 or 2, got {}",
                extents.len()
            )));
        }
        if extents.len() != lengths.len() {
            return Err(Error::InvalidInput(
                "extents and lengths differ in dimension".into(),
            ));
        }
        let mut spacing = Vec::with_capacity(extents.len());
        let mut axis_weights = Vec::with_capacity(extents.len());
        for (&n, &l) in extents.iter().zip(lengths) {
            if n < 2 {
                return Err(Error::InvalidInput(format!(
                    "need at least 2 nodes per axis, got {n}"
                )));
            }
            if !(l > T::zero()) || !l.is_finite() {
                return Err(Error::InvalidInput(format!("side length {l} not positive")));
            }
            let dx = l / T::lit((n - 1) as f64);
            let mut w = vec![dx; n];
            w[0] = dx / T::lit(2.0);
            w[n - 1] = dx / T::lit(2.0);
            spacing.push(dx);
            axis_weights.push(w);
        }
        let weights = if extents.len() == 1 {
            axis_weights[0].clone()
        } else {
            let (wx, wy) = (&axis_weights[0], &axis_weights[1]);
            let mut w = Vec::with_capacity(extents[0] * extents[1]);
            for &b in wy {
                for &a in wx {
                    w.push(a * b);
                }
            }
            w
        };
        Ok(Self {
            extents: extents.to_vec(),
            lengths: lengths.to_vec(),
            spacing,
            axis_weights,
            weights,
            vstar_lu: OnceLock::new(),
        })
    }

    pub fn new_1d(nodes: usize, length: T) -> Result<Self> {
        Self::new(&[nodes], &[length])
    }

    pub fn new_2d(nx: usize, ny: usize, lx: T, ly: T) -> Result<Self> {
        Self::new(&[nx, ny], &[lx, ly])
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    pub fn axis_weights(&self, axis: usize) -> &[T] {
        &self.axis_weights[axis]
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell volume attached to every node.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `|Omega|`.
    pub fn measure(&self) -> T {
        self.lengths.iter().fold(T::one(), |acc, &l| acc * l)
    }

    /// Linear index of node `(i, j)`; `j` is ignored in 1D.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.extents[0] * j
    }

    /// Axis indices of a linear node index.
    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize) {
        (idx % self.extents[0], idx / self.extents[0])
    }

    /// Physical coordinates of a node; the unused component is zero in 1D.
    pub fn coords(&self, idx: usize) -> [T; 2] {
        let (i, j) = self.unravel(idx);
        let x = T::lit(i as f64) * self.spacing[0];
        let y = if self.dim() == 2 {
            T::lit(j as f64) * self.spacing[1]
        } else {
            T::zero()
        };
        [x, y]
    }

    /// Factorization of `I - Delta_h`, built on first use.
    pub(crate) fn identity_minus_laplacian(&self) -> &BandLu<T> {
        self.vstar_lu.get_or_init(|| {
            let ones = vec![T::one(); self.len()];
            NeumannLaplacian::new(self)
                .assemble_shifted(&ones, T::one())
                .factor()
                .expect("I - Delta_h is strictly diagonally dominant")
        })
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.extents == other.extents && self.lengths == other.lengths
    }
}
