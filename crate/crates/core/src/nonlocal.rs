//! The nonlocal operator `a(x) phi - (J * phi)(x)` on a bounded domain.
//!
//! Integrals run over `Omega` only (no periodic wrap), discretized with the
//! grid's quadrature weights: `(J * phi)_i = sum_j J(x_i - x_j) w_j phi_j`.
//! `a` is assembled from the same sums (`a = J * 1`), so constants are
//! annihilated exactly.

use crate::model::{Grid, GridFunction, Kernel};
use crate::num::Real;

/// Precomputed kernel values for every node pair inside the support.
#[derive(Debug, Clone)]
pub struct ConvolutionPlan<T> {
    // per row: (column, J(x_i - x_j))
    rows: Vec<Vec<(usize, T)>>,
    weights: Vec<T>,
    a_field: GridFunction<T>,
    kernel_bound: T,
    evenness_defect: T,
    max_abs: T,
}

impl<T: Real> ConvolutionPlan<T> {
    pub fn new(grid: &Grid<T>, kernel: &Kernel<T>) -> Self {
        let n = grid.len();
        let weights = grid.weights().to_vec();
        let mut rows = vec![Vec::new(); n];
        let mut evenness_defect = T::zero();
        let mut max_abs = T::zero();

        if !kernel.is_zero() {
            let dim = grid.dim();
            let ext = grid.extents();
            let h = grid.spacing();
            let reach: Vec<isize> = (0..dim)
                .map(|a| {
                    let k = (kernel.support_radius / h[a]).floor().to_f64().unwrap_or(0.0);
                    (k as isize).min(ext[a] as isize - 1)
                })
                .collect();
            let ry = if dim == 2 { reach[1] } else { 0 };

            // kernel values per offset, shared by all rows
            let mut offsets = Vec::new();
            for oy in -ry..=ry {
                for ox in -reach[0]..=reach[0] {
                    let d = [T::lit(ox as f64) * h[0], T::lit(oy as f64) * h[dim - 1]];
                    let v = kernel.eval(&d[..dim]);
                    let mirrored = kernel.eval(&[-d[0], -d[1]][..dim]);
                    evenness_defect = evenness_defect.max((v - mirrored).abs());
                    max_abs = max_abs.max(v.abs());
                    if v != T::zero() {
                        offsets.push((ox, oy, v));
                    }
                }
            }

            let ny = if dim == 2 { ext[1] as isize } else { 1 };
            for (idx, row) in rows.iter_mut().enumerate() {
                let (i, j) = grid.unravel(idx);
                for &(ox, oy, v) in &offsets {
                    // row i holds J(x_i - x_k) with x_k = x_i - offset
                    let ki = i as isize - ox;
                    let kj = j as isize - oy;
                    if ki < 0 || ki >= ext[0] as isize || kj < 0 || kj >= ny {
                        continue;
                    }
                    row.push((grid.index(ki as usize, kj as usize), v));
                }
            }
        }

        let mut plan = Self {
            rows,
            weights,
            a_field: GridFunction::zeros(n),
            kernel_bound: T::zero(),
            evenness_defect,
            max_abs,
        };
        plan.a_field = plan.convolve(&GridFunction::constant(n, T::one()));
        plan.kernel_bound = plan
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(k, v)| v.abs() * plan.weights[k])
                    .sum::<T>()
            })
            .fold(T::zero(), T::max);
        plan
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `a(x_i) = sum_j J(x_i - x_j) w_j`.
    pub fn a_field(&self) -> &GridFunction<T> {
        &self.a_field
    }

    /// `max_i sum_j |J(x_i - x_j)| w_j`.
    pub fn kernel_bound(&self) -> T {
        self.kernel_bound
    }

    /// Largest `|J(d) - J(-d)|` over sampled grid displacements.
    pub fn max_evenness_defect(&self) -> T {
        self.evenness_defect
    }

    pub fn max_abs_value(&self) -> T {
        self.max_abs
    }

    /// Pair value `J(x_i - x_j)` (zero outside the support).
    pub fn pair(&self, i: usize, j: usize) -> T {
        self.rows[i]
            .iter()
            .find(|&&(k, _)| k == j)
            .map_or(T::zero(), |&(_, v)| v)
    }

    pub fn convolve(&self, phi: &GridFunction<T>) -> GridFunction<T> {
        assert_eq!(phi.len(), self.rows.len());
        GridFunction::from_vec(
            self.rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&(k, v)| v * self.weights[k] * phi[k])
                        .sum()
                })
                .collect(),
        )
    }

    /// `a phi - J * phi`.
    pub fn nonlocal_term(&self, phi: &GridFunction<T>) -> GridFunction<T> {
        let conv = self.convolve(phi);
        GridFunction::from_vec(
            self.a_field
                .iter()
                .zip(phi.iter().zip(conv.iter()))
                .map(|(&a, (&p, &c))| a * p - c)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{inner_h, norm_linf};
    use proptest::prelude::*;

    fn plan_1d(n: usize, kernel: Kernel<f64>) -> (Grid<f64>, ConvolutionPlan<f64>) {
        let g = Grid::new_1d(n, 1.0).unwrap();
        let p = ConvolutionPlan::new(&g, &kernel);
        (g, p)
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let (_, p) = plan_1d(8, Kernel::zero());
        let phi = GridFunction::from_vec((0..8).map(|i| i as f64).collect());
        assert_eq!(p.convolve(&phi), GridFunction::zeros(8));
        assert_eq!(p.a_field(), &GridFunction::zeros(8));
        assert_eq!(p.nonlocal_term(&phi), GridFunction::zeros(8));
    }

    #[test]
    fn constants_scale_a() {
        let (_, p) = plan_1d(12, Kernel::gaussian(0.1, 0.35));
        let c = 2.5;
        let conv = p.convolve(&GridFunction::constant(12, c));
        for i in 0..12 {
            assert!((conv[i] - c * p.a_field()[i]).abs() < 1e-14);
        }
        let nt = p.nonlocal_term(&GridFunction::constant(12, c));
        assert!(nt.max_abs() < 1e-14);
    }

    #[test]
    fn spike_response_against_double_loop() {
        // hat kernel radius 0.5 on 5 nodes over (0, 1): dx = 0.25
        let kernel = Kernel::hat(0.5);
        let (g, p) = plan_1d(5, kernel.clone());
        let mut e2 = GridFunction::zeros(5);
        e2[2] = 1.0;
        let got = p.convolve(&e2);
        for i in 0..5 {
            let mut direct = 0.0;
            for j in 0..5 {
                let d = (i as f64 - j as f64) * 0.25;
                let jv = if d.abs() <= 0.5 { (1.0 - d.abs() / 0.5) / 0.5 } else { 0.0 };
                direct += jv * g.weights()[j] * e2[j];
            }
            assert!((got[i] - direct).abs() < 1e-15, "node {i}");
        }
        // hand values: weight of node 2 is 0.25, J(0) = 2, J(0.25) = 1, J(0.5) = 0
        assert!((got[2] - 0.5).abs() < 1e-15);
        assert!((got[1] - 0.25).abs() < 1e-15);
        assert!(got[0].abs() < 1e-15);
    }

    #[test]
    fn nonlocal_term_matches_dense_matrix() {
        let n = 8;
        let (g, p) = plan_1d(n, Kernel::gaussian(0.2, 0.6));
        let phi = GridFunction::from_vec((0..n).map(|i| ((i * 37) % 11) as f64 / 7.0 - 0.5).collect());
        let kernel = Kernel::gaussian(0.2, 0.6);
        let dx = 1.0 / 7.0;
        let mut a = vec![0.0; n];
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                w[i][j] = kernel.eval(&[(i as f64 - j as f64) * dx]) * g.weights()[j];
                a[i] += w[i][j];
            }
        }
        let got = p.nonlocal_term(&phi);
        for i in 0..n {
            let dense: f64 = a[i] * phi[i] - (0..n).map(|j| w[i][j] * phi[j]).sum::<f64>();
            assert!((got[i] - dense).abs() < 1e-14);
        }
    }

    #[test]
    fn two_dimensional_plan_symmetry() {
        let g = Grid::<f64>::new_2d(7, 6, 1.0, 1.0).unwrap();
        let p = ConvolutionPlan::new(&g, &Kernel::gaussian(0.15, 0.4));
        assert!(p.max_evenness_defect() == 0.0);
        let phi = GridFunction::from_fn(&g, |x| (3.0 * x[0]).sin() + x[1]);
        let psi = GridFunction::from_fn(&g, |x| x[0] * x[1] - 0.2);
        let lhs = inner_h(&g, &p.convolve(&phi), &psi);
        let rhs = inner_h(&g, &phi, &p.convolve(&psi));
        assert!((lhs - rhs).abs() < 1e-14);
        assert!(p.nonlocal_term(&GridFunction::constant(g.len(), 4.0)).max_abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn convolution_is_self_adjoint_and_bounded(
            phi in prop::collection::vec(-3.0f64..3.0, 20),
            psi in prop::collection::vec(-3.0f64..3.0, 20),
            sigma in 0.05f64..0.3,
        ) {
            let g = Grid::new_1d(20, 1.0).unwrap();
            let p = ConvolutionPlan::new(&g, &Kernel::gaussian(sigma, 3.0 * sigma));
            let phi = GridFunction::from_vec(phi);
            let psi = GridFunction::from_vec(psi);
            let lhs = inner_h(&g, &p.convolve(&phi), &psi);
            let rhs = inner_h(&g, &phi, &p.convolve(&psi));
            prop_assert!((lhs - rhs).abs() <= 1e-12);
            let bound = p.kernel_bound() * norm_linf(&phi);
            prop_assert!(norm_linf(&p.convolve(&phi)) <= bound * (1.0 + 1e-14));
        }
    }
}
