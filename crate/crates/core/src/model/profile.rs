use std::f64::consts::PI;

use crate::num::Real;

use super::{Grid, GridFunction};

/// Spatial profiles used for initial data and source terms.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T> {
    Constant {
        value: T,
    },
    /// `mean + amplitude * prod_a cos(mode * pi * x_a / L_a)`.
    Cosine {
        mean: T,
        amplitude: T,
        mode: u32,
    },
    /// `base + amplitude * exp(-|x - center|^2 / (2 width^2))`.
    Gaussian {
        base: T,
        amplitude: T,
        center: [T; 2],
        width: T,
    },
}

impl<T: Real> Profile<T> {
    pub fn sample(&self, grid: &Grid<T>) -> GridFunction<T> {
        match self {
            Profile::Constant { value } => GridFunction::constant(grid.len(), *value),
            Profile::Cosine {
                mean,
                amplitude,
                mode,
            } => {
                let k = T::lit(f64::from(*mode) * PI);
                let lengths = grid.lengths().to_vec();
                GridFunction::from_fn(grid, |x| {
                    let mut p = T::one();
                    for (a, &l) in lengths.iter().enumerate() {
                        p = p * (k * x[a] / l).cos();
                    }
                    *mean + *amplitude * p
                })
            }
            Profile::Gaussian {
                base,
                amplitude,
                center,
                width,
            } => {
                let dim = grid.dim();
                GridFunction::from_fn(grid, |x| {
                    let r2: T = (0..dim).map(|a| (x[a] - center[a]) * (x[a] - center[a])).sum();
                    *base + *amplitude * (-r2 / (T::lit(2.0) * *width * *width)).exp()
                })
            }
        }
    }
}

/// Time dependence of a separable source `f(x, t) = s(x) q(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile<T> {
    Constant,
    /// `q(t) = cos(omega t)`.
    Cosine { omega: T },
}

impl<T: Real> TimeProfile<T> {
    /// `(1/h) int_{t0}^{t0+h} q(s) ds`, in closed form.
    pub fn mean_over(&self, t0: T, h: T) -> T {
        match *self {
            TimeProfile::Constant => T::one(),
            TimeProfile::Cosine { omega } => {
                if omega == T::zero() {
                    T::one()
                } else {
                    ((omega * (t0 + h)).sin() - (omega * t0).sin()) / (omega * h)
                }
            }
        }
    }

    /// Upper bound of `sup |q|` on any interval.
    pub fn sup(&self) -> T {
        T::one()
    }
}

/// Heat source `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum Source<T> {
    Zero,
    Separable {
        spatial: GridFunction<T>,
        time: TimeProfile<T>,
    },
}

impl<T: Real> Source<T> {
    /// `f_k = (1/h) int_{(k-1)h}^{kh} f(s) ds` for `k >= 1`.
    pub fn slab(&self, k: usize, h: T, len: usize) -> GridFunction<T> {
        match self {
            Source::Zero => GridFunction::zeros(len),
            Source::Separable { spatial, time } => {
                let t0 = T::lit((k - 1) as f64) * h;
                spatial.scale(time.mean_over(t0, h))
            }
        }
    }

    /// Upper bound of `int_{t}^{t+h} ||f(s)||_{L^infty} ds`.
    pub fn linf_integral_bound(&self, h: T) -> T {
        match self {
            Source::Zero => T::zero(),
            Source::Separable { spatial, time } => h * spatial.max_abs() * time.sup(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Source::Zero => true,
            Source::Separable { spatial, .. } => spatial.is_finite(),
        }
    }
}
