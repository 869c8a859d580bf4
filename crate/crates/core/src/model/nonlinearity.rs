use std::fmt;
use std::sync::Arc;

use crate::num::Real;

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Monotone part `beta = d(beta_hat)`.
#[derive(Clone)]
pub enum Beta<T> {
    /// `beta(r) = c r^3`, `beta_hat(r) = c r^4 / 4`.
    Cubic { coef: T },
    Zero,
    Custom {
        beta: ScalarFn<T>,
        beta_hat: ScalarFn<T>,
        derivative: ScalarFn<T>,
    },
}

/// Lipschitz perturbation `pi`.
#[derive(Clone)]
pub enum Pi<T> {
    /// `pi(r) = kappa (center - r)`.
    Linear { kappa: T, center: T },
    Custom {
        pi: ScalarFn<T>,
        derivative: ScalarFn<T>,
        lip: T,
    },
}

impl<T: fmt::Debug> fmt::Debug for Beta<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Cubic { coef } => write!(f, "Cubic {{ coef: {coef:?} }}"),
            Beta::Zero => f.write_str("Zero"),
            Beta::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Pi<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pi::Linear { kappa, center } => {
                write!(f, "Linear {{ kappa: {kappa:?}, center: {center:?} }}")
            }
            Pi::Custom { lip, .. } => write!(f, "Custom {{ lip: {lip:?}, .. }}"),
        }
    }
}

/// The pair `(beta, pi)` of the order-parameter equation.
#[derive(Debug, Clone)]
pub struct Nonlinearity<T> {
    pub beta: Beta<T>,
    pub pi: Pi<T>,
}

impl<T: Real> Nonlinearity<T> {
    /// `beta(r) = r^3`, `pi(r) = kappa (center - r)`.
    pub fn cubic(kappa: T, center: T) -> Self {
        Self {
            beta: Beta::Cubic { coef: T::one() },
            pi: Pi::Linear { kappa, center },
        }
    }

    pub fn beta(&self, r: T) -> T {
        match &self.beta {
            Beta::Cubic { coef } => *coef * r * r * r,
            Beta::Zero => T::zero(),
            Beta::Custom { beta, .. } => beta(r),
        }
    }

    pub fn beta_prime(&self, r: T) -> T {
        match &self.beta {
            Beta::Cubic { coef } => T::lit(3.0) * *coef * r * r,
            Beta::Zero => T::zero(),
            Beta::Custom { derivative, .. } => derivative(r),
        }
    }

    pub fn beta_hat(&self, r: T) -> T {
        match &self.beta {
            Beta::Cubic { coef } => *coef * r * r * r * r / T::lit(4.0),
            Beta::Zero => T::zero(),
            Beta::Custom { beta_hat, .. } => beta_hat(r),
        }
    }

    pub fn pi(&self, r: T) -> T {
        match &self.pi {
            Pi::Linear { kappa, center } => *kappa * (*center - r),
            Pi::Custom { pi, .. } => pi(r),
        }
    }

    pub fn pi_prime(&self, r: T) -> T {
        match &self.pi {
            Pi::Linear { kappa, .. } => -*kappa,
            Pi::Custom { derivative, .. } => derivative(r),
        }
    }

    /// `||pi'||_{L^infty}`.
    pub fn pi_lip(&self) -> T {
        match &self.pi {
            Pi::Linear { kappa, .. } => kappa.abs(),
            Pi::Custom { lip, .. } => *lip,
        }
    }

    /// Lipschitz bound of `beta` on `[a, b]`.
    pub fn beta_lip_on(&self, a: T, b: T) -> T {
        match &self.beta {
            Beta::Cubic { coef } => {
                let m = a.abs().max(b.abs());
                T::lit(3.0) * coef.abs() * m * m
            }
            Beta::Zero => T::zero(),
            Beta::Custom { derivative, .. } => {
                // sampled; custom profiles are expected to be smooth
                let n = 256;
                (0..=n)
                    .map(|k| {
                        let s = T::lit(k as f64 / n as f64);
                        derivative(a + (b - a) * s).abs()
                    })
                    .fold(T::zero(), T::max)
            }
        }
    }
}
