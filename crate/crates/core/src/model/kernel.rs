use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::num::Real;

/// Radial profile evaluated on a displacement.
pub type KernelFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Shape of the interaction kernel `J` as a function of the displacement.
#[derive(Clone)]
pub enum KernelProfile<T> {
    /// Normalized Gaussian, `(2 pi sigma^2)^{-d/2} exp(-|x|^2 / (2 sigma^2))`.
    Gaussian { sigma: T },
    /// Normalized tent `c_d (1 - |x| / R)_+` with unit mass on `R^d`.
    Hat,
    Zero,
    /// User supplied profile; receives the displacement components.
    Custom(KernelFn<T>),
}

impl<T: fmt::Debug> fmt::Debug for KernelProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelProfile::Gaussian { sigma } => write!(f, "Gaussian {{ sigma: {sigma:?} }}"),
            KernelProfile::Hat => f.write_str("Hat"),
            KernelProfile::Zero => f.write_str("Zero"),
            KernelProfile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Interaction kernel truncated to a ball of radius `support_radius`.
#[derive(Debug, Clone)]
pub struct Kernel<T> {
    pub profile: KernelProfile<T>,
    pub support_radius: T,
}

impl<T: Real> Kernel<T> {
    pub fn gaussian(sigma: T, radius: T) -> Self {
        Self {
            profile: KernelProfile::Gaussian { sigma },
            support_radius: radius,
        }
    }

    pub fn hat(radius: T) -> Self {
        Self {
            profile: KernelProfile::Hat,
            support_radius: radius,
        }
    }

    pub fn zero() -> Self {
        Self {
            profile: KernelProfile::Zero,
            support_radius: T::zero(),
        }
    }

    pub fn custom(radius: T, f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            profile: KernelProfile::Custom(Arc::new(f)),
            support_radius: radius,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.profile, KernelProfile::Zero)
    }

    /// `J(d)` for a displacement with `d.len()` components; zero outside the support.
    pub fn eval(&self, d: &[T]) -> T {
        let r2: T = d.iter().map(|&x| x * x).sum();
        let r = r2.sqrt();
        if r > self.support_radius {
            return T::zero();
        }
        let dim = d.len() as i32;
        match &self.profile {
            KernelProfile::Zero => T::zero(),
            KernelProfile::Gaussian { sigma } => {
                let s2 = *sigma * *sigma;
                let norm = (T::lit(2.0 * PI) * s2).powf(T::lit(dim as f64 / 2.0));
                (-r2 / (T::lit(2.0) * s2)).exp() / norm
            }
            KernelProfile::Hat => {
                let rad = self.support_radius;
                let c = if dim == 1 {
                    T::one() / rad
                } else {
                    T::lit(3.0 / PI) / (rad * rad)
                };
                c * (T::one() - r / rad).max(T::zero())
            }
            KernelProfile::Custom(f) => f(d),
        }
    }
}
