//! Yosida approximation of `ln` on the whole real line.
//!
//! `ln_tau(x) = (x - r) / tau` where `r > 0` solves `r + tau ln r = x`. Since
//! `(x - r) / tau = ln r`, we solve for `s = ln r` in `e^s + tau s = x`, a
//! convex increasing equation, and return `s` directly.

use crate::num::Real;

/// Value and derivative of the Yosida approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YosidaLn<T> {
    pub tau: T,
}

impl<T: Real> YosidaLn<T> {
    pub fn new(tau: T) -> Self {
        assert!(tau > T::zero(), "tau must be positive");
        Self { tau }
    }

    pub fn value(&self, x: T) -> T {
        yosida_ln(x, self.tau)
    }

    /// `ln_tau'(x) = 1 / (r + tau)`.
    pub fn derivative(&self, x: T) -> T {
        let s = yosida_ln(x, self.tau);
        T::one() / (s.exp() + self.tau)
    }

    /// Resolvent `(I + tau ln)^{-1} x`.
    pub fn resolvent(&self, x: T) -> T {
        yosida_ln(x, self.tau).exp()
    }
}

/// Yosida approximation `ln_tau(x)` of the logarithm, defined for every real
/// `x`. Exactly zero at `x = 1`.
pub fn yosida_ln<T: Real>(x: T, tau: T) -> T {
    debug_assert!(tau > T::zero());
    if x == T::one() {
        return T::zero();
    }
    // start right of the root so Newton decreases monotonically
    let mut s = if x > T::one() { x.ln() } else { T::zero() };
    let tiny = T::epsilon() * T::lit(4.0);
    for _ in 0..200 {
        let e = s.exp();
        let f = e + tau * s - x;
        if f <= T::zero() {
            break;
        }
        let step = f / (e + tau);
        s = s - step;
        if step <= tiny * s.abs().max(T::one()) {
            break;
        }
    }
    // the exact value lies between 0 and ln x
    if x > T::one() {
        s.max(T::zero()).min(x.ln())
    } else if x > T::zero() {
        s.min(T::zero()).max(x.ln())
    } else {
        s.min(T::zero())
    }
}
