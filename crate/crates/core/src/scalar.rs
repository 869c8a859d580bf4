//! Nodewise solve of `(1 + h) r + h^2 (beta(r) + pi(r)) = g`.
//!
//! For `h < min(1, 1/Lip(pi))` the left side is strictly increasing, so the
//! root is unique and can be bracketed. Newton steps are taken inside the
//! bracket and replaced by bisection whenever they leave it or stall.

use crate::error::{Error, Result};
use crate::model::{GridFunction, Nonlinearity};
use crate::num::Real;

#[derive(Debug, Clone)]
pub struct ScalarSolveConfig<T> {
    /// Absolute tolerance, scaled by `max(1, |g|)`.
    pub tol_abs: T,
    pub max_iter: usize,
    /// Geometric factor for bracket expansion.
    pub bracket_growth: T,
    pub max_expansions: usize,
}

impl<T: Real> Default for ScalarSolveConfig<T> {
    fn default() -> Self {
        Self {
            tol_abs: T::tol(1e-14, 4.0),
            max_iter: 200,
            bracket_growth: T::lit(2.0),
            max_expansions: 200,
        }
    }
}

fn residual<T: Real>(r: T, g: T, h: T, nl: &Nonlinearity<T>) -> T {
    (T::one() + h) * r + h * h * (nl.beta(r) + nl.pi(r)) - g
}

fn slope<T: Real>(r: T, h: T, nl: &Nonlinearity<T>) -> T {
    T::one() + h + h * h * (nl.beta_prime(r) + nl.pi_prime(r))
}

/// Unique root of `(1 + h) r + h^2 (beta(r) + pi(r)) = g`.
pub fn solve_scalar<T: Real>(
    g: T,
    h: T,
    nonlin: &Nonlinearity<T>,
    cfg: &ScalarSolveConfig<T>,
) -> Result<T> {
    let fail = || Error::BracketFailure {
        g: g.as_f64(),
        node: None,
    };
    if !g.is_finite() || !(h > T::zero()) {
        return Err(fail());
    }
    let centre = g / (T::one() + h);
    let mut lo = centre.min(T::zero()) - T::one();
    let mut hi = centre.max(T::zero()) + T::one();
    let mut flo = residual(lo, g, h, nonlin);
    let mut fhi = residual(hi, g, h, nonlin);
    let mut width = T::one();
    let mut expansions = 0;
    while flo > T::zero() {
        if expansions == cfg.max_expansions {
            return Err(fail());
        }
        width = width * cfg.bracket_growth;
        hi = lo;
        fhi = flo;
        lo = lo - width;
        flo = residual(lo, g, h, nonlin);
        expansions += 1;
    }
    while fhi < T::zero() {
        if expansions == cfg.max_expansions {
            return Err(fail());
        }
        width = width * cfg.bracket_growth;
        lo = hi;
        flo = fhi;
        hi = hi + width;
        fhi = residual(hi, g, h, nonlin);
        expansions += 1;
    }
    if !(flo.is_finite() && fhi.is_finite()) {
        return Err(fail());
    }
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }

    let tol = cfg.tol_abs * g.abs().max(T::one());
    let mut r = centre.max(lo).min(hi);
    let mut fr = residual(r, g, h, nonlin);
    for _ in 0..cfg.max_iter {
        if fr.abs() <= tol {
            return Ok(r);
        }
        if fr < T::zero() {
            lo = r;
        } else {
            hi = r;
        }
        if hi - lo <= T::epsilon() * (T::one() + r.abs()) {
            return Ok(r);
        }
        let d = slope(r, h, nonlin);
        let newton = r - fr / d;
        let half = T::lit(0.5) * (lo + hi);
        r = if d > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            half
        };
        fr = residual(r, g, h, nonlin);
    }
    if fr.abs() <= tol {
        return Ok(r);
    }
    Err(Error::NoConvergence {
        stage: "scalar root",
        iterations: cfg.max_iter,
        residual: fr.abs().as_f64(),
    })
}

/// Applies [`solve_scalar`] at every node.
pub fn solve_field<T: Real>(
    g: &GridFunction<T>,
    h: T,
    nonlin: &Nonlinearity<T>,
    cfg: &ScalarSolveConfig<T>,
) -> Result<GridFunction<T>> {
    let mut out = Vec::with_capacity(g.len());
    for (i, &gi) in g.iter().enumerate() {
        match solve_scalar(gi, h, nonlin, cfg) {
            Ok(r) => out.push(r),
            Err(Error::BracketFailure { g, .. }) => {
                return Err(Error::BracketFailure { g, node: Some(i) })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(GridFunction::from_vec(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn cfg() -> ScalarSolveConfig<f64> {
        ScalarSolveConfig::default()
    }

    #[test]
    fn zero_right_side() {
        let nl = Nonlinearity::<f64>::cubic(0.0, 0.0);
        assert_eq!(solve_scalar(0.0, 0.3, &nl, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn constructed_unit_root() {
        let nl = Nonlinearity::cubic(0.7, 0.4);
        let h = 0.2;
        let g = (1.0 + h) + h * h * (nl.beta(1.0) + nl.pi(1.0));
        assert!((solve_scalar(g, h, &nl, &cfg()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_with_half_slope_against_bisection() {
        // pi(r) = -r/2
        let nl = Nonlinearity::cubic(0.5, 0.0);
        let oracle = bisect(|r| 1.1 * r + 0.01 * r.powi(3) - 0.005 * r - 1.0, 0.0, 1.0);
        let got = solve_scalar(1.0, 0.1, &nl, &cfg()).unwrap();
        assert!((got - oracle).abs() < 1e-14, "{got} vs {oracle}");
    }

    #[test]
    fn far_right_sides_expand_the_bracket() {
        let nl = Nonlinearity::cubic(1.0, 0.0);
        for g in [-1e6, -50.0, 50.0, 1e6] {
            let r = solve_scalar(g, 0.5, &nl, &cfg()).unwrap();
            assert!(residual(r, g, 0.5, &nl).abs() <= 1e-14 * g.abs() * 4.0);
        }
    }

    #[test]
    fn field_reports_failing_node() {
        let nl = Nonlinearity::cubic(1.0, 0.0);
        let g = GridFunction::from_vec(vec![0.0, f64::NAN]);
        match solve_field(&g, 0.1, &nl, &cfg()) {
            Err(Error::BracketFailure { node, .. }) => assert_eq!(node, Some(1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_field() {
        let nl = Nonlinearity::cubic(1.0, 0.0);
        let g = GridFunction::constant(5, 0.8);
        let out = solve_field(&g, 0.1, &nl, &cfg()).unwrap();
        let one = solve_scalar(0.8, 0.1, &nl, &cfg()).unwrap();
        assert!(out.iter().all(|&r| r == one));
    }

    #[test]
    fn single_precision() {
        let nl = Nonlinearity::<f32>::cubic(1.0, 0.0);
        let c = ScalarSolveConfig {
            tol_abs: 1e-6,
            ..ScalarSolveConfig::default()
        };
        let r = solve_scalar(1.0f32, 0.1, &nl, &c).unwrap();
        assert!(residual(r, 1.0, 0.1, &nl).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn matches_bisection_oracle(g in -20.0f64..20.0, h in 0.01f64..0.99) {
            let nl = Nonlinearity::cubic(1.0, 0.0);
            let got = solve_scalar(g, h, &nl, &cfg()).unwrap();
            let f = |r: f64| (1.0 + h) * r + h * h * (r.powi(3) - r) - g;
            let oracle = bisect(f, -30.0, 30.0);
            prop_assert!((got - oracle).abs() <= 1e-12 * g.abs().max(1.0));
        }

        #[test]
        fn solution_map_is_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0, h in 0.01f64..0.99) {
            let nl = Nonlinearity::cubic(1.0, 0.0);
            let (g1, g2) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(solve_scalar(g1, h, &nl, &cfg()).unwrap() <= solve_scalar(g2, h, &nl, &cfg()).unwrap());
        }

        #[test]
        fn lipschitz_in_right_side(g in -10.0f64..10.0, d in -1.0f64..1.0, h in 0.01f64..0.99) {
            let nl = Nonlinearity::cubic(1.0, 0.0);
            let r1 = solve_scalar(g, h, &nl, &cfg()).unwrap();
            let r2 = solve_scalar(g + d, h, &nl, &cfg()).unwrap();
            let bound = d.abs() / (1.0 + h - nl.pi_lip() * h * h);
            prop_assert!((r1 - r2).abs() <= bound + 1e-10);
        }
    }
}
