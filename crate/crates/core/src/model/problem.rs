use std::fmt;

use crate::nonlocal::ConvolutionPlan;
use crate::num::Real;

use super::{Grid, GridFunction, Kernel, Nonlinearity, Source};

/// One instance of the phase-field problem.
#[derive(Debug, Clone)]
pub struct ProblemData<T> {
    /// Latent-heat coupling `ell`.
    pub ell: T,
    /// Heat diffusivity `eta`.
    pub eta: T,
    /// Regularization `epsilon` in `(0, 1]`.
    pub epsilon: T,
    pub grid: Grid<T>,
    pub kernel: Kernel<T>,
    pub nonlin: Nonlinearity<T>,
    pub source: Source<T>,
    pub theta0: GridFunction<T>,
    pub phi0: GridFunction<T>,
    pub v0: GridFunction<T>,
    pub final_time: T,
    /// Uniform positivity floor demanded of `theta0`.
    pub theta_min_input: T,
}

impl<T: Real> ProblemData<T> {
    /// Same data with a different `epsilon`.
    pub fn with_epsilon(&self, epsilon: T) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    /// `u_0 = epsilon theta0 + ln theta0`.
    pub fn u0(&self) -> GridFunction<T> {
        let eps = self.epsilon;
        self.theta0.map(|t| eps * t + t.ln())
    }
}

/// Which hypothesis a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Grid,
    Coefficients,
    /// Kernel evenness and integrability.
    C1,
    /// `beta` maximal monotone with convex potential.
    C2,
    /// `pi` Lipschitz.
    C3,
    /// Data regularity and positivity of `theta0`.
    C4,
}

/// A violated admissibility condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    /// Name of the offending datum (`"theta0"`, `"kernel"`, ...).
    pub subject: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] {}", self.condition, self.message)
    }
}

fn violation(condition: Condition, subject: &'static str, message: impl Into<String>) -> Violation {
    Violation {
        condition,
        subject,
        message: message.into(),
    }
}

/// Sample points used to spot-check the nonlinearity hypotheses.
fn nonlinearity_samples<T: Real>(pd: &ProblemData<T>) -> Vec<T> {
    let reach = pd.phi0.max_abs().max(T::one()) * T::lit(4.0);
    let n = 200;
    let mut s: Vec<T> = (0..=n)
        .map(|k| reach * (T::lit(2.0 * k as f64 / n as f64) - T::one()))
        .collect();
    s.extend(pd.phi0.iter().copied().filter(|v| v.is_finite()));
    s
}

/// Checks every admissibility condition on `pd` and reports each violation.
/// An empty list means the instance is admissible.
pub fn validate<T: Real>(pd: &ProblemData<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = pd.grid.len();

    for (axis, &m) in pd.grid.extents().iter().enumerate() {
        if m < 3 {
            out.push(violation(
                Condition::Grid,
                "grid",
                format!("grid axis {axis} has {m} nodes, at least 3 required"),
            ));
        }
    }

    if !(pd.ell > T::zero()) || !pd.ell.is_finite() {
        out.push(violation(Condition::Coefficients, "ell", "ell must be positive"));
    }
    if !(pd.eta > T::zero()) || !pd.eta.is_finite() {
        out.push(violation(Condition::Coefficients, "eta", "eta must be positive"));
    }
    if !(pd.epsilon > T::zero() && pd.epsilon <= T::one()) {
        out.push(violation(
            Condition::Coefficients,
            "epsilon",
            "epsilon must lie in (0, 1]",
        ));
    }
    if !(pd.final_time > T::zero()) || !pd.final_time.is_finite() {
        out.push(violation(
            Condition::Coefficients,
            "final_time",
            "final time must be positive",
        ));
    }

    // (C1)
    let plan = ConvolutionPlan::new(&pd.grid, &pd.kernel);
    if plan.max_evenness_defect() > T::lit(1e-12) * plan.max_abs_value().max(T::one()) {
        out.push(violation(
            Condition::C1,
            "kernel",
            "kernel evenness violated: J(-x) != J(x)",
        ));
    }
    if !plan.kernel_bound().is_finite() {
        out.push(violation(
            Condition::C1,
            "kernel",
            "kernel bound sup_x int |J(x - y)| dy is not finite",
        ));
    }

    // (C2), (C3)
    let samples = nonlinearity_samples(pd);
    let nl = &pd.nonlin;
    let tol = T::lit(1e-10);
    if nl.beta(T::zero()) != T::zero() {
        out.push(violation(Condition::C2, "beta", "beta(0) must vanish"));
    }
    if nl.beta_hat(T::zero()) != T::zero() {
        out.push(violation(Condition::C2, "beta_hat", "beta_hat(0) must vanish"));
    }
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    if sorted
        .windows(2)
        .any(|w| nl.beta(w[1]) < nl.beta(w[0]) - tol * nl.beta(w[0]).abs().max(T::one()))
    {
        out.push(violation(Condition::C2, "beta", "beta is not nondecreasing"));
    }
    if samples.iter().any(|&r| !(nl.beta_hat(r) >= T::zero())) {
        out.push(violation(Condition::C2, "beta_hat", "beta_hat takes negative values"));
    }
    let mut subdiff_ok = true;
    let mut lip_ok = nl.pi_lip().is_finite() && nl.pi_lip() >= T::zero();
    for (k, &a) in samples.iter().enumerate().step_by(3) {
        for &b in samples.iter().skip(k % 7).step_by(5) {
            let lhs = nl.beta_hat(b) - nl.beta_hat(a);
            let rhs = nl.beta(b) * (b - a);
            if lhs > rhs + tol * rhs.abs().max(T::one()) {
                subdiff_ok = false;
            }
            let dpi = (nl.pi(a) - nl.pi(b)).abs();
            if dpi > nl.pi_lip() * (a - b).abs() * (T::one() + tol) + tol {
                lip_ok = false;
            }
        }
    }
    if !subdiff_ok {
        out.push(violation(
            Condition::C2,
            "beta",
            "beta is not the subdifferential of beta_hat",
        ));
    }
    if !lip_ok {
        out.push(violation(
            Condition::C3,
            "pi",
            "pi is not Lipschitz with the declared constant",
        ));
    }

    // (C4)
    for (name, f) in [("theta0", &pd.theta0), ("phi0", &pd.phi0), ("v0", &pd.v0)] {
        if f.len() != n {
            out.push(violation(
                Condition::C4,
                name,
                format!("{name} has {} values, grid has {n} nodes", f.len()),
            ));
        } else if !f.is_finite() {
            out.push(violation(Condition::C4, name, format!("{name} is not bounded")));
        }
    }
    if pd.theta0.iter().any(|&t| !(t > T::zero())) {
        out.push(violation(
            Condition::C4,
            "theta0",
            "theta0 not strictly positive",
        ));
    } else if pd.theta0.min() < pd.theta_min_input {
        out.push(violation(
            Condition::C4,
            "theta0",
            format!(
                "theta0 minimum {} below floor {}",
                pd.theta0.min(),
                pd.theta_min_input
            ),
        ));
    }
    if !pd.source.is_finite() {
        out.push(violation(Condition::C4, "source", "source is not bounded"));
    }
    out
}

/// Non-fatal remarks about a run with step `h`.
///
/// The energy estimate absorbs one source term into the left side, which needs
/// `int_{step} ||f||_{L^infty} <= 1/2`.
pub fn warnings<T: Real>(pd: &ProblemData<T>, h: T) -> Vec<String> {
    let mut out = Vec::new();
    let b = pd.source.linf_integral_bound(h);
    if b > T::lit(0.5) {
        out.push(format!(
            "per-step source integral bound {b} exceeds 1/2; energy estimate absorption may fail"
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Kernel, Nonlinearity, Source};

    fn base() -> ProblemData<f64> {
        let grid = Grid::new_1d(9, 1.0).unwrap();
        let n = grid.len();
        ProblemData {
            ell: 1.0,
            eta: 1.0,
            epsilon: 1.0,
            grid,
            kernel: Kernel::gaussian(0.1, 0.3),
            nonlin: Nonlinearity::cubic(1.0, 0.0),
            source: Source::Zero,
            theta0: GridFunction::constant(n, 1.0),
            phi0: GridFunction::zeros(n),
            v0: GridFunction::zeros(n),
            final_time: 1.0,
            theta_min_input: 1e-6,
        }
    }

    #[test]
    fn admissible_instance_has_no_violations() {
        assert!(validate(&base()).is_empty());
    }

    #[test]
    fn zero_temperature_is_reported() {
        let mut pd = base();
        pd.theta0[3] = 0.0;
        let v = validate(&pd);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].subject, "theta0");
        assert!(v[0].message.contains("theta0 not strictly positive"));
    }

    #[test]
    fn odd_kernel_is_reported() {
        let mut pd = base();
        pd.kernel = Kernel::custom(1.0, |d: &[f64]| d[0]);
        let v = validate(&pd);
        assert!(v.iter().any(|x| x.message.contains("kernel evenness violated")));
    }

    #[test]
    fn floor_and_coefficients() {
        let mut pd = base();
        pd.theta0 = GridFunction::constant(9, 1e-8);
        pd.epsilon = 1.5;
        pd.eta = 0.0;
        let v = validate(&pd);
        let subjects: Vec<_> = v.iter().map(|x| x.subject).collect();
        assert_eq!(subjects, vec!["eta", "epsilon", "theta0"]);
    }

    #[test]
    fn non_monotone_beta_and_small_grid() {
        use crate::model::nonlinearity::Beta;
        use std::sync::Arc;
        let mut pd = base();
        pd.grid = Grid::new_1d(2, 1.0).unwrap();
        pd.theta0 = GridFunction::constant(2, 1.0);
        pd.phi0 = GridFunction::zeros(2);
        pd.v0 = GridFunction::zeros(2);
        pd.nonlin.beta = Beta::Custom {
            beta: Arc::new(|r: f64| -r),
            beta_hat: Arc::new(|r: f64| -r * r / 2.0),
            derivative: Arc::new(|_| -1.0),
        };
        let v = validate(&pd);
        assert!(v.iter().any(|x| x.condition == Condition::Grid));
        assert!(v.iter().any(|x| x.message.contains("nondecreasing")));
        assert!(v.iter().any(|x| x.message.contains("negative")));
    }

    #[test]
    fn large_source_warns() {
        let mut pd = base();
        pd.source = Source::Separable {
            spatial: GridFunction::constant(9, 10.0),
            time: crate::model::TimeProfile::Constant,
        };
        assert!(warnings(&pd, 0.01).is_empty());
        assert_eq!(warnings(&pd, 0.1).len(), 1);
    }
}
