//! One time level of the implicit scheme and full trajectories.
//!
//! Each level solves the coupled pair
//!
//! ```text
//! eps theta + ln theta - eta h Delta_h theta = h f + ell phi_n - ell phi + u_n
//! (1 + h) phi + h^2 (beta(phi) + pi(phi)) = ell h^2 theta + phi_n + h v_n + h phi_n
//!                                           - h^2 (a phi_n - J * phi_n)
//! ```
//!
//! by iterating `phi <- B(A(phi))`, where `A` is the elliptic solve of the
//! first line and `B` the nodewise solve of the second. The composition is a
//! contraction with factor `ell^2 h^2 / (eps (1 + h - Lip(pi) h^2))`.

use serde::Serialize;

use crate::elliptic::{self, EllipticConfig, NeumannLaplacian};
use crate::error::{Error, Result};
use crate::model::{norm_h, norm_vstar, GridFunction, ProblemData};
use crate::nonlocal::ConvolutionPlan;
use crate::num::Real;
use crate::scalar::{solve_field, ScalarSolveConfig};

/// Contraction factor of the per-step fixed-point map.
pub fn kappa<T: Real>(eps: T, h: T, ell: T, pi_lip: T) -> T {
    ell * ell * h * h / (eps * (T::one() + h - pi_lip * h * h))
}

/// Largest `h <= min(1, 1/pi_lip)` with `kappa(eps, h, ell, pi_lip) <= safety`.
pub fn max_step<T: Real>(eps: T, ell: T, pi_lip: T, safety: T) -> T {
    let mut cap = T::one();
    if pi_lip > T::zero() {
        cap = cap.min(T::one() / pi_lip);
    }
    if kappa(eps, cap, ell, pi_lip) <= safety {
        return cap;
    }
    // kappa is increasing in h on (0, cap]
    let (mut lo, mut hi) = (T::zero(), cap);
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kappa(eps, mid, ell, pi_lip) <= safety {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone)]
pub struct StepConfig<T> {
    /// Stop when the update is below `fp_tol (1 + ||phi_n||_H)`.
    pub fp_tol: T,
    pub max_fp_iter: usize,
    /// Update ratios are recorded only when the denominator exceeds
    /// `ratio_floor (1 + ||phi_n||_H)`.
    pub ratio_floor: T,
    pub elliptic: EllipticConfig<T>,
    pub scalar: ScalarSolveConfig<T>,
}

impl<T: Real> Default for StepConfig<T> {
    fn default() -> Self {
        Self {
            fp_tol: T::tol(1e-9, 1e3),
            max_fp_iter: 200,
            ratio_floor: T::tol(1e-7, 1e4),
            elliptic: EllipticConfig::default(),
            scalar: ScalarSolveConfig::default(),
        }
    }
}

/// One time level `(theta_n, phi_n, v_n, u_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState<T> {
    pub n: usize,
    pub theta: GridFunction<T>,
    pub phi: GridFunction<T>,
    pub v: GridFunction<T>,
    /// `eps theta + ln theta`.
    pub u: GridFunction<T>,
    pub min_theta: T,
}

impl<T: Real> StepState<T> {
    pub fn initial(pd: &ProblemData<T>) -> Self {
        Self {
            n: 0,
            theta: pd.theta0.clone(),
            phi: pd.phi0.clone(),
            v: pd.v0.clone(),
            u: pd.u0(),
            min_theta: pd.theta0.min(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    /// Index of the level produced by this step.
    pub n: usize,
    pub fixed_point_iters: usize,
    pub last_update_h: f64,
    /// Successive update ratios `||d_{k+1}||_H / ||d_k||_H`.
    pub contraction_ratios: Vec<f64>,
    /// Largest recorded ratio, zero when none was recorded.
    pub contraction_ratio_measured: f64,
    pub kappa_theory: f64,
    pub elliptic_newton_iters: usize,
    pub min_theta: f64,
    /// Defect of the temperature equation in the dual norm.
    pub residual_theta_vstar: f64,
    /// Defect of the order-parameter equation in `H`.
    pub residual_phi_h: f64,
    pub norm_theta_h: f64,
    pub norm_phi_h: f64,
    pub norm_v_h: f64,
    pub phi_linf: f64,
    pub v_linf: f64,
}

/// All levels `0..=N` of one run.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub states: Vec<StepState<T>>,
    /// `z[k] = (v_{k+1} - v_k) / h`.
    pub z: Vec<GridFunction<T>>,
    /// `f_slabs[k]` is the source averaged over `(k h, (k+1) h)`.
    pub f_slabs: Vec<GridFunction<T>>,
    pub h: T,
    pub reports: Vec<StepReport>,
    pub pd: ProblemData<T>,
}

impl<T: Real> Trajectory<T> {
    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn final_time(&self) -> T {
        self.h * T::lit(self.steps() as f64)
    }
}

/// Per-problem data reused across steps.
#[derive(Debug)]
pub struct Stepper<'a, T> {
    pd: &'a ProblemData<T>,
    plan: ConvolutionPlan<T>,
    h: T,
    cfg: StepConfig<T>,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(pd: &'a ProblemData<T>, h: T, cfg: StepConfig<T>) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidInput(format!("step size must be positive, got {h}")));
        }
        let lip = pd.nonlin.pi_lip();
        let k = kappa(pd.epsilon, h, pd.ell, lip);
        let denom = T::one() + h - lip * h * h;
        if !(denom > T::zero()) || !(k < T::one()) {
            return Err(Error::StepTooLarge {
                h: h.as_f64(),
                kappa: k.as_f64(),
                limit: max_step(pd.epsilon, pd.ell, lip, T::lit(0.5)).as_f64(),
            });
        }
        Ok(Self {
            pd,
            plan: ConvolutionPlan::new(&pd.grid, &pd.kernel),
            h,
            cfg,
        })
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn plan(&self) -> &ConvolutionPlan<T> {
        &self.plan
    }

    pub fn kappa_theory(&self) -> T {
        kappa(self.pd.epsilon, self.h, self.pd.ell, self.pd.nonlin.pi_lip())
    }

    fn theta_rhs(&self, prev: &StepState<T>, phi: &GridFunction<T>, f_slab: &GridFunction<T>) -> GridFunction<T> {
        let (h, ell) = (self.h, self.pd.ell);
        GridFunction::from_vec(
            (0..phi.len())
                .map(|i| h * f_slab[i] + ell * (prev.phi[i] - phi[i]) + prev.u[i])
                .collect(),
        )
    }

    fn phi_rhs_explicit(&self, prev: &StepState<T>) -> GridFunction<T> {
        let h = self.h;
        let nl = self.plan.nonlocal_term(&prev.phi);
        GridFunction::from_vec(
            (0..prev.phi.len())
                .map(|i| prev.phi[i] + h * prev.v[i] + h * prev.phi[i] - h * h * nl[i])
                .collect(),
        )
    }

    /// The temperature map: solves the first equation for a given `phi`.
    pub fn map_a(
        &self,
        prev: &StepState<T>,
        phi: &GridFunction<T>,
        f_slab: &GridFunction<T>,
        guess: Option<&GridFunction<T>>,
    ) -> Result<elliptic::EllipticSolveReport<T>> {
        let g = self.theta_rhs(prev, phi, f_slab);
        elliptic::solve(
            &self.pd.grid,
            &g,
            self.pd.epsilon,
            self.pd.eta,
            self.h,
            guess.or(Some(&prev.theta)),
            &self.cfg.elliptic,
        )
    }

    /// The order-parameter map: solves the second equation for a given `theta`.
    pub fn map_b(&self, prev: &StepState<T>, theta: &GridFunction<T>) -> Result<GridFunction<T>> {
        let explicit = self.phi_rhs_explicit(prev);
        self.map_b_with(&explicit, theta)
    }

    fn map_b_with(&self, explicit: &GridFunction<T>, theta: &GridFunction<T>) -> Result<GridFunction<T>> {
        let c = self.pd.ell * self.h * self.h;
        let g = explicit.axpy(c, theta);
        solve_field(&g, self.h, &self.pd.nonlin, &self.cfg.scalar)
    }

    /// Advances `prev` by one level.
    pub fn step(&self, prev: &StepState<T>, f_slab: &GridFunction<T>) -> Result<(StepState<T>, StepReport)> {
        let grid = &self.pd.grid;
        let explicit = self.phi_rhs_explicit(prev);
        let scale = T::one() + norm_h(grid, &prev.phi);
        let tol = self.cfg.fp_tol * scale;
        let floor = self.cfg.ratio_floor * scale;

        let mut phi = prev.phi.clone();
        let mut theta = prev.theta.clone();
        let mut newton = 0;
        let mut ratios = Vec::new();
        let mut last_update = T::infinity();
        let mut iters = 0;
        loop {
            if iters == self.cfg.max_fp_iter {
                return Err(Error::NoConvergence {
                    stage: "fixed-point iteration",
                    iterations: iters,
                    residual: last_update.as_f64(),
                });
            }
            iters += 1;
            let a = self.map_a(prev, &phi, f_slab, Some(&theta))?;
            newton += a.newton_iters_total;
            theta = a.theta;
            let next = self.map_b_with(&explicit, &theta)?;
            let update = norm_h(grid, &next.sub(&phi));
            if last_update.is_finite() && last_update > floor {
                ratios.push((update / last_update).as_f64());
            }
            last_update = update;
            phi = next;
            if update <= tol {
                break;
            }
        }
        // temperature consistent with the accepted order parameter
        let a = self.map_a(prev, &phi, f_slab, Some(&theta))?;
        newton += a.newton_iters_total;
        let theta = a.theta;

        let h = self.h;
        let eps = self.pd.epsilon;
        let v = phi.sub(&prev.phi).scale(T::one() / h);
        let u = theta.map(|t| eps * t + t.ln());
        let min_theta = theta.min();
        if !(min_theta > T::zero()) {
            return Err(Error::NoConvergence {
                stage: "positivity",
                iterations: iters,
                residual: min_theta.as_f64(),
            });
        }
        let next = StepState {
            n: prev.n + 1,
            theta,
            phi,
            v,
            u,
            min_theta,
        };
        let (r1, r2) = self.residuals(prev, &next, f_slab);
        let measured = ratios.iter().copied().fold(0.0, f64::max);
        let report = StepReport {
            n: next.n,
            fixed_point_iters: iters,
            last_update_h: last_update.as_f64(),
            contraction_ratios: ratios,
            contraction_ratio_measured: measured,
            kappa_theory: self.kappa_theory().as_f64(),
            elliptic_newton_iters: newton,
            min_theta: min_theta.as_f64(),
            residual_theta_vstar: r1.as_f64(),
            residual_phi_h: r2.as_f64(),
            norm_theta_h: norm_h(grid, &next.theta).as_f64(),
            norm_phi_h: norm_h(grid, &next.phi).as_f64(),
            norm_v_h: norm_h(grid, &next.v).as_f64(),
            phi_linf: next.phi.max_abs().as_f64(),
            v_linf: next.v.max_abs().as_f64(),
        };
        Ok((next, report))
    }

    /// Defects of both equations for the pair `(prev, next)`: the first in
    /// the dual norm, the second in `H`.
    pub fn residuals(&self, prev: &StepState<T>, next: &StepState<T>, f_slab: &GridFunction<T>) -> (T, T) {
        let grid = &self.pd.grid;
        let (h, eta, ell) = (self.h, self.pd.eta, self.pd.ell);
        let lap = NeumannLaplacian::new(grid).apply_neg(&next.theta);
        let g = self.theta_rhs(prev, &next.phi, f_slab);
        let d1 = GridFunction::from_vec(
            (0..g.len())
                .map(|i| next.u[i] + eta * h * lap[i] - g[i])
                .collect(),
        );
        let explicit = self.phi_rhs_explicit(prev);
        let nl = &self.pd.nonlin;
        let d2 = GridFunction::from_vec(
            (0..g.len())
                .map(|i| {
                    let p = next.phi[i];
                    (T::one() + h) * p + h * h * (nl.beta(p) + nl.pi(p))
                        - ell * h * h * next.theta[i]
                        - explicit[i]
                })
                .collect(),
        );
        (norm_vstar(grid, &d1), norm_h(grid, &d2))
    }
}

/// Runs `steps` levels with `h = T / steps`.
pub fn run<T: Real>(pd: &ProblemData<T>, steps: usize, cfg: &StepConfig<T>) -> Result<Trajectory<T>> {
    if steps == 0 {
        return Err(Error::InvalidInput("number of steps must be at least 1".into()));
    }
    let h = pd.final_time / T::lit(steps as f64);
    let stepper = Stepper::new(pd, h, cfg.clone())?;
    let n_nodes = pd.grid.len();
    let mut states = Vec::with_capacity(steps + 1);
    let mut z = Vec::with_capacity(steps);
    let mut f_slabs = Vec::with_capacity(steps);
    let mut reports = Vec::with_capacity(steps);
    states.push(StepState::initial(pd));
    for k in 0..steps {
        let f = pd.source.slab(k + 1, h, n_nodes);
        let prev = &states[k];
        let (next, report) = stepper
            .step(prev, &f)
            .map_err(|e| Error::Step { n: k, source: Box::new(e) })?;
        z.push(next.v.sub(&prev.v).scale(T::one() / h));
        states.push(next);
        f_slabs.push(f);
        reports.push(report);
    }
    Ok(Trajectory {
        states,
        z,
        f_slabs,
        h,
        reports,
        pd: pd.clone(),
    })
}
