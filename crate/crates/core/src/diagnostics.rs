//! Discrete a-priori estimates evaluated on a computed trajectory.
//!
//! # Energy bound
//!
//! With `E_m = (eps/2)||theta_m||^2 + int theta_m + (1/2)||phi_m||^2 +
//! (1/2)||v_m||^2 + int beta_hat(phi_m)`, testing the temperature equation
//! with `theta_{n+1}` and the order-parameter equation with `phi_{n+1} - phi_n`
//! gives
//!
//! ```text
//! E_{n+1} - E_n + eta h ||grad theta_{n+1}||^2 + h ||v_{n+1}||^2
//!     <= h (f_{n+1}, theta_{n+1}) - h (a phi_n - J*phi_n, v_{n+1})
//!        - h (pi(phi_{n+1}), v_{n+1}) + h (v_{n+1}, phi_{n+1}).
//! ```
//!
//! The `ell` terms cancel, the logarithm contributes `int theta_{n+1} - int theta_n`
//! through `e^x (x - y) >= e^x - e^y`, and `beta` through convexity of `beta_hat`.
//! With `K` the row-sum bound of the kernel (so `||a phi - J*phi|| <= 2K||phi||`),
//! `L` the Lipschitz constant of `pi` and Young's inequality at weight 1/2:
//!
//! ```text
//! rhs <= h F_{n+1} int theta_{n+1} + h K ||phi_n||^2 + h c_v ||v_{n+1}||^2
//!        + h c_phi ||phi_{n+1}||^2 + h c_0,
//! c_v = K + L/2,  c_phi = (1 + L)/2,  c_0 = pi(0)^2 |Omega| / 2,
//! ```
//!
//! where `F_k = ||f_k||_inf` and the damping term `h||v_{n+1}||^2` has been
//! absorbed. Each right-side term is bounded by a multiple of `E`, giving
//! `a = 2K` and `b_k = max(F_k, 2 max(c_v, c_phi))`. Summing and inducting on
//! `m` yields `L(m) <= R(m)` with `R(0) = E_0` and
//!
//! ```text
//! R(m) = [E_0 + m h c_0 + sum_{k<m} h (a + b_k) R(k)] / (1 - h b_m),   b_0 = 0,
//! ```
//!
//! valid while `h b_m < 1`; otherwise `R(m)` is reported as infinite.

use serde::Serialize;

use crate::elliptic::NeumannLaplacian;
use crate::error::Result;
use crate::interpolants::{verify_identities, IdentityReport};
use crate::model::{grad_sq, inner_h, integral, norm_h, GridFunction};
use crate::nonlocal::ConvolutionPlan;
use crate::num::Real;
use crate::stepper::Trajectory;

/// `theta_new (ln theta_new - ln theta_old) - (theta_new - theta_old)`.
pub fn entropy_defect<T: Real>(theta_old: T, theta_new: T) -> T {
    theta_new * (theta_new.ln() - theta_old.ln()) - (theta_new - theta_old)
}

/// Per step, the smallest nodewise entropy defect.
pub fn entropy_defects<T: Real>(traj: &Trajectory<T>) -> Vec<T> {
    traj.states
        .windows(2)
        .map(|w| {
            w[0].theta
                .iter()
                .zip(w[1].theta.iter())
                .map(|(&a, &b)| entropy_defect(a, b))
                .fold(T::infinity(), T::min)
        })
        .collect()
}

/// Smallest entropy defect over all steps and nodes (zero for `N = 0`).
pub fn entropy_inequality_check<T: Real>(traj: &Trajectory<T>) -> T {
    let d = entropy_defects(traj);
    if d.is_empty() {
        T::zero()
    } else {
        d.into_iter().fold(T::infinity(), T::min)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyConstants {
    pub kernel_bound: f64,
    pub pi_lip: f64,
    pub c_v: f64,
    pub c_phi: f64,
    pub c_0: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub m: usize,
    pub thermal: f64,
    pub mass: f64,
    /// `eta h sum_{n=1}^m ||grad theta_n||^2`.
    pub dissipation: f64,
    pub phi_sq: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Exact per-step balance: tested right side minus tested left side of
    /// step `m` (zero at `m = 0`); nonnegative up to solver tolerance.
    pub balance_slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub constants: EnergyConstants,
    pub rows: Vec<EnergyRow>,
    /// `L(m) <= R(m)` for every `m`.
    pub holds: bool,
    pub min_balance_slack: f64,
}

fn energy_parts<T: Real>(traj: &Trajectory<T>, m: usize) -> [T; 5] {
    let pd = &traj.pd;
    let g = &pd.grid;
    let s = &traj.states[m];
    let half = T::lit(0.5);
    [
        half * pd.epsilon * inner_h(g, &s.theta, &s.theta),
        integral(g, &s.theta),
        half * inner_h(g, &s.phi, &s.phi),
        half * inner_h(g, &s.v, &s.v),
        integral(g, &s.phi.map(|p| pd.nonlin.beta_hat(p))),
    ]
}

pub fn energy_constants<T: Real>(traj: &Trajectory<T>) -> EnergyConstants {
    let pd = &traj.pd;
    let plan = ConvolutionPlan::new(&pd.grid, &pd.kernel);
    let k = plan.kernel_bound().as_f64();
    let l = pd.nonlin.pi_lip().as_f64();
    let p0 = pd.nonlin.pi(T::zero()).as_f64();
    EnergyConstants {
        kernel_bound: k,
        pi_lip: l,
        c_v: k + l / 2.0,
        c_phi: (1.0 + l) / 2.0,
        c_0: 0.5 * p0 * p0 * pd.grid.measure().as_f64(),
        a: 2.0 * k,
    }
}

pub fn energy_report<T: Real>(traj: &Trajectory<T>) -> EnergyReport {
    let pd = &traj.pd;
    let g = &pd.grid;
    let h = traj.h;
    let hf = h.as_f64();
    let c = energy_constants(traj);
    let plan = ConvolutionPlan::new(g, &pd.kernel);
    let steps = traj.steps();

    let b: Vec<f64> = (0..=steps)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                traj.f_slabs[k - 1]
                    .max_abs()
                    .as_f64()
                    .max(2.0 * c.c_v.max(c.c_phi))
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(steps + 1);
    let mut r_hist: Vec<f64> = Vec::with_capacity(steps + 1);
    let mut dissipation = T::zero();
    let mut prev_e = T::zero();
    let mut min_slack = f64::INFINITY;
    let mut holds = true;
    let e0 = energy_parts(traj, 0).iter().fold(T::zero(), |a, &x| a + x).as_f64();
    for m in 0..=steps {
        let parts = energy_parts(traj, m);
        let e = parts.iter().fold(T::zero(), |a, &x| a + x);
        let mut slack = 0.0;
        if m > 0 {
            let s = &traj.states[m];
            let p = &traj.states[m - 1];
            let step_diss = pd.eta * h * grad_sq(g, &s.theta);
            dissipation = dissipation + step_diss;
            let pi_next = s.phi.map(|x| pd.nonlin.pi(x));
            let tested = h * inner_h(g, &traj.f_slabs[m - 1], &s.theta)
                - h * inner_h(g, &plan.nonlocal_term(&p.phi), &s.v)
                - h * inner_h(g, &pi_next, &s.v)
                + h * inner_h(g, &s.v, &s.phi);
            let lhs_step = e - prev_e + step_diss + h * inner_h(g, &s.v, &s.v);
            slack = (tested - lhs_step).as_f64();
            min_slack = min_slack.min(slack);
        }
        prev_e = e;
        let lhs = (e + dissipation).as_f64();
        let rhs = if m == 0 {
            e0
        } else {
            let acc: f64 = (0..m).map(|k| hf * (c.a + b[k]) * r_hist[k]).sum();
            let denom = 1.0 - hf * b[m];
            if denom > 0.0 {
                (e0 + m as f64 * hf * c.c_0 + acc) / denom
            } else {
                f64::INFINITY
            }
        };
        r_hist.push(rhs);
        if !(lhs <= rhs * (1.0 + 1e-12) + 1e-14) {
            holds = false;
        }
        rows.push(EnergyRow {
            m,
            thermal: parts[0].as_f64(),
            mass: parts[1].as_f64(),
            dissipation: dissipation.as_f64(),
            phi_sq: parts[2].as_f64(),
            kinetic: parts[3].as_f64(),
            potential: parts[4].as_f64(),
            lhs,
            rhs,
            balance_slack: slack,
        });
    }
    if steps == 0 {
        min_slack = 0.0;
    }
    EnergyReport {
        constants: c,
        rows,
        holds,
        min_balance_slack: min_slack,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CumulativeRow {
    pub m: usize,
    /// `h ||sum_{n<m} theta_{n+1}||_H`.
    pub sum_h: f64,
    /// `h ||Delta_h sum_{n<m} theta_{n+1}||_H`.
    pub laplacian_h: f64,
    /// `||u_m + ell phi_m - eta h Delta_h sum theta - u_0 - ell phi_0 - h sum f||_H`.
    pub identity_defect: f64,
}

/// Running sums of the temperature and the telescoped temperature equation.
pub fn cumulative_w_bound<T: Real>(traj: &Trajectory<T>) -> Vec<CumulativeRow> {
    let pd = &traj.pd;
    let g = &pd.grid;
    let h = traj.h;
    let lap = NeumannLaplacian::new(g);
    let n = g.len();
    let s0 = &traj.states[0];
    let mut sum_theta = GridFunction::zeros(n);
    let mut sum_f = GridFunction::zeros(n);
    let mut out = Vec::with_capacity(traj.states.len());
    for (m, s) in traj.states.iter().enumerate() {
        if m > 0 {
            sum_theta = sum_theta.add(&s.theta);
            sum_f = sum_f.add(&traj.f_slabs[m - 1]);
        }
        let lap_sum = lap.apply(&sum_theta);
        let defect = GridFunction::from_vec(
            (0..n)
                .map(|i| {
                    s.u[i] + pd.ell * s.phi[i] - pd.eta * h * lap_sum[i]
                        - s0.u[i]
                        - pd.ell * s0.phi[i]
                        - h * sum_f[i]
                })
                .collect(),
        );
        out.push(CumulativeRow {
            m,
            sum_h: (h * norm_h(g, &sum_theta)).as_f64(),
            laplacian_h: (h * norm_h(g, &lap_sum)).as_f64(),
            identity_defect: norm_h(g, &defect).as_f64(),
        });
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LinfSeries {
    pub phi: Vec<f64>,
    pub v: Vec<f64>,
    pub max_phi: f64,
    pub max_v: f64,
}

pub fn linf_growth<T: Real>(traj: &Trajectory<T>) -> LinfSeries {
    let phi: Vec<f64> = traj.states.iter().map(|s| s.phi.max_abs().as_f64()).collect();
    let v: Vec<f64> = traj.states.iter().map(|s| s.v.max_abs().as_f64()).collect();
    let max_phi = phi.iter().copied().fold(0.0, f64::max);
    let max_v = v.iter().copied().fold(0.0, f64::max);
    LinfSeries {
        phi,
        v,
        max_phi,
        max_v,
    }
}

/// `||u_m||_H` per level and the largest mismatch with a recomputation from `theta_m`.
pub fn u_series<T: Real>(traj: &Trajectory<T>) -> (Vec<f64>, f64) {
    let g = &traj.pd.grid;
    let eps = traj.pd.epsilon;
    let mut worst = 0.0f64;
    let series = traj
        .states
        .iter()
        .map(|s| {
            let stored = norm_h(g, &s.u);
            let fresh = norm_h(g, &s.theta.map(|t| eps * t + t.ln()));
            worst = worst.max((stored - fresh).abs().as_f64());
            stored.as_f64()
        })
        .collect();
    (series, worst)
}

/// `||z||_{L^2(0,T;H)}` of the piecewise-constant acceleration.
pub fn z_l2<T: Real>(traj: &Trajectory<T>) -> T {
    let g = &traj.pd.grid;
    traj.z
        .iter()
        .map(|z| traj.h * inner_h(g, z, z))
        .fold(T::zero(), |a, x| a + x)
        .sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub h: f64,
    pub steps: usize,
    pub energy: EnergyReport,
    pub entropy_defects: Vec<f64>,
    pub entropy_min: f64,
    pub cumulative: Vec<CumulativeRow>,
    pub max_identity_defect: f64,
    pub linf: LinfSeries,
    pub u_norms: Vec<f64>,
    pub u_consistency: f64,
    pub z_l2: f64,
    pub identities: IdentityReport,
    pub min_theta: f64,
    pub all_finite: bool,
}

impl DiagnosticsReport {
    /// Every checked inequality and identity within its tolerance.
    pub fn passes(&self) -> bool {
        self.all_finite
            && self.min_theta > 0.0
            && self.entropy_min >= -1e-12
            && self.energy.holds
            && self.max_identity_defect <= 1e-9
            && self.identities.max_rel() <= 1e-10
            && self.u_consistency <= 1e-12
    }
}

pub fn diagnose<T: Real>(traj: &Trajectory<T>) -> Result<DiagnosticsReport> {
    let energy = energy_report(traj);
    let entropy: Vec<f64> = entropy_defects(traj).into_iter().map(Real::as_f64).collect();
    let entropy_min = entropy.iter().copied().fold(f64::INFINITY, f64::min);
    let entropy_min = if entropy.is_empty() { 0.0 } else { entropy_min };
    let cumulative = cumulative_w_bound(traj);
    let max_identity_defect = cumulative.iter().map(|r| r.identity_defect).fold(0.0, f64::max);
    let linf = linf_growth(traj);
    let (u_norms, u_consistency) = u_series(traj);
    let identities = verify_identities(traj)?;
    let min_theta = traj
        .states
        .iter()
        .map(|s| s.theta.min().as_f64())
        .fold(f64::INFINITY, f64::min);
    let all_finite = energy.rows.iter().all(|r| r.lhs.is_finite())
        && cumulative.iter().all(|r| r.sum_h.is_finite() && r.laplacian_h.is_finite())
        && u_norms.iter().all(|x| x.is_finite())
        && linf.max_phi.is_finite()
        && linf.max_v.is_finite();
    Ok(DiagnosticsReport {
        h: traj.h.as_f64(),
        steps: traj.steps(),
        energy,
        entropy_defects: entropy,
        entropy_min,
        cumulative,
        max_identity_defect,
        linf,
        u_norms,
        u_consistency,
        z_l2: z_l2(traj).as_f64(),
        identities,
        min_theta,
        all_finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Grid, Kernel, Nonlinearity, Profile, ProblemData, Source, TimeProfile};
    use crate::stepper::{run, StepConfig};
    use proptest::prelude::*;

    fn problem(nodes: usize) -> ProblemData<f64> {
        let grid = Grid::new_1d(nodes, 1.0).unwrap();
        let theta0 = Profile::Cosine { mean: 1.0, amplitude: 0.5, mode: 1 }.sample(&grid);
        let phi0 = Profile::Cosine { mean: 0.0, amplitude: 0.5, mode: 1 }.sample(&grid);
        let n = grid.len();
        ProblemData {
            ell: 1.0,
            eta: 1.0,
            epsilon: 1.0,
            grid,
            kernel: Kernel::gaussian(0.1, 0.3),
            nonlin: Nonlinearity::cubic(1.0, 0.0),
            source: Source::Zero,
            theta0,
            phi0,
            v0: GridFunction::zeros(n),
            final_time: 1.0,
            theta_min_input: 1e-6,
        }
    }

    #[test]
    fn entropy_defect_values() {
        assert_eq!(entropy_defect(1.7, 1.7), 0.0);
        let d = entropy_defect(1.0f64, 2.0);
        assert!((d - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((d - 0.386294).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn entropy_defect_nonnegative(a in 1e-6f64..1e3, b in 1e-6f64..1e3) {
            prop_assert!(entropy_defect(a, b) >= -1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn default_run_estimates() {
        let pd = problem(16);
        let traj = run(&pd, 20, &StepConfig::default()).unwrap();
        let rep = diagnose(&traj).unwrap();
        assert!(rep.passes(), "{:#?}", rep.energy.rows.last());
        assert!(rep.energy.min_balance_slack > -1e-9);
        assert_eq!(rep.linf.v[0], 0.0);
        assert_eq!(rep.linf.phi[0], pd.phi0.max_abs());
    }

    #[test]
    fn forced_run_estimates() {
        let mut pd = problem(16);
        let bump = Profile::Gaussian { base: 0.0, amplitude: 1.0, center: [0.5, 0.0], width: 0.1 };
        pd.source = Source::Separable {
            spatial: bump.sample(&pd.grid),
            time: TimeProfile::Cosine { omega: 3.0 },
        };
        let traj = run(&pd, 20, &StepConfig::default()).unwrap();
        let rep = diagnose(&traj).unwrap();
        assert!(rep.passes());
    }

    #[test]
    fn decoupled_equilibrium_energy() {
        let mut pd = problem(8);
        pd.ell = 0.0;
        pd.kernel = Kernel::zero();
        pd.nonlin = Nonlinearity::cubic(0.0, 0.0);
        pd.theta0 = GridFunction::constant(8, 1.5);
        pd.phi0 = GridFunction::constant(8, 0.0);
        let traj = run(&pd, 10, &StepConfig::default()).unwrap();
        let rep = energy_report(&traj);
        assert!(rep.holds);
        let first = rep.rows[0].lhs;
        for r in &rep.rows {
            assert!((r.lhs - first).abs() < 1e-12);
            assert!(r.m == 0 || r.rhs > r.lhs);
        }
        let cum = cumulative_w_bound(&traj);
        for r in &cum {
            let want = r.m as f64 * traj.h * 1.5;
            assert!((r.sum_h - want).abs() < 1e-12);
            assert!(r.laplacian_h < 1e-12);
        }
    }

    #[test]
    fn first_level_energy_by_direct_summation() {
        let pd = problem(11);
        let traj = run(&pd, 5, &StepConfig::default()).unwrap();
        let rep = energy_report(&traj);
        let g = &pd.grid;
        let s = &traj.states[1];
        let w = g.weights();
        let dx = g.spacing()[0];
        let mut e = 0.0;
        for i in 0..11 {
            let p = s.phi[i];
            e += w[i]
                * (0.5 * s.theta[i] * s.theta[i]
                    + s.theta[i]
                    + 0.5 * p * p
                    + 0.5 * s.v[i] * s.v[i]
                    + 0.25 * p.powi(4));
        }
        let mut grad = 0.0;
        for i in 0..10 {
            grad += (s.theta[i + 1] - s.theta[i]).powi(2) / dx;
        }
        let want = e + traj.h * grad;
        assert!((rep.rows[1].lhs - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn telescoped_identity_by_resummation() {
        let pd = problem(12);
        let traj = run(&pd, 10, &StepConfig::default()).unwrap();
        let rows = cumulative_w_bound(&traj);
        let g = &pd.grid;
        let lap = NeumannLaplacian::new(g);
        // sum the per-step equation residuals independently
        let mut acc = GridFunction::zeros(12);
        for m in 0..10 {
            let (p, s) = (&traj.states[m], &traj.states[m + 1]);
            let r = s.u.sub(&p.u)
                .add(&s.phi.sub(&p.phi).scale(pd.ell))
                .sub(&lap.apply(&s.theta).scale(pd.eta * traj.h));
            acc = acc.add(&r);
            let direct = norm_h(g, &acc);
            assert!((direct - rows[m + 1].identity_defect).abs() < 1e-10);
            assert!(rows[m + 1].identity_defect < 1e-9);
        }
    }
}
