//! Convergence studies: differences between trajectories on nested time grids,
//! for step refinement at fixed `epsilon` and for `epsilon -> 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{inner_h, inner_vstar, norm_h, norm_v, norm_vstar, GridFunction, ProblemData};
use crate::num::Real;
use crate::stepper::{max_step, run, StepConfig, Trajectory};

/// The four difference norms between two trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyMetrics {
    /// `||phi_hat_a - phi_hat_b||_{C([0,T];H)}`.
    pub phi_c_h: f64,
    /// `||v_hat_a - v_hat_b||_{C([0,T];H)}`.
    pub v_c_h: f64,
    /// `||v_bar_a - v_bar_b||_{L^2(0,T;H)}`.
    pub vbar_l2_h: f64,
    /// `||v_hat_a - v_hat_b||_{L^2(0,T;V*)}`.
    pub vhat_l2_vstar: f64,
}

impl CauchyMetrics {
    /// Left side of the Cauchy inequality: the first three metrics summed.
    pub fn combined(&self) -> f64 {
        self.phi_c_h + self.v_c_h + self.vbar_l2_h
    }

    fn all_zero(&self) -> bool {
        self.phi_c_h == 0.0 && self.v_c_h == 0.0 && self.vbar_l2_h == 0.0 && self.vhat_l2_vstar == 0.0
    }
}

/// Difference norms between two runs on the same grid over the same horizon.
/// The step counts must be nested (one divides the other); the result does
/// not depend on argument order.
pub fn cauchy_metrics<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> Result<CauchyMetrics> {
    if a.pd.grid != b.pd.grid {
        return Err(Error::InvalidInput("trajectories live on different grids".into()));
    }
    let (fine, coarse) = if a.steps() >= b.steps() { (a, b) } else { (b, a) };
    let (nf, nc) = (fine.steps(), coarse.steps());
    if nf % nc != 0 {
        return Err(Error::InvalidInput(format!(
            "step counts {nf} and {nc} are not nested"
        )));
    }
    let tf = fine.final_time().as_f64();
    let tc = coarse.final_time().as_f64();
    if (tf - tc).abs() > 1e-12 * tf.max(1.0) {
        return Err(Error::InvalidInput("trajectories cover different horizons".into()));
    }
    let grid = &fine.pd.grid;
    let h = fine.h;
    let ratio = nf / nc;
    let third = T::lit(3.0);

    let mut phi_c = T::zero();
    let mut v_c = T::zero();
    let mut vbar = T::zero();
    let mut vhat = T::zero();
    let mut prev_dv: Option<GridFunction<T>> = None;
    for k in 0..=nf {
        // coarse hat values at fine breakpoint k, exactly
        let (kc, r) = (k / ratio, k % ratio);
        let s = T::lit(r as f64) / T::lit(ratio as f64);
        let lerp = |x: &GridFunction<T>, y: Option<&GridFunction<T>>| match y {
            Some(y) if r != 0 => x.zip_map(y, |p, q| p + (q - p) * s),
            _ => x.clone(),
        };
        let cs = &coarse.states;
        let next = cs.get(kc + 1);
        let cphi = lerp(&cs[kc].phi, next.map(|n| &n.phi));
        let cv = lerp(&cs[kc].v, next.map(|n| &n.v));
        let dphi = fine.states[k].phi.sub(&cphi);
        let dv = fine.states[k].v.sub(&cv);
        phi_c = phi_c.max(norm_h(grid, &dphi));
        v_c = v_c.max(norm_h(grid, &dv));
        if let Some(p) = prev_dv.take() {
            let b = dv.sub(&p);
            vhat = vhat
                + h * (inner_vstar(grid, &p, &p)
                    + inner_vstar(grid, &p, &b)
                    + inner_vstar(grid, &b, &b) / third);
        }
        if k > 0 {
            // on ((k-1)h, kh] both bar values are level values
            let coarse_level = k.div_ceil(ratio);
            let d = fine.states[k].v.sub(&coarse.states[coarse_level].v);
            vbar = vbar + h * inner_h(grid, &d, &d);
        }
        prev_dv = Some(dv);
    }
    Ok(CauchyMetrics {
        phi_c_h: phi_c.as_f64(),
        v_c_h: v_c.as_f64(),
        vbar_l2_h: vbar.sqrt().as_f64(),
        vhat_l2_vstar: vhat.max(T::zero()).sqrt().as_f64(),
    })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    /// Intercept, i.e. the logarithm of the fitted constant.
    pub intercept: f64,
    /// Sum of squared residuals in log space.
    pub residual: f64,
}

impl RateFit {
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientLevels {
            required: 3,
            got: points.len(),
        });
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::DegenerateFit(format!(
            "nonpositive value in ({x:e}, {y:e})"
        )));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RateOutcome {
    /// Every metric vanished.
    Exact,
    Fitted(RateFit),
    Degenerate { reason: String },
}

impl RateOutcome {
    pub fn from_points(points: &[(f64, f64)]) -> Self {
        if !points.is_empty() && points.iter().all(|p| p.1 == 0.0) {
            return RateOutcome::Exact;
        }
        match fit_rate(points) {
            Ok(f) => RateOutcome::Fitted(f),
            Err(e) => RateOutcome::Degenerate {
                reason: e.to_string(),
            },
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            RateOutcome::Fitted(f) => Some(f.slope),
            _ => None,
        }
    }
}

/// One row of a study: a pair of runs and their differences.
#[derive(Debug, Clone, Serialize)]
pub struct PairRow {
    /// Parameter of the first run (`h` or `epsilon`).
    pub first: f64,
    /// Parameter of the second run.
    pub second: f64,
    pub h_first: f64,
    pub h_second: f64,
    pub metrics: CauchyMetrics,
    pub combined: f64,
    /// Right side of the inequality divided by the constant.
    pub shape: f64,
    /// `combined / shape`; the inequality holds with constant `C` iff this is `<= C`.
    pub shape_ratio: f64,
}

/// Outcome of testing `combined <= C * shape` with `C` fitted on the first pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShapeCheck {
    pub c_fit: f64,
    pub holds: bool,
}

fn shape_check(rows: &[PairRow]) -> ShapeCheck {
    let Some(first) = rows.first() else {
        return ShapeCheck {
            c_fit: 0.0,
            holds: true,
        };
    };
    let c = first.shape_ratio;
    let holds = rows
        .iter()
        .all(|r| r.combined <= c * r.shape * (1.0 + 1e-12) + 1e-300 || r.combined == 0.0);
    ShapeCheck { c_fit: c, holds }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Largest value of `max / first` across a series.
fn growth(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return 1.0;
    };
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        1.0
    } else {
        ratio(max, first)
    }
}

fn run_all<T: Real>(pds: &[(ProblemData<T>, usize)], cfg: &StepConfig<T>) -> Result<Vec<Trajectory<T>>> {
    pds.par_iter().map(|(pd, n)| run(pd, *n, cfg)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub steps: usize,
    pub h: f64,
    pub max_phi_linf: f64,
    pub max_v_linf: f64,
    pub max_fixed_point_iters: usize,
    pub min_theta: f64,
}

fn level_summary<T: Real>(t: &Trajectory<T>) -> LevelSummary {
    LevelSummary {
        steps: t.steps(),
        h: t.h.as_f64(),
        max_phi_linf: t.states.iter().map(|s| s.phi.max_abs().as_f64()).fold(0.0, f64::max),
        max_v_linf: t.states.iter().map(|s| s.v.max_abs().as_f64()).fold(0.0, f64::max),
        max_fixed_point_iters: t.reports.iter().map(|r| r.fixed_point_iters).max().unwrap_or(0),
        min_theta: t.states.iter().map(|s| s.theta.min().as_f64()).fold(f64::INFINITY, f64::min),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepStudy {
    pub levels: Vec<LevelSummary>,
    pub pairs: Vec<PairRow>,
    pub shape: ShapeCheck,
    pub rate_phi_c_h: RateOutcome,
    pub rate_v_c_h: RateOutcome,
    pub rate_vbar_l2_h: RateOutcome,
    pub rate_vhat_l2_vstar: RateOutcome,
    /// Largest ratio of consecutive `L^infty` maxima of `phi` and `v` under refinement.
    pub linf_refinement_ratio: f64,
}

/// Step-refinement study with nested step counts (each dividing the next).
pub fn cauchy_in_h<T: Real>(pd: &ProblemData<T>, steps: &[usize], cfg: &StepConfig<T>) -> Result<StepStudy> {
    if steps.len() < 3 {
        return Err(Error::InsufficientLevels {
            required: 3,
            got: steps.len(),
        });
    }
    for w in steps.windows(2) {
        if w[0] == 0 || w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(Error::InvalidInput(format!(
                "step counts must be increasing and nested, got {steps:?}"
            )));
        }
    }
    let jobs: Vec<_> = steps.iter().map(|&n| (pd.clone(), n)).collect();
    let trajs = run_all(&jobs, cfg)?;
    let mut pairs = Vec::with_capacity(steps.len() - 1);
    for w in trajs.windows(2) {
        let m = cauchy_metrics(&w[0], &w[1])?;
        let (h, tau) = (w[0].h.as_f64(), w[1].h.as_f64());
        let shape = h.sqrt() + tau.sqrt() + m.vhat_l2_vstar.sqrt();
        pairs.push(PairRow {
            first: h,
            second: tau,
            h_first: h,
            h_second: tau,
            metrics: m,
            combined: m.combined(),
            shape,
            shape_ratio: ratio(m.combined(), shape),
        });
    }
    let levels: Vec<LevelSummary> = trajs.iter().map(level_summary).collect();
    let mut linf_ratio = 1.0f64;
    for w in levels.windows(2) {
        for (a, b) in [(w[0].max_phi_linf, w[1].max_phi_linf), (w[0].max_v_linf, w[1].max_v_linf)] {
            let r = if a == b { 1.0 } else { ratio(a.max(b), a.min(b)) };
            linf_ratio = linf_ratio.max(r);
        }
    }
    let points = |f: fn(&CauchyMetrics) -> f64| -> Vec<(f64, f64)> {
        pairs.iter().map(|p| (p.first, f(&p.metrics))).collect()
    };
    Ok(StepStudy {
        shape: shape_check(&pairs),
        rate_phi_c_h: RateOutcome::from_points(&points(|m| m.phi_c_h)),
        rate_v_c_h: RateOutcome::from_points(&points(|m| m.v_c_h)),
        rate_vbar_l2_h: RateOutcome::from_points(&points(|m| m.vbar_l2_h)),
        rate_vhat_l2_vstar: RateOutcome::from_points(&points(|m| m.vhat_l2_vstar)),
        linf_refinement_ratio: linf_ratio,
        levels,
        pairs,
    })
}

/// Step size as a function of `epsilon`: `min(max_step(eps, safety), h_base eps)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepRule {
    pub safety: f64,
    pub h_base: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            safety: 0.25,
            h_base: 0.25,
        }
    }
}

impl StepRule {
    pub fn step<T: Real>(&self, pd: &ProblemData<T>, eps: T) -> T {
        let hs = max_step(eps, pd.ell, pd.nonlin.pi_lip(), T::lit(self.safety));
        hs.min(T::lit(self.h_base) * eps)
    }
}

/// Quantities bounded uniformly in `epsilon`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UniformBounds {
    /// `eps^{1/2} max_m ||theta_m||_H`.
    pub eps_half_theta_h: f64,
    /// `||theta_bar||_{L^2(0,T;V)}`.
    pub theta_l2_v: f64,
    /// `||u_t||_{L^2(0,T;V*)}` of the piecewise-affine `u`.
    pub u_t_l2_vstar: f64,
    /// `max_m ||ln theta_m||_H`.
    pub ln_theta_h: f64,
    /// `(int ||phi_hat||^2 + ||v_bar||^2 + ||z_bar||^2)^{1/2}` in `L^2(0,T;H)`.
    pub phi_w22: f64,
    /// `max(max_m ||phi_m||_inf, max_m ||v_m||_inf)`.
    pub phi_w1inf: f64,
}

impl UniformBounds {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.eps_half_theta_h,
            self.theta_l2_v,
            self.u_t_l2_vstar,
            self.ln_theta_h,
            self.phi_w22,
            self.phi_w1inf,
        ]
    }

    pub const NAMES: [&'static str; 6] = [
        "eps_half_theta_h",
        "theta_l2_v",
        "u_t_l2_vstar",
        "ln_theta_h",
        "phi_w22",
        "phi_w1inf",
    ];
}

pub fn uniform_bounds<T: Real>(traj: &Trajectory<T>) -> UniformBounds {
    let g = &traj.pd.grid;
    let h = traj.h;
    let st = &traj.states;
    let third = T::lit(3.0);
    let mut theta_max = T::zero();
    let mut ln_max = T::zero();
    let mut w1inf = T::zero();
    for s in st {
        theta_max = theta_max.max(norm_h(g, &s.theta));
        ln_max = ln_max.max(norm_h(g, &s.theta.map(|t| t.ln())));
        w1inf = w1inf.max(s.phi.max_abs()).max(s.v.max_abs());
    }
    let mut theta_v = T::zero();
    let mut ut = T::zero();
    let mut w22 = T::zero();
    for n in 0..traj.steps() {
        let (a, b) = (&st[n], &st[n + 1]);
        let nv = norm_v(g, &b.theta);
        theta_v = theta_v + h * nv * nv;
        let rate = b.u.sub(&a.u).scale(T::one() / h);
        let r = norm_vstar(g, &rate);
        ut = ut + h * r * r;
        let d = b.phi.sub(&a.phi);
        let phi_sq = inner_h(g, &a.phi, &a.phi) + inner_h(g, &a.phi, &d) + inner_h(g, &d, &d) / third;
        let z = &traj.z[n];
        w22 = w22 + h * (phi_sq + inner_h(g, &b.v, &b.v) + inner_h(g, z, z));
    }
    UniformBounds {
        eps_half_theta_h: (traj.pd.epsilon.sqrt() * theta_max).as_f64(),
        theta_l2_v: theta_v.sqrt().as_f64(),
        u_t_l2_vstar: ut.sqrt().as_f64(),
        ln_theta_h: ln_max.as_f64(),
        phi_w22: w22.sqrt().as_f64(),
        phi_w1inf: w1inf.as_f64(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsStudy {
    pub epsilons: Vec<f64>,
    pub levels: Vec<LevelSummary>,
    pub bounds: Vec<UniformBounds>,
    /// Per quantity, `max over the list / value at the first epsilon`.
    pub bound_growth: [f64; 6],
    pub delta: f64,
    pub uniform_holds: bool,
    pub pairs: Vec<PairRow>,
    pub shape: ShapeCheck,
    pub rate_phi_c_h: RateOutcome,
}

/// Nested step counts with `T / N_k <= rule(eps_k)`, each dividing the next.
pub fn eps_step_counts<T: Real>(pd: &ProblemData<T>, eps_list: &[T], rule: &StepRule) -> Vec<usize> {
    let t = pd.final_time.as_f64();
    let mut out: Vec<usize> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let h = rule.step(pd, eps).as_f64();
        let mut n = ((t / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        if let Some(&prev) = out.last() {
            n = n.max(prev).div_ceil(prev) * prev;
        }
        out.push(n);
    }
    out
}

/// `epsilon -> 0` study over a decreasing list with steps from `rule`.
pub fn cauchy_in_eps<T: Real>(
    pd: &ProblemData<T>,
    eps_list: &[T],
    rule: &StepRule,
    delta: f64,
    cfg: &StepConfig<T>,
) -> Result<EpsStudy> {
    if eps_list.is_empty() {
        return Err(Error::InsufficientLevels { required: 1, got: 0 });
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || !(eps_list[0] <= T::one()) || !(eps_list[eps_list.len() - 1] > T::zero()) {
        return Err(Error::InvalidInput("epsilon list must decrease inside (0, 1]".into()));
    }
    let counts = eps_step_counts(pd, eps_list, rule);
    let jobs: Vec<_> = eps_list
        .iter()
        .zip(&counts)
        .map(|(&e, &n)| (pd.with_epsilon(e), n))
        .collect();
    let trajs = run_all(&jobs, cfg)?;
    let bounds: Vec<UniformBounds> = trajs.iter().map(uniform_bounds).collect();
    let mut bound_growth = [1.0; 6];
    for (q, g) in bound_growth.iter_mut().enumerate() {
        let series: Vec<f64> = bounds.iter().map(|b| b.as_array()[q]).collect();
        *g = growth(&series);
    }
    let uniform_holds = bound_growth.iter().all(|&g| g <= 1.0 + delta);
    let mut pairs = Vec::new();
    for (k, w) in trajs.windows(2).enumerate() {
        let m = cauchy_metrics(&w[0], &w[1])?;
        let shape = m.vhat_l2_vstar.sqrt();
        pairs.push(PairRow {
            first: eps_list[k].as_f64(),
            second: eps_list[k + 1].as_f64(),
            h_first: w[0].h.as_f64(),
            h_second: w[1].h.as_f64(),
            metrics: m,
            combined: m.combined(),
            shape,
            shape_ratio: ratio(m.combined(), shape),
        });
    }
    let points: Vec<(f64, f64)> = pairs.iter().map(|p| (p.first, p.metrics.phi_c_h)).collect();
    Ok(EpsStudy {
        epsilons: eps_list.iter().map(|e| e.as_f64()).collect(),
        levels: trajs.iter().map(level_summary).collect(),
        bounds,
        bound_growth,
        delta,
        uniform_holds,
        shape: shape_check(&pairs),
        rate_phi_c_h: if points.len() >= 3 {
            RateOutcome::from_points(&points)
        } else {
            RateOutcome::Degenerate {
                reason: format!("{} pairs, at least 3 needed", points.len()),
            }
        },
        pairs,
    })
}

/// Whether a study found all metrics identically zero.
pub fn all_pairs_zero(rows: &[PairRow]) -> bool {
    rows.iter().all(|r| r.metrics.all_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolants::tests::synthetic;
    use crate::interpolants::{InterpolantView, Kind};
    use crate::model::{Grid, Kernel, Nonlinearity, Profile, Source};

    fn hat_at(traj: &Trajectory<f64>, kind: Kind, t: f64) -> Result<GridFunction<f64>> {
        InterpolantView::new(traj, kind).eval(t)
    }

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
    fn exact_power_law() {
        let pts: Vec<_> = [0.5, 0.25, 0.125, 0.0625].iter().map(|&h| (h, h)).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-14);
        assert!(f.residual < 1e-28);
        let pts: Vec<_> = [0.5, 0.25, 0.125].iter().map(|&h: &f64| (h, 3.0 * h.sqrt())).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-14);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn noisy_points_against_hand_ols() {
        let pts: [(f64, f64); 4] = [(0.4, 0.21), (0.2, 0.13), (0.1, 0.07), (0.05, 0.041)];
        let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let n = 4.0;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icpt = (sy - slope * sx) / n;
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope - slope).abs() < 1e-12);
        assert!((f.intercept - icpt).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_rate(&[(0.1, 1.0), (0.2, 2.0)]), Err(Error::InsufficientLevels { .. })));
        assert!(matches!(
            fit_rate(&[(0.1, 1.0), (0.2, 0.0), (0.4, 1.0)]),
            Err(Error::DegenerateFit(_))
        ));
        assert_eq!(RateOutcome::from_points(&[(0.1, 0.0), (0.2, 0.0), (0.4, 0.0)]), RateOutcome::Exact);
    }

    #[test]
    fn metrics_vanish_on_identical_runs_and_are_symmetric() {
        let a = synthetic(4, 6, 11);
        let m = cauchy_metrics(&a, &a).unwrap();
        assert!(m.all_zero());
        let mut b = synthetic(2, 6, 12);
        b.h = 0.5;
        b.pd.final_time = 1.0;
        let ab = cauchy_metrics(&a, &b).unwrap();
        let ba = cauchy_metrics(&b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!(ab.phi_c_h > 0.0);
    }

    #[test]
    fn metrics_against_dense_sampling() {
        // coarse grid of 2 steps against fine grid of 4 steps; sampled sup is a lower bound
        let a = synthetic(4, 5, 21);
        let mut b = synthetic(2, 5, 22);
        b.h = 0.5;
        b.pd.final_time = 1.0;
        let m = cauchy_metrics(&a, &b).unwrap();
        let g = &a.pd.grid;
        let mut sup = 0.0f64;
        let mut l2 = 0.0;
        let k = 400;
        for i in 0..=k {
            let t = i as f64 / k as f64;
            let d = hat_at(&a, Kind::HatPhi, t).unwrap().sub(&hat_at(&b, Kind::HatPhi, t).unwrap());
            sup = sup.max(norm_h(g, &d));
            if i > 0 {
                let tm = t - 0.5 / k as f64;
                let d = hat_at(&a, Kind::BarV, tm).unwrap().sub(&hat_at(&b, Kind::BarV, tm).unwrap());
                l2 += norm_h(g, &d).powi(2) / k as f64;
            }
        }
        assert!((sup - m.phi_c_h).abs() < 1e-14);
        assert!((l2.sqrt() - m.vbar_l2_h).abs() < 1e-12);
    }

    #[test]
    fn decoupled_equilibrium_study_is_exact() {
        let mut pd = problem(8);
        pd.ell = 0.0;
        pd.kernel = Kernel::zero();
        pd.nonlin = Nonlinearity::cubic(0.0, 0.0);
        pd.theta0 = GridFunction::constant(8, 2.0);
        pd.phi0 = GridFunction::zeros(8);
        let s = cauchy_in_h(&pd, &[4, 8, 16], &StepConfig::default()).unwrap();
        assert!(all_pairs_zero(&s.pairs));
        assert_eq!(s.rate_phi_c_h, RateOutcome::Exact);
        assert!(s.shape.holds);
    }

    #[test]
    fn too_few_levels() {
        let pd = problem(8);
        assert!(matches!(
            cauchy_in_h(&pd, &[4, 8], &StepConfig::default()),
            Err(Error::InsufficientLevels { .. })
        ));
    }

    #[test]
    fn single_epsilon_has_no_pairs() {
        let pd = problem(8);
        let s = cauchy_in_eps(&pd, &[0.5], &StepRule::default(), 0.25, &StepConfig::default()).unwrap();
        assert!(s.pairs.is_empty());
        assert!(s.uniform_holds);
    }

    #[test]
    fn decoupled_order_parameter_ignores_epsilon() {
        let mut pd = problem(8);
        pd.ell = 0.0;
        let s = cauchy_in_eps(&pd, &[0.4, 0.2], &StepRule { safety: 0.25, h_base: 0.25 }, 0.25, &StepConfig::default());
        // order parameter differs only through the step size, so compare on equal steps
        let s = s.unwrap();
        assert_eq!(s.levels.len(), 2);
        let a = run(&pd.with_epsilon(0.4), 20, &StepConfig::default()).unwrap();
        let b = run(&pd.with_epsilon(0.2), 20, &StepConfig::default()).unwrap();
        let m = cauchy_metrics(&a, &b).unwrap();
        assert_eq!(m.phi_c_h, 0.0);
        assert_eq!(m.vbar_l2_h, 0.0);
    }

    #[test]
    fn nested_counts_follow_rule() {
        let pd = problem(8);
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let counts = eps_step_counts(&pd, &eps, &StepRule::default());
        assert_eq!(counts, vec![40, 80, 160, 320]);
        let odd = eps_step_counts(&pd, &[0.1, 0.07], &StepRule::default());
        assert_eq!(odd[1] % odd[0], 0);
        assert!(1.0 / odd[1] as f64 <= StepRule::default().step(&pd, 0.07));
    }
}
