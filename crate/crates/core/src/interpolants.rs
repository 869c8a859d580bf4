//! Piecewise-affine ("hat") and piecewise-constant ("bar"/"under") time
//! reconstructions of a trajectory, and the exact identities relating them.
//!
//! On `(nh, (n+1)h]` the bar kinds take the level-`n+1` value and `UnderPhi`
//! the level-`n` value; hat kinds interpolate linearly between levels `n` and
//! `n+1`. Time integrals are evaluated per subinterval in closed form from
//! `int_0^1 ||A + s B||^2 ds = ||A||^2 + (A, B) + ||B||^2 / 3`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{inner_h, inner_vstar, norm_h, Grid, GridFunction};
use crate::num::Real;
use crate::stepper::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    HatU,
    HatPhi,
    HatV,
    BarU,
    BarTheta,
    BarPhi,
    UnderPhi,
    BarV,
    BarZ,
    BarF,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::HatU,
        Kind::HatPhi,
        Kind::HatV,
        Kind::BarU,
        Kind::BarTheta,
        Kind::BarPhi,
        Kind::UnderPhi,
        Kind::BarV,
        Kind::BarZ,
        Kind::BarF,
    ];

    pub fn is_hat(self) -> bool {
        matches!(self, Kind::HatU | Kind::HatPhi | Kind::HatV)
    }
}

/// Read-only time reconstruction of one field of a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct InterpolantView<'a, T> {
    traj: &'a Trajectory<T>,
    kind: Kind,
}

/// Position of `t` relative to the breakpoints, snapped when within rounding.
fn locate<T: Real>(t: T, h: T, steps: usize) -> (usize, T) {
    let x = t / h;
    let nearest = x.round();
    let x = if (x - nearest).abs() <= T::lit(64.0) * T::epsilon() * x.abs().max(T::one()) {
        nearest
    } else {
        x
    };
    let n = x.floor().to_usize().unwrap_or(0).min(steps);
    (n, x - T::lit(n as f64))
}

impl<'a, T: Real> InterpolantView<'a, T> {
    pub fn new(traj: &'a Trajectory<T>, kind: Kind) -> Self {
        Self { traj, kind }
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    fn level(&self, n: usize) -> &'a GridFunction<T> {
        let s = &self.traj.states[n];
        match self.kind {
            Kind::HatU | Kind::BarU => &s.u,
            Kind::HatPhi | Kind::BarPhi | Kind::UnderPhi => &s.phi,
            Kind::HatV | Kind::BarV => &s.v,
            Kind::BarTheta => &s.theta,
            Kind::BarZ | Kind::BarF => unreachable!("per-step kinds have no level value"),
        }
    }

    /// Value at time `t in [0, T]`.
    pub fn eval(&self, t: T) -> Result<GridFunction<T>> {
        let steps = self.traj.steps();
        let t_max = self.traj.final_time();
        let slack = T::lit(64.0) * T::epsilon() * t_max.max(T::one());
        if !(t >= -slack && t <= t_max + slack) {
            return Err(Error::OutOfRange {
                t: t.as_f64(),
                t_max: t_max.as_f64(),
            });
        }
        let t = t.max(T::zero()).min(t_max);
        let (n, s) = locate(t, self.traj.h, steps);
        if self.kind.is_hat() {
            if n == steps || s == T::zero() {
                return Ok(self.level(n).clone());
            }
            let a = self.level(n);
            let b = self.level(n + 1);
            return Ok(a.zip_map(b, |x, y| x + (y - x) * s));
        }
        // interval (k h, (k+1) h] containing t; t = 0 belongs to the first one
        let k = if s == T::zero() { n.max(1) - 1 } else { n };
        Ok(match self.kind {
            Kind::UnderPhi => self.level(k).clone(),
            Kind::BarZ => self.traj.z[k].clone(),
            Kind::BarF => self.traj.f_slabs[k].clone(),
            _ => self.level(k + 1).clone(),
        })
    }
}

/// `int_0^h ||A + (t/h) B||^2 dt` in the given inner product.
fn affine_sq_integral<T: Real>(
    ip: impl Fn(&GridFunction<T>, &GridFunction<T>) -> T,
    a: &GridFunction<T>,
    b: &GridFunction<T>,
    h: T,
) -> T {
    h * (ip(a, a) + ip(a, b) + ip(b, b) / T::lit(3.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityDefect {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub abs: f64,
    /// `|lhs - rhs| / max(|lhs|, |rhs|)`, zero when both vanish.
    pub rel: f64,
}

impl IdentityDefect {
    fn new<T: Real>(name: &'static str, lhs: T, rhs: T) -> Self {
        let (lhs, rhs) = (lhs.as_f64(), rhs.as_f64());
        let abs = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs());
        let rel = if scale == 0.0 { 0.0 } else { abs / scale };
        Self {
            name,
            lhs,
            rhs,
            abs,
            rel,
        }
    }

    /// A nodewise defect that should vanish, scaled by the size of its terms.
    fn pointwise<T: Real>(name: &'static str, defect: T, scale: T) -> Self {
        let (abs, scale) = (defect.as_f64(), scale.as_f64());
        Self {
            name,
            lhs: abs,
            rhs: 0.0,
            abs,
            rel: if scale == 0.0 { abs } else { abs / scale },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub defects: Vec<IdentityDefect>,
}

impl IdentityReport {
    pub fn max_rel(&self) -> f64 {
        self.defects.iter().map(|d| d.rel).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityDefect> {
        self.defects.iter().find(|d| d.name == name)
    }
}

fn sup_over_breakpoints<T: Real>(
    view: &InterpolantView<'_, T>,
    steps: usize,
    h: T,
    norm: impl Fn(&GridFunction<T>) -> T,
) -> Result<T> {
    let mut best = T::zero();
    for n in 0..=steps {
        best = best.max(norm(&view.eval(h * T::lit(n as f64))?));
    }
    Ok(best)
}

/// Checks the seven interpolant identities on `traj`.
pub fn verify_identities<T: Real>(traj: &Trajectory<T>) -> Result<IdentityReport> {
    let grid: &Grid<T> = &traj.pd.grid;
    let h = traj.h;
    let steps = traj.steps();
    let st = &traj.states;
    let hat_u = InterpolantView::new(traj, Kind::HatU);
    let hat_phi = InterpolantView::new(traj, Kind::HatPhi);
    let hat_v = InterpolantView::new(traj, Kind::HatV);
    let linf = |u: &GridFunction<T>| u.max_abs();
    let mut defects = Vec::with_capacity(9);

    let lhs = sup_over_breakpoints(&hat_u, steps, h, |u| norm_h(grid, u))?;
    let rhs = st[1..]
        .iter()
        .map(|s| norm_h(grid, &s.u))
        .fold(norm_h(grid, &st[0].u), T::max);
    defects.push(IdentityDefect::new("sup_u_h", lhs, rhs));

    let lhs = sup_over_breakpoints(&hat_phi, steps, h, linf)?;
    let rhs = st[1..].iter().map(|s| s.phi.max_abs()).fold(st[0].phi.max_abs(), T::max);
    defects.push(IdentityDefect::new("sup_phi_linf", lhs, rhs));

    let lhs = sup_over_breakpoints(&hat_v, steps, h, linf)?;
    let rhs = st[1..].iter().map(|s| s.v.max_abs()).fold(st[0].v.max_abs(), T::max);
    defects.push(IdentityDefect::new("sup_v_linf", lhs, rhs));

    let third = T::lit(3.0);
    let ip_vstar = |a: &GridFunction<T>, b: &GridFunction<T>| inner_vstar(grid, a, b);
    let ip_h = |a: &GridFunction<T>, b: &GridFunction<T>| inner_h(grid, a, b);
    let mut gap_u = T::zero();
    let mut slope_u = T::zero();
    let mut gap_phi = T::zero();
    let mut slope_phi = T::zero();
    let mut vbar_phi = T::zero();
    let mut gap_v = T::zero();
    let mut slope_v = T::zero();
    let mut zbar = T::zero();
    let mut under = T::zero();
    let mut under_scale = T::zero();
    for n in 0..steps {
        let t0 = h * T::lit(n as f64);
        let t_in = t0 + h * T::lit(0.5);

        // bar - hat on the interval equals A + s B with s = (t - nh)/h
        let bar = InterpolantView::new(traj, Kind::BarU).eval(t_in)?;
        let a = bar.sub(&hat_u.eval(t0)?);
        let rate = st[n + 1].u.sub(&st[n].u).scale(T::one() / h);
        let b = rate.scale(-h);
        gap_u = gap_u + affine_sq_integral(ip_vstar, &a, &b, h);
        slope_u = slope_u + h * ip_vstar(&rate, &rate);

        let bar = InterpolantView::new(traj, Kind::BarPhi).eval(t_in)?;
        let a = bar.sub(&hat_phi.eval(t0)?);
        let rate = st[n + 1].phi.sub(&st[n].phi).scale(T::one() / h);
        let b = rate.scale(-h);
        gap_phi = gap_phi.max(a.max_abs()).max(a.add(&b).max_abs());
        slope_phi = slope_phi.max(rate.max_abs());
        vbar_phi = vbar_phi.max(InterpolantView::new(traj, Kind::BarV).eval(t_in)?.max_abs());

        let underline = InterpolantView::new(traj, Kind::UnderPhi).eval(t_in)?;
        let rebuilt = bar.axpy(-h, &rate);
        under = under.max(underline.sub(&rebuilt).max_abs());
        under_scale = under_scale.max(underline.max_abs()).max(rebuilt.max_abs());

        let bar = InterpolantView::new(traj, Kind::BarV).eval(t_in)?;
        let a = bar.sub(&hat_v.eval(t0)?);
        let rate = st[n + 1].v.sub(&st[n].v).scale(T::one() / h);
        let b = rate.scale(-h);
        gap_v = gap_v + affine_sq_integral(ip_h, &a, &b, h);
        slope_v = slope_v + h * ip_h(&rate, &rate);
        let z = InterpolantView::new(traj, Kind::BarZ).eval(t_in)?;
        zbar = zbar + h * ip_h(&z, &z);
    }
    let h2 = h * h / third;
    defects.push(IdentityDefect::new("u_gap_vstar", gap_u, h2 * slope_u));
    defects.push(IdentityDefect::new("phi_gap_slope", gap_phi, h * slope_phi));
    defects.push(IdentityDefect::new("phi_gap_velocity", gap_phi, h * vbar_phi));
    defects.push(IdentityDefect::new("v_gap_slope", gap_v, h2 * slope_v));
    defects.push(IdentityDefect::new("v_gap_z", gap_v, h2 * zbar));
    defects.push(IdentityDefect::pointwise("under_phi", under, under_scale));
    Ok(IdentityReport { defects })
}
