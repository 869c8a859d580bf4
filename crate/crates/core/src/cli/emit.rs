//! CSV, NDJSON and JSON artifacts. Floats are written with 17 significant
//! digits so every value parses back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::experiments::{EpsStudy, PairRow, StepStudy, UniformBounds};
use crate::model::norm_h;
use crate::stepper::Trajectory;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))
}

pub fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_file(dir, name, &text)
}

fn row(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

pub const TRAJECTORY_HEADER: &str =
    "n,t,theta_h,phi_h,v_h,u_h,min_theta,max_theta,phi_linf,v_linf";

pub fn trajectory_csv(traj: &Trajectory<f64>) -> String {
    let g = &traj.pd.grid;
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.states {
        out.push_str(&row(&[
            s.n.to_string(),
            float(traj.h * s.n as f64),
            float(norm_h(g, &s.theta)),
            float(norm_h(g, &s.phi)),
            float(norm_h(g, &s.v)),
            float(norm_h(g, &s.u)),
            float(s.theta.min()),
            float(s.theta.max()),
            float(s.phi.max_abs()),
            float(s.v.max_abs()),
        ]));
    }
    out
}

pub fn steps_ndjson(traj: &Trajectory<f64>) -> String {
    let mut out = String::new();
    for r in &traj.reports {
        out.push_str(&serde_json::to_string(r).expect("step report serializes"));
        out.push('\n');
    }
    out
}

pub const DIAGNOSTICS_HEADER: &str = "m,thermal,mass,dissipation,phi_sq,kinetic,potential,\
energy_lhs,energy_rhs,balance_slack,entropy_defect,sum_theta_h,laplacian_sum_h,\
identity_defect,phi_linf,v_linf,u_h";

pub fn diagnostics_csv(rep: &DiagnosticsReport) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for (m, e) in rep.energy.rows.iter().enumerate() {
        let c = &rep.cumulative[m];
        let entropy = if m == 0 {
            String::new()
        } else {
            float(rep.entropy_defects[m - 1])
        };
        out.push_str(&row(&[
            m.to_string(),
            float(e.thermal),
            float(e.mass),
            float(e.dissipation),
            float(e.phi_sq),
            float(e.kinetic),
            float(e.potential),
            float(e.lhs),
            float(e.rhs),
            float(e.balance_slack),
            entropy,
            float(c.sum_h),
            float(c.laplacian_h),
            float(c.identity_defect),
            float(rep.linf.phi[m]),
            float(rep.linf.v[m]),
            float(rep.u_norms[m]),
        ]));
    }
    out
}

pub const STUDY_HEADER: &str = "first,second,h_first,h_second,phi_c_h,v_c_h,vbar_l2_h,\
vhat_l2_vstar,combined,shape,shape_ratio";

pub fn pairs_csv(rows: &[PairRow]) -> String {
    let mut out = String::from(STUDY_HEADER);
    out.push('\n');
    for r in rows {
        let m = &r.metrics;
        out.push_str(&row(&[
            float(r.first),
            float(r.second),
            float(r.h_first),
            float(r.h_second),
            float(m.phi_c_h),
            float(m.v_c_h),
            float(m.vbar_l2_h),
            float(m.vhat_l2_vstar),
            float(r.combined),
            float(r.shape),
            float(r.shape_ratio),
        ]));
    }
    out
}

pub fn bounds_csv(eps: &[f64], bounds: &[UniformBounds]) -> String {
    let mut out = String::from("epsilon");
    for name in UniformBounds::NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (e, b) in eps.iter().zip(bounds) {
        let mut cells = vec![float(*e)];
        cells.extend(b.as_array().iter().map(|&x| float(x)));
        out.push_str(&row(&cells));
    }
    out
}

pub fn step_study_summary(s: &StepStudy) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "step refinement study");
    for l in &s.levels {
        let _ = writeln!(
            out,
            "  N = {:>5}  h = {:.6e}  max|phi| = {:.6e}  max|v| = {:.6e}",
            l.steps, l.h, l.max_phi_linf, l.max_v_linf
        );
    }
    for p in &s.pairs {
        let _ = writeln!(
            out,
            "  ({:.6e}, {:.6e})  phi C(H) {:.6e}  v C(H) {:.6e}  v L2(H) {:.6e}  v L2(V*) {:.6e}",
            p.first, p.second, p.metrics.phi_c_h, p.metrics.v_c_h, p.metrics.vbar_l2_h, p.metrics.vhat_l2_vstar
        );
    }
    let _ = writeln!(
        out,
        "  fitted constant {:.6e}, inequality {}",
        s.shape.c_fit,
        verdict(s.shape.holds)
    );
    let _ = writeln!(out, "  phi C(H) rate: {}", rate_text(&s.rate_phi_c_h));
    let _ = writeln!(out, "  L-infinity refinement ratio {:.6}", s.linf_refinement_ratio);
    out
}

pub fn eps_study_summary(s: &EpsStudy) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "epsilon study");
    for (e, l) in s.epsilons.iter().zip(&s.levels) {
        let _ = writeln!(out, "  eps = {e:.6e}  N = {}  h = {:.6e}", l.steps, l.h);
    }
    for (name, g) in UniformBounds::NAMES.iter().zip(s.bound_growth) {
        let _ = writeln!(out, "  {name:<18} growth {g:.6}");
    }
    let _ = writeln!(
        out,
        "  uniform bounds within 1 + {}: {}",
        s.delta,
        verdict(s.uniform_holds)
    );
    let _ = writeln!(
        out,
        "  fitted constant {:.6e}, inequality {}",
        s.shape.c_fit,
        verdict(s.shape.holds)
    );
    out
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn rate_text(r: &crate::experiments::RateOutcome) -> String {
    use crate::experiments::RateOutcome;
    match r {
        RateOutcome::Exact => "exact (all differences vanish)".into(),
        RateOutcome::Fitted(f) => format!(
            "slope {:.4}, constant {:.4e}, residual {:.3e}",
            f.slope,
            f.constant(),
            f.residual
        ),
        RateOutcome::Degenerate { reason } => format!("not fitted ({reason})"),
    }
}
