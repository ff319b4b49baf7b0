//! CSV and report emission.
//!
//! Numeric cells carry 17 significant digits, files end every row with LF,
//! and writes go through a `.partial` staging name that is renamed into
//! place only on success, so an interrupted run never leaves a truncated
//! file under the final name.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use porobeam_core::energy::{
    DecayFit, DissipationReport, LemmaRateDiagnostics, LyapunovValues,
};
use porobeam_core::model::LyapunovConstants;
use porobeam_core::timestepper::{RunConfig, Trajectory};
use porobeam_core::verification::{ConvergenceReport, SweepResult};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `<path>.partial`, then renames onto `path`.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut staged = path.as_os_str().to_owned();
    staged.push(".partial");
    let staged = Path::new(&staged);
    fs::write(staged, contents)?;
    fs::rename(staged, path)
}

/// `t,E_total,...,neg_log_E,dissipation` — one row per solved step. The
/// dissipation column is the instantaneous rate `kappa||w_x||^2 + k||w||^2`;
/// `neg_log_E` is left empty when the energy is not positive.
pub fn write_timeseries_csv(traj: &Trajectory, path: &Path) -> io::Result<()> {
    let p = &traj.params;
    let mut out = String::new();
    out.push_str(
        "t,E_total,E_kinetic,E_accel,E_elastic,E_velgrad,E_porousgrad,E_coupled,E_thermal,neg_log_E,dissipation\n",
    );
    for r in &traj.records {
        let e = &r.energy;
        let neg_log = if e.total > 0.0 {
            num(-e.total.ln())
        } else {
            String::new()
        };
        let dissipation = p.kappa * r.w_h1_sq + p.k * r.w_l2_sq;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            num(r.t),
            num(e.total),
            num(e.kinetic),
            num(e.accel),
            num(e.elastic),
            num(e.vel_grad),
            num(e.porous_grad),
            num(e.coupled),
            num(e.thermal),
            neg_log,
            num(dissipation),
        );
    }
    write_atomic(path, &out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    U,
    Phi,
    W,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::U => "u",
            FieldKind::Phi => "phi",
            FieldKind::W => "w",
        }
    }
}

/// `t,x,value` rows ordered by `(t, x)`; boundary nodes carry value 0.
pub fn write_field_csv(traj: &Trajectory, field: FieldKind, path: &Path) -> io::Result<()> {
    let mesh = &traj.mesh;
    let mut out = String::from("t,x,value\n");
    for frame in &traj.frames {
        let values = match field {
            FieldKind::U => &frame.state.a_curr,
            FieldKind::Phi => &frame.state.b_curr,
            FieldKind::W => &frame.state.c_curr,
        };
        for (i, &x) in mesh.nodes.iter().enumerate() {
            let v = if i == 0 || i == mesh.s { 0.0 } else { values[i - 1] };
            let _ = writeln!(out, "{},{},{}", num(frame.t), num(x), num(v));
        }
    }
    write_atomic(path, &out)
}

fn rates_rows(out: &mut String, label: &str, sweep: &SweepResult) {
    for (j, lvl) in sweep.levels.iter().enumerate() {
        let e = &lvl.errors;
        let _ = writeln!(
            out,
            "{label},{j},{},{},{},{},{},{},{},{}",
            num(lvl.h),
            num(lvl.dt),
            num(e.e_uvel),
            num(e.e_phivel),
            num(e.e_ux),
            num(e.e_phix),
            num(e.e_phi),
            num(e.e_w),
        );
    }
    let o = &sweep.orders;
    let _ = writeln!(
        out,
        "{label},order,,,{},{},{},{},{},{}",
        num(o.e_uvel),
        num(o.e_phivel),
        num(o.e_ux),
        num(o.e_phix),
        num(o.e_phi),
        num(o.e_w),
    );
}

/// Level table for both sweeps, each closed by a fitted-order footer row.
pub fn write_rates_csv(report: &ConvergenceReport, path: &Path) -> io::Result<()> {
    let mut out = String::from("sweep,level,h,dt,e_uvel,e_phivel,e_ux,e_phix,e_phi,e_w\n");
    rates_rows(&mut out, "h", &report.spatial);
    rates_rows(&mut out, "dt", &report.temporal);
    write_atomic(path, &out)
}

/// Inputs gathered by the `run` subcommand for the textual report.
pub struct RunSummary<'a> {
    pub cfg: &'a RunConfig,
    pub traj: &'a Trajectory,
    pub consts: &'a LyapunovConstants,
    pub fit: Option<&'a DecayFit>,
    pub dissipation: &'a DissipationReport,
    /// `(L, margins)` extremes over recorded frames: the minimum of
    /// `L - nu1 E` and of `nu2 E - L`, plus the minimum margin/E ratio.
    pub sandwich: Option<(f64, f64, f64)>,
    pub lemma: Option<&'a LemmaRateDiagnostics>,
}

pub fn render_report(s: &RunSummary) -> String {
    let mut out = String::new();
    out.push_str("porobeam run report\n");
    out.push_str("===================\n\n");
    out.push_str("configuration:\n");
    for line in crate::config::serialize_config(s.cfg).lines() {
        let _ = writeln!(out, "  {line}");
    }
    let mesh = &s.traj.mesh;
    let _ = writeln!(
        out,
        "\nmesh: s = {}, h = {}, interior nodes = {}",
        mesh.s,
        num(mesh.h),
        mesh.interior_count()
    );
    let _ = writeln!(
        out,
        "solves: {} (levels 2..={})",
        s.traj.records.len(),
        s.traj.final_state.n
    );

    let c = s.consts;
    out.push_str("\nderived stability constants:\n");
    for (name, v) in [
        ("cp", c.cp),
        ("C1", c.c1),
        ("C2", c.c2),
        ("C3", c.c3),
        ("eps1", c.eps1),
        ("eps2", c.eps2),
        ("eps3", c.eps3),
        ("N0", c.n0),
        ("N1", c.n1),
        ("N2", c.n2),
        ("nu1", c.nu1),
        ("nu2", c.nu2),
        ("beta", c.beta),
        ("omega", c.omega),
        ("M", c.m),
    ] {
        let _ = writeln!(out, "  {name:<5} = {}", num(v));
    }
    let _ = writeln!(
        out,
        "  zeta  = [{}]",
        c.zeta.iter().map(|z| num(*z)).collect::<Vec<_>>().join(", ")
    );

    if let (Some(first), Some(last)) = (s.traj.records.first(), s.traj.records.last()) {
        out.push_str("\nenergy:\n");
        let _ = writeln!(out, "  E at n=2     = {}", num(first.energy.total));
        let _ = writeln!(
            out,
            "  E at n={:<5} = {}",
            last.n,
            num(last.energy.total)
        );
    }

    out.push_str("\ndecay fit (tail 50% of log E):\n");
    match s.fit {
        Some(fit) => {
            let _ = writeln!(out, "  omega_hat = {}", num(fit.omega_hat));
            let _ = writeln!(out, "  intercept = {}", num(fit.log_intercept));
            let _ = writeln!(out, "  r_squared = {}", num(fit.r_squared));
            let _ = writeln!(out, "  window    = {} samples", fit.window_len);
        }
        None => out.push_str("  not available (non-positive energies in window)\n"),
    }

    let d = s.dissipation;
    out.push_str("\ndissipation check (r_n = (E_n - E_(n-1))/dt + kappa||w_x||^2 + k||w||^2):\n");
    let _ = writeln!(out, "  steps checked  = {}", d.steps_checked);
    let _ = writeln!(out, "  max residual   = {}", num(d.max_residual));
    let _ = writeln!(out, "  max normalized = {}", num(d.max_normalized));
    let _ = writeln!(
        out,
        "  violations     = {}",
        if d.violations.is_empty() {
            "none".to_string()
        } else {
            format!("{:?}", d.violations)
        }
    );

    out.push_str("\nlyapunov equivalence over recorded frames (nu1 E <= L <= nu2 E):\n");
    match s.sandwich {
        Some((min_lower, min_upper, min_ratio)) => {
            let _ = writeln!(out, "  min (L - nu1 E) = {}", num(min_lower));
            let _ = writeln!(out, "  min (nu2 E - L) = {}", num(min_upper));
            let _ = writeln!(out, "  min margin / E  = {}", num(min_ratio));
        }
        None => out.push_str("  no frames recorded\n"),
    }

    out.push_str("\nlemma rate diagnostics (logged only; discrete-time analogues carry O(dt) error):\n");
    match s.lemma {
        Some(lemma) => {
            let _ = writeln!(out, "  pairs checked        = {}", lemma.pairs);
            let _ = writeln!(out, "  max dF/dt excess     = {}", num(lemma.max_f_excess));
            let _ = writeln!(out, "  max dG/dt excess     = {}", num(lemma.max_g_excess));
        }
        None => out.push_str("  no adjacent frame pairs recorded\n"),
    }
    out
}

/// One line per sample of a previously written time series, re-fitted.
pub fn render_decay_fit(fit: &DecayFit, source: &Path, samples: usize) -> String {
    let mut out = String::new();
    out.push_str("porobeam decay-fit report\n");
    out.push_str("=========================\n\n");
    let _ = writeln!(out, "source    = {}", source.display());
    let _ = writeln!(out, "samples   = {samples}");
    let _ = writeln!(out, "window    = {} (tail 50%)", fit.window_len);
    let _ = writeln!(out, "omega_hat = {}", num(fit.omega_hat));
    let _ = writeln!(out, "intercept = {}", num(fit.log_intercept));
    let _ = writeln!(out, "r_squared = {}", num(fit.r_squared));
    out
}

/// Collects the sandwich extremes used in the run report.
pub fn sandwich_extremes(values: &[LyapunovValues]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut min_lower = f64::INFINITY;
    let mut min_upper = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for v in values {
        min_lower = min_lower.min(v.margin_lower);
        min_upper = min_upper.min(v.margin_upper);
        if v.energy > 0.0 {
            min_ratio = min_ratio.min(v.margin() / v.energy);
        }
    }
    Some((min_lower, min_upper, min_ratio))
}

/// Reads `t` and `E_total` columns back from a written time series.
pub fn read_energy_series(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let columns: Vec<&str> = header.split(',').collect();
    let t_col = columns
        .iter()
        .position(|c| *c == "t")
        .ok_or("no `t` column")?;
    let e_col = columns
        .iter()
        .position(|c| *c == "E_total")
        .ok_or("no `E_total` column")?;
    let mut series = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |col: usize, name: &str| -> Result<f64, String> {
            cells
                .get(col)
                .ok_or_else(|| format!("row {}: missing {name}", idx + 2))?
                .parse::<f64>()
                .map_err(|_| format!("row {}: bad {name}", idx + 2))
        };
        series.push((parse(t_col, "t")?, parse(e_col, "E_total")?));
    }
    Ok(series)
}
