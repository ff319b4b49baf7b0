//! Manufactured-solution machinery: closed-form reference fields, the
//! forcing that makes them exact solutions, discrete error norms, and
//! convergence-order studies in `h` and `dt`.
//!
//! Inserting a chosen smooth triple `(u, phi, w)` into the field equations
//! leaves residuals
//!
//! ```text
//! f1 = rho u_tt - mu u_xx - b phi_x
//! f2 = -J u_ttx - delta phi_xx + b u_x + xi phi + d w_x
//! f3 = alpha w_t - kappa w_xx + d phi_tx + k w
//! ```
//!
//! which, applied as loads, make the triple the exact solution. Errors are
//! measured against nodal interpolants in the discrete `Z`/`T` norms; the
//! expected orders are first in both `h` and `dt` (the a priori estimate
//! bounds squared norms by `c (h^2 + dt^2)`).

use std::thread;

use thiserror::Error;

use crate::energy::least_squares_line;
use crate::fem::{self, FemMatrices, Mesh1D};
use crate::model::PhysicalParams;
use crate::timestepper::{
    run_from_state, Forcing, ForcingLoads, RunConfig, SolverState, StepError, Trajectory,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("time {t} is not a recorded step of the trajectory")]
    StepNotRecorded { t: f64 },
    #[error("convergence study needs at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error(transparent)]
    Run(#[from] StepError),
}

/// Spatial factor of a separable field; both choices vanish at `x = 0, l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialMode {
    /// `sin(m pi x / l)`.
    Sine { mode: u32 },
    /// `x (l - x)`.
    Parabola,
}

impl SpatialMode {
    fn eval(&self, x: f64, l: f64) -> f64 {
        match self {
            SpatialMode::Sine { mode } => (*mode as f64 * std::f64::consts::PI * x / l).sin(),
            SpatialMode::Parabola => x * (l - x),
        }
    }

    fn dx(&self, x: f64, l: f64) -> f64 {
        match self {
            SpatialMode::Sine { mode } => {
                let wn = *mode as f64 * std::f64::consts::PI / l;
                wn * (wn * x).cos()
            }
            SpatialMode::Parabola => l - 2.0 * x,
        }
    }

    fn dxx(&self, x: f64, l: f64) -> f64 {
        match self {
            SpatialMode::Sine { mode } => {
                let wn = *mode as f64 * std::f64::consts::PI / l;
                -wn * wn * (wn * x).sin()
            }
            SpatialMode::Parabola => -2.0,
        }
    }
}

/// One separable reference field `amplitude * X(x) * exp(-rate * t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableField {
    pub amplitude: f64,
    pub spatial: SpatialMode,
    pub rate: f64,
}

impl SeparableField {
    fn time(&self, t: f64) -> f64 {
        (-self.rate * t).exp()
    }

    fn value(&self, x: f64, t: f64, l: f64) -> f64 {
        self.amplitude * self.spatial.eval(x, l) * self.time(t)
    }

    fn dt(&self, x: f64, t: f64, l: f64) -> f64 {
        -self.rate * self.value(x, t, l)
    }

    fn dtt(&self, x: f64, t: f64, l: f64) -> f64 {
        self.rate * self.rate * self.value(x, t, l)
    }

    fn dx(&self, x: f64, t: f64, l: f64) -> f64 {
        self.amplitude * self.spatial.dx(x, l) * self.time(t)
    }

    fn dxx(&self, x: f64, t: f64, l: f64) -> f64 {
        self.amplitude * self.spatial.dxx(x, l) * self.time(t)
    }

    fn dtx(&self, x: f64, t: f64, l: f64) -> f64 {
        -self.rate * self.dx(x, t, l)
    }

    fn dttx(&self, x: f64, t: f64, l: f64) -> f64 {
        self.rate * self.rate * self.dx(x, t, l)
    }
}

/// A closed-form reference triple `(u, phi, w)` on `(0, l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub l: f64,
    pub u: SeparableField,
    pub phi: SeparableField,
    pub w: SeparableField,
}

impl ManufacturedSolution {
    /// `u = phi = w = exp(-t) sin(pi x / l)`.
    pub fn decaying_sine(l: f64) -> Self {
        let field = SeparableField {
            amplitude: 1.0,
            spatial: SpatialMode::Sine { mode: 1 },
            rate: 1.0,
        };
        ManufacturedSolution {
            l,
            u: field,
            phi: field,
            w: field,
        }
    }

    pub fn u(&self, x: f64, t: f64) -> f64 {
        self.u.value(x, t, self.l)
    }
    pub fn u_t(&self, x: f64, t: f64) -> f64 {
        self.u.dt(x, t, self.l)
    }
    pub fn u_tt(&self, x: f64, t: f64) -> f64 {
        self.u.dtt(x, t, self.l)
    }
    pub fn u_x(&self, x: f64, t: f64) -> f64 {
        self.u.dx(x, t, self.l)
    }
    pub fn u_xx(&self, x: f64, t: f64) -> f64 {
        self.u.dxx(x, t, self.l)
    }
    pub fn u_ttx(&self, x: f64, t: f64) -> f64 {
        self.u.dttx(x, t, self.l)
    }
    pub fn phi(&self, x: f64, t: f64) -> f64 {
        self.phi.value(x, t, self.l)
    }
    pub fn phi_t(&self, x: f64, t: f64) -> f64 {
        self.phi.dt(x, t, self.l)
    }
    pub fn phi_x(&self, x: f64, t: f64) -> f64 {
        self.phi.dx(x, t, self.l)
    }
    pub fn phi_xx(&self, x: f64, t: f64) -> f64 {
        self.phi.dxx(x, t, self.l)
    }
    pub fn phi_tx(&self, x: f64, t: f64) -> f64 {
        self.phi.dtx(x, t, self.l)
    }
    pub fn w(&self, x: f64, t: f64) -> f64 {
        self.w.value(x, t, self.l)
    }
    pub fn w_t(&self, x: f64, t: f64) -> f64 {
        self.w.dt(x, t, self.l)
    }
    pub fn w_x(&self, x: f64, t: f64) -> f64 {
        self.w.dx(x, t, self.l)
    }
    pub fn w_xx(&self, x: f64, t: f64) -> f64 {
        self.w.dxx(x, t, self.l)
    }
}

/// Pointwise residuals `(f1, f2, f3)` of the field equations at `(x, t)`.
pub fn forcing_residuals(
    ms: &ManufacturedSolution,
    p: &PhysicalParams,
    x: f64,
    t: f64,
) -> (f64, f64, f64) {
    let f1 = p.rho * ms.u_tt(x, t) - p.mu * ms.u_xx(x, t) - p.b * ms.phi_x(x, t);
    let f2 = -p.j * ms.u_ttx(x, t) - p.delta * ms.phi_xx(x, t)
        + p.b * ms.u_x(x, t)
        + p.xi * ms.phi(x, t)
        + p.d * ms.w_x(x, t);
    let f3 = p.alpha * ms.w_t(x, t) - p.kappa * ms.w_xx(x, t)
        + p.d * ms.phi_tx(x, t)
        + p.k * ms.w(x, t);
    (f1, f2, f3)
}

/// Loads that make `ms` the exact solution: the residuals sampled at the
/// interior nodes and pushed through the mass matrix (consistent load at P1
/// accuracy).
pub fn manufactured_forcing(
    ms: &ManufacturedSolution,
    p: &PhysicalParams,
    mesh: &Mesh1D,
    mats: &FemMatrices,
) -> Forcing {
    let ms = *ms;
    let p = *p;
    let z = mats.z.clone();
    let nodes: Vec<f64> = (0..mesh.interior_count())
        .map(|i| mesh.interior_node(i))
        .collect();
    Forcing::Loads(Box::new(move |t| {
        let mut f1 = Vec::with_capacity(nodes.len());
        let mut f2 = Vec::with_capacity(nodes.len());
        let mut f3 = Vec::with_capacity(nodes.len());
        for &x in &nodes {
            let (a, b, c) = forcing_residuals(&ms, &p, x, t);
            f1.push(a);
            f2.push(b);
            f3.push(c);
        }
        ForcingLoads {
            f_u: z.matvec(&f1),
            f_phi: z.matvec(&f2),
            f_w: z.matvec(&f3),
        }
    }))
}

/// History levels interpolated from the reference fields at `t = 0` and
/// `t = dt`.
pub fn initial_state_from(
    ms: &ManufacturedSolution,
    mesh: &Mesh1D,
    dt: f64,
) -> Result<SolverState, StepError> {
    let u0 = fem::interpolate_nodal(|x| ms.u(x, 0.0), mesh)?;
    let u1 = fem::interpolate_nodal(|x| ms.u(x, dt), mesh)?;
    let phi0 = fem::interpolate_nodal(|x| ms.phi(x, 0.0), mesh)?;
    let phi1 = fem::interpolate_nodal(|x| ms.phi(x, dt), mesh)?;
    let w1 = fem::interpolate_nodal(|x| ms.w(x, dt), mesh)?;
    Ok(SolverState::from_levels(u0, u1, phi0, phi1, w1, dt))
}

/// The six error norms of the a priori estimate, measured in the discrete
/// `Z` (values) and `T` (derivative) forms against nodal interpolants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `||u_hat^n - u_t(t_n)||`
    pub e_uvel: f64,
    /// `||phi_hat^n - phi_t(t_n)||`
    pub e_phivel: f64,
    /// `||(u_h - I_h u)_x||`
    pub e_ux: f64,
    /// `||(phi_h - I_h phi)_x||`
    pub e_phix: f64,
    /// `||phi_h - I_h phi||`
    pub e_phi: f64,
    /// `||w_h - I_h w||`
    pub e_w: f64,
}

impl ErrorNorms {
    pub const COMPONENTS: [&'static str; 6] =
        ["e_uvel", "e_phivel", "e_ux", "e_phix", "e_phi", "e_w"];

    pub fn component(&self, name: &str) -> f64 {
        match name {
            "e_uvel" => self.e_uvel,
            "e_phivel" => self.e_phivel,
            "e_ux" => self.e_ux,
            "e_phix" => self.e_phix,
            "e_phi" => self.e_phi,
            "e_w" => self.e_w,
            _ => panic!("unknown error component {name}"),
        }
    }
}

fn state_errors(
    state: &SolverState,
    ms: &ManufacturedSolution,
    mesh: &Mesh1D,
    mats: &FemMatrices,
    t: f64,
) -> ErrorNorms {
    let m = mesh.interior_count();
    let sample = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        (0..m).map(|i| f(mesh.interior_node(i))).collect()
    };
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    };
    let znorm = |v: &[f64]| mats.z.quad(v, v).max(0.0).sqrt();
    let tnorm = |v: &[f64]| mats.t.quad(v, v).max(0.0).sqrt();

    let du_vel = diff(&state.u_hat(), &sample(&|x| ms.u_t(x, t)));
    let dphi_vel = diff(&state.phi_hat(), &sample(&|x| ms.phi_t(x, t)));
    let du = diff(&state.a_curr, &sample(&|x| ms.u(x, t)));
    let dphi = diff(&state.b_curr, &sample(&|x| ms.phi(x, t)));
    let dw = diff(&state.c_curr, &sample(&|x| ms.w(x, t)));

    ErrorNorms {
        e_uvel: znorm(&du_vel),
        e_phivel: znorm(&dphi_vel),
        e_ux: tnorm(&du),
        e_phix: tnorm(&dphi),
        e_phi: znorm(&dphi),
        e_w: znorm(&dw),
    }
}

/// Error norms at recorded time `t` (a stored frame or the final step).
pub fn error_norms(
    traj: &Trajectory,
    ms: &ManufacturedSolution,
    t: f64,
) -> Result<ErrorNorms, VerifyError> {
    let n = (t / traj.dt).round() as usize;
    let state = if traj.final_state.n == n {
        &traj.final_state
    } else {
        &traj
            .frame_at_level(n)
            .ok_or(VerifyError::StepNotRecorded { t })?
            .state
    };
    let mats = fem::assemble_matrices(&traj.mesh);
    Ok(state_errors(state, ms, &traj.mesh, &mats, n as f64 * traj.dt))
}

/// One refinement level of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelErrors {
    pub h: f64,
    pub dt: f64,
    pub errors: ErrorNorms,
}

/// Least-squares slopes of `log(error)` against the refined scale, one per
/// error component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedOrders {
    pub e_uvel: f64,
    pub e_phivel: f64,
    pub e_ux: f64,
    pub e_phix: f64,
    pub e_phi: f64,
    pub e_w: f64,
}

impl FittedOrders {
    pub fn component(&self, name: &str) -> f64 {
        match name {
            "e_uvel" => self.e_uvel,
            "e_phivel" => self.e_phivel,
            "e_ux" => self.e_ux,
            "e_phix" => self.e_phix,
            "e_phi" => self.e_phi,
            "e_w" => self.e_w,
            _ => panic!("unknown error component {name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub levels: Vec<LevelErrors>,
    pub orders: FittedOrders,
}

/// Orders fitted from two sweeps: `h` halved with `dt` frozen fine, and
/// `dt` halved with `h` frozen fine.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub spatial: SweepResult,
    pub temporal: SweepResult,
}

fn fit_orders(levels: &[LevelErrors], scale_of: impl Fn(&LevelErrors) -> f64) -> FittedOrders {
    let xs: Vec<f64> = levels.iter().map(|l| scale_of(l).ln()).collect();
    let slope = |pick: &dyn Fn(&ErrorNorms) -> f64| -> f64 {
        let ys: Vec<f64> = levels
            .iter()
            .map(|l| pick(&l.errors).max(1e-300).ln())
            .collect();
        least_squares_line(&xs, &ys).0
    };
    FittedOrders {
        e_uvel: slope(&|e| e.e_uvel),
        e_phivel: slope(&|e| e.e_phivel),
        e_ux: slope(&|e| e.e_ux),
        e_phix: slope(&|e| e.e_phix),
        e_phi: slope(&|e| e.e_phi),
        e_w: slope(&|e| e.e_w),
    }
}

fn run_level(
    p: &PhysicalParams,
    ms: &ManufacturedSolution,
    s: usize,
    dt: f64,
    t_final: f64,
) -> Result<LevelErrors, VerifyError> {
    let mesh = fem::build_mesh(p.l, s).map_err(StepError::from)?;
    let mats = fem::assemble_matrices(&mesh);
    let forcing = manufactured_forcing(ms, p, &mesh, &mats);
    let init = initial_state_from(ms, &mesh, dt)?;
    // Only the final level is measured; keep frame storage minimal.
    let traj = run_from_state(p, mesh, t_final, usize::MAX, init, &forcing)?;
    let t_end = traj.final_state.n as f64 * dt;
    let errors = error_norms(&traj, ms, t_end)?;
    Ok(LevelErrors {
        h: traj.mesh.h,
        dt,
        errors,
    })
}

/// Runs both sweeps concurrently (one thread per level) and fits the
/// per-component orders. The base configuration supplies params, the
/// coarsest `s` and `dt`, and the common final time.
pub fn convergence_study(
    base: &RunConfig,
    ms: &ManufacturedSolution,
    levels: usize,
) -> Result<ConvergenceReport, VerifyError> {
    if levels < 3 {
        return Err(VerifyError::TooFewLevels(levels));
    }
    let fine = 1usize << (levels - 1);
    let dt_frozen = base.dt / (fine * 8) as f64;
    let s_frozen = base.s * fine * 8;
    let p = base.params;
    let t_final = base.t_final;

    let spatial_cases: Vec<(usize, f64)> =
        (0..levels).map(|j| (base.s << j, dt_frozen)).collect();
    let temporal_cases: Vec<(usize, f64)> = (0..levels)
        .map(|j| (s_frozen, base.dt / (1usize << j) as f64))
        .collect();

    let run_sweep = |cases: &[(usize, f64)]| -> Result<Vec<LevelErrors>, VerifyError> {
        thread::scope(|scope| {
            let handles: Vec<_> = cases
                .iter()
                .map(|&(s, dt)| scope.spawn(move || run_level(&p, ms, s, dt, t_final)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("level worker panicked"))
                .collect()
        })
    };

    let spatial_levels = run_sweep(&spatial_cases)?;
    let temporal_levels = run_sweep(&temporal_cases)?;

    let spatial_orders = fit_orders(&spatial_levels, |l| l.h);
    let temporal_orders = fit_orders(&temporal_levels, |l| l.dt);
    Ok(ConvergenceReport {
        spatial: SweepResult {
            levels: spatial_levels,
            orders: spatial_orders,
        },
        temporal: SweepResult {
            levels: temporal_levels,
            orders: temporal_orders,
        },
    })
}
