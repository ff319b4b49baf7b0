//! Fully implicit coupled time stepping for the three-field system.
//!
//! Each step solves one block-tridiagonal linear system for the nodal
//! coefficients `(A^n, B^n, C^n)` of `(u, phi, w)`:
//!
//! ```text
//! (rho/dt^2) Z A^n + mu T A^n + b Y B^n                      = (rho/dt^2) Z (2A^{n-1} - A^{n-2}) + f_u
//! (J/dt^2)  Y A^n + delta T B^n + b X A^n + xi Z B^n + d X C^n = (J/dt^2)  Y (2A^{n-1} - A^{n-2}) + f_phi
//! (alpha/dt) Z C^n + kappa T C^n + (d/dt) X B^n + k Z C^n    = (alpha/dt) Z C^{n-1} + (d/dt) X B^{n-1} + f_w
//! ```
//!
//! The displacement carries a second difference, so two history levels are
//! supplied as initial data and the first solved level is `n = 2`. The step
//! matrix depends only on `(params, mesh, dt)` and is factored once per run.
//! Discrete velocities are backward differences of the stored levels, never
//! independent unknowns.

use thiserror::Error;

use crate::band::{BandError, BandLu, BandMatrix};
use crate::energy::{self, DiagError, EnergyBreakdown};
use crate::fem::{self, FemError, FemMatrices, Mesh1D, NodalVector};
use crate::model::PhysicalParams;

/// Relative residual bound enforced after every solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solver(#[from] BandError),
    #[error("step {n}: relative residual {residual:e} exceeds {RESIDUAL_TOL:e}")]
    ResidualTooLarge { n: usize, residual: f64 },
    #[error(transparent)]
    Diagnostics(#[from] DiagError),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Nodal history of the three fields.
///
/// `n` is the most recently computed (or supplied) time level; `*_curr`
/// holds level `n`, `*_prev` level `n-1`, and `a_prev2` level `n-2`.
/// Right after [`init_history`] the state sits at `n = 1` with both
/// `u`-history slots filled from the initial data, so the first call to
/// [`Stepper::advance`] produces level 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub a_curr: NodalVector,
    pub a_prev: NodalVector,
    pub a_prev2: NodalVector,
    pub b_curr: NodalVector,
    pub b_prev: NodalVector,
    pub c_curr: NodalVector,
    pub c_prev: NodalVector,
    pub n: usize,
    pub dt: f64,
}

fn diff_scaled(a: &[f64], b: &[f64], inv: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y) * inv).collect()
}

impl SolverState {
    /// Builds the level-1 state from nodal initial data
    /// `(u^0, u^1, phi^0, phi^1, w^1)`.
    pub fn from_levels(
        u0: NodalVector,
        u1: NodalVector,
        phi0: NodalVector,
        phi1: NodalVector,
        w1: NodalVector,
        dt: f64,
    ) -> Self {
        let m = u0.len();
        assert!(
            [u1.len(), phi0.len(), phi1.len(), w1.len()].iter().all(|l| *l == m),
            "initial levels must share one interior dimension"
        );
        SolverState {
            a_prev2: u0.clone(),
            a_prev: u0,
            a_curr: u1,
            b_prev: phi0,
            b_curr: phi1,
            c_prev: w1.clone(),
            c_curr: w1,
            n: 1,
            dt,
        }
    }

    /// Interior DOF count.
    pub fn m(&self) -> usize {
        self.a_curr.len()
    }

    /// Backward-difference velocity `(u^n - u^{n-1})/dt`.
    pub fn u_hat(&self) -> Vec<f64> {
        diff_scaled(&self.a_curr, &self.a_prev, 1.0 / self.dt)
    }

    /// Previous-level velocity `(u^{n-1} - u^{n-2})/dt`; meaningful for `n >= 2`.
    pub fn u_hat_prev(&self) -> Vec<f64> {
        diff_scaled(&self.a_prev, &self.a_prev2, 1.0 / self.dt)
    }

    /// Second difference `(u_hat^n - u_hat^{n-1})/dt`; meaningful for `n >= 2`.
    pub fn sigma_u_hat(&self) -> Vec<f64> {
        let inv = 1.0 / self.dt;
        self.a_curr
            .iter()
            .zip(&self.a_prev)
            .zip(&self.a_prev2)
            .map(|((a, b), c)| ((a - b) * inv - (b - c) * inv) * inv)
            .collect()
    }

    /// `(phi^n - phi^{n-1})/dt`.
    pub fn phi_hat(&self) -> Vec<f64> {
        diff_scaled(&self.b_curr, &self.b_prev, 1.0 / self.dt)
    }
}

/// Assembled load vectors added to the right-hand side of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingLoads {
    pub f_u: NodalVector,
    pub f_phi: NodalVector,
    pub f_w: NodalVector,
}

/// Time-dependent nodal loads; `Zero` reproduces the homogeneous system
/// exactly (nothing is added, not even zeros).
pub enum Forcing {
    Zero,
    Loads(Box<dyn Fn(f64) -> ForcingLoads + Send + Sync>),
}

impl Forcing {
    pub fn eval(&self, t: f64) -> Option<ForcingLoads> {
        match self {
            Forcing::Zero => None,
            Forcing::Loads(f) => Some(f(t)),
        }
    }
}

/// Named initial-profile presets accepted by configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Zero,
    /// `x (l - x) / l^2`; reduces to `x (1 - x)` on the unit interval.
    Parabola,
    /// `sin(m pi x / l)`.
    Sine(u32),
}

impl Profile {
    pub fn eval(&self, x: f64, l: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Parabola => x * (l - x) / (l * l),
            Profile::Sine(m) => (*m as f64 * std::f64::consts::PI * x / l).sin(),
        }
    }
}

/// Everything a homogeneous run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub s: usize,
    pub dt: f64,
    pub t_final: f64,
    pub init_u0: Profile,
    pub init_u1: Profile,
    pub init_phi0: Profile,
    pub init_phi1: Profile,
    pub init_w0: Profile,
    /// Field frames are stored every `output_every`-th step; energies are
    /// recorded at every step regardless.
    pub output_every: usize,
}

/// Interpolates the configured profiles and positions the state so the
/// first solved step is `n = 2`. The scheme needs `w` at level 1 but the
/// configuration supplies `w^0` only, so `w^1 := w^0`.
pub fn init_history(cfg: &RunConfig, mesh: &Mesh1D) -> Result<SolverState, StepError> {
    let l = cfg.params.l;
    let u0 = fem::interpolate_nodal(|x| cfg.init_u0.eval(x, l), mesh)?;
    let u1 = fem::interpolate_nodal(|x| cfg.init_u1.eval(x, l), mesh)?;
    let phi0 = fem::interpolate_nodal(|x| cfg.init_phi0.eval(x, l), mesh)?;
    let phi1 = fem::interpolate_nodal(|x| cfg.init_phi1.eval(x, l), mesh)?;
    let w1 = fem::interpolate_nodal(|x| cfg.init_w0.eval(x, l), mesh)?;
    Ok(SolverState::from_levels(u0, u1, phi0, phi1, w1, cfg.dt))
}

/// Unknown ordering: node-major interleave, `index(i, field) = 3*i + field`
/// with fields `0 = u, 1 = phi, 2 = w`. All blocks are tridiagonal in the
/// node index, giving bandwidths `kl = ku = 5`.
const BANDWIDTH: usize = 5;

fn add_block(bm: &mut BandMatrix, tri: &crate::fem::Tridiag, coef: f64, fr: usize, fc: usize) {
    let m = tri.n();
    for i in 0..m {
        bm.add(3 * i + fr, 3 * i + fc, coef * tri.diag[i]);
        if i + 1 < m {
            bm.add(3 * i + fr, 3 * (i + 1) + fc, coef * tri.sup[i]);
            bm.add(3 * (i + 1) + fr, 3 * i + fc, coef * tri.sub[i]);
        }
    }
}

/// The time-independent step matrix for given parameters, operators, and
/// time step.
pub fn assemble_step_matrix(p: &PhysicalParams, mats: &FemMatrices, dt: f64) -> BandMatrix {
    let m = mats.m;
    let mut bm = BandMatrix::zeros(3 * m, BANDWIDTH, BANDWIDTH);
    let dt2 = dt * dt;
    add_block(&mut bm, &mats.z, p.rho / dt2, 0, 0);
    add_block(&mut bm, &mats.t, p.mu, 0, 0);
    add_block(&mut bm, &mats.y, p.b, 0, 1);
    add_block(&mut bm, &mats.y, p.j / dt2, 1, 0);
    add_block(&mut bm, &mats.x, p.b, 1, 0);
    add_block(&mut bm, &mats.t, p.delta, 1, 1);
    add_block(&mut bm, &mats.z, p.xi, 1, 1);
    add_block(&mut bm, &mats.x, p.d, 1, 2);
    add_block(&mut bm, &mats.x, p.d / dt, 2, 1);
    add_block(&mut bm, &mats.z, p.alpha / dt + p.k, 2, 2);
    add_block(&mut bm, &mats.t, p.kappa, 2, 2);
    bm
}

/// Right-hand side for solving level `state.n + 1`, with optional loads
/// evaluated at the new time level.
fn assemble_step_rhs(
    state: &SolverState,
    p: &PhysicalParams,
    mats: &FemMatrices,
    forcing: &Forcing,
) -> Vec<f64> {
    let m = state.m();
    let dt = state.dt;
    let dt2 = dt * dt;
    let u_star: Vec<f64> = state
        .a_curr
        .iter()
        .zip(&state.a_prev)
        .map(|(c, p)| 2.0 * c - p)
        .collect();
    let mut r_u = mats.z.matvec(&u_star);
    let mut r_phi = mats.y.matvec(&u_star);
    for i in 0..m {
        r_u[i] *= p.rho / dt2;
        r_phi[i] *= p.j / dt2;
    }
    let zc = mats.z.matvec(&state.c_curr);
    let xb = mats.x.matvec(&state.b_curr);
    let mut r_w: Vec<f64> = (0..m)
        .map(|i| p.alpha / dt * zc[i] + p.d / dt * xb[i])
        .collect();
    if let Some(loads) = forcing.eval((state.n + 1) as f64 * dt) {
        for i in 0..m {
            r_u[i] += loads.f_u[i];
            r_phi[i] += loads.f_phi[i];
            r_w[i] += loads.f_w[i];
        }
    }
    let mut rhs = vec![0.0; 3 * m];
    for i in 0..m {
        rhs[3 * i] = r_u[i];
        rhs[3 * i + 1] = r_phi[i];
        rhs[3 * i + 2] = r_w[i];
    }
    rhs
}

/// Assembles the full linear system whose solution is the next level
/// `(A^{n+1}, B^{n+1}, C^{n+1})` given the history in `state`.
pub fn assemble_step_system(
    state: &SolverState,
    p: &PhysicalParams,
    mats: &FemMatrices,
    forcing: &Forcing,
) -> (BandMatrix, Vec<f64>) {
    (
        assemble_step_matrix(p, mats, state.dt),
        assemble_step_rhs(state, p, mats, forcing),
    )
}

/// Cached factorization of the step matrix; reusable across every step of a
/// run since the matrix depends only on `(params, mesh, dt)`.
pub struct Stepper {
    p: PhysicalParams,
    matrix: BandMatrix,
    lu: BandLu,
    m: usize,
}

impl Stepper {
    pub fn new(p: &PhysicalParams, mats: &FemMatrices, dt: f64) -> Result<Self, StepError> {
        let matrix = assemble_step_matrix(p, mats, dt);
        let lu = matrix.clone().factor()?;
        Ok(Stepper {
            p: *p,
            matrix,
            lu,
            m: mats.m,
        })
    }

    /// Solves one coupled step and rotates the history. The solution is
    /// accepted only if the relative residual of the solved system is at
    /// most [`RESIDUAL_TOL`] (zero right-hand sides must yield the zero
    /// solution).
    pub fn advance(
        &self,
        state: &SolverState,
        mats: &FemMatrices,
        forcing: &Forcing,
    ) -> Result<SolverState, StepError> {
        let m = self.m;
        debug_assert_eq!(state.m(), m);
        let rhs = assemble_step_rhs(state, &self.p, mats, forcing);
        let sol = self.lu.solve(&rhs)?;

        let n_next = state.n + 1;
        let rhs_norm: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let residual_vec = self.matrix.matvec(&sol);
        let res_norm: f64 = residual_vec
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if rhs_norm == 0.0 {
            let sol_norm: f64 = sol.iter().map(|v| v * v).sum::<f64>().sqrt();
            if sol_norm != 0.0 {
                return Err(StepError::ResidualTooLarge {
                    n: n_next,
                    residual: sol_norm,
                });
            }
        } else if res_norm > RESIDUAL_TOL * rhs_norm {
            return Err(StepError::ResidualTooLarge {
                n: n_next,
                residual: res_norm / rhs_norm,
            });
        }

        let mut a_new = Vec::with_capacity(m);
        let mut b_new = Vec::with_capacity(m);
        let mut c_new = Vec::with_capacity(m);
        for i in 0..m {
            a_new.push(sol[3 * i]);
            b_new.push(sol[3 * i + 1]);
            c_new.push(sol[3 * i + 2]);
        }
        Ok(SolverState {
            a_prev2: state.a_prev.clone(),
            a_prev: state.a_curr.clone(),
            a_curr: a_new,
            b_prev: state.b_curr.clone(),
            b_curr: b_new,
            c_prev: state.c_curr.clone(),
            c_curr: c_new,
            n: n_next,
            dt: state.dt,
        })
    }
}

/// Per-step scalar diagnostics; recorded at every solved level.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub energy: EnergyBreakdown,
    /// `||w^n||^2` (Z-form), kept for the dissipation check.
    pub w_l2_sq: f64,
    /// `||w_x^n||^2` (T-form).
    pub w_h1_sq: f64,
}

/// Full state snapshot stored at the output cadence.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub state: SolverState,
}

/// Result of a run: per-step energy records, cadenced field frames, and
/// the final state.
pub struct Trajectory {
    pub params: PhysicalParams,
    pub mesh: Mesh1D,
    pub dt: f64,
    pub records: Vec<StepRecord>,
    pub frames: Vec<Frame>,
    pub final_state: SolverState,
}

impl Trajectory {
    /// `(t_n, E_n)` pairs for decay fitting.
    pub fn energy_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.energy.total)).collect()
    }

    /// Frame whose state sits at time level `n`, if recorded.
    pub fn frame_at_level(&self, n: usize) -> Option<&Frame> {
        self.frames.iter().find(|f| f.state.n == n)
    }
}

/// Runs the homogeneous system from configured profiles.
///
/// Executes `round(t_final/dt) - 1` coupled solves for levels
/// `n = 2 ..= round(t_final/dt)`. Identical configurations produce
/// bit-identical trajectories.
pub fn run(cfg: &RunConfig) -> Result<Trajectory, StepError> {
    let mesh = fem::build_mesh(cfg.params.l, cfg.s)?;
    let init = init_history(cfg, &mesh)?;
    run_from_state(&cfg.params, mesh, cfg.t_final, cfg.output_every, init, &Forcing::Zero)
}

/// Runs from explicit initial levels, with optional forcing. This is the
/// entry point manufactured-solution studies use.
pub fn run_from_state(
    p: &PhysicalParams,
    mesh: Mesh1D,
    t_final: f64,
    output_every: usize,
    init: SolverState,
    forcing: &Forcing,
) -> Result<Trajectory, StepError> {
    let dt = init.dt;
    if dt <= 0.0 || !dt.is_finite() {
        return Err(StepError::InvalidConfig("dt must be positive and finite"));
    }
    if output_every == 0 {
        return Err(StepError::InvalidConfig("output_every must be at least 1"));
    }
    let n_total = (t_final / dt).round();
    if !n_total.is_finite() || n_total < 2.0 {
        return Err(StepError::InvalidConfig(
            "t_final must be finite and at least 2*dt",
        ));
    }
    let n_total = n_total as usize;

    let mats = fem::assemble_matrices(&mesh);
    let stepper = Stepper::new(p, &mats, dt)?;
    let mut state = init;
    let mut records = Vec::with_capacity(n_total - 1);
    let mut frames = Vec::new();
    for n in 2..=n_total {
        state = stepper.advance(&state, &mats, forcing)?;
        debug_assert_eq!(state.n, n);
        let t = n as f64 * dt;
        let energy = energy::discrete_energy(&state, p, &mats)?;
        records.push(StepRecord {
            n,
            t,
            energy,
            w_l2_sq: mats.z.quad(&state.c_curr, &state.c_curr),
            w_h1_sq: mats.t.quad(&state.c_curr, &state.c_curr),
        });
        if (n - 2) % output_every == 0 {
            frames.push(Frame {
                t,
                state: state.clone(),
            });
        }
    }
    Ok(Trajectory {
        params: *p,
        mesh,
        dt,
        records,
        frames,
        final_state: state,
    })
}
