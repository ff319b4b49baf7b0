//! Discrete energy, step dissipation check, Lyapunov functionals, and
//! decay-rate fitting.
//!
//! The discrete energy at level `n` is
//!
//! ```text
//! E_n = 1/2 ( rho ||u_hat||^2 + (J rho / b) ||sigma u_hat||^2
//!           + (mu - b^2/xi) ||u_x||^2 + (J mu / b) ||u_hat_x||^2
//!           + delta ||phi_x||^2 + ||(b/sqrt(xi)) u_x + sqrt(xi) phi||^2
//!           + alpha ||w||^2 )
//! ```
//!
//! with backward-difference velocities. Every norm is the exact `L^2` norm
//! of the underlying P1 (or piecewise-constant derivative) function: plain
//! fields through the mass form `v^T Z v`, derivatives through `v^T T v`,
//! mixed products `∫ v_x q` through the convection matrix `X`, and the
//! coupled term by elementwise Gauss quadrature of the actual piecewise
//! integrand (exact for its quadratic degree). Keeping everything at
//! quadrature-exact level is what lets the dissipation and equivalence
//! inequalities be asserted with tight tolerances.

use thiserror::Error;

use crate::fem::FemMatrices;
use crate::model::{LyapunovConstants, PhysicalParams};
use crate::timestepper::{SolverState, Trajectory};

/// Relative tolerance of the per-step dissipation inequality.
pub const DISSIPATION_TOL_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagError {
    #[error("state at level {0} lacks the history needed (first energy level is n = 2)")]
    InsufficientHistory(usize),
    #[error("energy sample {0} is not positive; cannot fit log-energy")]
    NonPositiveEnergy(usize),
    #[error("fit window has {0} samples, need at least 3")]
    WindowTooSmall(usize),
    #[error("tail fraction {0} outside (0, 1]")]
    InvalidTailFraction(f64),
}

/// The seven quadratic terms of `E_n` and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `1/2 rho ||u_hat||^2`
    pub kinetic: f64,
    /// `1/2 (J rho / b) ||sigma u_hat||^2`
    pub accel: f64,
    /// `1/2 (mu - b^2/xi) ||u_x||^2`
    pub elastic: f64,
    /// `1/2 (J mu / b) ||u_hat_x||^2`
    pub vel_grad: f64,
    /// `1/2 delta ||phi_x||^2`
    pub porous_grad: f64,
    /// `1/2 ||(b/sqrt(xi)) u_x + sqrt(xi) phi||^2`
    pub coupled: f64,
    /// `1/2 alpha ||w||^2`
    pub thermal: f64,
    pub total: f64,
}

/// Exact `L^2` norm squared of `(b/sqrt(xi)) u_x + sqrt(xi) phi` where `u`
/// and `phi` are interior nodal vectors (boundary values zero). The
/// integrand is quadratic on each element, so 2-point Gauss is exact; as a
/// sum of weighted squares the result is nonnegative in floating point.
pub fn coupled_norm_sq(u: &[f64], phi: &[f64], b: f64, xi: f64, h: f64) -> f64 {
    let m = u.len();
    debug_assert_eq!(phi.len(), m);
    let sx = xi.sqrt();
    // Local Gauss points on [0,1], weight 1/2 each.
    let g1 = 0.5 - 0.5 / 3.0f64.sqrt();
    let g2 = 0.5 + 0.5 / 3.0f64.sqrt();
    let mut acc = 0.0;
    for e in 0..=m {
        let (u_l, phi_l) = if e == 0 { (0.0, 0.0) } else { (u[e - 1], phi[e - 1]) };
        let (u_r, phi_r) = if e == m { (0.0, 0.0) } else { (u[e], phi[e]) };
        let ux = (u_r - u_l) / h;
        let eval = |s: f64| {
            let p = phi_l + (phi_r - phi_l) * s;
            let g = b / sx * ux + sx * p;
            g * g
        };
        acc += h * 0.5 * (eval(g1) + eval(g2));
    }
    acc
}

/// Evaluates all seven energy terms; requires `n >= 2` so the second
/// difference `sigma u_hat` exists.
pub fn discrete_energy(
    state: &SolverState,
    p: &PhysicalParams,
    mats: &FemMatrices,
) -> Result<EnergyBreakdown, DiagError> {
    if state.n < 2 {
        return Err(DiagError::InsufficientHistory(state.n));
    }
    let u_hat = state.u_hat();
    let sigma = state.sigma_u_hat();
    let kinetic = 0.5 * p.rho * mats.z.quad(&u_hat, &u_hat);
    let accel = 0.5 * p.j * p.rho / p.b * mats.z.quad(&sigma, &sigma);
    let elastic = 0.5 * p.reduced_modulus() * mats.t.quad(&state.a_curr, &state.a_curr);
    let vel_grad = 0.5 * p.j * p.mu / p.b * mats.t.quad(&u_hat, &u_hat);
    let porous_grad = 0.5 * p.delta * mats.t.quad(&state.b_curr, &state.b_curr);
    let coupled = 0.5 * coupled_norm_sq(&state.a_curr, &state.b_curr, p.b, p.xi, mats.h);
    let thermal = 0.5 * p.alpha * mats.z.quad(&state.c_curr, &state.c_curr);
    Ok(EnergyBreakdown {
        kinetic,
        accel,
        elastic,
        vel_grad,
        porous_grad,
        coupled,
        thermal,
        total: kinetic + accel + elastic + vel_grad + porous_grad + coupled + thermal,
    })
}

/// Outcome of the per-step dissipation inequality
/// `(E_n - E_{n-1})/dt + kappa ||w_x^n||^2 + k ||w^n||^2 <= 0`
/// (up to a relative rounding allowance). Violations are reported, never
/// raised as errors.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    /// Largest raw residual `r_n` over the trajectory.
    pub max_residual: f64,
    /// Largest `r_n / (E_{n-1}/dt)` over steps with positive `E_{n-1}`.
    pub max_normalized: f64,
    /// Time levels where `r_n` exceeded the tolerance.
    pub violations: Vec<usize>,
    /// Number of step pairs checked.
    pub steps_checked: usize,
}

impl DissipationReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn dissipation_check(traj: &Trajectory, p: &PhysicalParams) -> DissipationReport {
    let dt = traj.dt;
    let mut max_residual = f64::NEG_INFINITY;
    let mut max_normalized = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    let mut steps_checked = 0;
    for pair in traj.records.windows(2) {
        let (prev, curr) = (&pair[0], &pair[1]);
        if curr.n != prev.n + 1 {
            continue;
        }
        steps_checked += 1;
        let r = (curr.energy.total - prev.energy.total) / dt
            + p.kappa * curr.w_h1_sq
            + p.k * curr.w_l2_sq;
        max_residual = max_residual.max(r);
        let scale = prev.energy.total / dt;
        if scale > 0.0 {
            max_normalized = max_normalized.max(r / scale);
            if r > DISSIPATION_TOL_REL * scale {
                violations.push(curr.n);
            }
        } else if r > 0.0 {
            violations.push(curr.n);
        }
    }
    DissipationReport {
        max_residual,
        max_normalized,
        violations,
        steps_checked,
    }
}

/// The two auxiliary functionals, the Lyapunov functional, and its
/// equivalence margins against `nu1 E <= L <= nu2 E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovValues {
    pub energy: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    /// `L - nu1 E`; nonnegative when the lower equivalence holds.
    pub margin_lower: f64,
    /// `nu2 E - L`; nonnegative when the upper equivalence holds.
    pub margin_upper: f64,
}

impl LyapunovValues {
    /// `min(L - nu1 E, nu2 E - L)`.
    pub fn margin(&self) -> f64 {
        self.margin_lower.min(self.margin_upper)
    }
}

/// Evaluates `F`, `G`, and `L = N1 E + F + N2 G` on a discrete state, with
/// `u_t` read as `u_hat` and `u_tt` as `sigma u_hat`.
pub fn lyapunov_values(
    state: &SolverState,
    p: &PhysicalParams,
    mats: &FemMatrices,
    consts: &LyapunovConstants,
) -> Result<LyapunovValues, DiagError> {
    let breakdown = discrete_energy(state, p, mats)?;
    let e = breakdown.total;
    let u_hat = state.u_hat();
    let sx = p.xi.sqrt();

    let f = p.rho * mats.z.quad(&u_hat, &state.a_curr)
        + p.j * p.mu / p.b * mats.t.quad(&u_hat, &state.a_curr);

    // ∫ u_hat_x phi through the convection matrix.
    let mixed = mats.x.quad(&state.b_curr, &u_hat);
    let g = -p.j * (p.b / sx * mats.t.quad(&u_hat, &state.a_curr) + sx * mixed)
        - p.delta * p.rho * p.b / (p.mu * sx) * mixed
        + p.alpha * consts.c1 / p.d * mats.z.quad(&state.c_curr, &u_hat);

    let l = consts.n1 * e + f + consts.n2 * g;
    Ok(LyapunovValues {
        energy: e,
        f,
        g,
        l,
        margin_lower: l - consts.nu1 * e,
        margin_upper: consts.nu2 * e - l,
    })
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, r2)`.
/// A zero-variance `y` is a perfect horizontal fit (`r2 = 1`).
pub(crate) fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut y_sq = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let fit = slope * x + intercept;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - my) * (y - my);
        y_sq += y * y;
    }
    // Variance at rounding scale means the data is constant: perfect flat fit.
    let r2 = if ss_tot > 1e-28 * y_sq {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, intercept, r2.clamp(0.0, 1.0))
}

/// Exponential decay rate fitted on the tail of an energy series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `-slope` of the least-squares line through `(t, log E)`.
    pub omega_hat: f64,
    pub log_intercept: f64,
    pub r_squared: f64,
    /// Number of samples in the fitted window.
    pub window_len: usize,
}

/// Fits `log E` against `t` on the last `tail_fraction` of the samples.
pub fn fit_decay_rate(series: &[(f64, f64)], tail_fraction: f64) -> Result<DecayFit, DiagError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(DiagError::InvalidTailFraction(tail_fraction));
    }
    let len = series.len();
    let window = ((len as f64 * tail_fraction).ceil() as usize).min(len);
    if window < 3 {
        return Err(DiagError::WindowTooSmall(window));
    }
    let tail = &series[len - window..];
    for (i, (_, e)) in tail.iter().enumerate() {
        if *e <= 0.0 || e.is_nan() {
            return Err(DiagError::NonPositiveEnergy(len - window + i));
        }
    }
    let xs: Vec<f64> = tail.iter().map(|(t, _)| *t).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, e)| e.ln()).collect();
    let (slope, intercept, r2) = least_squares_line(&xs, &ys);
    Ok(DecayFit {
        omega_hat: -slope,
        log_intercept: intercept,
        r_squared: r2,
        window_len: window,
    })
}

/// Finite-difference excess of the trajectory over the continuous-time
/// bounds on `dF/dt` and `dG/dt`. These carry `O(dt)` commutation error
/// with no stated tolerance, so they are logged, never asserted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaRateDiagnostics {
    /// Largest `(F_n - F_{n-1})/dt - bound_F(t_n)` over adjacent frames.
    pub max_f_excess: f64,
    /// Largest `(G_n - G_{n-1})/dt - bound_G(t_n)` over adjacent frames.
    pub max_g_excess: f64,
    pub pairs: usize,
}

pub fn lemma_rate_diagnostics(
    traj: &Trajectory,
    p: &PhysicalParams,
    mats: &FemMatrices,
    consts: &LyapunovConstants,
) -> Result<Option<LemmaRateDiagnostics>, DiagError> {
    let dt = traj.dt;
    let sx = p.xi.sqrt();
    let mut max_f = f64::NEG_INFINITY;
    let mut max_g = f64::NEG_INFINITY;
    let mut pairs = 0;
    for pair in traj.frames.windows(2) {
        let (a, b) = (&pair[0].state, &pair[1].state);
        if b.n != a.n + 1 || a.n < 2 {
            continue;
        }
        pairs += 1;
        let va = lyapunov_values(a, p, mats, consts)?;
        let vb = lyapunov_values(b, p, mats, consts)?;

        let u_hat = b.u_hat();
        let sigma = b.sigma_u_hat();
        let uhat_t = mats.t.quad(&u_hat, &u_hat);
        let uhat_z = mats.z.quad(&u_hat, &u_hat);
        let sigma_z = mats.z.quad(&sigma, &sigma);
        let ux = mats.t.quad(&b.a_curr, &b.a_curr);
        let phix = mats.t.quad(&b.b_curr, &b.b_curr);
        let coup = coupled_norm_sq(&b.a_curr, &b.b_curr, p.b, p.xi, mats.h);
        let w_z = mats.z.quad(&b.c_curr, &b.c_curr);
        let w_t = mats.t.quad(&b.c_curr, &b.c_curr);

        let bound_f = (p.j * p.mu / p.b + 2.0 * p.rho * consts.cp) * uhat_t
            - p.rho * uhat_z
            - p.reduced_modulus() * ux
            - p.delta / 2.0 * phix
            - p.j * p.rho / p.b * sigma_z
            - coup
            + p.d * p.d * consts.cp / (2.0 * p.delta) * w_t;
        let bound_g = -(p.j * p.b / (2.0 * sx)) * uhat_t
            + consts.eps3 / 2.0 * uhat_z
            + consts.eps1 / 2.0 * sigma_z
            - p.delta * p.reduced_modulus() * sx / p.mu * phix
            - sx / 2.0 * coup
            + consts.c2 * w_z
            + consts.c3 * w_t;

        max_f = max_f.max((vb.f - va.f) / dt - bound_f);
        max_g = max_g.max((vb.g - va.g) / dt - bound_g);
    }
    if pairs == 0 {
        return Ok(None);
    }
    Ok(Some(LemmaRateDiagnostics {
        max_f_excess: max_f,
        max_g_excess: max_g,
        pairs,
    }))
}
