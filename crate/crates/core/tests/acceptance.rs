//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured quantities. Oracles used here (Gauss quadrature,
//! dense elimination) are local to this file, independent of the library
//! implementation they check.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use porobeam_core::energy::{
    discrete_energy, dissipation_check, fit_decay_rate, lyapunov_values, DISSIPATION_TOL_REL,
};
use porobeam_core::fem::{assemble_matrices, build_mesh};
use porobeam_core::model::{lyapunov_constants, PhysicalParams};
use porobeam_core::timestepper::{
    assemble_step_system, run, Forcing, Profile, RunConfig, SolverState, Stepper,
};
use porobeam_core::verification::{convergence_study, ManufacturedSolution};

fn demo_params() -> PhysicalParams {
    PhysicalParams {
        rho: 1e-3,
        mu: 1e-2,
        b: 1e-3,
        j: 1e-3,
        delta: 1e-3,
        xi: 1e-3,
        d: 1e-3,
        alpha: 1e-3,
        kappa: 1e-3,
        k: 1.0,
        l: 1.0,
    }
    .validated()
    .unwrap()
}

fn demo_config() -> RunConfig {
    RunConfig {
        params: demo_params(),
        s: 11,
        dt: 1.0 / 22.0,
        t_final: 25.0,
        init_u0: Profile::Parabola,
        init_u1: Profile::Parabola,
        init_phi0: Profile::Parabola,
        init_phi1: Profile::Parabola,
        init_w0: Profile::Parabola,
        output_every: 1,
    }
}

fn random_valid_params(rng: &mut impl Rng) -> PhysicalParams {
    let mut draw = |lo: f64, hi: f64| -> f64 {
        let (llo, lhi) = (lo.ln(), hi.ln());
        (llo + rng.gen::<f64>() * (lhi - llo)).exp()
    };
    let mu = draw(1e-3, 1e1);
    let xi = draw(1e-3, 1e1);
    let b = 0.9 * (mu * xi).sqrt() * draw(1e-2, 1.0);
    PhysicalParams {
        rho: draw(1e-3, 1e1),
        mu,
        b,
        j: draw(1e-3, 1e1),
        delta: draw(1e-3, 1e1),
        xi,
        d: draw(1e-3, 1e1),
        alpha: draw(1e-3, 1e1),
        kappa: draw(1e-3, 1e1),
        k: draw(1e-3, 1e1),
        l: draw(0.2, 5.0),
    }
    .validated()
    .unwrap()
}

#[test]
fn criterion_1_reference_run_decays_with_linear_log_tail() {
    let started = Instant::now();
    let traj = run(&demo_config()).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "reference run took {elapsed:.2} s, budget 5 s");

    let es: Vec<f64> = traj.records.iter().map(|r| r.energy.total).collect();
    // Records start at n = 2, so this asserts E_n < E_{n-1} for all n >= 3.
    for (i, w) in es.windows(2).enumerate() {
        assert!(
            w[1] < w[0],
            "energy not strictly decreasing at n = {}: {} -> {}",
            i + 3,
            w[0],
            w[1]
        );
        assert!(
            -w[1].ln() > -w[0].ln(),
            "-log E not increasing at n = {}",
            i + 3
        );
    }

    let fit = fit_decay_rate(&traj.energy_series(), 0.5).unwrap();
    assert!(
        fit.r_squared >= 0.98,
        "tail log-energy fit r^2 = {} < 0.98",
        fit.r_squared
    );
    println!(
        "ACCEPTANCE 1 PASS: reference run in {:.2} s, {} solves, E strictly decreasing, \
         tail fit r^2 = {:.6} (omega_hat = {:.3})",
        elapsed,
        es.len(),
        fit.r_squared,
        fit.omega_hat
    );
}

#[test]
fn criterion_2_dissipation_inequality_every_step() {
    let cfg = demo_config();
    let traj = run(&cfg).unwrap();
    let report = dissipation_check(&traj, &cfg.params);
    assert!(
        report.passes(),
        "dissipation violated at levels {:?} (max normalized {})",
        report.violations,
        report.max_normalized
    );
    println!(
        "ACCEPTANCE 2 PASS: (E_n - E_(n-1))/dt + kappa||w_x||^2 + k||w||^2 <= {DISSIPATION_TOL_REL:e} * E_(n-1)/dt \
         at all {} steps (max residual {:.3e}, max normalized {:.3e})",
        report.steps_checked, report.max_residual, report.max_normalized
    );
}

mod gauss {
    //! 3-point Gauss-Legendre oracle for the P1 operator entries.
    use porobeam_core::fem::Mesh1D;

    const GP: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const GW: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

    fn hat(mesh: &Mesh1D, i: usize, x: f64) -> f64 {
        (1.0 - (x - mesh.nodes[i]).abs() / mesh.h).max(0.0)
    }

    fn hat_dx(mesh: &Mesh1D, i: usize, x: f64) -> f64 {
        let xi = mesh.nodes[i];
        if x > xi - mesh.h && x < xi {
            1.0 / mesh.h
        } else if x > xi && x < xi + mesh.h {
            -1.0 / mesh.h
        } else {
            0.0
        }
    }

    fn integrate(mesh: &Mesh1D, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for e in 0..mesh.s {
            let mid = 0.5 * (mesh.nodes[e] + mesh.nodes[e + 1]);
            let half = 0.5 * mesh.h;
            for (gp, gw) in GP.iter().zip(GW) {
                acc += gw * half * f(mid + half * gp);
            }
        }
        acc
    }

    pub fn mass(mesh: &Mesh1D, a: usize, b: usize) -> f64 {
        integrate(mesh, |x| hat(mesh, b + 1, x) * hat(mesh, a + 1, x))
    }

    pub fn stiffness(mesh: &Mesh1D, a: usize, b: usize) -> f64 {
        integrate(mesh, |x| hat_dx(mesh, b + 1, x) * hat_dx(mesh, a + 1, x))
    }

    pub fn convection(mesh: &Mesh1D, a: usize, b: usize) -> f64 {
        integrate(mesh, |x| hat_dx(mesh, b + 1, x) * hat(mesh, a + 1, x))
    }
}

#[test]
fn criterion_3_assembly_matches_quadrature_oracle() {
    let mut checked = 0usize;
    for s in [2usize, 3, 7, 11, 32] {
        let mesh = build_mesh(1.0, s).unwrap();
        let mats = assemble_matrices(&mesh);
        let m = mesh.interior_count();
        for a in 0..m {
            for b in 0..m {
                for (name, got, want) in [
                    ("Z", mats.z.get(a, b), gauss::mass(&mesh, a, b)),
                    ("T", mats.t.get(a, b), gauss::stiffness(&mesh, a, b)),
                    ("X", mats.x.get(a, b), gauss::convection(&mesh, a, b)),
                ] {
                    let scale = got.abs().max(want.abs());
                    let ok = if scale < 1e-14 {
                        (got - want).abs() < 1e-14
                    } else {
                        (got - want).abs() <= 1e-12 * scale
                    };
                    assert!(ok, "{name}[{a}][{b}] s={s}: {got} vs oracle {want}");
                    checked += 1;
                }
            }
        }
    }
    println!("ACCEPTANCE 3 PASS: {checked} assembled entries match 3-point Gauss oracle at 1e-12 relative");
}

#[allow(clippy::needless_range_loop)]
fn dense_solve(a: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut m = a.to_vec();
    let mut x = rhs.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        m.swap(k, p);
        x.swap(k, p);
        for r in k + 1..n {
            let f = m[r][k] / m[k][k];
            for c in k..n {
                m[r][c] -= f * m[k][c];
            }
            x[r] -= f * x[k];
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for c in r + 1..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    x
}

#[test]
fn criterion_4_banded_solve_matches_dense_oracle() {
    let p = demo_params();
    let mut compared = 0usize;
    for s in [2usize, 3, 4] {
        let mesh = build_mesh(1.0, s).unwrap();
        let mats = assemble_matrices(&mesh);
        let m = mesh.interior_count();
        let dt = 1.0 / 22.0;
        let parabola: Vec<f64> = (0..m)
            .map(|i| {
                let x = mesh.interior_node(i);
                x * (1.0 - x)
            })
            .collect();
        let sine: Vec<f64> = (0..m)
            .map(|i| (std::f64::consts::PI * mesh.interior_node(i)).sin())
            .collect();
        let mut state = SolverState::from_levels(
            parabola.clone(),
            parabola.clone(),
            sine.clone(),
            sine,
            parabola,
            dt,
        );
        let stepper = Stepper::new(&p, &mats, dt).unwrap();
        for _ in 0..3 {
            let (bm, rhs) = assemble_step_system(&state, &p, &mats, &Forcing::Zero);
            let dense: Vec<Vec<f64>> = (0..3 * m)
                .map(|r| (0..3 * m).map(|c| bm.get(r, c)).collect())
                .collect();
            let want = dense_solve(&dense, &rhs);
            let next = stepper.advance(&state, &mats, &Forcing::Zero).unwrap();
            let scale = want.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..m {
                for (got, want) in [
                    (next.a_curr[i], want[3 * i]),
                    (next.b_curr[i], want[3 * i + 1]),
                    (next.c_curr[i], want[3 * i + 2]),
                ] {
                    assert!(
                        (got - want).abs() <= 1e-12 * scale,
                        "s={s}: banded {got} vs dense {want}"
                    );
                    compared += 1;
                }
            }
            state = next;
        }
    }
    println!("ACCEPTANCE 4 PASS: {compared} solution entries match dense elimination at 1e-12 relative");
}

#[test]
fn criterion_5_convergence_orders_first_in_h_and_dt() {
    // O(1) parameters: the demo set's alpha/k = 1e-3 relaxation hides the
    // temporal order of the w field at these step sizes.
    let params = PhysicalParams {
        rho: 1.0,
        mu: 1.0,
        b: 0.5,
        j: 1.0,
        delta: 1.0,
        xi: 1.0,
        d: 0.5,
        alpha: 1.0,
        kappa: 1.0,
        k: 1.0,
        l: 1.0,
    }
    .validated()
    .unwrap();
    let base = RunConfig {
        params,
        s: 16,
        dt: 0.05,
        t_final: 0.5,
        init_u0: Profile::Zero,
        init_u1: Profile::Zero,
        init_phi0: Profile::Zero,
        init_phi1: Profile::Zero,
        init_w0: Profile::Zero,
        output_every: 1,
    };
    let ms = ManufacturedSolution::decaying_sine(1.0);

    let started = Instant::now();
    // 5 levels = 4 halvings of the refined scale in each sweep.
    let report = convergence_study(&base, &ms, 5).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "study took {elapsed:.1} s, budget 120 s");

    for (label, sweep) in [("h", &report.spatial), ("dt", &report.temporal)] {
        println!("  {label}-sweep:");
        for lvl in &sweep.levels {
            println!(
                "    h = {:<10.6} dt = {:<12.8} e_uvel = {:.3e}  e_phivel = {:.3e}  e_ux = {:.3e}  \
                 e_phix = {:.3e}  e_phi = {:.3e}  e_w = {:.3e}",
                lvl.h,
                lvl.dt,
                lvl.errors.e_uvel,
                lvl.errors.e_phivel,
                lvl.errors.e_ux,
                lvl.errors.e_phix,
                lvl.errors.e_phi,
                lvl.errors.e_w
            );
        }
    }

    let checks = [
        ("spatial e_ux", report.spatial.orders.e_ux),
        ("spatial e_phix", report.spatial.orders.e_phix),
        ("temporal e_uvel", report.temporal.orders.e_uvel),
        ("temporal e_w", report.temporal.orders.e_w),
    ];
    for (name, order) in checks {
        assert!(order >= 0.9, "{name} fitted order {order} < 0.9");
    }
    // Guard against trivially-zero errors polluting the fits.
    for sweep in [&report.spatial, &report.temporal] {
        for name in porobeam_core::verification::ErrorNorms::COMPONENTS {
            let order = sweep.orders.component(name);
            assert!(order <= 2.5, "{name} fitted order {order} > 2.5");
        }
    }
    println!(
        "ACCEPTANCE 5 PASS: orders over 4 halvings in {:.1} s — e_ux(h) = {:.2}, e_phix(h) = {:.2}, \
         e_uvel(dt) = {:.2}, e_w(dt) = {:.2} (threshold 0.9)",
        elapsed,
        report.spatial.orders.e_ux,
        report.spatial.orders.e_phix,
        report.temporal.orders.e_uvel,
        report.temporal.orders.e_w
    );
}

#[test]
fn criterion_6_lyapunov_sandwich_on_reference_and_random_runs() {
    let mut worst_rel_margin = f64::INFINITY;
    let mut frames_checked = 0usize;

    let mut check_run = |cfg: &RunConfig| {
        let traj = run(cfg).unwrap();
        let mats = assemble_matrices(&traj.mesh);
        let consts = lyapunov_constants(&cfg.params);
        for frame in &traj.frames {
            let v = lyapunov_values(&frame.state, &cfg.params, &mats, &consts).unwrap();
            let slack = 1e-9 * consts.nu2 * v.energy;
            assert!(
                v.margin_lower >= -slack,
                "nu1 E <= L failed at t = {}: margin {}",
                frame.t,
                v.margin_lower
            );
            assert!(
                v.margin_upper >= -slack,
                "L <= nu2 E failed at t = {}: margin {}",
                frame.t,
                v.margin_upper
            );
            if v.energy > 0.0 {
                worst_rel_margin = worst_rel_margin.min(v.margin() / v.energy);
            }
            frames_checked += 1;
        }
    };

    check_run(&demo_config());

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let profiles = [Profile::Parabola, Profile::Sine(1), Profile::Sine(2)];
    for _ in 0..20 {
        let params = random_valid_params(&mut rng);
        let dt = rng.gen_range(0.02..0.1);
        let pick = |rng: &mut ChaCha8Rng| profiles[rng.gen_range(0..profiles.len())];
        let cfg = RunConfig {
            params,
            s: rng.gen_range(4usize..16),
            dt,
            t_final: 61.0 * dt,
            init_u0: pick(&mut rng),
            init_u1: pick(&mut rng),
            init_phi0: pick(&mut rng),
            init_phi1: pick(&mut rng),
            init_w0: pick(&mut rng),
            output_every: 1,
        };
        check_run(&cfg);
    }
    println!(
        "ACCEPTANCE 6 PASS: nu1 E <= L <= nu2 E on {frames_checked} recorded states \
         (reference run + 20 random-parameter runs); min margin/E = {worst_rel_margin:.3e}"
    );
}

#[test]
fn criterion_7_energy_positivity_and_zero_fixed_point() {
    // Positivity and definiteness over random states.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let p = random_valid_params(&mut rng);
        let s = rng.gen_range(3usize..12);
        let mats = assemble_matrices(&build_mesh(p.l, s).unwrap());
        let m = s - 1;
        let mut v = |scale: f64| -> Vec<f64> {
            (0..m).map(|_| rng.gen_range(-scale..scale)).collect()
        };
        let st = SolverState {
            a_curr: v(1.0),
            a_prev: v(1.0),
            a_prev2: v(1.0),
            b_curr: v(1.0),
            b_prev: v(1.0),
            c_curr: v(1.0),
            c_prev: v(1.0),
            n: 2,
            dt: 0.05,
        };
        let e = discrete_energy(&st, &p, &mats).unwrap();
        assert!(e.total >= 0.0, "E = {} < 0", e.total);
        let sup = st
            .a_curr
            .iter()
            .chain(&st.a_prev)
            .chain(&st.b_curr)
            .chain(&st.c_curr)
            .fold(0.0f64, |a, x| a.max(x.abs()));
        if e.total <= 1e-14 {
            assert!(sup < 1e-3, "E = {} but state sup-norm = {sup}", e.total);
        }
        let zero = SolverState {
            a_curr: vec![0.0; m],
            a_prev: vec![0.0; m],
            a_prev2: vec![0.0; m],
            b_curr: vec![0.0; m],
            b_prev: vec![0.0; m],
            c_curr: vec![0.0; m],
            c_prev: vec![0.0; m],
            n: 2,
            dt: 0.05,
        };
        let e0 = discrete_energy(&zero, &p, &mats).unwrap();
        assert!(e0.total <= 1e-14, "zero state has E = {}", e0.total);
    }

    // Zero initial data is a fixed point of the homogeneous evolution.
    let dt = 1.0 / 22.0;
    let cfg = RunConfig {
        params: demo_params(),
        s: 11,
        dt,
        t_final: 101.0 * dt,
        init_u0: Profile::Zero,
        init_u1: Profile::Zero,
        init_phi0: Profile::Zero,
        init_phi1: Profile::Zero,
        init_w0: Profile::Zero,
        output_every: 1,
    };
    let traj = run(&cfg).unwrap();
    assert_eq!(traj.records.len(), 100);
    let mats = assemble_matrices(&traj.mesh);
    for frame in &traj.frames {
        for field in [
            &frame.state.a_curr,
            &frame.state.b_curr,
            &frame.state.c_curr,
        ] {
            let l2 = mats.z.quad(field, field).max(0.0).sqrt();
            let h1 = mats.t.quad(field, field).max(0.0).sqrt();
            assert!(
                l2 < 1e-14 && h1 < 1e-14,
                "nonzero field at t = {}: l2 = {l2}, h1 = {h1}",
                frame.t
            );
        }
        assert!(frame.state.n < 2 || {
            let e = discrete_energy(&frame.state, &cfg.params, &mats).unwrap();
            e.total < 1e-14
        });
    }
    println!(
        "ACCEPTANCE 7 PASS: E >= 0 with E = 0 iff zero state over 1000 random states; \
         zero data stays below 1e-14 in every norm for 100 steps"
    );
}
