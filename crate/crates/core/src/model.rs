//! Physical parameters of the beam system and the derived stability constants.
//!
//! The continuous model couples the displacement `u`, the volume fraction
//! `phi`, and the microtemperature `w` through ten positive material
//! constants. Admissibility additionally requires the ellipticity condition
//! `mu*xi - b^2 > 0`, which makes the stored elastic energy positive
//! definite. [`lyapunov_constants`] evaluates, in plain `f64` arithmetic,
//! every constant of the exponential-stability analysis: the Poincare
//! constant, the multiplier weights `N1`, `N2`, the equivalence bounds
//! `nu1 <= L/E <= nu2`, and the decay rate `omega` with prefactor `M`.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Material and geometry constants of the coupled system.
///
/// All fields must be strictly positive and satisfy `mu*xi - b^2 > 0`;
/// construct through [`PhysicalParams::validated`] to enforce this.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Mass density.
    pub rho: f64,
    /// Elastic modulus.
    pub mu: f64,
    /// Elastic-porous coupling.
    pub b: f64,
    /// Equilibrated inertia.
    pub j: f64,
    /// Porous stiffness.
    pub delta: f64,
    /// Porous restoring coefficient.
    pub xi: f64,
    /// Porous-thermal coupling.
    pub d: f64,
    /// Thermal capacity.
    pub alpha: f64,
    /// Thermal conductivity.
    pub kappa: f64,
    /// Microtemperature dissipation coefficient (`k1 - k2`).
    pub k: f64,
    /// Domain length.
    pub l: f64,
}

/// A single violated admissibility constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    /// The named field is not strictly positive (or not finite).
    NonPositiveParameter(&'static str),
    /// `mu*xi - b^2 > 0` fails; carries the offending value.
    EllipticityViolated(f64),
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::NonPositiveParameter(name) => {
                write!(f, "parameter `{name}` must be strictly positive")
            }
            ParamViolation::EllipticityViolated(value) => {
                write!(f, "ellipticity violated: mu*xi - b^2 = {value} <= 0")
            }
        }
    }
}

/// Validation failure carrying every violated constraint, by name.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParamError {
    pub violations: Vec<ParamViolation>,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid physical parameters: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl PhysicalParams {
    /// Checks every positivity constraint and the ellipticity condition,
    /// returning the parameters unchanged when all hold. Every violated
    /// constraint is reported, not just the first.
    pub fn validated(self) -> Result<Self, ParamError> {
        let mut violations = Vec::new();
        let named = [
            ("rho", self.rho),
            ("mu", self.mu),
            ("b", self.b),
            ("J", self.j),
            ("delta", self.delta),
            ("xi", self.xi),
            ("d", self.d),
            ("alpha", self.alpha),
            ("kappa", self.kappa),
            ("k", self.k),
            ("l", self.l),
        ];
        for (name, value) in named {
            if value <= 0.0 || !value.is_finite() {
                violations.push(ParamViolation::NonPositiveParameter(name));
            }
        }
        let ellipticity = self.mu * self.xi - self.b * self.b;
        if ellipticity <= 0.0 || ellipticity.is_nan() {
            violations.push(ParamViolation::EllipticityViolated(ellipticity));
        }
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ParamError { violations })
        }
    }

    /// `mu - b^2/xi`, the reduced elastic modulus; positive for validated
    /// parameters.
    pub fn reduced_modulus(&self) -> f64 {
        self.mu - self.b * self.b / self.xi
    }
}

/// Constants of the exponential-stability analysis.
///
/// `F` and `G` are the two auxiliary functionals, `L = N1*E + F + N2*G`
/// the Lyapunov functional; the equivalence `nu1*E <= L <= nu2*E` and the
/// decay estimate `E(t) <= M*E(0)*exp(-omega*t)` hold with the constants
/// stored here. None of them is optimal; they certify decay, nothing more.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovConstants {
    /// Sharp Poincare constant `(l/pi)^2` for the Dirichlet problem on `(0,l)`.
    pub cp: f64,
    /// `J*sqrt(xi) + delta*rho*b/(mu*sqrt(xi))`.
    pub c1: f64,
    /// Coefficient of `||w||^2` in the `dG/dt` bound.
    pub c2: f64,
    /// Coefficient of `||w_x||^2` in the `dG/dt` bound.
    pub c3: f64,
    /// Young parameter paired with the `||u_tt||^2` absorption.
    pub eps1: f64,
    /// Young parameter fixed at `J*b/(2*sqrt(xi))`.
    pub eps2: f64,
    /// Young parameter paired with the `||u_t||^2` absorption.
    pub eps3: f64,
    /// Equivalence bound: `|L - N1*E| <= N0*E`.
    pub n0: f64,
    /// Weight of `E` in `L`.
    pub n1: f64,
    /// Weight of `G` in `L`.
    pub n2: f64,
    /// Lower equivalence constant `N1 - N0`.
    pub nu1: f64,
    /// Upper equivalence constant `N1 + N0`.
    pub nu2: f64,
    /// The five absorption margins of the `dL/dt` estimate.
    pub zeta: [f64; 5],
    /// Decay-rate numerator `2*min(1, zeta1..zeta5)`.
    pub beta: f64,
    /// Decay exponent `beta/nu2`.
    pub omega: f64,
    /// Decay prefactor `nu2/nu1`.
    pub m: f64,
}

/// Evaluates the full constant chain for validated parameters.
///
/// Strict inequalities of the analysis (`N2 > ...`, `N1 > max{...}`) are
/// realized with a factor 2 above the bound so the output is deterministic.
/// All outputs are strictly positive, and `nu2 > nu1 > 0`.
pub fn lyapunov_constants(p: &PhysicalParams) -> LyapunovConstants {
    let sx = p.xi.sqrt();
    let cp = (p.l / PI) * (p.l / PI);
    let c1 = p.j * sx + p.delta * p.rho * p.b / (p.mu * sx);

    let eps2 = p.j * p.b / (2.0 * sx);
    let n2 = 2.0 * (2.0 * sx / (p.j * p.b)) * (p.j * p.mu / p.b + 2.0 * p.rho * cp);
    let eps3 = p.rho / n2;
    let eps1 = p.j * p.rho / (p.b * n2);

    let c1sq = c1 * c1;
    let dsq = p.d * p.d;
    let c2 = p.alpha * p.alpha * c1sq / (2.0 * dsq * eps1) + p.k * p.k * c1sq / (2.0 * dsq * eps3);
    let c3 = p.kappa * p.kappa * c1sq / (2.0 * dsq * eps2) + dsq / (2.0 * sx);

    let n0 = [
        (p.rho + n2 * p.alpha * c1 / p.d) / p.rho,
        (p.rho * cp + p.j * p.mu / p.b) / p.reduced_modulus(),
        p.b / (p.j * p.mu) * (p.j * p.mu / p.b + n2 * p.j + n2 * p.delta * p.rho * p.b / (p.mu * sx)),
        n2 * p.j,
        n2 * cp * p.rho * p.b / (p.mu * sx),
        n2 * c1 / p.d,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);

    let n1 = 2.0 * n0.max(n2 * c2 / p.k).max(n2 * c3 / p.kappa);

    let zeta = [
        p.rho - n2 * eps3 / 2.0,
        p.j * p.rho / p.b - n2 * eps1 / 2.0,
        n2 * p.j * p.b / (2.0 * sx) - (p.j * p.mu / p.b + 2.0 * p.rho * cp),
        n1 * p.k - n2 * c2,
        n1 * p.kappa - n2 * c3,
    ];
    let beta = 2.0 * zeta.iter().copied().fold(1.0_f64, f64::min);

    let nu1 = n1 - n0;
    let nu2 = n1 + n0;

    LyapunovConstants {
        cp,
        c1,
        c2,
        c3,
        eps1,
        eps2,
        eps3,
        n0,
        n1,
        n2,
        nu1,
        nu2,
        zeta,
        beta,
        omega: beta / nu2,
        m: nu2 / nu1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{demo_params, random_valid_params};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn demo_parameter_set_is_valid() {
        assert!(demo_params().validated().is_ok());
    }

    #[test]
    fn ellipticity_accepts_demo_margin() {
        // mu*xi - b^2 = 0.01*0.001 - 0.001^2 = 9e-6 > 0
        let p = demo_params().validated().unwrap();
        let margin = p.mu * p.xi - p.b * p.b;
        assert!((margin - 9e-6).abs() < 1e-18, "margin = {margin}");
    }

    #[test]
    fn ellipticity_violation_reported_with_value() {
        let p = PhysicalParams {
            mu: 1.0,
            xi: 1.0,
            b: 2.0,
            ..demo_params()
        };
        let err = p.validated().unwrap_err();
        assert!(
            err.violations
                .contains(&ParamViolation::EllipticityViolated(-3.0)),
            "violations: {:?}",
            err.violations
        );
    }

    #[test]
    fn every_violation_is_reported() {
        let p = PhysicalParams {
            rho: 0.0,
            kappa: -1.0,
            mu: 1.0,
            xi: 1.0,
            b: 3.0,
            ..demo_params()
        };
        let err = p.validated().unwrap_err();
        assert!(err
            .violations
            .contains(&ParamViolation::NonPositiveParameter("rho")));
        assert!(err
            .violations
            .contains(&ParamViolation::NonPositiveParameter("kappa")));
        assert!(err
            .violations
            .contains(&ParamViolation::EllipticityViolated(-8.0)));
        assert_eq!(err.violations.len(), 3);
    }

    #[test]
    fn nan_parameters_are_rejected() {
        let p = PhysicalParams {
            d: f64::NAN,
            ..demo_params()
        };
        let err = p.validated().unwrap_err();
        assert!(err
            .violations
            .contains(&ParamViolation::NonPositiveParameter("d")));
    }

    #[test]
    fn c1_matches_independent_evaluation() {
        // Oracle: evaluate J*sqrt(xi) + delta*rho*b/(mu*sqrt(xi)) for the
        // demo set in exact powers of ten: 10^-4.5 + 10^-5.5.
        let oracle = 10f64.powf(-4.5) + 10f64.powf(-5.5);
        assert!((oracle - 3.478_505_426_185_216e-5).abs() < 1e-19);
        let c = lyapunov_constants(&demo_params().validated().unwrap());
        assert!(
            (c.c1 - oracle).abs() <= 1e-12 * oracle,
            "c1 = {}, oracle = {}",
            c.c1,
            oracle
        );
    }

    #[test]
    fn equivalence_gap_is_twice_n0() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let c = lyapunov_constants(&random_valid_params(&mut rng));
            // nu1 and nu2 each round at ulp(n1), which dominates when
            // n1 >> n0.
            let gap = c.nu2 - c.nu1;
            assert!(
                (gap - 2.0 * c.n0).abs() <= 8.0 * f64::EPSILON * c.n1,
                "gap = {gap}, 2*n0 = {}, n1 = {}",
                2.0 * c.n0,
                c.n1
            );
        }
    }

    #[test]
    fn zeta1_is_half_rho_by_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let p = random_valid_params(&mut rng);
            let c = lyapunov_constants(&p);
            assert!(
                (c.zeta[0] - p.rho / 2.0).abs() <= 1e-14 * p.rho,
                "zeta1 = {}, rho/2 = {}",
                c.zeta[0],
                p.rho / 2.0
            );
        }
    }

    #[test]
    fn completed_square_matches_raw_quadratic_form() {
        // 0.5*[(mu - b^2/xi) a^2 + (b a/sqrt(xi) + sqrt(xi) c)^2]
        //   == 0.5*[mu a^2 + xi c^2 + 2 a b c]
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let p = random_valid_params(&mut rng);
            let a: f64 = rng.gen_range(-3.0..3.0);
            let c: f64 = rng.gen_range(-3.0..3.0);
            let sx = p.xi.sqrt();
            let completed =
                0.5 * (p.reduced_modulus() * a * a + (p.b * a / sx + sx * c).powi(2));
            let raw = 0.5 * (p.mu * a * a + p.xi * c * c + 2.0 * a * p.b * c);
            let scale = completed.abs().max(raw.abs()).max(1e-12);
            assert!(
                (completed - raw).abs() <= 1e-12 * scale,
                "completed = {completed}, raw = {raw}"
            );
        }
    }

    #[test]
    fn constants_positive_for_random_valid_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let p = random_valid_params(&mut rng);
            let c = lyapunov_constants(&p);
            for (name, v) in [
                ("cp", c.cp),
                ("c1", c.c1),
                ("c2", c.c2),
                ("c3", c.c3),
                ("eps1", c.eps1),
                ("eps2", c.eps2),
                ("eps3", c.eps3),
                ("n0", c.n0),
                ("n1", c.n1),
                ("n2", c.n2),
                ("nu1", c.nu1),
                ("nu2", c.nu2),
                ("beta", c.beta),
                ("omega", c.omega),
                ("m", c.m),
            ] {
                assert!(v > 0.0, "{name} = {v} not positive for {p:?}");
            }
            for (i, z) in c.zeta.iter().enumerate() {
                assert!(*z > 0.0, "zeta{} = {z} not positive for {p:?}", i + 1);
            }
            assert!(c.nu2 > c.nu1, "nu2 = {} <= nu1 = {}", c.nu2, c.nu1);
            assert!(c.n1 > c.n0, "n1 = {} <= n0 = {}", c.n1, c.n0);
        }
    }
}
