//! Shared helpers for unit tests: reference parameter sets, random valid
//! parameter draws, and a dense linear-solve oracle.

use rand::Rng;

use crate::model::PhysicalParams;

/// The demo parameter set shipped with the project (delta and kappa at the
/// same 1e-3 scale as the other small couplings).
pub(crate) fn demo_params() -> PhysicalParams {
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
}

/// Log-uniform parameter draws over [1e-3, 1e1]; `b` is kept small enough
/// that `mu*xi - b^2 > 0` holds with margin.
pub(crate) fn random_valid_params(rng: &mut impl Rng) -> PhysicalParams {
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
    .expect("construction keeps mu*xi - b^2 > 0")
}

/// Dense Gaussian elimination with partial pivoting, used as an oracle
/// against the banded solver.
#[allow(clippy::needless_range_loop)]
pub(crate) fn dense_solve(a: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = rhs.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[p][k] == 0.0 {
            return None;
        }
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
    Some(x)
}
