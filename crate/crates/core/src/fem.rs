//! Uniform P1 mesh on `(0, l)` and the assembled interior-DOF operators.
//!
//! Homogeneous Dirichlet conditions are imposed by eliminating the boundary
//! degrees of freedom: every nodal vector lives on the `s - 1` interior
//! nodes. With hat functions `psi_1 .. psi_{s-1}` the four operators are
//!
//! * `Z[a][b] = ∫ psi_b psi_a`        (mass),
//! * `T[a][b] = ∫ psi_b' psi_a'`      (stiffness),
//! * `X[a][b] = ∫ psi_b' psi_a`       (convection; rows are test indices),
//! * `Y = X^T = -X`.
//!
//! All four are tridiagonal; `Z` and `T` are symmetric positive definite
//! and `X` is skew-symmetric.

use thiserror::Error;

/// Nodal coefficients on the interior nodes `x_1 .. x_{s-1}`.
pub type NodalVector = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("mesh needs at least 2 elements to have an interior node, got {0}")]
    TooFewElements(usize),
    #[error("profile is not finite at interior node {0}")]
    NonFiniteSample(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Uniform partition of `(0, l)` into `s` elements of size `h = l/s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    /// Domain length.
    pub l: f64,
    /// Number of elements.
    pub s: usize,
    /// Element size `l/s`.
    pub h: f64,
    /// The `s + 1` node coordinates, `0 = x_0 < ... < x_s = l`.
    pub nodes: Vec<f64>,
}

impl Mesh1D {
    /// Number of interior (unknown) nodes, `s - 1`.
    pub fn interior_count(&self) -> usize {
        self.s - 1
    }

    /// Coordinate of interior node `i` (1-based over the full mesh,
    /// 0-based over the interior: `interior_node(0) = x_1`).
    pub fn interior_node(&self, i: usize) -> f64 {
        self.nodes[i + 1]
    }
}

/// `build_mesh(l, s)`: uniform mesh, `s >= 2` so at least one interior node
/// exists.
pub fn build_mesh(l: f64, s: usize) -> Result<Mesh1D, FemError> {
    if s < 2 {
        return Err(FemError::TooFewElements(s));
    }
    let nodes = (0..=s).map(|i| i as f64 * l / s as f64).collect();
    Ok(Mesh1D {
        l,
        s,
        h: l / s as f64,
        nodes,
    })
}

/// Symmetric-storage-free tridiagonal matrix: `sub[i] = M[i+1][i]`,
/// `diag[i] = M[i][i]`, `sup[i] = M[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Entry `M[r][c]`; zero outside the three diagonals.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        if r == c {
            self.diag[r]
        } else if c + 1 == r {
            self.sub[c]
        } else if r + 1 == c {
            self.sup[r]
        } else {
            0.0
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        debug_assert_eq!(v.len(), n);
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.sub[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * v[i + 1];
            }
            out[i] = acc;
        }
        out
    }

    /// Bilinear form `a^T M b`.
    pub fn quad(&self, a: &[f64], b: &[f64]) -> f64 {
        let mb = self.matvec(b);
        a.iter().zip(&mb).map(|(x, y)| x * y).sum()
    }
}

/// The four assembled operators on the interior DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct FemMatrices {
    pub z: Tridiag,
    pub t: Tridiag,
    pub x: Tridiag,
    pub y: Tridiag,
    /// Interior DOF count `s - 1`.
    pub m: usize,
    /// Element size, kept for elementwise quadrature of coupled norms.
    pub h: f64,
}

/// Assembles `Z`, `T`, `X`, `Y` for P1 hat functions on a uniform mesh.
///
/// Closed forms: `Z = tri(h/6, 2h/3, h/6)`, `T = tri(-1/h, 2/h, -1/h)`,
/// `X = tri(-1/2, 0, +1/2)` with `X[a][a+1] = +1/2`, and `Y = X^T`.
pub fn assemble_matrices(mesh: &Mesh1D) -> FemMatrices {
    let m = mesh.interior_count();
    let h = mesh.h;
    let off = m.saturating_sub(1);
    let z = Tridiag {
        sub: vec![h / 6.0; off],
        diag: vec![2.0 * h / 3.0; m],
        sup: vec![h / 6.0; off],
    };
    let t = Tridiag {
        sub: vec![-1.0 / h; off],
        diag: vec![2.0 / h; m],
        sup: vec![-1.0 / h; off],
    };
    let x = Tridiag {
        sub: vec![-0.5; off],
        diag: vec![0.0; m],
        sup: vec![0.5; off],
    };
    let y = Tridiag {
        sub: vec![0.5; off],
        diag: vec![0.0; m],
        sup: vec![-0.5; off],
    };
    FemMatrices { z, t, x, y, m, h }
}

/// Samples a pointwise profile at the interior nodes.
pub fn interpolate_nodal<F: Fn(f64) -> f64>(
    profile: F,
    mesh: &Mesh1D,
) -> Result<NodalVector, FemError> {
    let m = mesh.interior_count();
    let mut values = Vec::with_capacity(m);
    for i in 0..m {
        let v = profile(mesh.interior_node(i));
        if !v.is_finite() {
            return Err(FemError::NonFiniteSample(i + 1));
        }
        values.push(v);
    }
    Ok(values)
}

/// Discrete `L^2` norm and `H^1` seminorm of a nodal vector:
/// `(sqrt(v^T Z v), sqrt(v^T T v))`.
pub fn norms(mats: &FemMatrices, v: &[f64]) -> Result<(f64, f64), FemError> {
    if v.len() != mats.m {
        return Err(FemError::DimensionMismatch {
            expected: mats.m,
            got: v.len(),
        });
    }
    Ok((mats.z.quad(v, v).max(0.0).sqrt(), mats.t.quad(v, v).max(0.0).sqrt()))
}
