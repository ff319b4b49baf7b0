//! Banded LU factorization with partial pivoting.
//!
//! Storage is row-compact: row `r` keeps logical columns
//! `r - kl ..= r + kl + ku`, width `2*kl + ku + 1`. The extra `kl` upper
//! columns hold fill produced by row interchanges.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BandError {
    #[error("singular system: zero pivot at elimination column {0}")]
    SingularSystem(usize),
    #[error("dimension mismatch: matrix order {expected}, vector length {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, r: usize, c: usize) -> Option<usize> {
        // In-band test covers the factor fill region too.
        if c + self.kl < r || c > r + self.kl + self.ku {
            return None;
        }
        Some(r * self.width + (c + self.kl - r))
    }

    /// Adds `v` to entry `(r, c)`; panics if outside the band.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let idx = self.slot(r, c).expect("entry outside band");
        self.data[idx] += v;
    }

    /// Entry `(r, c)`, zero outside the band.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.slot(r, c).map_or(0.0, |idx| self.data[idx])
    }

    #[allow(clippy::needless_range_loop)]
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for r in 0..self.n {
            let lo = r.saturating_sub(self.kl);
            let hi = (r + self.kl + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for c in lo..=hi {
                acc += self.data[r * self.width + (c + self.kl - r)] * v[c];
            }
            out[r] = acc;
        }
        out
    }

    /// LU factorization with partial pivoting. The receiver is consumed;
    /// multipliers overwrite the eliminated entries.
    #[allow(clippy::needless_range_loop)]
    pub fn factor(mut self) -> Result<BandLu, BandError> {
        let n = self.n;
        let kl = self.kl;
        let ku = self.ku;
        let mut perm = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut pivot_row = k;
            let mut pivot_mag = self.get(k, k).abs();
            for r in k + 1..=last {
                let mag = self.get(r, k).abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if pivot_mag == 0.0 {
                return Err(BandError::SingularSystem(k));
            }
            perm[k] = pivot_row;
            if pivot_row != k {
                // Swap the active stretches of rows k and pivot_row. Both
                // rows cover columns k ..= k+kl+ku since pivot_row <= k+kl.
                let hi = (k + kl + ku).min(n - 1);
                for c in k..=hi {
                    let a = self.slot(k, c).unwrap();
                    let b = self.slot(pivot_row, c).unwrap();
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for r in k + 1..=last {
                let idx = self.slot(r, k).unwrap();
                let mult = self.data[idx] / pivot;
                self.data[idx] = mult;
                if mult != 0.0 {
                    let hi = (k + kl + ku).min(n - 1);
                    for c in k + 1..=hi {
                        let from = self.slot(k, c).unwrap();
                        let to = self.slot(r, c).unwrap();
                        self.data[to] -= mult * self.data[from];
                    }
                }
            }
        }
        Ok(BandLu { factored: self, perm })
    }
}

/// Factored form produced by [`BandMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandLu {
    factored: BandMatrix,
    perm: Vec<usize>,
}

impl BandLu {
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, BandError> {
        let n = self.factored.n;
        if rhs.len() != n {
            return Err(BandError::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let kl = self.factored.kl;
        let ku = self.factored.ku;
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.perm[k]);
            let last = (k + kl).min(n - 1);
            for r in k + 1..=last {
                x[r] -= self.factored.get(r, k) * x[k];
            }
        }
        for r in (0..n).rev() {
            let hi = (r + kl + ku).min(n - 1);
            let mut acc = x[r];
            for c in r + 1..=hi {
                acc -= self.factored.get(r, c) * x[c];
            }
            x[r] = acc / self.factored.get(r, r);
        }
        Ok(x)
    }
}
