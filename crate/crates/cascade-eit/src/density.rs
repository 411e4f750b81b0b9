//! Validated 3x3 density matrices.
//!
//! `DensityMatrix` is a thin wrapper around a 3x3 complex array that is
//! guaranteed Hermitian, unit-trace, and positive semidefinite at
//! construction. Numerical pipelines get raw arrays back out and re-wrap at
//! checkpoints, so every checked invariant failure points at the step that
//! introduced it.

use ndarray::{array, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
/// Default allowance for round-off negative eigenvalues.
const POSITIVITY_TOL: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: Array2<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positivity, then wraps.
    pub fn from_matrix(m: Array2<Complex64>) -> Result<Self> {
        Self::from_matrix_with_positivity_tol(m, POSITIVITY_TOL)
    }

    /// Same checks with a caller-chosen eigenvalue floor. Long integrations
    /// accumulate more round-off than a single construction, so they validate
    /// against a looser floor.
    pub fn from_matrix_with_positivity_tol(
        m: Array2<Complex64>,
        positivity_tol: f64,
    ) -> Result<Self> {
        if m.nrows() != 3 || m.ncols() != 3 {
            return Err(Error::InvalidParams(format!(
                "density matrix must be 3x3, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = hermiticity_deviation(&m);
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let trace_dev = (trace - Complex64::ONE).norm();
        if trace_dev > TRACE_TOL {
            return Err(Error::TraceDeviation { deviation: trace_dev });
        }
        // eigenvalue check uses the Hermitian average so tiny asymmetry
        // within tolerance cannot produce complex eigenvalues
        let sym = hermitize(&m);
        let eig = linalg::eigvals_hermitian3(&sym);
        if eig[0] < positivity_tol {
            return Err(Error::NotPositive {
                min_eigenvalue: eig[0],
            });
        }
        Ok(Self { m })
    }

    /// Pure state with all population in level `i` (0-based).
    pub fn level(i: usize) -> Self {
        assert!(i < 3, "level index out of range");
        let mut m = Array2::zeros((3, 3));
        m[(i, i)] = Complex64::ONE;
        Self { m }
    }

    /// Diagonal state from populations. They must be non-negative and sum
    /// to 1 within tolerance.
    pub fn from_populations(p: [f64; 3]) -> Result<Self> {
        for &x in &p {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "populations must be non-negative, got {p:?}"
                )));
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceDeviation {
                deviation: (sum - 1.0).abs(),
            });
        }
        let m = array![
            [Complex64::from(p[0]), Complex64::ZERO, Complex64::ZERO],
            [Complex64::ZERO, Complex64::from(p[1]), Complex64::ZERO],
            [Complex64::ZERO, Complex64::ZERO, Complex64::from(p[2])],
        ];
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.m
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.m[(0, 0)].re, self.m[(1, 1)].re, self.m[(2, 2)].re]
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::eigvals_hermitian3(&hermitize(&self.m))[0]
    }
}

/// max |m[i][j] - conj(m[j][i])| over all entries.
pub(crate) fn hermiticity_deviation(m: &Array2<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// (M + M^dagger) / 2
pub(crate) fn hermitize(m: &Array2<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| {
        (m[(i, j)] + m[(j, i)].conj()) * 0.5
    })
}
