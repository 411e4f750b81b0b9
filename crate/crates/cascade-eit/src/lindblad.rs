//! Generator of the master equation for the driven cascade.
//!
//! The state is vectorized in the fixed ordering
//! (rho11, rho22, rho33, rho12, rho21, rho13, rho31, rho23, rho32)
//! and the generator is the 9x9 complex matrix acting on that vector.
//! Population rows sum to the zero row (trace conservation) and
//! conjugate-component rows are element-wise conjugates of their partners
//! under the pairing 12<->21, 13<->31, 23<->32 (Hermiticity preservation).
//! Both invariants are checked when a raw matrix is wrapped.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::density::hermiticity_deviation;
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Matrix index for each vector slot, in the fixed ordering above.
pub(crate) const IDX: [(usize, usize); 9] = [
    (0, 0),
    (1, 1),
    (2, 2),
    (0, 1),
    (1, 0),
    (0, 2),
    (2, 0),
    (1, 2),
    (2, 1),
];

/// Slot of the conjugate component: populations are self-paired.
pub(crate) const PAIR: [usize; 9] = [0, 1, 2, 4, 3, 6, 5, 8, 7];

const STRUCTURE_TOL: f64 = 1e-12;
const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Liouvillian {
    matrix: Array2<Complex64>,
    params: Option<SystemParams>,
}

impl Liouvillian {
    /// Wraps a raw 9x9 generator after checking trace conservation and the
    /// conjugation pairing. The parameter record is unknown for raw input.
    pub fn from_matrix(matrix: Array2<Complex64>) -> Result<Self> {
        if matrix.nrows() != 9 || matrix.ncols() != 9 {
            return Err(Error::GeneratorStructure(format!(
                "expected 9x9, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for col in 0..9 {
            let s = matrix[(0, col)] + matrix[(1, col)] + matrix[(2, col)];
            if s.norm() > STRUCTURE_TOL {
                return Err(Error::GeneratorStructure(format!(
                    "trace conservation: population rows sum to {s:.3e} in column {col}"
                )));
            }
        }
        for row in 0..9 {
            for col in 0..9 {
                let partner = matrix[(PAIR[row], PAIR[col])];
                if (partner - matrix[(row, col)].conj()).norm() > STRUCTURE_TOL {
                    return Err(Error::GeneratorStructure(format!(
                        "conjugation pairing broken at row {row}, column {col}"
                    )));
                }
            }
        }
        Ok(Self {
            matrix,
            params: None,
        })
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    /// Parameters the generator was built from, if it was built rather than
    /// wrapped.
    pub fn params(&self) -> Option<&SystemParams> {
        self.params.as_ref()
    }
}

/// Builds the generator of the equations of motion: spontaneous decay
/// 2γ21 on |2>->|1> and 2γ32 on |3>->|2>, incoherent pumping 2Λ12 and 2Λ13
/// out of the ground state, and coherent probe/control driving in the
/// rotating frame. Rates enter populations with the factor 2 and coherences
/// with bare sums; detunings appear only on coherences.
pub fn build_liouvillian(params: &SystemParams) -> Result<Liouvillian> {
    params.validate()?;
    let g21 = params.gamma21;
    let g32 = params.gamma32;
    let l12 = params.lambda12;
    let l13 = params.lambda13;
    let op = params.omega_p;
    let oc = params.omega_c;
    let dp = params.delta_p;
    let dc = params.delta_c;
    let i = Complex64::i();

    let mut l = Array2::<Complex64>::zeros((9, 9));

    // d rho11 = -2(L12+L13) rho11 + 2 g21 rho22 + i Op (rho21 - rho12)
    l[(0, 0)] = Complex64::from(-2.0 * (l12 + l13));
    l[(0, 1)] = Complex64::from(2.0 * g21);
    l[(0, 3)] = -i * op;
    l[(0, 4)] = i * op;

    // d rho22 = 2 L12 rho11 + 2 g32 rho33 - 2 g21 rho22
    //           - i Op (rho21 - rho12) - i Oc (rho23 - rho32)
    l[(1, 0)] = Complex64::from(2.0 * l12);
    l[(1, 1)] = Complex64::from(-2.0 * g21);
    l[(1, 2)] = Complex64::from(2.0 * g32);
    l[(1, 3)] = i * op;
    l[(1, 4)] = -i * op;
    l[(1, 7)] = -i * oc;
    l[(1, 8)] = i * oc;

    // d rho33 = 2 L13 rho11 - 2 g32 rho33 + i Oc (rho23 - rho32)
    l[(2, 0)] = Complex64::from(2.0 * l13);
    l[(2, 2)] = Complex64::from(-2.0 * g32);
    l[(2, 7)] = i * oc;
    l[(2, 8)] = -i * oc;

    // d rho12 = -(g21 + L12 + L13 + i dp) rho12 + i Op (rho22 - rho11) - i Oc rho13
    l[(3, 3)] = Complex64::new(-(g21 + l12 + l13), -dp);
    l[(3, 0)] = -i * op;
    l[(3, 1)] = i * op;
    l[(3, 5)] = -i * oc;

    // d rho13 = -(g32 + L12 + L13 + i (dp + dc)) rho13 + i Op rho23 - i Oc rho12
    l[(5, 5)] = Complex64::new(-(g32 + l12 + l13), -(dp + dc));
    l[(5, 7)] = i * op;
    l[(5, 3)] = -i * oc;

    // d rho23 = -(g21 + g32 + i dc) rho23 + i Oc (rho33 - rho22) + i Op rho13
    l[(7, 7)] = Complex64::new(-(g21 + g32), -dc);
    l[(7, 1)] = -i * oc;
    l[(7, 2)] = i * oc;
    l[(7, 5)] = i * op;

    // conjugate rows follow from rho_ji = conj(rho_ij)
    for row in [3, 5, 7] {
        for col in 0..9 {
            l[(PAIR[row], PAIR[col])] = l[(row, col)].conj();
        }
    }

    Ok(Liouvillian {
        matrix: l,
        params: Some(*params),
    })
}

/// Flattens a 3x3 matrix into the fixed component ordering.
pub fn vectorize(rho: &Array2<Complex64>) -> Array1<Complex64> {
    Array1::from_iter(IDX.iter().map(|&(i, j)| rho[(i, j)]))
}

/// Inverse of `vectorize`.
pub fn devectorize(v: &Array1<Complex64>) -> Array2<Complex64> {
    let mut m = Array2::zeros((3, 3));
    for (slot, &(i, j)) in IDX.iter().enumerate() {
        m[(i, j)] = v[slot];
    }
    m
}

/// Evaluates d rho / dt for a Hermitian input matrix. The input need not be
/// positive or unit-trace: linearity tests and regression-theorem plumbing
/// feed affine combinations of states through here.
pub fn apply_generator(l: &Liouvillian, rho: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    if rho.nrows() != 3 || rho.ncols() != 3 {
        return Err(Error::InvalidParams(format!(
            "expected 3x3 state, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let dev = hermiticity_deviation(rho);
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let v = vectorize(rho);
    Ok(devectorize(&l.matrix.dot(&v)))
}
