//! Time evolution rho(t) = exp(L t) rho(0), by two independent routes that
//! cross-validate each other: direct matrix exponentials stepped over the
//! output grid, and an adaptive embedded Runge-Kutta integrator.
//!
//! Every output point is checked for trace and Hermiticity drift before the
//! state is re-symmetrized; drift beyond 1e-8 aborts rather than being
//! silently repaired.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::density::{hermiticity_deviation, hermitize, DensityMatrix};
use crate::error::{Error, Result};
use crate::lindblad::{devectorize, vectorize, Liouvillian};
use crate::linalg;

const TRACE_DRIFT_TOL: f64 = 1e-8;
const HERMITICITY_DRIFT_TOL: f64 = 1e-8;
/// Positivity floor for propagated states; looser than the construction
/// default to absorb integrator round-off over long trajectories.
const PROPAGATED_POSITIVITY_TOL: f64 = -1e-7;

const RTOL: f64 = 1e-9;
const ATOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MatrixExponential,
    AdaptiveOde,
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    /// strictly increasing, starts at 0
    pub times: Vec<f64>,
    /// same length as times; states[0] is the initial state
    pub states: Vec<DensityMatrix>,
    pub method: Method,
}

/// exp(L t) as a dense 9x9 matrix.
pub fn matrix_exponential(l: &Liouvillian, t: f64) -> Result<Array2<Complex64>> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidTimes(format!(
            "propagation time must be finite and non-negative, got {t}"
        )));
    }
    linalg::expm(&l.matrix().mapv(|z| z * t))
}

/// Propagates an initial state over an output grid. The grid must be
/// strictly increasing, finite, and non-negative; a leading 0 is added when
/// absent so the result always starts at the initial state.
pub fn propagate(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
    method: Method,
) -> Result<PropagationResult> {
    if times.is_empty() {
        return Err(Error::InvalidTimes("empty time grid".into()));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidTimes(format!(
                "time grid must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if !times.iter().all(|t| t.is_finite()) || times[0] < 0.0 {
        return Err(Error::InvalidTimes(
            "time grid must be finite and non-negative".into(),
        ));
    }

    let mut grid = Vec::with_capacity(times.len() + 1);
    if times[0] != 0.0 {
        grid.push(0.0);
    }
    grid.extend_from_slice(times);

    let mut states = Vec::with_capacity(grid.len());
    states.push(rho0.clone());
    let mut v = vectorize(rho0.matrix());

    let mut expm_cache: HashMap<u64, Array2<Complex64>> = HashMap::new();
    for k in 1..grid.len() {
        let dt = grid[k] - grid[k - 1];
        match method {
            Method::MatrixExponential => {
                let key = dt.to_bits();
                if !expm_cache.contains_key(&key) {
                    expm_cache.insert(key, matrix_exponential(l, dt)?);
                }
                v = expm_cache[&key].dot(&v);
            }
            Method::AdaptiveOde => {
                integrate_interval(l, &mut v, grid[k - 1], grid[k])?;
            }
        }
        let m = devectorize(&v);
        let trace_dev = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)] - Complex64::ONE).norm();
        if trace_dev > TRACE_DRIFT_TOL {
            return Err(Error::TraceDeviation {
                deviation: trace_dev,
            });
        }
        let drift = hermiticity_deviation(&m);
        if drift > HERMITICITY_DRIFT_TOL {
            return Err(Error::HermiticityDrift { drift });
        }
        let sym = hermitize(&m);
        v = vectorize(&sym);
        states.push(DensityMatrix::from_matrix_with_positivity_tol(
            sym,
            PROPAGATED_POSITIVITY_TOL,
        )?);
    }

    Ok(PropagationResult {
        times: grid,
        states,
        method,
    })
}

/// Dormand-Prince 5(4) step over [t0, t1] with proportional step control.
fn integrate_interval(
    l: &Liouvillian,
    y: &mut Array1<Complex64>,
    t0: f64,
    t1: f64,
) -> Result<()> {
    let lm = l.matrix();
    let span = t1 - t0;
    let mut t = t0;
    let mut h_ctrl = span.min(0.05);
    let mut k1 = lm.dot(&*y);

    let cs = |x: f64| Complex64::from(x);

    while t < t1 {
        // a sliver below resolvable precision cannot advance t; dropping it
        // perturbs the state by less than one ulp of the generator action
        if t1 - t <= f64::EPSILON * t1.max(1.0) {
            break;
        }
        if h_ctrl < 1e-14 * t.max(1.0) {
            let params = match l.params() {
                Some(p) => format!("{p:?}"),
                None => "raw generator".to_string(),
            };
            return Err(Error::StiffIntegration { t, params });
        }
        let clipped = h_ctrl >= t1 - t;
        let h = h_ctrl.min(t1 - t);

        let y2 = &*y + &(&k1 * cs(h * 0.2));
        let k2 = lm.dot(&y2);
        let y3 = &*y + &(&k1 * cs(h * 3.0 / 40.0)) + &(&k2 * cs(h * 9.0 / 40.0));
        let k3 = lm.dot(&y3);
        let y4 = &*y
            + &(&k1 * cs(h * 44.0 / 45.0))
            + &(&k2 * cs(-h * 56.0 / 15.0))
            + &(&k3 * cs(h * 32.0 / 9.0));
        let k4 = lm.dot(&y4);
        let y5 = &*y
            + &(&k1 * cs(h * 19372.0 / 6561.0))
            + &(&k2 * cs(-h * 25360.0 / 2187.0))
            + &(&k3 * cs(h * 64448.0 / 6561.0))
            + &(&k4 * cs(-h * 212.0 / 729.0));
        let k5 = lm.dot(&y5);
        let y6 = &*y
            + &(&k1 * cs(h * 9017.0 / 3168.0))
            + &(&k2 * cs(-h * 355.0 / 33.0))
            + &(&k3 * cs(h * 46732.0 / 5247.0))
            + &(&k4 * cs(h * 49.0 / 176.0))
            + &(&k5 * cs(-h * 5103.0 / 18656.0));
        let k6 = lm.dot(&y6);
        let y_new = &*y
            + &(&k1 * cs(h * 35.0 / 384.0))
            + &(&k3 * cs(h * 500.0 / 1113.0))
            + &(&k4 * cs(h * 125.0 / 192.0))
            + &(&k5 * cs(-h * 2187.0 / 6784.0))
            + &(&k6 * cs(h * 11.0 / 84.0));
        let k7 = lm.dot(&y_new);

        let err_vec = (&k1 * cs(71.0 / 57600.0)
            + &k3 * cs(-71.0 / 16695.0)
            + &k4 * cs(71.0 / 1920.0)
            + &k5 * cs(-17253.0 / 339200.0)
            + &k6 * cs(22.0 / 525.0)
            + &k7 * cs(-1.0 / 40.0))
            * cs(h);

        let mut acc = 0.0;
        for ((e, y0), y1) in err_vec.iter().zip(y.iter()).zip(y_new.iter()) {
            let sc = ATOL + RTOL * y0.norm().max(y1.norm());
            let r = e.norm() / sc;
            acc += r * r;
        }
        let err = (acc / err_vec.len() as f64).sqrt();

        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };

        if err <= 1.0 {
            t += h;
            *y = y_new;
            k1 = k7;
            if !clipped || factor < 1.0 {
                h_ctrl = h * factor;
            }
        } else {
            h_ctrl = h * factor;
        }
    }
    Ok(())
}
