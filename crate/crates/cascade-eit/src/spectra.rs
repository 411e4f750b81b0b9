//! Probe absorption spectra: Im rho21 at steady state as a function of the
//! probe detuning, plus dip metrics and conversion to laboratory units for
//! the sodium cascade (gamma21 corresponds to 5 MHz, so one time unit is
//! about 31.83 ns).

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lindblad::build_liouvillian;
use crate::params::SystemParams;
use crate::steady::solve_steady_state;

#[derive(Debug, Clone)]
pub struct SpectrumCurve {
    /// strictly increasing detuning grid, units of gamma21
    pub delta_p_grid: Vec<f64>,
    pub im_rho21: Vec<f64>,
    /// base parameters; delta_p is overridden point-by-point by the grid
    pub params: SystemParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipMetrics {
    /// Im rho21 at the grid point nearest delta_p = 0
    pub line_center_value: f64,
    /// max Im rho21 over the grid
    pub peak_value: f64,
    /// 1 - line_center/peak; 0 when the curve carries no absorption
    pub dip_depth_fraction: f64,
}

/// Detuning grid matching the published plots: [-4, 4] gamma21, 801 points.
pub fn default_detuning_grid() -> Vec<f64> {
    (0..801).map(|k| -4.0 + 0.01 * k as f64).collect()
}

pub fn sweep_probe_detuning(params: &SystemParams, grid: &[f64]) -> Result<SpectrumCurve> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty detuning grid".into()));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParams(format!(
                "detuning grid must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if !grid.iter().all(|d| d.is_finite()) {
        return Err(Error::InvalidParams("detuning grid must be finite".into()));
    }

    let points: Vec<std::result::Result<f64, Error>> = grid
        .par_iter()
        .map(|&delta_p| {
            let l = build_liouvillian(&params.with_delta_p(delta_p))?;
            let sol = solve_steady_state(&l)?;
            Ok(sol.rho_ss.element(1, 0).im)
        })
        .collect();

    let mut im_rho21 = Vec::with_capacity(grid.len());
    for (&delta_p, point) in grid.iter().zip(points) {
        match point {
            Ok(v) => im_rho21.push(v),
            Err(source) => {
                return Err(Error::SweepPoint {
                    delta_p,
                    source: Box::new(source),
                })
            }
        }
    }

    Ok(SpectrumCurve {
        delta_p_grid: grid.to_vec(),
        im_rho21,
        params: *params,
    })
}

/// Line-center vs. peak absorption. The grid must span [-3, 3] and hold a
/// point within half a grid step of zero detuning, otherwise the line center
/// and the sideband peaks are not both sampled.
pub fn dip_metrics(curve: &SpectrumCurve) -> Result<DipMetrics> {
    let grid = &curve.delta_p_grid;
    let n = grid.len();
    if n < 2 {
        return Err(Error::GridCoverage("fewer than two grid points".into()));
    }
    let step = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    if grid[0] > -3.0 || grid[n - 1] < 3.0 {
        return Err(Error::GridCoverage(format!(
            "grid [{}, {}] does not span [-3, 3]",
            grid[0],
            grid[n - 1]
        )));
    }
    let nearest = grid
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.abs().total_cmp(&b.abs()))
        .map(|(k, _)| k)
        .unwrap();
    if grid[nearest].abs() > 0.5 * step + 1e-12 {
        return Err(Error::GridCoverage(format!(
            "no grid point within half a step of zero detuning (nearest {})",
            grid[nearest]
        )));
    }

    let line_center_value = curve.im_rho21[nearest];
    let peak_value = curve.im_rho21.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dip_depth_fraction = if peak_value > 0.0 {
        1.0 - line_center_value / peak_value
    } else {
        0.0
    };
    Ok(DipMetrics {
        line_center_value,
        peak_value,
        dip_depth_fraction,
    })
}

/// Interior strict local maxima as (delta_p, value) pairs, in grid order.
pub fn local_maxima(curve: &SpectrumCurve) -> Vec<(f64, f64)> {
    let v = &curve.im_rho21;
    let mut out = Vec::new();
    for k in 1..v.len().saturating_sub(1) {
        if v[k] > v[k - 1] && v[k] > v[k + 1] {
            out.push((curve.delta_p_grid[k], v[k]));
        }
    }
    out
}

/// Trapezoid integral of Im rho21 over the detuning grid.
pub fn integrated_absorption(curve: &SpectrumCurve) -> f64 {
    let (g, v) = (&curve.delta_p_grid, &curve.im_rho21);
    let mut acc = 0.0;
    for k in 1..g.len() {
        acc += 0.5 * (v[k] + v[k - 1]) * (g[k] - g[k - 1]);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantityKind {
    Rate,
    Frequency,
    Time,
}

/// gamma21 in ordinary (non-angular) MHz for the sodium cascade.
const GAMMA21_MHZ: f64 = 5.0;

/// Converts a dimensionless value to laboratory units: rates and frequencies
/// to MHz, times to nanoseconds.
pub fn to_physical_units(value: f64, kind: QuantityKind) -> f64 {
    match kind {
        QuantityKind::Rate | QuantityKind::Frequency => value * GAMMA21_MHZ,
        QuantityKind::Time => value * 1e3 / (2.0 * std::f64::consts::PI * GAMMA21_MHZ),
    }
}

/// Components of the steady state exported by the CLI steady mode, in the
/// header order of the steady CSV.
pub(crate) fn steady_row(rho: &Array2<Complex64>) -> [f64; 10] {
    [
        rho[(0, 0)].re,
        rho[(1, 1)].re,
        rho[(2, 2)].re,
        rho[(0, 1)].re,
        rho[(0, 1)].im,
        rho[(0, 2)].re,
        rho[(0, 2)].im,
        rho[(1, 2)].re,
        rho[(1, 2)].im,
        rho[(1, 1)].re - rho[(0, 0)].re,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::two_level_excited_population;

    fn fig2a_params() -> SystemParams {
        SystemParams {
            gamma21: 1.0,
            gamma32: 0.16,
            omega_p: 0.01,
            omega_c: 0.5,
            ..SystemParams::default()
        }
    }

    #[test]
    fn two_level_sweep_matches_closed_form() {
        let params = SystemParams {
            gamma21: 1.0,
            gamma32: 0.16,
            omega_p: 0.05,
            ..SystemParams::default()
        };
        let grid = default_detuning_grid();
        let curve = sweep_probe_detuning(&params, &grid).unwrap();
        for (&d, &im) in grid.iter().zip(&curve.im_rho21) {
            let p22 = two_level_excited_population(1.0, 0.05, d);
            let want = 0.05 * (1.0 - 2.0 * p22) / (1.0 + d * d);
            assert!((im - want).abs() < 1e-10, "at delta_p = {d}");
        }
        // single maximum at zero detuning
        let maxima = local_maxima(&curve);
        assert_eq!(maxima.len(), 1);
        assert!(maxima[0].0.abs() < 1e-12);
    }

    #[test]
    fn unequal_decay_dip_metrics_match_reference() {
        let curve = sweep_probe_detuning(&fig2a_params(), &default_detuning_grid()).unwrap();
        let m = dip_metrics(&curve).unwrap();
        assert!((m.line_center_value - 3.902134e-3).abs() < 1e-8);
        assert!((m.peak_value - 8.790999e-3).abs() < 1e-7);
        assert!((m.dip_depth_fraction - 0.5561).abs() < 5e-4);

        let maxima = local_maxima(&curve);
        assert_eq!(maxima.len(), 2, "{maxima:?}");
        assert!((maxima[0].0 + 0.55).abs() < 1e-12);
        assert!((maxima[1].0 - 0.55).abs() < 1e-12);
    }

    #[test]
    fn spectrum_is_symmetric_without_pumping() {
        let curve = sweep_probe_detuning(&fig2a_params(), &default_detuning_grid()).unwrap();
        let n = curve.im_rho21.len();
        for k in 0..n {
            let diff = (curve.im_rho21[k] - curve.im_rho21[n - 1 - k]).abs();
            assert!(diff <= 1e-9, "asymmetry {diff:.3e} at index {k}");
        }
    }

    #[test]
    fn equal_decay_dip_is_much_shallower() {
        let fig2a = dip_metrics(
            &sweep_probe_detuning(&fig2a_params(), &default_detuning_grid()).unwrap(),
        )
        .unwrap();
        let fig4a_params = SystemParams {
            gamma32: 1.0,
            ..fig2a_params()
        };
        let fig4a = dip_metrics(
            &sweep_probe_detuning(&fig4a_params, &default_detuning_grid()).unwrap(),
        )
        .unwrap();
        assert!(fig4a.dip_depth_fraction < 1e-3, "{fig4a:?}");
        assert!(fig4a.dip_depth_fraction <= 0.5 * fig2a.dip_depth_fraction);

        let maxima = local_maxima(
            &sweep_probe_detuning(&fig4a_params, &default_detuning_grid()).unwrap(),
        );
        assert_eq!(maxima.len(), 1);
        assert!(maxima[0].0.abs() < 1e-12);
    }

    #[test]
    fn weak_pumping_shifts_dip_metrics_as_measured() {
        let base = dip_metrics(
            &sweep_probe_detuning(&fig2a_params(), &default_detuning_grid()).unwrap(),
        )
        .unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        for lambda12 in [0.001, 0.01] {
            let params = SystemParams {
                lambda12,
                ..fig2a_params()
            };
            let m =
                dip_metrics(&sweep_probe_detuning(&params, &default_detuning_grid()).unwrap())
                    .unwrap();
            assert!(rel(m.line_center_value, base.line_center_value) < 0.10);
            assert!(rel(m.peak_value, base.peak_value) < 0.10);
            assert!(rel(m.dip_depth_fraction, base.dip_depth_fraction) < 0.10);
        }
        // at lambda12 = 0.1 the peak drops by about a third while the line
        // center barely moves, so the depth fraction deviates far past 10%
        let params = SystemParams {
            lambda12: 0.1,
            ..fig2a_params()
        };
        let m = dip_metrics(&sweep_probe_detuning(&params, &default_detuning_grid()).unwrap())
            .unwrap();
        assert!(rel(m.line_center_value, base.line_center_value) < 0.01);
        assert!((rel(m.peak_value, base.peak_value) - 0.316).abs() < 0.01);
        assert!((rel(m.dip_depth_fraction, base.dip_depth_fraction) - 0.375).abs() < 0.01);
    }

    #[test]
    fn integrated_absorption_decreases_with_pumping() {
        let mut previous = f64::INFINITY;
        for (k, lambda12) in [0.0, 0.001, 0.01, 0.1, 0.5, 1.0].into_iter().enumerate() {
            let params = SystemParams {
                lambda12,
                ..fig2a_params()
            };
            let curve = sweep_probe_detuning(&params, &default_detuning_grid()).unwrap();
            let integral = integrated_absorption(&curve);
            if k == 0 {
                assert!((integral - 2.645920e-2).abs() < 1e-7);
            }
            assert!(
                integral < previous,
                "integral {integral} did not decrease at lambda12 = {lambda12}"
            );
            previous = integral;
        }
    }

    #[test]
    fn dip_metrics_requires_coverage() {
        let narrow: Vec<f64> = (0..401).map(|k| -2.0 + 0.01 * k as f64).collect();
        let curve = sweep_probe_detuning(&fig2a_params(), &narrow).unwrap();
        assert!(matches!(dip_metrics(&curve), Err(Error::GridCoverage(_))));

        let no_zero = vec![-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0];
        let curve = sweep_probe_detuning(&fig2a_params(), &no_zero).unwrap();
        assert!(matches!(dip_metrics(&curve), Err(Error::GridCoverage(_))));
    }

    #[test]
    fn sweep_errors_name_the_detuning() {
        // level 3 is fully decoupled here, so every point is degenerate and
        // the first grid point is reported
        let params = SystemParams {
            gamma21: 1.0,
            omega_p: 0.01,
            ..SystemParams::default()
        };
        let err = sweep_probe_detuning(&params, &[-1.0, 0.0, 1.0]).unwrap_err();
        match err {
            Error::SweepPoint { delta_p, source } => {
                assert_eq!(delta_p, -1.0);
                assert!(matches!(*source, Error::DegenerateSteadyState { .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn physical_unit_conversions() {
        assert_eq!(to_physical_units(1.0, QuantityKind::Rate), 5.0);
        assert!((to_physical_units(0.16, QuantityKind::Rate) - 0.8).abs() < 1e-12);
        assert_eq!(to_physical_units(0.5, QuantityKind::Frequency), 2.5);
        let ns = to_physical_units(1.0, QuantityKind::Time);
        assert!((ns - 31.830988618379067).abs() < 1e-9);
    }
}
