//! Normalized two-time intensity correlations G(tau) of the emitted light,
//! computed by the regression route: project onto the post-emission state,
//! propagate with the same generator, read the emitting-level population,
//! divide by its stationary value.
//!
//! G < 1 marks nonclassical (antibunched) light, G > 1 classical bunching,
//! and G -> 1 as the conditional state relaxes back to stationarity.

use crate::density::DensityMatrix;
use crate::dynamics::{propagate, Method};
use crate::error::{Error, Result};
use crate::lindblad::Liouvillian;
use crate::params::SystemParams;
use crate::steady::SteadyStateSolution;

/// Emission line whose intensity autocorrelation is being computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    /// |2> -> |1>, the probe line
    Probe,
    /// |3> -> |2>, the pump line
    Pump,
}

impl Transition {
    /// 0-based index of the emitting upper level.
    pub fn emitting_level(self) -> usize {
        match self {
            Transition::Probe => 1,
            Transition::Pump => 2,
        }
    }

    /// 0-based index of the post-emission level.
    pub fn reset_level(self) -> usize {
        match self {
            Transition::Probe => 0,
            Transition::Pump => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transition::Probe => "probe",
            Transition::Pump => "pump",
        }
    }
}

/// Atomic state immediately after one emission on the transition: the lower
/// level of the line, with no coherence.
pub fn reset_state(transition: Transition) -> DensityMatrix {
    DensityMatrix::level(transition.reset_level())
}

#[derive(Debug, Clone)]
pub struct CorrelationCurve {
    pub transition: Transition,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    pub params: SystemParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    /// G < 1
    Nonclassical,
    /// G > 1
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub start: f64,
    pub end: f64,
    pub label: RegionLabel,
}

const NORMALIZATION_FLOOR: f64 = 1e-14;
/// Round-off allowance on G; anything more negative is a real defect.
const NEGATIVE_G_TOL: f64 = -1e-10;

pub fn g2(
    l: &Liouvillian,
    sol: &SteadyStateSolution,
    transition: Transition,
    taus: &[f64],
) -> Result<CorrelationCurve> {
    g2_with_method(l, sol, transition, taus, Method::MatrixExponential)
}

pub fn g2_with_method(
    l: &Liouvillian,
    sol: &SteadyStateSolution,
    transition: Transition,
    taus: &[f64],
    method: Method,
) -> Result<CorrelationCurve> {
    let params = *l.params().ok_or_else(|| {
        Error::InvalidParams(
            "correlation curves need a generator built from parameters".into(),
        )
    })?;
    let j = transition.emitting_level();
    let pop_ss = sol.rho_ss.populations()[j];
    if pop_ss <= NORMALIZATION_FLOOR {
        return Err(Error::VanishingNormalization {
            transition: transition.name(),
            floor: NORMALIZATION_FLOOR,
        });
    }

    let run = propagate(l, &reset_state(transition), taus, method)?;
    // propagate prepends tau=0 when the request starts later
    let offset = run.times.len() - taus.len();
    let mut values = Vec::with_capacity(taus.len());
    for (k, &tau) in taus.iter().enumerate() {
        let g = run.states[offset + k].populations()[j] / pop_ss;
        if g < NEGATIVE_G_TOL {
            return Err(Error::NegativeCorrelation { tau, value: g });
        }
        values.push(g.max(0.0));
    }

    Ok(CorrelationCurve {
        transition,
        taus: taus.to_vec(),
        values,
        params,
    })
}

/// Splits the curve into maximal intervals of constant sign of G - 1.
/// Boundaries between adjacent regions are the unity crossings, located by
/// linear interpolation on the grid; intervals shorter than two grid steps
/// are merged into their neighbors so grid-level noise does not register as
/// a region.
pub fn classify_regions(curve: &CorrelationCurve) -> Vec<Region> {
    let taus = &curve.taus;
    let vals = &curve.values;
    if taus.len() < 2 {
        return Vec::new();
    }

    let mut regions: Vec<Region> = Vec::new();
    let mut current: Option<(f64, RegionLabel, usize)> = None; // start, label, last index
    for k in 0..taus.len() {
        let label = if vals[k] > 1.0 {
            Some(RegionLabel::Classical)
        } else if vals[k] < 1.0 {
            Some(RegionLabel::Nonclassical)
        } else {
            None // exactly on the boundary; attaches to the running region
        };
        match (current, label) {
            (None, Some(lab)) => current = Some((taus[k], lab, k)),
            (None, None) => {}
            (Some((start, lab, _)), None) => current = Some((start, lab, k)),
            (Some((start, lab, _)), Some(new_lab)) if new_lab == lab => {
                current = Some((start, lab, k));
            }
            (Some((start, lab, last)), Some(new_lab)) => {
                // sign change between last-seen point of the old region and
                // this one: interpolate the unity crossing
                let (t0, v0) = (taus[last], vals[last]);
                let (t1, v1) = (taus[k], vals[k]);
                let cross = if (v1 - v0).abs() > 0.0 {
                    t0 + (1.0 - v0) / (v1 - v0) * (t1 - t0)
                } else {
                    0.5 * (t0 + t1)
                };
                regions.push(Region {
                    start,
                    end: cross,
                    label: lab,
                });
                current = Some((cross, new_lab, k));
            }
        }
    }
    if let Some((start, lab, _)) = current {
        regions.push(Region {
            start,
            end: *taus.last().unwrap(),
            label: lab,
        });
    }

    // merge sub-resolution intervals into their neighbors
    let step = (taus[taus.len() - 1] - taus[0]) / (taus.len() - 1) as f64;
    let min_width = 2.0 * step;
    loop {
        if regions.len() <= 1 {
            break;
        }
        let shortest = (0..regions.len())
            .min_by(|&a, &b| {
                let wa = regions[a].end - regions[a].start;
                let wb = regions[b].end - regions[b].start;
                wa.total_cmp(&wb)
            })
            .unwrap();
        if regions[shortest].end - regions[shortest].start >= min_width {
            break;
        }
        if shortest == 0 {
            regions[1].start = regions[0].start;
            regions.remove(0);
        } else if shortest == regions.len() - 1 {
            let end = regions[shortest].end;
            regions[shortest - 1].end = end;
            regions.remove(shortest);
        } else {
            // interior: the two neighbors carry the same label and coalesce
            let end = regions[shortest + 1].end;
            regions[shortest - 1].end = end;
            regions.drain(shortest..=shortest + 1);
        }
    }
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::build_liouvillian;
    use crate::steady::solve_steady_state;

    fn fig3a_params(lambda12: f64) -> SystemParams {
        SystemParams {
            gamma21: 1.0,
            gamma32: 0.16,
            lambda12,
            omega_p: 0.01,
            omega_c: 0.5,
            ..SystemParams::default()
        }
    }

    fn tau_grid(max: f64, step: f64) -> Vec<f64> {
        let n = (max / step).round() as usize;
        (0..=n).map(|k| k as f64 * step).collect()
    }

    fn probe_curve(params: &SystemParams, taus: &[f64]) -> CorrelationCurve {
        let l = build_liouvillian(params).unwrap();
        let sol = solve_steady_state(&l).unwrap();
        g2(&l, &sol, Transition::Probe, taus).unwrap()
    }

    #[test]
    fn reset_states_are_bare_lower_levels() {
        let probe = reset_state(Transition::Probe);
        assert_eq!(probe.populations(), [1.0, 0.0, 0.0]);
        let pump = reset_state(Transition::Pump);
        assert_eq!(pump.populations(), [0.0, 1.0, 0.0]);
        for rho in [probe, pump] {
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                assert_eq!(rho.element(i, j).norm(), 0.0);
            }
        }
    }

    #[test]
    fn probe_correlation_vanishes_at_zero_delay() {
        let curve = probe_curve(&fig3a_params(0.0), &tau_grid(1.0, 0.1));
        assert_eq!(curve.values[0], 0.0);
    }

    #[test]
    fn correlation_relaxes_to_unity() {
        for lambda12 in [0.0, 0.1] {
            let curve = probe_curve(&fig3a_params(lambda12), &[0.0, 50.0]);
            let last = *curve.values.last().unwrap();
            assert!(
                (last - 1.0).abs() <= 1e-4,
                "G(50) = {last} at lambda12 = {lambda12}"
            );
        }
    }

    #[test]
    fn long_time_value_matches_reference() {
        let curve = probe_curve(&fig3a_params(0.0), &tau_grid(10.0, 0.01));
        let last = *curve.values.last().unwrap();
        assert!((last - 0.99697).abs() < 2e-5, "G(10) = {last}");
    }

    #[test]
    fn propagation_methods_agree_on_g2() {
        let params = fig3a_params(0.0);
        let l = build_liouvillian(&params).unwrap();
        let sol = solve_steady_state(&l).unwrap();
        let taus = tau_grid(10.0, 0.01);
        let a = g2(&l, &sol, Transition::Probe, &taus).unwrap();
        let b = g2_with_method(&l, &sol, Transition::Probe, &taus, Method::AdaptiveOde).unwrap();
        let worst = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "methods disagree by {worst:.3e}");
    }

    #[test]
    fn curve_is_invariant_under_time_rescaling() {
        let base = fig3a_params(0.1);
        let taus = tau_grid(10.0, 0.05);
        let a = probe_curve(&base, &taus);

        let scaled = SystemParams {
            gamma21: 2.0,
            gamma32: 0.32,
            lambda12: 0.2,
            lambda13: 0.0,
            omega_p: 0.02,
            omega_c: 1.0,
            delta_p: 0.0,
            delta_c: 0.0,
        };
        let halved: Vec<f64> = taus.iter().map(|t| t / 2.0).collect();
        let b = probe_curve(&scaled, &halved);
        let worst = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "rescaled curve deviates by {worst:.3e}");
    }

    #[test]
    fn classification_of_constant_unity_curve_is_empty() {
        let curve = CorrelationCurve {
            transition: Transition::Probe,
            taus: tau_grid(1.0, 0.1),
            values: vec![1.0; 11],
            params: fig3a_params(0.0),
        };
        assert!(classify_regions(&curve).is_empty());
    }

    #[test]
    fn unpumped_curve_starts_nonclassical_then_crosses() {
        let curve = probe_curve(&fig3a_params(0.0), &tau_grid(10.0, 0.01));
        let regions = classify_regions(&curve);
        assert!(regions.len() >= 2, "regions: {regions:?}");
        assert_eq!(regions[0].label, RegionLabel::Nonclassical);
        assert_eq!(regions[0].start, 0.0);
        assert_eq!(regions[1].label, RegionLabel::Classical);
        // unity crossing sits between the 1.05 and 1.06 grid points
        assert!(
            regions[1].start > 1.0 && regions[1].start < 1.1,
            "crossing at {}",
            regions[1].start
        );
        // the approach to unity is from below: a final shallow nonclassical
        // stretch reaches the end of the grid
        let last = regions.last().unwrap();
        assert_eq!(last.label, RegionLabel::Nonclassical);
        assert_eq!(last.end, 10.0);
    }

    #[test]
    fn weak_pumping_makes_the_whole_window_nonclassical() {
        for lambda12 in [0.001, 0.01, 0.1] {
            let curve = probe_curve(&fig3a_params(lambda12), &tau_grid(10.0, 0.01));
            let regions = classify_regions(&curve);
            assert_eq!(regions.len(), 1, "lambda12 = {lambda12}: {regions:?}");
            assert_eq!(regions[0].label, RegionLabel::Nonclassical);
        }
    }

    #[test]
    fn equal_decay_strong_control_shows_classical_window() {
        let params = SystemParams {
            gamma21: 1.0,
            gamma32: 1.0,
            omega_p: 0.01,
            omega_c: 1.0,
            ..SystemParams::default()
        };
        let curve = probe_curve(&params, &tau_grid(10.0, 0.01));
        let regions = classify_regions(&curve);
        let window = regions
            .iter()
            .find(|r| r.label == RegionLabel::Classical && r.end > 2.5 && r.start < 4.0)
            .unwrap_or_else(|| panic!("no classical window overlapping [2.5, 4]: {regions:?}"));
        assert!(window.start > 2.2 && window.start < 2.5, "{window:?}");
        assert!(window.end > 4.5 && window.end < 4.9, "{window:?}");

        let peak = curve
            .taus
            .iter()
            .zip(&curve.values)
            .filter(|(t, _)| **t >= 2.5 && **t <= 4.0)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        assert!((peak - 1.01532).abs() < 1e-4, "peak in window: {peak}");
    }

    #[test]
    fn vanishing_population_is_rejected() {
        let params = SystemParams {
            gamma21: 1.0,
            gamma32: 0.16,
            omega_c: 0.5,
            ..SystemParams::default()
        };
        let l = build_liouvillian(&params).unwrap();
        let sol = solve_steady_state(&l).unwrap();
        assert!(matches!(
            g2(&l, &sol, Transition::Probe, &[0.0, 1.0]),
            Err(Error::VanishingNormalization {
                transition: "probe",
                ..
            })
        ));
    }

    #[test]
    fn short_noise_regions_are_merged() {
        // a two-point classical blip inside a long nonclassical stretch is
        // below resolution and must not survive classification
        let taus = tau_grid(1.0, 0.01);
        let mut values = vec![0.5; taus.len()];
        values[50] = 1.0 + 1e-6;
        let curve = CorrelationCurve {
            transition: Transition::Probe,
            taus,
            values,
            params: fig3a_params(0.0),
        };
        let regions = classify_regions(&curve);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].label, RegionLabel::Nonclassical);
        assert_eq!(regions[0].start, 0.0);
        assert_eq!(regions[0].end, 1.0);
    }
}
