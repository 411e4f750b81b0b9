//! Quantum-jump unraveling of the master equation, used as an independent
//! stochastic oracle for the deterministic solvers.
//!
//! Each trajectory is a pure state evolved under the non-Hermitian effective
//! Hamiltonian on a fixed step grid, with norm-threshold jump detection:
//! draw r uniform, evolve until the squared norm falls to r, locate the jump
//! time by linear interpolation of the squared norm inside the step, collapse
//! onto a jump channel picked with probability proportional to its outflow
//! weight, redraw r, and finish the step remainder. Ensemble averages of
//! normalized populations reproduce the density-matrix evolution.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::correlations::Transition;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{expm, pairwise_sum};
use crate::params::SystemParams;

/// Fixed integration step, in units of 1/gamma21.
const STEP: f64 = 1e-3;
/// Sample times must sit on the step grid to within this absolute tolerance.
const SNAP_TOL: f64 = 1e-9;
/// Initial states must be diagonal; off-diagonal magnitudes above this reject.
const DIAGONAL_TOL: f64 = 1e-14;
/// Below this squared norm the state is renormalized and the jump threshold
/// redrawn; survival is memoryless, so the statistics are unchanged.
const NORM_FLOOR: f64 = 1e-280;
/// Steady-state emitting population below this cannot normalize a g2 curve.
const G2_POPULATION_FLOOR: f64 = 1e-10;
/// Steps spent relaxing toward steady state before any equilibrium window.
const BURN_STEPS: u64 = 50_000;
/// Steps in the equilibrium averaging window (50 to 100 in units of 1/gamma21).
const WINDOW_STEPS: u64 = 50_000;
/// Stream offset separating equilibration trajectories from reset-start ones.
const EQUILIBRATION_STREAM: u64 = 1 << 63;
/// Stream offset for the rate-bookkeeping ensemble.
const BOOKKEEPING_STREAM: u64 = 1 << 62;

/// One dissipative channel: population leaves `from` for `to` at `rate`
/// (the full Lindblad rate, i.e. the decay constant of the departure level's
/// population when nothing else acts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpChannel {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

/// What a Monte Carlo estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    Population { level: usize, time: f64 },
    G2 { transition: Transition, tau: f64 },
}

/// Ensemble mean and its standard error over independent trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_trajectories: usize,
    pub quantity: Quantity,
}

/// Observed versus predicted jump activity for one channel at equilibrium.
/// `difference_se` is the standard error of the per-trajectory difference
/// between the two rates, so agreement within a few of it is the pass test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStatistics {
    pub channel: JumpChannel,
    pub observed_rate: f64,
    pub predicted_rate: f64,
    pub difference_se: f64,
    pub n_trajectories: usize,
}

/// Dissipative channels for the given parameters, zero-rate ones omitted.
pub fn jump_channels(params: &SystemParams) -> Vec<JumpChannel> {
    let all = [
        JumpChannel { from: 1, to: 0, rate: 2.0 * params.gamma21 },
        JumpChannel { from: 2, to: 1, rate: 2.0 * params.gamma32 },
        JumpChannel { from: 0, to: 1, rate: 2.0 * params.lambda12 },
        JumpChannel { from: 0, to: 2, rate: 2.0 * params.lambda13 },
    ];
    all.into_iter().filter(|c| c.rate > 0.0).collect()
}

/// 3x3 complex matrix in plain arrays; the per-step propagator application
/// is the hot path and stays off ndarray.
#[derive(Debug, Clone, Copy)]
struct Mat3 {
    m: [[Complex64; 3]; 3],
}

impl Mat3 {
    fn from_array(a: &Array2<Complex64>) -> Self {
        let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = a[(i, j)];
            }
        }
        Mat3 { m }
    }

    #[inline]
    fn apply(&self, v: &[Complex64; 3]) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (row, slot) in self.m.iter().zip(out.iter_mut()) {
            *slot = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        out
    }
}

#[inline]
fn norm2(v: &[Complex64; 3]) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()
}

fn basis_state(level: usize) -> [Complex64; 3] {
    let mut v = [Complex64::new(0.0, 0.0); 3];
    v[level] = Complex64::new(1.0, 0.0);
    v
}

/// Shared per-parameter-set context: channels, the generator of the
/// non-unitary Schrodinger evolution, and the cached full-step propagator.
struct Oracle {
    channels: Vec<JumpChannel>,
    generator: Array2<Complex64>,
    step_propagator: Mat3,
    dt: f64,
}

impl Oracle {
    fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let channels = jump_channels(params);
        let i = Complex64::i();

        // Rotating-frame Hamiltonian of the driven cascade.
        let mut h = Array2::<Complex64>::zeros((3, 3));
        h[(1, 1)] = Complex64::new(-params.delta_p, 0.0);
        h[(2, 2)] = Complex64::new(-(params.delta_p + params.delta_c), 0.0);
        h[(0, 1)] = Complex64::new(-params.omega_p, 0.0);
        h[(1, 0)] = Complex64::new(-params.omega_p, 0.0);
        h[(1, 2)] = Complex64::new(-params.omega_c, 0.0);
        h[(2, 1)] = Complex64::new(-params.omega_c, 0.0);

        // generator = -i (H - i/2 sum_k rate_k |from_k><from_k|), so that
        // d psi / dt = generator . psi between jumps.
        let mut generator = h.mapv(|z| -i * z);
        for c in &channels {
            generator[(c.from, c.from)] -= Complex64::new(0.5 * c.rate, 0.0);
        }

        let dt = STEP / params.gamma21;
        let step_propagator = Mat3::from_array(&expm(&(&generator * Complex64::new(dt, 0.0)))?);
        Ok(Oracle { channels, generator, step_propagator, dt })
    }

    fn propagator_for(&self, duration: f64) -> Result<Mat3> {
        let scaled = &self.generator * Complex64::new(duration, 0.0);
        Ok(Mat3::from_array(&expm(&scaled)?))
    }
}

/// One stochastic trajectory: unnormalized pure state plus the survival
/// threshold for the next jump.
struct Walker<'a> {
    oracle: &'a Oracle,
    psi: [Complex64; 3],
    threshold: f64,
    rng: ChaCha12Rng,
    jump_counts: [u64; 4],
}

impl<'a> Walker<'a> {
    fn new(oracle: &'a Oracle, level: usize, mut rng: ChaCha12Rng) -> Self {
        let threshold = rng.gen::<f64>();
        Walker { oracle, psi: basis_state(level), threshold, rng, jump_counts: [0; 4] }
    }

    /// Advance one full grid step, resolving any jumps inside it.
    #[inline]
    fn step(&mut self) -> Result<()> {
        let next = self.oracle.step_propagator.apply(&self.psi);
        let n_next = norm2(&next);
        if n_next > self.threshold {
            self.psi = next;
            if n_next < NORM_FLOOR {
                self.renormalize(n_next);
            }
            return Ok(());
        }
        self.resolve_jump(self.oracle.dt, n_next, Some(next))
    }

    fn renormalize(&mut self, n: f64) {
        let scale = Complex64::new(1.0 / n.sqrt(), 0.0);
        for a in &mut self.psi {
            *a *= scale;
        }
        self.threshold = self.rng.gen::<f64>();
    }

    /// Advance by an arbitrary sub-step duration.
    fn advance(&mut self, duration: f64) -> Result<()> {
        if duration <= 0.0 {
            return Ok(());
        }
        let next = self.oracle.propagator_for(duration)?.apply(&self.psi);
        let n_next = norm2(&next);
        if n_next > self.threshold {
            self.psi = next;
            if n_next < NORM_FLOOR {
                self.renormalize(n_next);
            }
            return Ok(());
        }
        self.resolve_jump(duration, n_next, Some(next))
    }

    /// The squared norm crossed the threshold inside an interval of length
    /// `duration`. Interpolate the crossing, collapse, finish the remainder.
    fn resolve_jump(
        &mut self,
        duration: f64,
        n_end: f64,
        end_state: Option<[Complex64; 3]>,
    ) -> Result<()> {
        let n_start = norm2(&self.psi);
        let fraction = if n_start > n_end {
            ((n_start - self.threshold) / (n_start - n_end)).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let at_jump = if fraction >= 1.0 {
            match end_state {
                Some(s) => s,
                None => self.oracle.propagator_for(duration)?.apply(&self.psi),
            }
        } else {
            self.oracle.propagator_for(fraction * duration)?.apply(&self.psi)
        };

        let mut weights = [0.0f64; 4];
        let mut total = 0.0;
        for (k, c) in self.oracle.channels.iter().enumerate() {
            weights[k] = c.rate * at_jump[c.from].norm_sqr();
            total += weights[k];
        }
        if !(total > 0.0) {
            return Err(Error::TrajectoryInput(
                "jump triggered with zero total outflow weight".to_string(),
            ));
        }
        let draw = self.rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = self.oracle.channels.len() - 1;
        for (k, w) in weights[..self.oracle.channels.len()].iter().enumerate() {
            acc += w;
            if draw < acc {
                chosen = k;
                break;
            }
        }
        self.jump_counts[chosen] += 1;
        self.psi = basis_state(self.oracle.channels[chosen].to);
        self.threshold = self.rng.gen::<f64>();
        self.advance(duration - fraction * duration)
    }

    #[inline]
    fn populations(&self) -> [f64; 3] {
        let n = norm2(&self.psi);
        [
            self.psi[0].norm_sqr() / n,
            self.psi[1].norm_sqr() / n,
            self.psi[2].norm_sqr() / n,
        ]
    }
}

fn trajectory_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Map a requested time onto the step grid, rejecting times that miss it.
fn snap_to_grid(t: f64, dt: f64) -> Result<u64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::TrajectoryInput(format!("sample time {t} is not a finite time >= 0")));
    }
    let steps = (t / dt).round();
    if (t - steps * dt).abs() > SNAP_TOL {
        return Err(Error::TrajectoryInput(format!(
            "sample time {t} is not on the {dt} step grid"
        )));
    }
    Ok(steps as u64)
}

fn snap_times(times: &[f64], dt: f64) -> Result<Vec<u64>> {
    if times.is_empty() {
        return Err(Error::TrajectoryInput("no sample times given".to_string()));
    }
    let steps: Vec<u64> = times.iter().map(|&t| snap_to_grid(t, dt)).collect::<Result<_>>()?;
    if steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::TrajectoryInput(
            "sample times must be strictly increasing".to_string(),
        ));
    }
    Ok(steps)
}

fn check_ensemble_size(n: usize) -> Result<()> {
    if n < 100 {
        return Err(Error::TrajectoryInput(format!(
            "ensemble of {n} trajectories is too small; need at least 100"
        )));
    }
    Ok(())
}

/// Draw an initial level from the diagonal of a (diagonal) density matrix.
fn draw_level(cumulative: &[f64; 3], rng: &mut ChaCha12Rng) -> usize {
    let u = rng.gen::<f64>();
    if u < cumulative[0] {
        0
    } else if u < cumulative[1] {
        1
    } else {
        2
    }
}

fn diagonal_cumulative(rho0: &DensityMatrix) -> Result<[f64; 3]> {
    for i in 0..3 {
        for j in 0..3 {
            if i != j && rho0.element(i, j).norm() > DIAGONAL_TOL {
                return Err(Error::TrajectoryInput(
                    "initial state must be diagonal in the level basis".to_string(),
                ));
            }
        }
    }
    let p = rho0.populations();
    let total: f64 = p.iter().map(|&x| x.max(0.0)).sum();
    let mut cumulative = [0.0; 3];
    let mut acc = 0.0;
    for (slot, &x) in cumulative.iter_mut().zip(p.iter()) {
        acc += x.max(0.0) / total;
        *slot = acc;
    }
    cumulative[2] = 1.0;
    Ok(cumulative)
}

/// Walk one trajectory, recording normalized populations at the given steps.
fn sample_one(
    oracle: &Oracle,
    level: usize,
    sample_steps: &[u64],
    rng: ChaCha12Rng,
) -> Result<Vec<[f64; 3]>> {
    let mut walker = Walker::new(oracle, level, rng);
    let mut out = Vec::with_capacity(sample_steps.len());
    let mut next = 0;
    if sample_steps[next] == 0 {
        out.push(walker.populations());
        next += 1;
    }
    let last = *sample_steps.last().unwrap();
    for step in 1..=last {
        walker.step()?;
        if next < sample_steps.len() && sample_steps[next] == step {
            out.push(walker.populations());
            next += 1;
        }
    }
    Ok(out)
}

/// Burn in, then time-average the normalized populations over the window.
/// Also reports per-channel jump counts inside the window.
fn equilibrate_one(
    oracle: &Oracle,
    rng: ChaCha12Rng,
    window_steps: u64,
) -> Result<([f64; 3], [u64; 4])> {
    let mut walker = Walker::new(oracle, 0, rng);
    for _ in 0..BURN_STEPS {
        walker.step()?;
    }
    walker.jump_counts = [0; 4];
    let mut sums = [0.0f64; 3];
    for _ in 0..window_steps {
        walker.step()?;
        let p = walker.populations();
        for (s, v) in sums.iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    let inv = 1.0 / window_steps as f64;
    Ok(([sums[0] * inv, sums[1] * inv, sums[2] * inv], walker.jump_counts))
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / ((n - 1) as f64);
    (mean, (var / n as f64).sqrt())
}

fn run_parallel<T, F>(n: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(|k| job(k)).collect();
    results.into_iter().collect()
}

/// Ensemble estimates of the three level populations at the sample times,
/// starting from a diagonal initial state. Trajectory k uses stream k of a
/// counter-based generator seeded once, so results are reproducible and
/// independent of the parallel schedule.
pub fn run_trajectories(
    params: &SystemParams,
    rho0: &DensityMatrix,
    sample_times: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<[TrajectoryEstimate; 3]>> {
    check_ensemble_size(n)?;
    let oracle = Oracle::new(params)?;
    let steps = snap_times(sample_times, oracle.dt)?;
    let cumulative = diagonal_cumulative(rho0)?;

    let per_traj = run_parallel(n, |k| {
        let mut rng = trajectory_rng(seed, k as u64);
        let level = draw_level(&cumulative, &mut rng);
        sample_one(&oracle, level, &steps, rng)
    })?;

    let mut out = Vec::with_capacity(steps.len());
    for (ti, &step) in steps.iter().enumerate() {
        let time = step as f64 * oracle.dt;
        let mut row: Vec<TrajectoryEstimate> = Vec::with_capacity(3);
        for level in 0..3 {
            let values: Vec<f64> = per_traj.iter().map(|t| t[ti][level]).collect();
            let (mean, std_error) = mean_and_se(&values);
            row.push(TrajectoryEstimate {
                mean,
                std_error,
                n_trajectories: n,
                quantity: Quantity::Population { level, time },
            });
        }
        out.push([row[0], row[1], row[2]]);
    }
    Ok(out)
}

fn equilibration_averages(oracle: &Oracle, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    let results = run_parallel(n, |k| {
        let rng = trajectory_rng(seed, EQUILIBRATION_STREAM | k as u64);
        equilibrate_one(oracle, rng, WINDOW_STEPS)
    })?;
    Ok(results.into_iter().map(|(avg, _)| avg).collect())
}

fn population_estimates(per_traj: &[[f64; 3]], n: usize) -> [TrajectoryEstimate; 3] {
    let window_mid = (BURN_STEPS + WINDOW_STEPS) as f64 * STEP;
    let mut row: Vec<TrajectoryEstimate> = Vec::with_capacity(3);
    for level in 0..3 {
        let values: Vec<f64> = per_traj.iter().map(|t| t[level]).collect();
        let (mean, std_error) = mean_and_se(&values);
        row.push(TrajectoryEstimate {
            mean,
            std_error,
            n_trajectories: n,
            quantity: Quantity::Population { level, time: window_mid },
        });
    }
    [row[0], row[1], row[2]]
}

/// Equilibrium populations estimated from per-trajectory time averages over
/// the window after burn-in.
pub fn equilibrium_populations(
    params: &SystemParams,
    n: usize,
    seed: u64,
) -> Result<[TrajectoryEstimate; 3]> {
    check_ensemble_size(n)?;
    let oracle = Oracle::new(params)?;
    let averages = equilibration_averages(&oracle, n, seed)?;
    Ok(population_estimates(&averages, n))
}

/// Normalized intensity correlation of one emission line at the given delays,
/// plus the equilibrium populations of the ensemble that normalized it.
///
/// Numerator: emitting-level population at delay tau after a reset onto the
/// lower level, averaged over trajectories. Denominator: time-averaged
/// emitting-level population of an independent equilibrated ensemble. The
/// standard error of the ratio comes from jackknifing trajectory pairs.
///
/// The estimate is unbiased, but when the emitting population is carried by
/// rare jump excursions (weak probe, no incoherent pumping) the ensemble
/// needs to be large enough to catch some: an excursion lives in roughly
/// `rate * lifetime * n` trajectories at any fixed delay, and a sample that
/// catches none sits at the no-jump value with a jackknife error that knows
/// nothing about the missing mass.
pub fn g2_and_steady_from_trajectories(
    params: &SystemParams,
    transition: Transition,
    taus: &[f64],
    n: usize,
    seed: u64,
) -> Result<(Vec<TrajectoryEstimate>, [TrajectoryEstimate; 3])> {
    check_ensemble_size(n)?;
    let oracle = Oracle::new(params)?;
    let steps = snap_times(taus, oracle.dt)?;
    let emit = transition.emitting_level();
    let reset = transition.reset_level();

    let numer = run_parallel(n, |k| {
        let rng = trajectory_rng(seed, k as u64);
        sample_one(&oracle, reset, &steps, rng)
    })?;
    let averages = equilibration_averages(&oracle, n, seed)?;

    let denom_values: Vec<f64> = averages.iter().map(|a| a[emit]).collect();
    let denom_sum = pairwise_sum(&denom_values);
    let denom_mean = denom_sum / n as f64;
    if denom_mean <= G2_POPULATION_FLOOR {
        return Err(Error::VanishingNormalization {
            transition: transition.name(),
            floor: G2_POPULATION_FLOOR,
        });
    }

    let mut estimates = Vec::with_capacity(steps.len());
    for (ti, &step) in steps.iter().enumerate() {
        let tau = step as f64 * oracle.dt;
        let numer_values: Vec<f64> = numer.iter().map(|t| t[ti][emit]).collect();
        let numer_sum = pairwise_sum(&numer_values);
        let mean = (numer_sum / n as f64) / denom_mean;

        // Jackknife over (numerator, denominator) trajectory pairs.
        let leave_one: Vec<f64> = numer_values
            .iter()
            .zip(denom_values.iter())
            .map(|(&x, &y)| (numer_sum - x) / (denom_sum - y))
            .collect();
        let jk_mean = pairwise_sum(&leave_one) / n as f64;
        let sq: Vec<f64> =
            leave_one.iter().map(|&v| (v - jk_mean) * (v - jk_mean)).collect();
        let std_error = ((n as f64 - 1.0) / n as f64 * pairwise_sum(&sq)).sqrt();

        estimates.push(TrajectoryEstimate {
            mean,
            std_error,
            n_trajectories: n,
            quantity: Quantity::G2 { transition, tau },
        });
    }
    Ok((estimates, population_estimates(&averages, n)))
}

/// As above, without the equilibrium population report.
pub fn g2_from_trajectories(
    params: &SystemParams,
    transition: Transition,
    taus: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<TrajectoryEstimate>> {
    g2_and_steady_from_trajectories(params, transition, taus, n, seed).map(|(g2, _)| g2)
}

/// Detailed-balance check data: for each channel, the jump rate observed at
/// equilibrium against the rate predicted from the time-averaged departure
/// population. `window` is the observation span after burn-in.
pub fn channel_rate_statistics(
    params: &SystemParams,
    window: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<ChannelStatistics>> {
    check_ensemble_size(n)?;
    let oracle = Oracle::new(params)?;
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::TrajectoryInput(format!(
            "observation window {window} must be a positive finite time"
        )));
    }
    let window_steps = snap_to_grid(window, oracle.dt)?;
    if window_steps == 0 {
        return Err(Error::TrajectoryInput(
            "observation window is shorter than one step".to_string(),
        ));
    }
    let span = window_steps as f64 * oracle.dt;

    let results = run_parallel(n, |k| {
        let rng = trajectory_rng(seed, BOOKKEEPING_STREAM | k as u64);
        equilibrate_one(&oracle, rng, window_steps)
    })?;

    let mut out = Vec::with_capacity(oracle.channels.len());
    for (ci, channel) in oracle.channels.iter().enumerate() {
        let observed: Vec<f64> =
            results.iter().map(|(_, counts)| counts[ci] as f64 / span).collect();
        let predicted: Vec<f64> =
            results.iter().map(|(avg, _)| channel.rate * avg[channel.from]).collect();
        let diffs: Vec<f64> =
            observed.iter().zip(predicted.iter()).map(|(o, p)| o - p).collect();
        let (_, difference_se) = mean_and_se(&diffs);
        out.push(ChannelStatistics {
            channel: *channel,
            observed_rate: pairwise_sum(&observed) / n as f64,
            predicted_rate: pairwise_sum(&predicted) / n as f64,
            difference_se,
            n_trajectories: n,
        });
    }
    Ok(out)
}
