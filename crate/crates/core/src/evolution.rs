//! Time integration of the master equation, quasi-stationarity detection and
//! undriven steady states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, DEFAULT_LEAKAGE_THRESHOLD};
use crate::liouvillian::{DriveModel, Frame};
use crate::observables::{coherence_sum_slice, mean_annihilation, mean_number, trace_slice, window_average};
use crate::ode::{Dopri5, IntegrationStats, Tolerances};
use crate::params::SystemParams;
use crate::stencil::MasterEquation;
use crate::superop::{block_steady_state, SteadyBlock};
use crate::C64;

/// Scalar observables recorded along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarRecord {
    pub t: f64,
    pub trace: f64,
    pub number: f64,
    pub a: C64,
    pub s_q: f64,
    pub leakage: f64,
}

impl ScalarRecord {
    fn of(t: f64, dim: usize, rho: &[C64]) -> Self {
        Self {
            t,
            trace: trace_slice(dim, rho).re,
            number: mean_number(dim, rho),
            a: mean_annihilation(dim, rho),
            s_q: coherence_sum_slice(dim, rho).norm(),
            leakage: rho[dim * dim - 1].re.abs(),
        }
    }
}

/// Initial density matrix specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Vacuum,
    Fock {
        n: usize,
    },
    /// Coherent state |α₀⟩ with α₀ = (x₀ + i p₀)/√2.
    Coherent {
        x0: f64,
        p0: f64,
    },
    /// Undriven steady state of the run's own rates.
    UndrivenSteady,
}

impl Default for InitialState {
    fn default() -> Self {
        let q = 1.5 * std::f64::consts::FRAC_1_SQRT_2;
        InitialState::Coherent { x0: q, p0: q }
    }
}

impl InitialState {
    /// Builds the state; coherent states are renormalized after truncation.
    pub fn build(&self, params: &SystemParams, dim: usize) -> Result<DensityMatrix> {
        match *self {
            InitialState::Vacuum => DensityMatrix::vacuum(dim),
            InitialState::Fock { n } => DensityMatrix::fock(n, dim),
            InitialState::Coherent { x0, p0 } => {
                let alpha = C64::new(x0, p0) * std::f64::consts::FRAC_1_SQRT_2;
                Ok(DensityMatrix::coherent(alpha, dim, 1.0)?.0)
            }
            InitialState::UndrivenSteady => {
                steady_state_undriven(params, Frame::Laboratory, dim, &SteadyStateStrategy::Nullspace)
            }
        }
    }
}

/// Output of one evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub frame: Frame,
    pub records: Vec<ScalarRecord>,
    pub snapshots: Vec<(f64, DensityMatrix)>,
    pub final_state: DensityMatrix,
    pub max_trace_drift: f64,
    pub max_leakage: f64,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn final_time(&self) -> f64 {
        self.records.last().map(|r| r.t).unwrap_or(0.0)
    }
}

/// Integration controls shared by all evolutions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Accuracy {
    pub tolerances: Tolerances,
    pub leakage_threshold: f64,
    pub trace_tolerance: f64,
}

impl Default for Accuracy {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), leakage_threshold: DEFAULT_LEAKAGE_THRESHOLD, trace_tolerance: 1e-8 }
    }
}

/// Stateful propagator that can be advanced in pieces.
pub struct Evolver {
    eq: MasterEquation,
    solver: Dopri5<C64>,
    state: Vec<C64>,
    t: f64,
    accuracy: Accuracy,
    max_trace_drift: f64,
    max_leakage: f64,
}

impl Evolver {
    pub fn new(
        rho0: &DensityMatrix,
        params: SystemParams,
        drive: DriveModel,
        frame: Frame,
        accuracy: Accuracy,
    ) -> Result<Self> {
        Self::starting_at(rho0, params, drive, frame, accuracy, 0.0)
    }

    pub fn starting_at(
        rho0: &DensityMatrix,
        params: SystemParams,
        drive: DriveModel,
        frame: Frame,
        accuracy: Accuracy,
        t0: f64,
    ) -> Result<Self> {
        let dim = rho0.dim();
        let eq = MasterEquation::new(params, drive, frame, dim)?;
        let mut ev = Self {
            eq,
            solver: Dopri5::new(dim * dim, accuracy.tolerances),
            state: rho0.as_slice().to_vec(),
            t: t0,
            accuracy,
            max_trace_drift: 0.0,
            max_leakage: 0.0,
        };
        ev.check()?;
        Ok(ev)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.eq.dim()
    }

    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::from_column_major(self.dim(), self.state.clone()).expect("dimension fixed at construction")
    }

    pub fn state_slice(&self) -> &[C64] {
        &self.state
    }

    pub fn record(&self) -> ScalarRecord {
        ScalarRecord::of(self.t, self.dim(), &self.state)
    }

    pub fn stats(&self) -> IntegrationStats {
        self.solver.stats()
    }

    fn check(&mut self) -> Result<()> {
        let dim = self.dim();
        let drift = (trace_slice(dim, &self.state) - 1.0).norm();
        self.max_trace_drift = self.max_trace_drift.max(drift);
        if drift > self.accuracy.trace_tolerance {
            return Err(Error::TraceDrift { drift, tolerance: self.accuracy.trace_tolerance, t: self.t });
        }
        let leak = self.state[dim * dim - 1].re.abs();
        self.max_leakage = self.max_leakage.max(leak);
        if leak > self.accuracy.leakage_threshold {
            return Err(Error::Truncation {
                leakage: leak,
                threshold: self.accuracy.leakage_threshold,
                dim,
                suggested: dim + dim / 2 + 4,
            });
        }
        Ok(())
    }

    /// Integrates to `t1` and validates trace and leakage there.
    pub fn advance_to(&mut self, t1: f64) -> Result<()> {
        let eq = &self.eq;
        let mut f = |t: f64, y: &[C64], dy: &mut [C64]| eq.apply_hermitian(t, y, dy);
        self.solver.integrate(&mut f, self.t, t1, &mut self.state)?;
        self.t = t1;
        self.check()
    }
}

/// What to sample during an evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSettings {
    pub t_final: f64,
    pub record_interval: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub accuracy: Accuracy,
}

/// Output times as multiples of `interval` from `t0` through `t1`, merged with
/// extra stops; each stop is flagged (record, snapshot).
fn stop_schedule(t0: f64, t1: f64, interval: f64, extra: &[f64]) -> Vec<(f64, bool, bool)> {
    let mut stops: Vec<(f64, bool, bool)> = Vec::new();
    let n = ((t1 - t0) / interval + 1e-9).floor() as usize;
    for j in 1..=n {
        stops.push((t0 + j as f64 * interval, true, false));
    }
    if stops.last().map(|s| (s.0 - t1).abs() > 1e-9 * interval).unwrap_or(true) {
        stops.push((t1, true, false));
    }
    for &t in extra {
        if t <= t0 || t > t1 + 1e-12 {
            continue;
        }
        match stops.iter_mut().find(|s| (s.0 - t).abs() <= 1e-9 * interval.max(1.0)) {
            Some(s) => s.2 = true,
            None => stops.push((t, false, true)),
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    stops
}

/// Evolves `rho0` from t = 0 and returns the sampled trajectory.
pub fn evolve(
    rho0: &DensityMatrix,
    params: &SystemParams,
    drive: DriveModel,
    frame: Frame,
    settings: &EvolutionSettings,
) -> Result<Trajectory> {
    if !(settings.t_final > 0.0) || !(settings.record_interval > 0.0) {
        return Err(Error::InvalidParameter("t_final and record_interval must be positive".into()));
    }
    let mut ev = Evolver::new(rho0, *params, drive, frame, settings.accuracy)?;
    let mut records = vec![ev.record()];
    let mut snapshots = Vec::new();
    if settings.snapshot_times.contains(&0.0) {
        snapshots.push((0.0, rho0.clone()));
    }
    for (t, rec, snap) in stop_schedule(0.0, settings.t_final, settings.record_interval, &settings.snapshot_times) {
        ev.advance_to(t)?;
        if rec {
            records.push(ev.record());
        }
        if snap {
            snapshots.push((t, ev.state()));
        }
    }
    Ok(Trajectory {
        frame,
        records,
        snapshots,
        final_state: ev.state(),
        max_trace_drift: ev.max_trace_drift,
        max_leakage: ev.max_leakage,
        stats: ev.stats(),
    })
}

/// Criterion for consecutive period averages to count as unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Stationarity {
    pub rel_tol: f64,
    /// Absolute floor added to the relative bound so decays toward zero terminate.
    pub abs_floor: f64,
}

impl Default for Stationarity {
    fn default() -> Self {
        Self { rel_tol: 1e-4, abs_floor: 1e-10 }
    }
}

/// Smallest period boundary after which period-averaged ⟨a†a⟩ and S_q change
/// by less than the tolerance between all consecutive periods.
pub fn detect_quasi_stationary(traj: &Trajectory, period: f64, rel_tol: f64) -> Result<f64> {
    detect_with(traj, period, Stationarity { rel_tol, ..Stationarity::default() })
}

pub fn detect_with(traj: &Trajectory, period: f64, crit: Stationarity) -> Result<f64> {
    let (t0, t_last) = match (traj.records.first(), traj.records.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::Sampling("empty trajectory".into())),
    };
    let windows = ((t_last - t0) / period + 1e-9).floor() as usize;
    if windows < 3 {
        return Err(Error::Sampling(format!("trajectory spans {windows} period(s); at least 3 are needed")));
    }
    let series =
        |sel: fn(&ScalarRecord) -> f64| -> Vec<(f64, f64)> { traj.records.iter().map(|r| (r.t, sel(r))).collect() };
    let number = series(|r| r.number);
    let sq = series(|r| r.s_q);
    let mut averages = Vec::with_capacity(windows);
    for j in 0..windows {
        let start = t0 + j as f64 * period;
        averages.push((window_average(&number, start, period)?, window_average(&sq, start, period)?));
    }
    let changed = |a: f64, b: f64| (b - a).abs() > crit.rel_tol * a.abs() + crit.abs_floor;
    let rel_change = |a: f64, b: f64| (b - a).abs() / a.abs().max(crit.abs_floor);
    // first j such that every later consecutive pair passes
    let mut candidate = None;
    for j in (0..windows - 1).rev() {
        let (n0, s0) = averages[j];
        let (n1, s1) = averages[j + 1];
        if changed(n0, n1) || changed(s0, s1) {
            break;
        }
        candidate = Some(j);
    }
    match candidate {
        Some(j) if windows - j >= 3 => Ok(t0 + j as f64 * period),
        _ => {
            let (n0, s0) = averages[windows - 2];
            let (n1, s1) = averages[windows - 1];
            Err(Error::NotStationary { last_change: rel_change(n0, n1).max(rel_change(s0, s1)) })
        }
    }
}

/// Choice of the reference time for long-time averages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrefPolicy {
    /// Average over the last period before `t_final`.
    LastPeriod,
    /// Extend the run until detection passes (up to `max_time`), then average
    /// over the following period.
    Detected { stationarity: Stationarity, max_time: f64 },
}

impl Default for TrefPolicy {
    fn default() -> Self {
        TrefPolicy::Detected { stationarity: Stationarity::default(), max_time: 1e4 }
    }
}

/// Settings of a run that ends with a one-period averaging window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationarySettings {
    pub t_final: f64,
    pub policy: TrefPolicy,
    pub samples_per_period: usize,
    /// States stored at uniform times across the averaging window (0 for none).
    pub snapshots_per_period: usize,
    pub accuracy: Accuracy,
}

impl Default for StationarySettings {
    fn default() -> Self {
        Self {
            t_final: 200.0,
            policy: TrefPolicy::default(),
            samples_per_period: 64,
            snapshots_per_period: 0,
            accuracy: Accuracy::default(),
        }
    }
}

/// Trajectory plus the averaging window it ended with.
#[derive(Clone, Debug)]
pub struct StationaryRun {
    pub trajectory: Trajectory,
    pub t_ref: f64,
    pub period: f64,
    pub window_snapshots: Vec<(f64, DensityMatrix)>,
}

impl StationaryRun {
    pub fn average(&self, observable: crate::observables::Observable) -> Result<f64> {
        crate::observables::period_average(&self.trajectory, self.t_ref, self.period, observable)
    }
}

/// Evolves with period T = 2π/ω_D and closes with an averaging window.
pub fn run_to_quasi_stationary(
    rho0: &DensityMatrix,
    params: &SystemParams,
    drive: DriveModel,
    frame: Frame,
    settings: &StationarySettings,
) -> Result<StationaryRun> {
    let period = 2.0 * std::f64::consts::PI / params.omega_d;
    let dt = period / settings.samples_per_period.max(32) as f64;
    let mut ev = Evolver::new(rho0, *params, drive, frame, settings.accuracy)?;
    let mut records = vec![ev.record()];
    let mut j: usize = 0;
    let step_to = |ev: &mut Evolver, records: &mut Vec<ScalarRecord>, until: f64, j: &mut usize| -> Result<()> {
        loop {
            let t = (*j + 1) as f64 * dt;
            if t > until + 1e-9 * dt {
                return Ok(());
            }
            ev.advance_to(t)?;
            records.push(ev.record());
            *j += 1;
        }
    };
    let snapshot_window =
        |ev: &mut Evolver, records: &mut Vec<ScalarRecord>, j: &mut usize| -> Result<Vec<(f64, DensityMatrix)>> {
            // samples_per_period is a multiple of snapshots_per_period in practice;
            // the window is walked on the record grid and snapshots land on it too
            let mut snaps = Vec::new();
            let n_snap = settings.snapshots_per_period;
            let spp = settings.samples_per_period.max(32);
            let stride = if n_snap > 0 && spp.is_multiple_of(n_snap) { spp / n_snap } else { 0 };
            let start_j = *j;
            for s in 0..spp {
                if stride > 0 && s % stride == 0 {
                    snaps.push((ev.time(), ev.state()));
                }
                let t = (start_j + s + 1) as f64 * dt;
                ev.advance_to(t)?;
                records.push(ev.record());
                *j += 1;
            }
            if n_snap > 0 && stride == 0 {
                return Err(Error::InvalidParameter(format!(
                    "samples_per_period ({spp}) must be a multiple of snapshots_per_period ({n_snap})"
                )));
            }
            Ok(snaps)
        };

    let t_ref;
    let window_snapshots;
    match settings.policy {
        TrefPolicy::LastPeriod => {
            let periods = (settings.t_final / period).floor().max(1.0) as usize;
            let t_end_pre = (periods - 1) as f64 * period;
            step_to(&mut ev, &mut records, t_end_pre, &mut j)?;
            t_ref = ev.time();
            window_snapshots = snapshot_window(&mut ev, &mut records, &mut j)?;
        }
        TrefPolicy::Detected { stationarity, max_time } => {
            let mut horizon = settings.t_final.max(4.0 * period);
            loop {
                step_to(&mut ev, &mut records, horizon, &mut j)?;
                let partial = Trajectory {
                    frame,
                    records: records.clone(),
                    snapshots: Vec::new(),
                    final_state: ev.state(),
                    max_trace_drift: 0.0,
                    max_leakage: 0.0,
                    stats: ev.stats(),
                };
                match detect_with(&partial, period, stationarity) {
                    Ok(_) => break,
                    Err(Error::NotStationary { last_change }) => {
                        if horizon >= max_time {
                            return Err(Error::NotStationary { last_change });
                        }
                        horizon = (horizon * 1.5).min(max_time);
                    }
                    Err(e) => return Err(e),
                }
            }
            t_ref = ev.time();
            window_snapshots = snapshot_window(&mut ev, &mut records, &mut j)?;
        }
    }
    let trajectory = Trajectory {
        frame,
        records,
        snapshots: Vec::new(),
        final_state: ev.state(),
        max_trace_drift: ev.max_trace_drift,
        max_leakage: ev.max_leakage,
        stats: ev.stats(),
    };
    Ok(StationaryRun { trajectory, t_ref, period, window_snapshots })
}

/// How to obtain the undriven steady state.
#[derive(Clone, Debug, PartialEq)]
pub enum SteadyStateStrategy {
    /// Nullspace of the generator restricted to the block that the steady
    /// state occupies (diagonal when β = δ, even offsets otherwise).
    Nullspace,
    /// Nullspace of the full unrestricted generator (dim² unknowns).
    FullNullspace,
    /// Long-time integration from `initial` until period-averaged populations
    /// change by less than `tolerance` between consecutive periods.
    Integration { initial: DensityMatrix, accuracy: Accuracy, tolerance: f64 },
}

/// Ω = 0 steady state in the given frame.
pub fn steady_state_undriven(
    params: &SystemParams,
    frame: Frame,
    dim: usize,
    strategy: &SteadyStateStrategy,
) -> Result<DensityMatrix> {
    let undriven = SystemParams { omega_drive: 0.0, ..*params };
    if frame.omega_r() != 0.0 && !undriven.is_phase_covariant() {
        return Err(Error::UnsupportedFrame(
            "the undriven state is stationary only in the laboratory frame when beta != delta".into(),
        ));
    }
    match strategy {
        SteadyStateStrategy::Nullspace => {
            let block = if undriven.is_phase_covariant() { SteadyBlock::Diagonal } else { SteadyBlock::EvenParity };
            block_steady_state(&undriven, dim, block)
        }
        SteadyStateStrategy::FullNullspace => block_steady_state(&undriven, dim, SteadyBlock::Full),
        SteadyStateStrategy::Integration { initial, accuracy, tolerance } => {
            integrate_to_steady_state(&undriven, initial, *accuracy, *tolerance)
        }
    }
}

fn integrate_to_steady_state(
    params: &SystemParams,
    initial: &DensityMatrix,
    accuracy: Accuracy,
    tolerance: f64,
) -> Result<DensityMatrix> {
    let dim = initial.dim();
    let period = 2.0 * std::f64::consts::PI;
    let samples = 64;
    let dt = period / samples as f64;
    let mut ev = Evolver::new(initial, *params, DriveModel::Rwa, Frame::Laboratory, accuracy)?;
    let diag = |ev: &Evolver| -> Vec<f64> { (0..dim).map(|k| ev.state_slice()[k + k * dim].re).collect() };
    let mut previous: Option<Vec<f64>> = None;
    let mut step = 0usize;
    let mut last_change = f64::INFINITY;
    while ev.time() < 1e4 {
        // trapezoid average of the populations over one period
        let mut avg = diag(&ev).iter().map(|p| 0.5 * p).collect::<Vec<_>>();
        for s in 1..=samples {
            step += 1;
            ev.advance_to(step as f64 * dt)?;
            let w = if s == samples { 0.5 } else { 1.0 };
            for (a, p) in avg.iter_mut().zip(diag(&ev)) {
                *a += w * p;
            }
        }
        avg.iter_mut().for_each(|a| *a /= samples as f64);
        if let Some(prev) = &previous {
            last_change = prev.iter().zip(&avg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if last_change < tolerance {
                return Ok(ev.state());
            }
        }
        previous = Some(avg);
    }
    Err(Error::Convergence(format!("populations still changing by {last_change:.3e} per period at t = 1e4")))
}
