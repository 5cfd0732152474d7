//! (Δ, Ω) grid scans with a worker pool and checkpoint/resume.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{limit_cycle_amplitude, ClassicalParams};
use crate::error::{Error, Result};
use crate::evolution::{
    run_to_quasi_stationary, steady_state_undriven, InitialState, StationarySettings, SteadyStateStrategy,
};
use crate::liouvillian::{DriveModel, Frame};
use crate::observables::{deformation_from_radii, Observable};
use crate::params::SystemParams;
use crate::spectrum::{broad_peak_location, correlation, power_spectrum, CorrelationSettings, FrequencyGrid};
use crate::wigner::{wigner_max_radius_polar, PolarGrid};

/// Observables a sweep can record per grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepObservable {
    SQ,
    Number,
    Deformation,
    OmegaObs,
}

/// Grid scan definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Rates; drive strength and detuning are taken from the axes.
    pub base_params: SystemParams,
    pub dim: usize,
    #[serde(default)]
    pub drive: DriveModel,
    #[serde(default)]
    pub initial: InitialState,
    pub delta_axis: Vec<f64>,
    pub omega_axis: Vec<f64>,
    pub observables: Vec<SweepObservable>,
    #[serde(default)]
    pub stationary: StationarySettings,
    /// Polar grid for Wigner maxima; `None` derives it from the limit-cycle amplitude.
    #[serde(default)]
    pub polar_grid: Option<PolarGrid>,
    #[serde(default)]
    pub correlation: CorrelationSettings,
    #[serde(default)]
    pub frequency_grid: FrequencyGrid,
}

/// Uniform axis of `n` points over [lo, hi].
pub fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    crate::wigner::linspace(lo, hi, n)
}

impl SweepSpec {
    /// Default 21 × 21 grid over Δ ∈ [−0.3, 0.3], Ω ∈ [0, 0.6] recording S̄_q and N̄.
    pub fn with_default_grid(base_params: SystemParams, dim: usize) -> Self {
        Self {
            base_params,
            dim,
            drive: DriveModel::Rwa,
            initial: InitialState::default(),
            delta_axis: axis(-0.3, 0.3, 21),
            omega_axis: axis(0.0, 0.6, 21),
            observables: vec![SweepObservable::SQ, SweepObservable::Number],
            stationary: StationarySettings::default(),
            polar_grid: None,
            correlation: CorrelationSettings::default(),
            frequency_grid: FrequencyGrid::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base_params.validate()?;
        for (name, ax) in [("delta_axis", &self.delta_axis), ("omega_axis", &self.omega_axis)] {
            if ax.is_empty() {
                return Err(Error::Config(format!("{name} is empty")));
            }
            if ax.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config(format!("{name} must be strictly increasing")));
            }
        }
        if self.delta_axis.iter().any(|d| !(1.0 + d > 0.0)) {
            return Err(Error::Config("detuning must keep the drive frequency positive".into()));
        }
        if self.observables.is_empty() {
            return Err(Error::Config("no observables requested".into()));
        }
        Ok(())
    }

    fn wants(&self, o: SweepObservable) -> bool {
        self.observables.contains(&o)
    }

    fn point_params(&self, delta: f64, omega: f64) -> SystemParams {
        self.base_params.with_detuning(delta).with_drive(omega)
    }

    fn grid(&self) -> PolarGrid {
        self.polar_grid.unwrap_or_else(|| {
            ClassicalParams::from_system(&self.base_params)
                .and_then(|cp| limit_cycle_amplitude(&cp))
                .map(PolarGrid::for_amplitude)
                .unwrap_or_default()
        })
    }
}

/// Result of one grid point; `error` is set instead of silently dropping it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub i_delta: usize,
    pub i_omega: usize,
    pub delta: f64,
    pub omega: f64,
    pub s_q: Option<f64>,
    pub number: Option<f64>,
    pub deformation: Option<f64>,
    pub omega_obs: Option<f64>,
    pub t_ref: Option<f64>,
    pub max_leakage: Option<f64>,
    pub max_trace_drift: Option<f64>,
    pub error: Option<String>,
}

impl PointRecord {
    fn failed(i_delta: usize, i_omega: usize, delta: f64, omega: f64, e: &Error) -> Self {
        Self {
            i_delta,
            i_omega,
            delta,
            omega,
            s_q: None,
            number: None,
            deformation: None,
            omega_obs: None,
            t_ref: None,
            max_leakage: None,
            max_trace_drift: None,
            error: Some(e.to_string()),
        }
    }
}

/// Complete sweep output ordered by (i_delta, i_omega).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub delta_axis: Vec<f64>,
    pub omega_axis: Vec<f64>,
    /// Wigner-maximum radius of the undriven steady state, when D̄ was requested.
    pub undriven_radius: Option<f64>,
    pub points: Vec<PointRecord>,
}

impl SweepResult {
    pub fn point(&self, i_delta: usize, i_omega: usize) -> &PointRecord {
        &self.points[i_delta * self.omega_axis.len() + i_omega]
    }

    pub fn failed(&self) -> Vec<(usize, usize)> {
        self.points.iter().filter(|p| p.error.is_some()).map(|p| (p.i_delta, p.i_omega)).collect()
    }
}

/// Execution options that do not affect the numbers produced.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub workers: usize,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_every: usize,
    /// Stops after this many newly computed points, leaving a checkpoint behind.
    pub stop_after: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { workers: 1, checkpoint: None, checkpoint_every: 16, stop_after: None }
    }
}

fn compute_point(
    spec: &SweepSpec,
    i_delta: usize,
    i_omega: usize,
    radius: Option<f64>,
    grid: &PolarGrid,
) -> PointRecord {
    let (delta, omega) = (spec.delta_axis[i_delta], spec.omega_axis[i_omega]);
    let run = || -> Result<PointRecord> {
        let params = spec.point_params(delta, omega);
        let rho0 = spec.initial.build(&params, spec.dim)?;
        let mut settings = spec.stationary.clone();
        if spec.wants(SweepObservable::Deformation) && settings.snapshots_per_period == 0 {
            settings.snapshots_per_period = 32;
        }
        let run = run_to_quasi_stationary(&rho0, &params, spec.drive, Frame::Laboratory, &settings)?;
        let s_q = spec.wants(SweepObservable::SQ).then(|| run.average(Observable::SQ)).transpose()?;
        let number = spec.wants(SweepObservable::Number).then(|| run.average(Observable::Number)).transpose()?;
        let deformation = match radius {
            Some(r_u) if spec.wants(SweepObservable::Deformation) => {
                let radii: Vec<f64> =
                    run.window_snapshots.iter().map(|(_, rho)| wigner_max_radius_polar(rho, grid).radius).collect();
                Some(deformation_from_radii(&radii, r_u)?)
            }
            _ => None,
        };
        let omega_obs = if spec.wants(SweepObservable::OmegaObs) {
            let frame = Frame::Rotating { omega_r: params.omega_d };
            let corr = correlation(&params, spec.drive, frame, &rho0, &spec.correlation)?;
            Some(broad_peak_location(&power_spectrum(&corr, &spec.frequency_grid)?)?)
        } else {
            None
        };
        Ok(PointRecord {
            i_delta,
            i_omega,
            delta,
            omega,
            s_q,
            number,
            deformation,
            omega_obs,
            t_ref: Some(run.t_ref),
            max_leakage: Some(run.trajectory.max_leakage),
            max_trace_drift: Some(run.trajectory.max_trace_drift),
            error: None,
        })
    };
    run().unwrap_or_else(|e| PointRecord::failed(i_delta, i_omega, delta, omega, &e))
}

/// Writes `value` as JSON through a temporary file and an atomic rename.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(value)?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// On-disk checkpoint: the spec it belongs to and the points finished so far.
#[derive(Serialize)]
struct CheckpointRef<'a> {
    spec: &'a SweepSpec,
    points: Vec<&'a PointRecord>,
}

#[derive(Deserialize)]
struct Checkpoint {
    spec: SweepSpec,
    points: Vec<PointRecord>,
}

fn write_checkpoint(path: &Path, spec: &SweepSpec, done: &BTreeMap<(usize, usize), PointRecord>) -> Result<()> {
    write_json_atomic(path, &CheckpointRef { spec, points: done.values().collect() })
}

/// Completed points from a checkpoint file written for exactly this spec.
pub fn load_checkpoint(path: &Path, spec: &SweepSpec) -> Result<Vec<PointRecord>> {
    let saved: Checkpoint = serde_json::from_slice(&std::fs::read(path)?)
        .map_err(|e| Error::Config(format!("checkpoint {}: {e}", path.display())))?;
    if &saved.spec != spec {
        return Err(Error::Config(format!("checkpoint {} was written for a different sweep", path.display())));
    }
    for r in &saved.points {
        let ok = spec.delta_axis.get(r.i_delta) == Some(&r.delta) && spec.omega_axis.get(r.i_omega) == Some(&r.omega);
        if !ok {
            return Err(Error::Config(format!(
                "checkpoint {} does not match the sweep axes at ({}, {})",
                path.display(),
                r.i_delta,
                r.i_omega
            )));
        }
    }
    Ok(saved.points)
}

/// Runs every grid point on `options.workers` threads. Results do not depend
/// on the worker count or completion order.
pub fn run_sweep(spec: &SweepSpec, options: &SweepOptions) -> Result<SweepResult> {
    spec.validate()?;
    let grid = spec.grid();
    let undriven_radius = if spec.wants(SweepObservable::Deformation) {
        let rho =
            steady_state_undriven(&spec.base_params, Frame::Laboratory, spec.dim, &SteadyStateStrategy::Nullspace)?;
        Some(wigner_max_radius_polar(&rho, &grid).radius)
    } else {
        None
    };

    let mut done: BTreeMap<(usize, usize), PointRecord> = BTreeMap::new();
    if let Some(path) = options.checkpoint.as_deref().filter(|p| p.exists()) {
        for r in load_checkpoint(path, spec)? {
            done.insert((r.i_delta, r.i_omega), r);
        }
    }
    let mut pending: Vec<(usize, usize)> = (0..spec.delta_axis.len())
        .flat_map(|i| (0..spec.omega_axis.len()).map(move |j| (i, j)))
        .filter(|key| !done.contains_key(key))
        .collect();
    let interrupted = options.stop_after.map(|n| n < pending.len()).unwrap_or(false);
    if let Some(n) = options.stop_after {
        pending.truncate(n);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let shared = Mutex::new((done, 0usize));
    let every = options.checkpoint_every.max(1);
    let checkpoint_error: Mutex<Option<Error>> = Mutex::new(None);
    pool.install(|| {
        pending.par_iter().for_each(|&(i, j)| {
            let record = compute_point(spec, i, j, undriven_radius, &grid);
            let mut guard = shared.lock().expect("sweep state lock");
            guard.0.insert((i, j), record);
            guard.1 += 1;
            if let Some(path) = &options.checkpoint {
                if guard.1.is_multiple_of(every) {
                    if let Err(e) = write_checkpoint(path, spec, &guard.0) {
                        *checkpoint_error.lock().expect("error lock") = Some(e);
                    }
                }
            }
        });
    });
    if let Some(e) = checkpoint_error.into_inner().expect("error lock") {
        return Err(e);
    }
    let (done, _) = shared.into_inner().expect("sweep state lock");
    if let Some(path) = &options.checkpoint {
        write_checkpoint(path, spec, &done)?;
    }
    if interrupted {
        let missing = (0..spec.delta_axis.len())
            .flat_map(|i| (0..spec.omega_axis.len()).map(move |j| (i, j)))
            .filter(|key| !done.contains_key(key))
            .collect();
        return Err(Error::PartialResult { failed: missing });
    }
    Ok(SweepResult {
        delta_axis: spec.delta_axis.clone(),
        omega_axis: spec.omega_axis.clone(),
        undriven_radius,
        points: done.into_values().collect(),
    })
}

/// Summary statistics of a tongue map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TongueMetrics {
    pub max_s_q: f64,
    pub max_number: Option<f64>,
    /// max |S̄_q(Δ) − S̄_q(−Δ)| over mirrored grid pairs.
    pub mirror_residual: f64,
    /// Per Δ column: S̄_q non-decreasing in Ω within the noise floor.
    pub monotone_in_omega: Vec<bool>,
    /// Pearson correlation of S̄_q and N̄ over the grid.
    pub s_q_number_correlation: Option<f64>,
}

/// Noise floor for the monotonicity flags.
pub const MONOTONE_NOISE_FLOOR: f64 = 1e-5;

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

pub fn tongue_metrics(result: &SweepResult) -> Result<TongueMetrics> {
    let failed = result.failed();
    if !failed.is_empty() {
        return Err(Error::PartialResult { failed });
    }
    let (nd, no) = (result.delta_axis.len(), result.omega_axis.len());
    let s = |i: usize, j: usize| -> Result<f64> {
        result.point(i, j).s_q.ok_or_else(|| Error::UndefinedMeasure("sweep did not record S_q".into()))
    };
    let mut max_s_q = f64::NEG_INFINITY;
    let mut mirror_residual: f64 = 0.0;
    let mut monotone_in_omega = Vec::with_capacity(nd);
    for i in 0..nd {
        let mirror = nd - 1 - i;
        let symmetric = (result.delta_axis[i] + result.delta_axis[mirror]).abs() <= 1e-12;
        let mut monotone = true;
        for j in 0..no {
            let v = s(i, j)?;
            max_s_q = max_s_q.max(v);
            if symmetric {
                mirror_residual = mirror_residual.max((v - s(mirror, j)?).abs());
            }
            if j > 0 && v < s(i, j - 1)? - MONOTONE_NOISE_FLOOR {
                monotone = false;
            }
        }
        monotone_in_omega.push(monotone);
    }
    let numbers: Option<Vec<f64>> = result.points.iter().map(|p| p.number).collect();
    let sq: Vec<f64> = result.points.iter().filter_map(|p| p.s_q).collect();
    Ok(TongueMetrics {
        max_s_q,
        max_number: numbers.as_ref().map(|n| n.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        mirror_residual,
        monotone_in_omega,
        s_q_number_correlation: numbers.as_deref().and_then(|n| pearson(&sq, n)),
    })
}
