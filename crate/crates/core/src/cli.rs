//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classical::{extract_limit_cycle, limit_cycle_amplitude, ClassicalParams};
use crate::config::{preset, presets, RunConfig, WignerSource};
use crate::error::{Error, Result};
use crate::evolution::{evolve, steady_state_undriven, SteadyStateStrategy};
use crate::fock::DensityMatrix;
use crate::io;
use crate::liouvillian::Frame;
use crate::observables::{phase_probability, s_q};
use crate::perturbation::{first_order_state, FirstOrderSummary};
use crate::spectrum::{correlation, finalize, power_spectrum};
use crate::sweep::{run_sweep, tongue_metrics, SweepOptions, SweepSpec};
use crate::wigner::{angular_profile, linspace, wigner, wigner_max_radius_polar, PolarGrid};

#[derive(Debug, Parser)]
#[command(name = "qrvdp", version, about = "Driven quantum Rayleigh-van der Pol oscillator simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Named preset (see presets-list).
    #[arg(long)]
    pub preset: Option<String>,
    /// Dotted-path override such as params.omega_drive=0.2 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time evolution: trajectory CSV and optional density-matrix snapshots.
    Evolve {
        #[command(flatten)]
        common: Common,
    },
    /// Wigner function, phase distribution and classical overlay.
    Wigner {
        #[command(flatten)]
        common: Common,
        /// Use the evolved state at this time.
        #[arg(long, conflicts_with = "steady")]
        time: Option<f64>,
        /// Use the undriven steady state.
        #[arg(long)]
        steady: bool,
    },
    /// Arnold-tongue grid scan over detuning and drive strength.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Continue from an existing checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Correlation function and power spectrum.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Classical limit-cycle amplitude.
    Classical {
        #[command(flatten)]
        common: Common,
    },
    /// First-order weak-drive response.
    Perturb {
        #[command(flatten)]
        common: Common,
    },
    /// List the named presets.
    PresetsList,
}

impl Common {
    pub fn load(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                RunConfig::from_json(&text).map_err(|e| match e {
                    Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                    other => other,
                })?
            }
            (None, Some(name)) => preset(name)?,
            _ => return Err(Error::Config("exactly one of --config or --preset is required".into())),
        };
        for o in &self.overrides {
            cfg = cfg.with_override(o)?;
        }
        Ok(cfg)
    }

    fn prepare(&self) -> Result<RunConfig> {
        let cfg = self.load()?;
        std::fs::create_dir_all(&self.out)?;
        io::write_json(&self.out.join("config.json"), &cfg)?;
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve { common } => command_evolve(&common),
        Command::Wigner { common, time, steady } => command_wigner(&common, time, steady),
        Command::Sweep { common, resume } => command_sweep(&common, resume),
        Command::Spectrum { common } => command_spectrum(&common),
        Command::Classical { common } => command_classical(&common),
        Command::Perturb { common } => command_perturb(&common),
        Command::PresetsList => {
            for cfg in presets() {
                println!("{}\tdim={}", cfg.name.unwrap_or_default(), cfg.dim);
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct EvolveSummary {
    t_final: f64,
    final_s_q: f64,
    final_number: f64,
    max_trace_drift: f64,
    max_leakage: f64,
    accepted_steps: usize,
    rejected_steps: usize,
    snapshots: Vec<(f64, String)>,
}

pub fn command_evolve(common: &Common) -> Result<()> {
    let cfg = common.prepare()?;
    let rho0 = cfg.initial.build(&cfg.params, cfg.dim)?;
    let traj = evolve(&rho0, &cfg.params, cfg.drive, cfg.frame, &cfg.evolve)?;
    io::write_trajectory_csv(&common.out.join("trajectory.csv"), &traj)?;
    let mut snapshots = Vec::new();
    for (i, (t, rho)) in traj.snapshots.iter().enumerate() {
        let file = format!("snapshot_{i:04}.bin");
        io::write_density_matrix(&common.out.join(&file), rho)?;
        snapshots.push((*t, file));
    }
    let last = traj.records.last().expect("trajectory has records");
    io::write_json(
        &common.out.join("summary.json"),
        &EvolveSummary {
            t_final: last.t,
            final_s_q: last.s_q,
            final_number: last.number,
            max_trace_drift: traj.max_trace_drift,
            max_leakage: traj.max_leakage,
            accepted_steps: traj.stats.accepted,
            rejected_steps: traj.stats.rejected,
            snapshots,
        },
    )
}

#[derive(Serialize)]
struct WignerSummary {
    source: WignerSource,
    s_q: f64,
    norm_estimate: f64,
    max_radius: f64,
    max_phi: f64,
    max_value: f64,
    angular_variation: f64,
    lobes: usize,
    limit_cycle_amplitude: Option<f64>,
}

fn wigner_state(cfg: &RunConfig, source: WignerSource) -> Result<DensityMatrix> {
    match source {
        WignerSource::Steady => {
            steady_state_undriven(&cfg.params, Frame::Laboratory, cfg.dim, &SteadyStateStrategy::Nullspace)
        }
        WignerSource::Time { t } => {
            let rho0 = cfg.initial.build(&cfg.params, cfg.dim)?;
            let mut settings = cfg.evolve.clone();
            settings.t_final = t;
            settings.snapshot_times.clear();
            Ok(evolve(&rho0, &cfg.params, cfg.drive, cfg.frame, &settings)?.final_state)
        }
    }
}

pub fn command_wigner(common: &Common, time: Option<f64>, steady: bool) -> Result<()> {
    let cfg = common.prepare()?;
    let source = match (time, steady) {
        (Some(t), _) => WignerSource::Time { t },
        (None, true) => WignerSource::Steady,
        (None, false) => cfg.wigner.source,
    };
    let rho = wigner_state(&cfg, source)?;
    let opts = &cfg.wigner;
    let grid = wigner(&rho, &linspace(opts.x_min, opts.x_max, opts.n_x), &linspace(opts.p_min, opts.p_max, opts.n_p));
    io::write_wigner_csv(&common.out.join("wigner.csv"), &grid)?;
    io::write_wigner_matrix(&common.out.join("wigner.dat"), &grid)?;
    io::write_phase_csv(&common.out.join("phase.csv"), &phase_probability(&rho, opts.phase_bins)?)?;

    let classical = ClassicalParams::from_system(&cfg.params).ok().map(ClassicalParams::undriven);
    let amplitude = classical.as_ref().and_then(|cp| limit_cycle_amplitude(cp).ok());
    let polar = opts.polar.unwrap_or_else(|| match amplitude {
        Some(a) if a > 0.0 => PolarGrid::for_amplitude(a),
        _ => PolarGrid::default(),
    });
    let max = wigner_max_radius_polar(&rho, &polar);
    let profile = angular_profile(&rho, &polar);
    if let (Some(cp), true) = (classical, opts.overlay_points > 0 && amplitude.is_some()) {
        let (_, traj) = extract_limit_cycle(&cp, &cfg.classical.extraction)?;
        let skip = traj.t.len().saturating_sub(opts.overlay_points);
        let tail =
            crate::classical::ClassicalTrajectory { t: traj.t[skip..].to_vec(), states: traj.states[skip..].to_vec() };
        io::write_classical_csv(&common.out.join("limit_cycle.csv"), &tail)?;
    }
    io::write_json(
        &common.out.join("wigner.json"),
        &WignerSummary {
            source,
            s_q: s_q(&rho),
            norm_estimate: grid.norm_estimate,
            max_radius: max.radius,
            max_phi: max.phi,
            max_value: max.value,
            angular_variation: profile.variation,
            lobes: profile.lobes,
            limit_cycle_amplitude: amplitude,
        },
    )
}

fn sweep_spec(cfg: &RunConfig) -> SweepSpec {
    let mut spec = SweepSpec::with_default_grid(cfg.params, cfg.dim);
    spec.drive = cfg.drive;
    spec.initial = cfg.initial.clone();
    spec.delta_axis = cfg.sweep.delta_axis.clone();
    spec.omega_axis = cfg.sweep.omega_axis.clone();
    spec.observables = cfg.sweep.observables.clone();
    spec.stationary = cfg.stationary.clone();
    spec.correlation = cfg.spectrum.correlation;
    spec.frequency_grid = cfg.spectrum.grid;
    spec
}

fn sweep_one(cfg: &RunConfig, dir: &Path, common: &Common, resume: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let spec = sweep_spec(cfg);
    let checkpoint = dir.join("checkpoint.json");
    if !resume && checkpoint.exists() {
        std::fs::remove_file(&checkpoint)?;
    }
    let options = SweepOptions {
        workers: common.workers,
        checkpoint: Some(checkpoint),
        checkpoint_every: cfg.sweep.checkpoint_every,
        stop_after: None,
    };
    let result = run_sweep(&spec, &options)?;
    io::write_sweep_csv(&dir.join("sweep.csv"), &result)?;
    io::write_json(&dir.join("sweep.json"), &result)?;
    let metrics = tongue_metrics(&result)?;
    io::write_json(&dir.join("metrics.json"), &metrics)
}

pub fn command_sweep(common: &Common, resume: bool) -> Result<()> {
    let cfg = common.prepare()?;
    if cfg.sweep.sets.is_empty() {
        return sweep_one(&cfg, &common.out, common, resume);
    }
    for name in &cfg.sweep.sets {
        let mut set = preset(name)?;
        set.sweep = cfg.sweep.clone();
        set.sweep.sets.clear();
        set.stationary = cfg.stationary.clone();
        set.spectrum = cfg.spectrum.clone();
        set.drive = cfg.drive;
        sweep_one(&set, &common.out.join(name), common, resume)?;
    }
    Ok(())
}

pub fn command_spectrum(common: &Common) -> Result<()> {
    let cfg = common.prepare()?;
    let rho0 = cfg.initial.build(&cfg.params, cfg.dim)?;
    let frame = Frame::Rotating { omega_r: cfg.params.omega_d };
    let corr = correlation(&cfg.params, cfg.drive, frame, &rho0, &cfg.spectrum.correlation)?;
    let spec = finalize(power_spectrum(&corr, &cfg.spectrum.grid)?, cfg.spectrum.normalization)?;
    io::write_spectrum_csv(&common.out.join("spectrum.csv"), &spec)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(common.out.join("correlation.csv"))?);
    use std::io::Write;
    writeln!(w, "t,re_c,im_c")?;
    for (t, c) in corr.t_axis.iter().zip(&corr.values) {
        writeln!(w, "{t},{},{}", c.re, c.im)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ClassicalReport {
    epsilon: f64,
    gamma2_vdp: f64,
    gamma2_ray: f64,
    analytic_amplitude: f64,
    extracted_amplitude: f64,
    relative_difference: f64,
}

pub fn command_classical(common: &Common) -> Result<()> {
    let cfg = common.prepare()?;
    let cp = ClassicalParams::from_system(&cfg.params)?.undriven();
    let analytic = limit_cycle_amplitude(&cp)?;
    let (extracted, traj) = extract_limit_cycle(&cp, &cfg.classical.extraction)?;
    io::write_classical_csv(&common.out.join("classical.csv"), &traj)?;
    io::write_json(
        &common.out.join("classical.json"),
        &ClassicalReport {
            epsilon: cp.epsilon,
            gamma2_vdp: cp.gamma2_vdp,
            gamma2_ray: cp.gamma2_ray,
            analytic_amplitude: analytic,
            extracted_amplitude: extracted,
            relative_difference: (extracted - analytic) / analytic,
        },
    )
}

pub fn command_perturb(common: &Common) -> Result<()> {
    let cfg = common.prepare()?;
    let first = first_order_state(&cfg.params, cfg.dim)?;
    let summary = FirstOrderSummary::from(&first);
    io::write_first_order_csv(&common.out.join("first_order.csv"), &summary)?;
    io::write_json(&common.out.join("first_order.json"), &summary)
}
