//! Plot-ready file formats.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::classical::ClassicalTrajectory;
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::fock::DensityMatrix;
use crate::observables::PhaseDistribution;
use crate::perturbation::FirstOrderSummary;
use crate::spectrum::{Normalization, Spectrum};
use crate::sweep::SweepResult;
use crate::wigner::WignerGrid;
use crate::C64;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Columns t, trace, n, re_a, im_a, s_q.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "t,trace,n,re_a,im_a,s_q")?;
    for r in &traj.records {
        writeln!(w, "{},{},{},{},{},{}", r.t, r.trace, r.number, r.a.re, r.a.im, r.s_q)?;
    }
    w.flush()?;
    Ok(())
}

/// Little-endian u64 dimension followed by row-major (re, im) f64 pairs.
pub fn write_density_matrix(path: &Path, rho: &DensityMatrix) -> Result<()> {
    let mut w = create(path)?;
    let n = rho.dim();
    w.write_all(&(n as u64).to_le_bytes())?;
    for k in 0..n {
        for l in 0..n {
            let z = rho.get(k, l);
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_density_matrix(path: &Path) -> Result<DensityMatrix> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 8 {
        return Err(Error::Config(format!("{}: truncated header", path.display())));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    if bytes.len() != 8 + 16 * n * n {
        return Err(Error::Config(format!("{}: expected {} bytes for dimension {n}", path.display(), 8 + 16 * n * n)));
    }
    let f = |i: usize| f64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().expect("8 bytes"));
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let i = 2 * (k * n + l);
            m[(k, l)] = C64::new(f(i), f(i + 1));
        }
    }
    DensityMatrix::from_matrix(m)
}

/// Rows x, p, W.
pub fn write_wigner_csv(path: &Path, w: &WignerGrid) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# norm_estimate={}", w.norm_estimate)?;
    writeln!(out, "x,p,w")?;
    for (ip, p) in w.p.iter().enumerate() {
        for (ix, x) in w.x.iter().enumerate() {
            writeln!(out, "{x},{p},{}", w.value(ix, ip))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Gnuplot `nonuniform matrix` text layout: first row is the x count and
/// axis, each further row is p followed by W along x.
pub fn write_wigner_matrix(path: &Path, w: &WignerGrid) -> Result<()> {
    let mut out = create(path)?;
    write!(out, "{}", w.x.len())?;
    for x in &w.x {
        write!(out, " {x}")?;
    }
    writeln!(out)?;
    for (ip, p) in w.p.iter().enumerate() {
        write!(out, "{p}")?;
        for ix in 0..w.x.len() {
            write!(out, " {}", w.value(ix, ip))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_phase_csv(path: &Path, dist: &PhaseDistribution) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "phi,p")?;
    for (phi, v) in dist.phi.iter().zip(&dist.values) {
        writeln!(w, "{phi},{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum_csv(path: &Path, spec: &Spectrum) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# tau={}", spec.tau)?;
    writeln!(w, "# spike_weight={}", spec.spike_weight)?;
    writeln!(w, "# omega_obs={}", opt(spec.omega_obs))?;
    let mode = match spec.normalization {
        Normalization::Raw => "raw",
        Normalization::BroadPeakMax => "broad_peak_max",
    };
    writeln!(w, "# normalization={mode}")?;
    writeln!(w, "# conjugate_extension_exact={}", spec.conjugate_extension_exact)?;
    writeln!(w, "omega,s_p")?;
    for (o, s) in spec.omega.iter().zip(&spec.values) {
        writeln!(w, "{o},{s}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "delta,omega,s_q,n,deformation,omega_obs,t_ref,max_leakage,max_trace_drift,error")?;
    for p in &result.points {
        let error = p.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},\"{error}\"",
            p.delta,
            p.omega,
            opt(p.s_q),
            opt(p.number),
            opt(p.deformation),
            opt(p.omega_obs),
            opt(p.t_ref),
            opt(p.max_leakage),
            opt(p.max_trace_drift),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_classical_csv(path: &Path, traj: &ClassicalTrajectory) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "t,x,v")?;
    for (t, s) in traj.t.iter().zip(&traj.states) {
        writeln!(w, "{t},{},{}", s.x, s.v)?;
    }
    w.flush()?;
    Ok(())
}

/// χ in the header, then ρ⁽¹⁾_{n,n−1} per row.
pub fn write_first_order_csv(path: &Path, summary: &FirstOrderSummary) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# chi_re={}", summary.chi.re)?;
    writeln!(w, "# chi_im={}", summary.chi.im)?;
    writeln!(w, "# residual={}", summary.residual)?;
    writeln!(w, "# condition={}", summary.condition)?;
    writeln!(w, "# max_off_band={}", summary.max_off_band)?;
    writeln!(w, "n,re,im")?;
    for (i, z) in summary.subdiagonal.iter().enumerate() {
        writeln!(w, "{},{},{}", i + 1, z.re, z.im)?;
    }
    w.flush()?;
    Ok(())
}
