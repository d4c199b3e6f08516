//! Deterministic CSV and JSON writers for run artefacts. Floating-point
//! values are printed with Rust's shortest round-trip formatting, so equal
//! inputs always produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cell::PeriodicSeries;
use crate::diagnostics::{EnergyTrace, SecondOrderEnergy};
use crate::dispersion::{DispersionMap, KGap};
use crate::effective::EffectiveLaw;
use crate::history::{Frame, ReceiverTrace};
use crate::{Error, Result};

/// Output directory with the standard layout: `summary.json` at the root
/// and `fields/`, `energy/`, `dispersion/` subdirectories.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        for sub in ["fields", "energy", "dispersion"] {
            fs::create_dir_all(root.join(sub))?;
        }
        Ok(OutputDir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn summary_path(&self) -> PathBuf {
        self.root.join("summary.json")
    }

    pub fn fields(&self, name: &str) -> PathBuf {
        self.root.join("fields").join(name)
    }

    pub fn energy(&self, name: &str) -> PathBuf {
        self.root.join("energy").join(name)
    }

    pub fn dispersion(&self, name: &str) -> PathBuf {
        self.root.join("dispersion").join(name)
    }
}

fn writer(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_row(w: &mut impl Write, values: &[f64]) -> Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            write!(w, ",")?;
        }
        write!(w, "{v}")?;
        first = false;
    }
    writeln!(w)?;
    Ok(())
}

/// Full-field frame as `x,u[,v,s]`.
pub fn write_snapshot(path: &Path, xs: &[f64], frame: &Frame) -> Result<()> {
    if frame.u.len() != xs.len() {
        return Err(Error::InvalidConfig("snapshot grid/field size mismatch".into()));
    }
    let with_vs = !frame.v.is_empty();
    let mut w = writer(path)?;
    writeln!(w, "{}", if with_vs { "x,u,v,s" } else { "x,u" })?;
    for m in 0..xs.len() {
        if with_vs {
            write_row(&mut w, &[xs[m], frame.u[m], frame.v[m], frame.s[m]])?;
        } else {
            write_row(&mut w, &[xs[m], frame.u[m]])?;
        }
    }
    Ok(())
}

/// Receiver time series as `t,u[,v]`.
pub fn write_receiver(path: &Path, times: &[f64], trace: &ReceiverTrace) -> Result<()> {
    if trace.u.len() != times.len() {
        return Err(Error::InvalidConfig("receiver trace/time size mismatch".into()));
    }
    let with_v = trace.v.iter().any(|&v| v != 0.0);
    let mut w = writer(path)?;
    writeln!(w, "{}", if with_v { "t,u,v" } else { "t,u" })?;
    for i in 0..times.len() {
        if with_v {
            write_row(&mut w, &[times[i], trace.u[i], trace.v[i]])?;
        } else {
            write_row(&mut w, &[times[i], trace.u[i]])?;
        }
    }
    Ok(())
}

/// Energy trace as `t,kinetic,potential,extra,total`.
pub fn write_energy(path: &Path, trace: &EnergyTrace) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,kinetic,potential,extra,total")?;
    for i in 0..trace.times.len() {
        write_row(
            &mut w,
            &[trace.times[i], trace.kinetic[i], trace.potential[i], trace.extra[i], trace.total[i]],
        )?;
    }
    Ok(())
}

/// Second-order energy with the source power and balance residual columns.
pub fn write_second_order_energy(path: &Path, energy: &SecondOrderEnergy) -> Result<()> {
    let t = &energy.trace;
    let mut w = writer(path)?;
    writeln!(w, "t,kinetic,potential,extra,total,power,balance_residual")?;
    for i in 0..t.times.len() {
        write_row(
            &mut w,
            &[
                t.times[i],
                t.kinetic[i],
                t.potential[i],
                t.extra[i],
                t.total[i],
                energy.power[i],
                energy.balance_residual[i],
            ],
        )?;
    }
    Ok(())
}

/// Effective coefficients over one modulation period (a single row for
/// static media), with the second-order dispersion coefficients appended
/// when available.
pub fn write_coefficients(
    path: &Path,
    law: &EffectiveLaw,
    b_series: Option<(&PeriodicSeries, &PeriodicSeries)>,
    n_rows: usize,
) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(
        w,
        "{}",
        if b_series.is_some() {
            "t,rho0,e0,gamma_m0,gamma_c0,b1,b2"
        } else {
            "t,rho0,e0,gamma_m0,gamma_c0"
        }
    )?;
    let times: Vec<f64> = match law.period {
        None => vec![0.0],
        Some(tau) => (0..n_rows.max(1)).map(|i| tau * i as f64 / n_rows.max(1) as f64).collect(),
    };
    for t in times {
        let mut row = vec![t, law.rho0(t), law.e0(t), law.gamma_m0(t), law.gamma_c0(t)];
        if let Some((b1, b2)) = b_series {
            row.push(b1.eval(t));
            row.push(b2.eval(t));
        }
        write_row(&mut w, &row)?;
    }
    Ok(())
}

/// k-gap table as `k_lo,k_hi,growth`.
pub fn write_gaps(path: &Path, gaps: &[KGap]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "k_lo,k_hi,growth")?;
    for g in gaps {
        write_row(&mut w, &[g.k_lo, g.k_hi, g.growth])?;
    }
    Ok(())
}

/// Branch table as `omega,k`, one row per (frequency, wavenumber) pair.
pub fn write_branches(path: &Path, branches: &[(f64, Vec<f64>)]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "omega,k")?;
    for (omega, ks) in branches {
        for k in ks {
            write_row(&mut w, &[*omega, *k])?;
        }
    }
    Ok(())
}

/// Space-time spectrum grid: first column ω, remaining columns the log
/// magnitudes at the k values listed in the header.
pub fn write_dispersion_map(path: &Path, map: &DispersionMap) -> Result<()> {
    let mut w = writer(path)?;
    write!(w, "omega")?;
    for k in &map.k {
        write!(w, ",{k}")?;
    }
    writeln!(w)?;
    for (i, row) in map.log_magnitude.iter().enumerate() {
        write!(w, "{}", map.omega[i])?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Machine-readable record of one command invocation.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunSummary {
    /// Subcommand that produced the outputs.
    pub command: String,
    pub preset: Option<String>,
    pub solver: Option<String>,
    pub n_x: Option<usize>,
    pub dt: Option<f64>,
    pub n_steps: Option<usize>,
    pub t_end: Option<f64>,
    /// Relative paths of the files written by the run.
    pub outputs: Vec<String>,
    /// Scalar results, sorted by key for reproducible files.
    pub metrics: BTreeMap<String, f64>,
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Numerical(format!("summary serialisation failed: {e}")))?;
    let mut w = writer(path)?;
    writeln!(w, "{json}")?;
    Ok(())
}
