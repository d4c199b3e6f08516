//! `modwave` command-line front end: validates configurations, emits
//! effective-coefficient tables, runs the micro/effective solvers, performs
//! dispersion analysis, and reproduces the bundled experiment presets.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use modwave::cell::{CellConfig, CorrectorFamily};
use modwave::config::ProblemConfig;
use modwave::diagnostics;
use modwave::dispersion;
use modwave::effective::{self, EffectiveLaw};
use modwave::history::{FieldHistory, RecordSpec};
use modwave::micro;
use modwave::output::{self, OutputDir, RunSummary};
use modwave::presets;

#[derive(Parser)]
#[command(name = "modwave", version, about = "1D waves through time-modulated interface lattices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a configuration and print its derived quantities.
    Validate(Source),
    /// Write effective-coefficient tables over one modulation period.
    Coefficients {
        #[command(flatten)]
        source: Source,
        #[arg(short, long)]
        out: PathBuf,
        /// Rows per period in the tables.
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Run one solver and record fields, receivers and energy.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverKind::Micro)]
        solver: SolverKind,
        /// Receiver positions, m (comma separated).
        #[arg(long, value_delimiter = ',')]
        receivers: Vec<f64>,
        /// Full-field snapshot times, s (comma separated).
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
    },
    /// Plane-wave branches, k-gaps and Floquet growth of the effective medium.
    Dispersion {
        #[command(flatten)]
        source: Source,
        #[arg(short, long)]
        out: PathBuf,
        /// Largest wavenumber of interest, rad/m (default: three temporal
        /// zone widths).
        #[arg(long)]
        k_max: Option<f64>,
        #[arg(long, default_value_t = 32)]
        n_f: usize,
        #[arg(long, default_value_t = 256)]
        n_omega: usize,
    },
    /// Run two solvers on the same configuration and report error norms.
    Compare {
        #[command(flatten)]
        source: Source,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverKind::Micro)]
        solver_a: SolverKind,
        #[arg(long, value_enum, default_value_t = SolverKind::Leading)]
        solver_b: SolverKind,
        /// Comparison time, s (default: end of the run).
        #[arg(long)]
        at: Option<f64>,
        /// Spatial window `lo:hi` in m restricting the norm.
        #[arg(long)]
        window: Option<String>,
    },
    /// Run several configuration files in parallel, one output directory
    /// each (thread count from MODWAVE_THREADS).
    Sweep {
        /// TOML configuration files.
        configs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverKind::Leading)]
        solver: SolverKind,
    },
    /// Run the full pipeline of a bundled preset.
    Preset {
        /// Preset name; pass `list` to enumerate the available names.
        name: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Path to a TOML problem configuration.
    config: Option<PathBuf>,
    /// Name of a bundled preset instead of a config file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Micro,
    Leading,
    SecondOrder,
    Dissipative,
}

impl SolverKind {
    fn name(self) -> &'static str {
        match self {
            SolverKind::Micro => "micro",
            SolverKind::Leading => "leading",
            SolverKind::SecondOrder => "second-order",
            SolverKind::Dissipative => "dissipative",
        }
    }

    fn run(self, cfg: &ProblemConfig, rec: &RecordSpec) -> modwave::Result<FieldHistory> {
        match self {
            SolverKind::Micro => micro::run_micro(cfg, rec),
            SolverKind::Leading => effective::run_leading(cfg, rec),
            SolverKind::SecondOrder => effective::run_second_order(cfg, rec),
            SolverKind::Dissipative => effective::run_dissipative(cfg, rec),
        }
    }
}

/// Failures split by exit code: 1 for configuration problems, 2 for
/// runtime problems.
enum CliError {
    Config(String),
    Runtime(String),
}

impl From<modwave::Error> for CliError {
    fn from(e: modwave::Error) -> Self {
        match e {
            modwave::Error::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

impl Source {
    fn load(&self) -> CliResult<(ProblemConfig, Option<String>)> {
        let cfg = match (&self.config, &self.preset) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                toml::from_str(&text).map_err(|e| {
                    CliError::Config(format!("cannot parse {}: {e}", path.display()))
                })?
            }
            (None, Some(name)) => presets::by_name(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset '{name}'; available: {}",
                    presets::PRESET_NAMES.join(", ")
                ))
            })?,
            _ => {
                return Err(CliError::Config(
                    "give either a config file or --preset <name>".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok((cfg, self.preset.clone()))
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Validate(source) => cmd_validate(&source),
        Cmd::Coefficients { source, out, samples } => cmd_coefficients(&source, &out, samples),
        Cmd::Simulate { source, out, solver, receivers, snapshots } => {
            let (cfg, preset) = source.load()?;
            cmd_simulate(&cfg, preset, &out, solver, &receivers, &snapshots).map(|_| ())
        }
        Cmd::Dispersion { source, out, k_max, n_f, n_omega } => {
            cmd_dispersion(&source, &out, k_max, n_f, n_omega)
        }
        Cmd::Compare { source, out, solver_a, solver_b, at, window } => {
            cmd_compare(&source, &out, solver_a, solver_b, at, window.as_deref())
        }
        Cmd::Sweep { configs, out, solver } => cmd_sweep(&configs, &out, solver),
        Cmd::Preset { name, out } => cmd_preset(&name, out.as_deref()),
    }
}

/// Scalar quantities every summary carries.
fn derived_metrics(cfg: &ProblemConfig) -> CliResult<BTreeMap<String, f64>> {
    let mut m = BTreeMap::new();
    m.insert("c_star".into(), cfg.reference_speed()?);
    m.insert("eta_0".into(), cfg.eta_n(0)?);
    if cfg.modulation_omega()?.is_some() {
        m.insert("eta_1".into(), cfg.eta_n(1)?);
        m.insert("modulation_period".into(), cfg.modulation_period()?.unwrap());
    }
    let law = EffectiveLaw::new(cfg)?;
    m.insert("cfl_dt_micro".into(), cfg.grid.cfl_fraction * cfg.grid.dx() / cfg.bulk.max_speed());
    m.insert("cfl_dt_leading".into(), cfg.grid.cfl_fraction * cfg.grid.dx() / law.max_speed());
    Ok(m)
}

fn cmd_validate(source: &Source) -> CliResult<()> {
    let (cfg, _) = source.load()?;
    let metrics = derived_metrics(&cfg)?;
    println!("configuration is valid");
    for (k, v) in &metrics {
        println!("  {k} = {v}");
    }
    Ok(())
}

/// Whether the second-order (limit-case) model applies.
fn limit_case(cfg: &ProblemConfig) -> bool {
    cfg.bulk.rho.is_constant()
        && cfg.bulk.e.is_constant()
        && cfg.lattice.interfaces.iter().all(|i| i.mass.mean == 0.0)
}

fn cmd_coefficients(source: &Source, out: &Path, samples: usize) -> CliResult<()> {
    let (cfg, preset) = source.load()?;
    let dir = OutputDir::create(out)?;
    let law = EffectiveLaw::new(&cfg)?;
    let nd = cfg.nondimensionalise()?;
    let family = CorrectorFamily::compute(CellConfig::dimensional_time(&nd), samples.max(4))?;
    let (b1, b2) = (family.b1_series(), family.b2_series());
    let b_cols = limit_case(&cfg).then_some((&b1, &b2));
    output::write_coefficients(&dir.fields("coefficients.csv"), &law, b_cols, samples)?;

    // dimensionless cell coefficients on the same period grid
    let nondim = CorrectorFamily::compute(CellConfig::from_nondim(&nd), samples.max(4))?;
    write_cell_table(&dir.fields("cell_coefficients.csv"), &nondim)?;

    let mut summary = RunSummary {
        command: "coefficients".into(),
        preset,
        n_x: Some(cfg.grid.n_x),
        t_end: Some(cfg.grid.t_end),
        outputs: vec!["fields/coefficients.csv".into(), "fields/cell_coefficients.csv".into()],
        metrics: derived_metrics(&cfg)?,
        ..Default::default()
    };
    let mut max_res: f64 = 0.0;
    for i in 0..nondim.times.len() {
        for r in nondim.variational_residuals(i) {
            max_res = max_res.max(r.abs());
        }
    }
    summary.metrics.insert("max_variational_residual".into(), max_res);
    output::write_summary(&dir.summary_path(), &summary)?;
    Ok(())
}

/// Dimensionless coefficient table: t, alpha0, beta0, gamma_m0, gamma_c0,
/// the seven corrector coefficients a..g, and b1, b2.
fn write_cell_table(path: &Path, family: &CorrectorFamily) -> CliResult<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(modwave::Error::Io)?,
    );
    writeln!(w, "t,alpha0,beta0,gamma_m0,gamma_c0,frak_a,frak_b,frak_c,frak_d,frak_e,frak_f,frak_g,b1,b2")
        .map_err(modwave::Error::Io)?;
    for i in 0..family.times.len() {
        let t = family.times[i];
        let (a0, b0) = family.config.effective_leading(t);
        let (gm, gc) = family.config.effective_dissipative(t);
        let f = family.fraktur(i);
        let (b1, b2) = family.limit_case(i);
        let row = [t, a0, b0, gm, gc, f.a, f.b, f.c, f.d, f.e, f.f, f.g, b1, b2];
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(modwave::Error::Io)?;
    }
    Ok(())
}

/// Shared run pipeline of `simulate`, `sweep` and `preset`.
fn cmd_simulate(
    cfg: &ProblemConfig,
    preset: Option<String>,
    out: &Path,
    solver: SolverKind,
    receivers: &[f64],
    snapshots: &[f64],
) -> CliResult<FieldHistory> {
    let dir = OutputDir::create(out)?;
    let rec = RecordSpec {
        receivers: receivers.to_vec(),
        snapshot_times: snapshots.to_vec(),
        ..Default::default()
    };
    let hist = solver.run(cfg, &rec)?;
    let mut outputs = Vec::new();

    let final_frame = hist.frames.last().expect("run records at least the initial frame");
    output::write_snapshot(&dir.fields("final.csv"), &hist.xs, final_frame)?;
    outputs.push("fields/final.csv".into());
    for (i, frame) in hist.snapshots.iter().enumerate() {
        let name = format!("snapshot_{i}.csv");
        output::write_snapshot(&dir.fields(&name), &hist.xs, frame)?;
        outputs.push(format!("fields/{name}"));
    }
    for (i, trace) in hist.receivers.iter().enumerate() {
        let name = format!("receiver_{i}.csv");
        output::write_receiver(&dir.fields(&name), &hist.receiver_times, trace)?;
        outputs.push(format!("fields/{name}"));
    }

    let energy = match solver {
        SolverKind::Micro => diagnostics::energy_bulk_micro(&hist, cfg)?,
        _ => diagnostics::energy_bulk_effective(&hist, cfg)?,
    };
    output::write_energy(&dir.energy("energy.csv"), &energy)?;
    outputs.push("energy/energy.csv".into());
    if solver == SolverKind::SecondOrder {
        let so = diagnostics::energy_second_order(&hist, cfg)?;
        output::write_second_order_energy(&dir.energy("second_order.csv"), &so)?;
        outputs.push("energy/second_order.csv".into());
    }

    if hist.frames.len() >= 8 {
        let map = dispersion::field_dispersion_map(&hist)?;
        output::write_dispersion_map(&dir.dispersion("field_map.csv"), &map)?;
        outputs.push("dispersion/field_map.csv".into());
    }

    let mut metrics = derived_metrics(cfg)?;
    metrics.insert("energy_final".into(), *energy.total.last().unwrap());
    if let Ok(slope) = diagnostics::floquet_growth_fit(&energy.times, &energy.total) {
        metrics.insert("energy_log_slope".into(), slope);
    }
    let summary = RunSummary {
        command: "simulate".into(),
        preset,
        solver: Some(solver.name().into()),
        n_x: Some(cfg.grid.n_x),
        dt: Some(hist.dt),
        n_steps: Some(hist.receiver_times.len().saturating_sub(1)),
        t_end: Some(cfg.grid.t_end),
        outputs,
        metrics,
    };
    output::write_summary(&dir.summary_path(), &summary)?;
    Ok(hist)
}

fn cmd_dispersion(
    source: &Source,
    out: &Path,
    k_max: Option<f64>,
    n_f: usize,
    n_omega: usize,
) -> CliResult<()> {
    let (cfg, preset) = source.load()?;
    let law = EffectiveLaw::new(&cfg)?;
    let tau = cfg.modulation_period()?.ok_or_else(|| {
        CliError::Config("dispersion analysis needs a modulated configuration".into())
    })?;
    let dir = OutputDir::create(out)?;
    let c0 = (law.e0(0.0) / law.rho0(0.0)).sqrt();
    let k_max = k_max.unwrap_or(3.0 * std::f64::consts::PI / (tau * c0));

    let d_om = 2.0 * std::f64::consts::PI / tau / n_omega as f64;
    let mut branches = Vec::with_capacity(n_omega);
    for i in 0..n_omega {
        let omega = (i as f64 + 0.5) * d_om;
        let ks: Vec<f64> = dispersion::pwe_wavenumbers(&law, omega, n_f)?
            .into_iter()
            .filter(|&k| k <= k_max)
            .collect();
        branches.push((omega, ks));
    }
    output::write_branches(&dir.dispersion("branches.csv"), &branches)?;
    let gaps = dispersion::detect_k_gaps(&law, k_max, n_f, n_omega)?;
    output::write_gaps(&dir.dispersion("gaps.csv"), &gaps)?;

    let mut metrics = derived_metrics(&cfg)?;
    metrics.insert("n_gaps".into(), gaps.len() as f64);
    if let Some(g) = gaps.first() {
        metrics.insert("gap1_k_lo".into(), g.k_lo);
        metrics.insert("gap1_k_hi".into(), g.k_hi);
        metrics.insert("gap1_growth".into(), g.growth);
    }
    let summary = RunSummary {
        command: "dispersion".into(),
        preset,
        outputs: vec!["dispersion/branches.csv".into(), "dispersion/gaps.csv".into()],
        metrics,
        ..Default::default()
    };
    output::write_summary(&dir.summary_path(), &summary)?;
    Ok(())
}

fn parse_window(text: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!("window '{text}' is not of the form lo:hi")));
    }
    let lo: f64 = parts[0].parse().map_err(|_| CliError::Config("bad window bound".into()))?;
    let hi: f64 = parts[1].parse().map_err(|_| CliError::Config("bad window bound".into()))?;
    if lo >= hi {
        return Err(CliError::Config("window lower bound must be below the upper".into()));
    }
    Ok((lo, hi))
}

fn cmd_compare(
    source: &Source,
    out: &Path,
    solver_a: SolverKind,
    solver_b: SolverKind,
    at: Option<f64>,
    window: Option<&str>,
) -> CliResult<()> {
    let (cfg, preset) = source.load()?;
    let dir = OutputDir::create(out)?;
    let window = window.map(parse_window).transpose()?;
    let t = at.unwrap_or(cfg.grid.t_end);
    let rec = RecordSpec { snapshot_times: vec![t], ..Default::default() };
    let hist_a = solver_a.run(&cfg, &rec)?;
    let hist_b = solver_b.run(&cfg, &rec)?;
    output::write_snapshot(&dir.fields("a.csv"), &hist_a.xs, &hist_a.snapshots[0])?;
    output::write_snapshot(&dir.fields("b.csv"), &hist_b.xs, &hist_b.snapshots[0])?;
    let norms = diagnostics::compare_fields(&hist_a, &hist_b, t, window)?;
    let mut metrics = derived_metrics(&cfg)?;
    metrics.insert("l2_rel".into(), norms.l2_rel);
    metrics.insert("linf_rel".into(), norms.linf_rel);
    metrics.insert("compare_time".into(), t);
    let summary = RunSummary {
        command: "compare".into(),
        preset,
        solver: Some(format!("{}-vs-{}", solver_a.name(), solver_b.name())),
        n_x: Some(cfg.grid.n_x),
        t_end: Some(cfg.grid.t_end),
        outputs: vec!["fields/a.csv".into(), "fields/b.csv".into()],
        metrics,
        ..Default::default()
    };
    output::write_summary(&dir.summary_path(), &summary)?;
    Ok(())
}

fn cmd_sweep(configs: &[PathBuf], out: &Path, solver: SolverKind) -> CliResult<()> {
    if configs.is_empty() {
        return Err(CliError::Config("sweep needs at least one configuration file".into()));
    }
    let threads: usize = std::env::var("MODWAVE_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let jobs: Vec<(usize, PathBuf)> = configs.iter().cloned().enumerate().collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<CliResult<()>>>> =
        configs.iter().map(|_| std::sync::Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..threads.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let path = &jobs[i].1;
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("config_{i}"));
                let run = || -> CliResult<()> {
                    let src = Source { config: Some(path.clone()), preset: None };
                    let (cfg, _) = src.load()?;
                    cmd_simulate(&cfg, None, &out.join(stem), solver, &[], &[])?;
                    Ok(())
                };
                *results[i].lock().unwrap() = Some(run());
            });
        }
    });

    let mut config_err = None;
    let mut runtime_err = None;
    for (i, slot) in results.iter().enumerate() {
        match slot.lock().unwrap().take() {
            Some(Ok(())) => {}
            Some(Err(CliError::Config(m))) => {
                config_err = Some(format!("{}: {m}", configs[i].display()))
            }
            Some(Err(CliError::Runtime(m))) => {
                runtime_err = Some(format!("{}: {m}", configs[i].display()))
            }
            None => runtime_err = Some(format!("{}: worker vanished", configs[i].display())),
        }
    }
    if let Some(m) = config_err {
        return Err(CliError::Config(m));
    }
    if let Some(m) = runtime_err {
        return Err(CliError::Runtime(m));
    }
    Ok(())
}

/// Characteristic-split estimate of the reflected energy fraction on the
/// transmission side of the source, from the final velocity-stress frame.
fn reflection_fraction(hist: &FieldHistory, cfg: &ProblemConfig) -> Option<f64> {
    let frame = hist.frames.last()?;
    if frame.v.is_empty() {
        return None;
    }
    let z = (cfg.bulk.rho.mean() * cfg.bulk.e.mean()).sqrt();
    let lo = cfg.source.x_s + 5.0 * cfg.lattice.h;
    let mut back = 0.0;
    let mut total = 0.0;
    for (m, &x) in hist.xs.iter().enumerate() {
        if x <= lo {
            continue;
        }
        let p = frame.s[m] + z * frame.v[m]; // left-moving on the right side
        let q = frame.s[m] - z * frame.v[m];
        back += p * p;
        total += p * p + q * q;
    }
    (total > 0.0).then(|| back / total)
}

fn cmd_preset(name: &str, out: Option<&Path>) -> CliResult<()> {
    if name == "list" {
        use std::io::Write;
        let mut out = std::io::stdout();
        for n in presets::PRESET_NAMES {
            if writeln!(out, "{n}").is_err() {
                break; // downstream pipe closed
            }
        }
        return Ok(());
    }
    let cfg = presets::by_name(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset '{name}'; available: {}",
            presets::PRESET_NAMES.join(", ")
        ))
    })?;
    let out = out.ok_or_else(|| CliError::Config("preset runs need --out <dir>".into()))?;

    // coefficient tables
    let src = Source { config: None, preset: Some(name.to_string()) };
    cmd_coefficients(&src, &out.join("coefficients"), 64)?;

    // reference and effective runs with a common receiver
    let receivers = vec![0.65 * cfg.grid.length];
    let snaps = vec![0.5 * cfg.grid.t_end, cfg.grid.t_end];
    let hist_micro =
        cmd_simulate(&cfg, Some(name.into()), &out.join("micro"), SolverKind::Micro, &receivers, &snaps)?;
    let effective_kind = if cfg.lattice.interfaces.iter().any(|i| i.has_dissipation()) {
        SolverKind::Dissipative
    } else {
        SolverKind::Leading
    };
    let hist_eff = cmd_simulate(
        &cfg,
        Some(name.into()),
        &out.join(effective_kind.name()),
        effective_kind,
        &receivers,
        &snaps,
    )?;
    if limit_case(&cfg) {
        cmd_simulate(
            &cfg,
            Some(name.into()),
            &out.join("second-order"),
            SolverKind::SecondOrder,
            &receivers,
            &snaps,
        )?;
    }

    // effective dispersion analysis for modulated lattices
    if cfg.modulation_period()?.is_some() {
        cmd_dispersion(&src, &out.join("dispersion"), None, 32, 200)?;
    }

    // top-level summary with cross-model metrics
    let mut metrics = derived_metrics(&cfg)?;
    let norms = diagnostics::compare_fields(
        &hist_micro,
        &hist_eff,
        0.5 * cfg.grid.t_end,
        Some((0.2 * cfg.grid.length, 0.8 * cfg.grid.length)),
    )?;
    metrics.insert("micro_vs_effective_l2".into(), norms.l2_rel);
    if let Some(r) = reflection_fraction(&hist_micro, &cfg) {
        metrics.insert("reflection_fraction".into(), r);
    }
    let dir = OutputDir::create(out)?;
    let summary = RunSummary {
        command: "preset".into(),
        preset: Some(name.into()),
        n_x: Some(cfg.grid.n_x),
        t_end: Some(cfg.grid.t_end),
        outputs: vec![
            "coefficients".into(),
            "micro".into(),
            effective_kind.name().into(),
            "dispersion".into(),
        ],
        metrics,
        ..Default::default()
    };
    output::write_summary(&dir.summary_path(), &summary)?;
    Ok(())
}
