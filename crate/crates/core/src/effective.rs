//! Time steppers for the homogenised models: the leading-order displacement
//! scheme, the second-order (limit-case) tridiagonal scheme, and the
//! dissipative velocity-stress splitting scheme. All share the recording
//! plumbing of [`crate::history`] and homogeneous Dirichlet ends.

use crate::cell::{CellConfig, CorrectorFamily, PeriodicSeries};
use crate::config::ProblemConfig;
use crate::history::{FieldHistory, RecordSpec, Recorder};
use crate::{Error, Result};

/// Closed-form time-dependent effective material laws of the lattice:
/// ρ0(T) = ⟨ρ⟩ + Σ M_ℓ(T)/h, 1/E0(T) = ⟨1/E⟩ + Σ C_ℓ(T)/h, and the
/// dissipative relaxation rates Γ_M0, Γ_C0 built from the law derivatives.
#[derive(Debug, Clone)]
pub struct EffectiveLaw {
    rho_mean: f64,
    inv_e_mean: f64,
    h: f64,
    interfaces: Vec<crate::config::InterfaceSpec>,
    /// Modulation period, None when static.
    pub period: Option<f64>,
}

impl EffectiveLaw {
    pub fn new(config: &ProblemConfig) -> Result<Self> {
        config.validate()?;
        Ok(EffectiveLaw {
            rho_mean: config.bulk.rho.mean(),
            inv_e_mean: config.bulk.e.mean_recip(),
            h: config.lattice.h,
            interfaces: config.lattice.interfaces.clone(),
            period: config.modulation_period()?,
        })
    }

    pub fn rho0(&self, t: f64) -> f64 {
        self.rho_mean + self.interfaces.iter().map(|i| i.mass.value(t)).sum::<f64>() / self.h
    }

    pub fn e0(&self, t: f64) -> f64 {
        1.0 / (self.inv_e_mean
            + self.interfaces.iter().map(|i| i.compliance.value(t)).sum::<f64>() / self.h)
    }

    pub fn rho0_deriv(&self, t: f64) -> f64 {
        self.interfaces.iter().map(|i| i.mass.deriv(t)).sum::<f64>() / self.h
    }

    /// E0′ = −E0² · Σ C′_ℓ / h.
    pub fn e0_deriv(&self, t: f64) -> f64 {
        let e0 = self.e0(t);
        -e0 * e0 * self.interfaces.iter().map(|i| i.compliance.deriv(t)).sum::<f64>() / self.h
    }

    /// Γ_M0(T) = −(1/h) Σ [M′_ℓ + Q_Mℓ].
    pub fn gamma_m0(&self, t: f64) -> f64 {
        -self
            .interfaces
            .iter()
            .map(|i| i.mass.deriv(t) + i.q_m.value(t))
            .sum::<f64>()
            / self.h
    }

    /// Γ_C0(T) = −(1/h) Σ [C′_ℓ + Q_Cℓ].
    pub fn gamma_c0(&self, t: f64) -> f64 {
        -self
            .interfaces
            .iter()
            .map(|i| i.compliance.deriv(t) + i.q_c.value(t))
            .sum::<f64>()
            / self.h
    }

    /// max over the modulation period of sqrt(E0/ρ0).
    pub fn max_speed(&self) -> f64 {
        self.sample_max(|law, t| (law.e0(t) / law.rho0(t)).sqrt())
    }

    fn sample_max(&self, f: impl Fn(&Self, f64) -> f64) -> f64 {
        match self.period {
            None => f(self, 0.0),
            Some(tau) => (0..512)
                .map(|i| f(self, tau * i as f64 / 512.0))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

type ForcingFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Point force density S(T)·δ(X−X_s), applied at the node nearest X_s.
fn point_forcing(config: &ProblemConfig) -> ForcingFn {
    let src = config.source.clone();
    let dx = config.grid.dx();
    Box::new(move |x: f64, t: f64| {
        if (x - src.x_s).abs() <= 0.5 * dx {
            src.signal(t) / dx
        } else {
            0.0
        }
    })
}

fn choose_steps(t_end: f64, dt_max: f64) -> (usize, f64) {
    let n_steps = (t_end / dt_max).ceil() as usize;
    (n_steps, t_end / n_steps as f64)
}

// ---------------------------------------------------------------------------
// leading order
// ---------------------------------------------------------------------------

/// Explicit conservative-in-time scheme for
/// ∂T(ρ0 ∂T U) = E0(T) ∂XX U + F, with the half-step densities evaluated
/// analytically from the modulation laws.
pub struct LeadingSolver {
    pub law: EffectiveLaw,
    pub xs: Vec<f64>,
    /// U at the previous and current step.
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    /// Completed steps; current time is `n * dt`.
    pub n: usize,
    pub dt: f64,
    dx: f64,
    t_end: f64,
    forcing: ForcingFn,
}

impl LeadingSolver {
    pub fn new(config: &ProblemConfig) -> Result<Self> {
        let law = EffectiveLaw::new(config)?;
        let dx = config.grid.dx();
        let (_, dt) = choose_steps(config.grid.t_end, config.grid.cfl_fraction * dx / law.max_speed());
        let n_nodes = config.grid.n_x + 1;
        Ok(LeadingSolver {
            law,
            xs: (0..n_nodes).map(|m| m as f64 * dx).collect(),
            u_prev: vec![0.0; n_nodes],
            u_curr: vec![0.0; n_nodes],
            n: 0,
            dt,
            dx,
            t_end: config.grid.t_end,
            forcing: point_forcing(config),
        })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn time(&self) -> f64 {
        self.n as f64 * self.dt
    }

    /// Replace the point source by an arbitrary force density (used by
    /// manufactured-solution studies).
    pub fn set_forcing(&mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) {
        self.forcing = Box::new(f);
    }

    /// Initial data U(·, 0) and U(·, −ΔT).
    pub fn set_initial(&mut self, u0: impl Fn(f64) -> f64, u_minus: impl Fn(f64) -> f64) {
        for (m, &x) in self.xs.iter().enumerate() {
            self.u_curr[m] = u0(x);
            self.u_prev[m] = u_minus(x);
        }
        self.n = 0;
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        let t = self.time();
        let r_minus = self.law.rho0(t - 0.5 * dt);
        let r_plus = self.law.rho0(t + 0.5 * dt);
        let e0 = self.law.e0(t);
        let lam = (dt / self.dx) * (dt / self.dx) * e0;
        if e0 / r_plus.min(r_minus) > (self.dx / dt) * (self.dx / dt) {
            let speed = self.law.max_speed();
            return Err(Error::Cfl { speed, max_dt: self.dx / speed, dt });
        }
        let nn = self.xs.len() - 1;
        let mut u_next = vec![0.0; nn + 1];
        for m in 1..nn {
            let lap = self.u_curr[m + 1] - 2.0 * self.u_curr[m] + self.u_curr[m - 1];
            let f = (self.forcing)(self.xs[m], t);
            u_next[m] = self.u_curr[m]
                + (r_minus * (self.u_curr[m] - self.u_prev[m]) + lam * lap + dt * dt * f)
                    / r_plus;
        }
        self.u_prev = std::mem::replace(&mut self.u_curr, u_next);
        self.n += 1;
        Ok(())
    }
}

/// Run the leading-order solver over the configured horizon.
pub fn run_leading(config: &ProblemConfig, record: &RecordSpec) -> Result<FieldHistory> {
    let mut solver = LeadingSolver::new(config)?;
    let n_steps = solver.n_steps();
    let mut rec = Recorder::new(&solver.xs, solver.dt, n_steps, record)?;
    rec.push(0.0, &solver.u_curr, &[], &[]);
    for _ in 0..n_steps {
        solver.step()?;
        rec.push(solver.time(), &solver.u_curr, &[], &[]);
    }
    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// second order (limit case)
// ---------------------------------------------------------------------------

/// Implicit tridiagonal scheme for the limit-case second-order model
/// ∂TT U − (E0/ρ + h²ℬ1) ∂XX U − h²ℬ2 ∂XXTT U − h²ℬ2′ ∂XXT U = F/ρ,
/// valid for a homogeneous bulk and massless interfaces.
pub struct SecondOrderSolver {
    pub law: EffectiveLaw,
    pub xs: Vec<f64>,
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub n: usize,
    pub dt: f64,
    dx: f64,
    t_end: f64,
    rho: f64,
    h: f64,
    b1: PeriodicSeries,
    b2: PeriodicSeries,
    forcing: ForcingFn,
    // Thomas workspace
    cp: Vec<f64>,
    rhs: Vec<f64>,
}

impl SecondOrderSolver {
    pub fn new(config: &ProblemConfig) -> Result<Self> {
        if !config.bulk.rho.is_constant() || !config.bulk.e.is_constant() {
            return Err(Error::InvalidConfig(
                "the second-order model requires a homogeneous bulk".into(),
            ));
        }
        if config.lattice.interfaces.iter().any(|i| i.mass.mean != 0.0) {
            return Err(Error::InvalidConfig(
                "the second-order model requires massless interfaces".into(),
            ));
        }
        let law = EffectiveLaw::new(config)?;
        let nd = config.nondimensionalise()?;
        let family = CorrectorFamily::compute(CellConfig::dimensional_time(&nd), 64)?;
        let b1 = family.b1_series();
        let b2 = family.b2_series();
        let rho = config.bulk.rho.mean();
        let h = config.lattice.h;
        let dx = config.grid.dx();

        // dispersive wave speed (and positivity of the enriched stiffness)
        let tau = law.period;
        let samples = match tau {
            None => vec![0.0],
            Some(tau) => (0..512).map(|i| tau * i as f64 / 512.0).collect(),
        };
        let mut c_max: f64 = 0.0;
        for &t in &samples {
            let stiff = law.e0(t) / rho + h * h * b1.eval(t);
            if stiff <= 0.0 {
                return Err(Error::Numerical(format!(
                    "effective stiffness E0/ρ + h²B1 = {stiff} is non-positive at T = {t}"
                )));
            }
            c_max = c_max.max(stiff.sqrt());
        }
        let (_, dt) = choose_steps(config.grid.t_end, config.grid.cfl_fraction * dx / c_max);

        let n_nodes = config.grid.n_x + 1;
        Ok(SecondOrderSolver {
            law,
            xs: (0..n_nodes).map(|m| m as f64 * dx).collect(),
            u_prev: vec![0.0; n_nodes],
            u_curr: vec![0.0; n_nodes],
            n: 0,
            dt,
            dx,
            t_end: config.grid.t_end,
            rho,
            h,
            b1,
            b2,
            forcing: point_forcing(config),
            cp: vec![0.0; n_nodes],
            rhs: vec![0.0; n_nodes],
        })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn time(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn set_forcing(&mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) {
        self.forcing = Box::new(f);
    }

    pub fn set_initial(&mut self, u0: impl Fn(f64) -> f64, u_minus: impl Fn(f64) -> f64) {
        for (m, &x) in self.xs.iter().enumerate() {
            self.u_curr[m] = u0(x);
            self.u_prev[m] = u_minus(x);
        }
        self.n = 0;
    }

    /// Scheme quantities (A², B, C) frozen at time t.
    fn coefficients(&self, t: f64) -> Result<(f64, f64, f64)> {
        let stiff = self.law.e0(t) / self.rho + self.h * self.h * self.b1.eval(t);
        if stiff <= 0.0 {
            return Err(Error::Numerical(format!(
                "effective stiffness E0/ρ + h²B1 = {stiff} is non-positive at T = {t}"
            )));
        }
        let a2 = stiff * (self.dt / self.dx) * (self.dt / self.dx);
        let b = self.h * self.h * self.b2.eval(t) / (self.dx * self.dx);
        let c = self.h * self.h * self.b2.deriv(t) * self.dt / (self.dx * self.dx);
        Ok((a2, b, c))
    }

    pub fn step(&mut self) -> Result<()> {
        let t = self.time();
        let dt = self.dt;
        let (a2, b, c) = self.coefficients(t)?;
        let p = 1.0 + 2.0 * b + c;
        let q = -(b + 0.5 * c);
        if p - 2.0 * q.abs() <= 0.0 {
            return Err(Error::Numerical(format!(
                "tridiagonal system lost diagonal dominance at T = {t} (P = {p}, Q = {q})"
            )));
        }
        let nn = self.xs.len() - 1;
        for m in 1..nn {
            let un = &self.u_curr;
            let up = &self.u_prev;
            self.rhs[m] = 2.0 * (1.0 - a2 + 2.0 * b) * un[m]
                + (a2 - 2.0 * b) * (un[m + 1] + un[m - 1])
                - (1.0 + 2.0 * b - c) * up[m]
                + (b - 0.5 * c) * (up[m + 1] + up[m - 1])
                + dt * dt * (self.forcing)(self.xs[m], t) / self.rho;
        }
        let rhs_norm = self.rhs[1..nn].iter().fold(0.0f64, |a, &x| a.max(x.abs()));

        // Thomas sweep on the interior unknowns, Dirichlet ends
        let mut u_next = vec![0.0; nn + 1];
        self.cp[1] = q / p;
        u_next[1] = self.rhs[1] / p;
        for m in 2..nn {
            let denom = p - q * self.cp[m - 1];
            self.cp[m] = q / denom;
            u_next[m] = (self.rhs[m] - q * u_next[m - 1]) / denom;
        }
        for m in (1..nn - 1).rev() {
            let correction = self.cp[m] * u_next[m + 1];
            u_next[m] -= correction;
        }

        // solve-quality guard
        let mut res: f64 = 0.0;
        for m in 1..nn {
            let left = if m == 1 { 0.0 } else { u_next[m - 1] };
            let right = if m == nn - 1 { 0.0 } else { u_next[m + 1] };
            res = res.max((p * u_next[m] + q * (left + right) - self.rhs[m]).abs());
        }
        if res > 1e-10 * rhs_norm.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "tridiagonal residual {res:.3e} exceeds tolerance at T = {t}"
            )));
        }

        self.u_prev = std::mem::replace(&mut self.u_curr, u_next);
        self.n += 1;
        Ok(())
    }
}

/// Run the second-order solver over the configured horizon.
pub fn run_second_order(config: &ProblemConfig, record: &RecordSpec) -> Result<FieldHistory> {
    let mut solver = SecondOrderSolver::new(config)?;
    let n_steps = solver.n_steps();
    let mut rec = Recorder::new(&solver.xs, solver.dt, n_steps, record)?;
    rec.push(0.0, &solver.u_curr, &[], &[]);
    for _ in 0..n_steps {
        solver.step()?;
        rec.push(solver.time(), &solver.u_curr, &[], &[]);
    }
    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// dissipative leading order (velocity-stress, Strang splitting)
// ---------------------------------------------------------------------------

/// Exact half-step of the relaxation part
/// ∂T V = (Γ_M0/ρ0) V + F/ρ0, ∂T S = E0 Γ_C0 S, coefficients frozen.
fn relax_half_step(v: &mut [f64], s: &mut [f64], a: f64, b: f64, tau: f64, force: &[f64]) {
    let ea = (a * tau).exp();
    // (e^{aτ} − 1)/a, continuous at a = 0
    let phi = if a.abs() > 1e-300 { (ea - 1.0) / a } else { tau };
    let eb = (b * tau).exp();
    for m in 0..v.len() {
        v[m] = ea * v[m] + phi * force[m];
        s[m] *= eb;
    }
}

/// Strang-split solver for the dissipative leading-order velocity-stress
/// system ∂T𝐔 + A(T)∂X𝐔 = S(T)𝐔 + 𝐅.
pub struct DissipativeSolver {
    pub law: EffectiveLaw,
    pub xs: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    /// Trapezoidal time integral of `v`.
    pub u: Vec<f64>,
    pub n: usize,
    pub dt: f64,
    dx: f64,
    t_end: f64,
    forcing: ForcingFn,
}

impl DissipativeSolver {
    pub fn new(config: &ProblemConfig) -> Result<Self> {
        let law = EffectiveLaw::new(config)?;
        let dx = config.grid.dx();
        let (_, dt) = choose_steps(config.grid.t_end, config.grid.cfl_fraction * dx / law.max_speed());
        let n_nodes = config.grid.n_x + 1;
        Ok(DissipativeSolver {
            law,
            xs: (0..n_nodes).map(|m| m as f64 * dx).collect(),
            v: vec![0.0; n_nodes],
            s: vec![0.0; n_nodes],
            u: vec![0.0; n_nodes],
            n: 0,
            dt,
            dx,
            t_end: config.grid.t_end,
            forcing: point_forcing(config),
        })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn time(&self) -> f64 {
        self.n as f64 * self.dt
    }

    fn relax(&mut self, t: f64) {
        let rho0 = self.law.rho0(t);
        let a = self.law.gamma_m0(t) / rho0;
        let b = self.law.e0(t) * self.law.gamma_c0(t);
        let force: Vec<f64> = self.xs.iter().map(|&x| (self.forcing)(x, t) / rho0).collect();
        relax_half_step(&mut self.v, &mut self.s, a, b, 0.5 * self.dt, &force);
    }

    /// Lax-Wendroff propagative substep with coefficients frozen at t.
    fn propagate(&mut self, t: f64) {
        let dt = self.dt;
        let dx = self.dx;
        let rho0 = self.law.rho0(t);
        let e0 = self.law.e0(t);
        let c2 = e0 / rho0;
        let nn = self.xs.len() - 1;
        let (v, s) = (&self.v, &self.s);
        let mut v_new = v.clone();
        let mut s_new = s.clone();
        let r = dt / (2.0 * dx);
        let d = c2 * dt * dt / (2.0 * dx * dx);
        for m in 1..nn {
            v_new[m] = v[m] + r / rho0 * (s[m + 1] - s[m - 1]) + d * (v[m + 1] - 2.0 * v[m] + v[m - 1]);
            s_new[m] = s[m] + r * e0 * (v[m + 1] - v[m - 1]) + d * (s[m + 1] - 2.0 * s[m] + s[m - 1]);
        }
        v_new[0] = 0.0;
        v_new[nn] = 0.0;
        let dxv_left = |f: &[f64]| (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
        let dxv_right = |f: &[f64]| (3.0 * f[nn] - 4.0 * f[nn - 1] + f[nn - 2]) / (2.0 * dx);
        s_new[0] = s[0] + e0 * dt * 0.5 * (dxv_left(v) + dxv_left(&v_new));
        s_new[nn] = s[nn] + e0 * dt * 0.5 * (dxv_right(v) + dxv_right(&v_new));
        self.v = v_new;
        self.s = s_new;
    }

    pub fn step(&mut self) -> Result<()> {
        let t = self.time();
        let dt = self.dt;
        let c_max = self.law.max_speed();
        if c_max * dt / self.dx > 1.0 + 1e-9 {
            return Err(Error::Cfl { speed: c_max, max_dt: self.dx / c_max, dt });
        }
        let v_old = self.v.clone();
        self.relax(t);
        self.propagate(t + 0.5 * dt);
        self.relax(t + dt);
        for m in 0..self.u.len() {
            self.u[m] += 0.5 * dt * (self.v[m] + v_old[m]);
        }
        self.n += 1;
        Ok(())
    }
}

/// Run the dissipative leading-order solver over the configured horizon.
pub fn run_dissipative(config: &ProblemConfig, record: &RecordSpec) -> Result<FieldHistory> {
    let mut solver = DissipativeSolver::new(config)?;
    let n_steps = solver.n_steps();
    let mut rec = Recorder::new(&solver.xs, solver.dt, n_steps, record)?;
    rec.push(0.0, &solver.u, &solver.v, &solver.s);
    for _ in 0..n_steps {
        solver.step()?;
        rec.push(solver.time(), &solver.u, &solver.v, &solver.s);
    }
    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// first-order reconstruction
// ---------------------------------------------------------------------------

/// First-order reconstruction of the microscale field from a macroscopic
/// displacement history: U_rec(X, T) = Ū + h·P1({X/h}, T)·∂XŪ, with the
/// fractional part referenced to the lattice origin. P1 is taken from the
/// physical-time corrector family at the nearest sampled phase.
pub fn reconstruct_microfield(
    hist: &FieldHistory,
    family: &CorrectorFamily,
    h: f64,
) -> Result<Vec<Vec<f64>>> {
    if hist.frames.is_empty() || hist.frames[0].u.is_empty() {
        return Err(Error::InvalidConfig(
            "reconstruction needs recorded displacement frames".into(),
        ));
    }
    let dx = hist.dx();
    let nn = hist.xs.len() - 1;
    let mut out = Vec::with_capacity(hist.frames.len());
    for frame in &hist.frames {
        // nearest corrector sample in modulation phase
        let idx = match family.period {
            None => 0,
            Some(tau) => {
                let phase = (frame.time / tau).rem_euclid(1.0);
                ((phase * family.times.len() as f64).round() as usize) % family.times.len()
            }
        };
        let p1 = &family.sets[idx].p1.p;
        let mut rec = frame.u.clone();
        for m in 1..nn {
            let du = (frame.u[m + 1] - frame.u[m - 1]) / (2.0 * dx);
            let y = (hist.xs[m] / h).rem_euclid(1.0);
            rec[m] += h * p1.eval(y) * du;
        }
        out.push(rec);
    }
    Ok(out)
}
