//! Problem definition: materials, time-modulated interfaces, source pulse,
//! grid, and the non-dimensionalisation that feeds the cell solver.

use serde::{Deserialize, Serialize};

use crate::piecewise::PiecewisePoly;
use crate::{Error, Result};

/// Sinusoidal modulation law `mean * (1 + eps * sin(omega * T + phase))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Modulation {
    pub mean: f64,
    #[serde(default)]
    pub eps: f64,
    /// Angular modulation frequency, rad/s (rad per unit time of the frame
    /// the law lives in).
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Modulation {
    pub fn constant(mean: f64) -> Self {
        Modulation { mean, eps: 0.0, omega: 0.0, phase: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.mean * (1.0 + self.eps * (self.omega * t + self.phase).sin())
    }

    pub fn deriv(&self, t: f64) -> f64 {
        self.mean * self.eps * self.omega * (self.omega * t + self.phase).cos()
    }

    pub fn dderiv(&self, t: f64) -> f64 {
        -self.mean * self.eps * self.omega * self.omega * (self.omega * t + self.phase).sin()
    }

    pub fn is_static(&self) -> bool {
        self.eps == 0.0 || self.omega == 0.0 || self.mean == 0.0
    }

    /// Same law expressed in a rescaled time t' = s * t.
    pub fn rescale_time(&self, s: f64) -> Modulation {
        Modulation { omega: self.omega / s, ..*self }
    }

    pub fn scale_mean(&self, f: f64) -> Modulation {
        Modulation { mean: self.mean * f, ..*self }
    }
}

/// 1-periodic piecewise-constant material profile of the fast variable y.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl Profile {
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Constant(_) => vec![0.0],
            Profile::Piecewise { breakpoints, .. } => breakpoints.clone(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Profile::Constant(v) => vec![*v],
            Profile::Piecewise { values, .. } => values.clone(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.values().windows(2).all(|w| w[0] == w[1])
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.to_piecewise().eval(y)
    }

    pub fn to_piecewise(&self) -> PiecewisePoly {
        PiecewisePoly::piecewise_constant(self.breakpoints(), self.values())
    }

    /// ⟨p⟩ over one cell.
    pub fn mean(&self) -> f64 {
        self.to_piecewise().mean()
    }

    /// ⟨1/p⟩ over one cell.
    pub fn mean_recip(&self) -> f64 {
        self.to_piecewise().recip_pc().mean()
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bp = self.breakpoints();
        let vals = self.values();
        if bp.len() != vals.len() || bp.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "{name}: breakpoints and values must be non-empty and equal length"
            )));
        }
        if bp[0] != 0.0 || !bp.windows(2).all(|w| w[0] < w[1]) || *bp.last().unwrap() >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "{name}: breakpoints must be sorted, start at 0 and lie in [0,1)"
            )));
        }
        if vals.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidConfig(format!("{name}: values must be positive")));
        }
        Ok(())
    }
}

/// Bulk elastic medium: 1-periodic mass density and Young's modulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BulkMedium {
    /// kg/m³
    pub rho: Profile,
    /// Pa
    pub e: Profile,
}

impl BulkMedium {
    pub fn homogeneous(rho: f64, e: f64) -> Self {
        BulkMedium { rho: Profile::Constant(rho), e: Profile::Constant(e) }
    }

    pub fn max_speed(&self) -> f64 {
        self.rho
            .values()
            .iter()
            .zip(self.e.values().iter())
            .map(|(&r, &e)| (e / r).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        self.rho.validate("bulk.rho")?;
        self.e.validate("bulk.e")
    }
}

/// Instantaneous interface state returned by [`InterfaceSpec::eval`].
#[derive(Debug, Clone, Copy)]
pub struct InterfaceState {
    pub c: f64,
    pub m: f64,
    pub q_c: f64,
    pub q_m: f64,
    pub c_dot: f64,
    pub m_dot: f64,
}

/// One imperfect spring-mass interface within the unit cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterfaceSpec {
    /// Dimensionless position in [0, 1).
    pub y_pos: f64,
    /// Compliance law, m/Pa.
    pub compliance: Modulation,
    /// Surface mass law, kg/m².
    #[serde(default = "zero_mod")]
    pub mass: Modulation,
    /// Compliance-type dissipation, m²·s/kg.
    #[serde(default = "zero_mod")]
    pub q_c: Modulation,
    /// Mass-type dissipation, kg/(m²·s).
    #[serde(default = "zero_mod")]
    pub q_m: Modulation,
}

fn zero_mod() -> Modulation {
    Modulation::constant(0.0)
}

impl InterfaceSpec {
    /// Instantaneous parameter values and the analytic time derivatives of
    /// the compliance and mass laws.
    pub fn eval(&self, t: f64) -> InterfaceState {
        InterfaceState {
            c: self.compliance.value(t),
            m: self.mass.value(t),
            q_c: self.q_c.value(t),
            q_m: self.q_m.value(t),
            c_dot: self.compliance.deriv(t),
            m_dot: self.mass.deriv(t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.y_pos) {
            return Err(Error::InvalidConfig("interface y_pos must lie in [0,1)".into()));
        }
        if self.compliance.mean <= 0.0 {
            return Err(Error::InvalidConfig("mean compliance must be positive".into()));
        }
        if self.compliance.eps.abs() >= 1.0 {
            return Err(Error::InvalidConfig(
                "|eps| of the compliance law must be < 1 to keep C(T) > 0".into(),
            ));
        }
        if self.mass.mean < 0.0 || self.mass.eps.abs() > 1.0 {
            return Err(Error::InvalidConfig(
                "mass law needs mean >= 0 and |eps| <= 1".into(),
            ));
        }
        for (name, q) in [("q_c", &self.q_c), ("q_m", &self.q_m)] {
            if q.mean < 0.0 || q.eps.abs() > 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} law needs mean >= 0 and |eps| <= 1"
                )));
            }
        }
        Ok(())
    }

    pub fn has_dissipation(&self) -> bool {
        self.q_c.mean > 0.0 || self.q_m.mean > 0.0
    }
}

/// Periodic lattice of interfaces with cell period h.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lattice {
    /// Cell period, m.
    pub h: f64,
    pub interfaces: Vec<InterfaceSpec>,
}

impl Lattice {
    pub fn validate(&self) -> Result<()> {
        if self.h <= 0.0 {
            return Err(Error::InvalidConfig("lattice period h must be positive".into()));
        }
        if self.interfaces.is_empty() {
            return Ok(());
        }
        if self.interfaces[0].y_pos != 0.0 {
            return Err(Error::InvalidConfig("first interface must sit at y = 0".into()));
        }
        if !self
            .interfaces
            .windows(2)
            .all(|w| w[0].y_pos < w[1].y_pos)
        {
            return Err(Error::InvalidConfig("interface positions must be strictly increasing".into()));
        }
        for iface in &self.interfaces {
            iface.validate()?;
        }
        Ok(())
    }
}

/// Source pulse of Eq.-type Σ aₘ sin(bₘ ω_c T) supported on (0, 1/f_c).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourcePulse {
    /// Central frequency, Hz.
    pub f_c: f64,
    /// Source position, m.
    pub x_s: f64,
    #[serde(default = "default_a")]
    pub a: [f64; 4],
    #[serde(default = "default_b")]
    pub b: [f64; 4],
}

/// Octave-stacked harmonics; the amplitudes make the odd derivatives up to
/// order five vanish at both ends of the support, giving a smooth pulse.
fn default_b() -> [f64; 4] {
    [1.0, 2.0, 4.0, 8.0]
}

fn default_a() -> [f64; 4] {
    // Solution of a1 = 1, Σ aₘ bₘ = Σ aₘ bₘ³ = Σ aₘ bₘ⁵ = 0 for b = (1,2,4,8).
    [1.0, -21.0 / 32.0, 21.0 / 256.0, -1.0 / 512.0]
}

impl SourcePulse {
    pub fn new(f_c: f64, x_s: f64) -> Self {
        SourcePulse { f_c, x_s, a: default_a(), b: default_b() }
    }

    /// S(T).
    pub fn signal(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 / self.f_c {
            return 0.0;
        }
        let wc = 2.0 * std::f64::consts::PI * self.f_c;
        self.a
            .iter()
            .zip(self.b.iter())
            .map(|(&a, &b)| a * (b * wc * t).sin())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.f_c <= 0.0 {
            return Err(Error::InvalidConfig("source f_c must be positive".into()));
        }
        Ok(())
    }
}

/// Spatial grid and run horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    /// Domain length, m.
    pub length: f64,
    /// Number of grid cells; nodes are 0..=n_x.
    pub n_x: usize,
    #[serde(default = "default_cfl")]
    pub cfl_fraction: f64,
    /// Run horizon, s.
    pub t_end: f64,
}

fn default_cfl() -> f64 {
    0.95
}

impl GridSpec {
    pub fn dx(&self) -> f64 {
        self.length / self.n_x as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 3 {
            return Err(Error::InvalidConfig("grid needs at least 3 nodes".into()));
        }
        if self.length <= 0.0 || self.t_end <= 0.0 {
            return Err(Error::InvalidConfig("grid length and t_end must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.cfl_fraction) || self.cfl_fraction == 0.0 {
            return Err(Error::InvalidConfig("cfl_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Full problem definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub bulk: BulkMedium,
    pub lattice: Lattice,
    pub source: SourcePulse,
    pub grid: GridSpec,
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        self.bulk.validate()?;
        self.lattice.validate()?;
        self.source.validate()?;
        self.grid.validate()
    }

    /// Reference sound speed of the lattice (Cstar relation):
    /// 1/c*² = (⟨ρ⟩ + Σ M̄/h)(⟨1/E⟩ + Σ C̄/h).
    pub fn reference_speed(&self) -> Result<f64> {
        let h = self.lattice.h;
        let rho_eff = self.bulk.rho.mean()
            + self.lattice.interfaces.iter().map(|i| i.mass.mean).sum::<f64>() / h;
        let inv_e_eff = self.bulk.e.mean_recip()
            + self.lattice.interfaces.iter().map(|i| i.compliance.mean).sum::<f64>() / h;
        if rho_eff <= 0.0 || inv_e_eff <= 0.0 {
            return Err(Error::InvalidConfig("non-positive effective means".into()));
        }
        Ok(1.0 / (rho_eff * inv_e_eff).sqrt())
    }

    /// The common angular modulation frequency Ω_m, if any channel is
    /// modulated; errors when interfaces disagree.
    pub fn modulation_omega(&self) -> Result<Option<f64>> {
        let mut omega: Option<f64> = None;
        for iface in &self.lattice.interfaces {
            for law in [&iface.compliance, &iface.mass, &iface.q_c, &iface.q_m] {
                if law.is_static() {
                    continue;
                }
                match omega {
                    None => omega = Some(law.omega),
                    Some(w) if (w - law.omega).abs() <= 1e-12 * w.abs() => {}
                    Some(_) => {
                        return Err(Error::InvalidConfig(
                            "interfaces use different modulation frequencies; pick one explicitly"
                                .into(),
                        ))
                    }
                }
            }
        }
        Ok(omega)
    }

    /// Modulation period τ = 2π/Ω_m, if modulated.
    pub fn modulation_period(&self) -> Result<Option<f64>> {
        Ok(self
            .modulation_omega()?
            .map(|w| 2.0 * std::f64::consts::PI / w))
    }

    /// η_n = (ω_c + n Ω_m) h / c*.
    pub fn eta_n(&self, n: i32) -> Result<f64> {
        let omega_m = if n == 0 { 0.0 } else {
            self.modulation_omega()?.ok_or_else(|| {
                Error::InvalidConfig("eta_n with n != 0 requires a modulated configuration".into())
            })?
        };
        let omega_c = 2.0 * std::f64::consts::PI * self.source.f_c;
        Ok((omega_c + n as f64 * omega_m) / self.reference_speed()? * self.lattice.h)
    }

    /// Reference frame per the default scaling choice: bulk values when the
    /// bulk is homogeneous, arithmetic means otherwise; k* from the source
    /// frequency and the lattice reference speed.
    pub fn scaling_frame(&self) -> Result<ScalingFrame> {
        let e_vals = self.bulk.e.values();
        let r_vals = self.bulk.rho.values();
        let e_star = e_vals.iter().sum::<f64>() / e_vals.len() as f64;
        let rho_star = r_vals.iter().sum::<f64>() / r_vals.len() as f64;
        let c_ref = self.reference_speed()?;
        let k_star = 2.0 * std::f64::consts::PI * self.source.f_c / c_ref;
        Ok(ScalingFrame {
            e_star,
            rho_star,
            c_star: (e_star / rho_star).sqrt(),
            k_star,
            eta: k_star * self.lattice.h,
        })
    }

    /// Non-dimensionalised problem in the slow time t = k* c* T.
    pub fn nondimensionalise(&self) -> Result<NondimProblem> {
        let frame = self.scaling_frame()?;
        NondimProblem::build(self, frame)
    }
}

/// Reference scaling (E*, ρ*, c*, k*, η).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingFrame {
    pub e_star: f64,
    pub rho_star: f64,
    pub c_star: f64,
    pub k_star: f64,
    pub eta: f64,
}

impl ScalingFrame {
    /// Slow-time scale factor: t = time_scale * T.
    pub fn time_scale(&self) -> f64 {
        self.k_star * self.c_star
    }
}

/// Dimensionless interface laws in the slow time variable.
#[derive(Debug, Clone)]
pub struct NondimInterface {
    pub y_pos: f64,
    /// 𝓬_ℓ(t) = C_ℓ(T) E*/h
    pub c: Modulation,
    /// 𝓶_ℓ(t) = M_ℓ(T)/(ρ* h)
    pub m: Modulation,
    /// 𝓺_{c,ℓ} = √(E* ρ*) Q_{C,ℓ} / η
    pub q_c: Modulation,
    /// 𝓺_{m,ℓ} = Q_{M,ℓ} / (√(E* ρ*) η)
    pub q_m: Modulation,
}

/// Non-dimensionalised problem data (α, β and the interface laws).
#[derive(Debug, Clone)]
pub struct NondimProblem {
    pub alpha: PiecewisePoly,
    pub beta: PiecewisePoly,
    pub interfaces: Vec<NondimInterface>,
    pub frame: ScalingFrame,
}

impl NondimProblem {
    fn build(config: &ProblemConfig, frame: ScalingFrame) -> Result<Self> {
        if frame.e_star <= 0.0 || frame.rho_star <= 0.0 || config.lattice.h <= 0.0 {
            return Err(Error::InvalidConfig("reference values and h must be positive".into()));
        }
        let ts = frame.time_scale();
        let h = config.lattice.h;
        let z_star = (frame.e_star * frame.rho_star).sqrt();
        let interfaces = config
            .lattice
            .interfaces
            .iter()
            .map(|i| NondimInterface {
                y_pos: i.y_pos,
                c: i.compliance.scale_mean(frame.e_star / h).rescale_time(ts),
                m: i.mass.scale_mean(1.0 / (frame.rho_star * h)).rescale_time(ts),
                q_c: i.q_c.scale_mean(z_star / frame.eta).rescale_time(ts),
                q_m: i.q_m.scale_mean(1.0 / (z_star * frame.eta)).rescale_time(ts),
            })
            .collect();
        Ok(NondimProblem {
            alpha: config.bulk.rho.to_piecewise().scale(1.0 / frame.rho_star),
            beta: config.bulk.e.to_piecewise().scale(1.0 / frame.e_star),
            interfaces,
            frame,
        })
    }

    /// Recovers the dimensional interface laws; inverse of
    /// [`ProblemConfig::nondimensionalise`] on the interface data.
    pub fn dimensional_interfaces(&self, h: f64) -> Vec<InterfaceSpec> {
        let ts = self.frame.time_scale();
        let z_star = (self.frame.e_star * self.frame.rho_star).sqrt();
        self.interfaces
            .iter()
            .map(|i| InterfaceSpec {
                y_pos: i.y_pos,
                compliance: i.c.scale_mean(h / self.frame.e_star).rescale_time(1.0 / ts),
                mass: i.m.scale_mean(self.frame.rho_star * h).rescale_time(1.0 / ts),
                q_c: i.q_c.scale_mean(self.frame.eta / z_star).rescale_time(1.0 / ts),
                q_m: i.q_m.scale_mean(z_star * self.frame.eta).rescale_time(1.0 / ts),
            })
            .collect()
    }
}

/// Impedance-matching surface mass M̄ = (ρc)² C̄.
pub fn impedance_matched_mass(rho: f64, c: f64, mean_compliance: f64) -> f64 {
    (rho * c).powi(2) * mean_compliance
}
